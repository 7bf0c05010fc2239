"""Choi-state toolkit for noisy quantum channels under local control."""

from .channels import Channel, ChannelFamily, ChoiState, choi_of, kraus_of, standard_channel
from .complexity import cj_fidelity, complexity, optimize_fidelity
from .control import ControlResources, lambda_map, modified_channel, trace_character
from .matcore import DEFAULT_TOL, Tolerances

__all__ = [
    "Channel",
    "ChannelFamily",
    "ChoiState",
    "ControlResources",
    "DEFAULT_TOL",
    "Tolerances",
    "choi_of",
    "cj_fidelity",
    "complexity",
    "kraus_of",
    "lambda_map",
    "modified_channel",
    "optimize_fidelity",
    "standard_channel",
    "trace_character",
]

__version__ = "0.1.0"
