"""Scenario runner: ``chanforge run scenario.json`` and ``chanforge demo NAME``.

A scenario is a JSON object with a ``command`` and its parameters. Running
it produces a report (JSON) and an aligned text table on stdout. Exit status
is 0 when every assertion passes, 1 when one fails and 2 when the scenario
cannot be parsed or validated.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import channels, control, krausmin, protocols
from .complexity import cj_fidelity, complexity, optimize_fidelity
from .matcore import DEFAULT_TOL, Tolerances, max_abs_diff, projector, random_unitary

log = logging.getLogger("chanforge")

COMMANDS = ("complexity", "qt", "bitflip", "unitary-shift", "qecc-demo", "kraus-min", "fidelity-opt", "theorem1")

REQUIRED = {
    "complexity": (("family", "channel"),),
    "qt": (),
    "bitflip": ("mu", "p"),
    "unitary-shift": (("U_eps", "channel"),),
    "qecc-demo": (("mu", "p_grid"),),
    "kraus-min": (("R", "kraus"),),
    "fidelity-opt": ("channel", "parametrization"),
    "theorem1": ("N", "trials"),
}


class ScenarioError(ValueError):
    """Scenario cannot be parsed or is missing required fields."""


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    return x


class _Report:
    def __init__(self, scenario: dict, tol: Tolerances, seed: int):
        self.scenario = scenario
        self.tol = tol
        self.seed = seed
        self.results: dict = {}
        self.assertions: list = []
        self.table = {"columns": [], "rows": []}

    def result(self, name, value, tol=None):
        entry = {"value": _num(value)}
        if tol is not None:
            entry["tol"] = float(tol)
        self.results[name] = entry

    def check(self, name, value, expected, tol):
        value, expected = _num(value), _num(expected)
        if isinstance(expected, (bool, str)) or isinstance(value, (bool, str)):
            ok = value == expected
        else:
            ok = bool(np.all(np.abs(np.asarray(value, dtype=float) - np.asarray(expected, dtype=float)) <= tol))
        self.assertions.append(
            {"name": name, "value": value, "expected": expected, "tol": float(tol), "passed": bool(ok)}
        )

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "command": self.scenario["command"],
            "seed": self.seed,
            "tolerances": self.tol.as_dict(),
            "results": self.results,
            "table": self.table,
            "assertions": self.assertions,
            "passed": all(a["passed"] for a in self.assertions),
        }


# commands ------------------------------------------------------------------


def _channel(desc):
    return channels.channel_from_json(desc)


def _cmd_complexity(sc, rep: _Report):
    tol = rep.tol
    descs = sc["family"] if "family" in sc else [sc["channel"]]
    fam = channels.family_from_json(descs)
    rep.table["columns"] = ["name", "chi"]
    for d, ch in zip(descs, fam):
        rep.table["rows"].append([channels.describe(d), complexity(ch, tol)])
    chi = complexity(fam, tol)
    rep.table["rows"].append(["family", chi])
    rep.result("complexity", chi, tol.eps_rank)
    rep.check("0 <= chi <= N^2", 0 <= chi <= fam.dim**2, True, 0)
    if "resources" in sc:
        res = control.resources_from_json(sc["resources"], fam.dim, tol)
        after = [control.modified_channel(ch, res) for ch in fam]
        chi_after = complexity(after, tol)
        rep.table["columns"].append("chi_after")
        for row, ch in zip(rep.table["rows"], after):
            row.append(complexity(ch, tol))
        rep.table["rows"][-1].append(chi_after)
        rep.result("complexity_after", chi_after, tol.eps_rank)
        rep.result("trace_character", control.trace_character(control.lambda_map(res), tol).kind)


def _cmd_qt(sc, rep: _Report):
    tol = rep.tol
    if "mu_grid" in sc:
        rep.table["columns"] = ["mu", "p_mu", "fidelity"]
        for mu in sc["mu_grid"]:
            ch = protocols.qt_channel([mu, np.sqrt(1 - mu * mu)])
            f = cj_fidelity(channels.choi_of(ch))
            p = protocols.p_mu(mu)
            rep.table["rows"].append([float(mu), p, f])
            rep.check(f"fidelity(mu={mu}) == 1 - p_mu", f, 1 - p, 1e-12)
        return
    N = int(sc.get("N", 2))
    schmidt = sc.get("schmidt")
    res = protocols.qt_resources(N, schmidt, tol=tol)
    mu = res.schmidt_coefficients
    rng = np.random.default_rng(rep.seed)
    ch = _channel(sc["channel"]) if "channel" in sc else channels.random_channel(N, N * N, rng)
    after = control.modified_channel(ch, res)
    closed = protocols.qt_channel(mu)
    dev = max_abs_diff(channels.choi_matrix(after.kraus), channels.choi_matrix(closed.kraus))
    chi = complexity(after, tol)
    kind = control.trace_character(control.lambda_map(res), tol).kind
    rep.table["columns"] = ["quantity", "value"]
    rep.table["rows"] = [
        ["chi_before", complexity(ch, tol)],
        ["chi_after", chi],
        ["cj_fidelity", cj_fidelity(channels.choi_of(after))],
        ["deviation_from_closed_form", dev],
        ["trace_character", kind],
    ]
    rep.result("complexity_before", complexity(ch, tol), tol.eps_rank)
    rep.result("complexity_after", chi, tol.eps_rank)
    rep.result("cj_fidelity", cj_fidelity(channels.choi_of(after)), tol.eps_eq)
    rep.result("deviation_from_closed_form", dev, 1e-10)
    rep.result("trace_character", kind)
    rep.check("end-to-end equals closed form", dev, 0.0, 1e-10)
    rep.check("chi_after <= N", chi <= N, True, 0)
    rep.check("lambda trace preserving", kind, "preserving", 0)
    if np.allclose(mu, 1 / np.sqrt(N), atol=1e-12):
        rep.check("uniform schmidt gives identity (chi 0)", chi, 0, 0)


def _cmd_bitflip(sc, rep: _Report):
    tol = rep.tol
    mu, p = float(sc["mu"]), float(sc["p"])
    out = protocols.bitflip_correction(mu, p, tol)
    s = out.success_prob
    fid = cj_fidelity(out.choi_after) / s if s > 0 else 0.0
    dev = max_abs_diff(out.choi_after.matrix / s, projector(channels.max_entangled(2))) if s > 0 else 0.0
    rep.table["columns"] = ["mu", "p", "success_prob", "2mu^2", "post_fidelity", "chi_before", "chi_after"]
    rep.table["rows"] = [[mu, p, s, 2 * mu * mu, fid, out.complexity_before, out.complexity_after]]
    rep.result("success_prob", s, 1e-12)
    rep.result("post_success_fidelity", fid, 1e-10)
    rep.result("complexity_before", out.complexity_before, tol.eps_rank)
    rep.result("complexity_after", out.complexity_after, tol.eps_rank)
    rep.check("success_prob == 2 mu^2", s, 2 * mu * mu, 1e-12)
    if s > 0:
        rep.check("post-success Choi == Psi0", dev, 0.0, 1e-10)


def _cmd_unitary_shift(sc, rep: _Report):
    tol = rep.tol
    if "U_eps" in sc:
        U = channels.matrix_from_json(sc["U_eps"])
    else:
        ch = _channel(sc["channel"])
        if len(ch) != 1:
            raise ScenarioError("unitary-shift needs a single-Kraus channel")
        U = ch.kraus[0]
    U1 = channels.matrix_from_json(sc["U1"]) if "U1" in sc else None
    out = protocols.unitary_shift_correction(U, U1, tol)
    fid = cj_fidelity(out.choi_after)
    rep.table["columns"] = ["chi_before", "chi_after", "success_prob", "cj_fidelity"]
    rep.table["rows"] = [[out.complexity_before, out.complexity_after, out.success_prob, fid]]
    rep.result("complexity_before", out.complexity_before, tol.eps_rank)
    rep.result("complexity_after", out.complexity_after, tol.eps_rank)
    rep.result("success_prob", out.success_prob, tol.eps_tp)
    rep.result("cj_fidelity", fid, tol.eps_eq)
    rep.check("corrected Choi is Psi0", fid, 1.0, tol.eps_eq)


def _cmd_qecc(sc, rep: _Report):
    rep.table["columns"] = ["mu", "p", "p_L_simulated", "p_L_enumerated", "F_coded", "F_uncoded", "coding_helps"]
    if "p_grid" in sc:
        reports = [protocols.phase_code_report(channels.phase_flip(p), float(p)) for p in sc["p_grid"]]
    else:
        reports = [protocols.qecc_phase_flip_demo(float(sc["mu"]), sc.get("input_state"))]
    for r in reports:
        rep.table["rows"].append(
            [r.mu, r.p, r.logical_error_simulated, r.logical_error_enumerated,
             r.entanglement_fidelity_coded, r.entanglement_fidelity_uncoded, r.coding_helps]
        )
        rep.check(f"p={r.p:.6g}: enumeration == 3p^2-2p^3", r.logical_error_enumerated, r.logical_error_formula, 1e-12)
        rep.check(f"p={r.p:.6g}: simulation == enumeration", r.logical_error_simulated, r.logical_error_enumerated, 1e-10)
        if 0 < r.p:
            rep.check(f"p={r.p:.6g}: coding helps iff p < 1/2", r.coding_helps, r.p < 0.5, 0)
    if len(reports) == 1:
        r = reports[0]
        rep.result("p", r.p, 1e-12)
        rep.result("logical_error", r.logical_error_simulated, 1e-10)
        rep.result("fidelity_coded", r.entanglement_fidelity_coded, 1e-10)
        rep.result("fidelity_uncoded", r.entanglement_fidelity_uncoded, 1e-10)
        rep.result("state_fidelity_coded", r.state_fidelity_coded, 1e-10)
        rep.result("state_fidelity_uncoded", r.state_fidelity_uncoded, 1e-10)


def _cmd_kraus_min(sc, rep: _Report):
    tol = rep.tol
    rep.table["columns"] = ["quantity", "value"]
    if "kraus" in sc:
        ks = krausmin.KrausSet(np.array([channels.matrix_from_json(m) for m in sc["kraus"]]))
        red = krausmin.reduce(ks, tol)
        same = max_abs_diff(channels.choi_matrix(ks.ops), channels.choi_matrix(red.ops))
        rep.table["rows"] = [["input_count", len(ks)], ["minimal_count", krausmin.minimal_count(ks, tol)], ["reduced_count", len(red)]]
        rep.result("reduced_count", len(red), tol.eps_rank)
        rep.check("reduced count == minimal count", len(red), krausmin.minimal_count(ks, tol), 0)
        rep.check("map unchanged by reduction", same, 0.0, tol.eps_eq)
        return
    N, R = int(sc.get("N", 2)), int(sc["R"])
    bound = krausmin.upper_bound(N, R)
    rng = np.random.default_rng(rep.seed)
    extra = int(sc.get("extra", N * N * (N * N - R) + 3))
    basis = random_unitary(N * N, rng)[:, :R]
    ks = krausmin.constrained_map(N, basis, extra, rng)
    red = krausmin.reduce(ks, tol)
    rep.table["rows"] = [["N", N], ["R", R], ["input_count", len(ks)], ["reduced_count", len(red)], ["upper_bound", bound]]
    rep.result("upper_bound", bound, 0)
    rep.result("reduced_count", len(red), tol.eps_rank)
    rep.check("R <= reduced count", len(red) >= R, True, 0)
    rep.check("reduced count <= upper bound", len(red) <= bound, True, 0)


def _receiver_rotation(x):
    from scipy.linalg import expm

    from .matcore import SIGMA_X, SIGMA_Y, SIGMA_Z

    u = expm(-0.5j * (x[0] * SIGMA_X + x[1] * SIGMA_Y + x[2] * SIGMA_Z))
    return control.local_unitary_resources(np.eye(2), u)


def _qt_schmidt(x):
    return protocols.qt_resources(2, [abs(np.cos(x[0])), abs(np.sin(x[0]))])


PARAMETRIZATIONS = {"receiver-rotation": (_receiver_rotation, 3), "qt-schmidt": (_qt_schmidt, 1)}


def _cmd_fidelity_opt(sc, rep: _Report):
    name = sc["parametrization"]
    if name not in PARAMETRIZATIONS:
        raise ScenarioError(f"unknown parametrization {name!r}; choose from {sorted(PARAMETRIZATIONS)}")
    fn, dim = PARAMETRIZATIONS[name]
    x0 = sc.get("x0", [0.1] * dim)
    if len(x0) != dim:
        raise ScenarioError(f"{name} takes {dim} parameters")
    ch = _channel(sc["channel"])
    budget = int(sc.get("budget", 200))
    best = optimize_fidelity(ch, fn, x0, budget)
    rep.table["columns"] = ["parametrization", "budget", "evaluations", "best_fidelity", "best_params"]
    rep.table["rows"] = [[name, budget, best.evaluations, best.fidelity, " ".join(f"{v:.12g}" for v in best.params)]]
    rep.result("best_fidelity", best.fidelity, 1e-6)
    rep.result("best_params", best.params.tolist())
    rep.result("evaluations", best.evaluations)


def _cmd_theorem1(sc, rep: _Report):
    N, trials = int(sc["N"]), int(sc["trials"])
    w = protocols.theorem1_witness(N, trials, rep.seed, rep.tol)
    rep.table["columns"] = ["trial", "chi_before", "chi_after"]
    rep.table["rows"] = [[i, b, a] for i, (b, a) in enumerate(zip(w.complexities_before, w.complexities_after))]
    rep.result("max_choi_deviation", w.max_choi_deviation, 1e-10)
    rep.result("trace_character", w.trace_character)
    rep.check("all channels have maximal complexity", all(c == N * N for c in w.complexities_before), True, 0)
    rep.check("all mapped to chi 0", all(c == 0 for c in w.complexities_after), True, 0)
    rep.check("Choi == Psi0", w.max_choi_deviation, 0.0, 1e-10)
    rep.check("lambda trace preserving", w.trace_character, "preserving", 0)


HANDLERS = {
    "complexity": _cmd_complexity,
    "qt": _cmd_qt,
    "bitflip": _cmd_bitflip,
    "unitary-shift": _cmd_unitary_shift,
    "qecc-demo": _cmd_qecc,
    "kraus-min": _cmd_kraus_min,
    "fidelity-opt": _cmd_fidelity_opt,
    "theorem1": _cmd_theorem1,
}


# scenario handling -----------------------------------------------------------


def validate(scenario) -> dict:
    if not isinstance(scenario, dict):
        raise ScenarioError("scenario must be a JSON object")
    cmd = scenario.get("command")
    if cmd not in HANDLERS:
        raise ScenarioError(f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
    for req in REQUIRED[cmd]:
        options = req if isinstance(req, tuple) else (req,)
        if not any(o in scenario for o in options):
            raise ScenarioError(f"command {cmd!r} needs field {' or '.join(repr(o) for o in options)}")
    expect = scenario.get("expect", {})
    if not isinstance(expect, dict):
        raise ScenarioError("'expect' must be an object mapping result names to values")
    return scenario


def _apply_expectations(scenario: dict, rep: _Report):
    for key, want in scenario.get("expect", {}).items():
        if key not in rep.results:
            rep.assertions.append({"name": f"expect {key}", "value": None, "expected": _num(want), "tol": 0.0, "passed": False})
            continue
        if isinstance(want, dict):
            expected, tol = want["value"], want.get("tol", rep.results[key].get("tol", 0.0))
        else:
            expected, tol = want, rep.results[key].get("tol", 0.0)
        rep.check(f"expect {key}", rep.results[key]["value"], expected, tol)


def run_scenario(scenario: dict, tol: Tolerances | None = None, seed: int | None = None) -> dict:
    """Execute a validated scenario dict and return the report dict."""
    scenario = validate(copy.deepcopy(scenario))
    overrides = scenario.get("tolerances", {})
    base = tol or DEFAULT_TOL
    tol = base.replace(**{k: overrides.get(k) for k in ("eps_rank", "eps_tp", "eps_eq", "eps_herm") if k in overrides})
    seed = int(seed if seed is not None else scenario.get("seed", 0))
    scenario.setdefault("name", scenario["command"])
    rep = _Report(scenario, tol, seed)
    try:
        HANDLERS[scenario["command"]](scenario, rep)
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"invalid scenario field: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc)) from exc
    _apply_expectations(scenario, rep)
    return rep.to_dict()


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def emit_table(report: dict) -> str:
    """Render the report table (or its results when no table is present) as aligned text."""
    table = report.get("table") or {}
    columns = list(table.get("columns") or [])
    rows = [list(r) for r in table.get("rows") or []]
    if not columns:
        columns = ["name", "value"]
        rows = [[k, v.get("value")] for k, v in (report.get("results") or {}).items()]
    cells = [[_fmt(c) for c in columns]] + [[_fmt(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells if i < len(r)) for i in range(len(columns))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def run(scenario_path, output_path=None, tol: Tolerances | None = None, seed: int | None = None, stream=None) -> dict:
    """Run a scenario file and return its report; the JSON goes to ``output_path`` when given."""
    stream = stream or sys.stdout
    try:
        scenario = json.loads(Path(scenario_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {scenario_path}: {exc}") from exc
    return _run_loaded(scenario, output_path, tol, seed, stream)


def _run_loaded(scenario, output_path, tol, seed, stream) -> dict:
    report = run_scenario(scenario, tol, seed)
    print(f"# {report['scenario']['name']} (seed {report['seed']})", file=stream)
    print(emit_table(report), file=stream)
    for a in report["assertions"]:
        print(f"[{'PASS' if a['passed'] else 'FAIL'}] {a['name']}", file=stream)
    if output_path:
        Path(output_path).write_text(dumps(report))
    return report


DEMOS = {
    "complexity-table": {
        "command": "complexity",
        "family": [{"kind": "bit_flip", "p": 0.3}, {"kind": "phase_flip", "p": 0.2}],
        "expect": {"complexity": 3},
    },
    "qt-identity": {"command": "qt", "N": 2, "schmidt": [0.7071067811865476, 0.7071067811865476], "expect": {"complexity_after": 0}},
    "qt-partial": {"command": "qt", "N": 3, "schmidt": [0.8, 0.48, 0.36]},
    "qt-sweep": {"command": "qt", "mu_grid": [0.0, 0.2, 0.4, 0.6, 0.7071067811865476]},
    "bitflip": {"command": "bitflip", "mu": 0.5, "p": 0.3, "expect": {"success_prob": 0.5, "post_success_fidelity": 1.0}},
    "unitary-shift": {"command": "unitary-shift", "channel": {"kind": "unitary", "matrices": [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]]}},
    "qecc": {"command": "qecc-demo", "p_grid": [0.05, 0.1, 0.25, 0.5, 0.75, 1.0]},
    "kraus-bound": {"command": "kraus-min", "N": 2, "R": 2, "expect": {"upper_bound": 10}},
    "theorem1": {"command": "theorem1", "N": 2, "trials": 20},
    "fidelity-opt": {
        "command": "fidelity-opt",
        "channel": {"kind": "phase_flip", "p": 0.0},
        "parametrization": "qt-schmidt",
        "x0": [0.2],
        "budget": 80,
        "expect": {"best_fidelity": {"value": 1.0, "tol": 1e-6}},
    },
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="chanforge", description="Control of noisy quantum channels: scenario runner")
    sub = parser.add_subparsers(dest="action", required=True)
    p_run = sub.add_parser("run", help="run a JSON scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", help="write the JSON report here")
    p_run.add_argument("--eps-rank", type=float, help="relative eigenvalue cutoff for ranks")
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_demo = sub.add_parser("demo", help="run a built-in scenario")
    p_demo.add_argument("name", nargs="?", choices=sorted(DEMOS) + ["all"])
    p_demo.add_argument("--out", help="write the JSON report here (single demo only)")
    p_demo.add_argument("--list", action="store_true", help="list built-in scenarios")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")

    try:
        if args.action == "run":
            tol = DEFAULT_TOL.replace(eps_rank=args.eps_rank)
            report = run(args.scenario, args.out, tol, args.seed)
            return 0 if report["passed"] else 1
        if args.list or args.name is None:
            print("\n".join(sorted(DEMOS)))
            return 0
        names = sorted(DEMOS) if args.name == "all" else [args.name]
        ok = True
        for name in names:
            scenario = dict(DEMOS[name], name=name)
            report = _run_loaded(scenario, args.out if len(names) == 1 else None, None, None, sys.stdout)
            ok &= report["passed"]
            print()
        return 0 if ok else 1
    except ScenarioError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
