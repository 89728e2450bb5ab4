"""Reproducible experiment runner.

Subcommands: conductance, index-map, shift, helton-howe, landau, verify.
Each run validates its parameters, computes, writes an optional JSON
report (and CSV table where applicable), prints a short summary, and
exits with 0 on success, 2 on a validation error, 3 on a stabilization
failure, and 4 on an acceptance failure.  Everything is deterministic:
identical configuration produces a byte-identical JSON payload apart
from the timing field.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import List, Optional

from . import __version__, acceptance, fredholm, traces
from .symbols import LandauLevelError, LandauParameters, SwitchProfile, level_count
from .traces import Arena, PairSpec, parse_polynomial

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_STABILIZATION = 3
EXIT_ACCEPTANCE = 4


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def read_config(path: str) -> dict:
    """Flat key = value lines; values are JSON fragments when they parse."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"bad config line: {line!r}")
            key, _, raw = line.partition("=")
            key = key.strip().replace("-", "_")
            raw = raw.strip()
            try:
                out[key] = json.loads(raw)
            except json.JSONDecodeError:
                out[key] = raw
    return out


def _merge_config(args: argparse.Namespace, parser_defaults: dict) -> dict:
    cfg = dict(parser_defaults)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for key, val in vars(args).items():
        if key in ("config", "func", "command"):
            continue
        if val is not None:
            cfg[key] = val
    return cfg


def _parse_schedule(val) -> tuple:
    if isinstance(val, (list, tuple)):
        sched = tuple(int(v) for v in val)
    else:
        sched = tuple(int(v) for v in str(val).split(",") if v)
    if not sched or list(sched) != sorted(set(sched)) or sched[0] < 1:
        raise ValidationError(f"bad N schedule {val!r}")
    return sched


def _profile(cfg) -> SwitchProfile:
    kind = cfg.get("profile", "step")
    a = float(cfg.get("a", 0.0))
    try:
        return SwitchProfile(kind, a)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _report(cfg: dict, command: str, results: dict, verdicts: List[dict],
            started: float) -> dict:
    return {
        "command": command,
        "config": {k: v for k, v in sorted(cfg.items())},
        "version": __version__,
        "results": results,
        "verdicts": verdicts,
        "passed": all(v["passed"] for v in verdicts),
        "timing_s": round(time.time() - started, 3),
    }


def _emit(report: dict, cfg: dict) -> None:
    payload = json.dumps(report, indent=1, sort_keys=True, default=str)
    out = cfg.get("out_json")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    for v in report["verdicts"]:
        print(f"{'PASS' if v['passed'] else 'FAIL'} {v['name']}: {v['detail']}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_conductance(cfg: dict) -> int:
    started = time.time()
    ell = int(cfg.get("stack", 0))
    if not 0 <= ell <= 2:
        raise ValidationError("stack level count must be 0, 1 or 2")
    theta = float(cfg.get("theta", math.pi / 2))
    schedule = _parse_schedule(cfg.get("n_schedule", "32,64,96,128"))
    buffer = cfg.get("buffer")
    buffer = int(buffer) if buffer is not None else None
    tol = float(cfg.get("tolerance", traces.DEFAULT_TOLERANCE))
    profile = _profile(cfg)
    arena = Arena.stacked(ell) if ell > 0 else Arena.lowest()
    try:
        pair = PairSpec.square(profile, None, theta, arena)
    except traces.ThetaRangeError as exc:
        raise ValidationError(str(exc)) from exc
    est = traces.commutator_trace(pair, schedule, buffer, tol)
    sigma = -1j * est.value
    target = -(ell + 1) / (2 * math.pi)
    rel = abs(sigma.real - target) / abs(target)
    verdicts = [
        {"name": "stabilized", "passed": bool(est.stabilized),
         "detail": f"gap {est.gap:.2e} vs tolerance {tol}"},
        {"name": "conductance-target", "passed": bool(rel <= (0.05 + 0.025 * ell)),
         "detail": f"sigma = {sigma.real:.6f}, target {target:.6f}, "
                   f"rel err {rel:.2e}"},
    ]
    results = {
        "trace": est.to_json_dict(),
        "trace_times_2pi": [2 * math.pi * est.value.real,
                            2 * math.pi * est.value.imag],
        "sigma_hall": sigma.real,
        "sigma_hall_target": target,
    }
    report = _report(cfg, "conductance", results, verdicts, started)
    _emit(report, cfg)
    if not est.stabilized:
        return EXIT_STABILIZATION
    return EXIT_OK if report["passed"] else EXIT_ACCEPTANCE


def cmd_index_map(cfg: dict) -> int:
    started = time.time()
    pair_name = cfg.get("pair", "square")
    grid = int(cfg.get("grid", 9))
    if grid < 1:
        raise ValidationError("grid resolution must be >= 1")
    band = float(cfg.get("band", 0.1))
    if pair_name == "square":
        pair = PairSpec.square(_profile(cfg), None,
                               float(cfg.get("theta", math.pi / 2)))
        region = fredholm.RegionSpec("square", grid, band)
        schedule = _parse_schedule(cfg.get("n_schedule", "96,128,160"))
        trace_tol = traces.DEFAULT_TOLERANCE
    elif pair_name == "disc":
        pair = PairSpec.disc()
        region = fredholm.RegionSpec("disc", grid, band)
        schedule = _parse_schedule(cfg.get("n_schedule", "144,176,208"))
        trace_tol = 5e-3
    else:
        raise ValidationError(f"unknown pair {pair_name!r}")
    est = traces.commutator_trace(pair, (32, 64, 96, 128), tolerance=trace_tol)
    rep = fredholm.principal_function_reconstruct(
        pair, region, schedule, trace_estimate=est)
    if cfg.get("out_csv"):
        rep.write_csv(cfg["out_csv"])
    total_cells = len(rep.cells) - rep.skipped_band
    frac_unstable = rep.unstable / max(total_cells, 1)
    target_gap = 0.05 * (1.0 if pair_name == "square" else math.pi)
    verdicts = [
        {"name": "map-matches-indicator", "passed": rep.mismatches == 0,
         "detail": f"{rep.mismatches} mismatches over {total_cells} cells"},
        {"name": "unstable-fraction", "passed": frac_unstable <= 0.10,
         "detail": f"{rep.unstable} unstable cells ({frac_unstable:.0%})"},
        {"name": "trace-crosscheck", "passed": rep.crosscheck_gap <= target_gap,
         "detail": f"2pi gap {rep.crosscheck_gap:.2e} vs {target_gap:.2e}"},
    ]
    report = _report(cfg, "index-map", rep.to_json_dict(), verdicts, started)
    _emit(report, cfg)
    if frac_unstable > 0.10:
        return EXIT_STABILIZATION
    return EXIT_OK if report["passed"] else EXIT_ACCEPTANCE


def cmd_shift(cfg: dict) -> int:
    started = time.time()
    kmax = int(cfg.get("kmax", 500))
    if kmax < 1:
        raise ValidationError("kmax must be >= 1")
    level = int(cfg.get("level", 0))
    rep = fredholm.weighted_shift_analysis(kmax, level)
    if cfg.get("out_csv"):
        with open(cfg["out_csv"], "w", encoding="utf-8") as fh:
            fh.write("k,a_k,ratio,partial_trace\n")
            for (k, a, ratio, partial) in rep.rows():
                fh.write(f"{k},{a!r},{ratio!r},{partial!r}\n")
    verdicts = [
        {"name": "strictly-increasing", "passed": rep.monotone,
         "detail": "a_{k+1} > a_k for all computed k"},
        {"name": "limit-one", "passed": rep.limit_gap <= max(1.5e-3, 2.0 / kmax),
         "detail": f"|a_kmax - 1| = {rep.limit_gap:.2e}"},
        {"name": "hyponormal", "passed": rep.hyponormal,
         "detail": "commutator diagonal positive"},
    ]
    if level >= 1:
        verdicts.append({"name": "level-index", "passed": rep.index_verdict == -1,
                         "detail": f"shift-structure index {rep.index_verdict}"})
    results = {
        "level": level,
        "kmax": kmax,
        "a_first": rep.weights[:10].tolist(),
        "a_last": rep.weights[-1],
        "ratio_identity_err_float": rep.ratios_identity_err,
        "ratio_identity_err_mp": rep.mp_ratio_err,
        "partial_trace_err": rep.partial_trace_err,
    }
    report = _report(cfg, "shift", results, verdicts, started)
    _emit(report, cfg)
    return EXIT_OK if report["passed"] else EXIT_ACCEPTANCE


def cmd_helton_howe(cfg: dict) -> int:
    started = time.time()
    try:
        p = parse_polynomial(str(cfg.get("p", "x")))
        q = parse_polynomial(str(cfg.get("q", "y")))
    except Exception as exc:
        raise ValidationError(f"bad polynomial: {exc}") from exc
    if p.degree() > 6 or q.degree() > 6:
        raise ValidationError("polynomial degree capped at 6")
    pair_name = cfg.get("pair", "square")
    if pair_name == "square":
        pair = PairSpec.square(_profile(cfg), None,
                               float(cfg.get("theta", math.pi / 2)))
        region, tol = "square", traces.DEFAULT_TOLERANCE
        schedule = _parse_schedule(cfg.get("n_schedule", "32,64,96"))
    elif pair_name == "disc":
        pair = PairSpec.disc()
        region, tol = "disc", 5e-3
        schedule = _parse_schedule(cfg.get("n_schedule", "32,64,96,128"))
    else:
        raise ValidationError(f"unknown pair {pair_name!r}")
    est = traces.helton_howe_trace(p, q, pair, schedule, tolerance=tol)
    bracket = traces.poisson_bracket_integral(p, q, region)
    # model principal function is minus the region indicator
    rhs = bracket / (2 * math.pi * 1j)
    gap = abs(est.value - rhs)
    denom = max(abs(rhs), 0.01 / (2 * math.pi))
    verdicts = [
        {"name": "stabilized", "passed": bool(est.stabilized),
         "detail": f"gap {est.gap:.2e}"},
        {"name": "functional-matches-bracket",
         "passed": bool(gap <= 0.07 * denom),
         "detail": f"lhs {est.value:.8f}, rhs {rhs:.8f}, "
                   f"rel discrepancy {gap / denom:.2e}"},
    ]
    results = {"trace": est.to_json_dict(),
               "poisson_bracket_integral": bracket,
               "rhs_re": rhs.real, "rhs_im": rhs.imag}
    report = _report(cfg, "helton-howe", results, verdicts, started)
    _emit(report, cfg)
    if not est.stabilized:
        return EXIT_STABILIZATION
    return EXIT_OK if report["passed"] else EXIT_ACCEPTANCE


def cmd_landau(cfg: dict) -> int:
    started = time.time()
    try:
        params = LandauParameters(float(cfg.get("b", 1.0)),
                                  float(cfg.get("E", 2.0)))
        ell = level_count(params)
    except (ValueError, LandauLevelError) as exc:
        raise ValidationError(str(exc)) from exc
    scale = math.sqrt(2.0 / params.b)
    results = {
        "b": params.b, "E": params.E, "level_count": ell,
        "coordinate_scale": scale,
        "window_scale": 1.0 / scale,
        "sigma_hall_predicted": -(ell + 1) / (2 * math.pi),
    }
    verdicts = [{"name": "gap-located", "passed": True,
                 "detail": f"l = {ell}, sigma = {-(ell + 1) / (2 * math.pi):.6f}"}]
    report = _report(cfg, "landau", results, verdicts, started)
    _emit(report, cfg)
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    started = time.time()
    suite = cfg.get("suite", "all")
    try:
        results = acceptance.run_suite(suite)
    except KeyError as exc:
        raise ValidationError(str(exc)) from exc
    verdicts = [{"name": r.name, "passed": r.passed, "detail": r.detail}
                for r in results]
    report = _report(cfg, "verify", {"suite": suite}, verdicts, started)
    _emit(report, cfg)
    return EXIT_OK if report["passed"] else EXIT_ACCEPTANCE


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="focklab",
        description="operator-trace and index experiments on oscillator spaces")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--out-json", dest="out_json", help="JSON report path")
        sp.add_argument("--out-csv", dest="out_csv", help="CSV table path")

    sp = sub.add_parser("conductance", help="stacked commutator trace runs")
    common(sp)
    sp.add_argument("--stack", type=int, help="top level of the stack (0..2)")
    sp.add_argument("--theta", type=float, help="rotation angle, radians")
    sp.add_argument("--profile", help="switch profile kind")
    sp.add_argument("--a", type=float, help="profile half-width")
    sp.add_argument("--n-schedule", dest="n_schedule", help="e.g. 32,64,96,128")
    sp.add_argument("--buffer", type=int, help="buffer columns (default N)")
    sp.add_argument("--tolerance", type=float, help="stabilization tolerance")
    sp.set_defaults(func=cmd_conductance)

    sp = sub.add_parser("index-map", help="index grid over a spectral region")
    common(sp)
    sp.add_argument("--pair", choices=("square", "disc"))
    sp.add_argument("--grid", type=int, help="grid resolution per axis")
    sp.add_argument("--band", type=float, help="exclusion band width")
    sp.add_argument("--theta", type=float)
    sp.add_argument("--profile", help="switch profile kind")
    sp.add_argument("--a", type=float)
    sp.add_argument("--n-schedule", dest="n_schedule")
    sp.set_defaults(func=cmd_index_map)

    sp = sub.add_parser("shift", help="weighted-shift structure table")
    common(sp)
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--level", type=int)
    sp.set_defaults(func=cmd_shift)

    sp = sub.add_parser("helton-howe", help="polynomial trace functional")
    common(sp)
    sp.add_argument("--p", help="polynomial in x, y")
    sp.add_argument("--q", help="polynomial in x, y")
    sp.add_argument("--pair", choices=("square", "disc"))
    sp.add_argument("--theta", type=float)
    sp.add_argument("--profile")
    sp.add_argument("--a", type=float)
    sp.add_argument("--n-schedule", dest="n_schedule")
    sp.set_defaults(func=cmd_helton_howe)

    sp = sub.add_parser("landau", help="gap location and predicted conductance")
    common(sp)
    sp.add_argument("--b", type=float, help="magnetic strength")
    sp.add_argument("--E", type=float, help="Fermi energy")
    sp.set_defaults(func=cmd_landau)

    sp = sub.add_parser("verify", help="run an acceptance suite")
    common(sp)
    sp.add_argument("--suite", choices=sorted(acceptance.SUITES))
    sp.set_defaults(func=cmd_verify)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _merge_config(args, {})
    try:
        code = args.func(cfg)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return code


if __name__ == "__main__":
    sys.exit(main())
