"""Command line front end.

Each subcommand prints a small report of (quantity, value, stderr,
n_samples, reference_bound, margin, status) rows as CSV or JSON. Exit
codes: 0 all rows ok, 2 soft warnings only (Monte Carlo estimates out of
their reference band), 1 hard failures (exact checks violated), 64
configuration errors. Floats render with 17 significant digits and all
estimators consume counter-based streams, so reports are byte-identical
for a given seed regardless of HARDBODY_THREADS.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .approx import greedy_polytope, random_vertex_polytope, sandwich_ratio
from .bodies import (
    HardBodyParams,
    build_k_eta_kappa,
    build_q,
    build_qt,
    build_qt_polar,
)
from .centers import GAMMA_G_THRESHOLD, estimate_barycenter, gamma_g_check, grunbaum_check
from .design import DesignConfig, Mode, generate_design, verify_design
from .errors import (
    ChordDegenerate,
    ContainmentViolated,
    HardBodyError,
    InvalidConfig,
    IterationLimit,
    NotInBody,
)
from .hardness import (
    CandidatePolytope,
    covering_certificate,
    hardness_constants,
    separation_report,
)
from .polarity import polar_shift, verify_polar_shift
from .sampling import hit_and_run, mean_width, urysohn_bound, volume_ratio_qt_polar

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_WARN = 2
EXIT_CONFIG = 64

_SECTIONS = ("design", "widths", "centers", "hardness", "dual", "approx")


# ---------------------------------------------------------------------------
# Report rows.
# ---------------------------------------------------------------------------

@dataclass
class Row:
    quantity: str
    value: Optional[float] = None
    stderr: Optional[float] = None
    n_samples: Optional[int] = None
    reference_bound: Optional[float] = None
    margin: Optional[float] = None
    status: str = "ok"


def _f(x: Optional[float]) -> str:
    if x is None:
        return ""
    return f"{float(x):.17g}"


def render_csv(rows: list[Row]) -> str:
    out = ["quantity,value,stderr,n_samples,reference_bound,margin,status"]
    for r in rows:
        out.append(",".join([
            r.quantity, _f(r.value), _f(r.stderr),
            "" if r.n_samples is None else str(int(r.n_samples)),
            _f(r.reference_bound), _f(r.margin), r.status,
        ]))
    return "\n".join(out) + "\n"


def render_json(config: dict, rows: list[Row]) -> str:
    payload = {
        "config": config,
        "rows": [{
            "quantity": r.quantity, "value": r.value, "stderr": r.stderr,
            "n_samples": r.n_samples, "reference_bound": r.reference_bound,
            "margin": r.margin, "status": r.status,
        } for r in rows],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def exit_code(rows: list[Row]) -> int:
    if any(r.status == "fail" for r in rows):
        return EXIT_FAIL
    if any(r.status == "warn" for r in rows):
        return EXIT_WARN
    return EXIT_OK


# ---------------------------------------------------------------------------
# Shared construction helpers.
# ---------------------------------------------------------------------------

def _system(ns) -> "object":
    mode = Mode.REFERENCE if ns.mode == "reference" else Mode.DESK
    cfg = DesignConfig(n=ns.n, m=ns.m, seed=ns.seed,
                       c_config=ns.c_config, mode=mode)
    return generate_design(cfg)


def _parse_eta(text: str) -> float | str:
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError as e:
        raise InvalidConfig(f"--eta must be a float or 'auto', got {text!r}") from e


def _resolve_eta(ns, system, rows: list[Row]) -> float:
    """A numeric eta; 'auto' recenters at the estimated barycenter height."""
    spec = _parse_eta(ns.eta)
    if spec != "auto":
        return float(spec)
    probe = build_k_eta_kappa(HardBodyParams(system, 0.0, ns.kappa))
    est = estimate_barycenter(probe, None, ns.walk_samples, ns.seed,
                              label="eta_auto")
    lo, hi = est.confidence_interval
    eta = min(max(est.eta, 0.0), 0.5)
    rows.append(Row("eta.auto", value=eta, stderr=(hi - lo) / 6.0,
                    n_samples=est.n_samples))
    return eta


def _parse_candidate(text: str) -> tuple[str, int]:
    kind, _, count = text.partition(":")
    count = count.removeprefix("N=")
    if kind not in ("random", "greedy") or not count.isdigit():
        raise InvalidConfig(
            f"candidate must look like random:N or greedy:N, got {text!r}")
    return kind, int(count)


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def cmd_design(ns) -> list[Row]:
    system = _system(ns)
    rep = verify_design(system)
    lo, hi, ip = rep.extremal_values
    n_viol = len(rep.norm_violations) + len(rep.inner_product_violations)
    return [
        Row("design.delta", value=system.delta),
        Row("design.min_norm_scaled", value=lo, reference_bound=0.5,
            margin=lo - 0.5, status="ok" if lo >= 0.5 else "fail"),
        Row("design.max_norm_scaled", value=hi, reference_bound=2.0,
            margin=2.0 - hi, status="ok" if hi <= 2.0 else "fail"),
        Row("design.max_ip_scaled", value=ip, reference_bound=1.0,
            margin=1.0 - ip, status="ok" if ip <= 1.0 else "fail"),
        Row("design.violations", value=float(n_viol), reference_bound=0.0,
            margin=-float(n_viol), status="ok" if n_viol == 0 else "fail"),
    ]


def cmd_widths(ns) -> list[Row]:
    system = _system(ns)
    rows: list[Row] = []
    picks = _SECTION_BODIES if ns.body == "all" else (ns.body,)
    for name in picks:
        if name == "q":
            est = mean_width(build_q(system), ns.samples, ns.seed)
        elif name == "qt":
            est = mean_width(build_qt(system, ns.t), ns.samples, ns.seed)
        elif name == "qt_polar":
            est = mean_width(build_qt_polar(system, ns.t), ns.samples, ns.seed)
        else:
            eta = _resolve_eta(ns, system, rows)
            est = mean_width(
                build_k_eta_kappa(HardBodyParams(system, eta, ns.kappa)),
                ns.samples, ns.seed)
        rows.append(Row(f"width.{name}", value=est.value, stderr=est.stderr,
                        n_samples=est.n_samples))
    if ns.body in ("all", "qt_polar"):
        ratio = volume_ratio_qt_polar(system, ns.t, ns.samples, ns.seed)
        rows.append(Row("volume_ratio.qt_polar", value=ratio.value,
                        stderr=ratio.stderr, n_samples=ratio.n_samples))
    if ns.body in ("all", "qt"):
        ury = urysohn_bound(build_qt(system, ns.t), ns.samples, ns.seed)
        ref = (1.0 + ns.m ** -3.0) ** ns.n
        slack = ref + 3.0 * ury.stderr - ury.value
        rows.append(Row("urysohn.qt", value=ury.value, stderr=ury.stderr,
                        n_samples=ury.n_samples, reference_bound=ref,
                        margin=slack, status="ok" if slack >= 0 else "warn"))
    return rows


_SECTION_BODIES = ("q", "qt", "qt_polar", "k")


def cmd_centers(ns) -> list[Row]:
    system = _system(ns)
    rows: list[Row] = []
    eta = _resolve_eta(ns, system, rows)
    body = build_k_eta_kappa(HardBodyParams(system, eta, ns.kappa))
    est = estimate_barycenter(body, None, ns.walk_samples, ns.seed)
    lo, hi = est.confidence_interval
    rows.append(Row("centers.barycenter_height", value=est.eta,
                    stderr=(hi - lo) / 6.0, n_samples=est.n_samples))
    sym_ok = est.symmetry_diagnostic <= 0.1
    rows.append(Row("centers.symmetry_diagnostic",
                    value=est.symmetry_diagnostic, reference_bound=0.1,
                    margin=0.1 - est.symmetry_diagnostic,
                    status="ok" if sym_ok else "warn"))
    if ns.grunbaum:
        g = grunbaum_check(body, np.eye(body.dimension)[0], est.eta,
                           ns.walk_samples, ns.seed)
        floor = 1.0 / math.e - 3.0 * g.stderr
        rows.append(Row("centers.grunbaum_min_side", value=g.value,
                        stderr=g.stderr, n_samples=g.n_samples,
                        reference_bound=1.0 / math.e, margin=g.value - floor,
                        status="ok" if g.value >= floor else "warn"))
    eta_g = ns.eta_g if ns.eta_g is not None else (eta if eta > 0 else 0.25)
    gam = gamma_g_check(system, eta_g, ns.seed, n_samples=ns.walk_samples)
    rows.append(Row("centers.gamma_g", value=gam.value, stderr=gam.stderr,
                    n_samples=gam.n_samples,
                    reference_bound=GAMMA_G_THRESHOLD,
                    margin=gam.value - GAMMA_G_THRESHOLD,
                    status="ok" if gam.value >= GAMMA_G_THRESHOLD else "warn"))
    return rows


def cmd_hardness(ns) -> list[Row]:
    system = _system(ns)
    rows: list[Row] = []
    eta = _resolve_eta(ns, system, rows)
    hc = hardness_constants(ns.n, ns.m, ns.kappa, delta=system.delta)
    rows += [
        Row("hardness.delta", value=hc.delta),
        Row("hardness.threshold", value=hc.threshold),
        Row("hardness.per_vertex_bound", value=hc.per_vertex_bound),
        Row("hardness.implied_lower_bound", value=hc.implied_lower_bound),
        Row("hardness.r_factor", value=hc.r_factor),
        Row("hardness.coefficient_bound", value=hc.coefficient_bound),
    ]
    sep = separation_report(system, eta)
    rows.append(Row("hardness.identity_rel_error",
                    value=sep.identity_max_rel_error, reference_bound=1e-9,
                    margin=1e-9 - sep.identity_max_rel_error,
                    status="ok" if sep.identity_max_rel_error <= 1e-9 else "fail"))
    rows.append(Row("hardness.offdiag_max", value=sep.offdiag_max_value,
                    reference_bound=0.0, margin=-sep.offdiag_max_value,
                    status="ok" if sep.offdiag_violation_count == 0 else "fail"))
    dmin = float(sep.diag_values.min())
    dmax = float(sep.diag_values.max())
    min_ok = (not sep.diag_lower_applicable) or dmin >= sep.diag_lower
    rows.append(Row("hardness.diag_min", value=dmin,
                    reference_bound=sep.diag_lower if sep.diag_lower_applicable
                    else None,
                    margin=dmin - sep.diag_lower if sep.diag_lower_applicable
                    else None,
                    status="ok" if min_ok else "fail"))
    rows.append(Row("hardness.diag_max", value=dmax,
                    reference_bound=sep.diag_upper, margin=sep.diag_upper - dmax,
                    status="ok" if dmax <= sep.diag_upper else "fail"))
    return rows


def cmd_dual(ns) -> list[Row]:
    system = _system(ns)
    rows: list[Row] = []
    eta = _resolve_eta(ns, system, rows)
    if ns.h:
        grid = list(ns.h)
        explicit = True
    else:
        grid = [h for h in (-1.0, -0.5, 0.0, 0.3)
                if h < 1.0 / (1.0 - eta) - 1e-9
                and (eta == 0.0 or h >= -1.0 / eta)]
        explicit = False
    kappa_max = 0.0
    for h in grid:
        res = polar_shift(eta, h)  # explicit out-of-range h propagates
        if not math.isfinite(res.kappa):
            if explicit:
                raise InvalidConfig(f"h={h} degenerates to a cone, "
                                    "nothing to verify")
            continue
        kappa_max = max(kappa_max, res.kappa)
        ident = abs(res.kappa * (1.0 + eta * h) - (1.0 - (1.0 - eta) * h))
        tol = 4.0 * np.finfo(np.float64).eps * max(1.0, abs(1.0 - (1.0 - eta) * h))
        rows.append(Row(f"dual.kappa@h={h:g}", value=res.kappa,
                        reference_bound=tol, margin=tol - ident,
                        status="ok" if ident <= tol else "fail"))
        check = verify_polar_shift(system, eta, h, n_points=ns.points,
                                   seed=ns.seed)
        rows.append(Row(f"dual.disagreement@h={h:g}",
                        value=check.disagreement_fraction,
                        n_samples=check.n_points, reference_bound=0.005,
                        margin=0.005 - check.disagreement_fraction,
                        status="ok" if check.passed else "warn"))
    bound = 2.0 * (1.0 + 10.0 * math.log(2.0 * math.e))
    rows.append(Row("dual.kappa_max", value=kappa_max, reference_bound=bound,
                    margin=bound - kappa_max,
                    status="ok" if kappa_max <= bound else "warn"))
    return rows


def cmd_approx(ns) -> list[Row]:
    system = _system(ns)
    rows: list[Row] = []
    eta = _resolve_eta(ns, system, rows)
    params = HardBodyParams(system, eta, ns.kappa)
    body = build_k_eta_kappa(params)
    hc = hardness_constants(ns.n, ns.m, ns.kappa, delta=system.delta)
    for spec in (ns.candidate or ["greedy:32"]):
        kind, count = _parse_candidate(spec)
        if kind == "greedy":
            P = greedy_polytope(body, count, ns.seed,
                                n_directions=ns.directions)
        elif count >= body.dimension + 2:
            P = random_vertex_polytope(body, count, ns.seed)
        else:
            # too few vertices for the constructor's precondition; build the
            # degenerate candidate directly from walk samples
            pts = hit_and_run(body, None, count, ns.seed,
                              label="random_vertices")
            P = CandidatePolytope(pts, label=f"random:{count}")
        rat = sandwich_ratio(P, body, seed=ns.seed,
                             n_directions=ns.directions)
        rows.append(Row(f"approx.lambda_lower.{spec}", value=rat.lambda_lower,
                        n_samples=rat.directions_used,
                        reference_bound=hc.r_factor,
                        margin=rat.lambda_lower - hc.r_factor))
        rows.append(Row(f"approx.lambda_estimate.{spec}",
                        value=rat.lambda_estimate,
                        n_samples=rat.directions_used))
        if eta <= 0.5:
            cert = covering_certificate(P, system, eta, ns.kappa)
            frac = 1.0 - cert.uncovered.size / max(system.m, 1)
            rows.append(Row(f"approx.covered_fraction.{spec}", value=frac))
    return rows


def cmd_all(ns, parser: argparse.ArgumentParser) -> list[Row]:
    overrides: dict = {}
    if ns.config:
        with open(ns.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        if not isinstance(overrides, dict):
            raise InvalidConfig("config file must hold a JSON object")
    base = [
        "--n", str(ns.n), "--m", str(ns.m), "--seed", str(ns.seed),
        "--mode", ns.mode, "--eta", str(ns.eta), "--kappa", str(ns.kappa),
        "--t", str(ns.t), "--samples", str(ns.samples),
        "--walk-samples", str(ns.walk_samples), "--points", str(ns.points),
        "--directions", str(ns.directions), "--body", ns.body,
    ]
    if ns.c_config is not None:
        base += ["--c-config", str(ns.c_config)]
    if ns.grunbaum:
        base.append("--grunbaum")
    if ns.eta_g is not None:
        base += ["--eta-g", str(ns.eta_g)]
    for spec in ns.candidate or []:
        base += ["--candidate", spec]
    for h in ns.h or []:
        base += ["--h", str(h)]
    rows: list[Row] = []
    for section in _SECTIONS:
        section_cfg = overrides.get(section, {})
        if section_cfg is False:
            continue
        if not isinstance(section_cfg, dict):
            raise InvalidConfig(f"config section {section!r} must be an "
                                "object or false")
        argv = [section] + base
        for key in sorted(section_cfg):
            flag = "--" + key.replace("_", "-")
            val = section_cfg[key]
            if isinstance(val, bool):
                if val:
                    argv.append(flag)
            elif isinstance(val, list):
                for item in val:
                    argv += [flag, str(item)]
            else:
                argv += [flag, str(val)]
        sub = parser.parse_args(argv)
        rows += _DISPATCH[section](sub)
    return rows


_DISPATCH = {
    "design": cmd_design,
    "widths": cmd_widths,
    "centers": cmd_centers,
    "hardness": cmd_hardness,
    "dual": cmd_dual,
    "approx": cmd_approx,
}


# ---------------------------------------------------------------------------
# Parser and entry point.
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=16, help="ambient dimension")
    common.add_argument("--m", type=int, default=256, help="number of generators")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--c-config", type=float, default=None,
                        help="scale constant; default 3 (desk) / 100 (reference)")
    common.add_argument("--mode", choices=("desk", "reference"), default="desk")
    common.add_argument("--eta", default="0.25",
                        help="axis shift in [0,1), or 'auto' to recenter at "
                             "the estimated barycenter height")
    common.add_argument("--kappa", type=float, default=1.0)
    common.add_argument("--t", type=float, default=0.02)
    common.add_argument("--samples", type=int, default=20000,
                        help="independent Monte Carlo draws")
    common.add_argument("--walk-samples", type=int, default=512,
                        help="hit-and-run sample points")
    common.add_argument("--points", type=int, default=1000,
                        help="membership comparison points (dual)")
    common.add_argument("--directions", type=int, default=512,
                        help="support probe directions (approx)")
    common.add_argument("--body", choices=("all",) + _SECTION_BODIES,
                        default="all", help="body selector (widths)")
    common.add_argument("--candidate", action="append", default=None,
                        help="random:N or greedy:N (approx); repeatable")
    common.add_argument("--h", type=float, action="append", default=None,
                        help="axis shift parameter (dual); repeatable")
    common.add_argument("--grunbaum", action="store_true",
                        help="also run the cut-fraction check (centers)")
    common.add_argument("--eta-g", type=float, default=None,
                        help="shift for the polar barycenter check (centers)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default="-", help="output path, '-' = stdout")

    parser = argparse.ArgumentParser(
        prog="hardbody",
        description="Quasi-orthogonal designs and the convex bodies they "
                    "generate: geometry reports with certified checks.",
        epilog="HARDBODY_THREADS caps worker threads; reports are "
               "byte-identical across thread counts.")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in _SECTIONS:
        subs.add_parser(name, parents=[common])
    allp = subs.add_parser("all", parents=[common])
    allp.add_argument("--config", default=None,
                      help="JSON file of per-section option overrides")
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else EXIT_CONFIG
    try:
        if ns.command == "all":
            rows = cmd_all(ns, parser)
        else:
            rows = _DISPATCH[ns.command](ns)
    except (NotInBody, ContainmentViolated, ChordDegenerate, IterationLimit) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL
    except HardBodyError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if ns.format == "csv":
        text = render_csv(rows)
    else:
        config = {k: v for k, v in sorted(vars(ns).items())
                  if k not in ("format", "out") and v is not None}
        text = render_json(config, rows)
    if ns.out == "-":
        sys.stdout.write(text)
    else:
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return exit_code(rows)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
