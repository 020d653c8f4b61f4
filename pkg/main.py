"""
hypercontract command-line interface.

Every subcommand resolves its configuration, runs one checker and prints a
versioned JSON report to stdout or --out; scan-region can also write its
grid as CSV to --csv PATH. Logging goes to stderr.

Exit codes: 0 pass, 1 the checked condition fails, 2 usage or parse error,
3 numeric failure.
"""

from typing import Any, Callable, Dict, List, Optional, Tuple
import argparse
import logging
import sys

import numpy as np

import config
from utils.conditions import (
    check_local,
    convexity_report,
    lens_contains,
    lens_report,
    local_form,
    local_margin,
    make_t_grid,
    r_star_components,
    radial_inclusion_failures,
    scan_region,
    worst_direction,
)
from utils.custom_types import PolyBasis, SpecParseError, VerificationError
from utils.discrete import (
    cube_coefficients_from_hermite,
    discrete_map_table,
    flow_comparison_table,
    inverse_walsh,
    two_point_margin,
    walsh_dict,
)
from utils.flow import (
    FlowConfig,
    default_order,
    default_s_grid,
    epsilon_sweep,
    flow_monotonicity,
    global_check,
    necessity_probe,
    probe_polynomial,
    random_hermite_poly,
)
from utils.hermite import ComplexParam, CPoly
from utils.md_to_pdf import write_report_pdf
from utils.report_writer import build_report, write_json, write_region_csv
from utils.scalarfn import FnPair
from utils.spec_parser import format_poly, parse_complex_param, parse_pair, parse_polynomial

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

# (report, exit code)
Outcome = Tuple[Dict[str, Any], int]


def setup_logging(level: str = config.LOG_LEVEL):
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


# Argument types

def _complex_arg(text: str) -> ComplexParam:
    try:
        return parse_complex_param(text)
    except VerificationError as e:
        raise argparse.ArgumentTypeError(str(e))


def _complex_number_arg(text: str) -> complex:
    parts = [part.strip() for part in text.split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"Expected re or re,im, got {text!r}")


def _float_list_arg(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected a comma-separated list of numbers, got {text!r}")


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"Expected a nonnegative integer, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"Expected a positive integer, got {text}")
    return value


# Shared helpers

def _t_grid(args) -> Tuple[np.ndarray, Dict[str, Any]]:
    return make_t_grid(args.tmin, args.tmax, args.tpoints)


def _pair(args) -> FnPair:
    return parse_pair(args.P, args.Q, assume_growth=args.assume_growth)


def _base_config(args, pair: FnPair) -> Dict[str, Any]:
    described = pair.describe()
    run_config = {"P_spec": args.P, "Q_spec": args.Q if args.Q is not None else args.P}
    run_config.update({key: described[key] for key in ("P", "Q", "F")})
    run_config["seed"] = args.seed
    if getattr(args, "z", None) is not None:
        run_config["z"] = args.z
    return run_config


def _assumptions(pair: FnPair) -> Dict[str, Any]:
    described = pair.describe()
    return {
        "growth_condition_P": described["growth_condition_P"],
        "growth_condition_F": described["growth_condition_F"],
        "growth_condition_verified": False,
        "derivatives": described["derivatives"],
    }


def _require_z(args) -> ComplexParam:
    if args.z is None:
        raise SpecParseError(f"{args.command} needs --z re,im")
    return args.z


def _echo_poly(f: CPoly, basis: str) -> str:
    return format_poly(f.in_basis(PolyBasis(basis)))


def _random_coefficients(m: int, rng: np.random.Generator) -> np.ndarray:
    sizes = np.array([bin(mask).count("1") for mask in range(1 << m)])
    draws = rng.standard_normal((1 << m, 2)) / np.sqrt(2.0)
    return (draws[:, 0] + 1j * draws[:, 1]) / (1.0 + sizes)


# Subcommands

def cmd_check_local(args) -> Outcome:
    pair = _pair(args)
    z = _require_z(args)
    ts, grid = _t_grid(args)
    report = dict(check_local(pair, z, ts))
    report["worst_direction"] = worst_direction(pair, z, report["argmin_t"])
    run_config = _base_config(args, pair)
    run_config["t_grid"] = grid
    envelope = build_report(args.command, run_config, report, {"margin": config.MARGIN_TOL}, _assumptions(pair))
    return envelope, EXIT_PASS if report["holds"] else EXIT_FAIL


def _lens_comparison(pair: FnPair, region, ts: np.ndarray) -> Optional[Dict[str, Any]]:
    """Cells whose admissibility disagrees with the lens domain of c_P (P = Q only)."""
    try:
        c_P = lens_report(pair.P, ts)["c_P"]
    except VerificationError as e:
        logger.warning(f"Lens comparison skipped: {e}")
        return None
    disagreements = 0
    for cell in region["cells"]:
        contained, margin = lens_contains(c_P, ComplexParam(cell["re"], cell["im"]))
        if abs(margin) > config.ORACLE_TOL and cell["error"] is None and cell["admissible"] != contained:
            disagreements += 1
    return {"c_P": c_P, "disagreements": disagreements}


def cmd_scan_region(args) -> Outcome:
    pair = _pair(args)
    ts, grid = _t_grid(args)
    region = scan_region(pair, args.grid, args.grid, ts, workers=args.workers)
    args.csv_region = region
    summary = dict(region)
    margins = [cell["min_margin"] for cell in region["cells"] if cell["error"] is None]
    summary["admissible_cells"] = sum(1 for cell in region["cells"] if cell["admissible"])
    summary["min_margin"] = min(margins) if margins else None
    summary["radial_inclusion_failures"] = radial_inclusion_failures(region)
    if args.Q is None or args.Q == args.P:
        summary["lens"] = _lens_comparison(pair, region, ts)
    run_config = _base_config(args, pair)
    run_config.update({"t_grid": grid, "n_r": args.grid, "n_theta": args.grid})
    envelope = build_report(args.command, run_config, summary, {"margin": config.MARGIN_TOL}, _assumptions(pair))
    return envelope, EXIT_NUMERIC if region["error_cells"] == len(region["cells"]) else EXIT_PASS


def _probe_polynomials(pair: FnPair, z: ComplexParam, ts: np.ndarray) -> List[CPoly]:
    """Perturbations a + eps b H_1 along the worst direction where the local condition is weakest."""
    t0 = 1.0 if local_margin(pair, z, 1.0) < 0 else check_local(pair, z, ts)["argmin_t"]
    w = worst_direction(pair, z, t0)
    return [probe_polynomial(t0, t0 * w, eps) for eps in (0.01, 0.02, 0.05)]


def cmd_verify_global(args) -> Outcome:
    pair = _pair(args)
    z = _require_z(args)
    order = args.order or default_order(args.dim)
    rng = np.random.default_rng(args.seed)

    polys = [random_hermite_poly(args.dim, args.degree, rng) for _ in range(args.trials)]
    if args.probe:
        ts, _ = _t_grid(args)
        polys.extend(_probe_polynomials(pair, z, ts))

    rows = []
    for trial, f in enumerate(polys):
        margin = global_check(f, pair, z, order)
        rows.append({"trial": trial, "poly": _echo_poly(f, args.basis), "margin": margin})
        logger.debug(f"Trial {trial}: margin {margin:.3e}")

    min_margin = min((row["margin"] for row in rows), default=None)
    holds = min_margin is None or min_margin >= -config.GLOBAL_TOL
    logger.info(f"verify-global: {len(rows)} polynomials, min margin {min_margin}")
    result = {"rows": rows, "min_global_margin": min_margin, "holds": holds}

    run_config = _base_config(args, pair)
    run_config.update(
        {"degree": args.degree, "dim": args.dim, "trials": args.trials, "order": order, "probe": args.probe}
    )
    envelope = build_report(args.command, run_config, result, {"global": config.GLOBAL_TOL}, _assumptions(pair))
    return envelope, EXIT_PASS if holds else EXIT_FAIL


def cmd_flow(args) -> Outcome:
    pair = _pair(args)
    z = _require_z(args)
    if args.poly is None:
        raise SpecParseError("flow needs --poly")
    f = parse_polynomial(args.poly, args.dim)
    flow_config = FlowConfig(
        f, pair, z, s_grid=default_s_grid(args.s_points), order_u=args.order, order_x=args.order
    )
    report = flow_monotonicity(flow_config, workers=args.workers)

    run_config = _base_config(args, pair)
    run_config.update({"poly": _echo_poly(f, args.basis), "s_points": args.s_points, "orders": report["orders"]})
    envelope = build_report(args.command, run_config, report, {"flow_relative": config.FLOW_REL_TOL}, _assumptions(pair))
    return envelope, EXIT_PASS if report["passed"] else EXIT_FAIL


def cmd_discrete(args) -> Outcome:
    pair = _pair(args)
    z = _require_z(args)
    rng = np.random.default_rng(args.seed)
    run_config = _base_config(args, pair)
    run_config.update({"m": args.m, "two_point_samples": args.two_point_samples})

    f = None
    if args.poly is not None:
        f = parse_polynomial(args.poly, 1)
        coeffs = cube_coefficients_from_hermite(f, args.m)
        run_config["poly"] = _echo_poly(f, args.basis)
    else:
        coeffs = _random_coefficients(args.m, rng)

    table = discrete_map_table(coeffs, pair, z, workers=args.workers)
    margins = []
    for _ in range(args.two_point_samples):
        draws = rng.standard_normal(4)
        a, b = complex(draws[0], draws[1]), complex(draws[2], draws[3])
        margins.append(two_point_margin(pair.F, pair.P, z, a, b))
    min_two_point = min(margins, default=None)
    two_point_ok = min_two_point is None or min_two_point >= -config.DISCRETE_TOL

    result = {
        "coefficients": {"{" + ",".join(map(str, S)) + "}": c for S, c in walsh_dict(coeffs).items()},
        "mean_square": inverse_walsh(coeffs).mean_square(),
        "map": table,
        "monotone": table["monotone"],
        "two_point": {"samples": len(margins), "min_margin": min_two_point, "holds": two_point_ok},
    }
    if f is not None and args.compare_flow:
        result["flow_comparison"] = flow_comparison_table(f, pair, z, args.m)

    envelope = build_report(args.command, run_config, result, {"discrete": config.DISCRETE_TOL}, _assumptions(pair))
    return envelope, EXIT_PASS if table["monotone"] and two_point_ok else EXIT_FAIL


def cmd_rstar(args) -> Outcome:
    pair = _pair(args)
    ts, grid = _t_grid(args)
    report = r_star_components(pair, ts)
    run_config = _base_config(args, pair)
    run_config["t_grid"] = grid
    envelope = build_report(args.command, run_config, report, {}, _assumptions(pair))
    return envelope, EXIT_PASS


def cmd_lens(args) -> Outcome:
    pair = _pair(args)
    ts, grid = _t_grid(args)
    report = dict(lens_report(pair.P, ts))
    c_P = report["c_P"]
    report["boundary"] = {
        "plus_one": lens_contains(c_P, ComplexParam(1.0, 0.0))[0],
        "minus_one": lens_contains(c_P, ComplexParam(-1.0, 0.0))[0],
    }
    code = EXIT_PASS
    if args.z is not None:
        contained, margin = lens_contains(c_P, args.z)
        report["contains_z"] = contained
        report["lens_margin"] = margin
        code = EXIT_PASS if contained else EXIT_FAIL
    run_config = _base_config(args, pair)
    run_config["t_grid"] = grid
    envelope = build_report(args.command, run_config, report, {"lens": config.LENS_TOL}, _assumptions(pair))
    return envelope, code


def cmd_convexity(args) -> Outcome:
    pair = _pair(args)
    if args.tmin is None:
        ts, grid = make_t_grid(config.CONVEXITY_T_MIN, config.CONVEXITY_T_MAX, config.CONVEXITY_T_POINTS)
    else:
        ts, grid = make_t_grid(args.tmin, args.tmax or config.CONVEXITY_T_MAX, args.tpoints or config.CONVEXITY_T_POINTS)
    report = convexity_report(pair.F, ts)
    holds = report["Fpp_positive"] and report["hessian_psd"] and report["ratio_concave"] is not False
    run_config = _base_config(args, pair)
    run_config["t_grid"] = grid
    envelope = build_report(args.command, run_config, report, {"convexity": config.CONVEXITY_TOL}, _assumptions(pair))
    return envelope, EXIT_PASS if holds else EXIT_FAIL


def cmd_probe(args) -> Outcome:
    pair = _pair(args)
    z = _require_z(args)
    a, b = args.a, args.b
    t = abs(a)
    w = a.conjugate() * b
    order = args.order or config.QUAD_ORDER
    sweep = epsilon_sweep(pair, z, a, b, args.eps, order)
    result = {
        "probe": necessity_probe(pair, z, a, b),
        "local_form": local_form(pair, z, t, w),
        "local_margin": local_margin(pair, z, t),
        "sweep": sweep,
        "second_order_coefficient": sweep["second_order_coefficient"],
        "relative_gap": sweep["relative_gap"],
    }
    run_config = _base_config(args, pair)
    run_config.update({"a": a, "b": b, "eps": args.eps, "order": order})
    envelope = build_report(args.command, run_config, result, {}, _assumptions(pair))
    return envelope, EXIT_PASS if result["probe"] >= 0 else EXIT_FAIL


COMMANDS: Dict[str, Callable[[argparse.Namespace], Outcome]] = {
    "check-local": cmd_check_local,
    "scan-region": cmd_scan_region,
    "verify-global": cmd_verify_global,
    "flow": cmd_flow,
    "discrete": cmd_discrete,
    "rstar": cmd_rstar,
    "lens": cmd_lens,
    "convexity": cmd_convexity,
    "probe": cmd_probe,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--P", required=True, help="function spec for P, e.g. power(2) or gen(h=...,phi=...)")
    common.add_argument("--Q", default=None, help="function spec for Q (defaults to P)")
    common.add_argument("--z", type=_complex_arg, default=None, help="complex parameter as re,im")
    common.add_argument("--tmin", type=float, default=None)
    common.add_argument("--tmax", type=float, default=None)
    common.add_argument("--tpoints", type=_positive_int, default=None)
    common.add_argument("--order", type=_positive_int, default=None, help="Gauss-Hermite order per dimension")
    common.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--json", action="store_true", help="JSON report (default)")
    common.add_argument(
        "--csv", default=None, metavar="PATH", help="also write the region grid as CSV to PATH (scan-region only)"
    )
    common.add_argument("--pdf", default=None, help="also write a PDF summary to this path")
    common.add_argument("--workers", type=_positive_int, default=config.WORKERS)
    common.add_argument("--basis", choices=[b.value for b in PolyBasis], default=PolyBasis.HERMITE.value)
    common.add_argument("--assume-growth", action="store_true", help="declare the growth condition for P and F")

    parser = argparse.ArgumentParser(
        prog=config.TOOL_NAME,
        description="Numerical verification of (P,Q) complex hypercontractivity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("check-local", parents=[common], help="local condition on a t-grid")
    scan = sub.add_parser("scan-region", parents=[common], help="admissible z over the unit disk")
    scan.add_argument("--grid", type=_positive_int, default=50, help="radial and angular cells")

    verify = sub.add_parser("verify-global", parents=[common], help="global inequality on random polynomials")
    verify.add_argument("--degree", type=int, choices=range(0, 9), default=4)
    verify.add_argument("--dim", type=int, choices=range(1, 4), default=1)
    verify.add_argument("--trials", type=_nonnegative_int, default=10)
    verify.add_argument("--probe", action="store_true", help="add perturbations a + eps b H1 along the worst direction")

    flow = sub.add_parser("flow", parents=[common], help="monotonicity of C(s)")
    flow.add_argument("--poly", default=None, help='polynomial literal, e.g. "1 + 0.5*H1"')
    flow.add_argument("--dim", type=int, choices=(1, 2), default=None)
    flow.add_argument("--s-points", type=_positive_int, default=config.FLOW_S_POINTS)

    discrete = sub.add_parser("discrete", parents=[common], help="discrete map on the Hamming cube")
    discrete.add_argument("--m", type=int, choices=range(0, config.MAX_CUBE_DIM + 1), default=3)
    discrete.add_argument("--poly", default=None, help="one-variable Hermite literal mapped to the cube")
    discrete.add_argument("--two-point-samples", type=_nonnegative_int, default=100)
    discrete.add_argument("--compare-flow", action="store_true", help="tabulate C(s) next to phi(floor(s m))")

    sub.add_parser("rstar", parents=[common], help="largest real r of the hypercontractivity range")
    sub.add_parser("lens", parents=[common], help="c_P and the lens domain")
    sub.add_parser("convexity", parents=[common], help="convexity hypotheses on F")

    probe = sub.add_parser("probe", parents=[common], help="necessity probe and epsilon sweep")
    probe.add_argument("--a", type=_complex_number_arg, default=complex(1.0))
    probe.add_argument("--b", type=_complex_number_arg, default=complex(1.0))
    probe.add_argument("--eps", type=_float_list_arg, default=[0.05, 0.02, 0.01])
    return parser


def _resolve_grid_defaults(args):
    if args.command == "convexity":
        return
    args.tmin = config.T_MIN if args.tmin is None else args.tmin
    args.tmax = config.T_MAX if args.tmax is None else args.tmax
    args.tpoints = config.T_POINTS if args.tpoints is None else args.tpoints


def _emit(args, envelope: Dict[str, Any]):
    write_json(envelope, args.out, sys.stdout)
    if args.csv:
        write_region_csv(args.csv_region, args.csv)
    if args.pdf and not write_report_pdf(envelope, args.pdf):
        logger.warning(f"PDF summary could not be written to {args.pdf}")


def main(argv: Optional[List[str]] = None) -> int:
    setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.csv is not None and args.command != "scan-region":
        parser.error("--csv is only supported by scan-region")
    _resolve_grid_defaults(args)

    try:
        envelope, code = COMMANDS[args.command](args)
        _emit(args, envelope)
        return code
    except SpecParseError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_USAGE
    except (VerificationError, ArithmeticError, FloatingPointError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
