import os
import sys
import json
import logging
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from config import DEFAULT_TOL, LOG_LEVEL, OFFLINE, REPORT_DIR
from evaluation.cache import attach_kernel, cache_kernel
from evaluation.run import EXPORT_FORMATS, SUFFIXES, export_report, run_experiment, text_table
from evaluation.suites import SELECTORS
from exceptions import ConfigError, ConstructionIncompleteError, ResumError, UsageError
from jets_and_classes import carleson_ehrenpreis_ratio, lacunary_counterexample_jet
from models import ExperimentConfig, QuadratureSpec, parse_weight_spec
from saddle_geometry import build_contour, legendre_lambda, psi_radius
from special_functions import eval_E
from tracing.setup import RunTracer, convert_values
from transforms import (
    Jet,
    geometric_jet,
    load_jet,
    moment_sum,
    polynomial_jet,
    regular_transform,
    regular_transform_pm,
    save_jet,
    singular_transform,
)
from weights import LOG_WEIGHT, build_weight, derive_weight
from weights.regularity import check_regularity, quasianalyticity_test

logger = logging.getLogger(__name__)

INFO_RADII = [1e3, 1e4, 1e6, 1e9]
DUAL_RADII = [1e3, 1e4, 1e5, 1e6, 1e8, 1e10]


############# Helpers #############

def quad_spec(args) -> QuadratureSpec:
    return QuadratureSpec(rel_tol=args.tol)


def read_jet(args) -> Jet:
    """The series from --jet (file), --coefficients (comma list) or --geometric q."""
    if args.jet:
        return load_jet(args.jet)
    if args.coefficients:
        return polynomial_jet([complex(c) for c in args.coefficients.split(",")])
    if args.geometric is not None:
        return geometric_jet(1.0, complex(args.geometric), args.terms)
    raise UsageError("give a series with --jet, --coefficients or --geometric")


def emit(payload: Dict[str, Any], out: Optional[str]) -> None:
    """Print a result as JSON and write it to --out when given."""
    text = json.dumps(convert_values(payload), indent=2, sort_keys=True)
    print(text)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n", encoding="utf-8")
        logger.info(f"Wrote {out}")


def value_dict(result) -> Dict[str, Any]:
    return {"value": [result.value_real, result.value_imag], "error_estimate": result.error_estimate,
            "trace": result.trace}


############# Subcommands #############

def cmd_weight_info(args) -> int:
    w = build_weight(args.weight)
    rows = []
    for rho in INFO_RADII:
        lam, x = legendre_lambda(w, rho)
        rows.append({"rho": rho, "log_L": float(w.log_L_real(rho)), "epsilon": float(w.epsilon_real(rho)),
                     "Lambda": lam, "Lambda_argmax": x})
    regularity = check_regularity(w)
    emit({
        "weight": w.canonical(),
        "kind": w.kind,
        "rho0": w.rho0,
        "quasianalyticity": quasianalyticity_test(w),
        "profile": rows,
        "regularity": {name: entry.verdict for name, entry in regularity.entries.items()},
    }, args.out)
    return 0


def cmd_kernel(args) -> int:
    path = cache_kernel(args.weight, t_range=(args.t_min, args.t_max), quad=quad_spec(args),
                        cache_dir=args.cache_dir, kind=args.kind, offline=args.offline)
    print(path)
    return 0


def cmd_efun(args) -> int:
    w = build_weight(args.weight)
    z = complex(args.z)
    result = eval_E(w, z, args.tol, kind=args.kind)
    emit({"weight": w.canonical(), "kind": args.kind, "z": z, **result.model_dump(), "value": result.value},
         args.out)
    return 0


def cmd_sum(args) -> int:
    w = build_weight(args.weight)
    ke = attach_kernel(w, args.cache_dir, "K", quad_spec(args), args.offline)
    result = moment_sum(read_jet(args), ke)
    emit({"weight": w.canonical(), **value_dict(result)}, args.out)
    return 0


def cmd_recover(args) -> int:
    w = build_weight(args.weight)
    ke = attach_kernel(w, args.cache_dir, "K", quad_spec(args), args.offline)
    rep = singular_transform(read_jet(args), w, args.tol)
    contour = None
    if args.side != "real":
        contour = build_contour(w, f"psi_{args.side}", psi_radius(w, args.rho_max))
    rows = []
    for text in args.x:
        x = complex(text)
        if contour is None:
            result = regular_transform(rep, ke, x)
        else:
            if x.imag != 0:
                raise UsageError("R^+- is evaluated at real points")
            result = regular_transform_pm(rep, ke, contour, x.real)
        rows.append({"x_real": x.real, "x_imag": x.imag, "value_real": result.value_real,
                     "value_imag": result.value_imag, "error_estimate": result.error_estimate})
    frame = pd.DataFrame(rows)
    print(frame.to_string(index=False))
    if args.out:
        frame.to_csv(args.out, index=False)
        logger.info(f"Wrote {args.out}")
    return 0


def cmd_verify(args) -> int:
    config = ExperimentConfig(weight=parse_weight_spec(args.weight), quadrature=quad_spec(args),
                              selectors=args.selector, output_dir=str(REPORT_DIR), cache_dir=args.cache_dir,
                              seed=args.seed, offline=args.offline)
    tracer = RunTracer(args.trace) if args.trace else None
    report = run_experiment(config, tracer)
    print(text_table(report))
    out = args.out or Path(config.output_dir) / f"report_{report.config_hash}{SUFFIXES[args.format]}"
    export_report(report, args.format, out)
    return 0 if report.all_passed() else 1


def cmd_duality(args) -> int:
    w = build_weight(args.weight)
    dual = derive_weight(w, "dual")
    rows = []
    for rho in DUAL_RADII:
        log_dual = float(dual.log_L_real(rho))
        rows.append({"rho": rho, "log_L": float(w.log_L_real(rho)), "log_dual": log_dual,
                     "dual_over_log_rho": float(np.exp(log_dual) / np.log(rho))})
    frame = pd.DataFrame(rows)
    print(frame.to_string(index=False))
    comparison = carleson_ehrenpreis_ratio(w)
    print(f"Poisson integral of Lambda over Lambda_(L/L~): {comparison['ratios']} (spread {comparison['spread']:.3f})")
    if args.out:
        frame.to_csv(args.out, index=False)
        logger.info(f"Wrote {args.out}")
    return 0


def cmd_counterexample(args) -> int:
    w = build_weight(args.weight)
    w2 = build_weight(args.weight2) if args.weight2 else w
    status = 0
    try:
        jet, certificate = lacunary_counterexample_jet(w, w2, k_terms=args.k, delta=args.delta, A=args.A)
    except ConstructionIncompleteError as e:
        logger.warning(str(e))
        jet, certificate = e.partial
        status = 1
    out = Path(args.out or "output/lacunary_jet.json")
    save_jet(jet, out)
    emit({"weight": w.canonical(), "target": w2.canonical(), "indices": jet.index_array(),
          "certificate": certificate}, str(out.with_suffix(".certificate.json")))
    return status


COMMANDS = {
    "weight-info": cmd_weight_info,
    "kernel": cmd_kernel,
    "efun": cmd_efun,
    "sum": cmd_sum,
    "recover": cmd_recover,
    "verify": cmd_verify,
    "duality": cmd_duality,
    "counterexample": cmd_counterexample,
}


############# Arguments #############

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--weight', type=str, default=LOG_WEIGHT,
                        help='Weight as JSON or canonical string, e.g. denjoy:a0=0;1:2 or raw:borel')
    common.add_argument('--tol', type=float, default=DEFAULT_TOL, help='Relative tolerance')
    common.add_argument('--out', type=str, help='Output file')
    common.add_argument('--cache-dir', type=str, help='Kernel cache directory (RESUM_CACHE_DIR overrides it)')
    common.add_argument('--seed', type=int, default=0, help='Random seed recorded in reports')
    common.add_argument('--offline', action='store_true', default=OFFLINE,
                        help='Never build missing kernel caches (also RESUM_OFFLINE=1)')

    series = argparse.ArgumentParser(add_help=False)
    series.add_argument('--jet', type=str, help='Jet JSON file')
    series.add_argument('--coefficients', type=str, help='Comma-separated coefficients a_0,a_1,...')
    series.add_argument('--geometric', type=str, help='Ratio q of the geometric series sum q^n')
    series.add_argument('--terms', type=int, default=64, help='Stored terms of a geometric series')

    parser = argparse.ArgumentParser(description='Generalized moment summation under slowly growing weights')
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('weight-info', parents=[common], help='Profile, regularity and quasianalyticity of a weight')

    kernel = sub.add_parser('kernel', parents=[common], help='Build and write the kernel cache')
    kernel.add_argument('--kind', choices=['K', 'Kstar'], default='K')
    kernel.add_argument('--t-min', type=float, default=1e-2)
    kernel.add_argument('--t-max', type=float, default=50.0)

    efun = sub.add_parser('efun', parents=[common], help='Evaluate E, E1, Etilde or Estar')
    efun.add_argument('--z', type=str, required=True, help='Complex point, e.g. 2+3j')
    efun.add_argument('--kind', choices=['E', 'E1', 'Etilde', 'Estar'], default='E')

    sub.add_parser('sum', parents=[common, series], help='(gamma)-sum of a series')

    recover = sub.add_parser('recover', parents=[common, series], help='R_L S_L of a jet at given points')
    recover.add_argument('--x', nargs='+', required=True, help='Evaluation points')
    recover.add_argument('--side', choices=['real', 'plus', 'minus'], default='real',
                         help='real axis transform or the one-sided contour transforms')
    recover.add_argument('--rho-max', type=float, default=1e5, help='Saddle radius where the contour is cut')

    verify = sub.add_parser('verify', parents=[common], help='Run acceptance suites')
    verify.add_argument('--selector', nargs='*', default=['all'], choices=SELECTORS)
    verify.add_argument('--format', choices=EXPORT_FORMATS, default='json')
    verify.add_argument('--trace', type=str, help='JSON lines file for suite events')

    sub.add_parser('duality', parents=[common], help='Dual weight and Carleson-Ehrenpreis comparison')

    counter = sub.add_parser('counterexample', parents=[common], help='Lacunary jet escaping A(L2; R)')
    counter.add_argument('--weight2', type=str, help='Target weight L2 (defaults to --weight)')
    counter.add_argument('--k', type=int, default=3, help='Number of lacunary indices')
    counter.add_argument('--delta', type=float, default=0.1)
    counter.add_argument('--A', type=float, default=2.0)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
                        format='%(asctime)s - %(levelname)s - %(message)s')
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as e:
        logger.error(f"{args.command}: {e}")
        return 2
    except ResumError as e:
        logger.error(f"{args.command} failed with {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
