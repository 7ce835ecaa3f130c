"""
The MIT License (MIT)

Copyright (c) 2026-present Village

Permission is hereby granted, free of charge, to any person obtaining a
copy of this software and associated documentation files (the "Software"),
to deal in the Software without restriction, including without limitation
the rights to use, copy, modify, merge, publish, distribute, sublicense,
and/or sell copies of the Software, and to permit persons to whom the
Software is furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS
OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
DEALINGS IN THE SOFTWARE.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import TYPE_CHECKING

import numpy as np

from . import __version__
from .asymptotics import (
    derivative_decay_report,
    fit_quadratic_remainder,
    linearized_operator_defect,
    potential_solution,
)
from .barriers import DEFAULT_TAU_MAX_FACTOR, build_barriers, check_radial_subsolution
from .config import build_compact, build_domain, build_f, build_matrix, build_options, build_source, load_config
from .dirichlet import continuation_solve
from .entire import HessianProblem, default_s_list, extract_limit, run_nested
from .enums import ExitCode
from .errors import ArgumentError, ConfigError, ConstantsError, KHessianException, NonConvergenceError
from .io import RunManifest, load_field, write_field, write_json, write_table
from .liouville import GrowthConstants, hessian_decay
from .selftest import exit_status, format_table, run_selftest
from .types.config import (
    BarriersConfig,
    BuildEntireConfig,
    CheckLiouvilleConfig,
    FitAsymptoticsConfig,
    SelftestConfig,
    SolveDirichletConfig,
)
from .utils import print_exception_with_header

__all__ = ("main",)

if TYPE_CHECKING:
    from typing import Any, Callable, Dict, List, Optional

    from .barriers import BarrierPair
    from .symfunc import AkMatrix

_log = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="JSON configuration file")
    common.add_argument("--out", type=str, default="out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, default=None, help="worker threads for parallel stages")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sampling (default: 0)")
    common.add_argument("--verbose", "-v", action="store_true", help="log at DEBUG level")

    parser = argparse.ArgumentParser(
        prog="khessian", description="Numerics for k-Hessian equations with prescribed quadratic growth."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("solve-dirichlet", parents=[common], help="solve a Dirichlet problem on a box or ellipsoid")
    commands.add_parser("build-entire", parents=[common], help="build an entire solution by nested domains")
    commands.add_parser("barriers", parents=[common], help="build the sub- and supersolution pair")
    commands.add_parser("fit-asymptotics", parents=[common], help="fit b, c and the decay rate of a solution")
    commands.add_parser("check-liouville", parents=[common], help="measure Hessian decay under rescaling")
    selftest = commands.add_parser("selftest", parents=[common], help="run the property suite")
    selftest.add_argument("--quick", action="store_true", help="smaller sample counts and grids")
    return parser.parse_args(argv)


def _configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger("khessian")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _require_config(args: argparse.Namespace) -> str:
    if not args.config:
        raise ConfigError(("--config",), f"the {args.command} command needs a configuration file")
    return args.config


def _solve_dirichlet(args: argparse.Namespace, manifest: RunManifest) -> ExitCode:
    config = load_config(_require_config(args), SolveDirichletConfig)
    manifest.config = dict(config)
    A = build_matrix(config["A"])  # noqa: N806
    f = build_f(config["f"], A.n)
    spec = build_domain(config["domain"], A)
    options = build_options(config.get("solver"))
    try:
        with manifest.timed("solve"):
            field, report = continuation_solve(spec, f, A.k, A, options)
    except NonConvergenceError as exc:
        write_json(os.path.join(args.out, "solve_report.json"), exc.report.to_payload())
        manifest.add_artifacts("solve_report.json")
        manifest.add_stage(dict(exc.report.to_payload()))
        raise
    manifest.add_artifacts(*write_field(field, args.out, "solution"))
    write_json(os.path.join(args.out, "solve_report.json"), report.to_payload())
    manifest.add_artifacts("solve_report.json")
    manifest.add_stage(dict(report.to_payload()))
    manifest.verdict("converged", report.converged)
    return ExitCode.OK


def _write_profiles(pair: BarrierPair, out: str, manifest: RunManifest) -> None:
    for name, profile in (("lower", pair.lower), ("upper", pair.upper), ("v3", pair.v3)):
        profile.to_csv(os.path.join(out, f"barrier_{name}.csv"))
        manifest.add_artifacts(f"barrier_{name}.csv")
    write_json(os.path.join(out, "barrier_constants.json"), pair.to_payload())
    manifest.add_artifacts("barrier_constants.json")


def _barriers(args: argparse.Namespace, manifest: RunManifest) -> ExitCode:
    config = load_config(_require_config(args), BarriersConfig)
    manifest.config = dict(config)
    A = build_matrix(config["A"])  # noqa: N806
    f = build_f(config["f"], A.n)
    env = f.tail_envelope(A)
    overrides = config.get("barriers", {})
    with manifest.timed("barriers"):
        pair = build_barriers(
            A,
            env,
            f,
            nodes=config.get("nodes", 33),
            options=build_options(config.get("solver")),
            tau_max=overrides.get("tau_max"),
            H2=overrides.get("H2"),
        )
    _write_profiles(pair, args.out, manifest)
    manifest.add_artifacts(*write_field(pair.interior, args.out, "v1"))
    check = check_radial_subsolution(A, pair.lower, pair.upper, seed=args.seed)
    manifest.add_stage(pair.summary())
    manifest.verdict("radial_check", check.passed)
    return ExitCode.OK if check.passed else ExitCode.SANDWICH_FAILURE


def _build_entire(args: argparse.Namespace, manifest: RunManifest) -> ExitCode:
    config = load_config(_require_config(args), BuildEntireConfig)
    manifest.config = dict(config)
    A = build_matrix(config["A"])  # noqa: N806
    f = build_f(config["f"], A.n)
    try:
        problem = HessianProblem(A, f)
    except ArgumentError as exc:
        raise ConfigError(("f",), str(exc)) from None
    K = build_compact(config["K"], A.n)  # noqa: N806
    s_list = config.get("s_list") or default_s_list(problem.env, A, K)
    nodes = config.get("nodes", 33)
    options = build_options(config.get("solver"))
    overrides = config.get("barriers", {})
    tau_max = overrides.get("tau_max", max(DEFAULT_TAU_MAX_FACTOR * problem.env.s0, 2.0 * max(s_list)))

    with manifest.timed("barriers"):
        pair = build_barriers(A, problem.env, f, nodes=nodes, options=options, tau_max=tau_max, H2=overrides.get("H2"))
    _write_profiles(pair, args.out, manifest)
    with manifest.timed("nested"):
        run = run_nested(
            problem,
            s_list,
            K,
            nodes=nodes,
            options=options,
            pair=pair,
            margin=config.get("margin", 1.0),
            parallel=config.get("parallel", False),
            threads=args.threads,
        )

    for index, stage in enumerate(run.stages):
        manifest.add_stage(dict(stage.to_payload()))
        if stage.field is not None:
            manifest.add_artifacts(*write_field(stage.field, args.out, f"stage_{index}"))
    if len(run.solutions) >= 2 and run.global_bound_ok:
        limit, gap = extract_limit(run)
        manifest.add_artifacts(*write_field(limit, args.out, "limit"))
        manifest.verdict("gaps_decreasing", all(b < a for a, b in zip(run.gaps, run.gaps[1:])))
        _log.info("limit extracted with cauchy gap %.3e", gap)
    manifest.verdict("solver_ok", run.solver_ok)
    manifest.verdict("sandwich_ok", run.sandwich_ok)
    manifest.verdict("global_bound_ok", run.global_bound_ok)

    if not run.solver_ok:
        return ExitCode.NONCONVERGENCE
    if not (run.sandwich_ok and run.global_bound_ok):
        return ExitCode.SANDWICH_FAILURE
    return ExitCode.OK


def _pick_source(config: Dict[str, Any], keys: List[str]) -> str:
    present = [key for key in keys if key in config]
    if len(present) != 1:
        raise ConfigError((), f"exactly one of {', '.join(keys)} is required")
    return present[0]


def _fit_asymptotics(args: argparse.Namespace, manifest: RunManifest) -> ExitCode:
    config = load_config(_require_config(args), FitAsymptoticsConfig)
    manifest.config = dict(config)
    A = build_matrix(config["A"])  # noqa: N806
    if _pick_source(dict(config), ["field", "source"]) == "field":
        u: Any = load_field(config["field"])
    else:
        src = build_source(config["source"])
        if src.n != A.n:
            raise ConfigError(("source", "n"), f"the source dimension must match A (n = {A.n})")
        u = potential_solution(src, A)
    annulus = config["annulus"]
    if len(annulus) != 2:
        raise ConfigError(("annulus",), "expected [r_lo, r_hi]")
    try:
        fit = fit_quadratic_remainder(
            u, A, annulus=(annulus[0], annulus[1]), samples=config.get("samples", 256), shells=config.get("shells", 8)
        )
    except ArgumentError as exc:
        raise ConfigError(("annulus",), str(exc)) from None
    write_json(os.path.join(args.out, "fit.json"), fit.to_payload())
    write_table(os.path.join(args.out, "shells.csv"), ["r", "rms", "sup"], fit.rows())
    manifest.add_artifacts("fit.json", "shells.csv")
    manifest.add_stage(fit.to_payload())
    manifest.verdict("log_flag", fit.log_flag)

    radii = config.get("decay_radii")
    if radii:
        table = derivative_decay_report(u, A, radii)
        defect = linearized_operator_defect(u, A, radii)
        write_table(os.path.join(args.out, "decay.csv"), ["r", "w", "grad", "hess"], table.rows())
        write_json(os.path.join(args.out, "decay.json"), {"decay": table.to_payload(), "operator": defect.to_payload()})
        manifest.add_artifacts("decay.csv", "decay.json")
    return ExitCode.OK


def _check_liouville(args: argparse.Namespace, manifest: RunManifest) -> ExitCode:
    config = load_config(_require_config(args), CheckLiouvilleConfig)
    manifest.config = dict(config)
    A = build_matrix(config["A"])  # noqa: N806
    if _pick_source(dict(config), ["field", "constant"]) == "field":
        u: Any = load_field(config["field"])
    else:
        u = _shifted_quadratic(A, config["constant"])
    growth = None
    if "growth" in config:
        g = config["growth"]
        growth = GrowthConstants(g["A1"], g["A2"], g["B"], g.get("R0", 0.0))
    try:
        report = hessian_decay(u, config["R_list"], A, config.get("alpha", 0.5), growth=growth)
    except ArgumentError as exc:
        raise ConfigError(("R_list",), str(exc)) from None
    write_json(os.path.join(args.out, "liouville.json"), report.to_payload())
    write_table(os.path.join(args.out, "liouville.csv"), ["R", "hessian_deviation", "holder_proxy"], report.rows())
    manifest.add_artifacts("liouville.json", "liouville.csv")
    manifest.add_stage(report.to_payload())
    manifest.verdict("nonincreasing", report.nonincreasing())
    return ExitCode.OK


def _shifted_quadratic(A: AkMatrix, constant: float) -> Callable[[Any], Any]:  # noqa: N803
    return lambda x: A.tau(np.asarray(x, dtype=np.float64)) + constant


def _selftest(args: argparse.Namespace, manifest: RunManifest) -> int:
    quick = args.quick
    if args.config:
        config = load_config(args.config, SelftestConfig)
        manifest.config = dict(config)
        quick = quick or config.get("quick", False)
    with manifest.timed("selftest"):
        results = run_selftest(args.seed, quick)
    print(format_table(results))
    for result in results:
        manifest.add_stage(result.to_payload())
        manifest.verdict(result.name, result.passed)
    return exit_status(results)


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunManifest], int]] = {
    "solve-dirichlet": _solve_dirichlet,
    "build-entire": _build_entire,
    "barriers": _barriers,
    "fit-asymptotics": _fit_asymptotics,
    "check-liouville": _check_liouville,
    "selftest": _selftest,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = _parse_args(argv)
    _configure_logging(args.verbose)
    manifest = RunManifest(args.command, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    code: int = ExitCode.CONFIG_ERROR
    try:
        code = COMMANDS[args.command](args, manifest)
    except ConfigError as exc:
        print(f"khessian: configuration error at {exc}", file=sys.stderr)
        manifest.error = str(exc)
        code = ExitCode.CONFIG_ERROR
    except NonConvergenceError as exc:
        print_exception_with_header("khessian: the solver did not converge", exc)
        manifest.error = str(exc)
        code = ExitCode.NONCONVERGENCE
    except ConstantsError as exc:
        print_exception_with_header("khessian: barrier constants are inadequate", exc)
        manifest.error = str(exc)
        code = ExitCode.SANDWICH_FAILURE
    except KHessianException as exc:
        print_exception_with_header(f"khessian: {args.command} failed", exc)
        manifest.error = str(exc)
        code = ExitCode.CONFIG_ERROR
    finally:
        manifest.exit_code = int(code)
        manifest.write(args.out)
    return int(code)


if __name__ == "__main__":
    sys.exit(main())
