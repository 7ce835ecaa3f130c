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

import asyncio
import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

import numpy as np

from .barriers import DEFAULT_TAU_MAX_FACTOR, build_barriers
from .dirichlet import continuation_solve
from .enums import NodeTag
from .errors import ArgumentError, ConstantsError, NonConvergenceError, PreconditionError, StateError
from .grid import GridField, GridSpec

__all__ = (
    "SANDWICH_SLACK",
    "COMPACT_MARGIN_CELLS",
    "HessianProblem",
    "CompactBox",
    "StageResult",
    "EntireRun",
    "UniquenessReport",
    "default_s_list",
    "boundary_defect",
    "run_nested",
    "sandwich_check",
    "extract_limit",
    "uniqueness_probe",
)

if TYPE_CHECKING:
    from typing import List, Optional, Sequence, Tuple

    import numpy.typing as npt

    from .barriers import BarrierPair
    from .dirichlet import SolveReport, SolverOptions
    from .fmodel import FModel, TailEnvelope
    from .symfunc import AkMatrix
    from .types.reports import StagePayload

    Array = npt.NDArray[np.float64]

_log = logging.getLogger(__name__)

# margins and gaps are compared against SANDWICH_SLACK * h^2
SANDWICH_SLACK = 5.0
# K must stay this many cells of the coarsest stage grid inside D_s
COMPACT_MARGIN_CELLS = 2


class HessianProblem:
    """sigma_k(D^2 u) = f in R^n with u asymptotic to 1/2 x^T A x.

    The growth exponent of the remainder is informational only.
    """

    __slots__ = ("n", "k", "A", "f", "env")

    def __init__(self, A: AkMatrix, f: FModel, env: Optional[TailEnvelope] = None) -> None:  # noqa: N803
        if A.n < 3:
            raise PreconditionError(f"entire solutions need n >= 3, got n = {A.n}")
        if not f.inf_bound > 0.0:
            raise PreconditionError(f"inf f = {f.inf_bound!r} must be positive")
        self.n: int = A.n
        self.k: int = A.k
        self.A: AkMatrix = A
        self.f: FModel = f
        self.env: TailEnvelope = f.tail_envelope(A) if env is None else env

    def __repr__(self) -> str:
        return f"HessianProblem(n={self.n}, k={self.k}, A={self.A!r}, f={self.f!r}, env={self.env!r})"


class CompactBox:
    __slots__ = ("lower", "upper", "nodes")

    def __init__(self, lower: Sequence[float], upper: Sequence[float], nodes: int = 17) -> None:
        self.lower: Array = np.asarray(lower, dtype=np.float64)
        self.upper: Array = np.asarray(upper, dtype=np.float64)
        self.nodes: int = nodes
        if self.lower.shape != self.upper.shape or np.any(self.upper <= self.lower):
            raise ArgumentError("compact box corners must satisfy lower < upper")

    @classmethod
    def cube(cls, n: int, half_width: float, nodes: int = 17) -> CompactBox:
        return cls([-half_width] * n, [half_width] * n, nodes)

    @property
    def spec(self) -> GridSpec:
        return GridSpec.box(self.lower, self.upper, self.nodes)

    @property
    def radius(self) -> float:
        return float(np.max(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def sup_tau(self, A: AkMatrix, margin: float = 0.0) -> float:  # noqa: N803
        # tau is convex, so its maximum over a box sits at a corner
        reach = np.maximum(np.abs(self.lower), np.abs(self.upper)) + margin
        return float(A.tau(reach))

    def __repr__(self) -> str:
        return f"CompactBox({self.lower.tolist()!r}, {self.upper.tolist()!r}, nodes={self.nodes})"


class StageResult:
    __slots__ = (
        "s",
        "field",
        "report",
        "margin",
        "tolerance",
        "boundary_defect",
        "deviation",
        "bound",
        "on_compact",
        "error",
    )

    def __init__(self, s: float) -> None:
        self.s: float = s
        self.field: Optional[GridField] = None
        self.report: Optional[SolveReport] = None
        self.margin: float = float("nan")
        self.tolerance: float = float("nan")
        self.boundary_defect: float = float("nan")
        self.deviation: float = float("nan")
        self.bound: float = float("nan")
        self.on_compact: Optional[Array] = None
        self.error: Optional[str] = None

    @property
    def solved(self) -> bool:
        return self.field is not None

    @property
    def sandwich_ok(self) -> bool:
        return self.solved and self.margin >= -self.tolerance

    def to_payload(self) -> StagePayload:
        return {
            "s": self.s,
            "margin": self.margin if self.solved else None,
            "tolerance": self.tolerance if self.solved else None,
            "boundary_defect": self.boundary_defect if self.solved else None,
            "deviation": self.deviation if self.solved else None,
            "bound": self.bound if self.solved else None,
            "solve": self.report.to_payload() if self.report is not None else None,
            "error": self.error,
        }


class EntireRun:
    __slots__ = ("problem", "s_values", "K", "pair", "stages", "gaps", "failed", "global_bound_ok")

    def __init__(
        self, problem: HessianProblem, s_values: Sequence[float], K: CompactBox, pair: BarrierPair  # noqa: N803
    ) -> None:
        self.problem: HessianProblem = problem
        self.s_values: List[float] = [float(s) for s in s_values]
        self.K: CompactBox = K
        self.pair: BarrierPair = pair
        self.stages: List[StageResult] = []
        self.gaps: List[float] = []
        self.failed: bool = False
        self.global_bound_ok: bool = True

    @property
    def solutions(self) -> List[GridField]:
        return [stage.field for stage in self.stages if stage.field is not None]

    @property
    def margins(self) -> List[float]:
        return [stage.margin for stage in self.stages]

    @property
    def sandwich_ok(self) -> bool:
        return all(stage.sandwich_ok for stage in self.stages if stage.solved)

    @property
    def solver_ok(self) -> bool:
        return all(stage.solved for stage in self.stages)

    def __repr__(self) -> str:
        return f"EntireRun(s={self.s_values!r}, gaps={self.gaps!r}, failed={self.failed})"


def default_s_list(env: TailEnvelope, A: AkMatrix, K: CompactBox, count: int = 3) -> List[float]:  # noqa: N803
    start = max(env.s0, 4.0 * K.radius**2 * float(np.max(A.a)))
    return [start * 2.0**i for i in range(count)]


def boundary_defect(field: GridField, A: AkMatrix) -> float:  # noqa: N803
    """Largest tau - s over the clamped boundary nodes of an ellipsoid field."""
    spec = field.spec
    if spec.s is None:
        return 0.0
    edge = field.mask == NodeTag.BOUNDARY
    return float(np.max(A.tau(spec.points()[edge]) - spec.s)) if np.any(edge) else 0.0


def sandwich_check(u_s: GridField, pair: BarrierPair) -> float:
    """Worst signed margin of lower + beta_minus <= u_s <= upper + beta_plus on the interior."""
    interior = u_s.interior
    points = u_s.spec.points()[interior]
    values = u_s.values[interior]
    below = values - (pair.lower_at(points) + pair.beta_minus)
    above = pair.upper_at(points) + pair.beta_plus - values
    return float(min(np.min(below), np.min(above)))


def _warm_start(previous: GridField, spec: GridSpec, A: AkMatrix) -> GridField:  # noqa: N803
    points = spec.points()
    values = A.tau(points)
    assert previous.spec.s is not None
    # the remainder is only trusted well inside the previous domain
    inside = (values < 0.9 * previous.spec.s) & (spec.mask() == NodeTag.INTERIOR)
    old = previous.spec
    box = GridSpec.box(old.lower, old.upper, old.nodes)
    remainder = GridField(box, previous.stencil_values() - A.tau(old.points()))
    values[inside] += remainder.sample(points[inside], method="linear")
    return GridField(spec, values)


def _solve_stage(
    problem: HessianProblem,
    s: float,
    nodes: int,
    options: Optional[SolverOptions],
    start: Optional[GridField],
) -> Tuple[GridField, SolveReport]:
    spec = GridSpec.ellipsoid(problem.A, s, nodes)
    warm = _warm_start(start, spec, problem.A) if start is not None else None
    return continuation_solve(spec, problem.f, problem.k, problem.A, options, start=warm)


async def _solve_concurrently(
    problem: HessianProblem,
    s_values: Sequence[float],
    nodes: int,
    options: Optional[SolverOptions],
    threads: Optional[int],
) -> List[object]:
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        tasks = [
            loop.run_in_executor(pool, functools.partial(_solve_stage, problem, s, nodes, options, None))
            for s in s_values
        ]
        return list(await asyncio.gather(*tasks, return_exceptions=True))


def _finish_stage(stage: StageResult, field: GridField, report: SolveReport, run: EntireRun) -> None:
    A = run.problem.A  # noqa: N806
    stage.field = field
    stage.report = report
    stage.tolerance = SANDWICH_SLACK * field.spec.h_max**2
    stage.margin = sandwich_check(field, run.pair)
    stage.boundary_defect = boundary_defect(field, A)
    # the spline window reaches past the interior, where only the continued values are smooth
    hull = GridSpec.box(field.spec.lower, field.spec.upper, field.spec.nodes)
    stage.on_compact = GridField(hull, field.stencil_values()).sample(run.K.spec.points())
    interior = field.interior
    stage.deviation = float(np.max(np.abs(field.values[interior] - A.tau(field.spec.points()[interior]))))
    stage.bound = max(abs(run.pair.beta_minus), abs(run.pair.beta_plus)) + stage.tolerance + stage.boundary_defect
    if stage.deviation > stage.bound:
        _log.warning("stage s=%.6g leaves the global bound: %.3e > %.3e", stage.s, stage.deviation, stage.bound)
        run.global_bound_ok = False
    _log.info(
        "stage s=%.6g: sandwich margin %.3e (slack %.3e), sup |u - q| = %.3e",
        stage.s,
        stage.margin,
        stage.tolerance,
        stage.deviation,
    )


def run_nested(
    problem: HessianProblem,
    s_list: Sequence[float],
    K: CompactBox,  # noqa: N803
    *,
    nodes: int = 33,
    options: Optional[SolverOptions] = None,
    pair: Optional[BarrierPair] = None,
    margin: float = 1.0,
    parallel: bool = False,
    threads: Optional[int] = None,
) -> EntireRun:
    s_values = [float(s) for s in s_list]
    if len(s_values) < 3:
        raise PreconditionError("a nested run needs at least 3 domain levels")
    if any(b <= a for a, b in zip(s_values, s_values[1:])):
        raise PreconditionError("domain levels must increase strictly")
    if s_values[0] < problem.env.s0:
        raise PreconditionError(f"the first level {s_values[0]!r} is below s0 = {problem.env.s0!r}")
    margin = max(margin, COMPACT_MARGIN_CELLS * GridSpec.ellipsoid(problem.A, s_values[0], nodes).h_max)
    reach = K.sup_tau(problem.A, margin)
    if reach >= s_values[0]:
        raise PreconditionError(
            f"K dilated by {margin:.6g} reaches tau = {reach:.6g}, outside D_s for s = {s_values[0]:.6g}"
        )

    if pair is None:
        tau_max = max(DEFAULT_TAU_MAX_FACTOR * problem.env.s0, 2.0 * s_values[-1])
        pair = build_barriers(problem.A, problem.env, problem.f, nodes=nodes, options=options, tau_max=tau_max)
    run = EntireRun(problem, s_values, K, pair)

    if parallel:
        outcomes = asyncio.run(_solve_concurrently(problem, s_values, nodes, options, threads))
        for s, outcome in zip(s_values, outcomes):
            stage = StageResult(s)
            run.stages.append(stage)
            if isinstance(outcome, NonConvergenceError):
                stage.error = str(outcome)
                run.failed = True
            elif isinstance(outcome, BaseException):
                raise outcome
            else:
                field, report = outcome  # type: ignore
                _finish_stage(stage, field, report, run)
    else:
        previous: Optional[GridField] = None
        for s in s_values:
            stage = StageResult(s)
            run.stages.append(stage)
            try:
                field, report = _solve_stage(problem, s, nodes, options, previous)
            except NonConvergenceError as exc:
                _log.warning("stage s=%.6g did not converge: %s", s, exc)
                stage.error = str(exc)
                run.failed = True
                break
            _finish_stage(stage, field, report, run)
            previous = field

    solved = [stage for stage in run.stages if stage.on_compact is not None]
    for prev, cur in zip(solved, solved[1:]):
        assert prev.on_compact is not None and cur.on_compact is not None
        run.gaps.append(float(np.max(np.abs(cur.on_compact - prev.on_compact))))
    if not (run.sandwich_ok and run.global_bound_ok):
        run.failed = True
    _log.info("nested run finished: %r", run)
    return run


def extract_limit(run: EntireRun) -> Tuple[GridField, float]:
    solved = [stage for stage in run.stages if stage.on_compact is not None]
    if len(solved) < 2:
        raise StateError("extracting a limit needs at least two solved stages")
    last = solved[-1]
    limit = GridField(run.K.spec, last.on_compact)
    deviation = float(np.max(np.abs(limit.values - run.problem.A.tau(run.K.spec.points()))))
    if not run.global_bound_ok or deviation > last.bound:
        raise ConstantsError(
            "the nested solutions leave the global bound max(|beta_minus|, |beta_plus|) + slack",
            deviation=max(deviation, max(stage.deviation for stage in solved)),
            bound=last.bound,
        )
    return limit, run.gaps[-1]


class UniquenessReport:
    __slots__ = ("difference", "tolerance", "first", "second")

    def __init__(self, difference: float, tolerance: float, first: EntireRun, second: EntireRun) -> None:
        self.difference: float = difference
        self.tolerance: float = tolerance
        self.first: EntireRun = first
        self.second: EntireRun = second

    @property
    def agrees(self) -> bool:
        return self.difference <= self.tolerance

    def __repr__(self) -> str:
        return f"UniquenessReport(difference={self.difference:.3e}, tolerance={self.tolerance:.3e})"


def uniqueness_probe(
    problem: HessianProblem,
    first: Sequence[float],
    second: Sequence[float],
    K: CompactBox,  # noqa: N803
    **kwargs: object,
) -> UniquenessReport:
    """Run two nested sequences and compare their limits on K."""
    pair = kwargs.pop("pair", None)
    run_a = run_nested(problem, first, K, pair=pair, **kwargs)  # type: ignore
    run_b = run_nested(problem, second, K, pair=run_a.pair, **kwargs)  # type: ignore
    limit_a, gap_a = extract_limit(run_a)
    limit_b, gap_b = extract_limit(run_b)
    difference = float(np.max(np.abs(limit_a.values - limit_b.values)))
    # both limits carry their own discretization error on top of the Cauchy gaps
    slack = max(run_a.stages[-1].tolerance, run_b.stages[-1].tolerance)
    tolerance = 2.0 * max(gap_a, gap_b) + slack
    report = UniquenessReport(difference, tolerance, run_a, run_b)
    _log.info("uniqueness check: %r", report)
    if not math.isfinite(difference):
        raise StateError("limits are not finite")
    return report
