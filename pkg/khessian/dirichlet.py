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

import logging
from typing import TYPE_CHECKING

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import splu

from .enums import DomainKind, NodeTag
from .errors import ArgumentError, NonConvergenceError, PreconditionError
from .fmodel import Blend, Constant
from .grid import GridField, hessian_stack
from .symfunc import SIGMA_MIN, newton_tensor_batch, sigma_sequence
from .utils import Stopwatch

__all__ = (
    "SolverOptions",
    "SolveReport",
    "residual",
    "newton_solve",
    "continuation_solve",
    "comparison_check",
    "initial_guess",
    "jacobian",
)

if TYPE_CHECKING:
    from typing import Callable, List, Optional, Sequence, Tuple

    import numpy.typing as npt
    from scipy.sparse import spmatrix

    from .fmodel import FModel
    from .grid import GridSpec
    from .symfunc import AkMatrix
    from .types.reports import SolveReportPayload

    Array = npt.NDArray[np.float64]

_log = logging.getLogger(__name__)


class SolverOptions:
    __slots__ = (
        "tol_nonlin",
        "sigma_min",
        "max_iterations",
        "max_halvings",
        "armijo",
        "stages",
        "min_step",
    )

    def __init__(
        self,
        *,
        tol_nonlin: float = 1e-9,
        sigma_min: float = SIGMA_MIN,
        max_iterations: int = 100,
        max_halvings: int = 30,
        armijo: float = 1e-4,
        stages: Sequence[float] = (0.25, 0.5, 0.75, 1.0),
        min_step: float = 1.0 / 64.0,
    ) -> None:
        if tol_nonlin <= 0 or sigma_min <= 0:
            raise ArgumentError("tolerances must be positive")
        if max_iterations < 1 or max_halvings < 0:
            raise ArgumentError("iteration limits must be positive")
        if not stages or stages[-1] != 1.0 or any(b <= a for a, b in zip(stages, stages[1:])):
            raise ArgumentError("continuation stages must increase and end at 1")
        self.tol_nonlin: float = tol_nonlin
        self.sigma_min: float = sigma_min
        self.max_iterations: int = max_iterations
        self.max_halvings: int = max_halvings
        self.armijo: float = armijo
        self.stages: Tuple[float, ...] = tuple(stages)
        self.min_step: float = min_step

    def replace(self, **changes: float) -> SolverOptions:
        values = {name: getattr(self, name) for name in self.__slots__}
        values.update(changes)
        return SolverOptions(**values)

    def __repr__(self) -> str:
        inner = ", ".join(f"{name}={getattr(self, name)!r}" for name in self.__slots__)
        return f"SolverOptions({inner})"


class SolveReport:
    __slots__ = (
        "iterations",
        "residual",
        "damping_history",
        "min_sigma",
        "cone_violations",
        "wall_time",
        "converged",
        "stages",
    )

    def __init__(self) -> None:
        self.iterations: int = 0
        self.residual: float = float("inf")
        self.damping_history: List[float] = []
        self.min_sigma: float = float("nan")
        self.cone_violations: int = 0
        self.wall_time: float = 0.0
        self.converged: bool = False
        self.stages: List[float] = []

    def merge(self, other: SolveReport) -> None:
        self.iterations += other.iterations
        self.residual = other.residual
        self.damping_history.extend(other.damping_history)
        self.min_sigma = other.min_sigma
        self.cone_violations = other.cone_violations
        self.wall_time += other.wall_time
        self.converged = other.converged

    def to_payload(self) -> SolveReportPayload:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "damping_history": list(self.damping_history),
            "min_sigma": self.min_sigma,
            "cone_violations": self.cone_violations,
            "converged": self.converged,
            "stages": list(self.stages),
        }

    def __repr__(self) -> str:
        return (
            f"SolveReport(iterations={self.iterations}, residual={self.residual:.3e}, "
            f"cone_violations={self.cone_violations}, converged={self.converged})"
        )


class _State:
    __slots__ = ("values", "residual", "sigmas", "violations", "norm2", "sup")

    def __init__(self, values: Array, residual: Array, sigmas: Array, violations: int) -> None:
        self.values: Array = values
        self.residual: Array = residual
        self.sigmas: Array = sigmas
        self.violations: int = violations
        self.norm2: float = float(residual @ residual)
        self.sup: float = float(np.max(np.abs(residual))) if residual.size else 0.0


def _rhs_root(f: FModel, field: GridField, k: int) -> Array:
    points = field.spec.points()[field.interior]
    values = f.values(points)
    if np.any(values <= 0.0):
        raise PreconditionError("the right-hand side must be positive on the interior nodes")
    return values ** (1.0 / k)


def _evaluate(field: GridField, rhs_root: Array, k: int, sigma_min: float) -> _State:
    hessians = hessian_stack(field)
    sigmas = sigma_sequence(hessians, k)
    outside = np.any(sigmas[:, 1:] <= 0.0, axis=1) | (sigmas[:, k] < sigma_min)
    operator = np.maximum(sigmas[:, k], sigma_min) ** (1.0 / k)
    return _State(field.values, operator - rhs_root, sigmas, int(np.count_nonzero(outside)))


def residual(u: GridField, f: FModel, k: int, sigma_min: float = SIGMA_MIN) -> GridField:
    """F(D^2 u) - f^(1/k) on the interior nodes, zero elsewhere."""
    state = _evaluate(u, _rhs_root(f, u, k), k, sigma_min)
    if state.violations:
        _log.debug("residual evaluated with %d cone violations", state.violations)
    values = np.zeros(u.spec.size)
    values[u.interior] = state.residual
    return GridField(u.spec, values, u.mask, 0.0 if u.spec.kind is DomainKind.ELLIPSOID else None)


def jacobian(field: GridField, k: int, sigma_min: float = SIGMA_MIN) -> spmatrix:
    """Sparse derivative of the interior residual with respect to the interior values."""
    spec = field.spec
    interior = field.interior
    hessians = hessian_stack(field)
    sigmas = sigma_sequence(hessians, k)
    tensor = newton_tensor_batch(hessians, k, sigmas)
    floored = np.maximum(sigmas[:, k], sigma_min)
    grad = (floored ** (1.0 / k - 1.0) / k)[:, None, None] * tensor

    position = np.full(spec.size, -1, dtype=np.intp)
    position[interior] = np.arange(interior.size)
    h = spec.h
    strides = spec.strides
    rows: List[npt.NDArray[np.intp]] = []
    cols: List[npt.NDArray[np.intp]] = []
    data: List[Array] = []

    def add(offset: int, weight: Array) -> None:
        target = position[interior + offset]
        keep = target >= 0
        rows.append(np.flatnonzero(keep))
        cols.append(target[keep])
        data.append(weight[keep])

    center = np.zeros(interior.size)
    for i in range(spec.n):
        weight = grad[:, i, i] / (h[i] * h[i])
        add(strides[i], weight)
        add(-strides[i], weight)
        center -= 2.0 * weight
    for i in range(spec.n):
        for j in range(i + 1, spec.n):
            weight = 2.0 * grad[:, i, j] / (4.0 * h[i] * h[j])
            si, sj = strides[i], strides[j]
            add(si + sj, weight)
            add(-si - sj, weight)
            add(si - sj, -weight)
            add(-si + sj, -weight)
    add(0, center)
    return csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(interior.size, interior.size),
    )


def newton_solve(
    u0: GridField,
    f: FModel,
    k: int,
    tol_nonlin: Optional[float] = None,
    options: Optional[SolverOptions] = None,
) -> Tuple[GridField, SolveReport]:
    options = options or SolverOptions()
    tol = options.tol_nonlin if tol_nonlin is None else tol_nonlin
    if not 1 <= k <= u0.spec.n:
        raise ArgumentError(f"k must lie in [1, {u0.spec.n}], got {k}")
    report = SolveReport()
    rhs_root = _rhs_root(f, u0, k)
    interior = u0.interior
    field = u0.copy()

    with Stopwatch() as watch:
        state = _evaluate(field, rhs_root, k, options.sigma_min)
        while True:
            report.residual = state.sup
            report.cone_violations = state.violations
            report.min_sigma = float(np.min(state.sigmas[:, k])) if interior.size else float("nan")
            _log.debug(
                "newton iteration %d: residual %.3e, %d cone violations",
                report.iterations,
                state.sup,
                state.violations,
            )
            if state.sup <= tol and state.violations == 0:
                report.converged = True
                break
            if report.iterations >= options.max_iterations:
                break
            try:
                step = splu(jacobian(field, k, options.sigma_min).tocsc()).solve(-state.residual)
            except RuntimeError as exc:
                _log.debug("jacobian factorization failed: %s", exc)
                break
            if not np.all(np.isfinite(step)):
                _log.debug("newton step is not finite")
                break
            accepted = _line_search(field, step, state, rhs_root, k, options)
            report.iterations += 1
            if accepted is None:
                break
            t, state = accepted
            report.damping_history.append(t)
            field = field.with_values(state.values)

    report.wall_time = watch.elapsed
    if not report.converged:
        raise NonConvergenceError(
            f"newton stalled after {report.iterations} iterations with residual {report.residual:.3e}",
            report,
        )
    _log.debug("newton converged in %d iterations", report.iterations)
    return field, report


def _line_search(
    field: GridField,
    step: Array,
    state: _State,
    rhs_root: Array,
    k: int,
    options: SolverOptions,
) -> Optional[Tuple[float, _State]]:
    interior = field.interior
    t = 1.0
    for _ in range(options.max_halvings + 1):
        values = state.values.copy()
        values[interior] += t * step
        trial = _evaluate(field.with_values(values), rhs_root, k, options.sigma_min)
        sufficient = trial.norm2 <= (1.0 - 2.0 * options.armijo * t) * state.norm2
        # an admissible iterate only accepts admissible trials; a start outside the cone may not add violations
        admissible = trial.violations == 0 or (state.violations > 0 and trial.violations <= state.violations)
        if sufficient and admissible:
            return t, trial
        t *= 0.5
    return None


def initial_guess(
    spec: GridSpec,
    A: AkMatrix,  # noqa: N803
    boundary: Optional[Callable[[Array], Array]] = None,
    boundary_value: Optional[float] = None,
) -> GridField:
    """The quadratic 1/2 x^T A x, shifted to meet constant ellipsoid data."""
    points = spec.points()
    values = A.tau(points)
    if spec.kind is DomainKind.ELLIPSOID:
        assert spec.s is not None
        level = spec.s if boundary_value is None else boundary_value
        return GridField(spec, values + (level - spec.s), boundary_value=level)
    field = GridField(spec, values)
    if boundary is not None:
        edge = field.mask == NodeTag.BOUNDARY
        field.values[edge] = np.asarray(boundary(points[edge]), dtype=np.float64)
    return field


def continuation_solve(
    spec: GridSpec,
    f: FModel,
    k: int,
    A: AkMatrix,  # noqa: N803
    options: Optional[SolverOptions] = None,
    *,
    boundary: Optional[Callable[[Array], Array]] = None,
    boundary_value: Optional[float] = None,
    start: Optional[GridField] = None,
) -> Tuple[GridField, SolveReport]:
    options = options or SolverOptions()
    if not f.inf_bound > 0.0:
        raise PreconditionError(f"inf f = {f.inf_bound!r} must be positive")
    if A.n != spec.n:
        raise ArgumentError(f"A has dimension {A.n} but the grid has dimension {spec.n}")

    report = SolveReport()
    if start is not None:
        try:
            field, stage_report = newton_solve(start, f, k, options=options)
        except NonConvergenceError as exc:
            _log.info("warm start failed (%s); falling back to continuation", exc)
        else:
            report.merge(stage_report)
            report.stages.append(1.0)
            return field, report

    field = initial_guess(spec, A, boundary, boundary_value)
    field, stage_report = newton_solve(field, Constant(1.0), k, options=options)
    report.merge(stage_report)
    report.stages.append(0.0)
    if f.is_unit():
        return field, report

    current = 0.0
    width = options.stages[0]
    while current < 1.0:
        target = _next_stage(current, width, options.stages)
        try:
            field_t, stage_report = newton_solve(field, Blend(f, target), k, options=options)
        except NonConvergenceError as exc:
            report.merge(exc.report)
            width = (target - current) / 2.0
            _log.info("continuation stage t=%.4f failed; bisecting to width %.4f", target, width)
            if width < options.min_step:
                raise NonConvergenceError(
                    f"continuation stalled at t={current:.4f} (minimum step {options.min_step} reached)",
                    report,
                ) from None
            continue
        report.merge(stage_report)
        report.stages.append(target)
        field = field_t
        current = target
        width = options.stages[0]
        _log.debug("continuation reached t=%.4f", current)

    _log.info(
        "continuation solved in %d stages and %d newton iterations",
        len(report.stages),
        report.iterations,
    )
    return field, report


def _next_stage(current: float, width: float, stages: Sequence[float]) -> float:
    target = min(current + width, 1.0)
    # snap to the scheduled stage if it falls inside the step
    for stage in stages:
        if current < stage <= target:
            return stage
    return target


def comparison_check(u: GridField, v: GridField) -> float:
    if not u.spec.same_as(v.spec) or not np.array_equal(u.mask, v.mask):
        raise ArgumentError("comparison needs fields on the same grid and mask")
    interior = u.interior
    return float(np.min(u.values[interior] - v.values[interior]))
