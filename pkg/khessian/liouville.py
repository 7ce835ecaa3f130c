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
import math
import warnings
from typing import TYPE_CHECKING

import numpy as np

from .asymptotics import finite_difference_derivatives, remainder_sampler
from .errors import ArgumentError, KHessianWarning, NumericError
from .fmodel import sphere_points
from .grid import GridField, GridSpec

__all__ = (
    "DEFAULT_ALPHA",
    "RescaleReport",
    "GrowthConstants",
    "rescale",
    "level_set_bounds",
    "hessian_decay",
    "growth_constants",
    "field_radius",
)

if TYPE_CHECKING:
    from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

    import numpy.typing as npt

    from .symfunc import AkMatrix

    Array = npt.NDArray[np.float64]
    Solution = Callable[[Array], Array]

_log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.5
GROWTH_TOLERANCE = 1e-12


def _evaluate(u: Union[GridField, Solution], points: Array) -> Array:
    if isinstance(u, GridField):
        level = u.spec.s
        if level is not None and u.spec.a is not None:
            if np.any(0.5 * (points**2) @ u.spec.a >= level):
                raise ArgumentError(f"sample points leave the solved domain D_{level:.6g}")
        return u.sample(points, method="cubic")
    return np.asarray(u(points), dtype=np.float64)


def field_radius(u: GridField) -> float:
    """Radius of the largest centred ball on which the field can be sampled."""
    spec = u.spec
    cell = spec.h_max
    if spec.s is not None and spec.a is not None:
        return math.sqrt(2.0 * spec.s / float(np.max(spec.a))) - 2.0 * cell
    return float(min(np.min(-spec.lower), np.min(spec.upper))) - 2.0 * cell


def rescale(
    u: Union[GridField, Solution],
    R: float,  # noqa: N803
    *,
    half_width: float = 1.5,
    nodes: int = 33,
    n: Optional[int] = None,
) -> GridField:
    """v(x) = (u(Rx) - R^2) / R^2 on a cube of the given half width."""
    if not R > 0.0:
        raise ArgumentError(f"R must be positive, got {R!r}")
    if isinstance(u, GridField):
        n = u.spec.n
    elif n is None:
        raise ArgumentError("the dimension is required when rescaling a callable")
    spec = GridSpec.cube(n, half_width, nodes)
    values = (_evaluate(u, R * spec.points()) - R**2) / R**2
    return GridField(spec, values)


def level_set_bounds(
    u: Union[GridField, Solution],
    R: float,  # noqa: N803
    A1: float,  # noqa: N803
    A2: float,  # noqa: N803
    B: float,  # noqa: N803
    *,
    R0: float = 0.0,  # noqa: N803
    nodes: int = 65,
    n: Optional[int] = None,
) -> Tuple[float, float]:
    """Empirical inner and outer radii of {v < 0} at scale R.

    Inclusions predicted by the growth constants are checked to one grid
    cell; failures are reported as warnings.
    """
    if not (A1 > 0.0 and A2 >= A1 and B >= 0.0):
        raise ArgumentError(f"growth constants need 0 < A1 <= A2 and B >= 0, got {A1!r}, {A2!r}, {B!r}")
    half_width = 1.25 * math.sqrt(1.0 / A1)
    v = rescale(u, R, half_width=half_width, nodes=nodes, n=n)
    spec = v.spec
    points = spec.points()
    radius = np.linalg.norm(points, axis=1)
    inside = v.values < 0.0
    cell = spec.h_max * math.sqrt(spec.n)

    outside_radius = radius[~inside]
    inner = float(np.min(outside_radius)) if outside_radius.size else half_width
    outer = float(np.max(radius[inside])) if np.any(inside) else 0.0

    # u(Rx) = R^2 (v + 1), so the growth check runs on the rescaled samples
    far = R * radius >= R0
    values = R**2 * (v.values + 1.0)
    squared = (R * radius) ** 2
    scale = GROWTH_TOLERANCE * max(1.0, float(np.max(np.abs(values[far])))) if np.any(far) else 0.0
    growth_ok = bool(
        np.all(A1 * squared[far] <= values[far] + scale) and np.all(values[far] <= A2 * squared[far] + B + scale)
    )
    if not growth_ok:
        _warn(f"growth bounds A1={A1:.6g}, A2={A2:.6g}, B={B:.6g} fail on the samples at R={R:.6g}")

    inner_bound = math.sqrt(max(1.0 / A2 - B / (A2 * R**2), 0.0))
    outer_bound = math.sqrt(1.0 / A1)
    if inner < inner_bound - cell or outer > outer_bound + cell:
        _warn(
            f"level set at R={R:.6g} has radii ({inner:.6g}, {outer:.6g}) outside"
            f" the predicted ({inner_bound:.6g}, {outer_bound:.6g})"
        )
    _log.debug("level set radii at R=%.6g: inner %.6g outer %.6g", R, inner, outer)
    return inner, outer


def _warn(message: str) -> None:
    _log.warning(message)
    warnings.warn(message, KHessianWarning, stacklevel=3)


class GrowthConstants:
    __slots__ = ("A1", "A2", "B", "R0")

    def __init__(self, A1: float, A2: float, B: float, R0: float) -> None:  # noqa: N803
        self.A1: float = A1
        self.A2: float = A2
        self.B: float = B
        self.R0: float = R0

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.A1, self.A2, self.B

    def __repr__(self) -> str:
        return f"GrowthConstants(A1={self.A1:.6g}, A2={self.A2:.6g}, B={self.B:.6g}, R0={self.R0:.6g})"


def growth_constants(
    u: Union[GridField, Solution],
    R0: float,  # noqa: N803
    *,
    radius: Optional[float] = None,
    n: Optional[int] = None,
    samples: int = 128,
    shells: int = 8,
) -> GrowthConstants:
    """Empirical A1, A2 and B with A1 |x|^2 <= u <= A2 |x|^2 + B for R0 <= |x| <= radius."""
    if isinstance(u, GridField):
        n = u.spec.n
        radius = field_radius(u) if radius is None else radius
    elif n is None or radius is None:
        raise ArgumentError("callables need an explicit dimension and sampling radius")
    if not 0.0 < R0 < radius:
        raise ArgumentError(f"need 0 < R0 < radius, got R0={R0!r}, radius={radius!r}")
    radii = np.geomspace(R0, radius, shells)
    directions = sphere_points(n, samples)
    points = (radii[:, np.newaxis, np.newaxis] * directions).reshape(-1, n)
    values = _evaluate(u, points)
    squared = np.sum(points**2, axis=1)
    ratio = values / squared
    a1 = float(np.min(ratio))
    if not a1 > 0.0:
        raise NumericError("u is not bounded below by a positive quadratic", {"A1": a1})
    # the outer shells fix the leading growth and B absorbs the rest
    outer = ratio.reshape(shells, samples)[shells // 2 :]
    a2 = float(np.max(outer))
    b = max(0.0, float(np.max(values - a2 * squared)))
    constants = GrowthConstants(a1, max(a2, a1), b, R0)
    _log.info("estimated %r", constants)
    return constants


class RescaleReport:
    """Per-scale Hessian deviation and Hoelder proxy of a solution."""

    __slots__ = ("R_values", "alpha", "hessian_deviation", "holder_proxy", "level_radii", "noise_floor")

    def __init__(self, R_values: Array, alpha: float) -> None:  # noqa: N803
        self.R_values: Array = R_values
        self.alpha: float = alpha
        self.hessian_deviation: Array = np.zeros(R_values.size)
        self.holder_proxy: Array = np.zeros(R_values.size)
        self.level_radii: List[Tuple[float, float]] = []
        self.noise_floor: float = 0.0

    def nonincreasing(self, tolerance: Optional[float] = None) -> bool:
        slack = self.noise_floor if tolerance is None else tolerance
        return bool(
            np.all(np.diff(self.hessian_deviation) <= slack) and np.all(np.diff(self.holder_proxy) <= slack)
        )

    def rows(self) -> List[Tuple[float, float, float]]:
        return [
            (float(r), float(d), float(h)) for r, d, h in zip(self.R_values, self.hessian_deviation, self.holder_proxy)
        ]

    def to_payload(self) -> Dict[str, object]:
        return {
            "alpha": self.alpha,
            "noise_floor": self.noise_floor,
            "rows": [{"R": r, "hessian_deviation": d, "holder_proxy": h} for r, d, h in self.rows()],
            "level_radii": [list(pair) for pair in self.level_radii],
        }

    def __repr__(self) -> str:
        return f"RescaleReport(R={self.R_values.tolist()!r}, deviation={self.hessian_deviation.tolist()!r})"


def _holder_proxy(points: Array, hessians: Array, separation: float, alpha: float) -> float:
    flat = hessians.reshape(hessians.shape[0], -1)
    distance = np.linalg.norm(points[:, np.newaxis, :] - points[np.newaxis, :, :], axis=2)
    jump = np.linalg.norm(flat[:, np.newaxis, :] - flat[np.newaxis, :, :], axis=2)
    far = distance >= separation
    if not np.any(far):
        return 0.0
    return float(np.max(jump[far] / distance[far] ** alpha))


def hessian_decay(
    u: Union[GridField, Solution],
    R_list: Sequence[float],  # noqa: N803
    A: AkMatrix,  # noqa: N803
    alpha: float = DEFAULT_ALPHA,
    *,
    samples: int = 48,
    step: Optional[float] = None,
    growth: Optional[GrowthConstants] = None,
) -> RescaleReport:
    """sup |D^2 u - A| and R^alpha times the Hoelder proxy on the band at each scale.

    The band is rho R / 2 <= |x| <= rho R with rho = 1 / sqrt(4 max a_i),
    the ball on which the rescaled Hessian stays bounded.
    """
    R = np.asarray(R_list, dtype=np.float64)  # noqa: N806
    if np.any(np.diff(R) <= 0.0) or R[0] <= 0.0:
        raise ArgumentError("R values must be positive and increasing")
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"alpha must lie in (0, 1), got {alpha!r}")
    w, natural = remainder_sampler(u, A)
    rho = 1.0 / math.sqrt(4.0 * float(np.max(A.a)))
    directions = sphere_points(A.n, samples)
    report = RescaleReport(R, alpha)
    floor = 0.0
    for j, scale in enumerate(R):
        outer = rho * scale
        h = step if step is not None else (natural if natural > 0.0 else outer / 16.0)
        band = np.linspace(0.5 * outer, outer, 3)
        points = (band[:, np.newaxis, np.newaxis] * directions).reshape(-1, A.n)
        values, _, hess = finite_difference_derivatives(w, points, h)
        report.hessian_deviation[j] = float(np.max(np.linalg.norm(hess, axis=(1, 2))))
        report.holder_proxy[j] = scale**alpha * _holder_proxy(points, hess, outer / 4.0, alpha)
        sup_u = float(np.max(np.abs(values + A.tau(points))))
        floor = max(floor, 64.0 * np.finfo(np.float64).eps * sup_u / h**2)
        if growth is not None:
            report.level_radii.append(level_set_bounds(u, float(scale), *growth.as_tuple(), R0=growth.R0, n=A.n))
    report.noise_floor = floor
    _log.info("hessian decay: %r (noise floor %.3e)", report, floor)
    return report
