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
from typing import TYPE_CHECKING

import numpy as np
from scipy import integrate, optimize

from .errors import ArgumentError, NumericError
from .fmodel import sphere_points
from .grid import GridField, GridSpec
from .symfunc import linearized_coefficients, newton_tensor_batch

__all__ = (
    "MIN_SHELLS",
    "MIN_SHELL_SAMPLES",
    "LOG_IMPROVEMENT",
    "DEGENERATE_REMAINDER",
    "AsymptoticFit",
    "RadialSource",
    "DecayTable",
    "OperatorDefect",
    "shell_radii",
    "remainder_sampler",
    "loglog_slope",
    "fit_quadratic_remainder",
    "radial_potential",
    "radial_potential_derivative",
    "decay_rate_oracle",
    "potential_solution",
    "finite_difference_derivatives",
    "derivative_decay_report",
    "linearized_operator_defect",
)

if TYPE_CHECKING:
    from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

    import numpy.typing as npt

    from .symfunc import AkMatrix

    Array = npt.NDArray[np.float64]
    Remainder = Callable[[Array], Array]

_log = logging.getLogger(__name__)

MIN_SHELLS = 4
MIN_SHELL_SAMPLES = 50
# the log-corrected model must cut the RMS by this fraction to be preferred
LOG_IMPROVEMENT = 0.2
DEGENERATE_REMAINDER = 1e-12
EXPONENT_RANGE = (1e-3, 12.0)
# log-radius window integrated numerically by the quadrature cross-check
QUAD_WINDOW = 20.0


def shell_radii(r_lo: float, r_hi: float, count: int = 8) -> Array:
    if not 0.0 < r_lo < r_hi:
        raise ArgumentError(f"shell radii need 0 < r_lo < r_hi, got {r_lo!r}, {r_hi!r}")
    return np.geomspace(r_lo, r_hi, count)


def _box_remainder(field: GridField, A: AkMatrix) -> GridField:  # noqa: N803
    spec = field.spec
    box = GridSpec.box(spec.lower, spec.upper, spec.nodes)
    return GridField(box, field.values - A.tau(spec.points()))


def remainder_sampler(
    u: Union[GridField, Remainder], A: AkMatrix, quadratic: bool = True  # noqa: N803
) -> Tuple[Remainder, float]:
    """w = u - 1/2 x^T A x as a callable plus a natural difference step.

    Callables are taken to be full solutions when ``quadratic`` is set, and
    remainders otherwise.
    """
    if not isinstance(u, GridField):
        if quadratic:
            return (lambda x: np.asarray(u(x), dtype=np.float64) - A.tau(x)), 0.0
        return (lambda x: np.asarray(u(x), dtype=np.float64)), 0.0

    spec = u.spec
    remainder = _box_remainder(u, A)
    level = spec.s

    def sample(x: Array) -> Array:
        if level is not None and np.any(A.tau(x) >= level):
            raise ArgumentError(f"shell points leave the solved domain D_{level:.6g}")
        return remainder.sample(x, method="cubic")

    return sample, spec.h_max


def loglog_slope(radii: npt.ArrayLike, values: npt.ArrayLike, log_corrected: bool = False) -> float:
    """Least-squares slope of log |values| against log r.

    With ``log_corrected`` the values are divided by ln r first.
    """
    r = np.asarray(radii, dtype=np.float64)
    v = np.abs(np.asarray(values, dtype=np.float64))
    if log_corrected:
        if np.any(r <= 1.0):
            raise ArgumentError("log-corrected slopes need radii above 1")
        v = v / np.log(r)
    if np.any(v <= 0.0) or r.size < 2:
        raise NumericError("log-log regression needs at least two positive samples", {"values": v.tolist()})
    slope, _ = np.polyfit(np.log(r), np.log(v), 1)
    return float(slope)


def _tail_fit(radii: Array, means: Array, log_corrected: bool) -> Tuple[float, float, float, float]:
    """Fit means ~ c + K r^-p (times ln r) and return (c, K, p, rms)."""
    shape = np.log(radii) if log_corrected else np.ones_like(radii)

    def solve(p: float) -> Tuple[Array, float]:
        design = np.stack([np.ones_like(radii), shape * radii**-p], axis=1)
        coeffs, *_ = np.linalg.lstsq(design, means, rcond=None)
        rms = float(np.sqrt(np.mean((design @ coeffs - means) ** 2)))
        return coeffs, rms

    result = optimize.minimize_scalar(
        lambda p: solve(p)[1], bounds=EXPONENT_RANGE, method="bounded", options={"xatol": 1e-10}
    )
    p = float(result.x)
    coeffs, rms = solve(p)
    return float(coeffs[0]), float(coeffs[1]), p, rms


class AsymptoticFit:
    """Measured b, c and decay rate of u - 1/2 x^T A x on exterior shells."""

    __slots__ = (
        "b",
        "c",
        "exponent",
        "log_flag",
        "radii",
        "shell_rms",
        "shell_sup",
        "power_rms",
        "log_rms",
    )

    def __init__(
        self,
        b: Array,
        c: float,
        exponent: float,
        log_flag: bool,
        radii: Array,
        shell_rms: Array,
        shell_sup: Array,
        power_rms: float = math.nan,
        log_rms: float = math.nan,
    ) -> None:
        self.b: Array = b
        self.c: float = c
        self.exponent: float = exponent
        self.log_flag: bool = log_flag
        self.radii: Array = radii
        self.shell_rms: Array = shell_rms
        self.shell_sup: Array = shell_sup
        self.power_rms: float = power_rms
        self.log_rms: float = log_rms

    @property
    def degenerate(self) -> bool:
        return math.isinf(self.exponent)

    def rows(self) -> List[Tuple[float, float, float]]:
        return [(float(r), float(rms), float(sup)) for r, rms, sup in zip(self.radii, self.shell_rms, self.shell_sup)]

    def to_payload(self) -> Dict[str, object]:
        return {
            "b": self.b.tolist(),
            "c": self.c,
            "exponent": self.exponent,
            "log_flag": self.log_flag,
            "power_rms": self.power_rms,
            "log_rms": self.log_rms,
            "shells": [{"r": r, "rms": rms, "sup": sup} for r, rms, sup in self.rows()],
        }

    def __repr__(self) -> str:
        return (
            f"AsymptoticFit(b={self.b.tolist()!r}, c={self.c:.6g}, exponent={self.exponent:.4g},"
            f" log_flag={self.log_flag})"
        )


def fit_quadratic_remainder(
    u: Union[GridField, Remainder],
    A: AkMatrix,  # noqa: N803
    radii: Optional[Sequence[float]] = None,
    *,
    annulus: Optional[Tuple[float, float]] = None,
    samples: int = 256,
    shells: int = 8,
) -> AsymptoticFit:
    if radii is None:
        if annulus is None:
            raise ArgumentError("either shell radii or an annulus is required")
        radii = shell_radii(annulus[0], annulus[1], shells)
    r = np.asarray(radii, dtype=np.float64)
    if r.size < MIN_SHELLS:
        raise ArgumentError(f"at least {MIN_SHELLS} shells are required, got {r.size}")
    if np.any(np.diff(r) <= 0.0) or r[0] <= 0.0:
        raise ArgumentError("shell radii must be positive and increasing")
    if r[-1] / r[0] < 2.0:
        raise ArgumentError(f"the annulus ratio {r[-1] / r[0]:.3g} is below 2")
    if samples < MIN_SHELL_SAMPLES:
        raise ArgumentError(f"shells need at least {MIN_SHELL_SAMPLES} samples, got {samples}")

    w, _ = remainder_sampler(u, A)
    n = A.n
    directions = sphere_points(n, samples)
    slopes = np.empty((r.size, n))
    means = np.empty(r.size)
    values = []
    for j, radius in enumerate(r):
        x = radius * directions
        wj = w(x)
        design = np.concatenate([np.ones((samples, 1)), x], axis=1)
        coeffs, *_ = np.linalg.lstsq(design, wj, rcond=None)
        means[j] = coeffs[0]
        slopes[j] = coeffs[1:]
        values.append((x, wj))

    # inner shells carry the decaying remainder, so b comes from the outer half
    outer = slice(r.size // 2, None)
    weights = r[outer] ** 2
    b = np.average(slopes[outer], axis=0, weights=weights)

    spread = float(np.max(np.abs(means - means[-1])))
    if spread <= DEGENERATE_REMAINDER:
        c = float(np.average(means[outer], weights=weights))
        log_flag = False
        power_rms = log_rms = 0.0
    else:
        c_power, _, _, power_rms = _tail_fit(r, means, log_corrected=False)
        c_log, _, _, log_rms = _tail_fit(r, means, log_corrected=True)
        log_flag = bool(np.all(r > 1.0)) and log_rms <= (1.0 - LOG_IMPROVEMENT) * power_rms
        c = c_log if log_flag else c_power

    shell_rms = np.empty(r.size)
    shell_sup = np.empty(r.size)
    for j, (x, wj) in enumerate(values):
        rest = wj - x @ b - c
        shell_rms[j] = float(np.sqrt(np.mean(rest**2)))
        shell_sup[j] = float(np.max(np.abs(rest)))

    if np.max(shell_sup) <= DEGENERATE_REMAINDER:
        exponent = math.inf
    else:
        exponent = -loglog_slope(r, shell_sup, log_corrected=log_flag)
    fit = AsymptoticFit(b, c, exponent, log_flag, r, shell_rms, shell_sup, power_rms, log_rms)
    _log.info("fitted %r over r in [%.4g, %.4g]", fit, r[0], r[-1])
    return fit


class RadialSource:
    """Radial source g(s) = s^-delta outside the ball of radius r0."""

    __slots__ = ("delta", "n", "r0")

    def __init__(self, delta: float, n: int, r0: float = 1.0) -> None:
        if not delta > 2.0:
            raise ArgumentError(f"the source exponent must exceed 2, got {delta!r}")
        if n < 3:
            raise ArgumentError(f"radial potentials need n >= 3, got {n}")
        if not r0 > 0.0:
            raise ArgumentError("r0 must be positive")
        self.delta: float = float(delta)
        self.n: int = n
        self.r0: float = float(r0)

    def g(self, s: npt.ArrayLike) -> Array:
        return np.asarray(s, dtype=np.float64) ** -self.delta

    def __repr__(self) -> str:
        return f"RadialSource(delta={self.delta!r}, n={self.n}, r0={self.r0!r})"


def _check_radius(src: RadialSource, r: float) -> None:
    if not r > src.r0:
        raise ArgumentError(f"r = {r!r} must lie outside r0 = {src.r0!r}")


def _flux_quad(src: RadialSource, r: float) -> float:
    # s = e^u turns the flux integrand into a plain exponential
    m = src.n - src.delta
    value, _ = integrate.quad(
        lambda u: math.exp(m * u), math.log(src.r0), math.log(r), epsabs=0.0, epsrel=1e-13, limit=200
    )
    return value


def radial_potential_derivative(src: RadialSource, r: float, method: str = "auto") -> float:
    """h'(r) = r^(1-n) * int_r0^r s^(n-1) g(s) ds."""
    _check_radius(src, r)
    n, delta, r0 = src.n, src.delta, src.r0
    if method not in ("auto", "closed", "quad"):
        raise ArgumentError(f"unknown method {method!r}")
    if method == "quad":
        return r ** (1 - n) * _flux_quad(src, r)
    m = n - delta
    if m == 0:
        return r ** (1 - n) * math.log(r / r0)
    return (r ** (1 - delta) - r0**m * r ** (1 - n)) / m


def radial_potential(src: RadialSource, r: float, method: str = "auto") -> float:
    """The radial solution of (r^(n-1) h')' = r^(n-1) g with h(infinity) = 0."""
    _check_radius(src, r)
    n, delta, r0 = src.n, src.delta, src.r0
    if method not in ("auto", "closed", "quad"):
        raise ArgumentError(f"unknown method {method!r}")
    if method == "quad":
        # t = r e^v on a bounded window, closed form past r e^QUAD_WINDOW
        value, _ = integrate.quad(
            lambda v: radial_potential_derivative(src, r * math.exp(v), "quad") * r * math.exp(v),
            0.0,
            QUAD_WINDOW,
            epsabs=0.0,
            epsrel=1e-11,
            limit=400,
        )
        return radial_potential(src, r * math.exp(QUAD_WINDOW), "closed") - value
    m = n - delta
    if m == 0:
        p = n - 2
        return -(r ** (2 - n)) * (math.log(r / r0) / p + 1.0 / p**2)
    return -(r ** (2 - delta) / (delta - 2) - r0**m * r ** (2 - n) / (n - 2)) / m


def decay_rate_oracle(src: RadialSource) -> Tuple[float, bool]:
    return min(src.delta, src.n) - 2.0, src.delta == src.n


def potential_solution(src: RadialSource, A: AkMatrix) -> Remainder:  # noqa: N803
    """1/2 x^T A x plus the radial potential of src, as a callable on points."""
    profile = np.vectorize(lambda r: radial_potential(src, float(r)), otypes=[np.float64])

    def u(x: Array) -> Array:
        points = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return A.tau(points) + profile(np.linalg.norm(points, axis=1))

    return u


def _difference_stencils(points: Array, step: float) -> Tuple[Array, List[Tuple[int, int, int]]]:
    """All points needed for central first and second differences."""
    n = points.shape[1]
    eye = np.eye(n) * step
    shifted = [points]
    for i in range(n):
        shifted.append(points + eye[i])
        shifted.append(points - eye[i])
    crosses = []
    for i in range(n):
        for j in range(i + 1, n):
            base = len(shifted)
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                shifted.append(points + si * eye[i] + sj * eye[j])
            crosses.append((i, j, base))
    return np.concatenate(shifted, axis=0), crosses


def finite_difference_derivatives(w: Remainder, points: Array, step: float) -> Tuple[Array, Array, Array]:
    """Values, central-difference gradients and Hessians of w at the points."""
    m, n = points.shape
    stacked, crosses = _difference_stencils(points, step)
    data = w(stacked).reshape(-1, m)
    centre = data[0]
    grad = np.empty((m, n))
    hess = np.empty((m, n, n))
    for i in range(n):
        plus, minus = data[1 + 2 * i], data[2 + 2 * i]
        grad[:, i] = (plus - minus) / (2.0 * step)
        hess[:, i, i] = (plus - 2.0 * centre + minus) / step**2
    for i, j, base in crosses:
        pp, pm, mp, mm = data[base : base + 4]
        hess[:, i, j] = hess[:, j, i] = (pp - pm - mp + mm) / (4.0 * step**2)
    return centre, grad, hess


def _default_step(natural: float, r: Array) -> Array:
    if natural > 0.0:
        return np.full(r.shape, natural)
    return 1e-3 * r


class DecayTable:
    __slots__ = ("radii", "sup_w", "sup_grad", "sup_hess", "slopes")

    def __init__(self, radii: Array, sup_w: Array, sup_grad: Array, sup_hess: Array) -> None:
        self.radii: Array = radii
        self.sup_w: Array = sup_w
        self.sup_grad: Array = sup_grad
        self.sup_hess: Array = sup_hess
        self.slopes: Tuple[float, float, float] = tuple(  # type: ignore
            _sentinel_slope(radii, column) for column in (sup_w, sup_grad, sup_hess)
        )

    @property
    def slope_gaps(self) -> Tuple[float, float]:
        s0, s1, s2 = self.slopes
        return s0 - s1, s1 - s2

    def rows(self) -> List[Tuple[float, float, float, float]]:
        return [
            (float(r), float(a), float(b), float(c))
            for r, a, b, c in zip(self.radii, self.sup_w, self.sup_grad, self.sup_hess)
        ]

    def to_payload(self) -> Dict[str, object]:
        return {
            "slopes": list(self.slopes),
            "rows": [{"r": r, "w": a, "grad": b, "hess": c} for r, a, b, c in self.rows()],
        }

    def __repr__(self) -> str:
        return f"DecayTable(slopes={self.slopes!r})"


def _sentinel_slope(radii: Array, column: Array) -> float:
    if np.max(column) <= 1e-13:
        return -math.inf
    return loglog_slope(radii, column)


def derivative_decay_report(
    u: Union[GridField, Remainder],
    A: AkMatrix,  # noqa: N803
    radii: Sequence[float],
    *,
    samples: int = 128,
    step: Optional[float] = None,
    quadratic: bool = True,
) -> DecayTable:
    """Shell sups of |w|, |grad w| and |D^2 w| with their log-log slopes."""
    r = np.asarray(radii, dtype=np.float64)
    w, natural = remainder_sampler(u, A, quadratic)
    steps = np.full(r.shape, step) if step is not None else _default_step(natural, r)
    directions = sphere_points(A.n, samples)
    sup_w, sup_grad, sup_hess = np.empty(r.size), np.empty(r.size), np.empty(r.size)
    for j, radius in enumerate(r):
        values, grad, hess = finite_difference_derivatives(w, radius * directions, float(steps[j]))
        sup_w[j] = np.max(np.abs(values))
        sup_grad[j] = np.max(np.linalg.norm(grad, axis=1))
        sup_hess[j] = np.max(np.linalg.norm(hess, axis=(1, 2)))
    table = DecayTable(r, sup_w, sup_grad, sup_hess)
    _log.debug("derivative decay: %r", table)
    return table


class OperatorDefect:
    __slots__ = ("radii", "defect", "slope")

    def __init__(self, radii: Array, defect: Array) -> None:
        self.radii: Array = radii
        self.defect: Array = defect
        self.slope: float = _sentinel_slope(radii, defect)

    def to_payload(self) -> Dict[str, object]:
        rows = [{"r": float(r), "defect": float(d)} for r, d in zip(self.radii, self.defect)]
        return {"slope": self.slope, "rows": rows}

    def __repr__(self) -> str:
        return f"OperatorDefect(slope={self.slope!r})"


def linearized_operator_defect(
    u: Union[GridField, Remainder],
    A: AkMatrix,  # noqa: N803
    radii: Sequence[float],
    *,
    samples: int = 128,
    step: Optional[float] = None,
) -> OperatorDefect:
    """Per shell max |F_ij(D^2 u) - F_ii(A) delta_ij| with F_ij = T_(k-1)/k."""
    r = np.asarray(radii, dtype=np.float64)
    w, natural = remainder_sampler(u, A)
    steps = np.full(r.shape, step) if step is not None else _default_step(natural, r)
    directions = sphere_points(A.n, samples)
    k = A.k
    frozen = np.diag(linearized_coefficients(A.a, k))
    defect = np.empty(r.size)
    for j, radius in enumerate(r):
        _, _, hess = finite_difference_derivatives(w, radius * directions, float(steps[j]))
        coefficients = newton_tensor_batch(A.matrix + hess, k) / k
        defect[j] = float(np.max(np.abs(coefficients - frozen)))
    return OperatorDefect(r, defect)
