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
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicHermiteSpline

from .dirichlet import SolverOptions, continuation_solve
from .errors import ArgumentError, ConstantsError, NumericError
from .fmodel import FromCallable, bump_profile, lnk_norm, sphere_points
from .grid import GridSpec
from .symfunc import hk as hk_value
from .symfunc import sigma_k, sigma_partial, sigma_sequence
from .utils import unit_ball_volume

__all__ = (
    "KNOT_RATIO",
    "QUAD_RTOL",
    "RadialProfile",
    "BarrierConstants",
    "BarrierPair",
    "RadialCheck",
    "sigma_k_radial",
    "radial_hessians",
    "barrier_kappa",
    "build_upper_barrier",
    "build_lower_profile",
    "build_lower_barrier",
    "select_H2",
    "h_margin",
    "build_v3",
    "v3_normalizer",
    "alexandrov_constant",
    "choose_c0",
    "bump_eta",
    "barrier_constants",
    "beta_bounds",
    "build_barriers",
    "check_radial_subsolution",
    "jump_slopes",
)

if TYPE_CHECKING:
    from os import PathLike
    from typing import Callable, Optional, Tuple, Union

    import numpy.typing as npt

    from .fmodel import FModel, TailEnvelope
    from .grid import GridField
    from .symfunc import AkMatrix
    from .types.reports import BarrierConstantsPayload

    Array = npt.NDArray[np.float64]

_log = logging.getLogger(__name__)

KNOT_RATIO = 1.05
QUAD_RTOL = 1e-10
BRANCH_TOLERANCE = 1e-12
H2_MARGIN = 1.1
DEFAULT_TAU_MAX_FACTOR = 1000.0
MAX_C0_DOUBLINGS = 60


def _integrate(func: Callable[[float], float], lo: float, hi: float, what: str) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, error = quad(func, lo, hi, epsabs=1e-14, epsrel=QUAD_RTOL, limit=200)
        except IntegrationWarning as exc:
            raise NumericError(
                f"quadrature of {what} on [{lo:.6g}, {hi:.6g}] failed: {exc}",
                {"lower": lo, "upper": hi},
            ) from None
    if not math.isfinite(value):
        raise NumericError(f"quadrature of {what} is not finite", {"lower": lo, "upper": hi})
    _log.debug("quad %s on [%.4g, %.4g] = %.12g (error %.2e)", what, lo, hi, value, error)
    return value


class EnvelopeODE:
    """Closed-form solution of y + (tau / kappa) y' = 1 + sign C0 tau^(-beta/2), y = (u')^k.

    The integration constant H is added to tau^kappa y at tau = s0.
    """

    __slots__ = ("kappa", "k", "s0", "C0", "beta", "sign", "H")

    def __init__(
        self, kappa: float, k: int, env: TailEnvelope, sign: int, H: float = 0.0  # noqa: N803
    ) -> None:
        self.kappa: float = kappa
        self.k: int = k
        self.s0: float = env.s0
        self.C0: float = env.C0
        self.beta: float = env.beta
        self.sign: int = sign
        self.H: float = H

    @property
    def log_branch(self) -> bool:
        return abs(self.kappa - self.beta / 2.0) < BRANCH_TOLERANCE

    def envelope(self, t: npt.ArrayLike) -> Array:
        return 1.0 + self.sign * self.C0 * np.power(np.asarray(t, dtype=np.float64), -self.beta / 2.0)

    def _scaled_tail(self, t: Array) -> Array:
        # t^(-kappa) * integral_{s0}^{t} r^(kappa - beta/2 - 1) dr
        if self.log_branch:
            return np.power(t, -self.kappa) * np.log(t / self.s0)
        gap = self.kappa - self.beta / 2.0
        return (np.power(t, -self.beta / 2.0) - self.s0**gap * np.power(t, -self.kappa)) / gap

    def y(self, t: npt.ArrayLike) -> Array:
        t = np.asarray(t, dtype=np.float64)
        head = -np.expm1(self.kappa * np.log(self.s0 / t))
        return head + self.sign * self.kappa * self.C0 * self._scaled_tail(t) + self.H * np.power(t, -self.kappa)

    def excess(self, t: npt.ArrayLike) -> Array:
        """y - 1, accurate for large t."""
        t = np.asarray(t, dtype=np.float64)
        return (
            (self.H - self.s0**self.kappa) * np.power(t, -self.kappa)
            + self.sign * self.kappa * self.C0 * self._scaled_tail(t)
        )

    def slope(self, t: npt.ArrayLike) -> Array:
        y = self.y(t)
        if np.any(y < -1e-14):
            raise ConstantsError("radial profile left the admissible cone (u' undefined)", H=self.H)
        return np.power(np.maximum(y, 0.0), 1.0 / self.k)

    def slope_minus_one(self, t: npt.ArrayLike) -> Array:
        with np.errstate(divide="ignore"):
            return np.expm1(np.log1p(self.excess(t)) / self.k)

    def curvature(self, t: npt.ArrayLike) -> Array:
        t = np.asarray(t, dtype=np.float64)
        y = np.maximum(self.y(t), 0.0)
        dy = self.kappa / t * (self.envelope(t) - y)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = dy / (self.k * np.power(y, 1.0 - 1.0 / self.k))
        if self.k == 1:
            return dy
        return np.where(y > 0.0, out, np.inf)


class RadialProfile:
    __slots__ = ("knots", "values", "first_deriv", "second_deriv", "domain_start", "ode", "_spline")

    def __init__(
        self,
        knots: npt.ArrayLike,
        values: npt.ArrayLike,
        first_deriv: npt.ArrayLike,
        second_deriv: npt.ArrayLike,
        domain_start: float = 0.0,
        ode: Optional[EnvelopeODE] = None,
    ) -> None:
        self.knots: Array = np.asarray(knots, dtype=np.float64)
        self.values: Array = np.asarray(values, dtype=np.float64)
        self.first_deriv: Array = np.asarray(first_deriv, dtype=np.float64)
        self.second_deriv: Array = np.asarray(second_deriv, dtype=np.float64)
        if np.any(np.diff(self.knots) <= 0):
            raise ArgumentError("profile knots must be strictly increasing")
        if not (self.knots.shape == self.values.shape == self.first_deriv.shape == self.second_deriv.shape):
            raise ArgumentError("profile arrays must have one entry per knot")
        if domain_start < 0:
            raise ArgumentError("profile domain must start at a nonnegative tau")
        self.domain_start: float = float(domain_start)
        self.ode: Optional[EnvelopeODE] = ode
        self._spline: CubicHermiteSpline = CubicHermiteSpline(self.knots, self.values, self.first_deriv)

    @property
    def tau_max(self) -> float:
        return float(self.knots[-1])

    def _check_range(self, tau: Array) -> None:
        if tau.size and (np.min(tau) < self.knots[0] - 1e-12 or np.max(tau) > self.knots[-1] * (1 + 1e-12)):
            raise ArgumentError(
                f"tau outside the profile range [{self.knots[0]:.6g}, {self.knots[-1]:.6g}]"
            )

    def value(self, tau: npt.ArrayLike) -> Array:
        t = np.asarray(tau, dtype=np.float64)
        self._check_range(t)
        return np.asarray(self._spline(np.clip(t, self.knots[0], self.knots[-1])), dtype=np.float64)

    def derivative(self, tau: npt.ArrayLike, order: int = 1) -> Array:
        t = np.asarray(tau, dtype=np.float64)
        self._check_range(t)
        if self.ode is not None and np.all(t >= self.domain_start):
            return self.ode.slope(t) if order == 1 else self.ode.curvature(t)
        return np.asarray(self._spline(np.clip(t, self.knots[0], self.knots[-1]), order), dtype=np.float64)

    def table(self) -> Array:
        return np.column_stack([self.knots, self.values, self.first_deriv, self.second_deriv])

    def to_csv(self, path: Union[str, PathLike[str]]) -> None:
        np.savetxt(path, self.table(), fmt="%.17g", delimiter=",", header="tau,u,du,d2u", comments="")

    def __repr__(self) -> str:
        return f"RadialProfile(knots={self.knots.size}, range=[{self.knots[0]:.4g}, {self.knots[-1]:.4g}])"


def sigma_k_radial(
    A: AkMatrix, x: npt.ArrayLike, uprime: npt.ArrayLike, usecond: npt.ArrayLike, k: Optional[int] = None  # noqa: N803
) -> Array:
    """sigma_k of u'A + u''(Ax)(Ax)^T without forming the matrix."""
    k = A.k if k is None else k
    if np.any(np.asarray(uprime) < 0):
        raise ArgumentError("sigma_k_radial needs a nonnegative first derivative")
    points = np.atleast_2d(np.asarray(x, dtype=np.float64))
    up = np.asarray(uprime, dtype=np.float64)
    upp = np.asarray(usecond, dtype=np.float64)
    weights = np.array([sigma_partial(A.a, k - 1, i) for i in range(A.n)])
    spread = np.sum(weights * (A.a * points) ** 2, axis=1)
    return sigma_k(A.a, k) * up**k + upp * up ** (k - 1) * spread


def radial_hessians(A: AkMatrix, x: Array, uprime: Array, usecond: Array) -> Array:  # noqa: N803
    ax = A.a * x
    return uprime[:, None, None] * A.matrix + usecond[:, None, None] * np.einsum("mi,mj->mij", ax, ax)


def barrier_kappa(A: AkMatrix) -> Tuple[float, float]:  # noqa: N803
    h = hk_value(A.a, A.k)
    return A.k / (2.0 * h), h


def _geometric_knots(start: float, stop: float) -> Array:
    count = max(int(math.ceil(math.log(stop / start) / math.log(KNOT_RATIO))), 1)
    return start * np.power(stop / start, np.arange(count + 1) / count)


def _profile_from_ode(ode: EnvelopeODE, tau_max: float, what: str) -> Tuple[Array, Array, Array, Array]:
    knots = _geometric_knots(ode.s0, tau_max)
    values = np.zeros_like(knots)
    for j in range(1, knots.size):
        values[j] = values[j - 1] + _integrate(
            lambda t: float(ode.slope(t)), knots[j - 1], knots[j], what
        )
    return knots, values, ode.slope(knots), ode.curvature(knots)


def build_upper_barrier(A: AkMatrix, env: TailEnvelope, tau_max: Optional[float] = None) -> RadialProfile:  # noqa: N803
    """The supersolution profile built on the lower envelope; zero below s0."""
    kappa, _ = barrier_kappa(A)
    ode = EnvelopeODE(kappa, A.k, env, sign=-1)
    tau_max = tau_max or DEFAULT_TAU_MAX_FACTOR * env.s0
    knots, values, first, second = _profile_from_ode(ode, tau_max, "upper barrier slope")
    inner = np.linspace(0.0, env.s0, 9)[:-1]
    zeros = np.zeros_like(inner)
    return RadialProfile(
        np.concatenate([inner, knots]),
        np.concatenate([zeros, values]),
        np.concatenate([zeros, first]),
        np.concatenate([zeros, second]),
        domain_start=env.s0,
        ode=ode,
    )


def build_lower_profile(
    A: AkMatrix, env: TailEnvelope, H2: float, tau_max: Optional[float] = None  # noqa: N803
) -> RadialProfile:
    kappa, _ = barrier_kappa(A)
    ode = EnvelopeODE(kappa, A.k, env, sign=1, H=H2)
    tau_max = tau_max or DEFAULT_TAU_MAX_FACTOR * env.s0
    knots, values, first, second = _profile_from_ode(ode, tau_max, "lower barrier slope")
    return RadialProfile(knots, values, first, second, domain_start=env.s0, ode=ode)


def h_margin(env: TailEnvelope, kappa: float, H2: float, tau: npt.ArrayLike) -> Array:  # noqa: N803
    """H2 + integral of kappa r^(kappa-1) f_upper from s0 to tau, minus tau^kappa f_upper(tau)."""
    t = np.asarray(tau, dtype=np.float64)
    gap = kappa - env.beta / 2.0
    if abs(gap) < BRANCH_TOLERANCE:
        tail = kappa * env.C0 * np.log(t / env.s0) - env.C0
    else:
        tail = env.C0 * (
            kappa * (np.power(t, gap) - env.s0**gap) / gap - np.power(t, gap)
        )
    return H2 - env.s0**kappa + tail


def select_H2(env: TailEnvelope, kappa: float, slope_bound: float, k: int) -> float:  # noqa: N802
    if kappa <= 0:
        raise ArgumentError(f"kappa must be positive, got {kappa!r}")
    # the margin function increases in tau, so its infimum sits at s0
    positivity = env.s0**kappa + env.C0 * env.s0 ** (kappa - env.beta / 2.0)
    slope = env.s0**kappa * slope_bound**k
    return H2_MARGIN * max(positivity, slope)


def _cumulative_radial_mass(env: TailEnvelope, n: int, k: int) -> Callable[[float], float]:
    start = env.s0 / 2.0

    def integrand(r: float) -> float:
        return n * r ** (n - 1) * (1.0 + env.C0 * r ** (-env.beta / 2.0)) ** (n / k)

    def mass(t: float) -> float:
        return 0.0 if t <= start else _integrate(integrand, start, t, "v3 inner integral")

    return mass


def v3_normalizer(env: TailEnvelope, n: int, k: int) -> float:
    mass = _cumulative_radial_mass(env, n, k)
    return _integrate(lambda t: mass(t) ** (1.0 / n), env.s0 / 2.0, env.s0, "v3 normalizer")


def build_v3(
    A: AkMatrix, env: TailEnvelope, c1: float, knots: int = 33  # noqa: N803
) -> Tuple[RadialProfile, float, float]:
    """The comparison profile: -c1 below s0/2, rising to 0 at s0. Returns (profile, H1, c2)."""
    if c1 <= 0:
        raise ArgumentError(f"c1 must be positive, got {c1!r}")
    n, k = A.n, A.k
    mass = _cumulative_radial_mass(env, n, k)
    c2 = v3_normalizer(env, n, k)
    H1 = c1 / c2  # noqa: N806
    ramp = np.linspace(env.s0 / 2.0, env.s0, knots)
    masses = np.array([mass(t) for t in ramp])
    first = H1 * masses ** (1.0 / n)
    density = n * ramp ** (n - 1) * (1.0 + env.C0 * ramp ** (-env.beta / 2.0)) ** (n / k)
    with np.errstate(divide="ignore"):
        second = np.where(masses > 0, H1 / n * masses ** (1.0 / n - 1.0) * density, np.inf)
    values = np.zeros_like(ramp)
    for j in range(knots - 2, -1, -1):
        values[j] = values[j + 1] - H1 * _integrate(
            lambda t: mass(t) ** (1.0 / n), ramp[j], ramp[j + 1], "v3 slope"
        )
    flat = np.linspace(0.0, env.s0 / 2.0, 5)[:-1]
    profile = RadialProfile(
        np.concatenate([flat, ramp]),
        np.concatenate([np.full_like(flat, -c1), values]),
        np.concatenate([np.zeros_like(flat), first]),
        np.concatenate([np.zeros_like(flat), second]),
    )
    return profile, H1, c2


def alexandrov_constant(A: AkMatrix, s0: float) -> float:  # noqa: N803
    """(diam^(n-1) * L / omega_n)^(1/n) for the ellipsoid D_s0, L its largest semi-axis.

    |v(x)|^n <= diam^(n-1) dist(x, boundary) |image of the subgradient| / omega_n for
    convex v vanishing on the boundary, and dist <= L inside D_s0.
    """
    semi = float(np.max(np.sqrt(2.0 * s0 / A.a)))
    n = A.n
    return ((2.0 * semi) ** (n - 1) * semi / unit_ball_volume(n)) ** (1.0 / n)


def bump_eta(A: AkMatrix, s0: float) -> Callable[[Array], Array]:  # noqa: N803
    """Smooth bump supported in D_(s0/4), normalized to unit L^(n/k) norm."""
    n, k = A.n, A.k
    p = n / k
    level = s0 / 4.0
    jacobian = float(np.prod(np.sqrt(2.0 * level / A.a)))
    sphere = n * unit_ball_volume(n)
    radial = _integrate(
        lambda r: float(bump_profile(np.array([r * r]))[0]) ** p * r ** (n - 1), 0.0, 1.0, "bump norm"
    )
    scale = (jacobian * sphere * radial) ** (-1.0 / p)

    def eta(x: Array) -> Array:
        return scale * bump_profile(A.tau(x) / level)

    return eta


def choose_c0(C: float, f_norm: float, c2: float, det_a: float, n: int, k: int) -> Tuple[float, float]:  # noqa: N803
    """Smallest bump amplitude on 0, 1, 2, 4, ... with c1 >= c2 det(A)^(-1/n). Returns (c0, c1)."""
    target = c2 * det_a ** (-1.0 / n)
    c0 = 0.0
    for _ in range(MAX_C0_DOUBLINGS):
        c1 = C * (f_norm + c0) ** (1.0 / k)
        if c1 >= target:
            return c0, c1
        c0 = 1.0 if c0 == 0.0 else 2.0 * c0
    raise ConstantsError("no bump amplitude satisfies the comparison bound", target=target)


class BarrierConstants:
    __slots__ = ("kappa", "hk", "c0_bump", "c1", "c2", "H1", "H2", "slope_bound", "f_norm")

    def __init__(
        self,
        kappa: float,
        hk: float,
        c0_bump: float,
        c1: float,
        c2: float,
        H1: float,  # noqa: N803
        H2: float,  # noqa: N803
        slope_bound: float,
        f_norm: float,
    ) -> None:
        self.kappa: float = kappa
        self.hk: float = hk
        self.c0_bump: float = c0_bump
        self.c1: float = c1
        self.c2: float = c2
        self.H1: float = H1
        self.H2: float = H2
        self.slope_bound: float = slope_bound
        self.f_norm: float = f_norm

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in self.__slots__}

    def __repr__(self) -> str:
        return f"BarrierConstants(kappa={self.kappa:.6g}, H1={self.H1:.6g}, H2={self.H2:.6g}, c0={self.c0_bump:.6g})"


def barrier_constants(A: AkMatrix, env: TailEnvelope, f: FModel) -> BarrierConstants:  # noqa: N803
    n, k = A.n, A.k
    kappa, hk = barrier_kappa(A)
    c2 = v3_normalizer(env, n, k)
    f_norm = lnk_norm(f, A, env.s0)
    C = alexandrov_constant(A, env.s0)  # noqa: N806
    c0, c1 = choose_c0(C, f_norm, c2, A.det, n, k)
    H1 = c1 / c2  # noqa: N806
    slope_bound = H1 * _cumulative_radial_mass(env, n, k)(env.s0) ** (1.0 / n)
    H2 = select_H2(env, kappa, slope_bound, k)  # noqa: N806
    constants = BarrierConstants(kappa, hk, c0, c1, c2, H1, H2, slope_bound, f_norm)
    _log.info("barrier constants: %r", constants)
    return constants


def jump_slopes(v1: GridField, A: AkMatrix, s0: float, band: float = 2.0) -> Array:  # noqa: N803
    """Secant slopes -v1 / (s0 - tau) at interior nodes within a band of cells from the boundary."""
    tau = A.tau(v1.spec.points())
    interior = v1.interior
    depth = s0 - tau[interior]
    reach = band * v1.spec.h_max * math.sqrt(2.0 * s0 * float(np.max(A.a)))
    near = (depth > 0) & (depth <= reach)
    if not np.any(near):
        raise NumericError("no interior nodes near the boundary of D_s0; refine the grid")
    return -v1.values[interior][near] / depth[near]


def build_lower_barrier(
    A: AkMatrix,  # noqa: N803
    env: TailEnvelope,
    f: FModel,
    constants: Optional[BarrierConstants] = None,
    *,
    nodes: int = 33,
    options: Optional[SolverOptions] = None,
    tau_max: Optional[float] = None,
) -> Tuple[RadialProfile, GridField]:
    constants = constants or barrier_constants(A, env, f)
    profile = build_lower_profile(A, env, constants.H2, tau_max)

    eta = bump_eta(A, env.s0)
    c0 = constants.c0_bump
    peak = float(eta(np.zeros((1, A.n)))[0])
    rhs = FromCallable(lambda x: f.values(x) + c0 * eta(x), f.inf_bound, f.sup_bound() + c0 * peak)
    spec = GridSpec.ellipsoid(A, env.s0, nodes)
    v1, report = continuation_solve(spec, rhs, A.k, A, options, boundary_value=0.0)
    _log.info("interior barrier solved: %r", report)

    slopes = jump_slopes(v1, A, env.s0)
    exterior = float(profile.first_deriv[0])
    if float(np.max(slopes)) >= exterior:
        raise ConstantsError(
            "gradient jump at the boundary of D_s0 has the wrong sign; increase H2 or c0",
            interior_slope=float(np.max(slopes)),
            exterior_slope=exterior,
        )
    return profile, v1


def _log_integral(func: Callable[[float], float], start: float, stop: float, what: str) -> float:
    # t = start * e^w turns the algebraic tail into an exponentially decaying one
    def integrand(w: float) -> float:
        if w > 700.0:
            return 0.0
        t = start * math.exp(w)
        return func(t) * t

    upper = math.inf if math.isinf(stop) else math.log(stop / start)
    return _integrate(integrand, 0.0, upper, what)


def _beta_bounds(
    lower: RadialProfile, upper: RadialProfile, v1: GridField, A: AkMatrix, tau_max: float  # noqa: N803
) -> Tuple[float, float]:
    if lower.ode is None or upper.ode is None:
        raise ArgumentError("beta bounds need barrier profiles built from the envelope ODE")
    s0 = lower.ode.s0
    if tau_max < 100.0 * s0:
        raise ArgumentError(f"tau_max must be at least 100 s0 = {100.0 * s0:.6g}")
    if lower.ode.kappa <= 1.0:
        raise ConstantsError(
            "kappa <= 1: the barrier tails are not integrable and beta bounds are infinite",
            kappa=lower.ode.kappa,
        )
    knots = _geometric_knots(s0, tau_max)
    lower_excess = lower.ode.excess(knots)
    upper_excess = upper.ode.excess(knots)
    if np.any(lower_excess <= 0.0) or np.any(upper_excess >= 0.0):
        raise ConstantsError(
            "barrier slopes have not crossed 1 monotonically by tau_max; increase tau_max or H2",
            tau_max=tau_max,
        )

    lower_ode, upper_ode = lower.ode, upper.ode
    # tau - barrier is monotone past s0, so the extrema are the limits at infinity
    below = _log_integral(lambda t: float(lower_ode.slope_minus_one(t)), s0, tau_max, "lower slope excess")
    below += _log_integral(lambda t: float(lower_ode.slope_minus_one(t)), tau_max, math.inf, "lower slope tail")
    above = _log_integral(lambda t: -float(upper_ode.slope_minus_one(t)), s0, tau_max, "upper slope deficit")
    above += _log_integral(lambda t: -float(upper_ode.slope_minus_one(t)), tau_max, math.inf, "upper slope tail")

    tau = A.tau(v1.spec.points())
    interior = v1.interior
    inner = float(np.min(tau[interior] - v1.values[interior])) if interior.size else math.inf
    beta_minus = min(inner, s0 - below)
    beta_plus = s0 + above
    return beta_minus, beta_plus


class BarrierPair:
    __slots__ = ("A", "env", "lower", "interior", "upper", "v3", "constants", "beta_minus", "beta_plus")

    def __init__(
        self,
        A: AkMatrix,  # noqa: N803
        env: TailEnvelope,
        lower: RadialProfile,
        interior: GridField,
        upper: RadialProfile,
        v3: RadialProfile,
        constants: BarrierConstants,
        beta_minus: float,
        beta_plus: float,
    ) -> None:
        if not (math.isfinite(beta_minus) and math.isfinite(beta_plus)):
            raise ConstantsError("beta bounds must be finite", beta_minus=beta_minus, beta_plus=beta_plus)
        self.A: AkMatrix = A
        self.env: TailEnvelope = env
        self.lower: RadialProfile = lower
        self.interior: GridField = interior
        self.upper: RadialProfile = upper
        self.v3: RadialProfile = v3
        self.constants: BarrierConstants = constants
        self.beta_minus: float = beta_minus
        self.beta_plus: float = beta_plus

    @property
    def kappa(self) -> float:
        return self.constants.kappa

    @property
    def hk(self) -> float:
        return self.constants.hk

    def lower_at(self, points: npt.ArrayLike) -> Array:
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        tau = self.A.tau(x)
        out = np.empty(tau.size)
        inside = tau < self.env.s0
        if np.any(inside):
            # linear interpolation never overshoots the discrete interior barrier
            out[inside] = self.interior.sample(x[inside], method="linear")
        out[~inside] = self.lower.value(tau[~inside])
        return out

    def upper_at(self, points: npt.ArrayLike) -> Array:
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return self.upper.value(self.A.tau(x))

    def summary(self) -> dict[str, float]:
        summary = self.constants.as_dict()
        summary.update(
            C0=self.env.C0,
            s0=self.env.s0,
            beta=self.env.beta,
            beta_minus=self.beta_minus,
            beta_plus=self.beta_plus,
        )
        return summary

    def to_payload(self) -> BarrierConstantsPayload:
        return {
            "constants": self.constants.as_dict(),
            "beta_minus": self.beta_minus,
            "beta_plus": self.beta_plus,
            "kappa": self.kappa,
            "hk": self.hk,
        }

    def __repr__(self) -> str:
        return f"BarrierPair(beta_minus={self.beta_minus:.6g}, beta_plus={self.beta_plus:.6g}, {self.constants!r})"


def beta_bounds(
    pair: BarrierPair, A: Optional[AkMatrix] = None, tau_max: Optional[float] = None  # noqa: N803
) -> Tuple[float, float]:
    """(inf of tau minus the lower barrier, sup of tau minus the upper barrier) over R^n."""
    A = pair.A if A is None else A  # noqa: N806
    tau_max = pair.lower.tau_max if tau_max is None else tau_max
    return _beta_bounds(pair.lower, pair.upper, pair.interior, A, tau_max)


def build_barriers(
    A: AkMatrix,  # noqa: N803
    env: TailEnvelope,
    f: FModel,
    *,
    nodes: int = 33,
    options: Optional[SolverOptions] = None,
    tau_max: Optional[float] = None,
    H2: Optional[float] = None,  # noqa: N803
) -> BarrierPair:
    constants = barrier_constants(A, env, f)
    if H2 is not None:
        constants.H2 = H2
    tau_max = tau_max or DEFAULT_TAU_MAX_FACTOR * env.s0
    lower, v1 = build_lower_barrier(A, env, f, constants, nodes=nodes, options=options, tau_max=tau_max)
    upper = build_upper_barrier(A, env, tau_max)
    v3, _, _ = build_v3(A, env, constants.c1)
    beta_minus, beta_plus = _beta_bounds(lower, upper, v1, A, tau_max)
    pair = BarrierPair(A, env, lower, v1, upper, v3, constants, beta_minus, beta_plus)
    _log.info("barriers built: %r", pair)
    return pair


class RadialCheck:
    __slots__ = ("lower_margin", "upper_margin", "cone_ok", "samples")

    def __init__(self, lower_margin: float, upper_margin: float, cone_ok: bool, samples: int) -> None:
        self.lower_margin: float = lower_margin
        self.upper_margin: float = upper_margin
        self.cone_ok: bool = cone_ok
        self.samples: int = samples

    @property
    def passed(self) -> bool:
        return self.cone_ok and self.lower_margin >= -1e-6 and self.upper_margin >= -1e-6

    def __repr__(self) -> str:
        return (
            f"RadialCheck(lower_margin={self.lower_margin:.3e}, upper_margin={self.upper_margin:.3e}, "
            f"cone_ok={self.cone_ok})"
        )


def check_radial_subsolution(
    A: AkMatrix,  # noqa: N803
    lower: RadialProfile,
    upper: RadialProfile,
    samples: int = 1000,
    seed: int = 0,
    tau_limit: Optional[float] = None,
) -> RadialCheck:
    """Assemble both barrier Hessians at random exterior points and test them against the envelopes."""
    if lower.ode is None or upper.ode is None:
        raise ArgumentError("the radial check needs barrier profiles built from the envelope ODE")
    s0 = lower.ode.s0
    rng = np.random.default_rng(seed)
    tau_limit = min(tau_limit or 100.0 * s0, lower.tau_max, upper.tau_max)
    tau = s0 * np.exp(rng.uniform(0.0, math.log(tau_limit / s0), samples))
    tau = np.maximum(tau, s0 * (1.0 + 1e-9))
    directions = rng.standard_normal((samples, A.n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    scale = np.sqrt(2.0 * tau / np.sum(A.a * directions**2, axis=1))
    x = directions * scale[:, None]

    k = A.k
    lower_sigma = sigma_sequence(radial_hessians(A, x, lower.ode.slope(tau), lower.ode.curvature(tau)), k)
    upper_sigma = sigma_sequence(radial_hessians(A, x, upper.ode.slope(tau), upper.ode.curvature(tau)), k)
    cone_ok = bool(np.all(lower_sigma[:, 1:] >= -1e-12) and np.all(upper_sigma[:, 1:] >= -1e-12))
    lower_margin = float(np.min(lower_sigma[:, k] - lower.ode.envelope(tau)))
    upper_margin = float(np.min(upper.ode.envelope(tau) - upper_sigma[:, k]))
    return RadialCheck(lower_margin, upper_margin, cone_ok, samples)


def sphere_samples(A: AkMatrix, tau: float, count: int = 64) -> Array:  # noqa: N803
    """Points on the level set {1/2 x^T A x = tau}."""
    directions = sphere_points(A.n, count)
    scale = np.sqrt(2.0 * tau / np.sum(A.a * directions**2, axis=1))
    return directions * scale[:, None]
