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

import math
from typing import TYPE_CHECKING

import numpy as np

from .enums import FVariant, PowerTailSign
from .errors import ArgumentError, ConstantsError
from .utils import unit_ball_volume

__all__ = (
    "SENTINEL_BETA",
    "TailEnvelope",
    "FModel",
    "Constant",
    "PowerTail",
    "Bump",
    "Sum",
    "Blend",
    "FromCallable",
    "bump_profile",
    "ball_quadrature",
    "lnk_norm",
    "sphere_points",
)

if TYPE_CHECKING:
    from typing import Callable, List, Optional, Sequence, Tuple

    import numpy.typing as npt

    from .symfunc import AkMatrix

    Array = npt.NDArray[np.float64]

# tail exponent reported when f - 1 vanishes outside a bounded set
SENTINEL_BETA = 4.0
MIN_S0 = 2.0
C2_GROWTH_TOLERANCE = 4.0


class TailEnvelope:
    __slots__ = ("C0", "s0", "beta")

    def __init__(self, C0: float, s0: float, beta: float) -> None:  # noqa: N803
        if C0 < 0 or not math.isfinite(C0):
            raise ArgumentError(f"C0 must be a finite nonnegative number, got {C0!r}")
        if s0 <= 1:
            raise ArgumentError(f"s0 must exceed 1, got {s0!r}")
        if beta <= 2:
            raise ArgumentError(f"beta must exceed 2, got {beta!r}")
        if 1.0 - C0 * s0 ** (-beta / 2.0) <= 0.0:
            raise ConstantsError(
                "lower envelope 1 - C0 s0^(-beta/2) is not positive", C0=C0, s0=s0, beta=beta
            )
        self.C0: float = float(C0)
        self.s0: float = float(s0)
        self.beta: float = float(beta)

    def upper(self, s: npt.ArrayLike) -> Array:
        return 1.0 + self.C0 * np.power(np.asarray(s, dtype=np.float64), -self.beta / 2.0)

    def lower(self, s: npt.ArrayLike) -> Array:
        return 1.0 - self.C0 * np.power(np.asarray(s, dtype=np.float64), -self.beta / 2.0)

    def __repr__(self) -> str:
        return f"TailEnvelope(C0={self.C0!r}, s0={self.s0!r}, beta={self.beta!r})"


def bump_profile(q: Array, order: int = 0) -> Array:
    """exp(1 - 1/(1 - q)) for q < 1 and its q-derivatives; zero for q >= 1."""
    inside = q < 1.0
    safe = np.where(inside, q, 0.0)
    u = 1.0 / (1.0 - safe)
    phi = np.exp(1.0 - u)
    if order == 0:
        factor = np.ones_like(u)
    elif order == 1:
        factor = -(u**2)
    elif order == 2:
        factor = u**4 - 2.0 * u**3
    elif order == 3:
        factor = -(u**6) + 6.0 * u**5 - 6.0 * u**4
    else:
        raise ArgumentError(f"bump derivatives are available up to order 3, got {order}")
    return np.where(inside, phi * factor, 0.0)


def sphere_points(n: int, count: int) -> Array:
    """Deterministic, roughly uniform unit vectors."""
    if n == 2:
        angles = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if n == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        radius = np.sqrt(1.0 - z * z)
        theta = np.pi * (1.0 + 5.0**0.5) * i
        return np.stack([radius * np.cos(theta), radius * np.sin(theta), z], axis=1)
    rng = np.random.default_rng(0x4B484553)
    points = rng.standard_normal((count, n))
    return points / np.linalg.norm(points, axis=1, keepdims=True)


class FModel:
    variant: FVariant

    __slots__ = ("inf_bound",)

    def __init__(self, inf_bound: float) -> None:
        self.inf_bound: float = float(inf_bound)

    def derivatives(self, points: npt.ArrayLike, order: int = 0) -> Array:
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if not 0 <= order <= 3:
            raise ArgumentError(f"order must lie in [0, 3], got {order}")
        return self._derivatives(x, order)

    def _derivatives(self, x: Array, order: int) -> Array:
        raise NotImplementedError

    def values(self, points: npt.ArrayLike) -> Array:
        return self.derivatives(points, 0)

    def eval(self, x: npt.ArrayLike, order: int = 0) -> Array:
        point = np.asarray(x, dtype=np.float64).reshape(1, -1)
        result = self.derivatives(point, order)[0]
        return np.asarray(result)

    def is_unit(self) -> bool:
        return False

    def tail_envelope(self, A: AkMatrix) -> TailEnvelope:  # noqa: N803
        C0, s0, beta = self._tail(A)  # noqa: N806
        s0 = max(s0, MIN_S0)
        if C0 > 0.0 and 1.0 - C0 * s0 ** (-beta / 2.0) < 0.5:
            s0 = max(s0, (2.0 * C0) ** (2.0 / beta))
        if self.inf_bound <= 0.0:
            raise ConstantsError("no valid envelope: inf f is not positive", inf_bound=self.inf_bound)
        return TailEnvelope(C0, s0, beta)

    def _tail(self, A: AkMatrix) -> Tuple[float, float, float]:  # noqa: N803
        raise NotImplementedError

    def sup_bound(self) -> float:
        raise NotImplementedError

    def verify_C2(self, beta: float, radii: Sequence[float], samples: int = 64) -> bool:  # noqa: N802
        certified = self._certified_C2(beta)
        if certified is not None:
            return certified
        return self._sampled_C2(beta, radii, samples)

    def _certified_C2(self, beta: float) -> Optional[bool]:  # noqa: N802
        return None

    def _max_order(self) -> int:
        return 3

    def scaled_derivative_norms(
        self, beta: float, radii: Sequence[float], samples: int = 64, n: int = 3
    ) -> Array:
        """r^(beta+m) max |D^m (f - 1)| on spheres, shape (orders, radii)."""
        directions = sphere_points(n, samples)
        orders = self._max_order() + 1
        table = np.zeros((orders, len(radii)))
        for j, r in enumerate(radii):
            points = r * directions
            for m in range(orders):
                d = self.derivatives(points, m)
                if m == 0:
                    d = d - 1.0
                norms = np.sqrt(np.sum(d.reshape(samples, -1) ** 2, axis=1))
                table[m, j] = r ** (beta + m) * float(np.max(norms))
        return table

    def _sampled_C2(self, beta: float, radii: Sequence[float], samples: int) -> bool:  # noqa: N802
        radii = sorted(float(r) for r in radii)
        if len(radii) < 2:
            raise ArgumentError("verify_C2 needs at least two radii")
        table = self.scaled_derivative_norms(beta, radii, samples)
        head = np.maximum(table[:, 0], 1e-300)
        tail = table[:, -1]
        return bool(np.all((tail <= C2_GROWTH_TOLERANCE * head) | (tail <= 1e-14)))

    def check_C1(self) -> None:  # noqa: N802
        if not self.inf_bound > 0.0:
            raise ArgumentError(f"inf f = {self.inf_bound!r} violates inf f > 0")

    def to_config(self) -> dict[str, object]:
        raise NotImplementedError


class Constant(FModel):
    variant = FVariant.CONSTANT

    __slots__ = ("value",)

    def __init__(self, value: float = 1.0) -> None:
        super().__init__(value)
        self.value: float = float(value)

    def _derivatives(self, x: Array, order: int) -> Array:
        m, n = x.shape
        if order == 0:
            return np.full(m, self.value)
        return np.zeros((m,) + (n,) * order)

    def is_unit(self) -> bool:
        return self.value == 1.0

    def _tail(self, A: AkMatrix) -> Tuple[float, float, float]:  # noqa: N803
        if self.value != 1.0:
            raise ConstantsError("a constant f other than 1 has no tail envelope", value=self.value)
        return 0.0, MIN_S0, SENTINEL_BETA

    def sup_bound(self) -> float:
        return self.value

    def _certified_C2(self, beta: float) -> Optional[bool]:  # noqa: N802
        return self.value == 1.0

    def to_config(self) -> dict[str, object]:
        return {"variant": self.variant.value, "value": self.value}

    def __repr__(self) -> str:
        return f"Constant({self.value!r})"


class PowerTail(FModel):
    """1 + sign * C0 * (1 + |x|^2)^(-beta/2)."""

    variant = FVariant.POWER_TAIL

    __slots__ = ("C0", "beta", "sign")

    def __init__(self, C0: float, beta: float, sign: PowerTailSign = PowerTailSign.POSITIVE) -> None:  # noqa: N803
        if C0 < 0:
            raise ArgumentError(f"C0 must be nonnegative, got {C0!r}")
        if beta <= 2:
            raise ArgumentError(f"beta must exceed 2, got {beta!r}")
        sign = PowerTailSign(sign)
        super().__init__(1.0 if sign is PowerTailSign.POSITIVE else 1.0 - C0)
        self.C0: float = float(C0)
        self.beta: float = float(beta)
        self.sign: PowerTailSign = sign

    def _derivatives(self, x: Array, order: int) -> Array:
        n = x.shape[1]
        c = self.sign.value * self.C0
        p = -self.beta / 2.0
        rho = 1.0 + np.sum(x * x, axis=1)
        if order == 0:
            return 1.0 + c * rho**p
        if order == 1:
            return (c * 2.0 * p * rho ** (p - 1.0))[:, None] * x
        eye = np.eye(n)
        if order == 2:
            outer = np.einsum("mi,mj->mij", x, x)
            return c * (
                (4.0 * p * (p - 1.0) * rho ** (p - 2.0))[:, None, None] * outer
                + (2.0 * p * rho ** (p - 1.0))[:, None, None] * eye
            )
        triple = np.einsum("mi,mj,ml->mijl", x, x, x)
        mixed = (
            np.einsum("ij,ml->mijl", eye, x)
            + np.einsum("il,mj->mijl", eye, x)
            + np.einsum("jl,mi->mijl", eye, x)
        )
        return c * (
            (8.0 * p * (p - 1.0) * (p - 2.0) * rho ** (p - 3.0))[:, None, None, None] * triple
            + (4.0 * p * (p - 1.0) * rho ** (p - 2.0))[:, None, None, None] * mixed
        )

    def _tail(self, A: AkMatrix) -> Tuple[float, float, float]:  # noqa: N803
        # |x|^2 >= 2 s / max a_i on the level set {tau = s}
        a_max = float(np.max(A.a))
        return self.C0 * (a_max / 2.0) ** (self.beta / 2.0), MIN_S0, self.beta

    def sup_bound(self) -> float:
        return 1.0 + self.C0 if self.sign is PowerTailSign.POSITIVE else 1.0

    def _certified_C2(self, beta: float) -> Optional[bool]:  # noqa: N802
        return self.C0 == 0.0 or beta <= self.beta

    def to_config(self) -> dict[str, object]:
        return {
            "variant": self.variant.value,
            "C0": self.C0,
            "beta": self.beta,
            "sign": int(self.sign.value),
        }

    def __repr__(self) -> str:
        return f"PowerTail(C0={self.C0!r}, beta={self.beta!r}, sign={self.sign.name})"


class Bump(FModel):
    """1 + amplitude * exp(1 - 1/(1 - |x - center|^2 / radius^2))."""

    variant = FVariant.BUMP

    __slots__ = ("center", "radius", "amplitude")

    def __init__(self, center: Sequence[float], radius: float, amplitude: float) -> None:
        if radius <= 0:
            raise ArgumentError(f"bump radius must be positive, got {radius!r}")
        super().__init__(min(1.0, 1.0 + amplitude))
        self.center: Array = np.asarray(center, dtype=np.float64).reshape(-1)
        self.radius: float = float(radius)
        self.amplitude: float = float(amplitude)

    def _derivatives(self, x: Array, order: int) -> Array:
        n = x.shape[1]
        if n != self.center.size:
            raise ArgumentError(f"bump lives in dimension {self.center.size}, got points of dimension {n}")
        y = x - self.center
        r2 = self.radius**2
        q = np.sum(y * y, axis=1) / r2
        a = self.amplitude
        if order == 0:
            return 1.0 + a * bump_profile(q, 0)
        dq = 2.0 * y / r2
        d1 = bump_profile(q, 1)
        if order == 1:
            return (a * d1)[:, None] * dq
        d2 = bump_profile(q, 2)
        eye = np.eye(n)
        if order == 2:
            return a * (
                d2[:, None, None] * np.einsum("mi,mj->mij", dq, dq)
                + (d1 * 2.0 / r2)[:, None, None] * eye
            )
        d3 = bump_profile(q, 3)
        mixed = (
            np.einsum("il,mj->mijl", eye, dq)
            + np.einsum("jl,mi->mijl", eye, dq)
            + np.einsum("ij,ml->mijl", eye, dq)
        )
        return a * (
            d3[:, None, None, None] * np.einsum("mi,mj,ml->mijl", dq, dq, dq)
            + (d2 * 2.0 / r2)[:, None, None, None] * mixed
        )

    def is_unit(self) -> bool:
        return self.amplitude == 0.0

    def support_level(self, A: AkMatrix) -> float:  # noqa: N803
        reach = float(np.linalg.norm(self.center)) + self.radius
        return 0.5 * float(np.max(A.a)) * reach * reach

    def _tail(self, A: AkMatrix) -> Tuple[float, float, float]:  # noqa: N803
        return 0.0, self.support_level(A) * (1.0 + 1e-9), SENTINEL_BETA

    def sup_bound(self) -> float:
        return max(1.0, 1.0 + self.amplitude)

    def _certified_C2(self, beta: float) -> Optional[bool]:  # noqa: N802
        return True

    def to_config(self) -> dict[str, object]:
        return {
            "variant": self.variant.value,
            "center": self.center.tolist(),
            "radius": self.radius,
            "amplitude": self.amplitude,
        }

    def __repr__(self) -> str:
        return f"Bump(center={self.center.tolist()!r}, radius={self.radius!r}, amplitude={self.amplitude!r})"


class Sum(FModel):
    """1 + sum of (f_i - 1)."""

    variant = FVariant.SUM

    __slots__ = ("parts",)

    def __init__(self, parts: Sequence[FModel]) -> None:
        if not parts:
            raise ArgumentError("a sum needs at least one part")
        super().__init__(1.0 + sum(min(0.0, part.inf_bound - 1.0) for part in parts))
        self.parts: List[FModel] = list(parts)

    def _derivatives(self, x: Array, order: int) -> Array:
        total = sum(part._derivatives(x, order) for part in self.parts)
        if order == 0:
            return total - (len(self.parts) - 1.0)
        return np.asarray(total)

    def is_unit(self) -> bool:
        return all(part.is_unit() for part in self.parts)

    def _tail(self, A: AkMatrix) -> Tuple[float, float, float]:  # noqa: N803
        tails = [part._tail(A) for part in self.parts]
        decaying = [beta for C0, _, beta in tails if C0 > 0.0]
        beta = min(decaying) if decaying else SENTINEL_BETA
        s0 = max(MIN_S0, max(s for _, s, _ in tails))
        # for s >= s0 >= 1 a faster tail is dominated by the slowest one
        C0 = sum(c for c, _, _ in tails)  # noqa: N806
        return C0, s0, beta

    def sup_bound(self) -> float:
        return 1.0 + sum(max(0.0, part.sup_bound() - 1.0) for part in self.parts)

    def _certified_C2(self, beta: float) -> Optional[bool]:  # noqa: N802
        results = [part._certified_C2(beta) for part in self.parts]
        if any(result is None for result in results):
            return None
        return all(results)

    def to_config(self) -> dict[str, object]:
        return {"variant": self.variant.value, "parts": [part.to_config() for part in self.parts]}

    def __repr__(self) -> str:
        return f"Sum({self.parts!r})"


class Blend(FModel):
    """The continuation family 1 + t (f - 1)."""

    variant = FVariant.BLEND

    __slots__ = ("base", "t")

    def __init__(self, base: FModel, t: float) -> None:
        if not 0.0 <= t <= 1.0:
            raise ArgumentError(f"blend parameter must lie in [0, 1], got {t!r}")
        super().__init__(min(1.0, 1.0 + t * (base.inf_bound - 1.0)))
        self.base: FModel = base
        self.t: float = float(t)

    def _derivatives(self, x: Array, order: int) -> Array:
        inner = self.base._derivatives(x, order)
        if order == 0:
            return 1.0 + self.t * (inner - 1.0)
        return self.t * inner

    def is_unit(self) -> bool:
        return self.t == 0.0 or self.base.is_unit()

    def _max_order(self) -> int:
        return self.base._max_order()

    def _tail(self, A: AkMatrix) -> Tuple[float, float, float]:  # noqa: N803
        C0, s0, beta = self.base._tail(A)  # noqa: N806
        return self.t * C0, s0, beta

    def sup_bound(self) -> float:
        return 1.0 + self.t * max(0.0, self.base.sup_bound() - 1.0)

    def _certified_C2(self, beta: float) -> Optional[bool]:  # noqa: N802
        return True if self.t == 0.0 else self.base._certified_C2(beta)

    def to_config(self) -> dict[str, object]:
        return {"variant": self.variant.value, "t": self.t, "base": self.base.to_config()}

    def __repr__(self) -> str:
        return f"Blend({self.base!r}, t={self.t!r})"


class FromCallable(FModel):
    """A value-only right-hand side, used for manufactured solutions."""

    variant = FVariant.CALLABLE

    __slots__ = ("func", "sup")

    def __init__(self, func: Callable[[Array], Array], inf_bound: float, sup_bound: float = math.inf) -> None:
        super().__init__(inf_bound)
        self.func: Callable[[Array], Array] = func
        self.sup: float = float(sup_bound)

    def _derivatives(self, x: Array, order: int) -> Array:
        if order != 0:
            raise ArgumentError("callable right-hand sides only provide values")
        return np.asarray(self.func(x), dtype=np.float64).reshape(x.shape[0])

    def _max_order(self) -> int:
        return 0

    def _tail(self, A: AkMatrix) -> Tuple[float, float, float]:  # noqa: N803
        raise ConstantsError("callable right-hand sides carry no certified tail envelope")

    def sup_bound(self) -> float:
        return self.sup

    def to_config(self) -> dict[str, object]:
        raise ArgumentError("callable right-hand sides cannot be serialized")

    def __repr__(self) -> str:
        return f"FromCallable({self.func!r})"


def ball_quadrature(n: int, order: int = 24) -> Tuple[Array, Array]:
    """Nested Gauss-Legendre nodes and weights on the unit ball of R^n."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    points = np.zeros((1, 0))
    total = np.ones(1)
    for _ in range(n):
        used = np.sum(points * points, axis=1)
        half = np.sqrt(np.maximum(1.0 - used, 0.0))
        coordinate = (half[:, None] * nodes[None, :]).reshape(-1)
        total = (total[:, None] * half[:, None] * weights[None, :]).reshape(-1)
        points = np.concatenate([np.repeat(points, order, axis=0), coordinate[:, None]], axis=1)
    return points, total


def lnk_norm(f: FModel, A: AkMatrix, s: float, order: int = 24) -> float:  # noqa: N803
    """||f||_{L^{n/k}(D_s)} by quadrature over the ellipsoid."""
    n, k = A.n, A.k
    axes = np.sqrt(2.0 * s / A.a)
    points, weights = ball_quadrature(n, order)
    values = f.values(points * axes)
    if np.any(values < 0):
        raise ArgumentError("lnk_norm needs a nonnegative function")
    integral = float(np.prod(axes)) * float(np.sum(weights * values ** (n / k)))
    return integral ** (k / n)


def ellipsoid_volume(A: AkMatrix, s: float) -> float:  # noqa: N803
    return unit_ball_volume(A.n) * float(np.prod(np.sqrt(2.0 * s / A.a)))
