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

from .asymptotics import RadialSource, decay_rate_oracle, loglog_slope, radial_potential
from .barriers import EnvelopeODE, barrier_kappa, select_H2
from .dirichlet import SolverOptions, continuation_solve
from .fmodel import Constant, FromCallable, TailEnvelope
from .grid import GridSpec
from .symfunc import (
    SymMatrix,
    F_and_grad,
    newton_tensor_batch,
    normalize_to_Ak,
    sigma_k,
    sigma_k_matrix,
    sigma_sequence,
)

__all__ = (
    "MAX_EXIT",
    "SuiteResult",
    "SUITES",
    "run_selftest",
    "format_table",
    "exit_status",
)

if TYPE_CHECKING:
    from typing import Callable, Dict, List, Optional, Sequence, Tuple

    import numpy.typing as npt

    Array = npt.NDArray[np.float64]
    Suite = Callable[[np.random.Generator, bool], Tuple[bool, str]]

_log = logging.getLogger(__name__)

MAX_EXIT = 125


class SuiteResult:
    __slots__ = ("name", "passed", "detail")

    def __init__(self, name: str, passed: bool, detail: str) -> None:
        self.name: str = name
        self.passed: bool = passed
        self.detail: str = detail

    def to_payload(self) -> Dict[str, object]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}

    def __repr__(self) -> str:
        return f"SuiteResult({self.name!r}, passed={self.passed})"


def _random_symmetric(rng: np.random.Generator, count: int, n: int) -> Array:
    raw = rng.standard_normal((count, n, n))
    return 0.5 * (raw + np.swapaxes(raw, 1, 2))


def _sigma_oracles(rng: np.random.Generator, quick: bool) -> Tuple[bool, str]:
    count = 500 if quick else 10_000
    worst = 0.0
    for n in (2, 3, 4):
        stack = _random_symmetric(rng, count, n)
        minors = sigma_sequence(stack, n)
        lam = np.linalg.eigvalsh(stack)
        for k in range(1, n + 1):
            by_eigen = np.array([sigma_k(row, k) for row in lam])
            scale = np.maximum(1.0, np.abs(by_eigen))
            worst = max(worst, float(np.max(np.abs(minors[:, k] - by_eigen) / scale)))
    return worst <= 1e-10, f"max relative gap {worst:.2e}"


def _euler_identity(rng: np.random.Generator, quick: bool) -> Tuple[bool, str]:
    count = 500 if quick else 10_000
    worst = 0.0
    for n in (2, 3, 4):
        stack = _random_symmetric(rng, count, n)
        sigmas = sigma_sequence(stack, n)
        for k in range(1, n + 1):
            tensor = newton_tensor_batch(stack, k, sigmas)
            trace = np.einsum("mij,mji->m", tensor, stack)
            scale = np.maximum(1.0, np.abs(k * sigmas[:, k]))
            worst = max(worst, float(np.max(np.abs(trace - k * sigmas[:, k]) / scale)))
    return worst <= 1e-10, f"max relative gap {worst:.2e}"


def _operator_gradient(rng: np.random.Generator, quick: bool) -> Tuple[bool, str]:
    count = 100 if quick else 1000
    step = 1e-6
    worst = 0.0
    n = 3
    for _ in range(count):
        k = int(rng.integers(1, n + 1))
        lam = rng.uniform(0.2, 2.0, n)
        basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
        matrix = basis @ np.diag(lam) @ basis.T
        _, grad = F_and_grad(SymMatrix.from_array(matrix), k)
        for i in range(n):
            for j in range(i, n):
                bump = np.zeros((n, n))
                bump[i, j] = bump[j, i] = step
                plus = sigma_k_matrix(SymMatrix.from_array(matrix + bump), k) ** (1.0 / k)
                minus = sigma_k_matrix(SymMatrix.from_array(matrix - bump), k) ** (1.0 / k)
                derivative = (plus - minus) / (2.0 * step)
                expected = grad.array[i, j] * (1.0 if i == j else 2.0)
                worst = max(worst, abs(derivative - expected))
    return worst <= 1e-5, f"max absolute gap {worst:.2e}"


def _barrier_identities(rng: np.random.Generator, quick: bool) -> Tuple[bool, str]:
    A = normalize_to_Ak([1.0, 1.0, 1.0], 2)  # noqa: N806
    kappa, h = barrier_kappa(A)
    worst = 0.0
    for beta in (3.0, 4.0):
        for c0 in (0.0, 0.5):
            env = TailEnvelope(c0, 2.0, beta)
            for sign, H in ((-1, 0.0), (1, select_H2(env, kappa, 1.0, A.k))):  # noqa: N806
                ode = EnvelopeODE(kappa, A.k, env, sign, H)
                knots = env.s0 * np.geomspace(1.05, 1e3, 200)
                up, upp = ode.slope(knots), ode.curvature(knots)
                lhs = up**A.k + 2.0 * h * upp * up ** (A.k - 1) * knots
                target = ode.envelope(knots)
                worst = max(worst, float(np.max(np.abs(lhs - target) / np.abs(target))))
    return worst <= 1e-8, f"max relative gap {worst:.2e}"


def _quadratic_exactness(rng: np.random.Generator, quick: bool) -> Tuple[bool, str]:
    nodes = 17 if quick else 33
    worst = 0.0
    for trial in range(5):
        k = (1, 2, 3)[trial % 3]
        A = normalize_to_Ak(rng.uniform(0.5, 2.0, 3), k)  # noqa: N806
        spec = GridSpec.cube(3, 1.0, nodes)
        field, _ = continuation_solve(spec, Constant(1.0), k, A, SolverOptions(tol_nonlin=1e-11))
        worst = max(worst, float(np.max(np.abs(field.values - A.tau(spec.points())))))
    return worst <= 1e-10, f"max error {worst:.2e}"


def _poisson_order(rng: np.random.Generator, quick: bool) -> Tuple[bool, str]:
    A = normalize_to_Ak([1.0, 1.0, 1.0], 1)  # noqa: N806

    def exact(x: Array) -> Array:
        return A.tau(x) + 0.1 * np.prod(np.sin(x), axis=1)

    def laplacian(x: Array) -> Array:
        return 1.0 - 0.1 * x.shape[1] * np.prod(np.sin(x), axis=1)

    f = FromCallable(laplacian, inf_bound=1.0 - 0.1 * 3, sup_bound=1.0 + 0.1 * 3)
    grids = (17, 21, 25) if quick else (17, 25, 33)
    steps, errors = [], []
    for nodes in grids:
        spec = GridSpec.cube(3, 1.0, nodes)
        field, _ = continuation_solve(spec, f, 1, A, boundary=exact)
        interior = field.interior
        errors.append(float(np.max(np.abs(field.values[interior] - exact(spec.points()[interior])))))
        steps.append(spec.h_max)
    order = loglog_slope(steps, errors)
    return abs(order - 2.0) <= 0.2, f"observed order {order:.3f}"


def _potential_oracle(rng: np.random.Generator, quick: bool) -> Tuple[bool, str]:
    radii = np.geomspace(1e2, 1e6, 9)
    worst = 0.0
    for n, delta in ((3, 2.5), (3, 4.0), (5, 4.0), (3, 3.0)):
        src = RadialSource(delta, n)
        exponent, log_flag = decay_rate_oracle(src)
        values = [radial_potential(src, r) for r in radii]
        slope = loglog_slope(radii, values, log_corrected=log_flag)
        worst = max(worst, abs(-slope - exponent))
    return worst <= 0.02, f"max exponent gap {worst:.3f}"


SUITES: Dict[str, Suite] = {
    "sigma_oracles": _sigma_oracles,
    "euler_identity": _euler_identity,
    "operator_gradient": _operator_gradient,
    "barrier_identities": _barrier_identities,
    "quadratic_exactness": _quadratic_exactness,
    "poisson_order": _poisson_order,
    "potential_oracle": _potential_oracle,
}


def run_selftest(seed: int = 0, quick: bool = False, names: Optional[Sequence[str]] = None) -> List[SuiteResult]:
    results = []
    for name in names or list(SUITES):
        rng = np.random.default_rng(seed)
        try:
            passed, detail = SUITES[name](rng, quick)
        except Exception as exc:
            _log.exception("suite %s raised", name)
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        result = SuiteResult(name, passed, detail)
        _log.info("%s: %s (%s)", name, "pass" if passed else "FAIL", detail)
        results.append(result)
    return results


def format_table(results: Sequence[SuiteResult]) -> str:
    width = max(len(result.name) for result in results)
    lines = [f"{result.name:<{width}}  {'pass' if result.passed else 'FAIL'}  {result.detail}" for result in results]
    failed = sum(not result.passed for result in results)
    lines.append(f"{len(results) - failed}/{len(results)} suites passed")
    return "\n".join(lines)


def exit_status(results: Sequence[SuiteResult]) -> int:
    return min(sum(not result.passed for result in results), MAX_EXIT)

