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

import itertools
import math
from typing import TYPE_CHECKING, Union

import numpy as np

from .eigen import symmetric_eigenvalues
from .errors import ArgumentError, ConeViolationError
from .utils import binomial

__all__ = (
    "SIGMA_MIN",
    "CLOSURE_TOLERANCE",
    "SymMatrix",
    "EigenVector",
    "AkMatrix",
    "sigma_k",
    "sigma_k_matrix",
    "sigma_partial",
    "hk",
    "linearized_coefficients",
    "newton_tensor",
    "F_and_grad",
    "in_gamma_k",
    "cone_membership",
    "normalize_to_Ak",
    "maclaurin_gap",
    "sigma_sequence",
    "newton_tensor_batch",
)

if TYPE_CHECKING:
    from typing import Sequence, Tuple

    import numpy.typing as npt

    Eigenvalues = Union["EigenVector", Sequence[float], npt.NDArray[np.float64]]

SIGMA_MIN = 1e-8
CLOSURE_TOLERANCE = -1e-12
AK_TOLERANCE = 1e-12
MINOR_SUM_MAX_DIM = 4


class SymMatrix:
    __slots__ = ("dim", "entries")

    def __init__(self, dim: int, entries: Sequence[float]) -> None:
        if dim < 1:
            raise ArgumentError(f"matrix dimension must be positive, got {dim}")
        values = np.asarray(entries, dtype=np.float64).reshape(-1)
        if values.size != dim * (dim + 1) // 2:
            raise ArgumentError(
                f"{dim}x{dim} symmetric matrix needs {dim * (dim + 1) // 2} entries, got {values.size}"
            )
        self.dim: int = dim
        self.entries: npt.NDArray[np.float64] = values

    @classmethod
    def from_array(cls, array: npt.ArrayLike) -> SymMatrix:
        matrix = np.asarray(array, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ArgumentError(f"expected a square matrix, got shape {matrix.shape}")
        n = matrix.shape[0]
        symmetric = 0.5 * (matrix + matrix.T)
        return cls(n, symmetric[np.triu_indices(n)])

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> SymMatrix:
        return cls.from_array(np.diag(np.asarray(values, dtype=np.float64)))

    @classmethod
    def identity(cls, dim: int) -> SymMatrix:
        return cls.from_array(np.eye(dim))

    @property
    def array(self) -> npt.NDArray[np.float64]:
        matrix = np.zeros((self.dim, self.dim))
        rows, cols = np.triu_indices(self.dim)
        matrix[rows, cols] = self.entries
        matrix[cols, rows] = self.entries
        return matrix

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.entries)))

    def eigenvalues(self) -> EigenVector:
        return EigenVector(symmetric_eigenvalues(self.array))

    def __repr__(self) -> str:
        return f"SymMatrix(dim={self.dim}, entries={self.entries.tolist()!r})"


class EigenVector:
    __slots__ = ("dim", "lam")

    def __init__(self, values: Sequence[float]) -> None:
        lam = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
        if not np.all(np.isfinite(lam)):
            raise ArgumentError("eigenvalues must be finite")
        self.dim: int = lam.size
        self.lam: npt.NDArray[np.float64] = lam

    def __repr__(self) -> str:
        return f"EigenVector({self.lam.tolist()!r})"


class AkMatrix:
    __slots__ = ("a", "k")

    def __init__(self, a: Sequence[float], k: int) -> None:
        values = np.asarray(a, dtype=np.float64).reshape(-1)
        if not 1 <= k <= values.size:
            raise ArgumentError(f"k must lie in [1, {values.size}], got {k}")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ArgumentError("the diagonal of an A_k matrix must be positive and finite")
        value = sigma_k(values, k)
        if abs(value - 1.0) > AK_TOLERANCE:
            raise ArgumentError(f"sigma_{k}(a) = {value!r} is not 1; use normalize_to_Ak")
        self.a: npt.NDArray[np.float64] = values
        self.k: int = k

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def matrix(self) -> npt.NDArray[np.float64]:
        return np.diag(self.a)

    @property
    def det(self) -> float:
        return float(np.prod(self.a))

    def tau(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
        x = np.asarray(points, dtype=np.float64)
        return 0.5 * np.sum(self.a * x * x, axis=-1)

    def __repr__(self) -> str:
        return f"AkMatrix(a={self.a.tolist()!r}, k={self.k})"


def _as_lambda(values: Eigenvalues) -> npt.NDArray[np.float64]:
    if isinstance(values, EigenVector):
        return values.lam
    return np.asarray(values, dtype=np.float64).reshape(-1)


def _prefix_sigmas(lam: npt.NDArray[np.float64], k: int) -> npt.NDArray[np.float64]:
    # e[j] holds sigma_j of the prefix processed so far
    e = np.zeros(k + 1)
    e[0] = 1.0
    for value in lam:
        e[1:] = e[1:] + value * e[:-1]
    return e


def sigma_k(lam: Eigenvalues, k: int) -> float:
    values = _as_lambda(lam)
    if not 1 <= k <= values.size:
        raise ArgumentError(f"k must lie in [1, {values.size}], got {k}")
    return float(_prefix_sigmas(values, k)[k])


def sigma_k_matrix(matrix: SymMatrix, k: int) -> float:
    if not 1 <= k <= matrix.dim:
        raise ArgumentError(f"k must lie in [1, {matrix.dim}], got {k}")
    if not matrix.is_finite():
        raise ArgumentError("matrix entries must be finite")
    if matrix.dim <= MINOR_SUM_MAX_DIM:
        array = matrix.array
        return float(
            sum(
                np.linalg.det(array[np.ix_(rows, rows)])
                for rows in itertools.combinations(range(matrix.dim), k)
            )
        )
    return sigma_k(matrix.eigenvalues(), k)


def sigma_partial(a: Eigenvalues, k: int, i: int) -> float:
    """sigma_k of a with the i-th entry removed."""
    values = _as_lambda(a)
    if k == 0:
        return 1.0
    rest = np.delete(values, i)
    if k > rest.size:
        return 0.0
    return float(_prefix_sigmas(rest, k)[k])


def hk(a: Eigenvalues, k: int) -> float:
    values = _as_lambda(a)
    return max(values[i] * sigma_partial(values, k - 1, i) for i in range(values.size))


def linearized_coefficients(a: Eigenvalues, k: int) -> npt.NDArray[np.float64]:
    values = _as_lambda(a)
    return np.array([sigma_partial(values, k - 1, i) / k for i in range(values.size)])


def newton_tensor(matrix: SymMatrix, k: int) -> SymMatrix:
    if not 1 <= k <= matrix.dim:
        raise ArgumentError(f"k must lie in [1, {matrix.dim}], got {k}")
    if not matrix.is_finite():
        raise ArgumentError("matrix entries must be finite")
    tensor = newton_tensor_batch(matrix.array[np.newaxis], k)[0]
    return SymMatrix.from_array(tensor)


def F_and_grad(  # noqa: N802
    matrix: SymMatrix, k: int, sigma_min: float = SIGMA_MIN
) -> Tuple[float, SymMatrix]:
    sigma = sigma_k_matrix(matrix, k)
    if sigma < sigma_min or not in_gamma_k(matrix, k):
        raise ConeViolationError(sigma, sigma_min)
    tensor = newton_tensor(matrix, k)
    value = sigma ** (1.0 / k)
    scale = value / (k * sigma)
    return value, SymMatrix(matrix.dim, scale * tensor.entries)


def cone_membership(matrix: SymMatrix, k: int) -> Tuple[bool, bool]:
    """(strict Gamma_k membership, closure membership with tolerance)."""
    sigmas = _prefix_sigmas(matrix.eigenvalues().lam, k)[1:]
    return bool(np.all(sigmas > 0.0)), bool(np.all(sigmas >= CLOSURE_TOLERANCE))


def in_gamma_k(matrix: Union[SymMatrix, Eigenvalues], k: int) -> bool:
    if isinstance(matrix, SymMatrix):
        return cone_membership(matrix, k)[0]
    sigmas = _prefix_sigmas(_as_lambda(matrix), k)[1:]
    return bool(np.all(sigmas > 0.0))


def normalize_to_Ak(d: Sequence[float], k: int) -> AkMatrix:  # noqa: N802
    values = np.asarray(d, dtype=np.float64).reshape(-1)
    if np.any(values <= 0):
        raise ArgumentError("normalize_to_Ak needs strictly positive entries")
    if not 1 <= k <= values.size:
        raise ArgumentError(f"k must lie in [1, {values.size}], got {k}")
    t = sigma_k(values, k) ** (-1.0 / k)
    a = t * values
    # one correction step absorbs the rounding of t
    a = a * sigma_k(a, k) ** (-1.0 / k)
    return AkMatrix(a, k)


def maclaurin_gap(matrix: SymMatrix, k: int) -> float:
    lam = matrix.eigenvalues().lam
    if lam[0] <= 0.0:
        raise ArgumentError("maclaurin_gap needs a positive definite matrix")
    n = matrix.dim
    mean_k = (sigma_k_matrix(matrix, k) / binomial(n, k)) ** (1.0 / k)
    geometric = math.exp(float(np.sum(np.log(lam))) / n)
    return mean_k - geometric


def sigma_sequence(
    hessians: npt.NDArray[np.float64], k: int
) -> npt.NDArray[np.float64]:
    """sigma_0..sigma_k of a stack of symmetric matrices, shape (..., k + 1)."""
    n = hessians.shape[-1]
    out = np.zeros(hessians.shape[:-2] + (k + 1,))
    out[..., 0] = 1.0
    if n <= MINOR_SUM_MAX_DIM:
        for j in range(1, k + 1):
            for rows in itertools.combinations(range(n), j):
                block = hessians[..., rows, :][..., :, rows]
                out[..., j] += np.linalg.det(block)
        return out
    lam = np.linalg.eigvalsh(hessians)
    for i in range(n):
        out[..., 1:] = out[..., 1:] + lam[..., i, np.newaxis] * out[..., :-1]
    return out


def newton_tensor_batch(
    hessians: npt.NDArray[np.float64],
    k: int,
    sigmas: npt.NDArray[np.float64] | None = None,
) -> npt.NDArray[np.float64]:
    """T_{k-1} of a stack of symmetric matrices."""
    n = hessians.shape[-1]
    if sigmas is None:
        sigmas = sigma_sequence(hessians, k)
    identity = np.broadcast_to(np.eye(n), hessians.shape)
    tensor = np.array(identity, copy=True)
    for m in range(1, k):
        tensor = sigmas[..., m, np.newaxis, np.newaxis] * identity - hessians @ tensor
    return tensor
