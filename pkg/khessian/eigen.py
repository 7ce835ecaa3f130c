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

__all__ = ("symmetric_eigenvalues", "jacobi_eigenvalues")

if TYPE_CHECKING:
    import numpy.typing as npt

JACOBI_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 64
TRIGONOMETRIC_GAP = 1e-10


def symmetric_eigenvalues(matrix: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    n = matrix.shape[0]
    if n == 1:
        return matrix.diagonal().copy()
    if n == 2:
        return _eigenvalues_2x2(matrix)
    if n == 3:
        return _eigenvalues_3x3(matrix)
    return jacobi_eigenvalues(matrix)


def _eigenvalues_2x2(matrix: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    a, b, c = matrix[0, 0], matrix[0, 1], matrix[1, 1]
    mean = 0.5 * (a + c)
    radius = math.hypot(0.5 * (a - c), b)
    return np.array([mean - radius, mean + radius])


def _eigenvalues_3x3(matrix: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    off = matrix[0, 1] ** 2 + matrix[0, 2] ** 2 + matrix[1, 2] ** 2
    diagonal = matrix.diagonal()
    if off == 0.0:
        return np.sort(diagonal)
    q = float(np.trace(matrix)) / 3.0
    p2 = float(np.sum((diagonal - q) ** 2)) + 2.0 * off
    p = math.sqrt(p2 / 6.0)
    scale = max(float(np.max(np.abs(matrix))), 1e-300)
    # near-coincident eigenvalues make acos ill-conditioned
    if p / scale < TRIGONOMETRIC_GAP:
        return np.linalg.eigvalsh(matrix)
    shifted = (matrix - q * np.eye(3)) / p
    r = min(1.0, max(-1.0, float(np.linalg.det(shifted)) / 2.0))
    phi = math.acos(r) / 3.0
    largest = q + 2.0 * p * math.cos(phi)
    smallest = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    middle = 3.0 * q - largest - smallest
    values = np.array([smallest, middle, largest])
    if min(abs(largest - middle), abs(middle - smallest)) < TRIGONOMETRIC_GAP * scale:
        return np.linalg.eigvalsh(matrix)
    return values


def jacobi_eigenvalues(matrix: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    a = np.array(matrix, dtype=np.float64, copy=True)
    n = a.shape[0]
    norm = max(float(np.linalg.norm(a)), 1e-300)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= JACOBI_TOLERANCE * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rotation = np.eye(n)
                rotation[p, p] = rotation[q, q] = c
                rotation[p, q] = s
                rotation[q, p] = -s
                a = rotation.T @ a @ rotation
                a[p, q] = a[q, p] = 0.0
    return np.sort(a.diagonal())
