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

from typing import List, Literal, TypedDict

__all__ = (
    "MatrixConfig",
    "FConfig",
    "DomainConfig",
    "SolverConfig",
    "CompactConfig",
    "BarrierOverrides",
    "SourceConfig",
    "GrowthConfig",
    "SolveDirichletConfig",
    "BuildEntireConfig",
    "BarriersConfig",
    "FitAsymptoticsConfig",
    "CheckLiouvilleConfig",
    "SelftestConfig",
)


class _MatrixConfigOptional(TypedDict, total=False):
    normalize: bool


class MatrixConfig(_MatrixConfigOptional):
    a: List[float]
    k: int


class _FConfigOptional(TypedDict, total=False):
    value: float
    C0: float
    beta: float
    sign: Literal[-1, 1]
    center: List[float]
    radius: float
    amplitude: float
    parts: List[FConfig]


class FConfig(_FConfigOptional):
    variant: Literal["constant", "power_tail", "bump", "sum"]


class _DomainConfigOptional(TypedDict, total=False):
    nodes: int
    lower: List[float]
    upper: List[float]
    s: float


class DomainConfig(_DomainConfigOptional):
    kind: Literal["box", "ellipsoid"]


class SolverConfig(TypedDict, total=False):
    tol_nonlin: float
    sigma_min: float
    max_iterations: int
    max_halvings: int
    armijo: float


class CompactConfig(TypedDict, total=False):
    lower: List[float]
    upper: List[float]
    half_width: float
    nodes: int


class BarrierOverrides(TypedDict, total=False):
    H2: float
    tau_max: float


class _SourceConfigOptional(TypedDict, total=False):
    r0: float


class SourceConfig(_SourceConfigOptional):
    delta: float
    n: int


class _GrowthConfigOptional(TypedDict, total=False):
    R0: float


class GrowthConfig(_GrowthConfigOptional):
    A1: float
    A2: float
    B: float


class _SolveDirichletConfigOptional(TypedDict, total=False):
    solver: SolverConfig


class SolveDirichletConfig(_SolveDirichletConfigOptional):
    A: MatrixConfig
    f: FConfig
    domain: DomainConfig


class _BuildEntireConfigOptional(TypedDict, total=False):
    s_list: List[float]
    nodes: int
    margin: float
    solver: SolverConfig
    barriers: BarrierOverrides
    parallel: bool


class BuildEntireConfig(_BuildEntireConfigOptional):
    A: MatrixConfig
    f: FConfig
    K: CompactConfig


class _BarriersConfigOptional(TypedDict, total=False):
    nodes: int
    solver: SolverConfig
    barriers: BarrierOverrides


class BarriersConfig(_BarriersConfigOptional):
    A: MatrixConfig
    f: FConfig


class _FitAsymptoticsConfigOptional(TypedDict, total=False):
    field: str
    source: SourceConfig
    shells: int
    samples: int
    decay_radii: List[float]


class FitAsymptoticsConfig(_FitAsymptoticsConfigOptional):
    A: MatrixConfig
    annulus: List[float]


class _CheckLiouvilleConfigOptional(TypedDict, total=False):
    field: str
    constant: float
    alpha: float
    growth: GrowthConfig


class CheckLiouvilleConfig(_CheckLiouvilleConfigOptional):
    A: MatrixConfig
    R_list: List[float]


class SelftestConfig(TypedDict, total=False):
    quick: bool
