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
import struct
from typing import TYPE_CHECKING

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .enums import DomainKind, NodeTag
from .errors import ArgumentError, InternalError
from .symfunc import SymMatrix

__all__ = (
    "MIN_NODES",
    "GridSpec",
    "GridField",
    "discrete_hessian",
    "hessian_stack",
    "quadratic_field",
    "write_binary",
    "read_binary",
    "write_csv",
)

if TYPE_CHECKING:
    from typing import Callable, Optional, Sequence, Tuple, Union

    import numpy.typing as npt

    from .symfunc import AkMatrix
    from .utils import PathType

    Array = npt.NDArray[np.float64]

MIN_NODES = 17
PADDING_CELLS = 2
MAGIC = b"KHES"
FORMAT_VERSION = 1


def _node_counts(nodes: Union[int, Sequence[int]], n: int) -> Tuple[int, ...]:
    counts = (int(nodes),) * n if isinstance(nodes, (int, np.integer)) else tuple(int(c) for c in nodes)
    if len(counts) != n:
        raise ArgumentError(f"expected {n} node counts, got {len(counts)}")
    for count in counts:
        if count < MIN_NODES or count % 2 == 0:
            raise ArgumentError(f"nodes per axis must be odd and at least {MIN_NODES}, got {count}")
    return counts


class GridSpec:
    __slots__ = ("kind", "nodes", "lower", "upper", "a", "s")

    def __init__(
        self,
        kind: DomainKind,
        nodes: Tuple[int, ...],
        lower: Array,
        upper: Array,
        a: Optional[Array] = None,
        s: Optional[float] = None,
    ) -> None:
        if np.any(upper <= lower):
            raise ArgumentError("box corners must satisfy lower < upper on every axis")
        if kind is DomainKind.ELLIPSOID and (a is None or s is None or s <= 0):
            raise ArgumentError("an ellipsoid grid needs the diagonal of A and a level s > 0")
        self.kind: DomainKind = kind
        self.nodes: Tuple[int, ...] = nodes
        self.lower: Array = np.asarray(lower, dtype=np.float64)
        self.upper: Array = np.asarray(upper, dtype=np.float64)
        self.a: Optional[Array] = None if a is None else np.asarray(a, dtype=np.float64)
        self.s: Optional[float] = None if s is None else float(s)

    @classmethod
    def box(
        cls, lower: Sequence[float], upper: Sequence[float], nodes: Union[int, Sequence[int]] = 33
    ) -> GridSpec:
        lo = np.asarray(lower, dtype=np.float64).reshape(-1)
        hi = np.asarray(upper, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape:
            raise ArgumentError("box corners have different dimensions")
        return cls(DomainKind.BOX, _node_counts(nodes, lo.size), lo, hi)

    @classmethod
    def cube(cls, n: int, half_width: float, nodes: Union[int, Sequence[int]] = 33) -> GridSpec:
        return cls.box([-half_width] * n, [half_width] * n, nodes)

    @classmethod
    def ellipsoid(cls, A: AkMatrix, s: float, nodes: Union[int, Sequence[int]] = 33) -> GridSpec:  # noqa: N803
        if s <= 0:
            raise ArgumentError(f"ellipsoid level must be positive, got {s!r}")
        counts = _node_counts(nodes, A.n)
        semi_axes = np.sqrt(2.0 * s / A.a)
        # half-width L = R + PADDING_CELLS * h with h = 2 L / (N - 1)
        shrink = 1.0 - 2.0 * PADDING_CELLS / (np.asarray(counts, dtype=np.float64) - 1.0)
        half = semi_axes / shrink
        return cls(DomainKind.ELLIPSOID, counts, -half, half, A.a.copy(), s)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.nodes

    @property
    def size(self) -> int:
        return int(np.prod(self.nodes))

    @property
    def h(self) -> Array:
        return (self.upper - self.lower) / (np.asarray(self.nodes, dtype=np.float64) - 1.0)

    @property
    def h_max(self) -> float:
        return float(np.max(self.h))

    @property
    def strides(self) -> Tuple[int, ...]:
        # C-order flat index strides
        strides = [1] * self.n
        for i in range(self.n - 2, -1, -1):
            strides[i] = strides[i + 1] * self.nodes[i + 1]
        return tuple(strides)

    def axes(self) -> Tuple[Array, ...]:
        return tuple(np.linspace(lo, hi, count) for lo, hi, count in zip(self.lower, self.upper, self.nodes))

    def points(self) -> Array:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def tau(self) -> Array:
        if self.a is None:
            raise ArgumentError("tau is defined for ellipsoid grids only")
        x = self.points()
        return 0.5 * np.sum(self.a * x * x, axis=1)

    def mask(self) -> npt.NDArray[np.int8]:
        tags = np.full(self.nodes, NodeTag.INTERIOR, dtype=np.int8)
        if self.kind is DomainKind.BOX:
            for axis in range(self.n):
                index: list[object] = [slice(None)] * self.n
                index[axis] = 0
                tags[tuple(index)] = NodeTag.BOUNDARY
                index[axis] = -1
                tags[tuple(index)] = NodeTag.BOUNDARY
            return tags.reshape(-1)

        assert self.s is not None
        outside = (self.tau() >= self.s).reshape(self.nodes)
        tags[outside] = NodeTag.EXTERIOR
        inside = ~outside
        touched = np.zeros(self.nodes, dtype=bool)
        for offset in itertools.product((-1, 0, 1), repeat=self.n):
            touched |= _shift(inside, offset)
        tags[outside & touched] = NodeTag.BOUNDARY
        flat = tags.reshape(-1)
        self._check_stencils(flat)
        return flat

    def _check_stencils(self, tags: npt.NDArray[np.int8]) -> None:
        grid = tags.reshape(self.nodes)
        for axis in range(self.n):
            index: list[object] = [slice(None)] * self.n
            for edge in (0, -1):
                index[axis] = edge
                if np.any(grid[tuple(index)] == NodeTag.INTERIOR):
                    raise InternalError("an interior node touches the edge of the grid hull")

    def same_as(self, other: GridSpec) -> bool:
        return (
            self.kind is other.kind
            and self.nodes == other.nodes
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and self.s == other.s
        )

    def __repr__(self) -> str:
        if self.kind is DomainKind.ELLIPSOID:
            return f"GridSpec(ellipsoid, s={self.s!r}, nodes={self.nodes!r})"
        return f"GridSpec(box, lower={self.lower.tolist()!r}, upper={self.upper.tolist()!r}, nodes={self.nodes!r})"


def _shift(array: npt.NDArray[np.bool_], offset: Sequence[int]) -> npt.NDArray[np.bool_]:
    out = np.zeros_like(array)
    source: list[slice] = []
    target: list[slice] = []
    for d in offset:
        if d > 0:
            source.append(slice(0, -d))
            target.append(slice(d, None))
        elif d < 0:
            source.append(slice(-d, None))
            target.append(slice(0, d))
        else:
            source.append(slice(None))
            target.append(slice(None))
    out[tuple(target)] = array[tuple(source)]
    return out


class GridField:
    __slots__ = ("spec", "values", "mask", "boundary_value")

    def __init__(
        self,
        spec: GridSpec,
        values: npt.ArrayLike,
        mask: Optional[npt.NDArray[np.int8]] = None,
        boundary_value: Optional[float] = None,
    ) -> None:
        array = np.asarray(values, dtype=np.float64).reshape(-1)
        if array.size != spec.size:
            raise ArgumentError(f"expected {spec.size} values, got {array.size}")
        if not np.all(np.isfinite(array)):
            raise ArgumentError("field values must be finite")
        self.spec: GridSpec = spec
        self.mask: npt.NDArray[np.int8] = spec.mask() if mask is None else mask
        if spec.kind is DomainKind.ELLIPSOID:
            level = spec.s if boundary_value is None else boundary_value
            assert level is not None
            array = array.copy()
            array[self.mask != NodeTag.INTERIOR] = level
            self.boundary_value: Optional[float] = float(level)
        else:
            self.boundary_value = None
        self.values: Array = array

    @classmethod
    def from_function(
        cls,
        spec: GridSpec,
        func: Callable[[Array], Array],
        boundary_value: Optional[float] = None,
    ) -> GridField:
        return cls(spec, func(spec.points()), boundary_value=boundary_value)

    @property
    def interior(self) -> npt.NDArray[np.intp]:
        return np.flatnonzero(self.mask == NodeTag.INTERIOR)

    @property
    def h(self) -> Array:
        return self.spec.h

    def grid_values(self) -> Array:
        return self.values.reshape(self.spec.nodes)

    def stencil_values(self) -> Array:
        """Nodal values as the difference stencils read them.

        Off the interior of an ellipsoid grid the constant data is continued
        along tau, so a quadratic equal to s on the boundary is reproduced.
        """
        if self.spec.kind is not DomainKind.ELLIPSOID:
            return self.values
        assert self.spec.s is not None
        outside = self.mask != NodeTag.INTERIOR
        values = self.values.copy()
        values[outside] += self.spec.tau()[outside] - self.spec.s
        return values

    def with_values(self, values: npt.ArrayLike) -> GridField:
        return GridField(self.spec, values, self.mask, self.boundary_value)

    def copy(self) -> GridField:
        return GridField(self.spec, self.values.copy(), self.mask, self.boundary_value)

    def interpolator(
        self, bounds: Optional[Tuple[Array, Array]] = None, method: str = "cubic", padding: int = 3
    ) -> RegularGridInterpolator:
        """Interpolant of the nodal values, optionally built on a sub-box."""
        axes = self.spec.axes()
        grid = self.grid_values()
        if bounds is not None:
            lo, hi = bounds
            slices = []
            for axis, (coords, left, right) in enumerate(zip(axes, lo, hi)):
                start = max(int(np.searchsorted(coords, left, side="right")) - 1 - padding, 0)
                stop = min(int(np.searchsorted(coords, right, side="left")) + 1 + padding, coords.size)
                if stop - start < 4:
                    raise ArgumentError(f"interpolation window on axis {axis} is too narrow")
                slices.append(slice(start, stop))
            axes = tuple(coords[window] for coords, window in zip(axes, slices))
            grid = grid[tuple(slices)]
        return RegularGridInterpolator(axes, grid, method=method, bounds_error=True)

    def sample(self, points: npt.ArrayLike, method: str = "cubic") -> Array:
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        bounds = (np.min(x, axis=0), np.max(x, axis=0))
        try:
            return np.asarray(self.interpolator(bounds, method)(x), dtype=np.float64)
        except ValueError as exc:
            raise ArgumentError(f"sample points fall outside the grid: {exc}") from None

    def __repr__(self) -> str:
        return f"GridField({self.spec!r})"


def quadratic_field(spec: GridSpec, A: AkMatrix, constant: float = 0.0) -> GridField:  # noqa: N803
    return GridField.from_function(spec, lambda x: A.tau(x) + constant)


def _cross_offsets(spec: GridSpec) -> Sequence[Tuple[int, int, int, int]]:
    strides = spec.strides
    return [(i, j, strides[i], strides[j]) for i in range(spec.n) for j in range(i + 1, spec.n)]


def hessian_stack(field: GridField, nodes: Optional[npt.NDArray[np.intp]] = None) -> Array:
    """Central-difference Hessians at the given flat node indices, shape (m, n, n)."""
    spec = field.spec
    idx = field.interior if nodes is None else np.asarray(nodes, dtype=np.intp)
    u = field.stencil_values()
    h = spec.h
    strides = spec.strides
    out = np.empty((idx.size, spec.n, spec.n))
    try:
        for i in range(spec.n):
            step = strides[i]
            out[:, i, i] = (u[idx + step] - 2.0 * u[idx] + u[idx - step]) / (h[i] * h[i])
        for i, j, si, sj in _cross_offsets(spec):
            value = (u[idx + si + sj] - u[idx + si - sj] - u[idx - si + sj] + u[idx - si - sj]) / (
                4.0 * h[i] * h[j]
            )
            out[:, i, j] = value
            out[:, j, i] = value
    except IndexError:
        raise InternalError("stencil reaches outside the grid") from None
    return out


def discrete_hessian(field: GridField, node: Union[int, Sequence[int]]) -> SymMatrix:
    spec = field.spec
    if isinstance(node, (int, np.integer)):
        flat = int(node)
        multi = np.unravel_index(flat, spec.nodes)
    else:
        multi = tuple(int(c) for c in node)
        flat = int(np.ravel_multi_index(multi, spec.nodes))
    for c, count in zip(multi, spec.nodes):
        if not 1 <= c <= count - 2:
            raise InternalError(f"node {tuple(int(v) for v in multi)} has no full stencil")
    return SymMatrix.from_array(hessian_stack(field, np.array([flat]))[0])


# binary layout, little-endian:
#   magic "KHES", u32 version, u32 n, u32 kind (0 box, 1 ellipsoid),
#   n x (u32 nodes, f64 lower, f64 upper), f64 s, n x f64 a, f64 boundary value,
#   u32 run count, runs of (u8 tag, u32 length), then the f64 values
_KIND_CODES = {DomainKind.BOX: 0, DomainKind.ELLIPSOID: 1}


def _runs(mask: npt.NDArray[np.int8]) -> list[Tuple[int, int]]:
    change = np.flatnonzero(np.diff(mask)) + 1
    starts = np.concatenate([[0], change])
    stops = np.concatenate([change, [mask.size]])
    return [(int(mask[a]), int(b - a)) for a, b in zip(starts, stops)]


def encode_field(field: GridField) -> bytes:
    spec = field.spec
    parts = [MAGIC, struct.pack("<III", FORMAT_VERSION, spec.n, _KIND_CODES[spec.kind])]
    for count, lo, hi in zip(spec.nodes, spec.lower, spec.upper):
        parts.append(struct.pack("<Idd", count, lo, hi))
    parts.append(struct.pack("<d", spec.s if spec.s is not None else 0.0))
    a = spec.a if spec.a is not None else np.zeros(spec.n)
    parts.append(np.asarray(a, dtype="<f8").tobytes())
    parts.append(struct.pack("<d", field.boundary_value if field.boundary_value is not None else 0.0))
    runs = _runs(field.mask)
    parts.append(struct.pack("<I", len(runs)))
    parts.extend(struct.pack("<BI", tag, length) for tag, length in runs)
    parts.append(field.values.astype("<f8").tobytes())
    return b"".join(parts)


def decode_field(data: bytes) -> GridField:
    if data[:4] != MAGIC:
        raise ArgumentError("not a field file: bad magic bytes")
    offset = 4
    version, n, kind_code = struct.unpack_from("<III", data, offset)
    offset += 12
    if version != FORMAT_VERSION:
        raise ArgumentError(f"unsupported field format version {version}")
    nodes, lower, upper = [], [], []
    for _ in range(n):
        count, lo, hi = struct.unpack_from("<Idd", data, offset)
        offset += struct.calcsize("<Idd")
        nodes.append(count)
        lower.append(lo)
        upper.append(hi)
    (s,) = struct.unpack_from("<d", data, offset)
    offset += 8
    a = np.frombuffer(data, dtype="<f8", count=n, offset=offset).astype(np.float64)
    offset += 8 * n
    (boundary_value,) = struct.unpack_from("<d", data, offset)
    offset += 8
    (run_count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    tags = []
    for _ in range(run_count):
        tag, length = struct.unpack_from("<BI", data, offset)
        offset += struct.calcsize("<BI")
        tags.append(np.full(length, tag, dtype=np.int8))
    mask = np.concatenate(tags) if tags else np.zeros(0, dtype=np.int8)
    kind = DomainKind.ELLIPSOID if kind_code == 1 else DomainKind.BOX
    spec = GridSpec(
        kind,
        tuple(nodes),
        np.array(lower),
        np.array(upper),
        a if kind is DomainKind.ELLIPSOID else None,
        s if kind is DomainKind.ELLIPSOID else None,
    )
    values = np.frombuffer(data, dtype="<f8", count=spec.size, offset=offset).astype(np.float64)
    if mask.size != spec.size:
        raise ArgumentError("mask length does not match the grid")
    return GridField(spec, values, mask, boundary_value if kind is DomainKind.ELLIPSOID else None)


def write_binary(field: GridField, path: PathType) -> None:
    with open(path, "wb") as fp:
        fp.write(encode_field(field))


def read_binary(path: PathType) -> GridField:
    with open(path, "rb") as fp:
        return decode_field(fp.read())


def write_csv(field: GridField, path: PathType) -> None:
    header = ",".join([f"x{i + 1}" for i in range(field.spec.n)] + ["u"])
    table = np.column_stack([field.spec.points(), field.values])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=header, comments="")
