import math

import numpy as np
import pytest

from khessian import (
    ArgumentError,
    DomainKind,
    GridField,
    GridSpec,
    InternalError,
    NodeTag,
    discrete_hessian,
    hessian_stack,
    normalize_to_Ak,
    quadratic_field,
    read_binary,
    write_binary,
    write_csv,
)


@pytest.fixture
def A():
    return normalize_to_Ak([1.0, 2.0, 3.0], 2)


def test_box_spacing():
    spec = GridSpec.box([0.0, -1.0], [2.0, 1.0], [17, 21])
    assert spec.n == 2
    assert spec.size == 17 * 21
    assert np.allclose(spec.h, [2.0 / 16, 2.0 / 20])
    assert spec.strides == (21, 1)


@pytest.mark.parametrize("nodes", [15, 18, [17, 16]])
def test_node_counts_must_be_odd_and_large_enough(nodes):
    with pytest.raises(ArgumentError):
        GridSpec.box([0.0, 0.0], [1.0, 1.0], nodes)


def test_box_rejects_inverted_corners():
    with pytest.raises(ArgumentError):
        GridSpec.box([0.0, 1.0], [1.0, 0.0], 17)


def test_box_mask_marks_faces():
    spec = GridSpec.cube(2, 1.0, 17)
    mask = spec.mask().reshape(17, 17)
    assert np.all(mask[0, :] == NodeTag.BOUNDARY)
    assert np.all(mask[:, -1] == NodeTag.BOUNDARY)
    assert np.all(mask[1:-1, 1:-1] == NodeTag.INTERIOR)


def test_ellipsoid_hull_has_padding(A):
    spec = GridSpec.ellipsoid(A, 2.0, 33)
    semi_axes = np.sqrt(4.0 / A.a)
    assert spec.kind is DomainKind.ELLIPSOID
    assert np.allclose(spec.upper - semi_axes, 2.0 * spec.h)


def test_ellipsoid_mask(A):
    spec = GridSpec.ellipsoid(A, 2.0, 25)
    mask = spec.mask()
    tau = spec.tau()
    assert np.all(tau[mask == NodeTag.INTERIOR] < 2.0)
    assert np.all(tau[mask != NodeTag.INTERIOR] >= 2.0)
    # every interior node keeps its full stencil inside the grid
    grid = mask.reshape(spec.nodes)
    assert not np.any(grid[0] == NodeTag.INTERIOR)
    assert np.any(mask == NodeTag.EXTERIOR)


def test_ellipsoid_field_clamps_outside_values(A):
    spec = GridSpec.ellipsoid(A, 2.0, 17)
    field = GridField(spec, np.zeros(spec.size))
    outside = field.mask != NodeTag.INTERIOR
    assert np.all(field.values[outside] == 2.0)
    assert np.all(field.values[~outside] == 0.0)


def test_field_rejects_bad_values():
    spec = GridSpec.cube(2, 1.0, 17)
    with pytest.raises(ArgumentError):
        GridField(spec, np.zeros(10))
    values = np.zeros(spec.size)
    values[3] = math.inf
    with pytest.raises(ArgumentError):
        GridField(spec, values)


@pytest.mark.parametrize("n", [2, 3])
def test_hessian_exact_on_quadratics(n):
    A = normalize_to_Ak(np.linspace(0.5, 2.0, n), min(2, n))
    spec = GridSpec.cube(n, 1.0, 17)
    field = quadratic_field(spec, A, 3.0)
    stack = hessian_stack(field)
    assert np.max(np.abs(stack - A.matrix)) <= 1e-10


def test_hessian_of_full_quadratic_form():
    rng = np.random.default_rng(2)
    raw = rng.standard_normal((3, 3))
    M = raw + raw.T
    spec = GridSpec.box([-1.0, -0.5, 0.0], [1.0, 0.5, 2.0], [17, 19, 21])
    field = GridField.from_function(spec, lambda x: 0.5 * np.einsum("mi,ij,mj->m", x, M, x) + x[:, 0])
    assert np.max(np.abs(hessian_stack(field) - M)) <= 1e-9


def test_discrete_hessian_odd_function_at_origin():
    spec = GridSpec.cube(2, 1.0, 17)
    field = GridField.from_function(spec, lambda x: x[:, 0] ** 3)
    hessian = discrete_hessian(field, (8, 8))
    assert hessian.array[0, 0] == pytest.approx(0.0, abs=1e-14)


def test_discrete_hessian_bilinear():
    spec = GridSpec.cube(3, 1.0, 17)
    field = GridField.from_function(spec, lambda x: x[:, 0] * x[:, 1])
    hessian = discrete_hessian(field, (5, 9, 3)).array
    assert hessian[0, 1] == pytest.approx(1.0, rel=1e-12)
    assert hessian[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert hessian[2, 2] == pytest.approx(0.0, abs=1e-12)


def test_discrete_hessian_flat_index_matches_multi_index():
    spec = GridSpec.cube(2, 1.0, 17)
    field = GridField.from_function(spec, lambda x: np.sin(x[:, 0]) * np.cos(x[:, 1]))
    flat = int(np.ravel_multi_index((4, 11), spec.nodes))
    assert np.array_equal(discrete_hessian(field, flat).array, discrete_hessian(field, (4, 11)).array)


def test_discrete_hessian_rejects_edge_node():
    spec = GridSpec.cube(2, 1.0, 17)
    field = GridField(spec, np.zeros(spec.size))
    with pytest.raises(InternalError):
        discrete_hessian(field, (0, 5))


def test_sample_reproduces_cubics():
    spec = GridSpec.cube(3, 1.0, 17)
    field = GridField.from_function(spec, lambda x: x[:, 0] ** 3 - 2.0 * x[:, 1] * x[:, 2] + 1.0)
    points = np.random.default_rng(4).uniform(-0.7, 0.7, (20, 3))
    expected = points[:, 0] ** 3 - 2.0 * points[:, 1] * points[:, 2] + 1.0
    assert np.allclose(field.sample(points), expected, atol=1e-10)


def test_sample_outside_grid():
    spec = GridSpec.cube(2, 1.0, 17)
    field = GridField(spec, np.zeros(spec.size))
    with pytest.raises(ArgumentError):
        field.sample([[1.5, 0.0]])


def test_binary_file_restores_ellipsoid_field(tmp_path, A):
    spec = GridSpec.ellipsoid(A, 1.5, 17)
    field = GridField.from_function(spec, lambda x: A.tau(x) - 0.25)
    path = tmp_path / "field.khes"
    write_binary(field, path)
    restored = read_binary(path)
    assert restored.spec.same_as(spec)
    assert restored.boundary_value == 1.5
    assert np.array_equal(restored.mask, field.mask)
    assert np.array_equal(restored.values, field.values)


def test_binary_file_rejects_other_files(tmp_path):
    path = tmp_path / "junk.khes"
    path.write_bytes(b"NOPE" + bytes(32))
    with pytest.raises(ArgumentError):
        read_binary(path)


def test_csv_layout(tmp_path):
    spec = GridSpec.cube(2, 1.0, 17)
    field = GridField.from_function(spec, lambda x: x[:, 0] + 2.0 * x[:, 1])
    path = tmp_path / "field.csv"
    write_csv(field, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,u"
    assert len(lines) == spec.size + 1
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(table[:, 2], field.values)


def test_hessian_exact_on_clamped_ellipsoid_quadratic(A):
    spec = GridSpec.ellipsoid(A, 2.0, 17)
    field = quadratic_field(spec, A)
    assert np.all(field.values[field.mask != NodeTag.INTERIOR] == 2.0)
    assert np.max(np.abs(hessian_stack(field) - A.matrix)) <= 1e-10


def test_stencil_values_continue_boundary_data(A):
    spec = GridSpec.ellipsoid(A, 2.0, 17)
    field = GridField(spec, np.zeros(spec.size), boundary_value=5.0)
    outside = field.mask != NodeTag.INTERIOR
    stencil = field.stencil_values()
    assert np.allclose(stencil[outside], 5.0 + spec.tau()[outside] - 2.0)
    assert np.all(stencil[~outside] == 0.0)
