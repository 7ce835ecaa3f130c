import warnings

import numpy as np
import pytest

from khessian import (
    ArgumentError,
    GridSpec,
    KHessianWarning,
    NumericError,
    field_radius,
    growth_constants,
    hessian_decay,
    level_set_bounds,
    normalize_to_Ak,
    quadratic_field,
    rescale,
)

A = normalize_to_Ak([1.0, 1.0, 1.0], 2)


def squared_norm(x):
    return np.sum(x * x, axis=1)


def test_rescale_of_a_quadratic():
    v = rescale(A.tau, 10.0, n=3, nodes=17)
    points = v.spec.points()
    assert np.allclose(v.values, A.tau(points) - 1.0, atol=1e-12)


def test_rescale_of_a_grid_field():
    field = quadratic_field(GridSpec.cube(3, 4.0, 33), A)
    v = rescale(field, 2.0, half_width=1.5, nodes=17)
    assert v.spec.n == 3
    assert np.allclose(v.values, A.tau(v.spec.points()) - 1.0, atol=1e-10)


def test_rescale_errors():
    with pytest.raises(ArgumentError):
        rescale(A.tau, 0.0, n=3)
    with pytest.raises(ArgumentError):
        rescale(A.tau, 2.0)


@pytest.mark.parametrize(("B", "shift"), [(0.0, 0.0), (1.0, 1.0)])
def test_level_set_of_paraboloid(B, shift):
    R = 10.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", KHessianWarning)
        inner, outer = level_set_bounds(lambda x: squared_norm(x) + shift, R, 1.0, 1.0, B, n=3, nodes=33)
    expected = np.sqrt(1.0 - shift / R**2)
    cell = 2.5 / 32 * np.sqrt(3.0)
    assert expected - cell <= outer < expected <= inner <= expected + cell


def test_level_set_warns_on_wrong_growth():
    with pytest.warns(KHessianWarning):
        level_set_bounds(squared_norm, 10.0, 2.0, 2.0, 0.0, n=3, nodes=17)


def test_level_set_rejects_bad_constants():
    with pytest.raises(ArgumentError):
        level_set_bounds(squared_norm, 10.0, 2.0, 1.0, 0.0, n=3)
    with pytest.raises(ArgumentError):
        level_set_bounds(squared_norm, 10.0, 0.0, 1.0, 0.0, n=3)


def test_hessian_decay_of_the_quadratic():
    report = hessian_decay(A.tau, [2.0, 4.0, 8.0], A)
    assert np.all(report.hessian_deviation <= 1e-10)
    assert np.all(report.holder_proxy <= 1e-10)
    assert report.nonincreasing()


def test_hessian_decay_of_a_potential_remainder():
    report = hessian_decay(lambda x: A.tau(x) + 1.0 / np.linalg.norm(x, axis=1), [4.0, 8.0, 16.0, 32.0], A)
    deviation = report.hessian_deviation
    assert np.all(np.diff(deviation) < 0.0)
    # D^2 of 1/|x| scales like R^-3 on the band
    assert deviation[0] / deviation[1] == pytest.approx(8.0, rel=1e-6)
    assert report.nonincreasing()
    payload = report.to_payload()
    assert len(payload["rows"]) == 4
    assert payload["alpha"] == 0.5


def test_hessian_decay_records_level_sets():
    growth = growth_constants(lambda x: A.tau(x) + 1.0, 1.0, radius=40.0, n=3)
    report = hessian_decay(lambda x: A.tau(x) + 1.0, [4.0, 8.0], A, growth=growth)
    assert len(report.level_radii) == 2


@pytest.mark.parametrize(("R_list", "alpha"), [([2.0, 2.0], 0.5), ([4.0, 2.0], 0.5), ([2.0, 4.0], 1.0)])
def test_hessian_decay_errors(R_list, alpha):
    with pytest.raises(ArgumentError):
        hessian_decay(A.tau, R_list, A, alpha)


def test_growth_constants_of_shifted_quadratic():
    def u(x):
        return A.tau(x) + 1.0

    constants = growth_constants(u, 1.0, radius=40.0, n=3)
    a = 0.5 * A.a[0]
    assert constants.A1 == pytest.approx(a + 1.0 / 40.0**2)
    assert constants.A2 >= constants.A1
    assert constants.B >= 0.0
    x = np.random.default_rng(5).standard_normal((200, 3))
    x *= (np.random.default_rng(6).uniform(1.0, 40.0, 200) / np.linalg.norm(x, axis=1))[:, None]
    values, squared = u(x), squared_norm(x)
    assert np.all(constants.A1 * squared <= values * (1.0 + 1e-12))
    assert np.all(values <= (constants.A2 * squared + constants.B) * (1.0 + 1e-12))


def test_growth_constants_errors():
    with pytest.raises(ArgumentError):
        growth_constants(A.tau, 1.0)
    with pytest.raises(ArgumentError):
        growth_constants(A.tau, 5.0, radius=2.0, n=3)
    with pytest.raises(NumericError):
        growth_constants(lambda x: -squared_norm(x), 1.0, radius=4.0, n=3)


def test_field_radius():
    box = quadratic_field(GridSpec.cube(3, 2.0, 33), A)
    assert field_radius(box) == pytest.approx(2.0 - 2.0 * 0.125)
    ellipsoid = quadratic_field(GridSpec.ellipsoid(A, 2.0, 17), A)
    assert field_radius(ellipsoid) == pytest.approx(np.sqrt(4.0 / A.a[0]) - 2.0 * ellipsoid.spec.h_max)
