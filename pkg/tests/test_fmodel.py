import math

import numpy as np
import pytest

from khessian import (
    ArgumentError,
    Blend,
    Bump,
    Constant,
    ConstantsError,
    FromCallable,
    PowerTail,
    PowerTailSign,
    Sum,
    TailEnvelope,
    ball_quadrature,
    bump_profile,
    lnk_norm,
    normalize_to_Ak,
    sphere_points,
)
from khessian.utils import unit_ball_volume

A3 = normalize_to_Ak([1.0, 1.0, 1.0], 2)


def finite_difference(f, points, order, step=1e-5):
    n = points.shape[1]
    columns = []
    for i in range(n):
        shift = np.zeros(n)
        shift[i] = step
        plus = f.derivatives(points + shift, order - 1)
        minus = f.derivatives(points - shift, order - 1)
        columns.append((plus - minus) / (2.0 * step))
    return np.stack(columns, axis=-1)


MODELS = [
    PowerTail(0.7, 3.5),
    PowerTail(0.3, 5.0, PowerTailSign.NEGATIVE),
    Bump([0.1, -0.2, 0.0], 2.0, 0.5),
    Sum([PowerTail(0.2, 4.0), Bump([0.0, 0.0, 0.0], 2.5, -0.3)]),
    Blend(PowerTail(0.5, 3.0), 0.25),
]


@pytest.mark.parametrize("model", MODELS, ids=repr)
@pytest.mark.parametrize("order", [1, 2, 3])
def test_derivatives_match_finite_differences(model, order):
    rng = np.random.default_rng(order)
    points = rng.uniform(-0.6, 0.6, (12, 3))
    expected = finite_difference(model, points, order)
    got = model.derivatives(points, order)
    assert got.shape == (12,) + (3,) * order
    assert np.allclose(got, expected, atol=1e-6)


def test_constant():
    f = Constant(2.0)
    points = np.zeros((4, 3))
    assert np.array_equal(f.values(points), np.full(4, 2.0))
    assert f.derivatives(points, 2).shape == (4, 3, 3)
    assert not f.is_unit()
    assert Constant().is_unit()


def test_constant_other_than_one_has_no_envelope():
    with pytest.raises(ConstantsError):
        Constant(2.0).tail_envelope(A3)


def test_power_tail_values():
    f = PowerTail(0.5, 4.0)
    x = np.array([[1.0, 0.0, 0.0]])
    assert f.values(x)[0] == pytest.approx(1.0 + 0.5 * 2.0**-2.0)
    assert f.inf_bound == 1.0
    assert PowerTail(0.5, 4.0, PowerTailSign.NEGATIVE).inf_bound == pytest.approx(0.5)


@pytest.mark.parametrize(("C0", "beta"), [(-1.0, 3.0), (1.0, 2.0), (1.0, 1.5)])
def test_power_tail_rejects(C0, beta):
    with pytest.raises(ArgumentError):
        PowerTail(C0, beta)


def test_check_C1_rejects_nonpositive_infimum():
    with pytest.raises(ArgumentError):
        PowerTail(1.0, 3.0, PowerTailSign.NEGATIVE).check_C1()
    PowerTail(0.5, 3.0, PowerTailSign.NEGATIVE).check_C1()


def test_bump_values():
    f = Bump([0.0, 0.0, 0.0], 1.0, 0.5)
    assert f.eval([0.0, 0.0, 0.0]) == pytest.approx(1.5)
    assert f.eval([2.0, 0.0, 0.0]) == 1.0
    assert f.inf_bound == 1.0
    assert Bump([0.0, 0.0, 0.0], 1.0, -0.25).inf_bound == pytest.approx(0.75)


def test_bump_dimension_mismatch():
    with pytest.raises(ArgumentError):
        Bump([0.0, 0.0], 1.0, 0.5).values(np.zeros((1, 3)))


def test_bump_profile_vanishes_outside():
    q = np.array([0.0, 0.5, 1.0, 2.0])
    values = bump_profile(q)
    assert values[0] == pytest.approx(1.0)
    assert values[2] == 0.0 and values[3] == 0.0
    with pytest.raises(ArgumentError):
        bump_profile(q, 4)


def test_sum_combines_perturbations():
    first = PowerTail(0.2, 4.0)
    second = Bump([0.0, 0.0, 0.0], 1.0, 0.5)
    total = Sum([first, second])
    x = np.array([[0.3, 0.1, -0.2]])
    assert total.values(x)[0] == pytest.approx(first.values(x)[0] + second.values(x)[0] - 1.0)
    assert total.sup_bound() == pytest.approx(1.7)
    with pytest.raises(ArgumentError):
        Sum([])


def test_blend_interpolates():
    base = PowerTail(0.8, 3.0)
    x = np.array([[0.5, 0.5, 0.5]])
    assert Blend(base, 0.0).values(x)[0] == 1.0
    assert Blend(base, 1.0).values(x)[0] == pytest.approx(base.values(x)[0])
    assert Blend(base, 0.5).values(x)[0] == pytest.approx(0.5 * (1.0 + base.values(x)[0]))
    with pytest.raises(ArgumentError):
        Blend(base, 1.5)


def test_from_callable_values_only():
    f = FromCallable(lambda x: 1.0 + x[:, 0] ** 2, inf_bound=1.0)
    assert f.values([[2.0, 0.0, 0.0]])[0] == pytest.approx(5.0)
    with pytest.raises(ArgumentError):
        f.derivatives([[0.0, 0.0, 0.0]], 1)
    with pytest.raises(ConstantsError):
        f.tail_envelope(A3)


def test_derivative_order_range():
    with pytest.raises(ArgumentError):
        PowerTail(0.5, 3.0).derivatives(np.zeros((1, 3)), 4)


def test_tail_envelope_dominates_power_tail():
    f = PowerTail(0.6, 3.5)
    env = f.tail_envelope(A3)
    assert env.s0 > 1.0
    assert env.beta == 3.5
    directions = sphere_points(3, 64)
    for s in env.s0 * np.geomspace(1.0, 1e4, 12):
        # points of the level set {tau = s} for the isotropic matrix
        points = math.sqrt(2.0 * s / A3.a[0]) * directions
        values = f.values(points)
        assert np.all(values <= env.upper(s) + 1e-14)
        assert np.all(values >= env.lower(s) - 1e-14)


def test_tail_envelope_of_bump_starts_outside_support():
    f = Bump([0.0, 0.0, 0.0], 1.0, 0.5)
    env = f.tail_envelope(A3)
    assert env.C0 == 0.0
    assert env.s0 >= f.support_level(A3)


@pytest.mark.parametrize(
    ("C0", "s0", "beta", "error"),
    [
        (-1.0, 2.0, 3.0, ArgumentError),
        (1.0, 1.0, 3.0, ArgumentError),
        (1.0, 2.0, 2.0, ArgumentError),
        (4.0, 2.0, 4.0, ConstantsError),
    ],
)
def test_tail_envelope_validation(C0, s0, beta, error):
    with pytest.raises(error):
        TailEnvelope(C0, s0, beta)


def test_verify_C2_certified():
    f = PowerTail(0.5, 4.0)
    assert f.verify_C2(3.0, [1.0, 10.0])
    assert f.verify_C2(4.0, [1.0, 10.0])
    assert not f.verify_C2(5.0, [1.0, 10.0])


def test_verify_C2_sampled():
    f = FromCallable(lambda x: np.ones(x.shape[0]), inf_bound=1.0)
    assert f.verify_C2(3.0, [1.0, 100.0])
    with pytest.raises(ArgumentError):
        f.verify_C2(3.0, [1.0])


def test_scaled_derivative_norms_are_bounded():
    f = PowerTail(1.0, 3.0)
    table = f.scaled_derivative_norms(3.0, [10.0, 100.0, 1000.0])
    assert table.shape == (4, 3)
    assert np.all(table[:, -1] <= 2.0 * table[:, 0])


def test_sphere_points_are_unit():
    for n in (2, 3, 4):
        points = sphere_points(n, 40)
        assert points.shape == (40, n)
        assert np.allclose(np.linalg.norm(points, axis=1), 1.0)


@pytest.mark.parametrize("n", [2, 3])
def test_ball_quadrature_volume(n):
    _, weights = ball_quadrature(n)
    assert float(np.sum(weights)) == pytest.approx(unit_ball_volume(n), rel=1e-3)


def test_lnk_norm_of_unit_function_is_volume_power():
    s = 2.0
    volume = unit_ball_volume(3) * float(np.prod(np.sqrt(2.0 * s / A3.a)))
    assert lnk_norm(Constant(), A3, s) == pytest.approx(volume ** (2.0 / 3.0), rel=1e-3)


def test_to_config():
    assert PowerTail(0.5, 3.0).to_config() == {"variant": "power_tail", "C0": 0.5, "beta": 3.0, "sign": 1}
    assert Constant().to_config() == {"variant": "constant", "value": 1.0}
