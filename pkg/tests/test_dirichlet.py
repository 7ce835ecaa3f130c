import numpy as np
import pytest
from scipy.sparse.linalg import splu

from khessian import (
    ArgumentError,
    Bump,
    Constant,
    FromCallable,
    GridField,
    GridSpec,
    NodeTag,
    NonConvergenceError,
    PowerTail,
    PowerTailSign,
    PreconditionError,
    SolverOptions,
    comparison_check,
    continuation_solve,
    initial_guess,
    jacobian,
    newton_solve,
    normalize_to_Ak,
    quadratic_field,
    residual,
)
from khessian.dirichlet import _evaluate, _line_search, _rhs_root

ISOTROPIC = normalize_to_Ak([1.0, 1.0, 1.0], 2)


def bubble(x):
    return np.prod(1.0 - x * x, axis=1)


def perturbed(spec, A, amplitude=0.05):
    return GridField.from_function(spec, lambda x: A.tau(x) + amplitude * bubble(x))


def test_residual_vanishes_on_the_quadratic():
    spec = GridSpec.cube(3, 1.0, 17)
    r = residual(quadratic_field(spec, ISOTROPIC), Constant(), 2)
    assert np.max(np.abs(r.values)) <= 1e-13


def test_residual_of_doubled_quadratic():
    spec = GridSpec.cube(3, 1.0, 17)
    field = GridField.from_function(spec, lambda x: 2.0 * ISOTROPIC.tau(x))
    r = residual(field, Constant(), 2)
    assert np.allclose(r.values[field.interior], 1.0, atol=1e-12)
    assert np.all(r.values[field.mask == NodeTag.BOUNDARY] == 0.0)


def test_residual_shift_at_bump_center():
    spec = GridSpec.cube(3, 1.0, 17)
    f = Bump([0.0, 0.0, 0.0], 0.5, 0.5)
    r = residual(quadratic_field(spec, ISOTROPIC), f, 2)
    center = int(np.ravel_multi_index((8, 8, 8), spec.nodes))
    assert r.values[center] == pytest.approx(1.0 - 1.5**0.5, abs=1e-12)


def test_residual_needs_positive_right_hand_side():
    spec = GridSpec.cube(3, 1.0, 17)
    f = FromCallable(lambda x: x[:, 0], inf_bound=-1.0)
    with pytest.raises(PreconditionError):
        residual(quadratic_field(spec, ISOTROPIC), f, 2)


def test_jacobian_matches_directional_derivative():
    spec = GridSpec.box([-1.0, -0.8, -0.6], [1.0, 0.8, 0.6], 17)
    field = GridField.from_function(
        spec, lambda x: ISOTROPIC.tau(x) + 0.05 * np.sin(x[:, 0]) * np.cos(2.0 * x[:, 1]) + 0.1 * x[:, 0] * x[:, 2]
    )
    interior = field.interior
    w = np.random.default_rng(8).standard_normal(interior.size)
    eps = 1e-6
    for k in (1, 2, 3):
        plus = field.values.copy()
        minus = field.values.copy()
        plus[interior] += eps * w
        minus[interior] -= eps * w
        difference = (
            residual(field.with_values(plus), Constant(), k).values[interior]
            - residual(field.with_values(minus), Constant(), k).values[interior]
        ) / (2.0 * eps)
        exact = jacobian(field, k) @ w
        assert np.linalg.norm(exact - difference) <= 1e-5 * np.linalg.norm(exact)


def test_exact_start_needs_no_newton_step():
    spec = GridSpec.cube(3, 1.0, 17)
    field, report = newton_solve(quadratic_field(spec, ISOTROPIC), Constant(), 2)
    assert report.iterations == 0
    assert report.converged
    assert report.cone_violations == 0


def test_poisson_converges_in_one_step():
    A = normalize_to_Ak([1.0, 1.0, 1.0], 1)
    spec = GridSpec.cube(3, 1.0, 17)
    f = FromCallable(lambda x: 1.0 + 0.2 * np.cos(x[:, 0]), inf_bound=0.8)
    field, report = newton_solve(perturbed(spec, A), f, 1)
    assert report.iterations == 1
    assert report.damping_history == [1.0]


def test_line_search_halves_a_step_that_leaves_the_cone():
    # sigma_1 is linear, so a doubled Newton step from 100 tau lands on laplacian -98
    A = normalize_to_Ak([1.0, 1.0, 1.0], 1)
    spec = GridSpec.cube(3, 1.0, 9)
    field = GridField.from_function(spec, lambda x: 100.0 * A.tau(x))
    options = SolverOptions()
    rhs_root = _rhs_root(Constant(), field, 1)
    state = _evaluate(field, rhs_root, 1, options.sigma_min)
    assert state.violations == 0
    step = 2.0 * splu(jacobian(field, 1).tocsc()).solve(-state.residual)

    full = state.values.copy()
    full[field.interior] += step
    overshoot = _evaluate(field.with_values(full), rhs_root, 1, options.sigma_min)
    assert overshoot.violations == field.interior.size
    assert overshoot.norm2 < state.norm2

    t, trial = _line_search(field, step, state, rhs_root, 1, options)
    assert t == 0.5
    assert trial.violations == 0
    assert trial.sup <= 1e-8


def test_monge_ampere_from_perturbed_quadratic():
    A = normalize_to_Ak([1.0, 1.0, 1.0], 3)
    spec = GridSpec.cube(3, 1.0, 17)
    field, report = newton_solve(perturbed(spec, A), Constant(), 3)
    assert report.iterations <= 10
    assert report.residual <= 1e-9
    assert np.max(np.abs(field.values - 0.5 * np.sum(spec.points() ** 2, axis=1))) <= 1e-8


def test_newton_reports_nonconvergence():
    spec = GridSpec.cube(3, 1.0, 17)
    options = SolverOptions(max_iterations=1)
    with pytest.raises(NonConvergenceError) as info:
        newton_solve(perturbed(spec, ISOTROPIC, 0.2), Bump([0.0, 0.0, 0.0], 0.7, 0.5), 2, options=options)
    assert info.value.report.iterations == 1
    assert not info.value.report.converged


def test_newton_rejects_k_out_of_range():
    spec = GridSpec.cube(2, 1.0, 17)
    A = normalize_to_Ak([1.0, 1.0], 2)
    with pytest.raises(ArgumentError):
        newton_solve(quadratic_field(spec, A), Constant(), 3)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_quadratic_reproduction(k):
    A = normalize_to_Ak([0.7, 1.3, 2.1], k)
    spec = GridSpec.box([-1.0, -0.5, -0.75], [0.5, 1.0, 0.75], 17)
    field, report = continuation_solve(spec, Constant(), k, A)
    assert report.stages == [0.0]
    assert np.max(np.abs(field.values - A.tau(spec.points()))) <= 1e-10


def test_continuation_with_bump():
    spec = GridSpec.cube(3, 1.0, 17)
    f = Bump([0.0, 0.0, 0.0], 0.6, 0.5)
    field, report = continuation_solve(spec, f, 2, ISOTROPIC)
    assert report.converged
    assert report.stages[0] == 0.0
    assert report.stages[-1] == 1.0
    assert len(report.stages) <= 5
    assert report.cone_violations == 0
    assert np.max(np.abs(residual(field, f, 2).values)) <= 1e-9
    # a larger right-hand side pushes the solution below the quadratic
    assert comparison_check(quadratic_field(spec, ISOTROPIC), field) >= -5.0 * spec.h_max**2


def test_continuation_on_ellipsoid_keeps_boundary_data():
    spec = GridSpec.ellipsoid(ISOTROPIC, 2.0, 17)
    f = PowerTail(0.3, 3.0)
    field, report = continuation_solve(spec, f, 2, ISOTROPIC)
    outside = field.mask != NodeTag.INTERIOR
    assert np.all(field.values[outside] == 2.0)
    assert np.all(field.values[~outside] < 2.0)
    assert report.converged


def test_continuation_warm_start():
    spec = GridSpec.cube(3, 1.0, 17)
    f = Bump([0.0, 0.0, 0.0], 0.6, 0.25)
    solved, _ = continuation_solve(spec, f, 2, ISOTROPIC)
    again, report = continuation_solve(spec, f, 2, ISOTROPIC, start=solved)
    assert report.stages == [1.0]
    assert report.iterations == 0
    assert np.array_equal(again.values, solved.values)


def test_continuation_rejects_nonpositive_infimum():
    spec = GridSpec.cube(3, 1.0, 17)
    f = PowerTail(1.0, 3.0, PowerTailSign.NEGATIVE)
    with pytest.raises(PreconditionError):
        continuation_solve(spec, f, 2, ISOTROPIC)


def test_continuation_dimension_mismatch():
    spec = GridSpec.cube(2, 1.0, 17)
    with pytest.raises(ArgumentError):
        continuation_solve(spec, Constant(), 2, ISOTROPIC)


def test_initial_guess_on_ellipsoid_meets_boundary_value():
    spec = GridSpec.ellipsoid(ISOTROPIC, 1.0, 17)
    field = initial_guess(spec, ISOTROPIC, boundary_value=3.0)
    assert field.boundary_value == 3.0
    inside = field.interior
    assert np.allclose(field.values[inside], ISOTROPIC.tau(spec.points()[inside]) + 2.0)


def test_comparison_check():
    spec = GridSpec.cube(3, 1.0, 17)
    v = perturbed(spec, ISOTROPIC)
    assert comparison_check(v, v) == 0.0
    assert comparison_check(v.with_values(v.values + 1.0), v) == pytest.approx(1.0)
    other = quadratic_field(GridSpec.cube(3, 1.0, 19), ISOTROPIC)
    with pytest.raises(ArgumentError):
        comparison_check(v, other)


def test_discrete_comparison_of_sub_and_supersolution():
    spec = GridSpec.cube(3, 1.0, 17)
    small = Bump([0.0, 0.0, 0.0], 0.6, 0.2)
    large = Bump([0.0, 0.0, 0.0], 0.6, 0.6)
    u_small, _ = continuation_solve(spec, small, 2, ISOTROPIC)
    u_large, _ = continuation_solve(spec, large, 2, ISOTROPIC)
    assert comparison_check(u_small, u_large) >= -5.0 * spec.h_max**2


def test_solver_options_validation():
    with pytest.raises(ArgumentError):
        SolverOptions(stages=(0.5, 0.25, 1.0))
    with pytest.raises(ArgumentError):
        SolverOptions(tol_nonlin=0.0)
    assert SolverOptions().replace(tol_nonlin=1e-6).tol_nonlin == 1e-6


@pytest.mark.parametrize("k", [1, 2, 3])
def test_quadratic_reproduction_on_ellipsoid(k):
    A = normalize_to_Ak([0.5, 1.0, 2.0], k)
    spec = GridSpec.ellipsoid(A, 1.5, 17)
    field, report = continuation_solve(spec, Constant(), k, A)
    assert report.iterations == 0
    assert np.max(np.abs(field.values[field.interior] - A.tau(spec.points()[field.interior]))) <= 1e-10
