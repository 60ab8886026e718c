import math
from dataclasses import replace

import numpy as np
import pytest

from picard_nth import (
    NonAsymptoticError,
    NotMeasurableError,
    TemperatureExcursionError,
    derive_base_state,
    spectral_radius_fa,
    xs_at_temperature,
)
from picard_nth.coupling import (
    IterationTrace,
    PicardOperator,
    aa1_solve,
    anderson1,
    estimate_spectral_radius_numerical,
    find_fixed_point,
    perturbation_shape,
    picard_solve,
)


@pytest.fixture(scope="module")
def ref_op(ref):
    return PicardOperator(*ref)


@pytest.fixture(scope="module")
def short_op(ref):
    config, pin = ref
    return PicardOperator(config.with_height(50.0), pin)


def perturbed(op, amplitude=1.0, seed=None):
    return op.base_temperature() + amplitude * perturbation_shape(op.n_cells, seed)


def residual(op, sol):
    xs = xs_at_temperature(op.base, op.config, np.asarray(sol.t_fuel))
    t_star = np.asarray(sol.t_m) + op.base.a_coeff * xs.sigma_f * np.asarray(sol.phi)
    return np.max(np.abs(np.asarray(sol.t_fuel) - t_star))


def test_trace_ratios():
    trace = IterationTrace()
    for e in (8.0, 4.0, 2.0, 1.0):
        trace.record(e, 1.0)
    assert trace.iterations == 4
    assert trace.ratios == [0.5, 0.5, 0.5]
    assert trace.asymptotic_ratio(2) == pytest.approx(0.5)
    assert math.isnan(IterationTrace().asymptotic_ratio())


def test_unrelaxed_step_is_the_map(short_op):
    t = perturbed(short_op, 5.0)
    new, result = short_op.step(t, 1.0)
    assert new is result.t_star


def test_unrelaxed_solve_reproduces_map_sequence(short_op):
    t = perturbed(short_op, 5.0)
    sol = picard_solve(short_op.config, short_op.pin, omega=1.0, init=t, max_iter=4, operator=short_op)
    x = t
    for _ in range(4):
        x = short_op.evaluate(x).t_star
    assert np.array_equal(np.asarray(sol.t_fuel), x)


def test_relaxed_step_blends(short_op):
    t = perturbed(short_op, 5.0)
    new, result = short_op.step(t, 0.3)
    np.testing.assert_allclose(new, 0.3 * result.t_star + 0.7 * t, rtol=1e-15)


def test_reference_unrelaxed_diverges(ref, ref_op):
    sol = picard_solve(*ref, omega=1.0, init=perturbed(ref_op), operator=ref_op)
    assert sol.status == "diverged"
    assert sol.trace.asymptotic_ratio() == pytest.approx(1.042, abs=0.02)


def test_reference_relaxed_converges(ref, ref_op):
    sol = picard_solve(*ref, omega=0.66, init=perturbed(ref_op), operator=ref_op)
    assert sol.status == "converged"
    assert sol.trace.asymptotic_ratio() == pytest.approx(0.337, abs=0.02)
    assert residual(ref_op, sol) < 1e-8 * ref_op.base.delta_t_fc
    assert sol.k_eff == pytest.approx(ref_op.base.k_eff0, rel=1e-9)


def test_start_at_fixed_point(ref, ref_op):
    t_fix = find_fixed_point(ref_op)
    for omega in (0.66, 1.0):
        sol = picard_solve(*ref, omega=omega, init=t_fix, operator=ref_op)
        assert sol.status == "converged"
        assert sol.trace.iterations <= 2
        assert sol.trace.errors[0] < 1e-8


def test_max_iterations_status(ref, ref_op):
    sol = picard_solve(*ref, omega=0.66, init=perturbed(ref_op), max_iter=3, operator=ref_op)
    assert sol.status == "max-iterations"
    assert sol.trace.iterations == 3


def test_excursion_propagates(short_op):
    hot = short_op.base_temperature() + 1e6
    with pytest.raises(TemperatureExcursionError):
        picard_solve(short_op.config, short_op.pin, init=hot, operator=short_op)


@pytest.mark.parametrize(
    "kwargs", [{"omega": 0.0}, {"omega": 1.5}, {"tol": 0.0}, {"tol": 1.0, "divergence_cap": 0.5}]
)
def test_solve_argument_checks(short_op, kwargs):
    with pytest.raises(ValueError):
        picard_solve(short_op.config, short_op.pin, operator=short_op, **kwargs)


def test_axial_coolant_solve(ref):
    config, pin = ref
    axial = replace(config.with_height(100.0), coolant_axial=True)
    op = PicardOperator(axial, pin)
    sol = picard_solve(axial, pin, omega=0.5, operator=op)
    assert sol.status == "converged"
    t_m = np.asarray(sol.t_m)
    assert np.all(np.diff(t_m) > 0)
    assert np.mean(t_m) == pytest.approx(config.t_m, abs=0.5)
    assert residual(op, sol) < 1e-8 * op.base.delta_t_fc
    aa = aa1_solve(axial, pin, operator=op)
    assert aa.status == "converged"
    np.testing.assert_allclose(np.asarray(aa.t_fuel), np.asarray(sol.t_fuel), atol=1e-6)


# -- AA-1 --------------------------------------------------------------------


@pytest.mark.parametrize("gain, shift", [(-3.0, 1.0), (2.5, -4.0), (1.2, 0.3)])
def test_anderson_exact_on_affine_scalar_map(gain, shift):
    x, trace = anderson1(lambda x: gain * x + shift, np.array([0.7]), tol=1e-12)
    assert trace.status == "converged"
    assert trace.iterations <= 3
    assert x[0] == pytest.approx(shift / (1 - gain), rel=1e-12)


def test_anderson_degenerate_residuals_take_plain_step():
    x, trace = anderson1(lambda x: x + 1.0, np.zeros(3), max_iter=4)
    assert trace.status == "max-iterations"
    np.testing.assert_array_equal(x, 4.0)


def test_anderson_divergence_cap():
    _, trace = anderson1(lambda x: x * x + 1.0, np.array([2.0]), divergence_cap=100.0)
    assert trace.status == "diverged"


def test_aa1_reference_unstable_case(ref, ref_op):
    for amp, seed in ((1.0, None), (5.0, 3)):
        sol = aa1_solve(*ref, init=perturbed(ref_op, amp, seed), operator=ref_op)
        assert sol.status == "converged"
        assert sol.trace.iterations <= 200
        assert residual(ref_op, sol) < 1e-8 * ref_op.base.delta_t_fc


def test_aa1_start_at_fixed_point(ref, ref_op):
    sol = aa1_solve(*ref, init=find_fixed_point(ref_op), operator=ref_op)
    assert sol.status == "converged"
    assert sol.trace.iterations == 1


# -- spectral radius measurement ----------------------------------------------


def test_measured_reference_radius(ref, ref_op):
    est = estimate_spectral_radius_numerical(*ref, omega=1.0, operator=ref_op)
    assert est.rho == pytest.approx(1.042, abs=0.02)
    assert est.trace.status == "diverged"
    probe = est.signed_probe[-10:]
    assert all(a * b < 0 for a, b in zip(probe, probe[1:]))


def test_measured_short_core_radius(ref, short_op):
    config, pin = ref
    est = estimate_spectral_radius_numerical(config.with_height(50.0), pin, operator=short_op)
    assert est.rho == pytest.approx(0.121, abs=0.02)
    assert est.trace.status == "converged"
    np.testing.assert_allclose(est.fixed_point, short_op.base_temperature(), atol=1e-9)


@pytest.mark.parametrize("omega", [0.3, 0.5, 0.66, 0.8])
def test_measured_matches_prediction_when_contractive(ref, ref_op, ref_fa, omega):
    fa = spectral_radius_fa(ref_fa, omega).rho
    assert fa < 0.9
    est = estimate_spectral_radius_numerical(*ref, omega=omega, operator=ref_op)
    assert abs(est.rho - fa) <= 0.02


def test_measured_radius_depends_on_temperature_rise_only(ref, short_op):
    config, pin = ref
    short = config.with_height(50.0)
    base = derive_base_state(short, pin)
    rescaled = replace(short, delta_t_fc=None, q_prime_0=base.q_prime_0 * 2, kappa=short.kappa / 2)
    rescaled_pin = replace(pin, h=pin.h * 3)
    rescaled = replace(rescaled, q_prime_0=base.delta_t_fc / rescaled_pin.thermal_resistance())
    assert derive_base_state(rescaled, rescaled_pin).delta_t_fc == pytest.approx(base.delta_t_fc, rel=1e-12)
    a = estimate_spectral_radius_numerical(short, pin, operator=short_op).rho
    b = estimate_spectral_radius_numerical(rescaled, rescaled_pin).rho
    assert abs(a - b) <= 0.02
    assert b == pytest.approx(a, rel=1e-6)


def test_random_perturbation_is_reproducible(ref):
    config, pin = ref
    short = config.with_height(50.0)
    # fresh operators: a shared one warm-starts the eigensolver from its last state
    a = estimate_spectral_radius_numerical(short, pin, seed=11)
    b = estimate_spectral_radius_numerical(short, pin, seed=11)
    assert a.rho == b.rho
    assert a.rho == pytest.approx(0.121, abs=0.02)


def test_zero_perturbation_is_not_measurable(ref, short_op):
    config, pin = ref
    for omega in (0.5, 1.0):
        with pytest.raises(NotMeasurableError):
            estimate_spectral_radius_numerical(config, pin, omega=omega, perturbation_amplitude=0.0)


def test_window_must_hold_three_ratios(ref):
    with pytest.raises(ValueError):
        estimate_spectral_radius_numerical(*ref, window=2)


def test_unsettled_transient_is_reported(ref, ref_op):
    # two nearly balanced modes of opposite sign keep the ratio swinging
    with pytest.raises(NonAsymptoticError) as err:
        estimate_spectral_radius_numerical(*ref, omega=0.6563, max_iter=6, spread_limit=1e-9, operator=ref_op)
    assert len(err.value.ratios) == 6


def test_perturbation_shapes():
    mixed = perturbation_shape(300)
    assert np.max(np.abs(mixed)) == 1.0
    assert abs(np.mean(mixed)) < 1e-12
    noisy = perturbation_shape(300, seed=5)
    assert np.max(np.abs(noisy)) == 1.0
    np.testing.assert_array_equal(noisy, perturbation_shape(300, seed=5))


def test_reference_mesh_warns(ref):
    with pytest.warns(RuntimeWarning, match="mesh ratio"):
        PicardOperator(*ref)
