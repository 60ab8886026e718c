import math
from dataclasses import replace

import numpy as np
import pytest

from picard_nth import (
    ConfigError,
    PinGeometry,
    ReactorConfig,
    ScalarField,
    TemperatureExcursionError,
    derive_base_state,
    load_config,
    reference_config,
    xs_at_temperature,
)
from picard_nth.model import format_config, parse_config


def test_reference_conf_matches_library_defaults(ref):
    config, pin = ref
    assert config == ReactorConfig()
    assert pin == PinGeometry()


def test_table_one_absorption_and_k(ref):
    base = derive_base_state(*ref)
    assert base.sigma_a0 == pytest.approx(0.718 * (1 - 0.96), rel=1e-15)
    assert base.sigma_a0 == pytest.approx(0.02872, rel=1e-13)
    assert base.k_eff0 == pytest.approx(0.0297 / 0.02872, rel=1e-14)
    assert base.k_eff0 == pytest.approx(1.034123, abs=1e-6)
    assert base.sigma_s0 == pytest.approx(0.96 * 0.718, rel=1e-15)


def test_thermal_resistance_film_only_limit():
    pin = PinGeometry(k_f=1e30, h_g=1e30, k_c=1e30)
    assert pin.thermal_resistance() == pytest.approx(1 / (2 * math.pi * pin.r_co * pin.h), rel=1e-12)


def test_thermal_resistance_four_terms():
    pin = PinGeometry()
    r_g = 0.5 * (pin.r_ci + pin.r_fo)
    expected = (
        1 / (8 * math.pi * pin.k_f)
        + 1 / (2 * math.pi * r_g * pin.h_g)
        + math.log(pin.r_co / pin.r_ci) / (2 * math.pi * pin.k_c)
        + 1 / (2 * math.pi * pin.r_co * pin.h)
    )
    assert pin.thermal_resistance() == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("name", ["k_f", "h_g", "k_c", "h"])
def test_thermal_resistance_decreases_with_each_conductance(name):
    pin = PinGeometry()
    bumped = replace(pin, **{name: getattr(pin, name) * 1.01})
    assert bumped.thermal_resistance() < pin.thermal_resistance()


def test_power_and_temperature_difference_are_consistent(ref):
    config, pin = ref
    base = derive_base_state(config, pin)
    assert base.delta_t_fc == pytest.approx(base.q_prime_0 * base.r_t, rel=1e-12)
    assert base.t0 == config.t_m + base.delta_t_fc

    by_power = replace(config, delta_t_fc=None, q_prime_0=150.0)
    b2 = derive_base_state(by_power, pin)
    assert b2.delta_t_fc == pytest.approx(150.0 * b2.r_t, rel=1e-12)
    # inverting the linear power definition at the base state
    assert pin.fuel_area * config.kappa * b2.sigma_f0 * b2.phi0 == pytest.approx(150.0, rel=1e-12)


def test_a_sigma_f_phi_equals_delta_t(ref):
    base = derive_base_state(*ref)
    assert base.a_coeff * base.sigma_f0 * base.phi0 == pytest.approx(base.delta_t_fc, rel=1e-12)


def test_gamma_definition(ref):
    config, pin = ref
    base = derive_base_state(config, pin)
    expected = (1 - config.c0) * (config.r_sigma_a1 - config.r_sigma_f1) * base.phi0
    assert base.gamma == pytest.approx(expected, rel=1e-15)


def test_derive_base_state_is_deterministic(ref):
    assert derive_base_state(*ref) == derive_base_state(*ref)


@pytest.mark.parametrize("nu_sigma_f0", [0.01, 0.0297, 0.5])
def test_k_times_absorption_is_production(ref, nu_sigma_f0):
    config, pin = ref
    base = derive_base_state(replace(config, nu_sigma_f0=nu_sigma_f0), pin)
    assert base.k_eff0 * base.sigma_a0 == pytest.approx(nu_sigma_f0, rel=1e-14)


def test_zero_delta_t_is_rejected_by_base_state(ref):
    config, pin = ref
    with pytest.raises(ConfigError) as err:
        derive_base_state(replace(config, delta_t_fc=0.0), pin)
    assert err.value.field in ("delta_t_fc", "q_prime_0", "phi0")


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"sigma_t0": 0.0}, "sigma_t0"),
        ({"c0": 1.0}, "c0"),
        ({"c0": -0.1}, "c0"),
        ({"n_cells": 1}, "n_cells"),
        ({"n_angles": 7}, "n_angles"),
        ({"bc_mode": "vacuum"}, "bc_mode"),
        ({"q_prime_0": 100.0}, "q_prime_0"),
        ({"delta_t_fc": None}, "q_prime_0"),
        ({"core_height_L": -1.0}, "core_height_L"),
    ],
)
def test_config_validation_names_the_field(kwargs, field):
    with pytest.raises(ConfigError) as err:
        ReactorConfig(**kwargs)
    assert err.value.field == field


def test_pin_radii_ordering():
    with pytest.raises(ConfigError) as err:
        PinGeometry(r_fo=0.42)
    assert err.value.field == "r_ci"


def test_xs_identity_at_base_temperature(ref):
    config, _ = ref
    base = derive_base_state(*ref)
    xs = xs_at_temperature(base, config, np.full(config.n_cells, base.t0))
    assert np.all(xs.sigma_t == config.sigma_t0)
    assert np.all(xs.sigma_s == base.sigma_s0)
    assert np.all(xs.sigma_f == base.sigma_f0)
    assert np.all(xs.nu_sigma_f == config.nu_sigma_f0)


def test_xs_one_kelvin_up(ref):
    config, _ = ref
    base = derive_base_state(*ref)
    xs = xs_at_temperature(base, config, base.t0 + 1.0)
    np.testing.assert_allclose(xs.sigma_f / base.sigma_f0, 1 - 1.99e-5, rtol=1e-12)
    np.testing.assert_allclose(xs.sigma_t - xs.sigma_s, base.sigma_a0 * (1 + 8.67e-6), rtol=1e-12)


def test_xs_scalar_and_field_agree_exactly(ref):
    config, _ = ref
    base = derive_base_state(*ref)
    t = base.t0 + 37.5
    a = xs_at_temperature(base, config, t)
    b = xs_at_temperature(base, config, ScalarField.constant(t, config.n_cells, config.core_height_L))
    for name in ("sigma_t", "sigma_s", "sigma_f", "nu_sigma_f"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_xs_excursion_reports_cell_and_temperature(ref):
    config, _ = ref
    base = derive_base_state(*ref)
    t = np.full(config.n_cells, base.t0)
    t[17] = base.t0 + 1 / abs(config.r_sigma_f1) + 1.0
    with pytest.raises(TemperatureExcursionError) as err:
        xs_at_temperature(base, config, t)
    assert err.value.cell == 17
    assert err.value.temperature == t[17]


def test_parse_config_comments_and_overlay():
    config, pin = parse_config("core_height_L = 50  # short core\n\n# note\nh = 4.0\n")
    assert config.core_height_L == 50.0
    assert pin.h == 4.0
    assert config.delta_t_fc == ReactorConfig().delta_t_fc


def test_parse_config_power_form_switches_off_delta_t():
    config, _ = parse_config("q_prime_0 = 180\n")
    assert config.q_prime_0 == 180.0 and config.delta_t_fc is None


def test_parse_config_unknown_key():
    with pytest.raises(ConfigError) as err:
        parse_config("sigma_x = 3\n")
    assert err.value.field == "sigma_x"


def test_parse_config_bad_value():
    with pytest.raises(ConfigError) as err:
        parse_config("n_cells = many\n")
    assert err.value.field == "n_cells"


def test_format_parse_round_trip(tmp_path):
    config = ReactorConfig(core_height_L=80.0, n_cells=160, coolant_axial=True, mdot_cp=900.0)
    pin = PinGeometry(h=2.5)
    path = tmp_path / "case.conf"
    path.write_text(format_config(config, pin))
    assert load_config(path) == (config, pin)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.conf")


def test_with_height_keeps_cell_width(ref):
    config, _ = ref
    tall = config.with_height(300.0)
    assert tall.n_cells == 600 and tall.h == config.h
    assert reference_config()[0].with_height(50.0).n_cells == 100
