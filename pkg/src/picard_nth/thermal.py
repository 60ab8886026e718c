"""Lumped fuel-pin temperature and the axial coolant heat balance."""

from __future__ import annotations

import math

import numpy as np

from .model import BaseState, CrossSections, PinGeometry, ScalarField


def linear_power(phi: ScalarField, xs: CrossSections, pin: PinGeometry, kappa) -> ScalarField:
    """q'(x) = pi r_fo^2 kappa sigma_f(x) phi(x)  [W/cm]."""
    values = pin.fuel_area * kappa * xs.sigma_f * np.asarray(phi)
    return ScalarField(values, phi.length)


def fuel_temperature(phi: ScalarField, xs: CrossSections, base: BaseState, t_m_field) -> ScalarField:
    """Volume-averaged fuel temperature T_m + A sigma_f phi.

    ``xs`` must be evaluated at the previous temperature iterate: the
    update is lagged, there is no inner nonlinear solve.
    """
    t_m = np.asarray(t_m_field, dtype=float)
    values = t_m + base.a_coeff * xs.sigma_f * np.asarray(phi)
    return ScalarField(values, phi.length)


def coolant_axial(q_prime: ScalarField, t_inlet, mdot_cp) -> ScalarField:
    """Bulk coolant temperature at cell centres from an upward energy balance.

    Each cell centre sees the heat of every cell below it plus half of its
    own.  ``mdot_cp`` is the channel flow heat capacity [W/K]; an infinite
    value gives a constant coolant temperature.
    """
    if not mdot_cp > 0:
        raise ValueError("mdot_cp must be > 0")
    if math.isinf(mdot_cp):
        return ScalarField.constant(t_inlet, q_prime.n_cells, q_prime.length)
    heat = np.asarray(q_prime) * q_prime.h
    below = np.cumsum(heat) - 0.5 * heat
    return ScalarField(t_inlet + below / mdot_cp, q_prime.length)
