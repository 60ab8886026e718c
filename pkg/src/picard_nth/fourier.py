"""Closed-form Fourier-mode analysis of relaxed Picard coupling.

Every error mode exp(i * sigma_t0 * xi * x) of the temperature iterate is
multiplied by a real gain each outer iteration::

    gain(xi) = 1 - omega * (1 - dT * (rf - (ra - rf) * (1 - c0) * F(xi)))

with ``dT = T0 - Tm``, ``rf``/``ra`` the relative fission/absorption
temperature coefficients and ``F = rho_pi / (1 - rho_pi)`` the transport
feedback ratio.  The spectral radius is the largest |gain| over the modes
allowed by the slab, plus the xi -> infinity limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import IntegrationError, NoValidRelaxationError
from .model import PinGeometry, ReactorConfig, derive_base_state

# Below this xi, 1 - atan(xi)/xi is summed as a series.
SERIES_THRESHOLD = 1e-2


class _XiInfinity:
    """Marker for the xi -> infinity branch (rho_pi == 0 there)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "XI_INF"

    def __reduce__(self):
        return (_XiInfinity, ())


XI_INF = _XiInfinity()


@dataclass(frozen=True)
class FAParams:
    """The parameter tuple every closed-form result depends on."""

    delta_t_fc: float
    r_sigma_f1: float
    r_sigma_a1: float
    c0: float
    sigma_t0_L: float
    boundary_factor: int = 1

    def __post_init__(self):
        if not self.sigma_t0_L > 0:
            raise ValueError("sigma_t0_L must be > 0")
        if not 0 <= self.c0 < 1:
            raise ValueError("c0 must satisfy 0 <= c0 < 1")
        if self.boundary_factor not in (1, 2):
            raise ValueError("boundary_factor must be 1 (reflective) or 2 (periodic)")

    @classmethod
    def from_config(cls, config: ReactorConfig, pin: PinGeometry | None = None):
        if config.delta_t_fc is not None:
            delta_t = config.delta_t_fc
        else:
            delta_t = derive_base_state(config, pin or PinGeometry()).delta_t_fc
        return cls(
            delta_t_fc=delta_t,
            r_sigma_f1=config.r_sigma_f1,
            r_sigma_a1=config.r_sigma_a1,
            c0=config.c0,
            sigma_t0_L=config.sigma_t0 * config.core_height_L,
            boundary_factor=config.boundary_factor,
        )

    def mode(self, j):
        """Discrete mode xi_j allowed by the boundary conditions."""
        return self.boundary_factor * math.pi * j / self.sigma_t0_L

    @property
    def xi1(self):
        return self.mode(1)


class FAResult(NamedTuple):
    rho: float
    mode: object  # int j, or XI_INF
    gain: float


def _one_minus_rho_pi_series(x2):
    # 1 - atan(x)/x = x^2/3 - x^4/5 + x^6/7 - ...
    total = 0.0
    term = x2
    n = 3
    sign = 1.0
    while True:
        contrib = sign * term / n
        total += contrib
        if abs(contrib) <= 1e-17 * abs(total):
            return total
        term *= x2
        n += 2
        sign = -sign


def one_minus_rho_pi(xi):
    """1 - atan(xi)/xi without cancellation at small xi."""
    xi = abs(float(xi))
    if xi == 0.0:
        return 0.0
    if xi < SERIES_THRESHOLD:
        return _one_minus_rho_pi_series(xi * xi)
    return 1.0 - math.atan(xi) / xi


def rho_pi(xi):
    """Power-iteration gain atan(xi)/xi of mode xi; 1 at xi = 0."""
    if xi is XI_INF:
        return 0.0
    if np.ndim(xi):
        return np.array([rho_pi(x) for x in np.ravel(xi)]).reshape(np.shape(xi))
    xi = abs(float(xi))
    if xi == 0.0:
        return 1.0
    if math.isinf(xi):
        return 0.0
    if xi < SERIES_THRESHOLD:
        return 1.0 - _one_minus_rho_pi_series(xi * xi)
    return math.atan(xi) / xi


def rho_pi_by_quadrature(xi, n_points=64):
    """Half the integral of 1/(1 + i xi mu) over mu in [-1, 1], by Gauss-Legendre.

    After scaling u = xi * mu the integrand has poles at u = +-i, so the
    range is split into panels that double in width away from the origin,
    each integrated with an ``n_points`` rule.  Panels are mirrored and the
    sum is carried in complex arithmetic so the odd part cancels visibly.
    """
    if n_points < 16:
        raise ValueError("n_points must be >= 16")
    xi = abs(float(xi))
    if xi == 0.0:
        return 1.0
    nodes, weights = np.polynomial.legendre.leggauss(n_points)

    edges = [0.0]
    right = min(1.0, xi)
    edges.append(right)
    while right < xi:
        right = min(2.0 * right, xi)
        edges.append(right)

    total = 0.0 + 0.0j
    for a, b in zip(edges[:-1], edges[1:]):
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        u = mid + half * nodes
        for side in (u, -u):
            total += half * np.sum(weights / (1.0 + 1j * side))
    value = total / (2.0 * xi)
    if abs(value.imag) > 1e-12:
        raise IntegrationError(f"imaginary part {value.imag:.3e} did not cancel")
    return float(value.real)


def feedback_ratio(xi, approx="exact"):
    """rho_pi / (1 - rho_pi), or its small-xi diffusion form 3 / xi^2."""
    if xi is XI_INF:
        return 0.0
    xi = float(xi)
    if not xi > 0:
        raise ValueError("xi must be > 0")
    if approx == "diffusion":
        return 3.0 / (xi * xi)
    if approx != "exact":
        raise ValueError(f"unknown approximation {approx!r}")
    if math.isinf(xi):
        return 0.0
    complement = one_minus_rho_pi(xi)
    return (1.0 - complement) / complement


def _unrelaxed_shift(xi, p: FAParams, approx="exact"):
    # 1 - gain at omega = 1
    rf, ra = p.r_sigma_f1, p.r_sigma_a1
    feedback = 0.0 if xi is XI_INF else feedback_ratio(xi, approx)
    return 1.0 - p.delta_t_fc * (rf - (ra - rf) * (1.0 - p.c0) * feedback)


def picard_gain(xi, omega, p: FAParams, approx="exact"):
    """Signed amplification of mode xi per relaxed Picard iteration."""
    return 1.0 - omega * _unrelaxed_shift(xi, p, approx)


def asymptotic_branches(p: FAParams, omega):
    """Gains of the xi -> infinity mode and of the slowest mode xi_1.

    These are the two candidates for the maximum: the first dominates below
    the optimal relaxation factor, the second above it.
    """
    return picard_gain(XI_INF, omega, p), picard_gain(p.xi1, omega, p)


def spectral_radius_fa(p: FAParams, omega, n_modes=64) -> FAResult:
    """Max |gain| over modes j = 1..n_modes and the xi -> infinity limit."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    best = FAResult(abs(picard_gain(XI_INF, omega, p)), XI_INF, picard_gain(XI_INF, omega, p))
    for j in range(n_modes, 0, -1):
        g = picard_gain(p.mode(j), omega, p)
        if abs(g) >= best.rho:
            best = FAResult(abs(g), j, g)
    return best


def omega_opt(p: FAParams):
    """Relaxation factor that balances the xi_1 and xi -> infinity gains."""
    rf, ra = p.r_sigma_f1, p.r_sigma_a1
    bracket = 2.0 * rf - (ra - rf) * (1.0 - p.c0) * feedback_ratio(p.xi1)
    denom = 2.0 - p.delta_t_fc * bracket
    if not denom > 0:
        raise NoValidRelaxationError(
            f"optimal relaxation undefined: denominator {denom:.6g} <= 0"
        )
    omega = 2.0 / denom
    high, slow = asymptotic_branches(p, omega)
    if abs(abs(high) - abs(slow)) > 1e-12:
        raise ArithmeticError(
            f"branches not balanced at omega={omega!r}: {high!r} vs {slow!r}"
        )
    return omega


def delta_t_for_radius(p: FAParams, rho):
    """Temperature difference giving unrelaxed spectral radius ``rho`` at xi_1.

    The unrelaxed slowest-mode gain is linear in the temperature difference,
    so this is a single division.
    """
    rf, ra = p.r_sigma_f1, p.r_sigma_a1
    per_kelvin = (ra - rf) * (1.0 - p.c0) * feedback_ratio(p.xi1) - rf
    if not per_kelvin > 0:
        raise ValueError("feedback does not destabilize the slowest mode")
    return rho / per_kelvin


def critical_optical_thickness(p: FAParams, omega=1.0, rho=1.0, n_modes=64):
    """Smallest sigma_t0 * L at which the predicted radius reaches ``rho``."""
    from dataclasses import replace

    from scipy.optimize import brentq

    def excess(tau):
        return spectral_radius_fa(replace(p, sigma_t0_L=tau), omega, n_modes).rho - rho

    lo, hi = 1e-3, 1.0
    if excess(lo) >= 0:
        raise ValueError("radius already exceeds target for a vanishing core")
    while excess(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e9:
            raise ValueError("radius never reaches the target")
    return brentq(excess, lo, hi, xtol=1e-12, rtol=1e-14)
