"""One-group S_N transport on a uniform slab with diamond differencing.

The sweep closes reflective and periodic boundaries exactly: for each
direction pair it sweeps once with zero incoming flux, then adds the
homogeneous response scaled by the boundary flux that solves the two-sided
reflection condition.  One call to :func:`dd_sweep` is therefore a full
application of the inverse streaming-collision operator, with no lagged
boundary iteration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, InvalidOrderError
from .model import CrossSections, ScalarField

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Quadrature:
    mu: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        w = np.array(self.w, dtype=float)
        if mu.shape != w.shape or mu.ndim != 1 or mu.size % 2:
            raise ValueError("mu and w must be 1-D arrays of equal, even length")
        if np.any(w <= 0) or np.any(np.abs(mu) >= 1) or np.any(mu == 0):
            raise ValueError("need positive weights and 0 < |mu| < 1")
        if not np.array_equal(mu, -mu[::-1]):
            raise ValueError("ordinates must be symmetric about 0")
        mu.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "w", w)

    @property
    def positive(self):
        """Positive ordinates and their weights (the mirror half is implied)."""
        half = self.mu.size // 2
        return self.mu[half:], self.w[half:]

    @property
    def order(self):
        return self.mu.size


def gauss_legendre(n):
    """Gauss-Legendre S_n set on [-1, 1], made exactly symmetric."""
    if not isinstance(n, (int, np.integer)) or n % 2 or not 2 <= n <= 64:
        raise InvalidOrderError(f"quadrature order must be even and in [2, 64], got {n!r}")
    mu, w = np.polynomial.legendre.leggauss(int(n))
    mu = 0.5 * (mu - mu[::-1])
    w = 0.5 * (w + w[::-1])
    return Quadrature(mu, w)


def dd_mesh_ratio(sigma_t, h, quad):
    """Largest sigma_t * h / (2 mu); DD is positivity-preserving below 1."""
    mu_min = quad.positive[0].min()
    return float(np.max(sigma_t) * h / (2.0 * mu_min))


def dd_cell_coefficients(sigma_t, h, mu):
    """Diamond-difference cell update psi_out = alpha * psi_in + beta * q.

    ``q`` is the isotropic emission density (the 1/2 is inside beta).
    Broadcasts over cells and ordinates.
    """
    tau = np.asarray(sigma_t, dtype=float) * h / (2.0 * np.asarray(mu, dtype=float))
    alpha = (1.0 - tau) / (1.0 + tau)
    beta = (h / (2.0 * np.asarray(mu, dtype=float))) / (1.0 + tau)
    return alpha, beta


def _sweep(sigma_t, q, h, quad, bc):
    """Scalar flux from isotropic emission density ``q`` (shape (I,) or (I, m))."""
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    if single:
        q = q[:, None]
    n_cells, n_rhs = q.shape
    mu, w = quad.positive
    alpha, beta = dd_cell_coefficients(np.asarray(sigma_t, dtype=float)[:, None], h, mu[None, :])
    half_w = 0.5 * w

    phi = np.zeros((n_cells, n_rhs))
    psi = np.zeros((mu.size, n_rhs))
    for i in range(n_cells):
        out = alpha[i][:, None] * psi + beta[i][:, None] * q[i]
        phi[i] += half_w @ (psi + out)
        psi = out
    exit_right = psi

    psi = np.zeros((mu.size, n_rhs))
    for i in range(n_cells - 1, -1, -1):
        out = alpha[i][:, None] * psi + beta[i][:, None] * q[i]
        phi[i] += half_w @ (psi + out)
        psi = out
    exit_left = psi

    ones = np.ones((1, mu.size))
    edges_fwd = np.vstack([ones, np.cumprod(alpha, axis=0)])
    edges_bwd = np.vstack([ones, np.cumprod(alpha[::-1], axis=0)])[::-1]
    through = edges_fwd[-1][:, None]
    if bc == "reflective":
        denom = 1.0 - through * through
        inc_fwd = (exit_left + through * exit_right) / denom
        inc_bwd = (exit_right + through * exit_left) / denom
    elif bc == "periodic":
        inc_fwd = exit_right / (1.0 - through)
        inc_bwd = exit_left / (1.0 - through)
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")

    resp_fwd = 0.5 * (edges_fwd[:-1] + edges_fwd[1:])
    resp_bwd = 0.5 * (edges_bwd[:-1] + edges_bwd[1:])
    phi += (resp_fwd * w) @ inc_fwd + (resp_bwd * w) @ inc_bwd
    return phi[:, 0] if single else phi


def dd_sweep(xs: CrossSections, source: ScalarField, quad: Quadrature, bc="reflective"):
    """One transport sweep: scalar flux driven by an isotropic emission density.

    ``source`` is the total emission per cell (scattering plus fission); the
    1/2 angular factor is applied here.
    """
    values = np.asarray(source, dtype=float)
    if values.shape[0] != xs.n_cells:
        raise ValueError("source and cross sections are on different grids")
    phi = _sweep(xs.sigma_t, values, source.h, quad, bc)
    return ScalarField(phi, source.length)


def transport_matrix(sigma_t, h, quad, bc="reflective"):
    """Dense flux-response matrix: column j is the flux from unit emission in cell j."""
    n = len(sigma_t)
    return _sweep(sigma_t, np.eye(n), h, quad, bc)


def solve_fixed_source(
    xs: CrossSections,
    fission_source: ScalarField,
    quad: Quadrature,
    bc="reflective",
    tol=1e-10,
    max_iter=20000,
    history=None,
):
    """Source iteration on scattering with a fixed isotropic fission source.

    If ``history`` is a list, the relative max-norm change of each
    iteration is appended to it.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    external = np.asarray(fission_source, dtype=float)
    h, length = fission_source.h, fission_source.length
    phi = _sweep(xs.sigma_t, external, h, quad, bc)
    if not np.any(xs.sigma_s):
        if history is not None:
            history.append(0.0)
        return ScalarField(phi, length)

    change = np.inf
    for _ in range(max_iter):
        new = _sweep(xs.sigma_t, xs.sigma_s * phi + external, h, quad, bc)
        scale = np.max(np.abs(new))
        change = np.max(np.abs(new - phi)) / scale if scale > 0 else 0.0
        if history is not None:
            history.append(change)
        phi = new
        if change < tol:
            return ScalarField(phi, length)
    raise ConvergenceError(
        f"source iteration did not converge in {max_iter} iterations",
        residual=change,
        iterations=max_iter,
    )


@dataclass(frozen=True, eq=False)
class EigenSolution:
    k_eff: float
    phi: ScalarField
    iterations: int
    converged: bool


def _normalize(phi, xs, norm_power, heat_factor):
    mean_power = heat_factor * np.mean(xs.sigma_f * phi)
    return phi * (norm_power / mean_power)


def solve_k_eigenvalue(
    xs: CrossSections,
    quad: Quadrature,
    bc="reflective",
    norm_power=1.0,
    *,
    length,
    heat_factor=1.0,
    tol=1e-10,
    max_iter=None,
    method="wielandt",
    phi_init=None,
    k_init=None,
    history=None,
    shift_margin=1e-3,
):
    """Fundamental k-eigenpair of the slab, flux scaled to a mean linear power.

    The returned flux satisfies ``mean(heat_factor * sigma_f * phi) ==
    norm_power``, where ``heat_factor`` is the fuel area times the energy per
    fission.

    ``method="power"`` is the textbook power iteration: each iteration is a
    single sweep of the full emission (scattering plus fission over k) from
    the previous flux, so the asymptotic error ratio of a mode is the
    transport gain atan(xi)/xi.  It is slow for optically thick slabs.

    ``method="wielandt"`` assembles the sweep as a dense response matrix and
    runs shifted inverse iteration with the shift just above ``k_init``.  It
    converges in a few dozen cheap triangular solves and is what the coupled
    solver uses.
    """
    if not norm_power > 0:
        raise ValueError("norm_power must be > 0")
    n = xs.n_cells
    h = length / n
    x = np.ones(n) if phi_init is None else np.array(phi_init, dtype=float)
    if method == "power":
        k, x, it = _power_iteration(xs, quad, bc, h, x, k_init, tol, max_iter or 200000, history)
    elif method == "wielandt":
        k, x, it = _wielandt(xs, quad, bc, h, x, k_init, tol, max_iter or 500, history, shift_margin)
    else:
        raise ValueError(f"unknown method {method!r}")

    if np.any(x <= 0):
        raise ConvergenceError("fundamental flux is not strictly positive", iterations=it)
    phi = _normalize(x, xs, norm_power, heat_factor)
    return EigenSolution(float(k), ScalarField(phi, length), it, True)


def _power_iteration(xs, quad, bc, h, x, k_init, tol, max_iter, history):
    k = 1.0 if k_init is None else float(k_init)
    x = x / np.sum(xs.nu_sigma_f * x)
    for it in range(1, max_iter + 1):
        new = _sweep(xs.sigma_t, xs.sigma_s * x + xs.nu_sigma_f * x / k, h, quad, bc)
        production = np.sum(xs.nu_sigma_f * new)
        k_new = k * production / np.sum(xs.nu_sigma_f * x)
        new = new / production
        change = np.max(np.abs(new - x)) / np.max(np.abs(new))
        if history is not None:
            history.append(change)
        dk = abs(k_new - k)
        x, k = new, k_new
        if dk < tol and change < tol:
            return k, x, it
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations",
        residual=change,
        iterations=max_iter,
    )


def _wielandt(xs, quad, bc, h, x, k_init, tol, max_iter, history, margin):
    resp = transport_matrix(xs.sigma_t, h, quad, bc)
    lhs = np.eye(xs.n_cells) - resp * xs.sigma_s[None, :]
    fission = resp * xs.nu_sigma_f[None, :]

    if k_init is None:
        # largest local infinite-medium multiplication bounds k from above
        k_init = float(np.max(xs.nu_sigma_f / (xs.sigma_t - xs.sigma_s)))
    k_shift = k_init * (1.0 + margin)
    lu = scipy.linalg.lu_factor(lhs - fission / k_shift)

    x = x / np.max(np.abs(x))
    k = k_init
    change = np.inf
    for it in range(1, max_iter + 1):
        bx = fission @ x
        y = scipy.linalg.lu_solve(lu, bx)
        by = fission @ y
        k_new = 1.0 / (1.0 / k_shift + np.sum(bx) / np.sum(by))
        if np.sum(y) < 0:
            y = -y
        y /= np.max(np.abs(y))
        change = np.max(np.abs(y - x))
        if history is not None:
            history.append(change)
        dk = abs(k_new - k)
        x, k = y, k_new
        if dk < tol * k and change < tol:
            return k, x, it

    log.warning("shifted inverse iteration stalled (change %.3e); using dense eigensolver", change)
    vals, vecs = scipy.linalg.eig(fission, lhs)
    finite = np.isfinite(vals)
    idx = np.flatnonzero(finite)[np.argmax(vals[finite].real)]
    vec = vecs[:, idx].real
    vec = vec / vec[np.argmax(np.abs(vec))]
    return float(vals[idx].real), vec, max_iter
