"""Physical inputs and the derived constants of the linearized coupled system.

Units follow reactor-physics habit: cm, K, W, J.  Cross sections are
macroscopic [1/cm], temperature coefficients are relative [1/K].
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, TemperatureExcursionError

# Calibrated fuel-coolant temperature difference [K] for the reference case.
# Not given in the source data: it is the value for which the unrelaxed
# Picard spectral radius at L = 150 cm equals 1.042 (see README).
REFERENCE_DELTA_T = 257.3

BC_MODES = ("reflective", "periodic")


@dataclass(frozen=True)
class ReactorConfig:
    """One-group slab data, coupling parameters and discretization.

    Exactly one of ``q_prime_0`` [W/cm] and ``delta_t_fc`` [K] is set; the
    other is derived through the pin's thermal resistance.
    """

    sigma_t0: float = 0.718
    c0: float = 0.96
    nu_sigma_f0: float = 0.0297
    r_sigma_f1: float = -1.99e-5
    r_sigma_a1: float = 8.67e-6
    nu: float = 2.43
    kappa: float = 3.204e-11
    q_prime_0: float | None = None
    delta_t_fc: float | None = REFERENCE_DELTA_T
    t_m: float = 580.0
    core_height_L: float = 150.0
    n_cells: int = 300
    n_angles: int = 12
    bc_mode: str = "reflective"
    coolant_axial: bool = False
    mdot_cp: float | None = None

    def __post_init__(self):
        _require(self.sigma_t0 > 0, "sigma_t0", "must be > 0")
        _require(0 <= self.c0 < 1, "c0", "must satisfy 0 <= c0 < 1")
        _require(self.nu_sigma_f0 > 0, "nu_sigma_f0", "must be > 0")
        _require(self.nu > 0, "nu", "must be > 0")
        _require(self.kappa > 0, "kappa", "must be > 0")
        _require(self.core_height_L > 0, "core_height_L", "must be > 0")
        _require(
            isinstance(self.n_cells, (int, np.integer)) and self.n_cells >= 2,
            "n_cells",
            "must be an integer >= 2",
        )
        _require(
            isinstance(self.n_angles, (int, np.integer))
            and self.n_angles >= 2
            and self.n_angles % 2 == 0,
            "n_angles",
            "must be an even integer >= 2",
        )
        _require(self.bc_mode in BC_MODES, "bc_mode", f"must be one of {BC_MODES}")
        if (self.q_prime_0 is None) == (self.delta_t_fc is None):
            raise ConfigError(
                "q_prime_0", "exactly one of q_prime_0 and delta_t_fc must be given"
            )
        if self.q_prime_0 is not None:
            _require(self.q_prime_0 > 0, "q_prime_0", "must be > 0")
        if self.delta_t_fc is not None:
            _require(self.delta_t_fc >= 0, "delta_t_fc", "must be >= 0")
        if self.mdot_cp is not None:
            _require(self.mdot_cp > 0, "mdot_cp", "must be > 0")

    @property
    def h(self):
        """Cell width [cm]."""
        return self.core_height_L / self.n_cells

    @property
    def boundary_factor(self):
        return 1 if self.bc_mode == "reflective" else 2

    def with_height(self, length, keep_cell_width=True):
        """Copy at another core height, by default at the same cell width."""
        n = self.n_cells
        if keep_cell_width:
            n = max(2, int(round(length / self.h)))
        return replace(self, core_height_L=float(length), n_cells=n)


@dataclass(frozen=True)
class PinGeometry:
    """Fuel pin radii [cm] and heat-transfer coefficients (W/cm-K, W/cm^2-K).

    Defaults are typical PWR values; they only fix R_t, and so q'_0 when the
    configuration is given by the temperature difference.
    """

    r_fo: float = 0.4096
    r_ci: float = 0.418
    r_co: float = 0.475
    k_f: float = 0.03
    k_c: float = 0.17
    h_g: float = 0.5
    h: float = 3.4

    def __post_init__(self):
        for name in ("r_fo", "r_ci", "r_co", "k_f", "k_c", "h_g", "h"):
            value = getattr(self, name)
            _require(value > 0, name, "must be > 0")
        _require(self.r_fo < self.r_ci, "r_ci", "must exceed r_fo")
        _require(self.r_ci < self.r_co, "r_co", "must exceed r_ci")

    @property
    def r_gap(self):
        return 0.5 * (self.r_ci + self.r_fo)

    def thermal_resistance(self):
        """Fuel-average to coolant resistance R_t [cm-K/W]."""
        fuel = 1.0 / (8.0 * math.pi * self.k_f)
        gap = 1.0 / (2.0 * math.pi * self.r_gap * self.h_g)
        clad = math.log(self.r_co / self.r_ci) / (2.0 * math.pi * self.k_c)
        film = 1.0 / (2.0 * math.pi * self.r_co * self.h)
        return fuel + gap + clad + film

    @property
    def fuel_area(self):
        return math.pi * self.r_fo**2


@dataclass(frozen=True)
class BaseState:
    sigma_s0: float
    sigma_a0: float
    sigma_f0: float
    nu_sigma_f0: float
    k_eff0: float
    r_t: float
    a_coeff: float
    phi0: float
    q_prime_0: float
    delta_t_fc: float
    t0: float
    gamma: float


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Cell-averaged axial profile on a uniform grid over [0, length]."""

    values: np.ndarray
    length: float

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("values must be a non-empty 1-D array")
        if not self.length > 0:
            raise ValueError("length must be > 0")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n_cells(self):
        return self.values.size

    @property
    def h(self):
        return self.length / self.values.size

    @property
    def centers(self):
        return (np.arange(self.n_cells) + 0.5) * self.h

    @classmethod
    def constant(cls, value, n_cells, length):
        return cls(np.full(n_cells, float(value)), length)

    def __len__(self):
        return self.n_cells

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True, eq=False)
class CrossSections:
    sigma_t: np.ndarray
    sigma_s: np.ndarray
    sigma_f: np.ndarray
    nu_sigma_f: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            arr = np.array(getattr(self, f.name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, f.name, arr)
            bad = np.flatnonzero(arr <= 0 if f.name == "sigma_t" else arr < 0)
            if bad.size:
                raise ValueError(f"{f.name} out of range in cell {bad[0]}")
        if self.sigma_s.shape != self.sigma_t.shape or np.any(self.sigma_s > self.sigma_t):
            raise ValueError("need sigma_s <= sigma_t on a common grid")

    @property
    def n_cells(self):
        return self.sigma_t.size

    @classmethod
    def homogeneous(cls, sigma_t, sigma_s, sigma_f, nu_sigma_f, n_cells):
        full = lambda v: np.full(n_cells, float(v))  # noqa: E731
        return cls(full(sigma_t), full(sigma_s), full(sigma_f), full(nu_sigma_f))


def _require(ok, field, message):
    if not ok:
        raise ConfigError(field, message)


def derive_base_state(config: ReactorConfig, pin: PinGeometry) -> BaseState:
    """Base operating point the linearization is taken about."""
    sigma_s0 = config.c0 * config.sigma_t0
    sigma_a0 = config.sigma_t0 * (1.0 - config.c0)
    sigma_f0 = config.nu_sigma_f0 / config.nu
    k_eff0 = config.nu_sigma_f0 / sigma_a0
    r_t = pin.thermal_resistance()
    a_coeff = pin.fuel_area * config.kappa * r_t
    if config.q_prime_0 is not None:
        q_prime_0 = config.q_prime_0
        delta_t = q_prime_0 * r_t
    else:
        delta_t = config.delta_t_fc
        q_prime_0 = delta_t / r_t
    phi0 = q_prime_0 / (pin.fuel_area * config.kappa * sigma_f0)

    derived = {
        "sigma_a0": sigma_a0,
        "k_eff0": k_eff0,
        "r_t": r_t,
        "a_coeff": a_coeff,
        "delta_t_fc": delta_t,
        "q_prime_0": q_prime_0,
        "phi0": phi0,
    }
    for name, value in derived.items():
        if not (value > 0 and math.isfinite(value)):
            raise ConfigError(name, f"derived value {value!r} is not positive")

    gamma = (1.0 - config.c0) * (config.r_sigma_a1 - config.r_sigma_f1) * phi0
    return BaseState(
        sigma_s0=sigma_s0,
        sigma_a0=sigma_a0,
        sigma_f0=sigma_f0,
        nu_sigma_f0=config.nu_sigma_f0,
        k_eff0=k_eff0,
        r_t=r_t,
        a_coeff=a_coeff,
        phi0=phi0,
        q_prime_0=q_prime_0,
        delta_t_fc=delta_t,
        t0=config.t_m + delta_t,
        gamma=gamma,
    )


def xs_at_temperature(base: BaseState, config: ReactorConfig, t_field) -> CrossSections:
    """Cell-wise cross sections under the linear temperature law.

    Scattering carries no temperature coefficient, so the total cross section
    moves with absorption only.  ``t_field`` may be a ScalarField, an array or
    a scalar (broadcast over ``config.n_cells``).
    """
    temps = np.asarray(t_field, dtype=float)
    if temps.ndim == 0:
        temps = np.full(config.n_cells, float(temps))
    dt = temps - base.t0
    sigma_f = base.sigma_f0 + base.sigma_f0 * config.r_sigma_f1 * dt
    nu_sigma_f = base.nu_sigma_f0 + base.nu_sigma_f0 * config.r_sigma_f1 * dt
    sigma_a = base.sigma_a0 + base.sigma_a0 * config.r_sigma_a1 * dt
    sigma_t = config.sigma_t0 + base.sigma_a0 * config.r_sigma_a1 * dt
    sigma_s = np.full_like(temps, base.sigma_s0)

    for name, arr in (("sigma_f", sigma_f), ("sigma_a", sigma_a), ("sigma_t", sigma_t)):
        bad = np.flatnonzero(arr <= 0)
        if bad.size:
            i = int(bad[0])
            raise TemperatureExcursionError(i, float(temps[i]), name)
    return CrossSections(sigma_t, sigma_s, sigma_f, nu_sigma_f)


# --- key = value configuration files ---------------------------------------

_REACTOR_KEYS = {f.name: f for f in fields(ReactorConfig)}
_PIN_KEYS = {f.name: f for f in fields(PinGeometry)}
_INT_KEYS = {"n_cells", "n_angles"}
_BOOL_KEYS = {"coolant_axial"}
_STR_KEYS = {"bc_mode"}
_OPTIONAL_KEYS = {"q_prime_0", "delta_t_fc", "mdot_cp"}


def _parse_value(key, text):
    text = text.strip()
    try:
        if key in _STR_KEYS:
            return text
        if key in _BOOL_KEYS:
            lowered = text.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if key in _OPTIONAL_KEYS and text.lower() in ("", "none"):
            return None
        if key in _INT_KEYS:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse value {text!r}") from None


def parse_config(text, base=None):
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys overlay ``base`` (a ``(ReactorConfig, PinGeometry)`` pair, the
    library defaults when omitted).  Giving ``q_prime_0`` without
    ``delta_t_fc`` switches the configuration to the power-specified form.
    """
    reactor, pin = base if base is not None else (ReactorConfig(), PinGeometry())
    reactor_kw, pin_kw = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _REACTOR_KEYS:
            reactor_kw[key] = _parse_value(key, value)
        elif key in _PIN_KEYS:
            pin_kw[key] = _parse_value(key, value)
        else:
            raise ConfigError(key, "unknown key")
    if "q_prime_0" in reactor_kw and "delta_t_fc" not in reactor_kw:
        reactor_kw["delta_t_fc"] = None
    if "delta_t_fc" in reactor_kw and "q_prime_0" not in reactor_kw:
        reactor_kw["q_prime_0"] = None
    return replace(reactor, **reactor_kw), replace(pin, **pin_kw)


def load_config(path, base=None):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, base)


def format_config(config: ReactorConfig, pin: PinGeometry):
    lines = []
    for key, value in list(asdict(config).items()) + list(asdict(pin).items()):
        if value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def reference_config():
    """Bundled reference case: typical PWR one-group data, L = 150 cm."""
    text = resources.files("picard_nth").joinpath("data/reference.conf").read_text()
    return parse_config(text)
