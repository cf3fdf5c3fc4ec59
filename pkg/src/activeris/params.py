"""System configuration and the deterministic parts of the link model.

Everything here is a pure function of its inputs: the Friis propagation gain,
molecular absorption gain, misalignment shape parameters and the error
function they rely on.  Configuration files use a flat ``key = value`` format.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class ConfigError(ValueError):
    """Invalid configuration value; ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class Continuous(enum.Enum):
    CONTINUOUS = "continuous"


class Disabled(enum.Enum):
    DISABLED = "disabled"


# Sentinels: unquantized phases, and misalignment fixed at h_M = 1.
CONTINUOUS = Continuous.CONTINUOUS
DISABLED = Disabled.DISABLED


class SnrMode(enum.Enum):
    RHO_CONTROLLED = "rho_controlled"
    PHYSICAL = "physical"


@dataclass(frozen=True)
class MisalignmentParams:
    """Power-law misalignment law f(x) = zeta * phi**-zeta * x**(zeta - 1) on [0, phi]."""

    phi: float
    zeta: float

    def __post_init__(self):
        if not 0.0 < self.phi <= 1.0:
            raise ConfigError("phi", f"must lie in (0, 1], got {self.phi}")
        if not self.zeta > 0.0:
            raise ConfigError("zeta", f"must be > 0, got {self.zeta}")


@dataclass(frozen=True)
class MisalignmentGeometry:
    """Physical beam/aperture quantities from which phi and zeta follow.

    Attributes
    ----------
    a : float
        Radius of the user's effective area [m].
    omega_bs : float
        BS beam footprint [m].
    omega_e : float
        Equivalent beam width [m].
    sigma_s : float
        Standard deviation of the misalignment displacement [m].
    """

    a: float
    omega_bs: float
    omega_e: float
    sigma_s: float

    def __post_init__(self):
        for name in ("a", "omega_bs", "omega_e", "sigma_s"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(name, f"must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class LinkGains:
    h_p: float
    h_a: float
    h_l: float


@dataclass(frozen=True)
class SystemConfig:
    """One link scenario.  Defaults are the reference numerical setup.

    ``kappa`` and ``h_a`` are alternative ways to give the absorption; exactly
    one must be set.  ``quant_bits`` may be :data:`CONTINUOUS` and
    ``misalignment`` may be :data:`DISABLED`.
    """

    frequency: float = 0.3e12
    d1: float = 15.0
    d2: float = 15.0
    g1_dbi: float = 30.0
    g2_dbi: float = 30.0
    kappa: float | None = None
    h_a: float | None = 0.68
    num_elements: int = 100
    amplification: float = 2.0
    sigma_r_sq: float = 0.01
    sigma_u_sq: float = 0.05
    tx_power: float = 1.0
    quant_bits: int | Continuous = 2
    misalignment: MisalignmentParams | Disabled = field(
        default_factory=lambda: MisalignmentParams(phi=0.2, zeta=0.52)
    )
    snr_mode: SnrMode = SnrMode.RHO_CONTROLLED
    rho_db: float = 10.0

    def __post_init__(self):
        positive = {
            "frequency": self.frequency,
            "d1": self.d1,
            "d2": self.d2,
            "amplification": self.amplification,
            "sigma_u_sq": self.sigma_u_sq,
            "tx_power": self.tx_power,
        }
        for key, value in positive.items():
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigError(key, f"must be a finite value > 0, got {value}")
        if not (math.isfinite(self.sigma_r_sq) and self.sigma_r_sq >= 0.0):
            raise ConfigError("sigma_r_sq", f"must be >= 0, got {self.sigma_r_sq}")
        if isinstance(self.num_elements, bool) or not isinstance(self.num_elements, (int, np.integer)):
            raise ConfigError("num_elements", f"must be an integer, got {self.num_elements!r}")
        if self.num_elements < 0:
            raise ConfigError("num_elements", f"must be >= 0, got {self.num_elements}")
        if self.quant_bits is not CONTINUOUS:
            if isinstance(self.quant_bits, bool) or not isinstance(self.quant_bits, (int, np.integer)):
                raise ConfigError("quant_bits", f"must be an integer or continuous, got {self.quant_bits!r}")
            if self.quant_bits < 1:
                raise ConfigError("quant_bits", f"must be >= 1, got {self.quant_bits}")
        if not (self.misalignment is DISABLED or isinstance(self.misalignment, MisalignmentParams)):
            raise ConfigError("misalignment", f"expected MisalignmentParams or DISABLED, got {self.misalignment!r}")
        if not isinstance(self.snr_mode, SnrMode):
            raise ConfigError("snr_mode", f"expected SnrMode, got {self.snr_mode!r}")
        if not math.isfinite(self.rho_db):
            raise ConfigError("rho_db", f"must be finite, got {self.rho_db}")
        if (self.kappa is None) == (self.h_a is None):
            raise ConfigError("absorption", "exactly one of kappa and h_a must be given")
        if self.kappa is not None and not (math.isfinite(self.kappa) and self.kappa >= 0.0):
            raise ConfigError("kappa", f"must be >= 0, got {self.kappa}")
        if self.h_a is not None and not 0.0 < self.h_a <= 1.0:
            raise ConfigError("h_a", f"must lie in (0, 1], got {self.h_a}")

    @property
    def beta(self) -> float:
        return self.amplification

    @property
    def phi(self) -> float:
        """Misalignment ceiling; 1 when misalignment is disabled."""
        return 1.0 if self.misalignment is DISABLED else self.misalignment.phi

    def with_changes(self, **changes) -> SystemConfig:
        return replace(self, **changes)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def propagation_gain(cfg: SystemConfig) -> float:
    """Friis gain c*sqrt(G1*G2) / (8*sqrt(pi^3)*f*d1*d2) with linear antenna gains."""
    for key, value in (("frequency", cfg.frequency), ("d1", cfg.d1), ("d2", cfg.d2)):
        if not value > 0.0:
            raise ConfigError(key, f"must be > 0, got {value}")
    g1 = db_to_linear(cfg.g1_dbi)
    g2 = db_to_linear(cfg.g2_dbi)
    return SPEED_OF_LIGHT * math.sqrt(g1 * g2) / (
        8.0 * math.sqrt(math.pi**3) * cfg.frequency * cfg.d1 * cfg.d2
    )


def absorption_gain(cfg: SystemConfig) -> float:
    if cfg.h_a is not None:
        if not 0.0 < cfg.h_a <= 1.0:
            raise ConfigError("h_a", f"must lie in (0, 1], got {cfg.h_a}")
        return cfg.h_a
    if cfg.kappa is None or cfg.kappa < 0.0:
        raise ConfigError("kappa", f"must be >= 0, got {cfg.kappa}")
    return math.exp(-cfg.kappa * (cfg.d1 + cfg.d2) / 2.0)


def implied_kappa(cfg: SystemConfig) -> float:
    """Absorption coefficient [1/m] consistent with the configured absorption gain."""
    if cfg.kappa is not None:
        return cfg.kappa
    return -2.0 * math.log(cfg.h_a) / (cfg.d1 + cfg.d2)


def link_gains(cfg: SystemConfig) -> LinkGains:
    h_p = propagation_gain(cfg)
    h_a = absorption_gain(cfg)
    return LinkGains(h_p=h_p, h_a=h_a, h_l=h_p * h_a)


def derive_misalignment(geom: MisalignmentGeometry) -> MisalignmentParams:
    l = math.sqrt(math.pi) * geom.a / (math.sqrt(2.0) * geom.omega_bs)
    phi = float(erf(l)) ** 2
    zeta = geom.omega_e**2 / (4.0 * geom.sigma_s**2)
    return MisalignmentParams(phi=phi, zeta=zeta)


_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_SERIES_TERMS = 80
_CF_DEPTH = 60


def erf(x):
    """Error function, accurate to ~1e-15 absolute over the real line.

    Uses the all-positive series ``2/sqrt(pi) * exp(-x^2) * sum 2^n x^(2n+1) / (2n+1)!!``
    for |x| <= 3 and a Laplace continued fraction for erfc beyond.
    Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    ax = np.abs(arr)
    out = np.empty_like(ax)

    small = ax <= 3.0
    if np.any(small):
        xs = ax[small]
        x2 = xs * xs
        term = xs.copy()
        total = xs.copy()
        for n in range(1, _SERIES_TERMS):
            term = term * 2.0 * x2 / (2 * n + 1)
            total += term
        out[small] = _TWO_OVER_SQRT_PI * np.exp(-x2) * total

    large = ~small
    if np.any(large):
        xl = ax[large]
        # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        t = xl.copy()
        for k in range(_CF_DEPTH, 0, -1):
            t = xl + (k / 2.0) / t
        out[large] = 1.0 - np.exp(-xl * xl) / (math.sqrt(math.pi) * t)

    out = np.where(np.isnan(arr), np.nan, np.copysign(out, arr))
    return float(out) if out.ndim == 0 else out


# --- configuration files -----------------------------------------------------

_FLOAT_KEYS = {
    "frequency_hz": "frequency",
    "d1_m": "d1",
    "d2_m": "d2",
    "g1_dbi": "g1_dbi",
    "g2_dbi": "g2_dbi",
    "beta": "amplification",
    "sigma_r_sq": "sigma_r_sq",
    "sigma_u_sq": "sigma_u_sq",
    "tx_power_w": "tx_power",
    "rho_db": "rho_db",
}
_GEOMETRY_KEYS = {
    "radius_m": "a",
    "beam_footprint_m": "omega_bs",
    "beam_width_m": "omega_e",
    "sigma_s_m": "sigma_s",
}
CONFIG_KEYS = frozenset(
    set(_FLOAT_KEYS)
    | set(_GEOMETRY_KEYS)
    | {"h_a", "kappa_per_m", "num_elements", "quant_bits", "phi", "zeta", "misalignment", "snr_mode"}
)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a dict.  ``#`` starts a comment."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in CONFIG_KEYS:
            raise ConfigError(key, "unknown configuration key")
        raw[key] = value
    return raw


def _to_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(key, f"not a number: {value!r}") from None


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(key, f"not an integer: {value!r}") from None


def config_from_mapping(raw: Mapping[str, str]) -> SystemConfig:
    """Build a :class:`SystemConfig` from file keys; absent keys keep their defaults."""
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")

    kw: dict = {}
    for key, name in _FLOAT_KEYS.items():
        if key in raw:
            kw[name] = _to_float(key, raw[key])

    has_ha, has_kappa = "h_a" in raw, "kappa_per_m" in raw
    if has_ha and has_kappa:
        raise ConfigError("kappa_per_m", "give either h_a or kappa_per_m, not both")
    if has_ha:
        kw["h_a"] = _to_float("h_a", raw["h_a"])
        kw["kappa"] = None
    elif has_kappa:
        kw["kappa"] = _to_float("kappa_per_m", raw["kappa_per_m"])
        kw["h_a"] = None

    if "num_elements" in raw:
        kw["num_elements"] = _to_int("num_elements", raw["num_elements"])

    if "quant_bits" in raw:
        value = raw["quant_bits"].strip().lower()
        kw["quant_bits"] = CONTINUOUS if value == "continuous" else _to_int("quant_bits", value)

    if "snr_mode" in raw:
        try:
            kw["snr_mode"] = SnrMode(raw["snr_mode"].strip().lower())
        except ValueError:
            raise ConfigError("snr_mode", f"expected rho_controlled or physical, got {raw['snr_mode']!r}") from None

    mode = raw.get("misalignment", "enabled").strip().lower()
    if mode == "disabled":
        kw["misalignment"] = DISABLED
    elif mode == "enabled":
        geometry = {k: v for k, v in raw.items() if k in _GEOMETRY_KEYS}
        if geometry:
            if "phi" in raw or "zeta" in raw:
                raise ConfigError("phi", "give either phi/zeta or the beam geometry, not both")
            missing = sorted(set(_GEOMETRY_KEYS) - set(geometry))
            if missing:
                raise ConfigError(missing[0], "missing beam geometry key")
            geom = MisalignmentGeometry(
                **{_GEOMETRY_KEYS[k]: _to_float(k, v) for k, v in geometry.items()}
            )
            kw["misalignment"] = derive_misalignment(geom)
        else:
            default = SystemConfig().misalignment
            kw["misalignment"] = MisalignmentParams(
                phi=_to_float("phi", raw["phi"]) if "phi" in raw else default.phi,
                zeta=_to_float("zeta", raw["zeta"]) if "zeta" in raw else default.zeta,
            )
    else:
        raise ConfigError("misalignment", f"expected enabled or disabled, got {mode!r}")

    return SystemConfig(**kw)


def read_config_mapping(path: str | Path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text())


def load_config(path: str | Path) -> SystemConfig:
    return config_from_mapping(read_config_mapping(path))
