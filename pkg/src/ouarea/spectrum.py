"""Truncated spectral data of the diagonal generator and its scale of spaces.

The generator is represented purely by its positive, strictly increasing
eigenvalue sequence; the analytic semigroup acts mode-wise as exp(-lambda_i t)
and the fractional-power spaces weight mode coefficients by lambda_i^kappa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import defaults

__all__ = [
    "SpectrumConfig",
    "eigenvalue",
    "semigroup_factor",
    "vkappa_norm",
    "SummabilityEntry",
    "SummabilityReport",
    "summability_report",
]


@dataclass(frozen=True)
class SpectrumConfig:
    """Eigenvalues of the truncated generator plus the space exponent kappa.

    ``law`` records how the sequence was produced: "explicit" for a verbatim
    list, "power" for lambda_i = coeff * i**(2/dim).  The power law keeps
    enough information for analytic tail estimates past the truncation.
    """

    eigenvalues: np.ndarray
    kappa: float = defaults.KAPPA
    law: str = "explicit"
    coeff: float | None = None
    dim: float | None = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("eigenvalues must be a non-empty 1-d sequence")
        if lam[0] <= 0.0 or not np.all(np.diff(lam) > 0.0):
            raise ValueError("eigenvalues must be positive and strictly increasing")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")
        if self.law not in ("explicit", "power"):
            raise ValueError(f"unknown spectrum law {self.law!r}")
        if self.law == "power" and (self.coeff is None or self.dim is None):
            raise ValueError("power-law spectrum requires coeff and dim")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @classmethod
    def power_law(
        cls,
        mode_count: int,
        coeff: float = defaults.SPECTRUM_COEFF,
        dim: float = defaults.SPECTRUM_DIM,
        kappa: float = defaults.KAPPA,
    ) -> "SpectrumConfig":
        """Spectrum lambda_i = coeff * i**(2/dim); coeff=pi^2, dim=1 gives pi^2 i^2."""
        if mode_count < 1:
            raise ValueError("mode_count must be positive")
        if coeff <= 0.0 or dim < 1.0:
            raise ValueError("need coeff > 0 and dim >= 1")
        i = np.arange(1, mode_count + 1, dtype=float)
        lam = coeff * i ** (2.0 / dim)
        return cls(lam, kappa=kappa, law="power", coeff=coeff, dim=dim)

    @property
    def mode_count(self) -> int:
        return int(self.eigenvalues.size)


def eigenvalue(cfg: SpectrumConfig, i: int) -> float:
    """Eigenvalue lambda_i for the 1-based mode index i."""
    if not 1 <= i <= cfg.mode_count:
        raise IndexError(f"mode index {i} outside 1..{cfg.mode_count}")
    return float(cfg.eigenvalues[i - 1])


def semigroup_factor(cfg: SpectrumConfig, i: int, t: float) -> float:
    """Diagonal semigroup entry exp(-lambda_i t); equals 1 at t = 0."""
    if t < 0.0:
        raise ValueError(f"semigroup is only defined for t >= 0, got {t}")
    return math.exp(-eigenvalue(cfg, i) * t)


def vkappa_norm(cfg: SpectrumConfig, coeffs, kappa: float | None = None) -> float:
    """Graded norm sqrt(sum coeffs_i^2 lambda_i^(2 kappa)); kappa=0 is Euclidean."""
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (cfg.mode_count,):
        raise ValueError(f"expected {cfg.mode_count} coefficients, got shape {c.shape}")
    k = cfg.kappa if kappa is None else kappa
    return float(np.sqrt(np.sum(c * c * cfg.eigenvalues ** (2.0 * k))))


@dataclass(frozen=True)
class SummabilityEntry:
    """One truncated sum sum_i lambda_i^exponent with its power-law tail verdict.

    ``index_exponent`` is the growth order in the mode index i; ``divergent``
    applies the integral test to it and is None when no law is available.
    ``tail_estimate`` bounds the discarded tail for convergent power laws.
    """

    name: str
    exponent: float
    partial_sum: float
    index_exponent: float | None
    tail_estimate: float | None
    divergent: bool | None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "exponent": self.exponent,
            "partial_sum": self.partial_sum,
            "index_exponent": self.index_exponent,
            "tail_estimate": self.tail_estimate,
            "divergent": self.divergent,
        }


@dataclass(frozen=True)
class SummabilityReport:
    nu: float
    p: int
    entries: tuple

    def entry(self, name: str) -> SummabilityEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"nu": self.nu, "p": self.p, "entries": [e.to_dict() for e in self.entries]}


def _power_law_entry(name, exponent, partial, coeff, dim, count):
    # lambda_i^a = coeff^a * i^(2a/d); integral test on the index exponent.
    idx_exp = 2.0 * exponent / dim
    if idx_exp >= -1.0:
        return SummabilityEntry(name, exponent, partial, idx_exp, None, True)
    tail = coeff ** exponent * count ** (idx_exp + 1.0) / (-(idx_exp + 1.0))
    return SummabilityEntry(name, exponent, partial, idx_exp, float(tail), False)


def summability_report(cfg: SpectrumConfig, cov, nu: float = defaults.NU, p: int = 2) -> SummabilityReport:
    """Truncated values and tail verdicts of the mode sums the moment bounds consume.

    Covers sum lambda^(-nu p/(p-1)), sum lambda^(p(nu-2 kappa)+1) and the
    kappa-trace sum lambda^(-2 kappa), plus the covariance trace.  Divergence
    of a power-law tail is a flagged result, never an error.
    """
    if p < 2:
        raise ValueError(f"p must be an integer >= 2, got {p}")
    lam = cfg.eigenvalues
    exps = {
        "inverse_nu": -nu * p / (p - 1.0),
        "moment_weight": p * (nu - 2.0 * cfg.kappa) + 1.0,
        "kappa_trace": -2.0 * cfg.kappa,
    }
    entries = []
    for name, a in exps.items():
        partial = float(np.sum(lam ** a))
        if cfg.law == "power":
            entries.append(_power_law_entry(name, a, partial, cfg.coeff, cfg.dim, cfg.mode_count))
        else:
            entries.append(SummabilityEntry(name, a, partial, None, None, None))
    q = np.asarray(cov.weights, dtype=float)
    trace = float(np.sum(q))
    if getattr(cov, "law", "explicit") == "power" and cov.decay is not None:
        rho = float(cov.decay)
        tail = cov.mode_count ** (1.0 - rho) / (rho - 1.0)
        entries.append(SummabilityEntry("covariance_trace", -rho, trace, -rho, float(tail), False))
    else:
        entries.append(SummabilityEntry("covariance_trace", float("nan"), trace, None, None, None))
    return SummabilityReport(nu=nu, p=p, entries=tuple(entries))
