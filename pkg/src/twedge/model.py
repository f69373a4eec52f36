"""Domain types for the elliptical data model x = xi * Sigma^{1/2} u.

A model is fully described by the dimension M, the sample size N, the
population spectrum (eigenvalues of Sigma with their weights) and the law of
the radius xi. Sigma is always taken diagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    EmptySpectrum,
    InvalidLaw,
    ModelError,
    NonPositiveValue,
    NonPositiveWeight,
    UnknownName,
)

DEFAULT_PHI_BOUNDS = (1.0 / 20.0, 20.0)


@dataclass(frozen=True)
class PopulationSpectrum:
    """Weighted atoms of the population eigenvalue distribution.

    Atoms are stored descending by value with weights summing to one. Build
    instances through :func:`make_population_spectrum`, which canonicalizes.
    """

    values: tuple[float, ...]
    weights: tuple[float, ...]

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values, self.weights))

    @property
    def sigma_max(self) -> float:
        return self.values[0]

    @property
    def sigma_min(self) -> float:
        return self.values[-1]

    def scaled(self, a: float) -> PopulationSpectrum:
        """Spectrum of a*Sigma."""
        if not a > 0:
            raise NonPositiveValue(f"scale factor must be positive, got {a}")
        return make_population_spectrum([(a * v, w) for v, w in self.atoms])

    def multiplicities(self, M: int) -> list[int]:
        """Integer eigenvalue multiplicities for an M x M diagonal Sigma.

        Largest-remainder apportionment of weight*M; ties go to the larger
        eigenvalue.
        """
        quotas = [w * M for w in self.weights]
        counts = [int(math.floor(q + 1e-9)) for q in quotas]
        short = M - sum(counts)
        order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
        for i in order[:max(short, 0)]:
            counts[i] += 1
        return counts

    def diagonal(self, M: int) -> list[float]:
        """The M diagonal entries of Sigma, descending."""
        out: list[float] = []
        for v, k in zip(self.values, self.multiplicities(M)):
            out.extend([v] * k)
        return out


def make_population_spectrum(atoms: Iterable[tuple[float, float]]) -> PopulationSpectrum:
    """Canonical spectrum from ``(value, weight)`` pairs.

    Weights are renormalized to sum to one, duplicate values are merged, and
    atoms are sorted by descending value.
    """
    merged: dict[float, float] = {}
    for value, weight in atoms:
        value, weight = float(value), float(weight)
        if not value > 0 or not math.isfinite(value):
            raise NonPositiveValue(f"eigenvalue must be positive and finite, got {value}")
        if not weight > 0 or not math.isfinite(weight):
            raise NonPositiveWeight(f"weight must be positive and finite, got {weight}")
        merged[value] = merged.get(value, 0.0) + weight
    if not merged:
        raise EmptySpectrum("population spectrum needs at least one atom")
    total = math.fsum(merged.values())
    values = tuple(sorted(merged, reverse=True))
    weights = tuple(merged[v] / total for v in values)
    return PopulationSpectrum(values=values, weights=weights)


def spectrum_from_diagonal(diag: Sequence[float]) -> PopulationSpectrum:
    """Empirical spectrum of an explicit diagonal Sigma (mass 1/M per entry)."""
    M = len(diag)
    return make_population_spectrum([(d, 1.0 / M) for d in diag])


def builtin_sigma(name: str, M: int, phi: float) -> PopulationSpectrum:
    """Builtin population spectra: ``identity``, ``sigma1`` and ``sigma2``.

    sigma1 has floor(M/2) eigenvalues equal to 2 and the rest equal to 1;
    sigma2 has a single eigenvalue 1 + sqrt(phi)/2 on top of ones.
    """
    if M < 2:
        raise ModelError(f"M must be at least 2, got {M}")
    if not phi > 0:
        raise ModelError(f"phi must be positive, got {phi}")
    key = name.strip().lower().replace("_", "")
    if key == "identity":
        return make_population_spectrum([(1.0, 1.0)])
    if key == "sigma1":
        half = M // 2
        return make_population_spectrum([(2.0, half / M), (1.0, (M - half) / M)])
    if key == "sigma2":
        return make_population_spectrum([(1.0 + math.sqrt(phi) / 2.0, 1.0 / M), (1.0, (M - 1) / M)])
    raise UnknownName(f"unknown builtin spectrum {name!r} (expected identity, sigma1, sigma2)")


def read_spectrum_file(path: str | Path) -> PopulationSpectrum:
    """Parse ``value weight`` lines; ``#`` starts a comment."""
    atoms = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'value weight', got {raw!r}")
        atoms.append((float(parts[0]), float(parts[1])))
    return make_population_spectrum(atoms)


# Summand laws for the discrete-sum radii, as printed (d1 weights total 0.9999).
D1_ATOMS = ((0.0, 0.2870), (1.0, 0.5971), (1.5, 0.1000), (2.0, 0.0063), (4.0, 0.0095))
D2_ATOMS = ((0.0, 0.1409), (1.0, 0.2906), (0.5, 0.4217), (2.0, 0.1454), (4.0, 0.0014))

RADIUS_KINDS = ("chi", "pearson2", "gamma", "d1", "d2", "atoms")
_RADIUS_ALIASES = {
    "chi": "chi", "chigaussian": "chi", "gaussian": "chi",
    "pearson2": "pearson2", "pearsonii": "pearson2", "pearson": "pearson2",
    "gamma": "gamma", "gammadoubleexp": "gamma", "doubleexp": "gamma",
    "d1": "d1", "discretesumd1": "d1",
    "d2": "d2", "discretesumd2": "d2",
    "atoms": "atoms", "useratoms": "atoms",
}


@dataclass(frozen=True)
class RadiusLaw:
    """Law of the radius xi, always rescaled so that E xi^2 = M/N.

    kinds:
      chi       xi^2 = chi^2_M / N (Gaussian data)
      pearson2  xi^2 = B (M+1)/N with B ~ Beta(M/2, 1/2)
      gamma     xi = s g with g ~ Gamma(shape M/2, scale 1/2)
      d1, d2    xi = s (y_1 + ... + y_M), y_j iid from the d1/d2 atoms
      atoms     as d1/d2 with user supplied summand atoms
    """

    kind: str
    atoms: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        key = _RADIUS_ALIASES.get(self.kind.strip().lower().replace("_", "").replace("-", ""))
        if key is None:
            raise UnknownName(f"unknown radius law {self.kind!r}")
        object.__setattr__(self, "kind", key)
        if key == "atoms":
            if not self.atoms:
                raise InvalidLaw("user atom law needs at least one atom")
            atoms = tuple((float(a), float(w)) for a, w in self.atoms)
            if any(w <= 0 for _, w in atoms):
                raise InvalidLaw("atom weights must be positive")
            if any(a < 0 for a, _ in atoms):
                raise InvalidLaw("summand atoms must be nonnegative")
            if all(a == 0 for a, _ in atoms):
                raise InvalidLaw("all summand atoms are zero")
            object.__setattr__(self, "atoms", atoms)
        elif self.atoms is not None:
            raise InvalidLaw(f"radius law {key!r} takes no atoms")

    @classmethod
    def parse(cls, text: str) -> RadiusLaw:
        """``chi``, ``pearson2``, ``gamma``, ``d1``, ``d2`` or ``atoms:a1:w1,a2:w2``."""
        if ":" in text:
            head, body = text.split(":", 1)
            pairs = []
            for item in body.split(","):
                a, w = item.split(":")
                pairs.append((float(a), float(w)))
            return cls(head, tuple(pairs))
        return cls(text)

    @property
    def label(self) -> str:
        return self.kind

    def summand_atoms(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Summand support and normalized probabilities of the discrete-sum laws."""
        src = {"d1": D1_ATOMS, "d2": D2_ATOMS, "atoms": self.atoms}.get(self.kind)
        if src is None:
            raise InvalidLaw(f"{self.kind!r} is not a discrete-sum law")
        total = math.fsum(w for _, w in src)
        return tuple(a for a, _ in src), tuple(w / total for _, w in src)

    def summand_moments(self) -> tuple[float, float]:
        """First two raw moments of a single (normalized) summand."""
        xs, ps = self.summand_atoms()
        m1 = math.fsum(x * p for x, p in zip(xs, ps))
        m2 = math.fsum(x * x * p for x, p in zip(xs, ps))
        return m1, m2

    def raw_second_moment(self, M: int) -> float:
        """E of the squared un-rescaled draw (xi^2 before normalization)."""
        if self.kind == "chi":
            return float(M)  # chi^2_M
        if self.kind == "pearson2":
            return M / (M + 1.0)  # Beta(M/2, 1/2) mean
        if self.kind == "gamma":
            k, theta = M / 2.0, 0.5
            return k * theta * theta + (k * theta) ** 2
        m1, m2 = self.summand_moments()
        return M * m2 + M * (M - 1) * m1 * m1

    def square_scale(self, M: int, N: int) -> float:
        """Multiplier applied to the raw squared draw so that E xi^2 = M/N."""
        if M < 1 or N < 1:
            raise InvalidLaw(f"need M, N >= 1, got M={M}, N={N}")
        raw = self.raw_second_moment(M)
        if not raw > 0:
            raise InvalidLaw(f"radius law {self.kind!r} has zero second moment")
        return (M / N) / raw

    def second_moment(self, M: int, N: int) -> float:
        """Analytic E xi^2 after rescaling; equals M/N up to rounding."""
        return self.square_scale(M, N) * self.raw_second_moment(M)


@dataclass(frozen=True)
class ModelSpec:
    """One complete elliptical model (M, N, spectrum, radius law)."""

    M: int
    N: int
    spectrum: PopulationSpectrum
    radius: RadiusLaw = field(default_factory=lambda: RadiusLaw("chi"))
    phi_bounds: tuple[float, float] = DEFAULT_PHI_BOUNDS
    name: str = ""  # builtin spectrum name, if any; lets the model be resized

    def __post_init__(self):
        if int(self.M) != self.M or int(self.N) != self.N:
            raise ModelError("M and N must be integers")
        if self.M < 2 or self.N < 2:
            raise ModelError(f"need M >= 2 and N >= 2, got M={self.M}, N={self.N}")
        lo, hi = self.phi_bounds
        if not lo <= self.phi <= hi:
            raise ModelError(f"phi = M/N = {self.phi:g} outside [{lo:g}, {hi:g}]")

    @property
    def phi_exact(self) -> Fraction:
        return Fraction(self.M, self.N)

    @property
    def phi(self) -> float:
        return self.M / self.N

    def describe(self) -> dict:
        return {
            "spectrum_name": self.name or "custom",
            "M": self.M,
            "N": self.N,
            "phi": self.phi,
            "spectrum": [list(a) for a in self.spectrum.atoms],
            "radius": self.radius.kind,
        }


def builtin_model(sigma: str, M: int, N: int, radius: str | RadiusLaw = "chi", **kwargs) -> ModelSpec:
    law = radius if isinstance(radius, RadiusLaw) else RadiusLaw.parse(radius)
    spectrum = builtin_sigma(sigma, M, M / N)
    return ModelSpec(M=M, N=N, spectrum=spectrum, radius=law, name=sigma.lower(), **kwargs)


def resize_model(spec: ModelSpec, N: int, M: int | None = None) -> ModelSpec:
    """Same model at sample size N (M follows phi unless given).

    Builtin spectra are rebuilt for the new M; custom spectra are reused.
    """
    if M is None:
        M = max(2, int(round(spec.phi * N)))
    if spec.name:
        return builtin_model(spec.name, M, N, spec.radius, phi_bounds=spec.phi_bounds)
    return replace(spec, M=M, N=N)


@dataclass(frozen=True)
class ComplexPoint:
    """Spectral parameter z = E + i*eta."""

    E: float
    eta: float

    def __post_init__(self):
        if self.eta < 0 or not math.isfinite(self.eta) or not math.isfinite(self.E):
            raise ValueError(f"need finite E and eta >= 0, got E={self.E}, eta={self.eta}")

    @classmethod
    def coerce(cls, z: complex | ComplexPoint) -> ComplexPoint:
        if isinstance(z, ComplexPoint):
            return z
        z = complex(z)
        return cls(z.real, z.imag)

    @property
    def z(self) -> complex:
        return complex(self.E, self.eta)

    def in_edge_domain(self, lambda_plus: float, N: int, tau: float, tau_edge: float) -> bool:
        """Membership in the edge domain around lambda_plus."""
        return (
            abs(self.E - lambda_plus) <= tau_edge
            and N ** (-1.0 + tau) <= self.eta <= 1.0 / tau
            and abs(self.z) >= tau
            and abs(self.E) <= 1.0 / tau
        )
