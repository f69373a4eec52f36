"""Random generation: sphere directions, radii, data matrices, GOE, spiked data.

Every sampler takes an :class:`RngStream` (or a bare ``numpy.random.Generator``)
and is a deterministic function of the stream state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDraw, InvalidLaw, NegativeStrength, WeightRoundingMismatch
from .model import ModelSpec, RadiusLaw

_MAX_SPHERE_RETRIES = 8
_TINY_NORM = 1e-300


@dataclass
class RngStream:
    """Substream ``stream_index`` of ``master_seed``.

    The generator is derived through ``SeedSequence(master_seed,
    spawn_key=(stream_index,))`` so it depends on both integers only, never
    on the worker that happens to consume it.
    """

    master_seed: int
    stream_index: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not 0 <= int(v) < 2**64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {v}")
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index),))
        self.generator = np.random.Generator(np.random.PCG64(seq))


def as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def sample_unit_sphere(M: int, rng) -> np.ndarray:
    """Uniform point on the unit sphere in R^M (normalized Gaussian vector)."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    gen = as_generator(rng)
    for _ in range(_MAX_SPHERE_RETRIES):
        g = gen.standard_normal(M)
        norm = np.linalg.norm(g)
        if norm >= _TINY_NORM:
            return g / norm
    raise DegenerateDraw(f"Gaussian draw of norm < {_TINY_NORM} {_MAX_SPHERE_RETRIES} times")


def sample_sphere_columns(M: int, n: int, rng) -> np.ndarray:
    """M x n matrix with i.i.d. uniform unit-sphere columns."""
    gen = as_generator(rng)
    U = gen.standard_normal((M, n))
    norms = np.linalg.norm(U, axis=0)
    bad = np.flatnonzero(norms < _TINY_NORM)
    for j in bad:
        U[:, j] = sample_unit_sphere(M, gen)
        norms[j] = 1.0
    return U / norms


def sample_radius(law: RadiusLaw, M: int, N: int, rng, size: int | None = None):
    """Radius draw(s) xi >= 0 with E xi^2 = M/N exactly by construction.

    Returns a float when ``size`` is None, otherwise an array of ``size``
    i.i.d. draws.
    """
    gen = as_generator(rng)
    n = 1 if size is None else int(size)
    scale2 = law.square_scale(M, N)
    kind = law.kind
    if kind == "chi":
        sq = gen.chisquare(M, n) * scale2
    elif kind == "pearson2":
        sq = gen.beta(M / 2.0, 0.5, n) * scale2
    elif kind == "gamma":
        g = gen.gamma(M / 2.0, 0.5, n)
        sq = g * g * scale2
    elif kind in ("d1", "d2", "atoms"):
        xs, ps = law.summand_atoms()
        counts = gen.multinomial(M, ps, size=n)
        raw = counts @ np.asarray(xs)
        sq = raw * raw * scale2
    else:  # pragma: no cover - RadiusLaw validates kind
        raise InvalidLaw(f"unsupported radius law {kind!r}")
    xi = np.sqrt(sq)
    return float(xi[0]) if size is None else xi


def sigma_sqrt_diagonal(spec: ModelSpec) -> np.ndarray:
    diag = spec.spectrum.diagonal(spec.M)
    if len(diag) != spec.M or not diag:
        raise WeightRoundingMismatch(f"spectrum weights do not apportion to M={spec.M} eigenvalues")
    return np.sqrt(np.asarray(diag, dtype=float))


@dataclass(frozen=True)
class DataMatrix:
    """M x N data matrix with columns xi_i * Sigma^{1/2} u_i."""

    entries: np.ndarray
    model: ModelSpec
    radii: np.ndarray
    master_seed: int | None = None
    stream_index: int | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def _seed_info(rng) -> tuple[int | None, int | None]:
    if isinstance(rng, RngStream):
        return rng.master_seed, rng.stream_index
    return None, None


def sample_data_matrix(spec: ModelSpec, rng) -> DataMatrix:
    """Draw R = Sigma^{1/2} U D, with U uniform-sphere columns and D = diag(xi).

    The sample covariance matrix of the model is R R^T (the normalization is
    carried by E xi^2 = M/N). Draw order: directions first, then radii.
    """
    gen = as_generator(rng)
    root = sigma_sqrt_diagonal(spec)
    U = sample_sphere_columns(spec.M, spec.N, gen)
    xi = sample_radius(spec.radius, spec.M, spec.N, gen, size=spec.N)
    R = (root[:, None] * U) * xi[None, :]
    master, index = _seed_info(rng)
    return DataMatrix(R, spec, xi, master, index)


def sample_goe(d: int, rng) -> np.ndarray:
    """GOE matrix: off-diagonal variance 1/d, diagonal variance 2/d.

    The spectrum fills [-2, 2] and d^{2/3}(lambda_1 - 2) tends to TW1.
    """
    if d < 2:
        raise ValueError(f"GOE dimension must be >= 2, got {d}")
    A = as_generator(rng).standard_normal((d, d))
    return (A + A.T) / np.sqrt(2.0 * d)


def sample_goe_tridiagonal(d: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of a tridiagonal matrix with the GOE spectrum.

    Uses the beta = 1 Hermite tridiagonal model (Householder reduction of a
    GOE matrix), scaled to the same convention as :func:`sample_goe`.
    O(d) draws instead of O(d^2).
    """
    if d < 2:
        raise ValueError(f"GOE dimension must be >= 2, got {d}")
    gen = as_generator(rng)
    diag = gen.standard_normal(d) * np.sqrt(2.0 / d)
    off = np.sqrt(gen.chisquare(np.arange(d - 1, 0, -1, dtype=float))) / np.sqrt(d)
    return diag, off


def sample_signal_plus_noise(spec: ModelSpec, nu: float, rng) -> np.ndarray:
    """Data y_i = e_1 s_i + Sigma^{1/2} z_i, i = 1..N, as an M x N matrix.

    s_i ~ Normal(0, nu*sqrt(phi)) (variance) and z_i = sqrt(N) xi_i u_i so that
    E z z^T = I. The sample covariance is Y Y^T / N. The noise is drawn first
    with the same consumption as :func:`sample_data_matrix`; the signal is
    drawn afterwards and only when nu > 0, so nu = 0 reproduces the null model.
    """
    if nu < 0:
        raise NegativeStrength(f"signal strength must be >= 0, got {nu}")
    gen = as_generator(rng)
    noise = sample_data_matrix(spec, gen).entries
    Y = noise * np.sqrt(spec.N)
    if nu > 0:
        s = gen.standard_normal(spec.N) * np.sqrt(nu * np.sqrt(spec.phi))
        Y[0, :] += s
    return Y
