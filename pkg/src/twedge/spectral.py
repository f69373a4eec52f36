"""Eigenvalues of simulated data and the sample statistics built on them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGap, EigenFailure
from .model import ComplexPoint
from .mp_law import EdgeParams
from .sampler import DataMatrix

NEGATIVE_CLAMP = 1e-10


@dataclass(frozen=True)
class SpectralSample:
    """Descending nonzero-side eigenvalues of one sample covariance matrix.

    ``eigenvalues`` holds min(M, N) values unless truncated to the top k, in
    which case ``complete`` is False and the N x N padding is unavailable.
    """

    eigenvalues: np.ndarray
    M: int
    N: int
    complete: bool = True
    master_seed: int | None = None
    stream_index: int | None = None

    @classmethod
    def from_values(cls, values: Sequence[float], N: int | None = None, M: int | None = None) -> SpectralSample:
        vals = np.sort(np.asarray(values, dtype=float))[::-1]
        n = len(vals) if N is None else N
        return cls(vals, M=len(vals) if M is None else M, N=n)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def top(self, k: int) -> np.ndarray:
        return self.eigenvalues[:k]

    def n_side(self) -> np.ndarray:
        """The N eigenvalues of the N x N form, zero padded when M < N."""
        if not self.complete:
            raise ValueError("truncated spectrum cannot be padded to the N x N form")
        vals = self.eigenvalues
        if len(vals) >= self.N:
            return vals[: self.N]
        return np.concatenate([vals, np.zeros(self.N - len(vals))])


def gram_eigenvalues(X: DataMatrix | np.ndarray, k: int | None = None, *,
                     scale: float = 1.0) -> SpectralSample:
    """Eigenvalues of ``scale * X X^T`` via the smaller Gram form.

    Round-off negatives down to -1e-10 (relative to the top eigenvalue when
    it exceeds one) are clamped to zero; anything more negative raises
    :class:`EigenFailure`.
    """
    master = index = None
    if isinstance(X, DataMatrix):
        master, index = X.master_seed, X.stream_index
        X = X.entries
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise EigenFailure("data matrix has non-finite entries")
    M, N = X.shape
    gram = X.T @ X if N <= M else X @ X.T
    if scale != 1.0:
        gram = gram * scale
    try:
        vals = np.linalg.eigvalsh(gram)[::-1]
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    floor = -NEGATIVE_CLAMP * max(1.0, float(vals[0]) if vals.size else 1.0)
    if vals.size and vals[-1] < floor:
        raise EigenFailure(f"eigenvalue {vals[-1]:.3e} is negative beyond round-off")
    vals = np.maximum(vals, 0.0)
    complete = k is None or k >= len(vals)
    if not complete:
        vals = vals[:k]
    return SpectralSample(np.ascontiguousarray(vals), M=M, N=N, complete=complete,
                          master_seed=master, stream_index=index)


def rescale_largest(lambda1: float, edge: EdgeParams, N: int) -> float:
    """gamma * N^{2/3} * (lambda_1 - lambda_+)."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return edge.gamma * N ** (2.0 / 3.0) * (lambda1 - edge.lambda_plus)


def _values(eigs: SpectralSample | Sequence[float]) -> np.ndarray:
    if isinstance(eigs, SpectralSample):
        return eigs.eigenvalues
    return np.sort(np.asarray(eigs, dtype=float))[::-1]


def onatski_statistic(eigs: SpectralSample | Sequence[float]) -> float:
    """(lambda_1 - lambda_2) / (lambda_2 - lambda_3)."""
    vals = _values(eigs)
    if len(vals) < 3:
        raise ValueError("need at least three eigenvalues")
    l1, l2, l3 = vals[:3]
    if l2 - l3 <= 1e-14 * max(1.0, abs(l1)):
        raise DegenerateGap(f"lambda_2 - lambda_3 = {l2 - l3:.3e}")
    return float((l1 - l2) / (l2 - l3))


def empirical_stieltjes(eigs: SpectralSample, z: complex | ComplexPoint) -> complex:
    """m_N(z) = (1/N) sum over the N x N spectrum of 1/(lambda - z)."""
    zc = ComplexPoint.coerce(z).z
    if not zc.imag > 0:
        raise ValueError("empirical Stieltjes transform needs Im z > 0")
    vals = eigs.n_side()
    return complex(np.mean(1.0 / (vals - zc)))


def counting_function(eigs: SpectralSample, a: float, b: float) -> int:
    """Number of the N eigenvalues (zero padding included) inside [a, b]."""
    if a > b:
        raise ValueError(f"need a <= b, got [{a}, {b}]")
    vals = eigs.n_side()
    return int(np.count_nonzero((vals >= a) & (vals <= b)))
