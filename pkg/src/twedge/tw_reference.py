"""Reference values for the type-1 Tracy-Widom law and GOE calibration.

TW1 enters in two ways: the nine tabulated (percentile, probability) pairs
used to judge the rescaled largest eigenvalue, and Monte Carlo over GOE
matrices, which also supplies the null distribution of the Onatski ratio.
"""
from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DegenerateGap, EigenFailure, MissingCalibration
from .parallel import map_replicates_array
from .sampler import RngStream, sample_goe, sample_goe_tridiagonal
from .spectral import onatski_statistic

TW1_POINTS = (
    (-3.90, 0.01),
    (-3.18, 0.05),
    (-2.78, 0.10),
    (-1.91, 0.30),
    (-1.27, 0.50),
    (-0.59, 0.70),
    (0.45, 0.90),
    (0.98, 0.95),
    (2.02, 0.99),
)
CDF_FLOOR, CDF_CEIL = 0.005, 0.995
ONATSKI_PROBS = (0.5, 0.8, 0.9, 0.95, 0.975, 0.99)
GOE_METHODS = ("tridiagonal", "dense")


@dataclass(frozen=True)
class Tw1Table:
    points: tuple[tuple[float, float], ...] = TW1_POINTS

    @property
    def percentiles(self) -> np.ndarray:
        return np.array([x for x, _ in self.points])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.points])

    def lookup(self, x: float) -> float:
        for px, pp in self.points:
            if px == x:
                return pp
        raise KeyError(f"{x} is not a table percentile")


def tw1_table() -> Tw1Table:
    return Tw1Table()


class TableRangeWarning(UserWarning):
    """Raised (as a warning) when interpolation clamps outside the table."""


def tw1_cdf_interp(x: float, *, return_flag: bool = False):
    """Piecewise-linear TW1 CDF through the table nodes.

    Below -3.90 the value is clamped to 0.005 and above 2.02 to 0.995; with
    ``return_flag`` a ``(p, clamped)`` pair is returned instead of warning.
    """
    table = tw1_table()
    xs, ps = table.percentiles, table.probabilities
    clamped = bool(x < xs[0] or x > xs[-1])
    if x < xs[0]:
        p = CDF_FLOOR
    elif x > xs[-1]:
        p = CDF_CEIL
    else:
        p = float(np.interp(x, xs, ps))
    if return_flag:
        return p, clamped
    if clamped:
        warnings.warn(f"x={x} outside tabulated TW1 range, clamped to {p}", TableRangeWarning, stacklevel=2)
    return p


def _goe_top3(stream: RngStream, dim: int, method: str) -> np.ndarray:
    if method == "tridiagonal":
        d, e = sample_goe_tridiagonal(dim, stream)
        try:
            vals = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(dim - 3, dim - 1))
        except np.linalg.LinAlgError as exc:
            raise EigenFailure(str(exc)) from exc
    else:
        H = sample_goe(dim, stream)
        try:
            vals = np.linalg.eigvalsh(H)[-3:]
        except np.linalg.LinAlgError as exc:
            raise EigenFailure(str(exc)) from exc
    return vals[::-1].copy()


def goe_top_eigenvalues(dim: int, reps: int, master_seed: int, *, method: str = "tridiagonal",
                        workers: int = 1) -> np.ndarray:
    """reps x 3 array of the three largest GOE eigenvalues, descending."""
    if method not in GOE_METHODS:
        raise ValueError(f"method must be one of {GOE_METHODS}, got {method!r}")
    if dim < 3:
        raise ValueError(f"GOE dimension must be >= 3, got {dim}")
    return map_replicates_array(_goe_top3, reps, master_seed, dim, method, workers=workers)


@dataclass(frozen=True)
class CalibrationResult:
    statistic_kind: str  # "tw_edge" or "onatski_ratio"
    dim: int
    reps: int
    master_seed: int
    percentile_estimates: tuple[tuple[float, float], ...]
    method: str = "tridiagonal"
    discarded: int = 0
    created: str = ""
    samples: np.ndarray | None = field(default=None, compare=False, repr=False)

    def value_at(self, prob: float) -> float:
        for p, v in self.percentile_estimates:
            if math.isclose(p, prob, rel_tol=0, abs_tol=1e-12):
                return v
        raise MissingCalibration(f"no {self.statistic_kind} percentile stored for p={prob}")

    def critical_value(self, alpha: float) -> float:
        """Upper-alpha critical value; alpha >= 1 rejects every positive statistic."""
        if alpha >= 1.0:
            return 0.0
        return self.value_at(1.0 - alpha)

    def to_json(self) -> str:
        doc = {
            "statistic_kind": self.statistic_kind,
            "dim": self.dim,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "method": self.method,
            "discarded": self.discarded,
            "percentiles": [[p, v] for p, v in self.percentile_estimates],
            "created": self.created,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> CalibrationResult:
        doc = json.loads(text)
        return cls(
            statistic_kind=doc["statistic_kind"],
            dim=int(doc["dim"]),
            reps=int(doc["reps"]),
            master_seed=int(doc["master_seed"]),
            percentile_estimates=tuple((float(p), float(v)) for p, v in doc["percentiles"]),
            method=doc.get("method", "tridiagonal"),
            discarded=int(doc.get("discarded", 0)),
            created=doc.get("created", ""),
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.to_json())
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, path: str | Path) -> CalibrationResult:
        return cls.from_json(Path(path).read_text())


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _check_sizes(dim: int, reps: int) -> None:
    if dim < 50:
        raise ValueError(f"calibration dimension must be >= 50, got {dim}")
    if reps < 100:
        raise ValueError(f"calibration needs >= 100 replicates, got {reps}")


def goe_percentiles(dim: int, reps: int, probs: Sequence[float], master_seed: int, *,
                    method: str = "tridiagonal", workers: int = 1) -> CalibrationResult:
    """Empirical percentiles of dim^{2/3} (lambda_1 - 2) over GOE draws."""
    _check_sizes(dim, reps)
    top = goe_top_eigenvalues(dim, reps, master_seed, method=method, workers=workers)
    stat = dim ** (2.0 / 3.0) * (top[:, 0] - 2.0)
    probs = sorted(float(p) for p in probs)
    values = np.quantile(stat, probs)
    return CalibrationResult(
        statistic_kind="tw_edge",
        dim=dim,
        reps=reps,
        master_seed=master_seed,
        percentile_estimates=tuple(zip(probs, (float(v) for v in values))),
        method=method,
        created=_timestamp(),
        samples=stat,
    )


def onatski_ratios(top: np.ndarray) -> tuple[np.ndarray, int]:
    """Onatski ratios of each row of a top-3 eigenvalue array; degenerate rows dropped."""
    out, dropped = [], 0
    for row in top:
        try:
            out.append(onatski_statistic(row))
        except DegenerateGap:
            dropped += 1
    return np.asarray(out), dropped


def onatski_critical(dim: int, reps: int, alpha: float, master_seed: int, *,
                     method: str = "tridiagonal", workers: int = 1,
                     probs: Sequence[float] = ONATSKI_PROBS) -> CalibrationResult:
    """GOE null distribution of (mu_1 - mu_2)/(mu_2 - mu_3).

    The stored percentiles always include 1 - alpha, the critical value of
    the level-alpha test. Replicates with a degenerate gap are discarded;
    more than 1% discarded is an error.
    """
    _check_sizes(dim, reps)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    top = goe_top_eigenvalues(dim, reps, master_seed, method=method, workers=workers)
    ratios, dropped = onatski_ratios(top)
    if dropped > 0.01 * reps:
        raise DegenerateGap(f"{dropped} of {reps} GOE replicates had a degenerate gap")
    grid = sorted(set(round(float(p), 12) for p in probs) | {round(1.0 - alpha, 12)})
    values = np.quantile(ratios, grid)
    return CalibrationResult(
        statistic_kind="onatski_ratio",
        dim=dim,
        reps=reps,
        master_seed=master_seed,
        percentile_estimates=tuple(zip(grid, (float(v) for v in values))),
        method=method,
        discarded=dropped,
        created=_timestamp(),
        samples=ratios,
    )


def default_cache_dir() -> Path:
    env = os.environ.get("TWEDGE_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "twedge"


def cache_path(cache_dir: str | Path | None, kind: str, dim: int, reps: int, master_seed: int,
               method: str = "tridiagonal") -> Path:
    base = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return base / f"{kind}_d{dim}_r{reps}_s{master_seed}_{method}.json"


def load_calibration(cache_dir, kind: str, dim: int, reps: int, master_seed: int,
                     method: str = "tridiagonal") -> CalibrationResult:
    path = cache_path(cache_dir, kind, dim, reps, master_seed, method)
    if not path.exists():
        raise MissingCalibration(f"no calibration cache at {path}")
    return CalibrationResult.load(path)
