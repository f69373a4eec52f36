"""Monte Carlo drivers for the edge-statistic studies.

Every driver returns a :class:`TableResult`; nothing is written to disk until
all replicates have finished, and a failing replicate aborts the run.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import ks_2samp

from .errors import MissingCalibration
from .model import ModelSpec, resize_model
from .mp_law import edge_params, solve_m, validate_conditions
from .parallel import map_replicates_array
from .sampler import RngStream, sample_data_matrix, sample_signal_plus_noise
from .spectral import SpectralSample, empirical_stieltjes, gram_eigenvalues, onatski_statistic, rescale_largest
from .tw_reference import CalibrationResult, tw1_table

CSV_FIELDS = ("setting", "statistic", "estimate", "se", "reps", "seed")


@dataclass
class ExperimentConfig:
    model: ModelSpec
    reps: int
    master_seed: int
    workers: int = 1
    output_dir: str | Path | None = None
    alpha: float = 0.05
    calibration: CalibrationResult | None = None
    nus: Sequence[float] = ()
    # (E - lambda_+, eta) pairs
    z_grid: Sequence[tuple[float, float]] = ()
    n_ladder: Sequence[int] = ()

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        report = validate_conditions(self.model.spectrum, self.model.phi, self.model.phi_bounds)
        if not report.ok:
            raise ValueError(f"model fails the validity checks: {report}")

    def echo(self) -> dict:
        doc = {
            "model": self.model.describe(),
            "reps": self.reps,
            "master_seed": self.master_seed,
            "alpha": self.alpha,
        }
        if self.nus:
            doc["nus"] = list(self.nus)
        if self.z_grid:
            doc["z_grid"] = [list(z) for z in self.z_grid]
        if self.n_ladder:
            doc["n_ladder"] = list(self.n_ladder)
        if self.calibration is not None:
            c = self.calibration
            doc["calibration"] = {"dim": c.dim, "reps": c.reps, "master_seed": c.master_seed, "method": c.method}
        return doc


@dataclass(frozen=True)
class Cell:
    setting: str
    statistic: str
    estimate: float
    se: float
    reps: int
    seed: int


def binomial_se(p: float, reps: int) -> float:
    return math.sqrt(p * (1.0 - p) / reps)


@dataclass
class TableResult:
    experiment: str
    cells: list[Cell]
    config: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    samples: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def cell(self, setting: str, statistic: str) -> Cell:
        for c in self.cells:
            if c.setting == setting and c.statistic == statistic:
                return c
        raise KeyError((setting, statistic))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for c in self.cells:
            writer.writerow([c.setting, c.statistic, repr(float(c.estimate)), repr(float(c.se)), c.reps, c.seed])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "cells": [
                {"setting": c.setting, "statistic": c.statistic, "estimate": c.estimate,
                 "se": None if math.isnan(c.se) else c.se, "reps": c.reps, "seed": c.seed}
                for c in self.cells
            ],
            "extras": self.extras,
        }

    def summary(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, directory: str | Path) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        seed = self.config.get("master_seed", "na")
        stem = f"{self.experiment}_seed{seed}"
        csv_path, json_path = directory / f"{stem}.csv", directory / f"{stem}.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.summary() + "\n")
        return csv_path, json_path


def setting_label(spec: ModelSpec) -> str:
    return f"{spec.name or 'custom'}/{spec.radius.label}/{spec.M}x{spec.N}"


def _finish(result: TableResult, cfg: ExperimentConfig) -> TableResult:
    if cfg.output_dir is not None:
        result.write(cfg.output_dir)
    return result


# replicate kernels; module level so worker processes can import them


def _largest_eigenvalue(stream: RngStream, spec: ModelSpec) -> float:
    X = sample_data_matrix(spec, stream)
    return float(gram_eigenvalues(X, k=1).eigenvalues[0])


def _onatski_replicate(stream: RngStream, spec: ModelSpec, nu: float) -> float:
    Y = sample_signal_plus_noise(spec, nu, stream)
    eigs = gram_eigenvalues(Y, k=3, scale=1.0 / spec.N)
    return onatski_statistic(eigs)


def _stieltjes_replicate(stream: RngStream, spec: ModelSpec, zs: tuple[complex, ...]) -> np.ndarray:
    eigs = gram_eigenvalues(sample_data_matrix(spec, stream))
    return np.array([empirical_stieltjes(eigs, z) for z in zs])


def rescaled_largest_samples(spec: ModelSpec, reps: int, master_seed: int, workers: int = 1) -> np.ndarray:
    """gamma N^{2/3} (lambda_1 - lambda_+) over ``reps`` simulated data matrices."""
    edge = edge_params(spec.spectrum, spec.phi)
    lam1 = map_replicates_array(_largest_eigenvalue, reps, master_seed, spec, workers=workers)
    return rescale_largest(lam1, edge, spec.N)


def run_table1(cfg: ExperimentConfig) -> TableResult:
    """Empirical CDF of the rescaled largest eigenvalue at the TW1 table percentiles."""
    spec = cfg.model
    stat = rescaled_largest_samples(spec, cfg.reps, cfg.master_seed, cfg.workers)
    label = setting_label(spec)
    cells = []
    for x, p_tw in tw1_table().points:
        p_hat = float(np.count_nonzero(stat <= x)) / cfg.reps
        cells.append(Cell(label, f"F({x:+.2f}) [TW {p_tw:.2f}]", p_hat, binomial_se(p_hat, cfg.reps),
                          cfg.reps, cfg.master_seed))
    edge = edge_params(spec.spectrum, spec.phi)
    return _finish(TableResult("table1", cells, cfg.echo(), {"edge": edge.as_dict()}, {label: stat}), cfg)


def onatski_samples(spec: ModelSpec, nu: float, reps: int, master_seed: int, workers: int = 1) -> np.ndarray:
    return map_replicates_array(_onatski_replicate, reps, master_seed, spec, float(nu), workers=workers)


def _critical(cfg: ExperimentConfig) -> float:
    if cfg.calibration is None:
        raise MissingCalibration("an Onatski calibration is required (run calibrate-onatski first)")
    if cfg.calibration.statistic_kind != "onatski_ratio":
        raise MissingCalibration(f"calibration is of kind {cfg.calibration.statistic_kind!r}, not onatski_ratio")
    return cfg.calibration.critical_value(cfg.alpha)


def run_size(cfg: ExperimentConfig) -> TableResult:
    """Null rejection rate of T > critical value."""
    crit = _critical(cfg)
    spec = cfg.model
    T = onatski_samples(spec, 0.0, cfg.reps, cfg.master_seed, cfg.workers)
    rate = float(np.count_nonzero(T > crit)) / cfg.reps
    label = setting_label(spec)
    cell = Cell(label, f"size(alpha={cfg.alpha:g})", rate, binomial_se(rate, cfg.reps), cfg.reps, cfg.master_seed)
    return _finish(TableResult("size", [cell], cfg.echo(), {"critical_value": crit}, {label: T}), cfg)


def run_power(cfg: ExperimentConfig, nus: Sequence[float] | None = None) -> TableResult:
    """Rejection rate under the rank-one signal alternative, one cell per nu.

    Replicate i uses stream i for every nu, so the noise is shared across
    signal strengths.
    """
    crit = _critical(cfg)
    nus = list(cfg.nus if nus is None else nus)
    spec = cfg.model
    label = setting_label(spec)
    cells, samples = [], {}
    for nu in nus:
        T = onatski_samples(spec, nu, cfg.reps, cfg.master_seed, cfg.workers)
        rate = float(np.count_nonzero(T > crit)) / cfg.reps
        cells.append(Cell(label, f"power(nu={nu:g},alpha={cfg.alpha:g})", rate, binomial_se(rate, cfg.reps),
                          cfg.reps, cfg.master_seed))
        samples[f"nu={nu:g}"] = T
    return _finish(TableResult("power", cells, cfg.echo(), {"critical_value": crit}, samples), cfg)


def run_rigidity(cfg: ExperimentConfig) -> TableResult:
    """N^{2/3}|lambda_1 - lambda_+| across a ladder of sample sizes.

    ``extras['slope']`` is the least-squares slope of log median|lambda_1 -
    lambda_+| against log N.
    """
    ladder = sorted(int(n) for n in cfg.n_ladder)
    if len(ladder) < 3:
        raise ValueError("rigidity needs a ladder of at least three sample sizes")
    cells, samples, medians = [], {}, []
    for N in ladder:
        spec = resize_model(cfg.model, N)
        edge = edge_params(spec.spectrum, spec.phi)
        lam1 = map_replicates_array(_largest_eigenvalue, cfg.reps, cfg.master_seed, spec, workers=cfg.workers)
        dev = np.abs(lam1 - edge.lambda_plus)
        scaled = N ** (2.0 / 3.0) * dev
        label = setting_label(spec)
        medians.append(float(np.median(dev)))
        cells.append(Cell(label, "median N^(2/3)|l1-l+|", float(np.median(scaled)), math.nan, cfg.reps, cfg.master_seed))
        cells.append(Cell(label, "q95 N^(2/3)|l1-l+|", float(np.quantile(scaled, 0.95)), math.nan,
                          cfg.reps, cfg.master_seed))
        samples[label] = lam1
    slope = float(np.polyfit(np.log(ladder), np.log(medians), 1)[0])
    cells.append(Cell(setting_label(cfg.model), "loglog slope median|l1-l+|", slope, math.nan,
                      cfg.reps, cfg.master_seed))
    extras = {"slope": slope, "ladder": ladder, "median_abs_dev": medians}
    return _finish(TableResult("rigidity", cells, cfg.echo(), extras, samples), cfg)


def run_locallaw(cfg: ExperimentConfig) -> TableResult:
    """(N eta)|m_N(z) - m(z)| over replicates at each grid point near the edge."""
    spec = cfg.model
    if not cfg.z_grid:
        raise ValueError("local law run needs a non-empty z grid")
    edge = edge_params(spec.spectrum, spec.phi)
    zs = tuple(complex(edge.lambda_plus + dE, eta) for dE, eta in cfg.z_grid)
    if any(z.imag <= 0 for z in zs):
        raise ValueError("every grid point needs eta > 0")
    m_det = np.array([solve_m(z, spec.spectrum, spec.phi).m for z in zs])
    m_emp = map_replicates_array(_stieltjes_replicate, cfg.reps, cfg.master_seed, spec, zs, workers=cfg.workers)
    err = np.abs(m_emp - m_det[None, :])
    label = setting_label(spec)
    cells, points = [], []
    for j, z in enumerate(zs):
        scaled = spec.N * z.imag * err[:, j]
        tag = f"z=l+{z.real - edge.lambda_plus:+g}+{z.imag:g}i"
        cells.append(Cell(label, f"median N*eta*|mN-m| {tag}", float(np.median(scaled)), math.nan,
                          cfg.reps, cfg.master_seed))
        cells.append(Cell(label, f"median |mN-m| {tag}", float(np.median(err[:, j])), math.nan,
                          cfg.reps, cfg.master_seed))
        points.append({"E": z.real, "eta": z.imag, "m": [m_det[j].real, m_det[j].imag],
                       "median_scaled": float(np.median(scaled)), "q95_scaled": float(np.quantile(scaled, 0.95))})
    return _finish(TableResult("locallaw", cells, cfg.echo(), {"points": points}, {label: m_emp}), cfg)


def run_universality(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig) -> TableResult:
    """Two-sample KS distance between rescaled lambda_1 under two radius laws."""
    a, b = cfg_a.model, cfg_b.model
    if (a.M, a.N, a.spectrum) != (b.M, b.N, b.spectrum):
        raise ValueError("universality comparison needs the same (M, N, spectrum)")
    sa = rescaled_largest_samples(a, cfg_a.reps, cfg_a.master_seed, cfg_a.workers)
    sb = rescaled_largest_samples(b, cfg_b.reps, cfg_b.master_seed, cfg_b.workers)
    ks = float(ks_2samp(sa, sb).statistic)
    label = f"{setting_label(a)} vs {b.radius.label}"
    cell = Cell(label, "KS distance", ks, math.nan, min(cfg_a.reps, cfg_b.reps), cfg_a.master_seed)
    config = {"a": cfg_a.echo(), "b": cfg_b.echo(), "master_seed": cfg_a.master_seed}
    result = TableResult("universality", [cell], config, {"ks": ks, "reps": [cfg_a.reps, cfg_b.reps]},
                         {"a": sa, "b": sb})
    return _finish(result, cfg_a)
