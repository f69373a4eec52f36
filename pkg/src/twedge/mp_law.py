"""Deterministic Marchenko-Pastur quantities for a discrete population spectrum.

With f(w) = -1/w + phi * sum_j p_j x_j / (1 + w x_j), the edge of the limiting
spectral law is lambda_+ = f(-c) where c in (0, 1/sigma_1) solves f'(-c) = 0.
The Stieltjes transform m(z) solves f(m) = z in the upper half plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BracketFailure,
    ConditionViolated,
    NoConvergence,
    PoleAtAtom,
    PoleAtZero,
    WrongBranch,
)
from .model import DEFAULT_PHI_BOUNDS, ComplexPoint, PopulationSpectrum

RESIDUAL_TOL = 1e-10
BRACKET_TOL = 1e-13
MARGIN_WARNING = 0.01


def _arrays(spectrum: PopulationSpectrum) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(spectrum.values, dtype=float), np.asarray(spectrum.weights, dtype=float)


def _check_poles(w: complex, x: np.ndarray) -> np.ndarray:
    if w == 0:
        raise PoleAtZero("f has a pole at w = 0")
    denom = 1.0 + w * x
    hit = np.flatnonzero(denom == 0)
    if hit.size:
        raise PoleAtAtom(float(x[hit[0]]))
    return denom


def f_eval(w: complex, spectrum: PopulationSpectrum, phi: float) -> complex:
    x, p = _arrays(spectrum)
    denom = _check_poles(w, x)
    return -1.0 / w + phi * np.sum(p * x / denom)


def f_prime(w: complex, spectrum: PopulationSpectrum, phi: float) -> complex:
    x, p = _arrays(spectrum)
    denom = _check_poles(w, x)
    return 1.0 / (w * w) - phi * np.sum(p * x * x / (denom * denom))


def _g(c: float, x: np.ndarray, p: np.ndarray, phi: float) -> float:
    # g(c) = -f'(-c); strictly increasing on (0, 1/sigma_1)
    return phi * float(np.sum(p * x * x / (1.0 - c * x) ** 2)) - 1.0 / (c * c)


def find_c(spectrum: PopulationSpectrum, phi: float, *, eps: float = 1e-12,
           width_tol: float = BRACKET_TOL) -> float:
    """Root of f'(-c) = 0 on (0, 1/sigma_1), by bisection."""
    if not phi > 0:
        raise ValueError(f"phi must be positive, got {phi}")
    x, p = _arrays(spectrum)
    lo, hi = eps, (1.0 - eps) / spectrum.sigma_max
    g_lo, g_hi = _g(lo, x, p, phi), _g(hi, x, p, phi)
    if not (g_lo < 0 < g_hi):
        raise BracketFailure(f"g does not change sign on [{lo:g}, {hi:g}]: g = ({g_lo:g}, {g_hi:g})")
    while hi - lo > width_tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _g(mid, x, p, phi) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EdgeParams:
    """Critical point c, right edge lambda_plus and Tracy-Widom scale gamma."""

    c: float
    lambda_plus: float
    gamma: float
    condition_margin: float

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "lambda_plus": self.lambda_plus,
            "gamma": self.gamma,
            "margin": self.condition_margin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EdgeParams:
        return cls(float(d["c"]), float(d["lambda_plus"]), float(d["gamma"]), float(d["margin"]))


def edge_params(spectrum: PopulationSpectrum, phi: float) -> EdgeParams:
    c = find_c(spectrum, phi)
    margin = 1.0 - spectrum.sigma_max * c
    if not margin > 0:
        raise ConditionViolated(f"sigma_1 * c = {1 - margin:g} >= 1")
    x, p = _arrays(spectrum)
    lam = float(np.real(f_eval(-c, spectrum, phi)))
    t = x * c / (1.0 - x * c)
    inv_gamma3 = (1.0 + phi * float(np.sum(p * t ** 3))) / c ** 3
    return EdgeParams(c=c, lambda_plus=lam, gamma=inv_gamma3 ** (-1.0 / 3.0), condition_margin=margin)


@dataclass(frozen=True)
class StieltjesSolution:
    z: ComplexPoint
    m: complex
    residual: float
    iterations: int


def _fixed_point_map(m: complex, z: complex, x: np.ndarray, p: np.ndarray, phi: float) -> complex:
    return 1.0 / (-z + phi * complex(np.sum(p * x / (1.0 + x * m))))


def _residual(m: complex, z: complex, x, p, phi) -> float:
    return abs(-1.0 / m + phi * complex(np.sum(p * x / (1.0 + x * m))) - z)


def _newton(m: complex, z: complex, x, p, phi, steps: int = 60) -> complex | None:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _newton_steps(m, z, x, p, phi, steps)


def _newton_steps(m: complex, z: complex, x, p, phi, steps: int) -> complex | None:
    for _ in range(steps):
        denom = 1.0 + x * m
        F = -1.0 / m + phi * complex(np.sum(p * x / denom)) - z
        dF = 1.0 / (m * m) - phi * complex(np.sum(p * x * x / (denom * denom)))
        if dF == 0 or not np.isfinite(dF):
            return None
        step = F / dF
        m = m - step
        if not np.isfinite(m) or m == 0:
            return None
        if abs(step) <= 1e-15 * max(1.0, abs(m)):
            break
    return m


def _fixed_point(zc: complex, x, p, phi, m: complex, tol: float, max_iter: int,
                 acceptable) -> tuple[complex, float, int]:
    res = _residual(m, zc, x, p, phi)
    beta = 1.0
    it = 0
    while it < max_iter and not (res <= tol and acceptable(m)):
        it += 1
        cand = (1.0 - beta) * m + beta * _fixed_point_map(m, zc, x, p, phi)
        cand_res = _residual(cand, zc, x, p, phi)
        if cand_res > res:
            beta *= 0.5
            if beta < 1e-6:
                break  # stalled; the caller moves further from the axis
        else:
            m, res = cand, cand_res
    return m, res, it


def _polish(m: complex, res: float, zc: complex, x, p, phi, acceptable) -> tuple[complex, float]:
    polished = _newton(m, zc, x, p, phi)
    if polished is not None and acceptable(polished):
        pres = _residual(polished, zc, x, p, phi)
        if pres <= res:
            return polished, pres
    return m, res


def solve_m(z: complex | ComplexPoint, spectrum: PopulationSpectrum, phi: float, *,
            tol: float = RESIDUAL_TOL, max_iter: int = 100_000,
            eta_direct: float = 1.0) -> StieltjesSolution:
    """Solve f(m) = z for the Stieltjes transform m(z).

    Damped fixed-point iteration m <- 1/(-z + phi * sum p x/(1 + x m)) from
    m0 = -1/z; the damping factor halves whenever the residual would grow, and
    the iteration is abandoned as stalled once it falls below 1e-6.
    The result is polished by Newton steps that must stay on the upper
    branch.

    Close to the real axis the map contracts too slowly and the damped
    iteration can stall, so for Im z < ``eta_direct`` the fixed point is
    solved at E + i*eta_direct (moved further up if it stalls there too) and
    z is reached by continuation: eta shrinks geometrically, each stage is a
    Newton solve warm-started from the previous one, and the step is refined
    whenever the branch or residual check fails.

    Real z is accepted only for z < 0 (below the support).
    """
    zp = ComplexPoint.coerce(z)
    if zp.eta == 0 and not zp.E < 0:
        raise ValueError("real z is only supported strictly below the support (z < 0)")
    x, p = _arrays(spectrum)
    upper = zp.eta > 0

    def acceptable(m: complex) -> bool:
        if not np.isfinite(m):
            return False
        return m.imag > 0 if upper else (abs(m.imag) <= 1e-12 and m.real > 0)

    if not upper:
        zc = zp.z
        m, res, it = _fixed_point(zc, x, p, phi, -1.0 / zc, tol, max_iter, acceptable)
        m, res = _polish(m, res, zc, x, p, phi, acceptable)
    else:
        eta = max(zp.eta, eta_direct)
        it = 0
        while True:
            zc = complex(zp.E, eta)
            m, res, used = _fixed_point(zc, x, p, phi, -1.0 / zc, tol, max_iter - it, acceptable)
            it += used
            m, res = _polish(m, res, zc, x, p, phi, acceptable)
            if (res <= tol and acceptable(m)) or eta > 1e4 or it >= max_iter:
                break
            eta *= 8.0
        factor = 0.5
        while eta > zp.eta and it < max_iter and res <= tol:
            target = max(zp.eta, eta * factor)
            zt = complex(zp.E, target)
            cand = _newton(m, zt, x, p, phi)
            it += 1
            cand_res = _residual(cand, zt, x, p, phi) if cand is not None else math.inf
            if cand is not None and acceptable(cand) and cand_res <= tol:
                m, res, eta = cand, cand_res, target
                factor = max(factor * factor, 1e-2)
            elif factor < 0.999:
                factor = math.sqrt(factor)
            else:
                break
        if eta > zp.eta:
            raise NoConvergence(res, it)
    if upper and m.imag < -1e-12:
        raise WrongBranch(f"Im m = {m.imag:g} < 0 for Im z > 0")
    if res > tol:
        raise NoConvergence(res, it)
    if not upper:
        m = complex(m.real, 0.0)
    return StieltjesSolution(z=zp, m=complex(m), residual=res, iterations=it)


def density(x: float, spectrum: PopulationSpectrum, phi: float, eta0: float = 1e-6) -> float:
    """Limiting spectral density at x smoothed at resolution eta0."""
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    if not 0 < eta0 <= 1e-3:
        raise ValueError(f"eta0 must lie in (0, 1e-3], got {eta0}")
    sol = solve_m(ComplexPoint(x, eta0), spectrum, phi)
    return max(sol.m.imag, 0.0) / math.pi


@dataclass(frozen=True)
class ConditionReport:
    sigma_bounds_ok: bool
    margin: float
    phi_ok: bool

    @property
    def ok(self) -> bool:
        return self.sigma_bounds_ok and self.phi_ok


def validate_conditions(spectrum: PopulationSpectrum, phi: float,
                        phi_bounds: tuple[float, float] = DEFAULT_PHI_BOUNDS,
                        warning_band: float = MARGIN_WARNING) -> ConditionReport:
    """Report whether (spectrum, phi) sits safely inside the model assumptions."""
    try:
        margin = 1.0 - spectrum.sigma_max * find_c(spectrum, phi)
    except (BracketFailure, ValueError):
        margin = float("nan")
    lo, hi = phi_bounds
    return ConditionReport(
        sigma_bounds_ok=bool(margin > warning_band),
        margin=margin,
        phi_ok=bool(lo <= phi <= hi),
    )
