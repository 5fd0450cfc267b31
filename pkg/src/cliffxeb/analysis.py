"""Decay fitting, mixing rates and ideal XEB moment formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.optimize import curve_fit


class FitInfeasibleError(ValueError):
    """Too few usable points to fit a decay."""


class RateIndeterminateError(ValueError):
    """The series carries no resolvable distance from its fixed point."""


class InvariantViolation(AssertionError):
    """A value that must hold exactly for stabilizer states does not."""


class _Point(NamedTuple):
    m: int
    q_hat: float
    stderr: float


def _series(points):
    m = np.array([p.m for p in points], dtype=float)
    q = np.array([p.q_hat for p in points], dtype=float)
    se = np.array([p.stderr for p in points], dtype=float)
    return m, q, se


def _in_window(points, window):
    if window is None:
        return list(points)
    lo, hi = window
    return [p for p in points if lo <= p.m <= hi]


@dataclass
class DecayFit:
    p: float
    B: float
    window: tuple[int, int]
    residual_norm: float
    points_used: int
    excluded: list[int] = field(default_factory=list)
    p_stderr: float = float("nan")
    B_stderr: float = float("nan")
    weighted: bool = True
    constrained: bool = False  # the unconstrained slope was positive; p pinned to 1

    def as_dict(self) -> dict:
        return {
            "p": self.p, "B": self.B, "p_stderr": self.p_stderr, "B_stderr": self.B_stderr,
            "window": list(self.window), "residual_norm": self.residual_norm,
            "points_used": self.points_used, "excluded_m": self.excluded, "weighted": self.weighted,
            "constrained": self.constrained,
        }


def fit_exponential(points, window=None) -> DecayFit:
    """Fit ``q(m) = B p^m`` by weighted least squares on ``ln q``.

    The weight of a point is ``(q / stderr)^2``, the first-order propagation of
    its error bar into ``ln q``.  If any used point has zero stderr the fit is
    unweighted.  Points with ``q <= 0`` cannot be logged and are excluded.
    """
    sel = _in_window(points, window)
    excluded = [p.m for p in sel if not p.q_hat > 0]
    used = [p for p in sel if p.q_hat > 0]
    if len(used) < 3:
        raise FitInfeasibleError(
            f"{len(used)} positive points in window {window}; at least 3 are needed")
    m, q, se = _series(used)
    y = np.log(q)
    weighted = bool(np.all(se > 0))
    w = (q / se) ** 2 if weighted else np.ones_like(q)
    X = np.column_stack([np.ones_like(m), m])
    sw = np.sqrt(w)
    coef, _, _, _ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ coef
    cov = np.linalg.inv(X.T @ (X * w[:, None]))
    if not weighted:
        dof = max(len(used) - 2, 1)
        cov = cov * float(resid @ resid) / dof
    intercept, slope = coef
    constrained = bool(slope > 0.0)
    if constrained:
        # a rising series: the least-squares optimum over slope <= 0 sits at slope 0
        slope = 0.0
        intercept = float(np.sum(w * y) / np.sum(w))
        resid = y - intercept
    p = math.exp(slope)
    B = math.exp(intercept)
    win = (int(m.min()), int(m.max())) if window is None else (int(window[0]), int(window[1]))
    return DecayFit(p, B, win, float(np.sqrt(np.sum(w * resid**2))), len(used), excluded,
                    p * math.sqrt(cov[1, 1]), B * math.sqrt(cov[0, 0]), weighted, constrained)


@dataclass
class FreeOffsetFit:
    A: float
    A_stderr: float
    B: float
    p: float
    p_stderr: float


def fit_with_offset(points, window=None, initial: DecayFit | None = None) -> FreeOffsetFit:
    """Diagnostic fit of ``q(m) = A + B p^m`` with the offset left free."""
    used = _in_window(points, window)
    if len(used) < 4:
        raise FitInfeasibleError("the free-offset fit needs at least 4 points")
    m, q, se = _series(used)
    if initial is None:
        initial = fit_exponential(used)
    sigma = se if np.all(se > 0) else None
    popt, pcov = curve_fit(lambda mm, A, B, p: A + B * p**mm, m, q,
                           p0=(0.0, initial.B, initial.p), sigma=sigma,
                           absolute_sigma=sigma is not None, maxfev=20000)
    err = np.sqrt(np.diag(pcov))
    return FreeOffsetFit(float(popt[0]), float(err[0]), float(popt[1]), float(popt[2]), float(err[2]))


def ideal_fixed_point(n: int) -> float:
    """``(D - 1) / (D + 1)`` with ``D = 2^n``, evaluated without forming ``D``."""
    t = math.ldexp(1.0, -n)
    return 1.0 - 2.0 * t / (1.0 + t)


@dataclass
class MixRate:
    r: float
    c: float
    window: tuple[int, int]
    r_stderr: float
    points_used: int


def mixing_rate(ideal_points, n: int, window=None, target: float | None = None,
                floor_sigmas: float = 2.0) -> MixRate:
    """Fit ``|q(m) - target| = c r^m`` over a noiseless series.

    ``target`` defaults to the ideal fixed point for ``n`` qubits.  Points
    whose distance from the target is within ``floor_sigmas`` error bars are
    treated as noise and dropped before the fit.
    """
    target = ideal_fixed_point(n) if target is None else target
    sel = _in_window(ideal_points, window)
    resolved = []
    for p in sel:
        dist = abs(p.q_hat - target)
        if dist > floor_sigmas * p.stderr and dist > 0:
            resolved.append(_Point(p.m, dist, p.stderr))
    if len(resolved) < 3:
        raise RateIndeterminateError(
            f"only {len(resolved)} points resolve a distance from {target:.6g}")
    fit = fit_exponential(resolved)
    if not 0 < fit.p < 1:
        raise RateIndeterminateError(f"fitted rate {fit.p:.6g} is not a contraction")
    return MixRate(fit.p, fit.B, fit.window, fit.p_stderr, fit.points_used)


def suggest_decay_window(ideal_points, n: int, factor: float = 5.0):
    """First ``m`` at which the noiseless series sits within ``factor``
    error bars of its fixed point, paired with the last ``m``; ``None`` if
    it never gets there."""
    target = ideal_fixed_point(n)
    ms = [p.m for p in ideal_points]
    for p in ideal_points:
        if abs(p.q_hat - target) <= factor * p.stderr:
            return (p.m, max(ms))
    return None


@dataclass
class DemReport:
    p_fit: float
    p_dem: float
    ratio: float
    r: float
    valid: bool
    message: str

    def as_dict(self) -> dict:
        return {"p_fit": self.p_fit, "p_dem": self.p_dem, "ratio": self.ratio,
                "mixing_rate": self.r, "valid": self.valid, "message": self.message}


def compare_to_digital_model(fit: DecayFit, p_dem: float, mix: MixRate) -> DemReport:
    valid = p_dem > mix.r
    if valid:
        msg = "digital-error-model rate exceeds the mixing rate; the fitted decay tracks fidelity"
    else:
        msg = ("decay is mixing-dominated: the digital-error-model rate is at or below the "
               "mixing rate, so the fitted p must not be read as a fidelity")
    return DemReport(fit.p, p_dem, fit.p / p_dem if p_dem else float("inf"), mix.r, valid, msg)


def relative_rate_error(p_fit: float, p_dem: float) -> float:
    """``|p_fit - p_dem| / (1 - p_dem)``: error relative to the per-cycle infidelity."""
    return abs(p_fit - p_dem) / (1.0 - p_dem)


def haar_moments(n: int) -> tuple[float, float]:
    """Mean and variance of ``beta = D sum_x |<x|psi>|^4`` for Haar-random ``psi``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    D = Fraction(2) ** n
    mean = 2 * D / (D + 1)
    var = 4 * D**2 * (D - 1) / ((D + 1) ** 2 * (D + 2) * (D + 3))
    return float(mean), float(var)


def is_power_of_two_beta(beta, n: int) -> bool:
    b = Fraction(beta)
    if b.denominator != 1 or b.numerator <= 0:
        return False
    v = b.numerator
    return v & (v - 1) == 0 and v.bit_length() - 1 <= n


def clifford_beta_stats(samples, n: int) -> tuple[float, float, bool]:
    """Sample mean and variance of per-circuit ``beta`` values.

    Raises :class:`InvariantViolation` unless every value is exactly
    ``2^(n-k)`` for an integer ``0 <= k <= n``, which holds for any
    stabilizer state.
    """
    bad = [b for b in samples if not is_power_of_two_beta(b, n)]
    if bad:
        raise InvariantViolation(f"{len(bad)} beta values are not powers of two <= 2^{n}: {bad[:5]}")
    vals = [Fraction(b) for b in samples]
    c = len(vals)
    mean = sum(vals, Fraction(0)) / c
    var = sum(((v - mean) ** 2 for v in vals), Fraction(0)) / (c - 1) if c > 1 else Fraction(0)
    return float(mean), float(var), True
