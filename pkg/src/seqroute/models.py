"""Linear latency / output-length models and their least-squares fitting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDesign, AllFiltered


@dataclass(frozen=True)
class DeviceProfile:
    """Per-device linear execution-time plane: t = alpha_n*n + alpha_m*m + beta (ms)."""

    alpha_n: float
    alpha_m: float
    beta: float
    device_id: str = ""

    def __post_init__(self):
        if self.alpha_n < 0 or self.alpha_m < 0 or self.beta < 0:
            raise ValueError("DeviceProfile coefficients must be non-negative")


@dataclass(frozen=True)
class LengthModel:
    """Linear input-to-output length mapping m_hat = gamma*n + delta."""

    gamma: float
    delta: float
    language_pair: str = ""

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("LengthModel slope must be positive")


@dataclass(frozen=True)
class LatencySample:
    n: int
    m: int
    t: float  # ms

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("sample lengths must be >= 1")
        if self.t <= 0:
            raise ValueError("measured time must be > 0")


@dataclass(frozen=True)
class LengthPair:
    n: int
    m_real: int

    def __post_init__(self):
        if self.n < 1 or self.m_real < 1:
            raise ValueError("pair lengths must be >= 1")


@dataclass(frozen=True)
class FitReport:
    r2: float
    mse: float
    sample_count: int


@dataclass(frozen=True)
class FilterRules:
    """Parallel-corpus sanity filters: length bounds plus a length-ratio cap."""

    min_len: int = 1
    max_len: int = 100
    max_ratio: float = 2.0

    def __post_init__(self):
        if self.min_len < 1:
            raise ValueError("min_len must be >= 1")
        if self.max_len <= self.min_len:
            raise ValueError("max_len must exceed min_len")
        if self.max_ratio <= 1:
            raise ValueError("max_ratio must exceed 1")


def exec_time(profile: DeviceProfile, n: float, m: float) -> float:
    """Predicted execution time in ms; fractional m is allowed."""
    return profile.alpha_n * n + profile.alpha_m * m + profile.beta


def predict_len(lm: LengthModel, n: float) -> float:
    """Predicted output length, clamped below at one token."""
    return max(1.0, lm.gamma * n + lm.delta)


def fit_scores(predicted, actual) -> FitReport:
    pred = np.asarray(predicted, dtype=float)
    act = np.asarray(actual, dtype=float)
    if pred.shape != act.shape or pred.size == 0:
        raise DegenerateDesign("predicted/actual must be equal-length and non-empty")
    ss_res = float(np.sum((act - pred) ** 2))
    ss_tot = float(np.sum((act - act.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateDesign("zero-variance actuals: r2 undefined")
    mse = ss_res / pred.size
    return FitReport(r2=1.0 - ss_res / ss_tot, mse=mse, sample_count=pred.size)


def _nonneg_lstsq(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """OLS with negative coefficients clamped to zero and the rest refitted."""
    ncols = X.shape[1]
    active = list(range(ncols))
    coefs = np.zeros(ncols)
    while active:
        sol, *_ = np.linalg.lstsq(X[:, active], y, rcond=None)
        if np.all(sol >= 0):
            coefs[:] = 0.0
            coefs[active] = sol
            return coefs
        # drop the most negative coefficient and refit the remainder
        drop = active[int(np.argmin(sol))]
        active.remove(drop)
    return np.zeros(ncols)


def fit_latency(samples: list[LatencySample]) -> tuple[DeviceProfile, FitReport]:
    """Fit the execution-time plane t ~ alpha_n*n + alpha_m*m + beta by OLS."""
    if len(samples) < 3:
        raise DegenerateDesign("need at least 3 latency samples")
    n = np.array([s.n for s in samples], dtype=float)
    m = np.array([s.m for s in samples], dtype=float)
    t = np.array([s.t for s in samples], dtype=float)
    X = np.column_stack([n, m, np.ones_like(n)])
    if np.linalg.matrix_rank(X) < 3:
        raise DegenerateDesign("collinear design: (n, m, 1) columns are rank-deficient")
    coefs = _nonneg_lstsq(X, t)
    profile = DeviceProfile(alpha_n=float(coefs[0]), alpha_m=float(coefs[1]),
                            beta=float(coefs[2]))
    report = fit_scores(X @ coefs, t)
    return profile, report


def prefilter(pairs: list[LengthPair], rules: FilterRules) -> list[LengthPair]:
    """Drop pairs outside the length bounds or with too-extreme length ratio."""
    kept = []
    for p in pairs:
        if not (rules.min_len <= p.n <= rules.max_len):
            continue
        if not (rules.min_len <= p.m_real <= rules.max_len):
            continue
        if max(p.n, p.m_real) / min(p.n, p.m_real) > rules.max_ratio:
            continue
        kept.append(p)
    return kept


def fit_length(pairs: list[LengthPair], rules: FilterRules,
               language_pair: str = "") -> tuple[LengthModel, FitReport]:
    """Prefilter, then fit m_real ~ gamma*n + delta by OLS."""
    kept = prefilter(pairs, rules)
    if not kept:
        raise AllFiltered("prefilter removed every pair")
    n = np.array([p.n for p in kept], dtype=float)
    m = np.array([p.m_real for p in kept], dtype=float)
    if len(kept) < 2 or np.all(n == n[0]):
        raise DegenerateDesign("need >= 2 filtered pairs with distinct n values")
    X = np.column_stack([n, np.ones_like(n)])
    sol, *_ = np.linalg.lstsq(X, m, rcond=None)
    lm = LengthModel(gamma=float(sol[0]), delta=float(sol[1]),
                     language_pair=language_pair)
    report = fit_scores(X @ sol, m)
    return lm, report
