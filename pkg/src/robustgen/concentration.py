"""Closed-form multinomial concentration inequalities.

Every function returns the right-hand side of a 1 - delta confidence
statement (or a tail probability bound) for a multinomial count vector
``X ~ Mult(n, p)`` over ``K`` categories.  Anything that depends on ``K``
is computed from ``ln_K`` so that covering numbers such as ``10**784``
never have to be materialised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

LN2 = math.log(2.0)
SQRT2 = math.sqrt(2.0)


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a bound."""


def _check_delta(delta: float) -> None:
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")


def _check_n(n) -> None:
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")


def log_two_k_over_delta(ln_K: float, delta: float) -> float:
    """ln(2K/delta) assembled in log space."""
    return LN2 + ln_K - math.log(delta)


@dataclass(frozen=True)
class MultinomialSpec:
    n: int
    ln_K: float
    p: Optional[np.ndarray] = None

    def __post_init__(self):
        _check_n(self.n)
        if self.ln_K < 0:
            raise DomainError("ln_K must be nonnegative")
        if self.p is not None:
            p = np.asarray(self.p, dtype=float)
            if np.any(p < 0) or np.any(p > 1):
                raise DomainError("probabilities must lie in [0, 1]")
            if abs(p.sum() - 1.0) > 1e-12:
                raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
            if len(p) != round(math.exp(self.ln_K)):
                raise DomainError("len(p) does not match exp(ln_K)")
            object.__setattr__(self, "p", p)

    @classmethod
    def from_probs(cls, n: int, p: Sequence[float]) -> "MultinomialSpec":
        p = np.asarray(p, dtype=float)
        return cls(n=n, ln_K=math.log(len(p)), p=p)

    @property
    def K(self) -> int:
        return round(math.exp(self.ln_K))


@dataclass(frozen=True)
class WeightProfile:
    """Nonnegative weights plus their maxima over occupied / empty cells."""

    a: np.ndarray
    a_T: float
    a_Tc: float

    @classmethod
    def from_occupancy(cls, a: Sequence[float], occupied: Sequence[bool]) -> "WeightProfile":
        a = np.asarray(a, dtype=float)
        occ = np.asarray(occupied, dtype=bool)
        if np.any(a < 0):
            raise DomainError("weights must be nonnegative")
        a_T = float(a[occ].max()) if occ.any() else 0.0
        a_Tc = float(a[~occ].max()) if (~occ).any() else 0.0
        return cls(a=a, a_T=a_T, a_Tc=a_Tc)


@dataclass(frozen=True)
class TailQuery:
    spec: MultinomialSpec
    weights: WeightProfile
    delta: Optional[float] = None
    M: Optional[float] = None

    def __post_init__(self):
        if (self.delta is None) == (self.M is None):
            raise DomainError("exactly one of delta and M must be set")
        if self.delta is not None:
            _check_delta(self.delta)
        if self.M is not None and self.M <= 0:
            raise DomainError("M must be positive")


def bhc_rhs(ln_K: float, delta: float, n: int) -> float:
    """Bretagnolle-Huber-Carol l1 deviation radius sqrt((2K ln2 + 2 ln(1/delta))/n).

    Returns ``inf`` when K = exp(ln_K) is not representable.
    """
    _check_delta(delta)
    _check_n(n)
    try:
        K = math.exp(ln_K)
    except OverflowError:
        return math.inf
    return math.sqrt((2.0 * K * LN2 + 2.0 * math.log(1.0 / delta)) / n)


def _tail_inputs(weights, p):
    a = np.asarray(weights, dtype=float)
    p = np.asarray(p, dtype=float)
    if a.shape != p.shape:
        raise DomainError("weights and p must have the same length")
    if np.any(a < 0):
        raise DomainError("weights must be nonnegative")
    if float(a @ p) == 0.0:
        raise DomainError("sum_i a_i p_i must be nonzero")
    beta = 2.0 * float((a * a) @ p)
    return a, beta


def lemma3_tail_bound(weights, p, n: int, M: float) -> float:
    """Upper tail: P(sum a_i (X_i/n - p_i) > M) <= exp(-(nM/2a) min(1, aM/beta))."""
    _check_n(n)
    if M <= 0:
        raise DomainError("M must be positive")
    a, beta = _tail_inputs(weights, p)
    a_max = float(a.max())
    # beta can underflow to 0 for subnormal weights; the min then saturates at 1
    ratio = a_max * M / beta if beta > 0 else math.inf
    return math.exp(-(n * M / (2.0 * a_max)) * min(1.0, ratio))


def lemma4_tail_bound(weights, p, n: int, M: float) -> float:
    """Lower tail: P(sum a_i (p_i - X_i/n) > M) <= exp(-n M^2 / beta)."""
    _check_n(n)
    if M <= 0:
        raise DomainError("M must be positive")
    _, beta = _tail_inputs(weights, p)
    if beta == 0.0:
        return 0.0
    return math.exp(-n * M * M / beta)


def lemma5_lower_envelope(p_i, X_i, n: int, K_count: int, delta: float):
    """Simultaneous lower confidence envelope for p_i given the count X_i.

    Needs the true p_i to pick the case, so it is only meaningful in
    simulation.  Vectorises over numpy arrays.
    """
    _check_delta(delta)
    _check_n(n)
    L = math.log(K_count) - math.log(delta)
    p_i = np.asarray(p_i, dtype=float)
    freq = np.asarray(X_i, dtype=float) / n
    wide = freq - np.sqrt(p_i * L / n)
    narrow = freq - 2.0 * L / n
    out = np.where(p_i > L / (4.0 * n), wide, narrow)
    return float(out) if out.ndim == 0 else out


def lemma5_repaired_lower_envelope(p_i, X_i, n: int, K_count: int, delta: float):
    """Lower envelope with the constants the upper-tail bound actually supports.

    The upper tail gives P(X_i/n - p_i > M) <= exp(-n M^2 / (4 p_i)) only for
    M <= 2 p_i, so reaching delta/K needs M = 2 sqrt(p_i L / n), which in turn
    needs p_i >= L/n.  Below that the linear radius 2L/n is used.
    """
    _check_delta(delta)
    _check_n(n)
    L = math.log(K_count) - math.log(delta)
    p_i = np.asarray(p_i, dtype=float)
    freq = np.asarray(X_i, dtype=float) / n
    out = np.where(p_i > L / n, freq - 2.0 * np.sqrt(p_i * L / n), freq - 2.0 * L / n)
    return float(out) if out.ndim == 0 else out


def lemma6_upper_envelope(p_i, n: int, K_count: int, delta: float):
    """Deviation radius sqrt(2 p_i ln(K/delta)/n) for p_i - X_i/n."""
    _check_delta(delta)
    _check_n(n)
    L = math.log(K_count) - math.log(delta)
    out = np.sqrt(2.0 * np.asarray(p_i, dtype=float) * L / n)
    return float(out) if out.ndim == 0 else out


def lemma_multinomial_new_rhs(weights, p, K_count: int, delta: float, n: int) -> float:
    """(sum a_i sqrt(p_i)) * sqrt(2 ln(K/delta)/n)."""
    _check_delta(delta)
    _check_n(n)
    a = np.asarray(weights, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(a < 0):
        raise DomainError("weights must be nonnegative")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise DomainError("p must be a probability vector")
    L = math.log(K_count) - math.log(delta)
    return float(a @ np.sqrt(p)) * math.sqrt(2.0 * L / n)


def theorem4_rhs(a_T: float, a_Tc: float, t_size: int, ln_K: float, delta: float, n: int) -> float:
    """Data-dependent bound on sum a_i(X)(p_i - X_i/n) using only |T_S| and ln K."""
    _check_delta(delta)
    _check_n(n)
    if t_size < 0:
        raise DomainError("t_size must be nonnegative")
    if a_T < 0 or a_Tc < 0:
        raise DomainError("weights must be nonnegative")
    if t_size == 0:
        return 0.0
    L = log_two_k_over_delta(ln_K, delta)
    return (SQRT2 * a_T + a_Tc) * math.sqrt(t_size * L / n) + a_Tc * 2.0 * t_size * L / n


def lemma8_rhs(a, a_Tc: float, counts, ln_K: float, delta: float, n: int) -> float:
    """Tighter data-dependent bound using per-cell counts of occupied cells.

    ``a`` and ``counts`` are aligned over the occupied cells.
    """
    _check_delta(delta)
    _check_n(n)
    a = np.asarray(a, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if a.shape != counts.shape:
        raise DomainError("a and counts must be aligned over occupied cells")
    if np.any(counts < 1):
        raise DomainError("occupied cells need count >= 1")
    if counts.sum() > n:
        raise DomainError("counts exceed n")
    if np.any(a < 0) or a_Tc < 0:
        raise DomainError("weights must be nonnegative")
    L = log_two_k_over_delta(ln_K, delta)
    sqrt_part = float((a_Tc + SQRT2 * a) @ np.sqrt(counts / n))
    linear_part = a_Tc * len(counts) + float(a.sum())
    return math.sqrt(L / n) * sqrt_part + 2.0 * L / n * linear_part
