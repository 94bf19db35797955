"""Generalization bound evaluators returning term-by-term reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from .concentration import (
    SQRT2,
    DomainError,
    _check_delta,
    _check_n,
    bhc_rhs,
    log_two_k_over_delta,
)
from .partition import CellId, OccupancyProfile

CSV_COLUMNS = ("bound_name", "empirical_loss", "robustness_term", "sqrt_term",
               "linear_term", "extra", "total")


class PreconditionError(ValueError):
    pass


@dataclass
class BoundReport:
    name: str
    empirical_loss: float
    robustness_term: float
    concentration_sqrt_term: float
    concentration_linear_term: float
    extra_terms: Dict[str, float] = field(default_factory=dict)
    overflow: bool = False

    @property
    def concentration(self) -> float:
        return self.concentration_sqrt_term + self.concentration_linear_term

    @property
    def extra(self) -> float:
        return sum(self.extra_terms.values())

    @property
    def total(self) -> float:
        return (self.empirical_loss + self.robustness_term + self.concentration_sqrt_term
                + self.concentration_linear_term + self.extra)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "empirical_loss": self.empirical_loss,
            "robustness_term": self.robustness_term,
            "concentration_sqrt_term": self.concentration_sqrt_term,
            "concentration_linear_term": self.concentration_linear_term,
            "extra_terms": dict(self.extra_terms),
            "overflow": self.overflow,
            "total": self.total,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> list:
        return [self.name, _fmt(self.empirical_loss), _fmt(self.robustness_term),
                _fmt(self.concentration_sqrt_term), _fmt(self.concentration_linear_term),
                _fmt(self.extra), _fmt(self.total)]


def _fmt(x: float) -> str:
    return repr(float(x))


def reports_to_csv(reports: Sequence[BoundReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


@dataclass
class LossProfile:
    """Losses of the returned hypothesis plus the loss-range quantities the bounds need.

    ``alpha_occupied`` is either a mapping CellId -> conditional mean loss or a
    sequence aligned with ``OccupancyProfile.cells``.
    """

    per_sample_losses: np.ndarray
    zeta: float
    B: Optional[float] = None
    alpha_occupied: Optional[Union[Mapping[CellId, float], Sequence[float]]] = None
    alpha_unoccupied_max: Optional[float] = None
    zeta_kind: str = "sup"  # or "conditional": max_k of the per-cell mean loss

    def __post_init__(self):
        self.per_sample_losses = np.asarray(self.per_sample_losses, dtype=float)
        if np.any(self.per_sample_losses < 0):
            raise DomainError("losses must be nonnegative")
        if self.zeta_kind not in ("sup", "conditional"):
            raise DomainError(f"unknown zeta_kind {self.zeta_kind!r}")
        if (self.zeta_kind == "sup" and len(self.per_sample_losses)
                and self.zeta < self.per_sample_losses.max() - 1e-12):
            raise DomainError("zeta is below the largest observed loss")
        if self.B is not None and self.B < self.zeta - 1e-12:
            raise DomainError("B must dominate zeta")

    @property
    def n(self) -> int:
        return len(self.per_sample_losses)

    @property
    def mean_loss(self) -> float:
        return float(self.per_sample_losses.mean())

    def alphas_for(self, occupancy: OccupancyProfile) -> np.ndarray:
        if self.alpha_occupied is None:
            raise PreconditionError("per-cell conditional losses (alpha_occupied) are required")
        cells = occupancy.cells
        if isinstance(self.alpha_occupied, Mapping):
            try:
                alphas = np.array([self.alpha_occupied[c] for c in cells], dtype=float)
            except KeyError as exc:
                raise PreconditionError(f"no alpha for occupied cell {exc.args[0]}") from None
        else:
            alphas = np.asarray(self.alpha_occupied, dtype=float)
            if alphas.shape != (len(cells),):
                raise PreconditionError("alpha_occupied must have one entry per occupied cell")
        if np.any(alphas < 0) or np.any(alphas > self.zeta + 1e-12):
            raise DomainError("alphas must lie in [0, zeta]")
        return alphas

    @property
    def alpha_tc(self) -> float:
        return self.zeta if self.alpha_unoccupied_max is None else float(self.alpha_unoccupied_max)


@dataclass(frozen=True)
class DecaySpec:
    """p_k <= C exp(-(k/beta)^alpha) for the sorted cell probabilities."""

    alpha: float
    beta: float
    C: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise DomainError("alpha and beta must be positive")
        if self.C < 0:
            raise DomainError("C must be nonnegative")


class DecayBound(NamedTuple):
    value: float
    hypothesis_holds: bool


def _check_sizes(loss: LossProfile, occupancy: OccupancyProfile, n: int) -> None:
    _check_n(n)
    if occupancy.n != n or loss.n != n:
        raise PreconditionError(
            f"sample sizes disagree: n={n}, occupancy.n={occupancy.n}, losses={loss.n}")


def _thm1_terms(zeta: float, t_size: int, ln_K: float, delta: float, n: int):
    L = log_two_k_over_delta(ln_K, delta)
    return (zeta * (SQRT2 + 1.0) * math.sqrt(t_size * L / n),
            zeta * 2.0 * t_size * L / n)


def _thm2_terms(alphas: np.ndarray, alpha_tc: float, counts: np.ndarray,
                ln_K: float, delta: float, n: int):
    L = log_two_k_over_delta(ln_K, delta)
    q1 = float((alpha_tc + SQRT2 * alphas) @ np.sqrt(counts / n))
    q2 = alpha_tc * len(counts) + float(alphas.sum())
    return q1 * math.sqrt(L / n), 2.0 * q2 * L / n


def proposition1_bound(loss: LossProfile, eps_S: float, ln_K: float, delta: float, n: int) -> BoundReport:
    """Classical robustness bound with the hypothesis-space-wide loss bound B."""
    _check_delta(delta)
    _check_n(n)
    if loss.B is None:
        raise PreconditionError("proposition1_bound needs the uniform loss bound B")
    radius = bhc_rhs(ln_K, delta, n)
    overflow = math.isinf(radius)
    sqrt_term = math.inf if overflow else loss.B * radius
    return BoundReport("prop1", loss.mean_loss, eps_S, sqrt_term, 0.0, overflow=overflow)


def theorem1_bound(loss: LossProfile, eps_S: float, occupancy: OccupancyProfile,
                   ln_K: float, delta: float, n: int) -> BoundReport:
    _check_delta(delta)
    _check_sizes(loss, occupancy, n)
    s, lin = _thm1_terms(loss.zeta, occupancy.t_size, ln_K, delta, n)
    return BoundReport("thm1", loss.mean_loss, eps_S, s, lin)


def theorem2_bound(loss: LossProfile, eps_S: float, occupancy: OccupancyProfile,
                   ln_K: float, delta: float, n: int) -> BoundReport:
    _check_delta(delta)
    _check_sizes(loss, occupancy, n)
    alphas = loss.alphas_for(occupancy)
    s, lin = _thm2_terms(alphas, loss.alpha_tc, occupancy.count_vector().astype(float),
                         ln_K, delta, n)
    return BoundReport("thm2", loss.mean_loss, eps_S, s, lin)


def _pseudo_terms(eps_S: float, n_hat: int, zeta_hat: float, n: int):
    if not (1 <= n_hat <= n):
        raise DomainError(f"n_hat must lie in [1, n], got {n_hat}")
    if zeta_hat < 0:
        raise DomainError("zeta_hat must be nonnegative")
    return n_hat / n * eps_S, (n - n_hat) / n * zeta_hat


def theorem5_bound(loss: LossProfile, eps_S: float, n_hat: int, zeta_hat: float,
                   occupancy: OccupancyProfile, ln_K: float, delta: float, n: int) -> BoundReport:
    """Pseudo-robust analogue of theorem1_bound.

    ``loss.zeta`` should be the largest per-cell conditional mean loss here.
    """
    _check_delta(delta)
    _check_sizes(loss, occupancy, n)
    rob, residual = _pseudo_terms(eps_S, n_hat, zeta_hat, n)
    s, lin = _thm1_terms(loss.zeta, occupancy.t_size, ln_K, delta, n)
    return BoundReport("thm5", loss.mean_loss, rob, s, lin,
                       extra_terms={"pseudo_residual": residual})


def theorem6_bound(loss: LossProfile, eps_S: float, n_hat: int, zeta_hat: float,
                   occupancy: OccupancyProfile, ln_K: float, delta: float, n: int) -> BoundReport:
    _check_delta(delta)
    _check_sizes(loss, occupancy, n)
    rob, residual = _pseudo_terms(eps_S, n_hat, zeta_hat, n)
    alphas = loss.alphas_for(occupancy)
    s, lin = _thm2_terms(alphas, loss.alpha_tc, occupancy.count_vector().astype(float),
                         ln_K, delta, n)
    return BoundReport("thm6", loss.mean_loss, rob, s, lin,
                       extra_terms={"pseudo_residual": residual})


def uniform_stability_bound(mean_loss: float, B: float, lam: float, delta: float, n: int) -> BoundReport:
    """Uniform-stability baseline for regularized least squares, beta = 2B^2/(lam n)."""
    _check_delta(delta)
    _check_n(n)
    if B <= 0 or lam <= 0:
        raise DomainError("B and lambda must be positive")
    beta = 2.0 * B * B / (lam * n)
    sqrt_term = (4.0 * n * beta + math.sqrt(B / lam)) * math.sqrt(math.log(1.0 / delta) / (2.0 * n))
    return BoundReport("stability", mean_loss, 0.0, sqrt_term, 0.0,
                       extra_terms={"two_beta": 2.0 * beta})


def proposition3_ts_bound(spec: DecaySpec, n: int, delta: float) -> DecayBound:
    """High-probability bound on |T_S| when the sorted cell masses decay as C exp(-(k/beta)^alpha)."""
    _check_n(n)
    _check_delta(delta)
    ln_n = math.log(n)
    holds = ln_n >= max(1.0, 2.0 / spec.alpha)
    core = spec.beta * ln_n ** (1.0 / spec.alpha) if ln_n > 0 else 0.0
    if spec.alpha >= 1.0:
        value = core + spec.C * (math.e - 1.0) * spec.beta / spec.alpha + math.log(1.0 / delta)
    else:
        value = (1.0 + 2.0 * spec.C * (math.e - 1.0)) * core + math.log(1.0 / delta)
    return DecayBound(value, holds)
