"""Robustness certificates and small reference learners (lasso, PCA)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Hashable, List, Mapping, Optional, Sequence

import numpy as np

from .concentration import DomainError


@dataclass(frozen=True)
class RobustnessCertificate:
    ln_K: float
    eps_S: float
    n_hat: Optional[int] = None
    scheme_note: str = ""

    def __post_init__(self):
        if self.eps_S < 0:
            raise DomainError("eps_S must be nonnegative")

    def to_dict(self) -> dict:
        return {"ln_K": self.ln_K, "eps_S": self.eps_S, "n_hat": self.n_hat,
                "scheme_note": self.scheme_note}


@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.intercept):
            raise DomainError("model parameters must be finite")

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.intercept

    def to_json(self) -> str:
        return json.dumps({"weights": self.weights.tolist(), "intercept": self.intercept})

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        d = json.loads(text)
        return cls(np.asarray(d["weights"], dtype=float), float(d.get("intercept", 0.0)))


@dataclass
class ProjectionBasis:
    components: np.ndarray  # (d, m), one unit vector per row
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def captured_energy(self, X) -> float:
        P = np.asarray(X, dtype=float) @ self.components.T
        return float(np.sum(P * P))


# --- certificates -------------------------------------------------------

def lipschitz_certificate(c_S: float, gamma: float, ln_cover: float) -> RobustnessCertificate:
    """A c_S-Lipschitz loss is (N(gamma/2), c_S * gamma)-robust."""
    if c_S < 0 or gamma <= 0:
        raise DomainError("need c_S >= 0 and gamma > 0")
    return RobustnessCertificate(ln_cover, c_S * gamma, scheme_note=f"lipschitz, gamma={gamma}")


def lasso_certificate(y, c: float, nu: float, ln_cover_inf: float) -> RobustnessCertificate:
    """Lasso is (N(nu/2, Z, l_inf), nu * mean(y^2) / c + nu)-robust.

    The cover lives on the joint space Z = X x Y, so ``ln_cover_inf`` must count d+1 axes.
    """
    if nu <= 0 or c <= 0:
        raise DomainError("nu and c must be positive")
    y = np.asarray(y, dtype=float)
    eps = nu * float(np.mean(y * y)) / c + nu
    return RobustnessCertificate(ln_cover_inf, eps, scheme_note=f"lasso l_inf cover, nu={nu}")


def pca_certificate(d: int, gamma: float, B_norm: float, ln_cover_l2: float) -> RobustnessCertificate:
    if gamma <= 0 or B_norm <= 0 or d < 1:
        raise DomainError("need d >= 1, gamma > 0, B_norm > 0")
    return RobustnessCertificate(ln_cover_l2, 2.0 * d * gamma * B_norm,
                                 scheme_note=f"pca l2 cover, gamma={gamma}")


# --- lasso --------------------------------------------------------------

def lasso_objective(w, X, y, c: float) -> float:
    r = np.asarray(y, dtype=float) - np.asarray(X, dtype=float) @ w
    return float(r @ r) / len(r) + c * float(np.abs(w).sum())


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def fit_lasso(X, y, c: float, tol: float = 1e-8, max_iter: int = 100_000) -> LinearModel:
    """Cyclic coordinate descent for (1/n)||y - Xw||^2 + c||w||_1.

    Per coordinate the objective is a_j w^2 - 2 rho_j w + c|w|, minimised by
    soft_threshold(rho_j, c/2) / a_j.
    """
    if c <= 0:
        raise DomainError("c must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 1 or len(y) != n:
        raise DomainError("X and y must have the same positive number of rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("data must be finite")
    col_sq = np.einsum("ij,ij->j", X, X) / n
    w = np.zeros(d)
    r = y.copy()
    for _ in range(max_iter):
        max_change = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            old = w[j]
            rho = X[:, j] @ r / n + col_sq[j] * old
            new = soft_threshold(rho, c / 2.0) / col_sq[j]
            if new != old:
                r -= X[:, j] * (new - old)
                w[j] = new
                max_change = max(max_change, abs(new - old))
        if max_change < tol:
            break
    return LinearModel(w)


def lasso_zeta(weights, lower: float = 0.0, upper: float = 1.0) -> float:
    """Exact sup of |y - w.x| over the box [lower, upper]^(d+1)."""
    w = np.asarray(weights, dtype=float)
    hi = upper - float(np.minimum(w * lower, w * upper).sum())
    lo = lower - float(np.maximum(w * lower, w * upper).sum())
    return max(abs(hi), abs(lo))


# --- PCA ----------------------------------------------------------------

def fit_pca(X, d: int, tol: float = 1e-10, max_iter: int = 10_000) -> ProjectionBasis:
    """Top-d directions of the (uncentred) second-moment matrix X^T X.

    Power iteration per component, deflating the matrix after each one and
    re-orthogonalising against earlier components.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = X.shape[1]
    if d < 1 or d > m:
        raise DomainError(f"need 1 <= d <= m = {m}")
    S = X.T @ X
    scale = max(float(np.abs(S).max()), 1e-300)
    work = S / scale
    comps: List[np.ndarray] = []
    eigs: List[float] = []
    for k in range(d):
        v = _start_vector(m, comps)
        for _ in range(max_iter):
            u = work @ v
            u = _orthogonalize(u, comps)
            norm = np.linalg.norm(u)
            if norm < 1e-14:
                # remaining spectrum is numerically zero; any orthogonal direction will do
                break
            u /= norm
            if np.linalg.norm(u - v) < tol:
                v = u
                break
            v = u
        v = _orthogonalize(v, comps)
        v /= np.linalg.norm(v)
        comps.append(v)
        eigs.append(float(v @ S @ v))
        work = work - (v @ work @ v) * np.outer(v, v)
    return ProjectionBasis(np.array(comps), np.array(eigs))


def _start_vector(m: int, comps) -> np.ndarray:
    # fixed, generic start: avoids being orthogonal to the target by construction
    v = 1.0 + np.arange(m, dtype=float) / (7.0 * m)
    v = _orthogonalize(v, comps)
    if np.linalg.norm(v) < 1e-12:
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            v = _orthogonalize(e, comps)
            if np.linalg.norm(v) > 1e-6:
                break
    return v / np.linalg.norm(v)


def _orthogonalize(v, comps):
    for _ in range(2):
        for c in comps:
            v = v - (c @ v) * c
    return v


# --- empirical checks ---------------------------------------------------

def empirical_robustness_gap(losses_by_cell: Mapping[Hashable, Sequence[float]],
                             alpha_by_cell: Mapping[Hashable, float]) -> float:
    """(1/n) sum_k |I_k| |alpha_k - mean loss in cell k|; robustness bounds this by eps(S)."""
    if set(losses_by_cell) - set(alpha_by_cell):
        raise DomainError("alpha missing for some occupied cells")
    n = sum(len(v) for v in losses_by_cell.values())
    if n == 0:
        return 0.0
    total = 0.0
    for k, losses in losses_by_cell.items():
        losses = np.asarray(losses, dtype=float)
        if len(losses) == 0:
            continue
        total += len(losses) * abs(alpha_by_cell[k] - float(losses.mean()))
    return total / n


def group_by_cell(per_sample_losses, cell_ids) -> dict:
    groups: dict = {}
    for loss, cell in zip(per_sample_losses, cell_ids):
        groups.setdefault(cell, []).append(float(loss))
    return groups


def decomposition_residual(per_sample_losses, cell_ids, alpha_by_cell: Mapping,
                           p_by_cell: Mapping, expected_loss: float) -> float:
    """|LHS - RHS| of the exact split of E[loss] - mean loss into a
    multinomial-deviation part and a within-cell part."""
    losses = np.asarray(per_sample_losses, dtype=float)
    cell_ids = list(cell_ids)
    if len(cell_ids) != len(losses):
        raise DomainError("one cell id per sample is required")
    n = len(losses)
    if n == 0:
        raise DomainError("empty sample")
    groups = group_by_cell(losses, cell_ids)
    if set(groups) - set(p_by_cell) or set(p_by_cell) != set(alpha_by_cell):
        raise DomainError("cells inconsistent between samples, alphas and probabilities")
    lhs = expected_loss - float(losses.mean())
    deviation = 0.0
    within = 0.0
    for k, p_k in p_by_cell.items():
        cnt = len(groups.get(k, ()))
        deviation += alpha_by_cell[k] * (p_k - cnt / n)
        if cnt:
            within += cnt * (alpha_by_cell[k] - float(np.mean(groups[k])))
    return abs(lhs - (deviation + within / n))
