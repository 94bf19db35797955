"""Two worked instances where every bound ingredient is known exactly.

* Regularized least squares in 1-d with truncated Gaussian noise: the
  returned slope has an analytic risk, and the robustness constant is
  computed cell by cell from the box corners.
* Lasso on data lying near a low-dimensional slice of [-1,1]^d, where the
  number of occupied cells is tiny compared with the cover size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy import stats

from .bounds import BoundReport, LossProfile, proposition1_bound, theorem1_bound, uniform_stability_bound
from .partition import CellId, OccupancyProfile, box_grid_bins, ln_box_grid_cardinality
from .robustness import fit_lasso, lasso_certificate, lasso_zeta

# --- regularized least squares ---------------------------------------------


@dataclass
class RLSConfig:
    n: int = 1000
    sigma: float = 0.1   # noise scale
    B: float = 2.0       # noise truncation; |y - x| < B
    lam: float = 0.01
    nu: float = 0.1      # cell side
    delta: float = 0.05


def rls_sample(cfg: RLSConfig, rng: np.random.Generator):
    x = rng.uniform(0.0, 1.0, cfg.n)
    e = cfg.sigma * rng.standard_normal(cfg.n)
    y = x + np.where(np.abs(e) < cfg.B, e, 0.0)
    return x, y


def fit_rls(x, y, lam: float) -> float:
    """argmin_w (1/n) sum (w x - y)^2 + lam w^2."""
    x = np.asarray(x, dtype=float)
    return float(x @ y / (x @ x + len(x) * lam))


def rls_zeta(w: float, B: float) -> float:
    # on the support, w x - y = (w - 1) x - e' with x in [0,1], |e'| < B
    return (abs(1.0 - w) + B) ** 2


def rls_true_risk(w: float, sigma: float, B: float) -> float:
    """E (w x - y)^2 for x ~ U[0,1] and noise N(0, sigma^2) zeroed outside (-B, B)."""
    b = B / sigma
    trunc_var = sigma**2 * ((2.0 * stats.norm.cdf(b) - 1.0) - 2.0 * b * stats.norm.pdf(b))
    return (w - 1.0) ** 2 / 3.0 + trunc_var


def rls_box(cfg: RLSConfig):
    return (0.0, -cfg.B), (1.0, 1.0 + cfg.B)


def _cell_loss_range(w: float, bins: np.ndarray, lower, side: float):
    """Min and max of (w x - y)^2 over each box cell given its 1-based bin indices."""
    x_lo = lower[0] + (bins[:, 0] - 1) * side
    y_lo = lower[1] + (bins[:, 1] - 1) * side
    x_hi, y_hi = x_lo + side, y_lo + side
    r_min = np.minimum(w * x_lo, w * x_hi) - y_hi
    r_max = np.maximum(w * x_lo, w * x_hi) - y_lo
    l_max = np.maximum(r_min**2, r_max**2)
    l_min = np.where((r_min <= 0) & (r_max >= 0), 0.0, np.minimum(r_min**2, r_max**2))
    return l_min, l_max


def rls_exact_eps(x, y, w: float, cfg: RLSConfig) -> float:
    """max over samples s of sup_{z in cell(s)} |loss(s) - loss(z)|."""
    lower, upper = rls_box(cfg)
    bins = box_grid_bins(np.column_stack([x, y]), lower, upper, cfg.nu)
    l_min, l_max = _cell_loss_range(w, bins, lower, cfg.nu)
    loss = (w * np.asarray(x) - np.asarray(y)) ** 2
    return float(np.max(np.maximum(loss - l_min, l_max - loss)))


def box_occupancy(Z, lower, upper, side: float, tag: str = "box") -> OccupancyProfile:
    bins = box_grid_bins(Z, lower, upper, side)
    keys, counts = np.unique(bins, axis=0, return_counts=True)
    cells = {CellId(tag, tuple(int(v) for v in k)): int(c) for k, c in zip(keys, counts)}
    return OccupancyProfile(counts=cells, n=len(bins))


@dataclass
class RLSInstance:
    w: float
    losses: np.ndarray
    eps_S: float
    zeta: float
    occupancy: OccupancyProfile
    ln_K: float
    true_risk: float
    y_bound: float

    def loss_profile(self) -> LossProfile:
        return LossProfile(self.losses, zeta=self.zeta)


def rls_instance(cfg: RLSConfig, seed) -> RLSInstance:
    rng = np.random.default_rng(seed)
    x, y = rls_sample(cfg, rng)
    w = fit_rls(x, y, cfg.lam)
    lower, upper = rls_box(cfg)
    return RLSInstance(
        w=w,
        losses=(w * x - y) ** 2,
        eps_S=rls_exact_eps(x, y, w, cfg),
        zeta=rls_zeta(w, cfg.B),
        occupancy=box_occupancy(np.column_stack([x, y]), lower, upper, cfg.nu),
        ln_K=ln_box_grid_cardinality(lower, upper, cfg.nu),
        true_risk=rls_true_risk(w, cfg.sigma, cfg.B),
        y_bound=1.0 + cfg.B,
    )


@dataclass
class RLSTrial:
    true_risk: float
    theorem1: BoundReport
    stability: BoundReport


def run_rls_trial(cfg: RLSConfig, seed) -> RLSTrial:
    inst = rls_instance(cfg, seed)
    thm1 = theorem1_bound(inst.loss_profile(), inst.eps_S, inst.occupancy, inst.ln_K, cfg.delta, cfg.n)
    stab = uniform_stability_bound(float(inst.losses.mean()), inst.y_bound, cfg.lam, cfg.delta, cfg.n)
    return RLSTrial(inst.true_risk, thm1, stab)


# --- lasso near a low-dimensional slice ------------------------------------


@dataclass
class LassoGeometry:
    d: int = 30
    p: int = 2          # free coordinates; the remaining d - p stay near mu
    n: int = 5000
    nu: float = 0.2     # cell side on [-1,1]
    sigma: float = 0.01
    c: float = 0.1
    delta: float = 0.05

    @property
    def mu(self) -> float:
        # centre of the first interval to the right of 0
        k = math.floor(1.0 / self.nu)
        return -1.0 + (k + 0.5) * self.nu


def _truncnorm(rng, mean, sd, size):
    a, b = (-1.0 - mean) / sd, (1.0 - mean) / sd
    return stats.truncnorm.rvs(a, b, loc=mean, scale=sd, size=size, random_state=rng)


def lasso_sample(g: LassoGeometry, rng: np.random.Generator):
    x1 = _truncnorm(rng, 0.0, 1.0, (g.n, g.p))
    x2 = _truncnorm(rng, g.mu, g.sigma, (g.n, g.d - g.p))
    X = np.hstack([x1, x2])
    w_star = np.zeros(g.d)
    w_star[: g.p] = 1.0 / g.p
    return X, X @ w_star


@dataclass
class LassoInstance:
    weights: np.ndarray
    losses: np.ndarray
    eps_S: float
    zeta: float
    B: float
    occupancy: OccupancyProfile
    ln_K: float

    def loss_profile(self) -> LossProfile:
        return LossProfile(self.losses, zeta=self.zeta, B=self.B)


def lasso_instance_from_data(X, y, c: float, nu: float, lower: float, upper: float) -> LassoInstance:
    """Lasso fit plus its certificate on the box [lower, upper]^(d+1), cells of side nu."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    model = fit_lasso(X, y, c)
    dim = X.shape[1] + 1
    lo, hi = [lower] * dim, [upper] * dim
    ln_K = ln_box_grid_cardinality(lo, hi, nu)
    cert = lasso_certificate(y, c, nu, ln_K)
    zeta = lasso_zeta(model.weights, lower, upper)
    # c ||w||_1 <= objective at w = 0 = mean(y^2), so every candidate has |w.x| <= scale * mean(y^2) / c
    scale = max(abs(lower), abs(upper))
    y_max = float(np.abs(y).max()) if len(y) else 0.0
    B = max(scale, y_max) + scale * float(np.mean(y * y)) / c
    return LassoInstance(
        weights=model.weights,
        losses=np.abs(y - X @ model.weights),
        eps_S=cert.eps_S,
        zeta=zeta,
        B=max(B, zeta),
        occupancy=box_occupancy(np.column_stack([X, y]), lo, hi, nu),
        ln_K=ln_K,
    )


def lasso_instance(g: LassoGeometry, seed) -> LassoInstance:
    X, y = lasso_sample(g, np.random.default_rng(seed))
    return lasso_instance_from_data(X, y, g.c, g.nu, -1.0, 1.0)


def compare_lasso(g: LassoGeometry, seed) -> Dict[str, BoundReport]:
    inst = lasso_instance(g, seed)
    lp = inst.loss_profile()
    return {
        "prop1": proposition1_bound(lp, inst.eps_S, inst.ln_K, g.delta, g.n),
        "thm1": theorem1_bound(lp, inst.eps_S, inst.occupancy, inst.ln_K, g.delta, g.n),
    }


def cell_conditional_means(losses, cells) -> Dict:
    """Average loss per cell from a (large) oracle sample."""
    sums: Dict = {}
    counts: Dict = {}
    for l, c in zip(losses, cells):
        sums[c] = sums.get(c, 0.0) + float(l)
        counts[c] = counts.get(c, 0) + 1
    return {c: sums[c] / counts[c] for c in sums}
