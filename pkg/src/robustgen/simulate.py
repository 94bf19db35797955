"""Seeded Monte Carlo coverage tests for the multinomial bounds.

Trials are grouped into fixed-size blocks.  Block ``b`` draws from its own
Philox stream keyed by ``(base_seed, b)``, so the result does not depend on
how many workers process the blocks or in what order.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from .bounds import DecaySpec
from .concentration import (
    LN2,
    SQRT2,
    DomainError,
    MultinomialSpec,
    _check_delta,
    bhc_rhs,
    lemma3_tail_bound,
    lemma4_tail_bound,
)

BLOCK = 4096
Z975 = NormalDist().inv_cdf(0.975)

# statistics that are confidence statements at level delta
DELTA_STATS = ("bhc", "lemma5", "lemma5_repaired", "lemma6", "lemma_new", "theorem4", "lemma8")
# statistics that compare a tail frequency with a closed-form tail bound at threshold M
TAIL_STATS = ("lemma3", "lemma4")
STATISTICS = DELTA_STATS + TAIL_STATS
ALIASES = {"prop2": "bhc", "lemma_multinomial_new": "lemma_new", "thm4": "theorem4"}

CSV_COLUMNS = ("statistic", "K", "n", "delta", "trials", "violations", "rate",
               "wilson_upper", "pass")


def block_rng(base_seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(base_seed) & (2**64 - 1), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def wilson_interval(k: int, n: int, z: float = Z975) -> Tuple[float, float]:
    if n < 1:
        raise DomainError("need at least one trial")
    phat = k / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class TrialPlan:
    trials: int
    base_seed: int
    spec: MultinomialSpec
    statistic: str
    delta_or_M: float
    weights: Union[str, Sequence[float]] = "adversarial"

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        stat = ALIASES.get(self.statistic, self.statistic)
        if stat not in STATISTICS:
            raise DomainError(f"unknown statistic {self.statistic!r}")
        object.__setattr__(self, "statistic", stat)
        if self.spec.p is None:
            raise DomainError("coverage needs materialised probabilities")
        if stat in DELTA_STATS:
            _check_delta(self.delta_or_M)
        elif self.delta_or_M <= 0:
            raise DomainError("M must be positive")
        if stat in TAIL_STATS and isinstance(self.weights, str) and self.weights == "adversarial":
            raise DomainError(f"{stat} needs fixed weights")

    def fixed_weights(self) -> Optional[np.ndarray]:
        if isinstance(self.weights, str):
            if self.weights == "ones":
                return np.ones(self.spec.K)
            if self.weights == "adversarial":
                return None
            raise DomainError(f"unknown weight mode {self.weights!r}")
        a = np.asarray(self.weights, dtype=float)
        if a.shape != (self.spec.K,) or np.any(a < 0):
            raise DomainError("fixed weights must be K nonnegative numbers")
        return a


@dataclass
class CoverageResult:
    statistic: str
    K: int
    n: int
    delta: float
    violations: int
    trials: int
    bound_delta: float

    @property
    def empirical_rate(self) -> float:
        return self.violations / self.trials

    @property
    def wilson_lower(self) -> float:
        return wilson_interval(self.violations, self.trials)[0]

    @property
    def wilson_upper(self) -> float:
        return wilson_interval(self.violations, self.trials)[1]

    @property
    def passed(self) -> bool:
        return self.wilson_lower <= self.bound_delta

    def csv_row(self) -> list:
        return [self.statistic, self.K, self.n, repr(self.delta), self.trials, self.violations,
                repr(self.empirical_rate), repr(self.wilson_upper), str(self.passed).lower()]

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "K": self.K, "n": self.n, "delta": self.delta,
                "trials": self.trials, "violations": self.violations,
                "rate": self.empirical_rate, "wilson_lower": self.wilson_lower,
                "wilson_upper": self.wilson_upper, "bound_delta": self.bound_delta,
                "pass": self.passed}


def results_to_csv(results: Iterable[CoverageResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerow(r.csv_row())
    return buf.getvalue()


def sample_multinomial(spec: MultinomialSpec, seed, size: Optional[int] = None) -> np.ndarray:
    """One (or ``size``) count vectors.  numpy draws these as K sequential conditional binomials."""
    if spec.p is None:
        raise DomainError("sample_multinomial needs materialised probabilities")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.multinomial(spec.n, spec.p, size=size)


# --- per-block statistics -----------------------------------------------

def _adversarial(X: np.ndarray, p: np.ndarray, n: int) -> np.ndarray:
    # the data-measurable weights that maximise sum a_i (p_i - X_i/n) over a in [0,1]^K
    return (p[None, :] > X / n).astype(float)


def _occ_maxima(A: np.ndarray, occ: np.ndarray):
    a_T = np.where(occ, A, 0.0).max(axis=1)
    a_Tc = np.where(occ, 0.0, A).max(axis=1)
    return a_T, a_Tc


def _violations(X: np.ndarray, plan: TrialPlan, delta: float) -> int:
    spec = plan.spec
    n, K, p = spec.n, spec.K, spec.p
    F = X / n
    stat = plan.statistic
    if stat == "bhc":
        return int(np.count_nonzero(np.abs(F - p).sum(axis=1) > bhc_rhs(spec.ln_K, delta, n)))
    Lk = math.log(K) - math.log(delta)
    if stat == "lemma5":
        lower = np.where(p > Lk / (4 * n), F - np.sqrt(p * Lk / n), F - 2 * Lk / n)
        return int(np.count_nonzero((lower > p).any(axis=1)))
    if stat == "lemma5_repaired":
        lower = np.where(p > Lk / n, F - 2 * np.sqrt(p * Lk / n), F - 2 * Lk / n)
        return int(np.count_nonzero((lower > p).any(axis=1)))
    if stat == "lemma6":
        return int(np.count_nonzero((p - F > np.sqrt(2 * p * Lk / n)).any(axis=1)))
    a = plan.fixed_weights()
    A = _adversarial(X, p, n) if a is None else np.broadcast_to(a, X.shape)
    lhs = (A * (p - F)).sum(axis=1)
    if stat == "lemma_new":
        rhs = (A @ np.sqrt(p)) * math.sqrt(2 * Lk / n)
        return int(np.count_nonzero(lhs > rhs))
    L = LN2 + spec.ln_K - math.log(delta)
    occ = X > 0
    a_T, a_Tc = _occ_maxima(A, occ)
    t = occ.sum(axis=1)
    if stat == "theorem4":
        rhs = (SQRT2 * a_T + a_Tc) * np.sqrt(t * L / n) + a_Tc * 2 * t * L / n
    else:  # lemma8
        root = np.where(occ, (a_Tc[:, None] + SQRT2 * A) * np.sqrt(F), 0.0).sum(axis=1)
        lin = a_Tc * t + np.where(occ, A, 0.0).sum(axis=1)
        rhs = math.sqrt(L / n) * root + 2 * L / n * lin
    return int(np.count_nonzero(lhs > rhs))


def _tail_violations(X: np.ndarray, plan: TrialPlan, M: float) -> int:
    a = plan.fixed_weights()
    dev = (X / plan.spec.n - plan.spec.p) @ a
    if plan.statistic == "lemma3":
        return int(np.count_nonzero(dev > M))
    return int(np.count_nonzero(-dev > M))


def _tail_bound(plan: TrialPlan) -> float:
    fn = lemma3_tail_bound if plan.statistic == "lemma3" else lemma4_tail_bound
    return fn(plan.fixed_weights(), plan.spec.p, plan.spec.n, plan.delta_or_M)


def _block_sizes(trials: int) -> List[int]:
    full, rem = divmod(trials, BLOCK)
    return [BLOCK] * full + ([rem] if rem else [])


def _sample_key(plan: TrialPlan):
    return (plan.spec.n, tuple(plan.spec.p.tolist()), plan.base_seed, plan.trials)


def run_coverage_many(plans: Sequence[TrialPlan], workers: int = 1) -> List[CoverageResult]:
    """Run several plans; plans with the same (spec, seed, trials) reuse one set of samples."""
    groups: Dict[tuple, List[int]] = {}
    for i, plan in enumerate(plans):
        groups.setdefault(_sample_key(plan), []).append(i)
    counts = [0] * len(plans)
    for idx in groups.values():
        lead = plans[idx[0]]
        sizes = _block_sizes(lead.trials)

        def work(b, lead=lead, idx=idx, sizes=sizes):
            X = block_rng(lead.base_seed, b).multinomial(lead.spec.n, lead.spec.p, size=sizes[b])
            out = []
            for i in idx:
                pl = plans[i]
                if pl.statistic in TAIL_STATS:
                    out.append(_tail_violations(X, pl, pl.delta_or_M))
                else:
                    out.append(_violations(X, pl, pl.delta_or_M))
            return out

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                partial = list(ex.map(work, range(len(sizes))))
        else:
            partial = [work(b) for b in range(len(sizes))]
        for per_block in partial:
            for i, v in zip(idx, per_block):
                counts[i] += v
    results = []
    for plan, v in zip(plans, counts):
        bound = _tail_bound(plan) if plan.statistic in TAIL_STATS else plan.delta_or_M
        results.append(CoverageResult(plan.statistic, plan.spec.K, plan.spec.n,
                                      plan.delta_or_M, v, plan.trials, bound))
    return results


def run_coverage(plan: TrialPlan, workers: int = 1) -> CoverageResult:
    return run_coverage_many([plan], workers=workers)[0]


# --- named probability profiles -------------------------------------------

def probability_profile(kind: str, K: int) -> np.ndarray:
    if K < 1:
        raise DomainError("K must be positive")
    if kind == "uniform":
        return np.full(K, 1.0 / K)
    if kind == "geometric":
        w = 0.5 ** np.arange(K)
        return w / w.sum()
    if kind == "spike":
        p = np.zeros(K)
        p[0] = 1.0
        return p
    raise DomainError(f"unknown probability profile {kind!r}")


# --- occupancy under decaying cell masses ---------------------------------

def decay_probabilities(spec: DecaySpec, K_max: int) -> Tuple[np.ndarray, float]:
    """p_k proportional to exp(-(k/beta)^alpha) on k = 1..K_max, plus a bound on the cut-off mass."""
    if K_max < 1:
        raise DomainError("K_max must be positive")
    k = np.arange(1, K_max + 1, dtype=float)
    w = np.exp(-((k / spec.beta) ** spec.alpha))
    Z = float(w.sum())
    if Z == 0.0:
        raise DomainError("all truncated masses underflow")
    # sum_{k > K_max} e^{-(k/b)^a} <= int_{K_max}^inf e^{-(x/b)^a} dx = (b/a) Gamma(1/a, (K_max/b)^a)
    s = 1.0 / spec.alpha
    tail = spec.beta * s * special.gammaincc(s, (K_max / spec.beta) ** spec.alpha) * special.gamma(s)
    return w / Z, float(tail / Z)


def simulated_constant(spec: DecaySpec, K_max: int) -> float:
    """1/Z: the smallest C for which the normalised masses satisfy the decay hypothesis."""
    p, _ = decay_probabilities(spec, K_max)
    return float(p[0] / math.exp(-((1.0 / spec.beta) ** spec.alpha)))


def default_k_max(spec: DecaySpec, tol: float = 1e-9) -> int:
    K = max(8, int(math.ceil(spec.beta)) + 1)
    while decay_probabilities(spec, K)[1] >= tol:
        K *= 2
        if K > 10**8:
            raise DomainError("tail does not vanish fast enough")
    return K


def simulate_occupancy_decay(spec: DecaySpec, K_max: int, n: int, trials: int, seed) -> np.ndarray:
    """Number of occupied cells in each of ``trials`` samples of size n."""
    if n < 1 or trials < 1:
        raise DomainError("n and trials must be positive")
    p, tail = decay_probabilities(spec, K_max)
    if tail >= 1e-9:
        raise DomainError(f"K_max={K_max} leaves truncated mass up to {tail:.3g} (needs < 1e-9)")
    out = np.empty(trials, dtype=np.int64)
    sizes = _block_sizes(trials)
    start = 0
    for b, size in enumerate(sizes):
        X = block_rng(seed, b).multinomial(n, p, size=size)
        out[start:start + size] = np.count_nonzero(X, axis=1)
        start += size
    return out


def empirical_quantile(values, q: float) -> float:
    """Smallest observed value v with P_emp(T <= v) >= q."""
    v = np.sort(np.asarray(values))
    idx = min(len(v) - 1, max(0, int(math.ceil(q * len(v))) - 1))
    return float(v[idx])
