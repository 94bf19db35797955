"""Synthetic sample generators on [0,1]^d and CSV ingestion."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .concentration import DomainError

FAMILIES = ("beta", "gauss_mix", "beta_mix", "beta_gauss", "uniform")
N_COMPONENTS = 5
# largest value of 0.4*v0 + v1 + v2 when every summand lies in [0,1]
MIX_SCALE = 2.4

_REQUIRED = {
    "beta": ("a", "b"),
    "gauss_mix": ("sigma",),
    "beta_mix": ("a", "b", "sigma"),
    "beta_gauss": ("a", "b", "sigma"),
    "uniform": (),
}


@dataclass
class GeneratorConfig:
    """``params`` by family: beta {a, b}; gauss_mix {sigma}; beta_mix and
    beta_gauss {a, b, sigma}.  Both mixes add v0 ~ U[0,1] (scaled by 0.4),
    v1 ~ Beta(a,b) and v2, where v2 ~ Beta(sigma, sigma) for beta_mix and
    v2 ~ N(0, sigma^2) clipped to [0,1] for beta_gauss."""

    family: str
    params: Dict[str, float] = field(default_factory=dict)
    dim: int = 1
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if self.n < 1 or self.dim < 1:
            raise DomainError("n and dim must be positive")
        for key in _REQUIRED[self.family]:
            if key not in self.params:
                raise DomainError(f"{self.family} needs parameter {key!r}")
            if not self.params[key] > 0:
                raise DomainError(f"parameter {key!r} must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def generate(config: GeneratorConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    n, d, p = config.n, config.dim, config.params
    fam = config.family
    if fam == "uniform":
        X = rng.uniform(0.0, 1.0, size=(n, d))
    elif fam == "beta":
        X = rng.beta(p["a"], p["b"], size=(n, d))
    elif fam == "gauss_mix":
        means = rng.uniform(0.0, 1.0, size=(N_COMPONENTS, d))
        comp = rng.integers(0, N_COMPONENTS, size=n)
        X = np.clip(means[comp] + p["sigma"] * rng.standard_normal((n, d)), 0.0, 1.0)
    else:
        v0 = rng.uniform(0.0, 1.0, size=(n, d))
        v1 = rng.beta(p["a"], p["b"], size=(n, d))
        if fam == "beta_mix":
            v2 = rng.beta(p["sigma"], p["sigma"], size=(n, d))
        else:
            v2 = np.clip(p["sigma"] * rng.standard_normal((n, d)), 0.0, 1.0)
        X = (0.4 * v0 + v1 + v2) / MIX_SCALE
    X = np.clip(X, 0.0, 1.0)  # guards the last ulp of the rescale
    assert np.all((X >= 0.0) & (X <= 1.0))
    return X


# the four synthetic families used in the occupancy sweeps
FIGURE_FAMILIES = {
    "beta_0.1_0.1": ("beta", {"a": 0.1, "b": 0.1}),
    "beta_0.1_10": ("beta", {"a": 0.1, "b": 10.0}),
    "gauss_mix_0.01": ("gauss_mix", {"sigma": 0.01}),
    "gauss_mix_1.0": ("gauss_mix", {"sigma": 1.0}),
}


# --- CSV ----------------------------------------------------------------

def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def read_csv_matrix(text: str) -> Tuple[np.ndarray, Optional[list]]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DomainError("empty CSV")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    width = len(header) if header else len(rows[0])
    out = np.empty((len(rows), width))
    offset = 2 if header else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DomainError(f"row {i + offset}: expected {width} columns, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise DomainError(f"row {i + offset}, column {j + 1}: not a number: {cell!r}") from None
    if not np.all(np.isfinite(out)):
        i, j = np.argwhere(~np.isfinite(out))[0]
        raise DomainError(f"row {i + offset}, column {j + 1}: non-finite value")
    return out, header


def minmax_normalize(X: np.ndarray) -> np.ndarray:
    """Per-feature min-max to [0,1]; constant features map to 0."""
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (X - lo) / safe, 0.0)


def load_csv(path, expected_dim: Optional[int] = None, label_column: bool = False,
             normalize: str = "auto") -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Read a numeric CSV into samples in [0,1]^d (plus labels if the last column holds them).

    normalize: "auto" leaves data already inside [0,1] untouched and min-max
    scales it otherwise; "minmax" always scales; "none" never does.
    """
    with open(path, newline="") as fh:
        M, _ = read_csv_matrix(fh.read())
    labels = None
    if label_column:
        if M.shape[1] < 2:
            raise DomainError("label column requested but file has a single column")
        M, labels = M[:, :-1], M[:, -1]
    if expected_dim is not None and M.shape[1] != expected_dim:
        raise DomainError(f"expected {expected_dim} features, found {M.shape[1]}")
    if normalize == "minmax" or (normalize == "auto" and (M.min() < 0.0 or M.max() > 1.0)):
        M = minmax_normalize(M)
    elif normalize not in ("auto", "none", "minmax"):
        raise DomainError(f"unknown normalize mode {normalize!r}")
    return M, labels


def save_csv(path, X: np.ndarray, labels: Optional[np.ndarray] = None) -> None:
    X = np.atleast_2d(X)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        names = [f"x{j + 1}" for j in range(X.shape[1])] + (["label"] if labels is not None else [])
        w.writerow(names)
        for i, row in enumerate(X):
            vals = [repr(float(v)) for v in row]
            if labels is not None:
                vals.append(repr(float(labels[i])))
            w.writerow(vals)
