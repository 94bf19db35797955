"""Partitions of the sample space and occupancy statistics.

Three schemes are supported: a grid (epsilon-cover) of [0,1]^d, the
inverse image of a grid under a random row-stochastic projection, and
nearest-centroid clustering.  Cells are never enumerated; only occupied
cells are stored.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .concentration import DomainError

SCHEMES = ("epsilon_cover", "random_projection", "clustering")


class CellId(NamedTuple):
    tag: str
    index: Union[Tuple[int, ...], int]

    def __str__(self):
        if isinstance(self.index, tuple):
            return f"{self.tag}:" + "-".join(str(i) for i in self.index)
        return f"{self.tag}:{self.index}"


def bins_per_axis(width: float) -> int:
    if not (0.0 < width <= 1.0):
        raise DomainError(f"width must lie in (0, 1], got {width!r}")
    bins = round(1.0 / width)
    if abs(bins - 1.0 / width) > 1e-9:
        raise DomainError(f"1/width = {1.0 / width!r} is not an integer")
    return bins


@dataclass
class PartitionConfig:
    scheme: str
    dim: int
    width: float = 0.1
    proj_dim: int = 3
    seed: int = 0
    centroids: Optional[List[List[float]]] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if self.dim < 1:
            raise DomainError("dim must be positive")
        bins_per_axis(self.width)
        if self.proj_dim < 1:
            raise DomainError("proj_dim must be positive")
        if self.scheme == "clustering":
            if not self.centroids:
                raise DomainError("clustering needs a nonempty centroid list")
            c = np.asarray(self.centroids, dtype=float)
            if c.ndim != 2 or c.shape[1] != self.dim:
                raise DomainError("centroids must be a (K, dim) array")

    @property
    def bins(self) -> int:
        return bins_per_axis(self.width)

    def to_json(self) -> str:
        d = asdict(self)
        if d["centroids"] is not None:
            d["centroids"] = [list(map(float, c)) for c in d["centroids"]]
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PartitionConfig":
        return cls(**json.loads(text))


def ln_cardinality(config: PartitionConfig) -> float:
    """ln K for the partition described by ``config``."""
    if config.scheme == "epsilon_cover":
        return config.dim * math.log(config.bins)
    if config.scheme == "random_projection":
        return config.proj_dim * math.log(config.bins)
    return math.log(len(config.centroids))


def build_random_projection(d: int, proj_dim: int, seed: int) -> np.ndarray:
    """Uniform [0,1] entries, each row rescaled to sum to one."""
    if d < 1 or proj_dim < 1:
        raise DomainError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.0, 1.0, size=(proj_dim, d))
    return A / A.sum(axis=1, keepdims=True)


def project(X, A: np.ndarray) -> np.ndarray:
    """X @ A.T, clipped to [0,1], computed one output axis at a time.

    A BLAS product may round differently depending on how many rows are in
    the batch, which would move points sitting on a bin edge between cells.
    Row-wise sums give the same bits for a point whatever the batch.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.empty((len(X), A.shape[0]))
    for j, row in enumerate(A):
        U[:, j] = (X * row).sum(axis=1)
    return np.clip(U, 0.0, 1.0)


def _grid_bins(X: np.ndarray, bins: int) -> np.ndarray:
    if np.any(X < 0.0) or np.any(X > 1.0) or np.any(~np.isfinite(X)):
        bad = np.argwhere((X < 0.0) | (X > 1.0) | ~np.isfinite(X))[0]
        raise DomainError(f"coordinate out of [0,1] at point {bad[0]}, axis {bad[-1]}")
    # x * bins is exact for the boundaries k/bins that x / width misses
    return np.minimum(np.floor(X * bins).astype(np.int64) + 1, bins)


def assign_epsilon_cover(x, width: float = 0.1) -> CellId:
    bins = bins_per_axis(width)
    b = _grid_bins(np.atleast_2d(np.asarray(x, dtype=float)), bins)[0]
    return CellId("eps", tuple(int(v) for v in b))


def assign_clustering(x, centroids) -> CellId:
    c = np.asarray(centroids, dtype=float)
    if c.size == 0:
        raise DomainError("empty centroid list")
    idx = _nearest(np.atleast_2d(np.asarray(x, dtype=float)), c)[0]
    return CellId("cluster", int(idx))


def _nearest(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # direct differences keep exact ties exact; argmin then picks the smallest index
    chunk = max(1, (1 << 22) // max(1, C.size))
    out = np.empty(len(X), dtype=np.int64)
    for start in range(0, len(X), chunk):
        diff = X[start:start + chunk, None, :] - C[None, :, :]
        out[start:start + chunk] = np.argmin(np.einsum("ijk,ijk->ij", diff, diff), axis=1)
    return out


class Partition:
    """Immutable cell assigner built from a :class:`PartitionConfig`."""

    def __init__(self, config: PartitionConfig):
        self.config = config
        self.ln_K = ln_cardinality(config)
        self._A = None
        self._C = None
        if config.scheme == "random_projection":
            self._A = build_random_projection(config.dim, config.proj_dim, config.seed)
        elif config.scheme == "clustering":
            self._C = np.asarray(config.centroids, dtype=float)

    @property
    def projection(self) -> Optional[np.ndarray]:
        return None if self._A is None else self._A.copy()

    def cell_indices(self, X) -> np.ndarray:
        """Raw per-point cell keys: (n, d') bin array or (n,) centroid indices."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.config.dim:
            raise DomainError(f"points have dimension {X.shape[1]}, expected {self.config.dim}")
        scheme = self.config.scheme
        if scheme == "epsilon_cover":
            return _grid_bins(X, self.config.bins)
        if scheme == "random_projection":
            _grid_bins(X, self.config.bins)  # domain check on the original points
            return _grid_bins(project(X, self._A), self.config.bins)
        return _nearest(X, self._C)

    def assign(self, x) -> CellId:
        raw = self.cell_indices(x)[0]
        return self._to_cell(raw)

    def assign_many(self, X) -> List[CellId]:
        return [self._to_cell(r) for r in self.cell_indices(X)]

    def _to_cell(self, raw) -> CellId:
        if self.config.scheme == "clustering":
            return CellId("cluster", int(raw))
        tag = "eps" if self.config.scheme == "epsilon_cover" else "proj"
        return CellId(tag, tuple(int(v) for v in raw))

    def occupancy(self, X) -> "OccupancyProfile":
        X = np.asarray(X, dtype=float)
        if X.size == 0:
            return OccupancyProfile(counts={}, n=0)
        raw = self.cell_indices(X)
        if raw.ndim == 1:
            keys, counts = np.unique(raw, return_counts=True)
            cells = {CellId("cluster", int(k)): int(c) for k, c in zip(keys, counts)}
        else:
            keys, counts = np.unique(raw, axis=0, return_counts=True)
            tag = "eps" if self.config.scheme == "epsilon_cover" else "proj"
            cells = {CellId(tag, tuple(int(v) for v in k)): int(c) for k, c in zip(keys, counts)}
        return OccupancyProfile(counts=cells, n=len(X))


@dataclass
class OccupancyProfile:
    counts: Dict[CellId, int] = field(default_factory=dict)
    n: int = 0

    def __post_init__(self):
        if sum(self.counts.values()) != self.n:
            raise DomainError("cell counts do not sum to n")
        if any(c < 1 for c in self.counts.values()):
            raise DomainError("occupied cells must have positive counts")

    @property
    def t_size(self) -> int:
        return len(self.counts)

    @property
    def cells(self) -> List[CellId]:
        """Occupied cells in a canonical (sorted) order."""
        return sorted(self.counts, key=_sort_key)

    def count_vector(self) -> np.ndarray:
        return np.array([self.counts[c] for c in self.cells], dtype=np.int64)

    def union(self, other: "OccupancyProfile") -> "OccupancyProfile":
        merged = dict(self.counts)
        for c, k in other.counts.items():
            merged[c] = merged.get(c, 0) + k
        return OccupancyProfile(counts=merged, n=self.n + other.n)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell_id", "count"])
            for c in self.cells:
                w.writerow([str(c), self.counts[c]])

    @classmethod
    def from_csv(cls, path) -> "OccupancyProfile":
        counts = {}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                counts[parse_cell_id(row["cell_id"])] = int(row["count"])
        return cls(counts=counts, n=sum(counts.values()))


def parse_cell_id(text: str) -> CellId:
    tag, _, idx = text.partition(":")
    if tag == "cluster":
        return CellId(tag, int(idx))
    return CellId(tag, tuple(int(v) for v in idx.split("-")))


def _sort_key(c: CellId):
    idx = c.index if isinstance(c.index, tuple) else (c.index,)
    return (c.tag, idx)


def occupancy(points, config: PartitionConfig) -> OccupancyProfile:
    return Partition(config).occupancy(points)


def box_grid_bins(Z, lower: Sequence[float], upper: Sequence[float], side: float) -> np.ndarray:
    """Bin indices of a side-``side`` grid on the box [lower, upper] (last bin closed)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if np.any(Z < lo) or np.any(Z > hi):
        raise DomainError("point outside the box")
    nbins = np.ceil((hi - lo) / side - 1e-12).astype(np.int64)
    return np.minimum(np.floor((Z - lo) / side).astype(np.int64) + 1, nbins)


def ln_box_grid_cardinality(lower: Sequence[float], upper: Sequence[float], side: float) -> float:
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    nbins = np.ceil((hi - lo) / side - 1e-12)
    return float(np.log(nbins).sum())
