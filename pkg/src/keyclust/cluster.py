"""Weighted K-means with two-cluster assignment and centroid damping.

The modified algorithm differs from standard Lloyd iteration in three ways:
points carry query-relevance weights that scale their pull on centroids; a
point whose two nearest centroids are closer than a distance-gap threshold
is assigned to both clusters (and contributes to both updates); and each
new centroid blends in the previous one with a small damping weight so it
is neither erased nor frozen. Standard mode zeroes all three knobs and is
the classical Lloyd baseline.

Determinism contract: a fixed seed and fixed input produce an identical
model, including history, regardless of the thread count used for the
assignment step. Centroid accumulation folds members in input (chunk)
order via ``np.add.at``, so results are bit-stable.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .errors import NonFiniteInput, TooFewDistinctPoints
from .weighting import WeightedPoint

log = logging.getLogger(__name__)

MODES = ("modified", "standard")
SEEDINGS = ("random_distinct", "partial")

DEFAULT_THRESHOLD = 0.01
DEFAULT_DAMPING = 0.01
DEFAULT_EPSILON = 1e-4
DEFAULT_MAX_ITER = 300
PARTIAL_FRACTION = 0.2


@dataclass(frozen=True)
class ClusterConfig:
    """Knobs for one clustering run.

    ``threshold`` is the distance gap below which a point is dual-assigned;
    ``damping_weight`` is the weight of the previous centroid in each
    update; ``epsilon`` bounds the summed centroid movement at convergence.
    Standard mode forces threshold and damping to zero and treats every
    point weight as 1.
    """

    k: int
    threshold: float = DEFAULT_THRESHOLD
    damping_weight: float = DEFAULT_DAMPING
    epsilon: float = DEFAULT_EPSILON
    max_iter: int = DEFAULT_MAX_ITER
    mode: str = "modified"
    seeding: str = "random_distinct"
    seed: int = 0
    raw_denominator: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.seeding not in SEEDINGS:
            raise ValueError(f"seeding must be one of {SEEDINGS}, got {self.seeding!r}")
        if self.threshold < 0.0:
            raise ValueError("threshold must be >= 0")
        if self.damping_weight < 0.0:
            raise ValueError("damping_weight must be >= 0")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.mode == "standard":
            object.__setattr__(self, "threshold", 0.0)
            object.__setattr__(self, "damping_weight", 0.0)

    def to_record(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "threshold": self.threshold,
            "damping_weight": self.damping_weight,
            "epsilon": self.epsilon,
            "max_iter": self.max_iter,
            "mode": self.mode,
            "seeding": self.seeding,
            "seed": self.seed,
            "raw_denominator": self.raw_denominator,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "ClusterConfig":
        return cls(**rec)


@dataclass(frozen=True)
class Assignment:
    """Primary (and possibly secondary) cluster of one point.

    ``d_secondary`` is the distance to the second-nearest centroid, infinity
    when k == 1. The secondary cluster is present iff
    ``d_secondary - d_primary < threshold`` (strict).
    """

    chunk_id: str
    primary_cluster: int
    secondary_cluster: Optional[int]
    d_primary: float
    d_secondary: float


@dataclass(eq=False)
class IterationSnapshot:
    """One iteration: updated centroids plus the assignments (computed
    against the previous iteration's centroids) that produced them."""

    centroids: np.ndarray
    assignments: list[Assignment]

    @property
    def dual_ids(self) -> list[str]:
        return [a.chunk_id for a in self.assignments if a.secondary_cluster is not None]


@dataclass(eq=False)
class ClusterModel:
    config: ClusterConfig
    centroids: np.ndarray
    assignments: list[Assignment]
    iterations: int
    history: list[IterationSnapshot]
    distortion: float
    converged: bool

    def member_ids(self, cluster_index: int) -> list[str]:
        """Chunk ids assigned to a cluster (primary or secondary), input order."""
        return [
            a.chunk_id
            for a in self.assignments
            if a.primary_cluster == cluster_index or a.secondary_cluster == cluster_index
        ]

    def to_record(self) -> dict[str, Any]:
        return {
            "config": self.config.to_record(),
            "point_ids": [a.chunk_id for a in self.assignments],
            "centroids": self.centroids.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
            "distortion": self.distortion,
            "final": _assignments_to_arrays(self.assignments),
            "history": [
                {
                    "centroids": snap.centroids.tolist(),
                    **_assignments_to_arrays(snap.assignments),
                }
                for snap in self.history
            ],
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "ClusterModel":
        ids = rec["point_ids"]
        return cls(
            config=ClusterConfig.from_record(rec["config"]),
            centroids=np.asarray(rec["centroids"], dtype=np.float64),
            assignments=_assignments_from_arrays(ids, rec["final"]),
            iterations=rec["iterations"],
            history=[
                IterationSnapshot(
                    centroids=np.asarray(h["centroids"], dtype=np.float64),
                    assignments=_assignments_from_arrays(ids, h),
                )
                for h in rec["history"]
            ],
            distortion=rec["distortion"],
            converged=rec["converged"],
        )


def _assignments_to_arrays(assignments: Sequence[Assignment]) -> dict[str, list]:
    return {
        "primary": [a.primary_cluster for a in assignments],
        "secondary": [-1 if a.secondary_cluster is None else a.secondary_cluster for a in assignments],
        "d1": [a.d_primary for a in assignments],
        "d2": [None if math.isinf(a.d_secondary) else a.d_secondary for a in assignments],
    }


def _assignments_from_arrays(ids: Sequence[str], rec: Mapping[str, Any]) -> list[Assignment]:
    return [
        Assignment(
            chunk_id=cid,
            primary_cluster=p,
            secondary_cluster=None if s < 0 else s,
            d_primary=d1,
            d_secondary=math.inf if d2 is None else d2,
        )
        for cid, p, s, d1, d2 in zip(ids, rec["primary"], rec["secondary"], rec["d1"], rec["d2"])
    ]


# ---------------------------------------------------------------------------
# array core


def _as_arrays(points: Sequence[WeightedPoint]) -> tuple[list[str], np.ndarray, np.ndarray]:
    ids = [p.chunk_id for p in points]
    X = np.ascontiguousarray([p.coords for p in points], dtype=np.float64)
    w = np.asarray([p.weight for p in points], dtype=np.float64)
    if not np.isfinite(X).all() or not np.isfinite(w).all():
        raise NonFiniteInput("points contain NaN or infinite coordinates/weights")
    return ids, X, w


def _distinct_row_indices(X: np.ndarray) -> list[int]:
    seen: dict[bytes, int] = {}
    for i, row in enumerate(X):
        seen.setdefault(row.tobytes(), i)
    return sorted(seen.values())


def _distances_sq(X: np.ndarray, centroids: np.ndarray, threads: int = 1) -> np.ndarray:
    """Squared Euclidean distances (n, k). Each row's result depends only on
    that row's values, so sharding across threads never changes the output."""

    def block(rows: np.ndarray) -> np.ndarray:
        diff = rows[:, None, :] - centroids[None, :, :]
        return np.sum(diff * diff, axis=2)

    if threads <= 1 or X.shape[0] < 2 * threads:
        return block(X)
    parts = np.array_split(X, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(block, parts))
    return np.concatenate(results, axis=0)


def _assign_arrays(
    X: np.ndarray, centroids: np.ndarray, threshold: float, threads: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Primary/secondary labels and distances for every point.

    Ties are broken toward the lowest cluster index (argmin keeps the first
    minimum). Secondary assignment requires a strict gap below threshold,
    so threshold 0 never dual-assigns.
    """
    n = X.shape[0]
    k = centroids.shape[0]
    d2all = _distances_sq(X, centroids, threads)
    prim = np.argmin(d2all, axis=1)
    rows = np.arange(n)
    d1 = np.sqrt(d2all[rows, prim])
    if k == 1:
        sec = np.full(n, -1, dtype=np.int64)
        d2 = np.full(n, np.inf)
        return prim, sec, d1, d2
    masked = d2all.copy()
    masked[rows, prim] = np.inf
    second = np.argmin(masked, axis=1)
    d2 = np.sqrt(masked[rows, second])
    dual = (d2 - d1) < threshold
    sec = np.where(dual, second, -1)
    return prim, sec.astype(np.int64), d1, d2


def _update_arrays(
    X: np.ndarray,
    w: np.ndarray,
    prim: np.ndarray,
    sec: np.ndarray,
    previous: np.ndarray,
    damping_weight: float,
    raw_denominator: bool = False,
) -> tuple[np.ndarray, list[int]]:
    """Weighted centroid update; dual-assigned points count in both clusters.

    New centroid i = (sum_j w_j x_j + w_d * c_i_prev) / (sum_j w_j + w_d)
    over primary and secondary members. ``raw_denominator`` divides by the
    member count instead (plus one for the damping pseudo-member), the
    unnormalized form printed by the source algorithm. Empty clusters keep
    their previous centroid and are reported for reseeding.
    """
    k, dim = previous.shape
    sums = np.zeros((k, dim), dtype=np.float64)
    wsum = np.zeros(k, dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    wx = X * w[:, None]
    np.add.at(sums, prim, wx)
    np.add.at(wsum, prim, w)
    np.add.at(counts, prim, 1)
    dual = sec >= 0
    if dual.any():
        np.add.at(sums, sec[dual], wx[dual])
        np.add.at(wsum, sec[dual], w[dual])
        np.add.at(counts, sec[dual], 1)
    new = np.empty_like(previous)
    empties: list[int] = []
    for i in range(k):
        if counts[i] == 0:
            new[i] = previous[i]
            empties.append(i)
            continue
        num = sums[i] + damping_weight * previous[i]
        if raw_denominator:
            den = float(counts[i]) + (1.0 if damping_weight > 0.0 else 0.0)
        else:
            den = wsum[i] + damping_weight
        new[i] = num / den
    return new, empties


def _repair_empty(
    centroids: np.ndarray, empties: Sequence[int], X: np.ndarray, threads: int = 1
) -> None:
    """Reseed each empty cluster to the point farthest from its nearest
    centroid. All empties are reseeded against the same (post-update)
    distance table; ties and already-taken points fall to the next index."""
    if not empties:
        return
    dmin = _distances_sq(X, centroids, threads).min(axis=1)
    order = np.argsort(-dmin, kind="stable")
    taken = 0
    for ci in empties:
        pick = int(order[taken])
        taken += 1
        centroids[ci] = X[pick]
        log.info("reseeded empty cluster %d to point %d", ci, pick)


def _build_assignments(
    ids: Sequence[str], prim: np.ndarray, sec: np.ndarray, d1: np.ndarray, d2: np.ndarray
) -> list[Assignment]:
    return [
        Assignment(
            chunk_id=cid,
            primary_cluster=int(prim[i]),
            secondary_cluster=None if sec[i] < 0 else int(sec[i]),
            d_primary=float(d1[i]),
            d_secondary=float(d2[i]),
        )
        for i, cid in enumerate(ids)
    ]


# ---------------------------------------------------------------------------
# public operations


def assign_point(
    point: WeightedPoint, centroids: np.ndarray, threshold: float
) -> Assignment:
    """Assign one point: primary is the nearest centroid (ties to the lowest
    index), secondary the second-nearest iff the distance gap is strictly
    below ``threshold``."""
    X = np.asarray([point.coords], dtype=np.float64)
    prim, sec, d1, d2 = _assign_arrays(X, np.asarray(centroids, dtype=np.float64), threshold)
    return _build_assignments([point.chunk_id], prim, sec, d1, d2)[0]


def update_centroids(
    members: Sequence[Sequence[WeightedPoint]],
    previous: np.ndarray,
    damping_weight: float,
    raw_denominator: bool = False,
) -> tuple[np.ndarray, list[int]]:
    """Update every centroid from its member list (see ``_update_arrays``).

    Returns the new centroids and the indices of empty clusters, which keep
    their previous centroid and are flagged for reseeding by the caller.
    """
    previous = np.asarray(previous, dtype=np.float64)
    if len(members) != previous.shape[0]:
        raise ValueError("one member list per centroid required")
    flat = [p for mem in members for p in mem]
    if not flat:
        return previous.copy(), list(range(previous.shape[0]))
    _, X, w = _as_arrays(flat)
    labels = np.concatenate(
        [np.full(len(mem), i, dtype=np.int64) for i, mem in enumerate(members)]
    )
    no_sec = np.full(len(flat), -1, dtype=np.int64)
    return _update_arrays(X, w, labels, no_sec, previous, damping_weight, raw_denominator)


def init_centroids(points: Sequence[WeightedPoint], config: ClusterConfig) -> np.ndarray:
    """Initial centroids: k distinct input points chosen by the seeded RNG,
    or (partial seeding) the final centroids of a standard K-means run on a
    seeded random 20% subset (at least 2k points)."""
    ids, X, _ = _as_arrays(points)
    distinct = _distinct_row_indices(X)
    if len(distinct) < config.k:
        raise TooFewDistinctPoints(
            f"{len(distinct)} distinct points < k={config.k}"
        )
    rng = np.random.default_rng(config.seed)
    if config.seeding == "random_distinct":
        pick = rng.choice(len(distinct), size=config.k, replace=False)
        return X[[distinct[i] for i in pick]].copy()
    return _partial_seed(points, X, config, rng)


def _partial_seed(
    points: Sequence[WeightedPoint],
    X: np.ndarray,
    config: ClusterConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    n = len(points)
    size = min(n, max(math.ceil(PARTIAL_FRACTION * n), min(2 * config.k, n)))
    while True:
        idx = np.sort(rng.choice(n, size=size, replace=False))
        if len(_distinct_row_indices(X[idx])) >= config.k or size >= n:
            break
        size = min(n, size * 2)
    subset = [points[int(i)] for i in idx]
    inner = replace(
        config,
        mode="standard",
        seeding="random_distinct",
        seed=int(rng.integers(2**63)),
    )
    return run(subset, inner).centroids.copy()


def run(
    points: Sequence[WeightedPoint], config: ClusterConfig, threads: int = 1
) -> ClusterModel:
    """Iterate assign-all / update-centroids until the summed centroid
    movement drops below epsilon or max_iter is reached.

    History records every iteration's updated centroids together with the
    assignments that produced them (whose dual-assigned ids are the "black
    points" of that iteration). The final reported assignments are a fresh
    pass against the final centroids, and the distortion dual-counts them.
    """
    ids, X, w = _as_arrays(points)
    if config.mode == "standard":
        w = np.ones(len(points), dtype=np.float64)
    centroids = init_centroids(points, config)
    history: list[IterationSnapshot] = []
    converged = False
    for _ in range(config.max_iter):
        prim, sec, d1, d2 = _assign_arrays(X, centroids, config.threshold, threads)
        new, empties = _update_arrays(
            X, w, prim, sec, centroids, config.damping_weight, config.raw_denominator
        )
        _repair_empty(new, empties, X, threads)
        movement = float(np.sum(np.sqrt(np.sum((new - centroids) ** 2, axis=1))))
        history.append(
            IterationSnapshot(
                centroids=new.copy(),
                assignments=_build_assignments(ids, prim, sec, d1, d2),
            )
        )
        centroids = new
        if movement < config.epsilon:
            converged = True
            break
    prim, sec, d1, d2 = _assign_arrays(X, centroids, config.threshold, threads)
    assignments = _build_assignments(ids, prim, sec, d1, d2)
    model = ClusterModel(
        config=config,
        centroids=centroids,
        assignments=assignments,
        iterations=len(history),
        history=history,
        distortion=0.0,
        converged=converged,
    )
    model.distortion = distortion(model, points)
    return model


def distortion(
    model: ClusterModel,
    points: Sequence[WeightedPoint] | None = None,
    include_secondary: bool = True,
) -> float:
    """Sum of squared distances from points to their assigned centroids.

    Dual-assigned points contribute one term per cluster, so this is never
    below the primary-only score. ``points`` is only validated against the
    model's assignment ids when given.
    """
    if points is not None:
        ids = [p.chunk_id for p in points]
        if ids != [a.chunk_id for a in model.assignments]:
            raise ValueError("model assignments do not cover the given points")
    total = 0.0
    for a in model.assignments:
        total += a.d_primary * a.d_primary
        if include_secondary and a.secondary_cluster is not None:
            total += a.d_secondary * a.d_secondary
    return total


def elbow_scan(
    points: Sequence[WeightedPoint],
    config: ClusterConfig,
    k_range: tuple[int, int],
    restarts: int = 10,
    threads: int = 1,
) -> list[tuple[int, float]]:
    """Best-of-``restarts`` distortion for every k in the inclusive range.

    Restart seeds derive deterministically from (config.seed, k, restart),
    so a scan is reproducible and individual runs remain independent.
    """
    k_min, k_max = k_range
    if k_min < 1 or k_max < k_min:
        raise ValueError(f"bad k range [{k_min}, {k_max}]")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    _, X, _ = _as_arrays(points)
    if k_max > len(_distinct_row_indices(X)):
        raise TooFewDistinctPoints(f"k_max={k_max} exceeds distinct point count")
    out: list[tuple[int, float]] = []
    for k in range(k_min, k_max + 1):
        best = math.inf
        for r in range(restarts):
            seed = int(np.random.default_rng((config.seed, k, r)).integers(2**63))
            cfg = replace(config, k=k, seed=seed)
            best = min(best, run(points, cfg, threads).distortion)
        out.append((k, best))
    return out
