"""Principal component analysis via per-component power iteration.

Each component is the dominant direction of the residual covariance,
found by power iteration and removed by deflation before the next one is
sought. The covariance is applied in whichever representation is smaller:
for wide data (V > n) the V-by-V covariance is never materialized and one
application is two matrix-vector products against the centered data; for
tall data (n >= V) the explicit V-by-V covariance is built once and each
application is a single small product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DimensionTooLarge, LengthMismatch

log = logging.getLogger(__name__)

POWER_TOL = 1e-10
POWER_MAX_ITER = 1000
# sine of the angle between C@w and w below which w satisfies the
# eigen-equation closely enough to count as converged
RESIDUAL_TOL = 1e-9
# fixed start-vector seed: fit_pca must be deterministic across runs
_START_SEED = 0x5EED


@dataclass(eq=False)
class PcaModel:
    """Mean vector plus orthonormal component rows with their variances.

    ``degenerate`` flags an input whose total variance is numerically zero
    (all vectors identical); components are then an arbitrary orthonormal
    set with zero explained variance.
    """

    mean: np.ndarray  # (V,)
    components: np.ndarray  # (d, V), orthonormal rows
    explained_variance: np.ndarray  # (d,), non-increasing
    degenerate: bool = False

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    def to_record(self) -> dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "PcaModel":
        return cls(
            mean=np.asarray(rec["mean"], dtype=np.float64),
            components=np.asarray(rec["components"], dtype=np.float64),
            explained_variance=np.asarray(rec["explained_variance"], dtype=np.float64),
            degenerate=rec["degenerate"],
        )


@dataclass(eq=False)
class ReducedPoint:
    chunk_id: str
    coords: np.ndarray

    def to_record(self) -> dict[str, Any]:
        return {"chunk_id": self.chunk_id, "coords": self.coords.tolist()}

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "ReducedPoint":
        return cls(chunk_id=rec["chunk_id"], coords=np.asarray(rec["coords"], dtype=np.float64))


def fit_pca(vectors: np.ndarray, d: int) -> PcaModel:
    """Extract the top ``d`` principal components of ``vectors`` (n, V).

    Components are eigenvectors of the sample covariance of the mean-centered
    input, ordered by eigenvalue, found by power iteration (tolerance 1e-10,
    at most 1000 iterations per component) with Gram-Schmidt deflation. The
    sign convention makes each component's largest-magnitude entry positive.
    """
    X = np.ascontiguousarray(vectors, dtype=np.float64)
    if X.ndim != 2:
        raise LengthMismatch(f"expected a 2-D matrix, got shape {X.shape}")
    n, v = X.shape
    limit = min(v, n - 1)
    if not 1 <= d <= limit:
        raise DimensionTooLarge(
            f"d={d} outside [1, {limit}] for {n} vectors of dimension {v}"
        )
    mean = X.mean(axis=0)
    resid = X - mean
    total_var = float(np.sum(resid * resid)) / (n - 1)
    scale = max(1.0, float(np.sum(X * X)) / n)
    degenerate = total_var <= 1e-24 * scale
    if degenerate:
        log.warning("degenerate input: zero covariance, components carry no variance")

    comps = np.empty((d, v), dtype=np.float64)
    eig = np.empty(d, dtype=np.float64)
    rng = np.random.default_rng(_START_SEED)
    # variance below this is numerically zero: the deflated residual is pure
    # rounding noise inside the span of already-extracted components
    var_floor = 1e-28 * max(total_var, 1e-300)
    use_gram = v <= n  # explicit covariance is the smaller object
    if use_gram:
        cov = (resid.T @ resid) / (n - 1)
        for j in range(d):
            comps[j], eig[j] = _leading_direction(
                lambda w: cov @ w, v, comps[:j], rng, var_floor
            )
            cov -= eig[j] * np.outer(comps[j], comps[j])
    else:
        inv = 1.0 / (n - 1)
        for j in range(d):
            comps[j], eig[j] = _leading_direction(
                lambda w: (resid.T @ (resid @ w)) * inv, v, comps[:j], rng, var_floor
            )
            resid -= np.outer(resid @ comps[j], comps[j])
    order = np.argsort(-eig, kind="stable")
    comps, eig = comps[order], eig[order]
    for j in range(d):
        if comps[j, int(np.argmax(np.abs(comps[j])))] < 0:
            comps[j] = -comps[j]
    return PcaModel(mean=mean, components=comps, explained_variance=eig, degenerate=degenerate)


def _leading_direction(
    apply_cov, v: int, prev: np.ndarray, rng: np.random.Generator, var_floor: float
) -> tuple[np.ndarray, float]:
    """Power iteration for the dominant eigenvector of the covariance
    behind ``apply_cov``, kept orthogonal to the rows of ``prev``.
    Returns (unit vector, variance).

    Stops when the direction settles (change < POWER_TOL) or when the
    eigen-equation residual is tiny: the sine of the angle between C@w and
    w drops below RESIDUAL_TOL. The second test is what terminates inside
    clusters of near-equal eigenvalues, where the direction keeps drifting
    forever but any unit vector of the cluster's subspace is an equally
    valid component. Variance at or below ``var_floor`` means the residual
    covariance is numerically zero, so a deterministic orthonormal filler
    is returned.
    """
    w = _orthogonalize(rng.standard_normal(v), prev)
    nw = np.linalg.norm(w)
    if nw == 0.0:
        return _fallback_direction(prev, v), 0.0
    w /= nw
    for _ in range(POWER_MAX_ITER):
        cw = apply_cov(w)
        variance = float(w @ cw)  # Rayleigh quotient, w is unit
        if variance <= var_floor:
            return _fallback_direction(prev, v), 0.0
        eigen_resid = float(np.linalg.norm(cw - variance * w))
        z = _orthogonalize(cw, prev)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return _fallback_direction(prev, v), 0.0
        z /= nz
        if z @ w < 0.0:
            z = -z
        direction_done = np.linalg.norm(z - w) < POWER_TOL
        w = z
        if direction_done or eigen_resid <= RESIDUAL_TOL * float(np.linalg.norm(cw)):
            break
    return w, float(w @ apply_cov(w))


def _orthogonalize(w: np.ndarray, prev: np.ndarray) -> np.ndarray:
    if prev.shape[0]:
        # twice for numerical hygiene (classical Gram-Schmidt reorthogonalization)
        w = w - prev.T @ (prev @ w)
        w = w - prev.T @ (prev @ w)
    return w


def _fallback_direction(prev: np.ndarray, v: int) -> np.ndarray:
    """Deterministic orthonormal filler for zero-variance subspaces: the
    standard basis vector with the largest residual after projecting out
    ``prev``, normalized."""
    best, best_norm = None, -1.0
    for i in range(v):
        e = np.zeros(v)
        e[i] = 1.0
        r = _orthogonalize(e, prev)
        nr = float(np.linalg.norm(r))
        if nr > best_norm:
            best, best_norm = r, nr
        if nr > 0.9:
            break
    assert best is not None and best_norm > 0.0
    return best / best_norm


def pca_transform(vector: np.ndarray, model: PcaModel) -> np.ndarray:
    """Project one vector (V,) or a stack (n, V) onto the fitted components."""
    arr = np.asarray(vector, dtype=np.float64)
    if arr.shape[-1] != model.input_dim:
        raise LengthMismatch(
            f"vector length {arr.shape[-1]} != model input dimension {model.input_dim}"
        )
    return (arr - model.mean) @ model.components.T


def reduce_points(
    chunk_ids: Sequence[str], vectors: np.ndarray, model: PcaModel
) -> list[ReducedPoint]:
    coords = pca_transform(vectors, model)
    return [ReducedPoint(chunk_id=cid, coords=coords[i]) for i, cid in enumerate(chunk_ids)]
