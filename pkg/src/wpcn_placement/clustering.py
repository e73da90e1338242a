"""Seeded k-means used to split devices into geographic groups."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import InvalidParameterError, as_points


@dataclass(frozen=True, eq=False)
class Clustering:
    """``assignment[k]`` is the cluster of point ``k``; ``order`` lists cluster
    indices in processing order."""

    assignment: np.ndarray
    centers: np.ndarray
    order: np.ndarray

    @property
    def m(self) -> int:
        return len(self.centers)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.m)

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster)

    def covered(self, count: int) -> np.ndarray:
        """Indices of points in the first ``count`` clusters of ``order``."""
        return np.flatnonzero(np.isin(self.assignment, self.order[:count]))


def sse(points: np.ndarray, assignment: np.ndarray, centers: np.ndarray) -> float:
    """Sum of squared distances from each point to its assigned center."""
    return float(np.sum((points - centers[assignment]) ** 2))


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)


def _seed_centers(points: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    # k-means++: each new center drawn with probability proportional to D^2
    k = len(points)
    chosen = [int(rng.integers(k))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, m):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(k, p=d2 / total))
        else:
            nxt = int(rng.integers(k))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen].copy()


def _repair_empty(points, assignment, centers):
    # move the point farthest from its center into each empty cluster
    m = len(centers)
    while True:
        sizes = np.bincount(assignment, minlength=m)
        empty = np.flatnonzero(sizes == 0)
        if len(empty) == 0:
            return assignment, centers
        d2 = np.sum((points - centers[assignment]) ** 2, axis=1)
        d2[sizes[assignment] <= 1] = -1.0
        far = int(np.argmax(d2))
        assignment = assignment.copy()
        assignment[far] = empty[0]
        centers = centers.copy()
        centers[empty[0]] = points[far]


def _centroids(points, assignment, m):
    counts = np.bincount(assignment, minlength=m).astype(float)
    sums = np.zeros((m, 2))
    np.add.at(sums, assignment, points)
    return sums / counts[:, None]


def _hartigan(points, assignment, centers, max_passes=100):
    # single-point moves that strictly lower the SSE; keeps Lloyd's objective monotone
    assignment = assignment.copy()
    m = len(centers)
    counts = np.bincount(assignment, minlength=m).astype(float)
    for _ in range(max_passes):
        moved = False
        for k, p in enumerate(points):
            src = assignment[k]
            if counts[src] <= 1:
                continue
            d2 = np.sum((centers - p) ** 2, axis=1)
            gain = counts[src] / (counts[src] - 1) * d2[src]
            cost = counts / (counts + 1) * d2
            cost[src] = np.inf
            dst = int(np.argmin(cost))
            if cost[dst] < gain * (1 - 1e-12):
                centers[src] = (centers[src] * counts[src] - p) / (counts[src] - 1)
                centers[dst] = (centers[dst] * counts[dst] + p) / (counts[dst] + 1)
                counts[src] -= 1
                counts[dst] += 1
                assignment[k] = dst
                moved = True
        if not moved:
            break
    return assignment, _centroids(points, assignment, m)


def kmeans(points, m: int, seed: int = 0, max_iter: int = 300, history: list | None = None) -> Clustering:
    """Lloyd iterations from k-means++ seeding, polished with Hartigan moves.

    Deterministic for a fixed ``seed``; never leaves a cluster empty. When
    ``history`` is given, the SSE after every Lloyd step is appended to it.
    """
    pts = as_points(points)
    k = len(pts)
    if not 1 <= m <= k:
        raise InvalidParameterError(f"cluster count {m} must lie in [1, {k}]")
    rng = np.random.default_rng(seed)
    centers = _seed_centers(pts, m, rng)
    assignment = np.argmin(_sq_dists(pts, centers), axis=1)
    assignment, centers = _repair_empty(pts, assignment, centers)
    for _ in range(max_iter):
        centers = _centroids(pts, assignment, m)
        if history is not None:
            history.append(sse(pts, assignment, centers))
        new = np.argmin(_sq_dists(pts, centers), axis=1)
        new, centers = _repair_empty(pts, new, centers)
        if np.array_equal(new, assignment):
            break
        assignment = new
    assignment, centers = _hartigan(pts, assignment, _centroids(pts, assignment, m))
    if history is not None:
        history.append(sse(pts, assignment, centers))
    base = Clustering(assignment=assignment, centers=centers, order=np.arange(m))
    return order_clusters(base)


def order_clusters(clustering: Clustering) -> Clustering:
    """Sort clusters by decreasing size, then by center x, then center y."""
    sizes = clustering.sizes()
    c = clustering.centers
    order = np.lexsort((c[:, 1], c[:, 0], -sizes))
    return Clustering(assignment=clustering.assignment, centers=clustering.centers, order=order)
