"""Disk-intersection feasibility and the radius algebra feeding it.

Every placement subproblem in the package reduces, for a fixed target rate
``t``, to "is there a point of the box inside all these disks?". The test
here is exact up to floating point: the lexicographically lowest point of a
non-empty intersection of disks and a box is a box corner, the bottom point
of some disk, or an intersection of two boundary curves, so it suffices to
enumerate those candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import InvalidParameterError, Region

EPS_FEAS = 1e-6
TOL = 1e-7


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius >= 0):
            raise InvalidParameterError(f"disk radius must be finite and >= 0, got {self.radius}")


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: np.ndarray
    violation: float


def _as_arrays(disks: Sequence[Disk]) -> tuple[np.ndarray, np.ndarray]:
    centers = np.array([d.center for d in disks], dtype=float).reshape(-1, 2)
    radii = np.array([d.radius for d in disks], dtype=float)
    return centers, radii


def _candidates(c: np.ndarray, r: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    n = len(c)
    parts = [
        np.column_stack([c[:, 0], c[:, 1] - r]),
        np.array([[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]]),
    ]
    if n > 1:
        i, j = np.triu_indices(n, 1)
        d = c[j] - c[i]
        dist = np.hypot(d[:, 0], d[:, 1])
        ri, rj = r[i], r[j]
        slack = 1e-12 * (1.0 + ri + rj)
        ok = (dist > 0) & (dist <= ri + rj + slack) & (dist >= np.abs(ri - rj) - slack)
        if np.any(ok):
            d, dist, ri, rj, ci = d[ok], dist[ok], ri[ok], rj[ok], c[i[ok]]
            a = (dist**2 + ri**2 - rj**2) / (2 * dist)
            h = np.sqrt(np.maximum(ri**2 - a**2, 0.0))
            unit = d / dist[:, None]
            base = ci + a[:, None] * unit
            perp = np.column_stack([-unit[:, 1], unit[:, 0]]) * h[:, None]
            parts += [base + perp, base - perp]
    for axis in (0, 1):
        other = 1 - axis
        for line in (lo[axis], hi[axis]):
            off = line - c[:, axis]
            ok = np.abs(off) <= r
            if np.any(ok):
                span = np.sqrt(np.maximum(r[ok] ** 2 - off[ok] ** 2, 0.0))
                for sign in (1.0, -1.0):
                    p = np.empty((int(ok.sum()), 2))
                    p[:, axis] = line
                    p[:, other] = c[ok, other] + sign * span
                    parts.append(p)
    return np.vstack(parts)


def intersect_disks(centers, radii, box: Region, slack: float = EPS_FEAS) -> np.ndarray | None:
    """A point of ``box`` within ``radii + slack`` of every center, or ``None``.

    The returned point is the centroid of the feasible candidate vertices,
    which lies inside the (convex) intersection.
    """
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    r = np.asarray(radii, dtype=float) + slack
    lo, hi = np.asarray(box.lo), np.asarray(box.hi)
    if len(c) == 0:
        return box.center
    if np.any(r < 0):
        return None
    # any disk missing the box entirely
    nearest = np.clip(c, lo, hi)
    if np.any(np.hypot(*(nearest - c).T) > r * (1 + 1e-12) + 1e-12):
        return None
    # any pair of disjoint disks
    if len(c) > 1:
        cd = np.hypot(c[:, None, 0] - c[None, :, 0], c[:, None, 1] - c[None, :, 1])
        if np.any(cd > r[:, None] + r[None, :] + 1e-12 * (1 + r[:, None] + r[None, :])):
            return None
    pts = _candidates(c, r, lo, hi)
    inside = np.all((pts >= lo - 1e-12) & (pts <= hi + 1e-12), axis=1)
    pts = pts[inside]
    if len(pts) == 0:
        return None
    gap = np.hypot(pts[:, None, 0] - c[None, :, 0], pts[:, None, 1] - c[None, :, 1]) - r
    ok = np.all(gap <= 1e-12 * (1 + r), axis=1)
    if not np.any(ok):
        return None
    return np.clip(pts[ok].mean(axis=0), lo, hi)


def violation(point, centers, radii) -> float:
    """``max_k (|p - c_k| - r_k)``: non-positive iff ``point`` lies in every disk."""
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    p = np.asarray(point, dtype=float)
    return float(np.max(np.hypot(*(p - c).T) - np.asarray(radii, dtype=float)))


def min_max_violation(
    disks: Sequence[Disk],
    box: Region,
    tol: float = TOL,
    eps_feas: float = EPS_FEAS,
) -> FeasibilityResult:
    """Minimize ``g(u) = max_k(|u - c_k| - r_k)`` over the box to within ``tol``.

    ``g(u) <= s`` exactly when ``u`` lies in every disk grown by ``s``, so the
    minimum is found by bisection on ``s`` with the exact intersection test.
    """
    if len(disks) == 0:
        raise InvalidParameterError("need at least one disk")
    c, r = _as_arrays(disks)
    center = box.center
    best = center
    hi = violation(center, c, r)
    lo = -float(np.min(r))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p = intersect_disks(c, r + mid, box, slack=0.0)
        if p is None:
            lo = mid
        else:
            hi = mid
            best = p
    g = violation(best, c, r)
    return FeasibilityResult(feasible=g <= eps_feas, witness=np.asarray(best), violation=g)


def grid_oracle(
    objective: Callable[[np.ndarray], np.ndarray],
    box: Region,
    resolution: float,
    maximize: bool = False,
) -> tuple[np.ndarray, float]:
    """Exhaustive search of a vectorized ``objective`` over a uniform grid.

    ``objective`` maps an ``(n, 2)`` array of points to ``n`` values. Test
    helper; nothing in the solvers depends on it.
    """
    if not resolution > 0:
        raise InvalidParameterError("resolution must be positive")
    span = np.asarray(box.hi) - np.asarray(box.lo)
    if resolution > max(span):
        raise InvalidParameterError("resolution exceeds the box size")
    xs = np.linspace(box.lo[0], box.hi[0], int(round(span[0] / resolution)) + 1)
    ys = np.linspace(box.lo[1], box.hi[1], int(round(span[1] / resolution)) + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    vals = np.asarray(objective(pts), dtype=float)
    idx = int(np.argmax(vals) if maximize else np.argmin(vals))
    return pts[idx], float(vals[idx])


# --- constraint radii --------------------------------------------------------


def disk_radius_dl(t, mu_eff, phi: float, dl_exponent: float):
    """Radius of ``(t + mu_eff) * d**d_D <= phi``.

    A constraint with ``t + mu_eff <= 0`` holds everywhere and is reported as
    an infinite radius (dropped).
    """
    denom = np.asarray(t + np.asarray(mu_eff, dtype=float), dtype=float)
    # a tiny positive denominator overflows to inf, the correct limit
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.where(denom > 0, (phi / denom) ** (1.0 / dl_exponent), np.inf)
    return float(out) if out.ndim == 0 else out


def disk_radius_ul(t, lam, a1, a2, ul_exponent: float):
    """Radius of ``lam - a1 - a2 * d**d_U >= t``.

    ``-inf`` marks a ``t`` the device cannot reach from any AP location.
    """
    head = np.asarray(lam, dtype=float) - a1 - t
    out = np.where(head >= 0, (np.maximum(head, 0) / a2) ** (1.0 / ul_exponent), -np.inf)
    return float(out) if out.ndim == 0 else out


def root_theta(coeff, ratio, ul_exponent: float, dl_exponent: float):
    """Positive root of ``x**(d_U+d_D) + coeff * x**d_D - ratio``.

    For ``coeff < 0`` the polynomial dips on ``[0, tau]`` with
    ``tau = (-coeff * d_D / (d_U + d_D))**(1/d_U)`` and climbs afterwards, so
    the root is bracketed in ``[tau, hi)``. Vectorized over ``coeff``/``ratio``.
    """
    coeff = np.asarray(coeff, dtype=float)
    ratio = np.asarray(ratio, dtype=float)
    if np.any(~(ratio > 0)):
        raise InvalidParameterError("ratio must be positive")
    coeff, ratio = np.broadcast_arrays(coeff, ratio)
    a, b = ul_exponent, dl_exponent
    s = a + b
    neg = coeff < 0
    tau = np.where(neg, (np.abs(coeff) * b / s) ** (1.0 / a), 0.0)
    hi_pos = ratio ** (1.0 / s)
    hi_neg = np.maximum((2 * np.abs(coeff)) ** (1.0 / a), (2 * ratio) ** (1.0 / s))
    lo = tau.copy()
    hi = np.where(neg, hi_neg, hi_pos)
    for _ in range(200):
        # converged entries are frozen so array and scalar calls agree bit for bit
        active = hi - lo > 4 * np.finfo(float).eps * hi
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        z = mid**b * (mid**a + coeff) - ratio
        pos = z > 0
        hi = np.where(active & pos, mid, hi)
        lo = np.where(active & ~pos, mid, lo)
    # the bracket spans a few ulps and rounding blurs its ends; keep the
    # double with the smallest residual in a slightly wider window
    start = lo
    for _ in range(8):
        start = np.nextafter(start, -np.inf)
    cand = [start]
    for _ in range(40):
        cand.append(np.nextafter(cand[-1], np.inf))
    cand = np.stack(cand)
    res = np.abs(cand**b * (cand**a + coeff) - ratio)
    out = np.take_along_axis(cand, np.argmin(res, axis=0)[None], axis=0)[0]
    return float(out) if out.ndim == 0 else out


def theta_residual(theta, coeff, ratio, ul_exponent: float, dl_exponent: float):
    theta = np.asarray(theta, dtype=float)
    return theta**dl_exponent * (theta**ul_exponent + coeff) - ratio


# --- bisection over the target rate -----------------------------------------


@dataclass
class BisectionResult:
    t: float
    witness: np.ndarray
    iterations: int
    trace: list[tuple[float, float, bool]]


def bisect_max(
    probe: Callable[[float], np.ndarray | None],
    lower: float,
    upper: float,
    sigma: float,
    record: bool = False,
) -> BisectionResult:
    """Largest ``t`` in ``[lower, upper)`` where ``probe(t)`` finds a point.

    ``probe`` must succeed at ``lower``; the loop stops once the bracket is
    narrower than ``sigma`` and returns the last feasible witness.
    """
    lo, hi = float(lower), float(upper)
    witness = None
    trace = []
    it = 0
    while hi - lo >= sigma:
        t = 0.5 * (lo + hi)
        if t == lo or t == hi:
            break
        p = probe(t)
        it += 1
        if record:
            trace.append((lo, hi, p is not None))
        if p is not None:
            lo, witness = t, p
        else:
            hi = t
    if witness is None:
        witness = probe(lo)
        if witness is None:
            raise RuntimeError(f"bisection lower bound {lo!r} is not feasible")
    return BisectionResult(t=lo, witness=np.asarray(witness, dtype=float), iterations=it, trace=trace)
