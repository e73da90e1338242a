"""Brute-force oracles shared by the tests. Independent of the solvers."""

import numpy as np


def grid(box_lo, box_hi, h):
    xs = np.arange(box_lo[0], box_hi[0] + h / 2, h)
    ys = np.arange(box_lo[1], box_hi[1] + h / 2, h)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def dists(points, sites):
    d = points[:, None, :] - sites[None, :, :]
    return np.sqrt((d**2).sum(axis=2))


def single_en_value(pts, w, mu, phi, d_dl, dmin, extra=0.0):
    """min_k(extra_k + phi * max(|u - w_k|, dmin)**-d_dl - mu_k) at each row of ``pts``."""
    d = np.maximum(dists(pts, w), dmin)
    return np.min(extra + phi * d**-d_dl - mu, axis=1)


def ap_value(pts, w, lam, a1, a2, d_ul):
    """min_k(lam_k - a1_k - a2_k |v - w_k|**d_ul) at each row of ``pts``."""
    d = dists(pts, w)
    return np.min(lam - a1 - a2 * d**d_ul, axis=1)
