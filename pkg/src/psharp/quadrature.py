"""Panel quadrature used by every numerical integral in the package.

Integrands here are smooth on each panel except for algebraic endpoint
behaviour like ``t**sigma`` or ``t**(sigma-1)``, so each panel gets a
double-exponential (tanh-sinh) rule. Nodes are carried together with their
distances to both panel ends so that callers can evaluate power laws without
cancellation near the endpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_CHUNK = 1 << 21


@dataclass(frozen=True)
class TanhSinhRule:
    """tanh-sinh rule on [0, 1] with step ``2**-level``.

    ``u`` are the nodes, ``uc = 1 - u`` computed without cancellation,
    ``weight`` the fine weights and ``coarse`` the weights of the nested rule
    with twice the step (zero on the nodes it does not use).
    """
    level: int
    u: np.ndarray
    uc: np.ndarray
    weight: np.ndarray
    coarse: np.ndarray


@lru_cache(maxsize=None)
def tanh_sinh(level: int = 4, t_max: float = 4.0) -> TanhSinhRule:
    step = 2.0 ** -level
    k = np.arange(-math.ceil(t_max / step), math.ceil(t_max / step) + 1)
    t = k * step
    q = 0.5 * math.pi * np.sinh(t)
    u = 1.0 / (1.0 + np.exp(-2.0 * q))
    uc = 1.0 / (1.0 + np.exp(2.0 * q))
    # d u / dt = (pi/2) cosh t / (2 cosh^2 q)
    weight = step * 0.5 * math.pi * np.cosh(t) / (2.0 * np.cosh(q) ** 2)
    coarse = np.where(k % 2 == 0, 2.0 * weight, 0.0)
    keep = weight > 1e-300
    return TanhSinhRule(level, u[keep], uc[keep], weight[keep], coarse[keep])


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def panel_nodes(left, right, rule: TanhSinhRule):
    """Nodes of ``rule`` on every panel ``[left_i, right_i]``.

    Returns ``(x, d_lo, d_hi, w_fine, w_coarse)``, each of shape
    ``(n_panels, n_nodes)``; ``d_lo``/``d_hi`` are the distances to the left and
    right panel ends.
    """
    left = np.asarray(left, dtype=float)[:, None]
    right = np.asarray(right, dtype=float)[:, None]
    length = right - left
    d_lo = length * rule.u
    d_hi = length * rule.uc
    x = np.where(rule.u <= 0.5, left + d_lo, right - d_hi)
    return x, d_lo, d_hi, length * rule.weight, length * rule.coarse


def integrate_panels(f, left, right, rule: TanhSinhRule | None = None, *, with_offsets=False):
    """Integrate ``f`` over each panel; returns ``(fine, coarse)`` per panel.

    ``f`` receives a flat array of nodes (and ``d_lo, d_hi, panel_index`` if
    ``with_offsets``) and must return values of the same shape.
    """
    rule = rule or tanh_sinh()
    left = np.atleast_1d(np.asarray(left, dtype=float))
    right = np.atleast_1d(np.asarray(right, dtype=float))
    n_nodes = rule.u.size
    fine = np.empty(left.size)
    coarse = np.empty(left.size)
    step = max(1, _CHUNK // n_nodes)
    for start in range(0, left.size, step):
        sl = slice(start, start + step)
        x, d_lo, d_hi, wf, wc = panel_nodes(left[sl], right[sl], rule)
        if with_offsets:
            idx = np.broadcast_to(np.arange(start, start + x.shape[0])[:, None], x.shape)
            vals = f(x.ravel(), d_lo.ravel(), d_hi.ravel(), idx.ravel())
        else:
            vals = f(x.ravel())
        vals = np.asarray(vals, dtype=float).reshape(x.shape)
        fine[sl] = np.sum(vals * wf, axis=1)
        coarse[sl] = np.sum(vals * wc, axis=1)
    return fine, coarse


def split_sign_changes(g, edges, iterations: int = 64):
    """Insert the root of ``g`` into every ``[edges[i], edges[i+1]]`` where ``g``
    changes sign. ``g`` must be vectorised and have at most one root per panel.
    """
    edges = np.asarray(edges, dtype=float)
    vals = g(edges)
    flip = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
    if flip.size == 0:
        return edges
    lo = edges[flip].copy()
    hi = edges[flip + 1].copy()
    sign_lo = np.sign(vals[flip])
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        same = np.sign(g(mid)) == sign_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    roots = 0.5 * (lo + hi)
    return np.sort(np.concatenate([edges, roots]))


def unique_edges(points, lo, hi):
    """Sorted unique points of ``points`` clipped to ``[lo, hi]`` with both ends."""
    pts = np.asarray(points, dtype=float)
    pts = pts[(pts > lo) & (pts < hi)]
    pts = np.unique(np.concatenate([[lo], pts, [hi]]))
    return pts


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d, ``2 pi^(d/2) / Gamma(d/2)``."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@lru_cache(maxsize=None)
def sphere_rule(d: int, n: int = 48) -> tuple[np.ndarray, np.ndarray]:
    """Directions on S^{d-1} and weights summing to the sphere area.

    d=1 uses the two points +-1, d=2 Gauss-Legendre in the angle, d=3 a
    product of Gauss rules in (cos polar angle, azimuth).
    """
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        t, w = gauss_legendre(n)
        phi = 2.0 * math.pi * t
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return dirs, 2.0 * math.pi * w
    if d == 3:
        tz, wz = gauss_legendre(n)
        tp, wp = gauss_legendre(2 * n)
        z = 2.0 * tz - 1.0
        phi = 2.0 * math.pi * tp
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1.0 - zz ** 2)
        dirs = np.stack([s * np.cos(pp), s * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        weights = (2.0 * wz[:, None] * 2.0 * math.pi * wp[None, :]).ravel()
        return dirs, weights
    raise ValueError("angular quadrature is implemented for d <= 3 only")
