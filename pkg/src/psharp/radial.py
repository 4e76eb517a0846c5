"""Radial lift of the window functions to R^d and the associated p-Poisson data.

With ``r = |x|`` the lifted solution is ``u_d(x) = u(r)``, its gradient
``v(r) x/r`` and the flux ``|grad u|^{p-2} grad u = v'(r) x/r`` where ``v'``
is the window of the dual bump ``((p-1) sigma, theta)``. The right-hand side
acts on test functions through ``psi -> int v'(|x|) <x/|x|, grad psi> dx``.

All integrals over the support annulus are taken in polar coordinates on a
:class:`QuadratureGrid`, whose radial panels are the pull-backs of the
pieces of the bump train.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .construction import (BumpParams, Phase, _locate_arrays, breakpoint, eval_u, eval_v,
                           eval_v_prime, transition_points)
from .errors import DomainError, GridTooCoarse, PreconditionError
from .quadrature import (gauss_legendre, integrate_panels, panel_nodes, sphere_area, sphere_rule,
                         tanh_sinh, unique_edges)

_POINT_CHUNK = 1 << 20


@dataclass(frozen=True)
class RadialFieldSpec:
    bump: BumpParams
    p: float
    d: int
    dual_bump: BumpParams = field(init=False)

    def __post_init__(self):
        if not self.p >= 2:
            raise DomainError(f"p must be >= 2, got {self.p!r}")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "dual_bump", self.bump.with_sigma((self.p - 1.0) * self.bump.sigma))

    @classmethod
    def make(cls, sigma: float, theta: float, p: float, d: int, **kw) -> "RadialFieldSpec":
        return cls(BumpParams(sigma, theta, **kw), p, d)


# ---------------------------------------------------------------------------
# pointwise fields

def _radius(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise PreconditionError(f"points must have trailing dimension {d}, got shape {x.shape}")
    return x, np.sqrt(np.sum(x * x, axis=-1))


def _radial_vector(profile, x, r):
    safe = np.where(r > 0, r, 1.0)
    return (np.where(r > 0, profile, 0.0) / safe)[..., None] * x


def eval_u_d(x, spec: RadialFieldSpec):
    x, r = _radius(x, spec.d)
    return eval_u(r, spec.bump)


def eval_grad_u_d(x, spec: RadialFieldSpec):
    """``v(|x|) x/|x|``; the zero vector at the origin."""
    x, r = _radius(x, spec.d)
    return _radial_vector(np.asarray(eval_v(r, spec.bump)), x, r)


def eval_A(x, spec: RadialFieldSpec):
    """Flux ``|grad u|^{p-2} grad u`` through the dual bump, ``v_{(p-1)sigma}(|x|) x/|x|``."""
    x, r = _radius(x, spec.d)
    return _radial_vector(np.asarray(eval_v(r, spec.dual_bump)), x, r)


def flux_from_gradient(grad, p: float):
    """``|g|^{p-2} g`` applied along the last axis (``p = 2`` returns ``g``)."""
    grad = np.asarray(grad, dtype=float)
    if p == 2:
        return grad.copy()
    norm = np.sqrt(np.sum(grad * grad, axis=-1, keepdims=True))
    return norm ** (p - 2.0) * grad


def eval_f_strong(r, spec: RadialFieldSpec, snap: float = 1e-14):
    """``-v'(r) - v(r)(d-1)/r`` for the dual window; raises off-differentiability."""
    r = np.asarray(r, dtype=float)
    dual = spec.dual_bump
    out = -np.asarray(eval_v_prime(r, dual, snap))
    if spec.d > 1:
        safe = np.where(r > 0, r, 1.0)
        out = out - np.asarray(eval_v(r, dual)) * (spec.d - 1) / safe
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# test functions

def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def _smooth_step_prime(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tt = np.where(inside, t, 0.5)
    a = np.exp(-1.0 / tt)
    b = np.exp(-1.0 / (1.0 - tt))
    da = a / tt ** 2
    db = -b / (1.0 - tt) ** 2
    return np.where(inside, (da * (a + b) - a * (da + db)) / (a + b) ** 2, 0.0)


@dataclass(frozen=True)
class TestFunction:
    """Smooth compactly supported ``psi`` with its exact gradient.

    ``support_radius`` is the radius of the closed support; ``psi`` vanishes
    on ``|x| >= support_radius``.
    """
    __test__ = False  # not a pytest class

    name: str
    d: int
    evaluator: Callable
    gradient_evaluator: Callable
    support_radius: float

    def __call__(self, x):
        return self.evaluator(x)

    def gradient(self, x):
        return self.gradient_evaluator(x)

    def sobolev_norm(self, p: float = 2.0, n: int = 200, n_angular: int = 64) -> float:
        """``(||psi||_p^p + || |grad psi| ||_p^p)^{1/p}`` by polar Gauss quadrature."""
        dirs, dw = sphere_rule(self.d, n_angular) if self.d > 1 else sphere_rule(1)
        t, w = gauss_legendre(n)
        # grade towards the boundary where the bump flattens
        r = self.support_radius * t
        wr = self.support_radius * w * r ** (self.d - 1)
        pts = r[:, None, None] * dirs[None, :, :]
        flat = pts.reshape(-1, self.d)
        val = np.abs(self.evaluator(flat)).reshape(r.size, -1) ** p
        g = self.gradient_evaluator(flat)
        gn = np.sqrt(np.sum(g * g, axis=-1)).reshape(r.size, -1) ** p
        total = np.sum(wr[:, None] * dw[None, :] * (val + gn))
        return float(total ** (1.0 / p))


def _monomials(x, terms):
    """Value and gradient of ``sum c * prod x_i**alpha_i``."""
    val = np.zeros(x.shape[:-1])
    grad = np.zeros(x.shape)
    for coef, alpha in terms:
        alpha = tuple(alpha) + (0,) * (x.shape[-1] - len(alpha))
        mono = np.ones(x.shape[:-1])
        for i, a in enumerate(alpha):
            if a:
                mono = mono * x[..., i] ** a
        val = val + coef * mono
        for i, a in enumerate(alpha):
            if a:
                part = np.full(x.shape[:-1], coef * a)
                for j, b in enumerate(alpha):
                    e = b - 1 if j == i else b
                    if e:
                        part = part * x[..., j] ** e
                grad[..., i] += part
    return val, grad


def bump_test_function(d: int, R: float = 1.0, terms=((1.0, ()),), name: str | None = None
                       ) -> TestFunction:
    """``exp(-1/(1 - |x/R|^2)) m(x)`` with ``m`` given as ``[(coef, exponents), ...]``."""
    if not 0.75 < R <= 1.0:
        raise PreconditionError("R must lie in (3/4, 1] so the support covers the field")
    terms = tuple((float(c), tuple(a)) for c, a in terms)

    def parts(x):
        x = np.asarray(x, dtype=float)
        s = np.sum(x * x, axis=-1) / R ** 2
        inside = s < 1
        q = np.where(inside, 1.0 - s, 1.0)
        b = np.where(inside, np.exp(-1.0 / q), 0.0)
        db = np.where(inside, -b / q ** 2 * 2.0 / R ** 2, 0.0)  # d b / d(x_i) = db * x_i
        m, dm = _monomials(x, terms)
        return x, b, db, m, dm

    def value(x):
        _, b, _, m, _ = parts(x)
        return b * m

    def gradient(x):
        x, b, db, m, dm = parts(x)
        return b[..., None] * dm + (db * m)[..., None] * x

    label = name or f"bump(R={R}, m={terms})"
    return TestFunction(label, d, value, gradient, R)


def plateau_test_function(d: int, inner: float = 0.8, outer: float = 0.95) -> TestFunction:
    """Radial ``psi`` equal to 1 on ``|x| <= inner``; its gradient vanishes on the field support."""
    if not 0.75 <= inner < outer < 1.0:
        raise PreconditionError("need 3/4 <= inner < outer < 1")

    def value(x):
        r = np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2, axis=-1))
        return 1.0 - _smooth_step((r - inner) / (outer - inner))

    def gradient(x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        dr = -_smooth_step_prime((r - inner) / (outer - inner)) / (outer - inner)
        safe = np.where(r > 0, r, 1.0)
        return (dr / safe)[..., None] * x

    return TestFunction(f"plateau({inner},{outer})", d, value, gradient, outer)


def standard_test_functions(d: int) -> list[TestFunction]:
    """Five test functions used by the weak-form checks."""
    x1 = (1,)
    out = [
        bump_test_function(d, 1.0, [(1.0, ())], "radial R=1"),
        bump_test_function(d, 0.85, [(1.0, ()), (0.7, x1), (-0.4, (2,))], "quadratic R=0.85"),
        bump_test_function(d, 1.0, [(0.5, ()), (1.0, (3,)), (-0.8, (1,))], "cubic R=1"),
    ]
    if d >= 2:
        out.append(bump_test_function(d, 0.85, [(1.0, (0, 2)), (0.6, (1, 1)), (0.3, (2, 1))],
                                      "mixed R=0.85"))
    else:
        out.append(bump_test_function(d, 0.85, [(1.0, (2,)), (0.6, (1,)), (0.3, (3,))],
                                      "poly R=0.85"))
    out.append(plateau_test_function(d))
    return out


# ---------------------------------------------------------------------------
# polar quadrature grid

def pullback_points(params: BumpParams, n_max: int) -> np.ndarray:
    """Radii where either window argument hits a transition of the bump train."""
    z = params.zeta_theta
    xi = np.append(transition_points(params, n_max), params.a_inf)
    r = np.concatenate([(xi + 4 * z) / (16 * z), (xi + 8 * z) / (16 * z), [0.25, 0.5, 0.75]])
    return np.unique(r)


@dataclass(frozen=True)
class QuadratureGrid:
    """Polar nodes covering the support of the window of ``theta``.

    Radial nodes lie on the pieces (ramp up, plateau, ramp down) of blocks
    ``2 .. n_split - 1`` of both lobes, each piece carrying a tanh-sinh rule
    with fine and nested coarse weights. Blocks ``>= n_split`` form one tail
    interval per lobe, handled by the integrators. Offsets ``d_lo``/``d_hi``
    are distances (in bump-train units) to the piece ends.
    """
    theta: float
    d: int
    n_split: int
    level: int
    r: np.ndarray
    weight: np.ndarray
    coarse: np.ndarray
    lobe: np.ndarray
    block: np.ndarray
    phase: np.ndarray
    d_lo: np.ndarray
    d_hi: np.ndarray
    panel: np.ndarray
    tail: tuple            # ((lobe, r_start, r_end), ...)
    directions: np.ndarray
    dir_weights: np.ndarray

    @property
    def jacobian(self) -> np.ndarray:
        """``r**(d-1)`` at the radial nodes."""
        return self.r ** (self.d - 1)


def make_grid(theta: float, d: int, n_split: int = 64, level: int = 3, n_angular: int = 48,
              n_cap: int | None = None) -> QuadratureGrid:
    if n_split < 3:
        raise PreconditionError("n_split must be >= 3")
    base = BumpParams(0.5, theta) if n_cap is None else BumpParams(0.5, theta, n_cap)
    if n_split >= base.n_cap:
        raise PreconditionError("n_split must stay below n_cap")
    z = base.zeta_theta
    rule = tanh_sinh(level)
    n = np.arange(2, n_split)
    base.table.grow(n_split)
    a = base.table.a[: n.size]
    wd = n.astype(float) ** -theta
    pieces = []
    for k, ph in enumerate((Phase.RampUp, Phase.Plateau, Phase.RampDown)):
        pieces.append((a + k * wd, a + (k + 1) * wd, np.full(n.size, int(ph)), n))
    lo = np.concatenate([p[0] for p in pieces])
    hi = np.concatenate([p[1] for p in pieces])
    phase = np.concatenate([p[2] for p in pieces])
    block = np.concatenate([p[3] for p in pieces])
    x, d_lo, d_hi, wf, wc = panel_nodes(lo, hi, rule)
    n_p, n_n = x.shape
    rs, lobes = [], []
    for lobe, shift in ((1, 4.0), (-1, 8.0)):
        rs.append((x + shift * z) / (16 * z))
        lobes.append(np.full(x.shape, lobe))
    r = np.concatenate(rs).ravel()
    tile = lambda arr: np.concatenate([arr, arr]).ravel()  # noqa: E731
    rep = lambda arr: np.concatenate([np.repeat(arr[:, None], n_n, axis=1)] * 2).ravel()  # noqa: E731
    panel = np.concatenate([np.repeat(np.arange(n_p)[:, None], n_n, axis=1),
                            np.repeat(np.arange(n_p, 2 * n_p)[:, None], n_n, axis=1)]).ravel()
    a_k = float(base.table.a[n.size])
    tail = tuple((lobe, (a_k + s * z) / (16 * z), (base.a_inf + s * z) / (16 * z))
                 for lobe, s in ((1, 4.0), (-1, 8.0)))
    dirs, dw = sphere_rule(d, n_angular) if d > 1 else sphere_rule(1)
    return QuadratureGrid(theta, d, n_split, level, r, tile(wf) / (16 * z), tile(wc) / (16 * z),
                          np.concatenate(lobes).ravel(), rep(block), rep(phase),
                          tile(d_lo), tile(d_hi), panel, tail, dirs, dw)


def _window_on_grid(grid: QuadratureGrid, params: BumpParams):
    """Window ``v`` of ``params`` at the grid nodes, from piece offsets."""
    s, t = params.sigma, params.theta
    up = grid.phase == Phase.RampUp
    dn = grid.phase == Phase.RampDown
    val = np.where(up, grid.d_lo, np.where(dn, grid.d_hi, 0.0)) ** s
    val = np.where(grid.phase == Phase.Plateau, grid.block.astype(float) ** (-t * s), val)
    return grid.lobe * val


def _window_slope_on_grid(grid: QuadratureGrid, params: BumpParams):
    """Derivative ``dv/dr`` at the grid nodes (interior of every piece)."""
    s = params.sigma
    z16 = 16.0 * params.zeta_theta
    up = grid.phase == Phase.RampUp
    dn = grid.phase == Phase.RampDown
    slope = np.where(up, s * grid.d_lo ** (s - 1.0),
                     np.where(dn, -s * grid.d_hi ** (s - 1.0), 0.0))
    return grid.lobe * z16 * slope


def _spherical_means(grid: QuadratureGrid, r, func, radial_part: bool):
    """``r^{d-1} sum_j w_j F(r omega_j)`` where ``F`` is ``<omega, grad psi>`` or ``psi``."""
    r = np.asarray(r, dtype=float)
    dirs, dw = grid.directions, grid.dir_weights
    out = np.empty(r.size)
    step = max(1, _POINT_CHUNK // dirs.shape[0])
    for start in range(0, r.size, step):
        rr = r[start:start + step]
        pts = rr[:, None, None] * dirs[None, :, :]
        vals = func(pts.reshape(-1, grid.d))
        if radial_part:
            vals = np.sum(vals.reshape(rr.size, dirs.shape[0], grid.d) * dirs[None], axis=-1)
        else:
            vals = vals.reshape(rr.size, dirs.shape[0])
        out[start:start + step] = rr ** (grid.d - 1) * (vals @ dw)
    return out


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    discrepancy: float   # fine vs coarse difference on the head panels
    tail: float          # contribution of the tail intervals
    tail_error: float    # estimate (or bound) of the tail error
    magnitude: float = 0.0   # integral of |integrand| over the head panels

    def agrees_with(self, other: "QuadratureResult", rel: float) -> tuple[bool, float]:
        """Relative agreement; when ``other`` is exactly zero, relative to ``magnitude``."""
        diff = abs(self.value - other.value)
        scale = abs(other.value) if other.value != 0 else self.magnitude
        return diff <= rel * scale, diff / scale if scale > 0 else diff


def _check(fine, coarse, scale, tol, what):
    disc = abs(fine - coarse)
    if disc > tol * max(scale, 1e-300):
        raise GridTooCoarse(f"{what}: quadrature levels disagree by {disc:.3e} "
                            f"(value {fine:.6e})", estimate=fine, discrepancy=disc)
    return disc


def _check_grid(spec: RadialFieldSpec, grid: QuadratureGrid):
    if grid.d != spec.d or grid.theta != spec.bump.theta:
        raise PreconditionError("grid was built for a different (theta, d)")


def _dropped_tail_bound(spec: RadialFieldSpec, grid: QuadratureGrid, grad_bound: float) -> float:
    dual = spec.dual_bump
    mass = 2.0 * dual.tail_mass(grid.n_split) / (16.0 * dual.zeta_theta)
    return sphere_area(spec.d) * grad_bound * mass


def _tail_term(spec: RadialFieldSpec, grid: QuadratureGrid, G: Callable, mode: str = "exact-mass",
               psi: TestFunction | None = None):
    """Exact-mass rule on the tail: ``G(r_mid) * lobe * int v``, with a variation estimate.

    ``mode="drop"`` discards the tail instead and reports a bound for it.
    """
    if mode == "drop":
        return 0.0, _dropped_tail_bound(spec, grid, gradient_bound(psi))
    if mode != "exact-mass":
        raise DomainError(f"unknown tail mode {mode!r}")
    dual = spec.dual_bump
    mass = dual.tail_mass(grid.n_split) / (16.0 * dual.zeta_theta)
    total, err = 0.0, 0.0
    for lobe, r0, r1 in grid.tail:
        g0, gm, g1 = G(np.array([r0, 0.5 * (r0 + r1), r1]))
        total += lobe * mass * gm
        err += mass * max(abs(g1 - gm), abs(gm - g0))
    return total, err


def f_weak(psi: TestFunction, spec: RadialFieldSpec, grid: QuadratureGrid,
           tol: float = 1e-9, tail: str = "exact-mass") -> QuadratureResult:
    """``int v'(|x|) <x/|x|, grad psi(x)> dx`` with ``v'`` the dual window.

    ``tail="drop"`` truncates to the grid blocks, matching :func:`weak_lhs_integral`.
    """
    _check_grid(spec, grid)
    if psi.support_radius > 1.0:
        raise PreconditionError("test function must be supported in the unit ball")
    G = lambda r: _spherical_means(grid, r, psi.gradient, True)  # noqa: E731
    integrand = _window_on_grid(grid, spec.dual_bump) * G(grid.r)
    fine = math.fsum(grid.weight * integrand)
    coarse = math.fsum(grid.coarse * integrand)
    scale = float(np.sum(np.abs(grid.weight * integrand)))
    disc = _check(fine, coarse, scale, tol, "f_weak")
    tail_value, tail_err = _tail_term(spec, grid, G, tail, psi)
    return QuadratureResult(fine + tail_value, disc, tail_value, tail_err, scale)


def strong_form_integral(psi: TestFunction, spec: RadialFieldSpec, grid: QuadratureGrid,
                         tol: float = 1e-9, tail: str = "exact-mass") -> QuadratureResult:
    """``int f(|x|) psi(x) dx`` with the pointwise right-hand side ``f``.

    Meaningful when the derivative of the dual bump is integrable. On the tail
    blocks, integrating by parts block by block (``v`` vanishes at every block
    start) turns the integrand into the weak one, so the same exact-mass rule
    applies there.
    """
    _check_grid(spec, grid)
    dual = spec.dual_bump
    Psi = _spherical_means(grid, grid.r, psi.evaluator, False)
    f = -_window_slope_on_grid(grid, dual)
    if spec.d > 1:
        f = f - _window_on_grid(grid, dual) * (spec.d - 1) / grid.r
    integrand = f * Psi
    fine = math.fsum(grid.weight * integrand)
    coarse = math.fsum(grid.coarse * integrand)
    scale = float(np.sum(np.abs(grid.weight * integrand)))
    disc = _check(fine, coarse, scale, tol, "strong form")
    G = lambda r: _spherical_means(grid, r, psi.gradient, True)  # noqa: E731
    tail_value, tail_err = _tail_term(spec, grid, G, tail, psi)
    return QuadratureResult(fine + tail_value, disc, tail_value, tail_err, scale)


def weak_lhs_integral(psi: TestFunction, spec: RadialFieldSpec, grid: QuadratureGrid,
                      tol: float = 1e-9, grad_bound: float | None = None) -> QuadratureResult:
    """``int <|grad u|^{p-2} grad u, grad psi> dx`` evaluated literally at Cartesian points.

    The gradient comes from :func:`eval_grad_u_d` with the original bump and
    the flux from :func:`flux_from_gradient`; nothing here uses the dual
    bump. Blocks beyond the grid are dropped; ``tail_error`` bounds them by
    ``|S^{d-1}| * max|grad psi| * int_tail |v'| dr`` (the radius factor is at most 1).
    """
    _check_grid(spec, grid)
    dirs, dw = grid.directions, grid.dir_weights
    vals = np.empty(grid.r.size)
    step = max(1, _POINT_CHUNK // dirs.shape[0])
    for start in range(0, grid.r.size, step):
        rr = grid.r[start:start + step]
        pts = (rr[:, None, None] * dirs[None, :, :]).reshape(-1, grid.d)
        flux = flux_from_gradient(eval_grad_u_d(pts, spec), spec.p)
        dot = np.sum(flux * psi.gradient(pts), axis=-1).reshape(rr.size, -1)
        vals[start:start + step] = rr ** (grid.d - 1) * (dot @ dw)
    fine = math.fsum(grid.weight * vals)
    coarse = math.fsum(grid.coarse * vals)
    scale = float(np.sum(np.abs(grid.weight * vals)))
    disc = _check(fine, coarse, scale, tol, "weak left side")
    if grad_bound is None:
        grad_bound = gradient_bound(psi)
    return QuadratureResult(fine, disc, 0.0, _dropped_tail_bound(spec, grid, grad_bound), scale)


def gradient_bound(psi: TestFunction, n: int = 400) -> float:
    """Sampled ``max |grad psi|`` on ``1/4 <= |x| <= 3/4`` (with a 10% margin)."""
    dirs, _ = sphere_rule(psi.d, 32) if psi.d > 1 else sphere_rule(1)
    r = np.linspace(0.25, 0.75, n)
    pts = (r[:, None, None] * dirs[None]).reshape(-1, psi.d)
    g = psi.gradient(pts)
    return 1.1 * float(np.max(np.sqrt(np.sum(g * g, axis=-1))))


def blocks_for_tail(spec: RadialFieldSpec, grad_bound: float, target: float,
                    n_max: int = 1 << 16) -> int:
    """Smallest power-of-two ``n_split`` whose dropped-tail bound is below ``target``."""
    dual = spec.dual_bump
    n = 16
    while n < n_max:
        mass = 2.0 * dual.tail_mass(n) / (16.0 * dual.zeta_theta)
        if sphere_area(spec.d) * grad_bound * mass <= target:
            return n
        n *= 2
    return n_max


# ---------------------------------------------------------------------------
# norms

def radial_lp_norm(g: Callable, rho: float, d: int, breakpoints: Sequence[float] | None = None,
                   *, level: int = 4, n_uniform: int = 64) -> float:
    """``L_rho(R^d)`` norm of the radial function ``x -> g(|x|)``, ``g`` supported in [1/4, 3/4].

    The radial integral is split at ``breakpoints`` (uniform panels if
    omitted). ``rho = inf`` returns the largest ``|g|`` over all nodes and edges.
    """
    if not rho > 0:
        raise DomainError("rho must be positive")
    if int(d) != d or d < 1:
        raise DomainError("d must be a positive integer")
    pts = np.linspace(0.25, 0.75, n_uniform + 1) if breakpoints is None else breakpoints
    edges = unique_edges(pts, 0.25, 0.75)
    rule = tanh_sinh(level)
    if math.isinf(rho):
        x, *_ = panel_nodes(edges[:-1], edges[1:], rule)
        return float(max(np.max(np.abs(g(x.ravel()))), np.max(np.abs(g(edges)))))
    f = lambda r: np.abs(g(r)) ** rho * r ** (d - 1)  # noqa: E731
    fine, _ = integrate_panels(f, edges[:-1], edges[1:], rule)
    return (sphere_area(d) * math.fsum(fine)) ** (1.0 / rho)


def field_breakpoints(params: BumpParams, n_max: int = 256) -> np.ndarray:
    """Breakpoints for :func:`radial_lp_norm` of ``u`` or ``v`` of ``params``."""
    return pullback_points(params, n_max)


def f_dual_bound(spec: RadialFieldSpec, n_max: int = 256) -> float:
    """``|| |A(grad u)| ||_{L_{p'}}``, an upper bound for the dual norm of the right-hand side.

    Hoelder gives ``|f(psi)| <= f_dual_bound * || |grad psi| ||_{L_p}``.
    """
    p_dual = spec.p / (spec.p - 1.0)
    dual = spec.dual_bump
    return radial_lp_norm(lambda r: eval_v(r, dual), p_dual, spec.d,
                          field_breakpoints(dual, n_max))
