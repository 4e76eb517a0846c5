"""Exact evaluation of the one-dimensional bump train and its window functions.

For ``theta > 1`` the breakpoints are ``a_n = 4 * sum_{j<n} j**-theta``
(``n >= 2``), accumulating at ``a_inf = 4 zeta(theta)``. On
``[a_n, a_{n+1})`` the train ``w`` rises like ``(xi - a_n)**sigma`` over one
block width ``n**-theta``, stays at ``n**(-theta*sigma)`` for one width, falls
symmetrically for one width and vanishes on the last width.

``v(r) = w(16 z r - 4 z) - w(16 z r - 8 z)`` with ``z = zeta(theta)`` is the
two-lobed window supported in ``[1/4, 3/4]``, and ``u`` its antiderivative.

Blocks are tabulated lazily up to ``n_cap``; points in ``[a_{n_cap}, a_inf)``
evaluate to zero, an error bounded by ``n_cap**(-theta*sigma)``.
"""
from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, NotDifferentiable, PreconditionError, TruncationSaturated
from .zeta import CertifiedValue, zeta, zeta_minus_one, zeta_tail

DEFAULT_N_CAP = 10 ** 6
_INITIAL_BLOCKS = 1024


class Phase(enum.IntEnum):
    RampUp = 0
    Plateau = 1
    RampDown = 2
    Gap = 3
    OutsideLeft = 4
    OutsideRight = 5
    Saturated = 6  # internal: inside the untabulated tail


class Divergent:
    """Marker value for norms that are infinite."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Divergent"

    def __bool__(self):
        return False


DIVERGENT = Divergent()


class _BreakpointTable:
    """Lazily grown table ``a[k] = a_{k+2}``, at most up to ``a_{n_cap}``."""

    def __init__(self, theta: float, n_cap: int):
        self.theta = theta
        self.n_cap = n_cap
        self._lock = threading.Lock()
        self.a = np.array([4.0])          # a_2
        self._sum = np.longdouble(1.0)    # sum_{j < n} j^-theta for the last entry

    @property
    def full(self) -> bool:
        return self.a.size >= self.n_cap - 1

    def grow(self, size: int) -> None:
        """Ensure at least ``size`` entries (capped at ``a_{n_cap}``)."""
        size = min(size, self.n_cap - 1)
        if size <= self.a.size:
            return
        with self._lock:
            have = self.a.size
            if size <= have:
                return
            # a_{k+2} - a_{k+1} = 4 (k+1)^-theta
            j = np.arange(have + 1, size + 1, dtype=np.longdouble)
            incr = j ** np.longdouble(-self.theta)
            sums = self._sum + np.cumsum(incr)
            self._sum = sums[-1]
            # publish atomically: readers see either the old or the new array
            self.a = np.concatenate([self.a, (4 * sums).astype(float)])

    def cover(self, xi_max: float) -> None:
        while self.a[-1] <= xi_max and not self.full:
            self.grow(max(2 * self.a.size, _INITIAL_BLOCKS))


@lru_cache(maxsize=64)
def _breakpoints(theta: float, n_cap: int) -> _BreakpointTable:
    return _BreakpointTable(theta, n_cap)


class _MassTable:
    """Prefix masses ``W(a_n)`` synchronised with a breakpoint table."""

    def __init__(self, sigma: float, theta: float, table: _BreakpointTable):
        self.sigma = sigma
        self.theta = theta
        self.table = table
        self._lock = threading.Lock()
        self.prefix = np.array([0.0])
        self._sum = np.longdouble(0.0)

    def sync(self) -> np.ndarray:
        need = self.table.a.size
        if self.prefix.size >= need:
            return self.prefix
        with self._lock:
            have = self.prefix.size
            if have < need:
                n = np.arange(have + 1, need + 1, dtype=np.longdouble)
                c = np.longdouble(2.0 / (self.sigma + 1.0) + 1.0)
                incr = c * n ** np.longdouble(-self.theta * (self.sigma + 1.0))
                sums = self._sum + np.cumsum(incr)
                self._sum = sums[-1]
                self.prefix = np.concatenate([self.prefix, sums.astype(float)])
        return self.prefix


@lru_cache(maxsize=256)
def _masses(sigma: float, theta: float, n_cap: int) -> _MassTable:
    return _MassTable(sigma, theta, _breakpoints(theta, n_cap))


@dataclass(frozen=True)
class BumpParams:
    """The pair (sigma, theta) seeding one bump train, plus derived constants."""
    sigma: float
    theta: float
    n_cap: int = DEFAULT_N_CAP
    zeta_theta: float = field(init=False)
    zeta_error: float = field(init=False, repr=False)
    a_inf: float = field(init=False)
    tail_height_bound: float = field(init=False)

    def __post_init__(self):
        if not (self.theta > 1.0 and math.isfinite(self.theta)):
            raise DomainError(f"theta must exceed 1, got {self.theta!r}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if self.n_cap < 3:
            raise DomainError("n_cap must be at least 3")
        z = zeta(self.theta)
        object.__setattr__(self, "zeta_theta", z.value)
        object.__setattr__(self, "zeta_error", z.error)
        object.__setattr__(self, "a_inf", 4.0 * z.value)
        object.__setattr__(self, "tail_height_bound",
                           float(self.n_cap) ** (-self.theta * self.sigma))

    def with_sigma(self, sigma: float) -> "BumpParams":
        return BumpParams(sigma, self.theta, self.n_cap)

    @property
    def table(self) -> _BreakpointTable:
        return _breakpoints(self.theta, self.n_cap)

    @property
    def masses(self) -> _MassTable:
        return _masses(self.sigma, self.theta, self.n_cap)

    def block_width(self, n):
        return np.asarray(n, dtype=float) ** -self.theta

    def block_mass(self, n):
        """``int w`` over block ``n``."""
        return (2.0 / (self.sigma + 1.0) + 1.0) * np.asarray(n, dtype=float) ** (
            -self.theta * (self.sigma + 1.0))

    def total_mass(self) -> CertifiedValue:
        c = 2.0 / (self.sigma + 1.0) + 1.0
        z = zeta_minus_one(self.theta * (self.sigma + 1.0))
        return CertifiedValue(c * z.value, c * z.error)

    def tail_mass(self, n: int, power: float = 1.0) -> float:
        """``int w**power`` over all blocks ``>= n``."""
        sr = self.sigma * power
        c = 2.0 / (sr + 1.0) + 1.0
        return c * zeta_tail(self.theta * (sr + 1.0), int(n)).value


@dataclass(frozen=True)
class SegmentLocator:
    block_index: int
    phase: Phase
    local_offset: float
    block_width: float


def breakpoint(n: int, params: BumpParams) -> float:
    """``a_n``; ``breakpoint(2, .) == 4``."""
    if n < 2:
        raise PreconditionError("breakpoint index must be >= 2")
    if n <= params.n_cap:
        table = params.table
        table.grow(n - 1)
        return float(table.a[n - 2])
    # beyond the table: a_n = 4 (zeta(theta) - sum_{j >= n} j^-theta)
    return 4.0 * (params.zeta_theta - zeta_tail(params.theta, n).value)


def _locate_arrays(xi, params: BumpParams):
    """Vectorised locate: (block n, phase code, offset, width) arrays."""
    xi = np.asarray(xi, dtype=float)
    table = params.table
    inside = (xi >= 4.0) & (xi < params.a_inf)
    if np.any(inside):
        table.cover(float(np.max(xi[inside])))
    a = table.a
    idx = np.searchsorted(a, xi, side="right") - 1
    last = params.n_cap - 3          # index of block n_cap - 1, the last evaluated one
    sat = inside & (idx > last)
    idx = np.clip(idx, 0, min(last, a.size - 1))
    n = idx + 2
    width = n.astype(float) ** -params.theta
    offset = xi - a[idx]
    phase = np.where(offset < width, Phase.RampUp,
                     np.where(offset < 2 * width, Phase.Plateau,
                              np.where(offset < 3 * width, Phase.RampDown, Phase.Gap)))
    phase = np.where(xi < 4.0, Phase.OutsideLeft, phase)
    phase = np.where(xi >= params.a_inf, Phase.OutsideRight, phase)
    phase = np.where(sat, Phase.Saturated, phase)
    return n, phase.astype(np.int8), offset, width


def locate(xi: float, params: BumpParams) -> SegmentLocator:
    """Resolve ``xi`` to its block and phase.

    Raises :class:`TruncationSaturated` inside ``[a_{n_cap}, a_inf)``.
    """
    n, phase, offset, width = _locate_arrays(np.array([xi], dtype=float), params)
    ph = Phase(int(phase[0]))
    if ph is Phase.Saturated:
        raise TruncationSaturated(xi, params.tail_height_bound)
    if ph in (Phase.OutsideLeft, Phase.OutsideRight):
        return SegmentLocator(0, ph, math.nan, math.nan)
    return SegmentLocator(int(n[0]), ph, float(offset[0]), float(width[0]))


def _piece_values(n, phase, offset, width, sigma, theta):
    out = np.zeros(np.shape(offset))
    up = phase == Phase.RampUp
    out[up] = np.maximum(offset[up], 0.0) ** sigma
    pl = phase == Phase.Plateau
    out[pl] = n[pl].astype(float) ** (-theta * sigma)
    dn = phase == Phase.RampDown
    out[dn] = np.maximum(3 * width[dn] - offset[dn], 0.0) ** sigma
    return out


def _locate_scalar(xi: float, params: BumpParams):
    """Scalar version of :func:`_locate_arrays` without array overhead."""
    if xi < 4.0 or xi >= params.a_inf:
        return 0, Phase.OutsideLeft if xi < 4.0 else Phase.OutsideRight, 0.0, 0.0
    table = params.table
    if table.a[-1] <= xi:
        table.cover(xi)
    a = table.a
    idx = int(a.searchsorted(xi, side="right")) - 1
    if idx > params.n_cap - 3:
        return 0, Phase.Saturated, 0.0, 0.0
    n = idx + 2
    width = n ** -params.theta
    offset = xi - float(a[idx])
    phase = (Phase.RampUp if offset < width else Phase.Plateau if offset < 2 * width
             else Phase.RampDown if offset < 3 * width else Phase.Gap)
    return n, phase, offset, width


def _pow(t: float, e: float) -> float:
    if t <= 0.0:
        return math.inf if e < 0 else (1.0 if e == 0 else 0.0)
    return t ** e


def eval_w(xi, params: BumpParams):
    """Bump train value; scalar in, scalar out, arrays elementwise."""
    scalar = np.ndim(xi) == 0
    if scalar:
        n, phase, offset, width = _locate_scalar(float(xi), params)
        if phase is Phase.RampUp:
            return max(offset, 0.0) ** params.sigma
        if phase is Phase.Plateau:
            return n ** (-params.theta * params.sigma)
        if phase is Phase.RampDown:
            return max(3 * width - offset, 0.0) ** params.sigma
        return 0.0
    n, phase, offset, width = _locate_arrays(np.atleast_1d(xi), params)
    out = _piece_values(n, phase, offset, width, params.sigma, params.theta)
    return float(out[0]) if scalar else out.reshape(np.shape(xi))


def _near_transition(xi, n, phase, offset, width, params: BumpParams, snap):
    tol = snap * np.maximum(1.0, np.abs(xi))
    hit = np.zeros(np.shape(xi), dtype=bool)
    blk = (phase <= Phase.Gap)
    for k in range(5):
        hit |= blk & (np.abs(offset - k * width) <= tol)
    hit |= np.abs(xi - 4.0) <= tol
    hit |= np.abs(xi - params.a_inf) <= tol
    return hit


def eval_w_prime(xi, params: BumpParams, snap: float | None = 1e-14):
    """Derivative of ``w`` off the transition set.

    Raises :class:`NotDifferentiable` if any point is within
    ``snap * max(1, |xi|)`` of a transition point. ``snap=None`` skips the
    check and returns the right-sided derivative at transitions.
    """
    scalar = np.ndim(xi) == 0
    s = params.sigma
    if scalar and snap is None:
        n, phase, offset, width = _locate_scalar(float(xi), params)
        if phase is Phase.RampUp:
            return s * _pow(offset, s - 1.0)
        if phase is Phase.RampDown:
            return -s * _pow(3 * width - offset, s - 1.0)
        return 0.0
    x = np.atleast_1d(np.asarray(xi, dtype=float))
    n, phase, offset, width = _locate_arrays(x, params)
    if snap is not None and np.any(_near_transition(x, n, phase, offset, width, params, snap)):
        raise NotDifferentiable(f"derivative undefined at transition point(s) near {xi!r}")
    out = np.zeros(x.shape)
    up = phase == Phase.RampUp
    out[up] = s * offset[up] ** (s - 1.0)
    dn = phase == Phase.RampDown
    out[dn] = -s * (3 * width[dn] - offset[dn]) ** (s - 1.0)
    return float(out[0]) if scalar else out.reshape(np.shape(xi))


def cumulative_w(xi, params: BumpParams):
    """``W(xi) = int_{-inf}^{xi} w``, from prefix block masses and in-block closed forms.

    In the saturated tail (and beyond ``a_inf``) this returns the mass of all
    evaluated blocks, so ``W`` stays the exact antiderivative of the evaluated
    train.
    """
    scalar = np.ndim(xi) == 0
    x = np.atleast_1d(np.asarray(xi, dtype=float))
    n, phase, offset, width = _locate_arrays(x, params)
    prefix = params.masses.sync()
    s1 = params.sigma + 1.0
    top = width ** s1 / s1          # one full ramp
    height = n.astype(float) ** (-params.theta * params.sigma)
    base = prefix[n - 2]
    inner = np.zeros(x.shape)
    up = phase == Phase.RampUp
    inner[up] = offset[up] ** s1 / s1
    pl = phase == Phase.Plateau
    inner[pl] = top[pl] + height[pl] * (offset[pl] - width[pl])
    dn = phase == Phase.RampDown
    rest = np.maximum(3 * width[dn] - offset[dn], 0.0)
    inner[dn] = top[dn] + height[dn] * width[dn] + (top[dn] - rest ** s1 / s1)
    gp = phase == Phase.Gap
    inner[gp] = 2 * top[gp] + height[gp] * width[gp]
    out = base + inner
    out[phase == Phase.OutsideLeft] = 0.0
    far = (phase == Phase.OutsideRight) | (phase == Phase.Saturated)
    if np.any(far):
        out[far] = _evaluated_mass(params)
    return float(out[0]) if scalar else out.reshape(np.shape(xi))


def _evaluated_mass(params: BumpParams) -> float:
    """Mass of blocks ``2 .. n_cap - 1``, i.e. ``W`` beyond the last evaluated block.

    Uses the prefix table once it is complete; otherwise the zeta closed form,
    which avoids building a table of ``n_cap`` entries for points off the support.
    """
    if params.table.full:
        return float(params.masses.sync()[params.n_cap - 2])
    return _closed_evaluated_mass(params)


@lru_cache(maxsize=256)
def _closed_evaluated_mass(params: BumpParams) -> float:
    return float(params.total_mass()) - params.tail_mass(params.n_cap)


def w_lp_norm(rho: float, params: BumpParams) -> float:
    """Closed-form ``||w||_{L_rho}``; ``rho = inf`` gives ``2**(-sigma*theta)``."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    s, t = params.sigma, params.theta
    if math.isinf(rho):
        return 2.0 ** (-s * t)
    c = 2.0 / (s * rho + 1.0) + 1.0
    return (c * zeta_minus_one(t * (s * rho + 1.0)).value) ** (1.0 / rho)


# ratios within this relative distance of the boundary count as on it (divergent);
# e.g. 1 - sigma = (1 - 1/theta)/mu with rho = mu only holds up to rounding
BOUNDARY_RTOL = 1e-13


def w_prime_finite(rho: float, sigma: float, theta: float) -> bool:
    """Whether ``w'`` lies in ``L_rho``: ``sigma >= 1`` or ``(1-sigma)/(1-1/theta) < 1/rho``."""
    if sigma >= 1.0:
        return True
    if math.isinf(rho):
        return False
    return (1.0 - sigma) / (1.0 - 1.0 / theta) < (1.0 / rho) * (1.0 - BOUNDARY_RTOL)


def w_prime_lp_norm(rho: float, params: BumpParams):
    """Closed-form ``||w'||_{L_rho}`` or :data:`DIVERGENT`."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    s, t = params.sigma, params.theta
    if not w_prime_finite(rho, s, t):
        return DIVERGENT
    if math.isinf(rho):
        # sup of s * x**(s-1) over x in (0, 2**-theta]
        return s * 2.0 ** (-t * (s - 1.0)) if s > 1.0 else 1.0
    if s >= 1.0:
        e = 1.0 + (s - 1.0) * rho
        arg = t * e
        z = zeta_minus_one(arg)
    else:
        # zeta argument minus one, kept exact near the divergence boundary
        gap = 1.0 / rho - (1.0 - s) / (1.0 - 1.0 / t)
        e = 1.0 + (s - 1.0) * rho
        z = zeta_minus_one(1.0 + (t - 1.0) * rho * gap, s_minus_one=(t - 1.0) * rho * gap)
    return (2.0 * s ** rho / e * z.value) ** (1.0 / rho)


def _window_args(r, params: BumpParams):
    r = np.asarray(r, dtype=float)
    z16 = 16.0 * params.zeta_theta
    return z16 * r - 4.0 * params.zeta_theta, z16 * r - 8.0 * params.zeta_theta


def eval_v(r, params: BumpParams):
    """Two-lobed window ``w(16 z r - 4 z) - w(16 z r - 8 z)``."""
    first, second = _window_args(r, params)
    out = np.asarray(eval_w(first, params)) - np.asarray(eval_w(second, params))
    return float(out) if np.ndim(r) == 0 else out


def eval_v_prime(r, params: BumpParams, snap: float | None = 1e-14):
    first, second = _window_args(r, params)
    z16 = 16.0 * params.zeta_theta
    out = z16 * (np.asarray(eval_w_prime(first, params, snap))
                 - np.asarray(eval_w_prime(second, params, snap)))
    return float(out) if np.ndim(r) == 0 else out


def eval_u(r, params: BumpParams):
    """``u(r) = int_0^r v``; vanishes on ``(0, 1/4]`` and ``[3/4, inf)``."""
    first, second = _window_args(r, params)
    out = (np.asarray(cumulative_w(first, params))
           - np.asarray(cumulative_w(second, params))) / (16.0 * params.zeta_theta)
    return float(out) if np.ndim(r) == 0 else out


def transition_points(params: BumpParams, n_max: int) -> np.ndarray:
    """Points ``a_n + k n**-theta`` (``k = 0..3``) for ``2 <= n < n_max``, plus ``a_{n_max}``.

    ``n_max`` is capped at ``n_cap``.
    """
    n_max = min(int(n_max), params.n_cap)
    table = params.table
    table.grow(n_max - 1)
    n = np.arange(2, n_max)
    a = table.a[: n_max - 1]
    wd = n.astype(float) ** -params.theta
    pts = (a[:-1, None] + np.arange(4)[None, :] * wd[:, None]).ravel()
    return np.append(pts, a[-1])


@dataclass(frozen=True)
class BlockMassTable:
    """Prefix masses ``prefix_mass[k] = W(a_{k+2})`` over the tabulated blocks."""
    params: BumpParams
    prefix_mass: np.ndarray
    total_mass: CertifiedValue

    def block_mass(self, n):
        return self.params.block_mass(n)


def block_mass_table(params: BumpParams, n_max: int | None = None) -> BlockMassTable:
    """Snapshot of the prefix-mass table covering at least blocks ``< n_max``."""
    if n_max is not None:
        params.table.grow(min(int(n_max), params.n_cap) - 1)
    prefix = params.masses.sync()
    return BlockMassTable(params, prefix.copy(), params.total_mass())
