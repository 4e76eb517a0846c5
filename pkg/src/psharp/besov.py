"""First-order difference moduli, their scaling exponents, and CSV I/O.

``diff_norm`` measures ``||g(. + h) - g||_{L_rho(window)}`` for a 1-D
function by splitting the window at the breakpoints of ``g`` and their
``h``-shifts, so that both ``g(x)`` and ``g(x + h)`` are single closed-form
pieces on every panel. Roots of the difference are split out as well, which
keeps ``|.|**rho`` smooth on each panel.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .construction import (BumpParams, _locate_arrays, _piece_values, breakpoint, cumulative_w, eval_w,
                           transition_points)
from .errors import GridTooCoarse, InsufficientSamples, OutOfValidity, PreconditionError
from .quadrature import integrate_panels, split_sign_changes, tanh_sinh, unique_edges


class Method(str, enum.Enum):
    ClosedForm = "ClosedForm"
    GridQuadrature = "GridQuadrature"
    SupSampling = "SupSampling"


@dataclass(frozen=True)
class ModulusSample:
    """One measured value of ``||Delta_h g||_{L_rho}``.

    ``tail_bound`` bounds how far the true norm can exceed ``value`` because
    of truncation; ``error`` is the quadrature or sampling uncertainty.
    """
    h: float
    rho: float
    value: float
    method: Method
    tail_bound: float = 0.0
    error: float = 0.0

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"modulus value must be non-negative, got {self.value!r}")


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    h_range: tuple[float, float]
    sample_count: int


@dataclass(frozen=True)
class BlockCounter:
    """Number of whole blocks resolved by the step ``h``: ``ceil(h**(-1/theta) / 3)``."""
    h: float
    theta: float

    @property
    def N_h(self) -> int:
        return block_count(self.h, self.theta)


def block_count(h: float, theta: float) -> int:
    return math.ceil(h ** (-1.0 / theta) / 3.0)


def t_bar(theta: float) -> float:
    """Largest step for which the counting argument applies, ``(1/6)**theta``."""
    return (1.0 / 6.0) ** theta


def dyadic_steps(theta: float, j_max: int = 16) -> list[float]:
    """``2**-j`` for ``j`` from ``ceil(log2 6**theta)`` to ``j_max``."""
    j0 = math.ceil(theta * math.log2(6.0))
    return [2.0 ** -j for j in range(j0, j_max + 1)]


# ---------------------------------------------------------------------------
# generic difference norms

def _panel_edges(g, h, window, breakpoints, n_uniform):
    lo, hi = window
    if breakpoints is None:
        pts = np.linspace(lo, hi, n_uniform + 1)
    else:
        bp = np.asarray(breakpoints, dtype=float)
        pts = np.concatenate([bp, bp - h])
    edges = unique_edges(pts, lo, hi)
    edges = _grade(edges, h)
    diff = lambda x: g(x + h) - g(x)  # noqa: E731
    return split_sign_changes(diff, edges), diff


def _grade(edges, h, ratio=4.0):
    """Refine panels longer than ``4h`` geometrically towards both ends.

    On such panels the shifted piece brings a length scale ``h`` next to an
    endpoint; grading at ``h * ratio**k`` resolves it.
    """
    length = np.diff(edges)
    long = np.nonzero(length > ratio * h)[0]
    if long.size == 0:
        return edges
    k_max = int(np.ceil(np.log(length[long].max() / h) / np.log(ratio)))
    steps = h * ratio ** np.arange(k_max)
    left = edges[long][:, None] + steps[None, :]
    right = edges[long + 1][:, None] - steps[None, :]
    half = (0.5 * length[long])[:, None]
    extra = np.concatenate([left[steps[None, :] < half], right[steps[None, :] < half]])
    return np.unique(np.concatenate([edges, extra]))


def diff_integral(g: Callable, h: float, rho: float, window: tuple[float, float],
                  breakpoints=None, *, level: int = 3, tol: float = 1e-10,
                  n_uniform: int = 64) -> tuple[float, float]:
    """``int_window |g(x+h) - g(x)|**rho dx`` and its two-resolution discrepancy.

    ``g`` must be vectorised. Raises :class:`GridTooCoarse` if the fine and
    coarse rules differ by more than ``tol`` relative to the result.
    """
    if not h > 0:
        raise PreconditionError("h must be positive")
    if not (0 < rho < math.inf):
        raise PreconditionError("diff_integral needs finite rho > 0")
    edges, diff = _panel_edges(g, h, window, breakpoints, n_uniform)
    f = lambda x: np.abs(diff(x)) ** rho  # noqa: E731
    fine, coarse = integrate_panels(f, edges[:-1], edges[1:], tanh_sinh(level))
    value = math.fsum(fine)
    disc = float(np.sum(np.abs(fine - coarse)))
    if disc > tol * max(abs(value), 1e-300):
        raise GridTooCoarse(f"quadrature levels disagree by {disc:.3e} (value {value:.6e})",
                            estimate=value, discrepancy=disc)
    return value, disc


def diff_norm(g: Callable, h: float, rho: float, window: tuple[float, float],
              breakpoints=None, *, holder: tuple[float, float] | None = None,
              sup_spacing: float | None = None, level: int = 3, tol: float = 1e-10,
              n_uniform: int = 64) -> ModulusSample:
    """``||g(. + h) - g||_{L_rho(window)}`` for a vectorised 1-D function ``g``.

    Panels are split at ``breakpoints`` and ``breakpoints - h`` (uniformly if
    none are given). For ``rho = inf`` the supremum is taken over all panel
    edges and a dense grid of spacing ``sup_spacing``; if ``holder = (C, alpha)``
    bounds ``|g(x) - g(y)| <= C |x - y|**alpha``, the sample's ``error``
    certifies ``sup - value <= 2 C spacing**alpha``.
    """
    if math.isinf(rho):
        edges, diff = _panel_edges(g, h, window, breakpoints, n_uniform)
        lo, hi = window
        spacing = sup_spacing if sup_spacing is not None else (hi - lo) / 4096
        n = max(2, math.ceil((hi - lo) / spacing) + 1)
        dense = np.linspace(lo, hi, n)
        value = max(float(np.max(np.abs(diff(edges)))), float(np.max(np.abs(diff(dense)))))
        err = 2.0 * holder[0] * ((hi - lo) / (n - 1)) ** holder[1] if holder else math.nan
        return ModulusSample(h, rho, value, Method.SupSampling, error=err)
    integral, disc = diff_integral(g, h, rho, window, breakpoints, level=level, tol=tol,
                                   n_uniform=n_uniform)
    value = integral ** (1.0 / rho)
    err = value * disc / integral / rho if integral > 0 else 0.0
    return ModulusSample(h, rho, value, Method.GridQuadrature, error=err)


# ---------------------------------------------------------------------------
# the bump train

def exact_gap_diff(n: int, h: float, rho: float, params: BumpParams) -> float:
    """``rho``-th power of ``||Delta_h w||`` over the gap of block ``n``: ``h**(s rho+1)/(s rho+1)``."""
    if n < 2:
        raise PreconditionError("n must be >= 2")
    if not (0 < h <= (n + 1) ** -params.theta):
        raise PreconditionError(f"need 0 < h <= (n+1)**-theta = {(n + 1) ** -params.theta:.6g}")
    e = params.sigma * rho + 1.0
    return h ** e / e


def gap_window(n: int, params: BumpParams) -> tuple[float, float]:
    a = breakpoint(n, params)
    wd = n ** -params.theta
    return a + 3 * wd, breakpoint(n + 1, params)


def gap_diff_norm(n: int, h: float, rho: float, params: BumpParams, **kw) -> ModulusSample:
    """``diff_norm`` of ``w`` restricted to the gap of block ``n``."""
    pts = transition_points(params, n + 3)
    return diff_norm(lambda x: eval_w(x, params), h, rho, gap_window(n, params), pts, **kw)


def predicted_exponent(rho: float, params: BumpParams) -> float:
    """Critical smoothness ``sigma + (1 - 1/theta)/rho`` inside its validity region."""
    s, t = params.sigma, params.theta
    inv = 0.0 if math.isinf(rho) else 1.0 / rho
    if not 0 < s < 1.0 / t:
        raise OutOfValidity(f"need 0 < sigma < 1/theta, got sigma={s}, 1/theta={1 / t}")
    bound = min(t * (1.0 + s), (1.0 - s) / (1.0 - 1.0 / t))
    if not 0 <= inv < bound:
        raise OutOfValidity(f"need 0 <= 1/rho < {bound:.6g}, got 1/rho={inv:.6g}")
    return s + (1.0 - 1.0 / t) * inv


def _tail_integral(params: BumpParams, rho: float, start: float, k_end: int) -> float:
    """``int_start^inf w**rho`` where ``start <= a_{k_end}``, using ``w**rho = w_{sigma rho}``."""
    pw = params.with_sigma(params.sigma * rho)
    a_k = breakpoint(k_end, pw)
    head = float(cumulative_w(a_k, pw) - cumulative_w(start, pw)) if start < a_k else 0.0
    return head + pw.tail_mass(k_end)


def w_diff_norm(params: BumpParams, h: float, rho: float, *, block_factor: float = 16,
                min_blocks: int = 32, level: int = 3, tol: float = 1e-6) -> ModulusSample:
    """``||Delta_h w||_{L_rho(R)}`` with blocks ``>= K`` bounded instead of integrated.

    ``K = max(min_blocks, block_factor * N(h))`` (capped below ``n_cap``), so the
    truncated share is the same at every scale. ``tail_bound`` is a rigorous
    bound on ``true - value``. For ``rho = inf`` the sup over all panel edges
    is exact on the resolved part since the difference is monotone per panel.
    """
    if not h > 0:
        raise PreconditionError("h must be positive")
    K = int(min(max(min_blocks, math.ceil(block_factor * block_count(h, params.theta))),
                params.n_cap - 1))
    pts = transition_points(params, K)
    a_k = pts[-1]
    window = (4.0 - h, a_k - h)
    g = lambda x: eval_w(x, params)  # noqa: E731
    if math.isinf(rho):
        edges, diff = _panel_edges(g, h, window, pts, 0)
        value = float(np.max(np.abs(diff(edges))))
        # |Delta| <= sup w on [a_K - h, inf), which is the height of the block holding a_K - h
        m = int(_locate_arrays(np.array([a_k - h]), params)[0][0])
        rest = float(m) ** (-params.theta * params.sigma)
        return ModulusSample(h, rho, value, Method.SupSampling,
                             tail_bound=max(0.0, rest - value))
    edges, _ = _panel_edges(g, h, window, pts, 0)
    integral, disc = _w_panel_integral(params, h, rho, edges, level, tol)
    # |a - b|**rho <= a**rho + b**rho for a, b >= 0
    tail = _tail_integral(params, rho, a_k, K) + _tail_integral(params, rho, a_k - h, K)
    value = integral ** (1.0 / rho)
    return ModulusSample(h, rho, value, Method.GridQuadrature,
                         tail_bound=(integral + tail) ** (1.0 / rho) - value,
                         error=value * disc / integral / rho)


def _w_panel_integral(params: BumpParams, h, rho, edges, level, tol):
    """Integrate ``|w(x+h) - w(x)|**rho`` over panels on which both terms are single pieces.

    Pieces are resolved once per panel (at the midpoint) and node values are
    computed from offsets to the nearer panel end.
    """
    left, right = edges[:-1], edges[1:]
    mid = 0.5 * (left + right)
    n0, ph0, _, wd0 = _locate_arrays(mid, params)
    n1, ph1, _, wd1 = _locate_arrays(mid + h, params)
    a = params.table.a
    l0, r0 = left - a[n0 - 2], right - a[n0 - 2]
    l1, r1 = (left + h) - a[n1 - 2], (right + h) - a[n1 - 2]
    s, t = params.sigma, params.theta

    def f(x, d_lo, d_hi, idx):
        near_left = d_lo <= d_hi
        off0 = np.where(near_left, l0[idx] + d_lo, r0[idx] - d_hi)
        off1 = np.where(near_left, l1[idx] + d_lo, r1[idx] - d_hi)
        v0 = _piece_values(n0[idx], ph0[idx], off0, wd0[idx], s, t)
        v1 = _piece_values(n1[idx], ph1[idx], off1, wd1[idx], s, t)
        return np.abs(v1 - v0) ** rho

    fine, coarse = integrate_panels(f, left, right, tanh_sinh(level), with_offsets=True)
    value = math.fsum(fine)
    disc = float(np.sum(np.abs(fine - coarse)))
    if disc > tol * max(abs(value), 1e-300):
        raise GridTooCoarse(f"quadrature levels disagree by {disc:.3e} (value {value:.6e})",
                            estimate=value, discrepancy=disc)
    return value, disc


def modulus_sweep(params: BumpParams, rho_list: Sequence[float], h_list: Sequence[float],
                  *, workers: int | None = None, **kw) -> list[ModulusSample]:
    """``w_diff_norm`` over the grid ``rho_list x h_list`` (optionally threaded)."""
    jobs = [(rho, h) for rho in rho_list for h in h_list]
    run = lambda job: w_diff_norm(params, job[1], job[0], **kw)  # noqa: E731
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


# ---------------------------------------------------------------------------
# regression

def fit_exponent(samples: Iterable[ModulusSample], min_samples: int = 6) -> ExponentFit:
    """Least-squares slope of ``log value`` against ``log h``."""
    samples = list(samples)
    if len(samples) < min_samples:
        raise InsufficientSamples(f"need at least {min_samples} samples, got {len(samples)}")
    h = np.array([s.h for s in samples], dtype=float)
    v = np.array([s.value for s in samples], dtype=float)
    if np.any(v <= 0) or np.any(h <= 0):
        raise InsufficientSamples("log-log fit needs positive steps and values")
    x, y = np.log(h), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return ExponentFit(float(slope), float(intercept), residual,
                       (float(h.min()), float(h.max())), len(samples))


# ---------------------------------------------------------------------------
# CSV

CSV_COLUMNS = ("h", "rho", "value", "method")


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else format(x, ".17g")


def write_samples_csv(samples: Iterable[ModulusSample], dest=None) -> str:
    """Write ``h,rho,value,method`` rows; returns the text and writes it to ``dest`` if given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in samples:
        writer.writerow([_fmt(s.h), _fmt(s.rho), _fmt(s.value), Method(s.method).value])
    text = buf.getvalue()
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w", newline="") as fh:
                fh.write(text)
    return text


def read_samples_csv(src) -> list[ModulusSample]:
    if hasattr(src, "read"):
        text = src.read()
    else:
        with open(src, newline="") as fh:
            text = fh.read()
    rows = csv.DictReader(io.StringIO(text))
    if tuple(rows.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {rows.fieldnames!r}")
    return [ModulusSample(float(r["h"]), float(r["rho"]), float(r["value"]), Method(r["method"]))
            for r in rows]
