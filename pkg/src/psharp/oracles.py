"""Independent numerical references for the closed-form norms.

The first ``n_head`` blocks are integrated piece by piece with adaptive
Gauss-Kronrod (``scipy.integrate.quad``) applied to the pointwise
evaluators. Every later block is a rescaled copy of one reference block, so
their total is a Hurwitz zeta value (``scipy.special.zeta``) times a
quadrature of the reference shape.
"""
from __future__ import annotations

import warnings

from scipy import integrate, special

from .construction import BumpParams, breakpoint, eval_w, eval_w_prime

_QUAD = dict(epsabs=0.0, epsrel=1e-12, limit=200)


def _quad(f, lo, hi, **kw):
    # roundoff warnings near the 1e-12 target are expected and harmless here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, lo, hi, **_QUAD, **kw)[0]


def _shape(t, sigma):
    """Reference block of width 1 per piece: t^s, 1, (3-t)^s, 0 on [0, 4)."""
    if t < 1:
        return t ** sigma
    if t < 2:
        return 1.0
    if t < 3:
        return (3.0 - t) ** sigma
    return 0.0


def _pieces(n, params):
    a = breakpoint(n, params)
    wd = n ** -params.theta
    return [(a + k * wd, a + (k + 1) * wd) for k in range(3)]


def w_power_integral(rho: float, params: BumpParams, n_head: int = 40) -> float:
    """``int w**rho`` over the real line."""
    s, t = params.sigma, params.theta
    head = 0.0
    for n in range(2, n_head):
        for lo, hi in _pieces(n, params):
            head += _quad(lambda x: eval_w(x, params) ** rho, lo, hi)
    ref = sum(_quad(lambda u: _shape(u, s) ** rho, k, k + 1)
              for k in range(3))
    # block n is the reference block scaled by n^-theta in x and n^-(theta s) in height
    tail = ref * special.zeta(t * (s * rho + 1.0), n_head)
    return head + tail


def w_lp_norm_oracle(rho: float, params: BumpParams, n_head: int = 40) -> float:
    return w_power_integral(rho, params, n_head) ** (1.0 / rho)


def w_prime_power_integral(rho: float, params: BumpParams, n_head: int = 40) -> float:
    """``int |w'|**rho``; only meaningful where the closed form is finite."""
    s, t = params.sigma, params.theta
    head = 0.0
    for n in range(2, n_head):
        up, _, down = _pieces(n, params)
        for lo, hi in (up, down):
            head += _quad(lambda x: abs(eval_w_prime(x, params, snap=None)) ** rho, lo, hi)
    e = (s - 1.0) * rho
    # reference ramp: int_0^1 (s u^{s-1})^rho du, integrand u^e has an endpoint singularity
    ref = 2.0 * s ** rho * _quad(lambda u: 1.0, 0.0, 1.0, weight="alg", wvar=(e, 0.0))
    tail = ref * special.zeta(t * (1.0 + e), n_head)
    return head + tail


def w_prime_lp_norm_oracle(rho: float, params: BumpParams, n_head: int = 40) -> float:
    return w_prime_power_integral(rho, params, n_head) ** (1.0 / rho)


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


__all__ = ["w_power_integral", "w_lp_norm_oracle", "w_prime_power_integral",
           "w_prime_lp_norm_oracle", "relative_error"]
