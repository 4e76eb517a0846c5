"""Riemann zeta values for real arguments > 1 with a certified error bound.

The series is summed directly up to ``N`` and the remainder is replaced by
its Euler-Maclaurin expansion. The rigorous remainder estimate

    |R_m| <= |B_2m| / (2m)! * |f^(2m-1)(N)|,   f(x) = x**-s,

is exactly the magnitude of the last correction kept, so the returned
``error`` is a true bound (plus a floating-point allowance).
"""
from __future__ import annotations

import math
from typing import NamedTuple

from .errors import DomainError

# B_2, B_4, ..., B_16
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)
_EPS = 2.0 ** -52
_N_MAX = 1 << 22


class CertifiedValue(NamedTuple):
    value: float
    error: float

    def __float__(self):
        return self.value


def _em_tail(s: float, sm1: float, n: int, m: int) -> tuple[float, float]:
    """Euler-Maclaurin value of sum_{j>=n} j**-s and its remainder bound."""
    total = n ** (-sm1) / sm1 + 0.5 * n ** (-s)
    poch = s  # (s)_{2k-1}
    fact = 2.0  # (2k)!
    power = n ** (-s - 1.0)
    last = 0.0
    for k in range(1, m + 1):
        term = _BERNOULLI[k - 1] / fact * poch * power
        total += term
        last = abs(term)
        poch *= (s + 2 * k - 1) * (s + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
        power /= n * n
    return total, last


def zeta_tail(s: float, n: int, tol: float = 1e-15, *, s_minus_one: float | None = None
              ) -> CertifiedValue:
    """Hurwitz-type tail ``sum_{j >= n} j**-s`` for real ``s > 1``, ``n >= 1``.

    ``s_minus_one`` may carry ``s - 1`` at full relative precision when ``s``
    is within rounding of 1.
    """
    sm1 = (s - 1.0) if s_minus_one is None else float(s_minus_one)
    if not sm1 > 0.0 or not math.isfinite(s):
        raise DomainError(f"zeta series diverges for s={s!r}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if n < 1:
        raise DomainError("tail start must be >= 1")
    m = len(_BERNOULLI)
    big = max(n, 8)
    while True:
        tail, bound = _em_tail(s, sm1, big, m)
        direct = math.fsum(j ** (-s) for j in range(n, big))
        value = direct + tail
        rounding = 4 * _EPS * abs(value)
        err = bound + rounding
        # stop once the truncation is below tol or below the rounding floor
        if err <= tol or bound <= rounding or big >= _N_MAX:
            return CertifiedValue(value, err)
        big *= 2


def zeta(s: float, tol: float = 1e-15, *, s_minus_one: float | None = None) -> CertifiedValue:
    """Riemann zeta at real ``s > 1``; ``|value - zeta(s)| <= error``.

    Raises :class:`DomainError` for ``s <= 1``.

    >>> round(zeta(2.0).value, 12)
    1.644934066848
    """
    return zeta_tail(s, 1, tol, s_minus_one=s_minus_one)


def zeta_minus_one(s: float, tol: float = 1e-15, *, s_minus_one: float | None = None
                   ) -> CertifiedValue:
    """``zeta(s) - 1`` computed as a tail sum, free of cancellation for large s."""
    return zeta_tail(s, 2, tol, s_minus_one=s_minus_one)
