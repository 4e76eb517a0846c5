import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import special

from psharp.errors import DomainError
from psharp.quadrature import (gauss_legendre, integrate_panels, sphere_area, sphere_rule,
                               split_sign_changes, tanh_sinh, unique_edges)
from psharp.zeta import zeta, zeta_minus_one, zeta_tail


@given(st.floats(min_value=1.05, max_value=40.0))
def test_zeta_matches_scipy(s):
    z = zeta(s)
    ref = special.zeta(s)
    assert abs(z.value - ref) <= max(z.error, 4e-16 * ref) + 4e-15 * ref


@given(st.floats(min_value=1.1, max_value=6.0), st.integers(min_value=1, max_value=5000))
def test_zeta_tail_matches_hurwitz(s, n):
    got = zeta_tail(s, n).value
    assert got == pytest.approx(special.zeta(s, n), rel=1e-13)


def test_zeta_minus_one_large_argument_keeps_relative_precision():
    # zeta(60) - 1 is about 2^-60; direct subtraction would lose everything
    s = 60.0
    assert zeta_minus_one(s).value == pytest.approx(special.zeta(s, 2), rel=1e-14)


@pytest.mark.parametrize("delta", [1e-4, 1e-7, 1e-10])
def test_zeta_near_pole_uses_exact_offset(delta):
    # Laurent expansion: zeta(1 + d) = 1/d + gamma - gamma_1 d + O(d^2)
    gamma, gamma1 = 0.5772156649015329, -0.07281584548367672
    want = 1.0 / delta + gamma - gamma1 * delta
    got = zeta_tail(1.0 + delta, 1, s_minus_one=delta).value
    assert got == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("s", [1.0, 0.5, -2.0, math.nan])
def test_zeta_rejects_divergent_arguments(s):
    with pytest.raises(DomainError):
        zeta(s)


@given(st.integers(min_value=1, max_value=20), st.integers(min_value=0, max_value=39))
def test_gauss_legendre_exact_for_polynomials(n, k):
    assume(k <= 2 * n - 1)
    x, w = gauss_legendre(n)
    assert float(np.sum(w * x ** k)) == pytest.approx(1.0 / (k + 1), rel=1e-13)


# the rule is truncated at |t| = 4, which limits how close to -1 the exponent can go
@given(st.floats(min_value=-0.5, max_value=3.0))
def test_tanh_sinh_handles_endpoint_singularities(a):
    rule = tanh_sinh(5)
    f = lambda x, d_lo, d_hi, idx: d_lo ** a + d_hi ** a  # noqa: E731
    fine, coarse = integrate_panels(f, [0.0], [1.0], rule, with_offsets=True)
    assert fine[0] == pytest.approx(2.0 / (a + 1.0), rel=1e-10)
    assert abs(fine[0] - coarse[0]) < 1e-2


def test_integrate_panels_chunks_consistently():
    edges = np.linspace(0.0, math.pi, 5001)
    fine, _ = integrate_panels(np.sin, edges[:-1], edges[1:], tanh_sinh(3))
    assert math.fsum(fine) == pytest.approx(2.0, rel=1e-13)


def test_split_sign_changes_inserts_root():
    edges = split_sign_changes(np.cos, np.array([0.0, 1.0, 3.0]))
    assert edges.size == 4
    assert edges[2] == pytest.approx(math.pi / 2, abs=1e-14)


def test_unique_edges_clips_and_sorts():
    e = unique_edges([5.0, 0.5, -1.0, 0.5, 0.2], 0.0, 1.0)
    assert list(e) == [0.0, 0.2, 0.5, 1.0]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sphere_rule_moments(d):
    dirs, w = sphere_rule(d, 24)
    assert float(np.sum(w)) == pytest.approx(sphere_area(d), rel=1e-13)
    # int omega_1^2 over the sphere is area / d
    assert float(np.sum(w * dirs[:, 0] ** 2)) == pytest.approx(sphere_area(d) / d, rel=1e-13)


def test_sphere_rule_rejects_high_dimension():
    with pytest.raises(ValueError):
        sphere_rule(4)
