import json
import math
import warnings

import pytest
from hypothesis import assume, given, strategies as st

from psharp.errors import HypothesisViolated, PreconditionError
from psharp.harness import (EPSILON_FLOOR, ExperimentConfig, SpaceKind, case_table, classify_A,
                            classify_u, parse_real, render_case_table, run_experiment,
                            savare_compare, select_params, select_params_L, select_params_main,
                            w1_table)

INF = math.inf


def test_main_selection_example():
    cfg = select_params_main(3, 0.5, 2, 0.05)
    assert cfg.theta == pytest.approx(1 / 0.975, rel=1e-15)
    assert cfg.sigma == pytest.approx(0.24375, rel=1e-14)
    assert cfg.dual_sigma == pytest.approx(2 * 0.24375, rel=1e-14)


def test_main_selection_without_mu_term():
    cfg = select_params_main(3, 0.5, INF, 0.05)
    assert cfg.sigma == 0.25 and cfg.dual_sigma == 0.5


def test_L_selection_examples():
    cfg = select_params_L(3, 2, 0.05)
    assert cfg.sigma == pytest.approx(0.49375, rel=1e-14)
    assert cfg.dual_sigma == pytest.approx(0.9875, rel=1e-14)
    assert cfg.lam == 1.0 and cfg.mode == "L"
    for eps in (0.05, 0.2, 0.4):
        assert select_params_L(3, INF, eps).dual_sigma == 1.0


def test_selection_rejections_name_the_inequality():
    with pytest.raises(HypothesisViolated, match="2 < p"):
        select_params_L(2, 2, 0.05)
    with pytest.raises(HypothesisViolated, match="epsilon < 1/p"):
        select_params_main(2, 0.3, 1.5, 0.5)
    with pytest.raises(HypothesisViolated, match="lambda < 1 - epsilon"):
        select_params_main(3, 0.97, 2, 0.05)
    with pytest.raises(HypothesisViolated, match="lambda = 1"):
        select_params(3, 0.5, 2, 0.05, mode="L")
    with pytest.raises(PreconditionError):
        select_params(3, 0.5, 2, 0.05, mode="X")


def test_small_epsilon_inside_the_range_is_accepted():
    # epsilon = 0.2 < 1/p = 0.5 satisfies every hypothesis
    cfg = select_params_main(2, 0.3, 1.5, 0.2)
    assert cfg.sigma == pytest.approx(0.3 - 0.1 / 1.5)


def test_tiny_epsilon_warns():
    with pytest.warns(RuntimeWarning):
        select_params_main(3, 0.5, 2, EPSILON_FLOOR / 2)


# epsilon(p-1) < lambda < 1 - epsilon with epsilon < 1/p, drawn as fractions of the ranges
@given(st.floats(2.0, 8.0), st.floats(0.2, 0.95), st.floats(0.01, 0.99),
       st.floats(1.01, 50.0) | st.just(INF))
def test_main_chain_and_consistency(p, f_eps, f_lam, mu):
    eps = f_eps / p
    lam = eps * (p - 1) + f_lam * (1 - eps * p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cfg = select_params_main(p, lam, mu, eps)
    assert 0 < cfg.sigma <= cfg.dual_sigma < 1 / cfg.theta
    assert cfg.dual_sigma == pytest.approx((p - 1) * cfg.sigma, rel=1e-12)
    for rho in (1.0, 2.5, 7.0, INF):
        assert abs(cfg.consistency_residual(rho)) <= 1e-12


@given(st.floats(2.05, 8.0), st.floats(1.01, 50.0) | st.just(INF), st.floats(0.02, 0.5))
def test_L_chain(p, mu, eps):
    try:
        cfg = select_params_L(p, mu, eps)
    except HypothesisViolated:
        assume(False)
    assert 0 < cfg.sigma < 1 / cfg.theta < cfg.dual_sigma <= 1


@pytest.fixture(scope="module")
def default_cfg():
    return select_params_main(3, 0.5, 2, 0.05)


def test_classification_examples(default_cfg):
    s = 1.25
    row1 = classify_u(INF, 1.0, default_cfg)
    assert row1.row == 1 and row1.verdict == pytest.approx((s - 0.05, s))
    row2 = classify_u(4.0, 2.0, default_cfg)
    assert row2.row == 2
    assert row2.contained.q == INF and row2.excluded.q == 2.0
    assert row2.contained.smoothness == row2.excluded.smoothness == s
    assert classify_u(4.0, INF, default_cfg).excluded is None
    assert classify_u(1.0, 1.0, default_cfg).row == 3
    a2 = classify_A(2.0, 3.0, default_cfg)
    assert a2.row == 2 and a2.contained.vector and a2.verdict == (0.5, 0.5)
    assert classify_A(2.5, 1.0, default_cfg).row == 1
    assert classify_A(1.5, 1.0, default_cfg).verdict == pytest.approx((0.5, 0.55))
    with pytest.raises(PreconditionError):
        classify_u(0.5, 1.0, default_cfg)
    with pytest.raises(PreconditionError):
        classify_u(2.0, 0.0, default_cfg)


def test_rendered_claims(default_cfg):
    assert classify_u(4.0, 2.0, default_cfg).contained.render() == "B^{1.25}_{4,inf}"
    assert classify_A(1.0, 2.0, default_cfg).excluded.render() == "(B^{0.55}_{1,2})^d"


@given(st.floats(1.0, 100.0) | st.just(INF), st.floats(0.1, 50.0), st.floats(0.1, 50.0))
def test_rows_outside_threshold_do_not_depend_on_q(rho, q1, q2):
    cfg = select_params_main(3, 0.5, 2, 0.05)
    for classify, thr in ((classify_u, 4.0), (classify_A, 2.0)):
        assume(abs(rho - thr) > 1e-9)
        a, b = classify(rho, q1, cfg), classify(rho, q2, cfg)
        assert a.row == b.row and a.verdict == b.verdict


def test_case_tables(default_cfg):
    rows = case_table(SpaceKind.SolutionU, default_cfg)
    assert [r.row for r in rows] == [1, 2, 3]
    assert rows[1].member == "u in B^{1.25}_{rho,inf}"
    assert rows[1].non_member == "u not in B^{1.25}_{rho,q}"
    text = render_case_table(case_table(SpaceKind.FieldA, default_cfg), "A")
    assert "rho = mu" in text and "(B^{0.5}_{rho,inf})^d" in text
    unbounded = case_table(SpaceKind.FieldA, select_params_main(3, 0.5, INF, 0.05))
    assert unbounded[0].case is None and unbounded[1].case.row == 2


def test_w1_table_in_L_mode():
    cfg = select_params_L(3, 2, 0.05)
    rows = w1_table(cfg)
    assert [r.rho for r in rows] == pytest.approx([1.2, 1.5, 1.99, 2.01, 4.0])
    assert all(r.matches for r in rows)
    assert [r.finite for r in rows] == [True, True, True, False, False]


def test_savare_lines():
    line = savare_compare(3, 0.4, 0.05)
    assert line.guaranteed == pytest.approx(1.2) and line.excluded == pytest.approx(1.25)
    assert line.in_range and line.construction_ok
    linear = savare_compare(2, 0.3, 0.05)
    assert linear.guaranteed == pytest.approx(1.3) and "linear case" in linear.text
    flagged = savare_compare(3, 0.7, 0.05)
    assert not flagged.in_range and "outside" in flagged.text


@pytest.mark.parametrize("text,want", [("inf", INF), ("Infinity", INF), (None, INF), ("2.5", 2.5),
                                       (3, 3.0)])
def test_parse_real(text, want):
    assert parse_real(text) == want


def test_config_parsing():
    ec = ExperimentConfig.from_dict({"lambda": 0.4, "mu": "inf", "rho_list": [1, "inf"]})
    assert ec.lam == 0.4 and ec.mu == INF and ec.rho_list == [1.0, INF]
    assert ec.h_list[0] == 2.0 ** -6
    back = ExperimentConfig.from_dict(json.loads(json.dumps(ec.to_dict())))
    assert back == ec
    for bad in ({"bogus": 1}, {"theta": 1.0}, {"theta": 0.5}, {"mode": "X"},
                {"tolerances": {"nope": 1}}, {"rho_list": [0.5]}, {"d_list": [4]}):
        with pytest.raises(PreconditionError):
            ExperimentConfig.from_dict(bad)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    ec = ExperimentConfig(p=2, lam=0.5, mu=INF, epsilon=0.3, rho_list=[2.0, INF],
                          h_exponents=list(range(6, 12)), d_list=[1], n_split=32)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        return run_experiment(ec, out), out


def test_small_experiment_passes_and_writes_artifacts(small_run):
    report, out = small_run
    assert report.passed, report.to_text()
    for name in ("report.json", "report.txt", "modulus_sigma.csv", "modulus_dual.csv"):
        assert (out / name).exists(), name
    data = json.loads((out / "report.json").read_text())
    assert data["verdict"] == "pass" and data["config"]["mu"] == "inf"
    assert (out / "modulus_sigma.csv").read_text().startswith("h,rho,value,method\n")
    assert {"invariants", "norms", "sweeps", "weak", "tables"} <= set(report.timings)


def test_failing_selection_is_reported():
    report = run_experiment(ExperimentConfig(p=3, lam=0.95, mu=2, epsilon=0.05))
    assert not report.passed and report.selection is None
    assert "lambda < 1 - epsilon" in report.to_text()
