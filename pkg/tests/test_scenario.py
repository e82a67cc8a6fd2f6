import numpy as np
import pytest

from scalecon.errors import MalformedInputError, ScenarioError, SeriesError
from scalecon.params import ModelParams
from scalecon.scenario import (
    RESULT_COLUMNS,
    SCENARIO_PHI,
    ScenarioSpec,
    compare,
    load_spec,
    overhead_share,
    parse_spec,
    phi_for_overhead_share,
    run,
)
from scalecon.series import AnnualSeries, linear_series, parse_series, synthetic_series


@pytest.fixture(scope="module")
def series():
    return synthetic_series()


def test_fixed_markup_counterfactual(series):
    res = run(ScenarioSpec("cf", "fixed_mu_counterfactual"), series)
    assert res.index[0] == 1.0
    assert res.index[-1] >= 1.20
    assert np.all(np.diff(res.index) > 0)
    assert np.all(res.column("mu") == 1.21)
    assert np.all(res.column("phi") == SCENARIO_PHI) and np.all(res.column("theta") == 10.0)


def test_rising_markup_lowers_the_index(series):
    cf = run(ScenarioSpec("cf", "fixed_mu_counterfactual"), series)
    both = run(ScenarioSpec("both", "vary_nu_mu"), series)
    assert both.index[0] == cf.index[0] == 1.0
    assert np.all(both.index[1:] < cf.index[1:])


def test_overhead_share_modes(series):
    only = run(ScenarioSpec("phi", "vary_phi_only"), series)
    np.testing.assert_allclose(only.achieved_overhead_share(), series.column("overhead_share"), atol=1e-8, rtol=0)
    assert np.all(only.column("nu") == 1.02)
    assert np.all(np.diff(only.index) > 0)
    assert only.index[-1] >= 1.05
    with_mu = run(ScenarioSpec("phi_mu", "vary_phi_mu"), series)
    np.testing.assert_allclose(with_mu.achieved_overhead_share(), series.column("overhead_share"), atol=1e-8, rtol=0)
    baseline = run(ScenarioSpec("base", "fixed_all_baseline"), series)
    assert np.all(baseline.index == 1.0)
    assert with_mu.index[-1] < baseline.index[-1]


def test_phi_for_overhead_share_round_trip():
    p = ModelParams(phi=0.2)
    phi = phi_for_overhead_share(0.12, p)
    assert overhead_share(p.replace(phi=phi)) == pytest.approx(0.12, abs=1e-12)


def test_decomposition_per_row(series):
    res = run(ScenarioSpec("both", "vary_nu_mu"), series)
    ln_tfp = np.log([r.steady_state.TFP for r in res.rows])
    np.testing.assert_allclose(res.column("ln_omega") + res.column("ln_ahat"), ln_tfp, atol=1e-12, rtol=0)


def test_base_year_ratio_invariance(series):
    # hold mu and nu so that the base year only moves the normalisation
    spec = dict(overrides={"mu": 1.25})
    a = run(ScenarioSpec("a", "vary_nu_mu", base_year=2001, **spec), series)
    b = run(ScenarioSpec("b", "vary_nu_mu", base_year=2008, **spec), series)
    ratio = a.index / b.index
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-13)
    assert b.index[series.index_of(2008)] == 1.0


def test_row_order_does_not_matter(series):
    text = series.to_csv()
    head, *rows = text.strip().split("\n")
    shuffled = [rows[i] for i in np.random.default_rng(0).permutation(len(rows))]
    again = parse_series("\n".join([head] + shuffled) + "\n")
    spec = ScenarioSpec("both", "vary_nu_mu")
    assert run(spec, again).to_csv() == run(spec, series).to_csv()
    assert run(spec, series, jobs=4).to_csv() == run(spec, series).to_csv()


def test_output_schema(series):
    lines = run(ScenarioSpec("both", "vary_nu_mu"), series).to_csv().splitlines()
    assert lines[0].split(",") == list(RESULT_COLUMNS)
    assert len(lines) == 15
    assert lines[1].split(",")[-1] == ""  # no data index supplied


def test_data_index_and_comparison():
    s = linear_series(2001, 2010, nu=(0.99, 1.05), mu=(1.21, 1.28), overhead_share=(0.08, 0.16),
                      tfp_data_index=(100.0, 110.0))
    a = run(ScenarioSpec("nu_mu", "vary_nu_mu"), s)
    b = run(ScenarioSpec("phi_mu", "vary_phi_mu"), s)
    assert a.data_index[0] == 1.0 and a.data_index[-1] == pytest.approx(1.1)
    cmp = compare([a, b])
    assert set(cmp.rmse) == {"nu_mu", "phi_mu"}
    expected = np.sqrt(np.mean((a.index - a.data_index) ** 2))
    assert cmp.rmse["nu_mu"] == pytest.approx(expected, rel=1e-14)
    np.testing.assert_allclose(cmp.differences[:, 1], b.index - a.index, rtol=0, atol=0)
    assert len(cmp.summary()) == 2


def test_compare_edge_cases(series):
    a = run(ScenarioSpec("x", "vary_nu_mu"), series)
    same = compare([a, run(ScenarioSpec("x", "vary_nu_mu"), series)])
    assert np.all(same.differences == 0)
    single = compare([a])
    assert single.summary() == ["x: RMSE vs data n/a (no data index)"]
    assert "minus" not in single.to_csv().splitlines()[0]
    later = AnnualSeries(years=np.arange(2020, 2023), data={k: series.data[k][:3] for k in series.data})
    with pytest.raises(SeriesError):
        compare([a, run(ScenarioSpec("y", "vary_nu_mu"), later)])


def test_infeasible_year_is_named():
    s = parse_series("year,nu,mu\n2001,1.0,1.2\n2002,1.3,1.25\n")
    with pytest.raises(ScenarioError) as info:
        run(ScenarioSpec("bad", "vary_nu_mu"), s)
    assert info.value.year == 2002
    assert "nu < mu" in str(info.value)


def test_missing_columns_rejected():
    s = parse_series("year,nu,mu\n2001,1.0,1.2\n")
    with pytest.raises(SeriesError, match="overhead_share"):
        run(ScenarioSpec("phi", "vary_phi_only"), s)
    with pytest.raises(SeriesError):
        run(ScenarioSpec("x", "vary_nu_mu", base_year=1999), s)


def test_spec_files(tmp_path, series):
    (tmp_path / "data.csv").write_text(series.to_csv(), encoding="utf-8")
    cfg = tmp_path / "cf.scn"
    cfg.write_text("name = counterfactual\nmode = fixed_mu_counterfactual\ninput_series = data.csv\n"
                   "base_year = 2001\nset.mu = 1.21\n", encoding="utf-8")
    spec = load_spec(cfg)
    assert spec.overrides == {"mu": 1.21} and spec.base_year == 2001
    assert run(spec).index[-1] >= 1.20
    with pytest.raises(MalformedInputError):
        parse_spec("mode = warp_drive\n")
    with pytest.raises(MalformedInputError):
        parse_spec("name = x\n")
    with pytest.raises(MalformedInputError):
        parse_spec("mode = vary_nu_mu\ncolour = red\n")
    with pytest.raises(MalformedInputError):
        parse_spec("mode = vary_nu_mu\nset.zeta = 1\n")


def test_theta_from_data_option(series):
    res = run(ScenarioSpec("t", "vary_nu_mu", theta_from_data=True, overrides={"phi": 0.85}), series)
    assert len(set(res.column("theta"))) == len(series)
