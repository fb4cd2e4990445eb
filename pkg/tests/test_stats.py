import json
import math

import numpy as np
import pytest

from clockspec import amplitudes as amp
from clockspec import potential as pot
from clockspec import spectrum as sp
from clockspec import stats as st
from clockspec.errors import ConfigError

PI = math.pi
MODEL = pot.PotentialModel(0.75)
FREE = pot.PotentialModel(0.75, amplitudes=amp.Zero())
SMALL = st.ExperimentConfig(MODEL, n_values=(100, 200), realizations=6, bootstrap=20, N=300, m=20,
                            blocks=(3, 6), c_range=4.0, c_step=0.5, c_max=8.0,
                            subsequence=st.SubsequenceConfig(count=2, stride=150, search_limit=300),
                            seed=12)


def brute_force_subsequence(kappa0, beta, count, stride):
    out = []
    for b in range(count):
        best, best_d = None, None
        for n in range(max(2, b * stride), (b + 1) * stride):
            x = math.fmod(kappa0 * n, PI)
            d = min(abs(x - beta), PI - abs(x - beta))
            if best_d is None or d < best_d:
                best, best_d = n, d
        out.append((best, best_d))
    return out


def test_subsequence_matches_brute_force():
    sub = st.subsequence_S(1.0, 0.5, 6, 1200, stride=200)
    oracle = brute_force_subsequence(1.0, 0.5, 6, 200)
    assert sub.n == [n for n, _ in oracle]
    assert sub.defects == pytest.approx([d for _, d in oracle], abs=1e-12)
    assert all(b > a for a, b in zip(sub.n, sub.n[1:]))


def test_subsequence_resonant_case():
    sub = st.subsequence_S(PI, 0.0, 4, 800)
    assert max(sub.defects) < 1e-12
    assert sub.n[0] == 2  # every n qualifies; the first admissible one wins


def test_subsequence_single_block_and_errors():
    sub = st.subsequence_S(1.0, 0.5, 1, 200)
    assert sub.n == [brute_force_subsequence(1.0, 0.5, 1, 200)[0][0]]
    with pytest.raises(ConfigError):
        st.subsequence_S(1.0, 0.5, 5, 500, stride=200)
    with pytest.raises(ConfigError):
        st.subsequence_S(1.0, 4.0, 1, 200)


def test_subsequence_defects_shrink_with_growing_blocks():
    sub = st.subsequence_S(1.0, 0.5, 8, 200 * 255, stride=200, growth=2.0)
    d = np.asarray(sub.defects)
    assert np.median(d[4:]) <= np.median(d[:4])
    assert d[-1] < 1e-4


def test_config_validation():
    with pytest.raises(ConfigError):
        st.ExperimentConfig(MODEL, realizations=1)
    with pytest.raises(ConfigError):
        st.ExperimentConfig(MODEL, n_values=(500, 400))
    with pytest.raises(ConfigError):
        st.config_from_dict({"model": {"alpha": 0.75}, "experiment": {"bogus": 1}})
    with pytest.raises(ConfigError):
        st.config_from_dict({"model": {"alpha": 0.75}, "extra": {}})
    with pytest.raises(ConfigError):
        st.ExperimentConfig(MODEL, gates={"nonsense": 1})


def test_config_round_trip_and_hash():
    doc = SMALL.to_dict()
    again = st.config_from_dict(json.loads(json.dumps(doc)))
    assert again.to_dict() == doc and again.hash() == SMALL.hash()
    assert SMALL.replace(seed=13).hash() != SMALL.hash()


def test_parallel_map_order_and_errors():
    assert st.parallel_map(lambda i: i * i, range(20), workers=4) == [i * i for i in range(20)]

    def bad(i):
        if i == 3:
            raise ConfigError("boom")
        return i

    with pytest.raises(ConfigError, match="realization 3"):
        st.parallel_map(bad, range(5), workers=2)


def test_clock_free_field_gaps_are_pi():
    rep = st.run_clock_experiment(SMALL.replace(model=FREE), workers=1)
    gaps = np.array([r["gap"] for r in rep.rows])
    assert np.allclose(gaps, PI, atol=1e-9) and rep.passed


def test_clock_report_structure():
    rep = st.run_clock_experiment(SMALL, workers=1)
    assert rep.gate("free_field_control").passed
    for row in rep.summary["per_n"]:
        assert row["median_abs_dev_stderr"] > 0 and row["gap_mean_stderr"] > 0


def test_theta_c0_row_and_control():
    rep = st.run_theta_experiment(SMALL, workers=1)
    assert all(r["mean_dev"] == 0.0 for r in rep.rows if r["c"] == 0.0)
    assert rep.gate("c0_row_zero").passed and rep.gate("free_field_control").passed


def test_holder_trivial_cases():
    pf = st.PhaseFunction(MODEL.realize(300, 0, 0))
    assert st.holder_statistic(pf, 1.0, [0.0], 20, 300)[0] == 0.0
    rep = st.run_holder_experiment(SMALL.replace(model=FREE), workers=1)
    assert all(r["estimate"] == 0.0 for r in rep.rows)
    assert rep.summary["degenerate"] and not rep.gate("slope_min").passed


def test_moments_zero_amplitudes():
    rep = st.run_moment_experiment(SMALL.replace(model=FREE), workers=1)
    assert all(r["J2"] == 0.0 and r["R2_sup"] == 0.0 for r in rep.rows)


def test_moment_stderr_scales_like_clt():
    cfg = SMALL.replace(blocks=(4, 6))
    a = st.run_moment_experiment(cfg.replace(realizations=200), workers=1)
    b = st.run_moment_experiment(cfg.replace(realizations=400), workers=1)
    ratios = [ra["R2_sup_stderr"] / rb["R2_sup_stderr"] for ra, rb in zip(a.rows, b.rows)]
    assert all(1.1 < x < 1.8 for x in ratios)


def test_laplace_trivial_cases():
    zero = st.run_clock_laplace_experiment(SMALL, g=sp.ZeroFunction(), workers=1)
    assert all(r["direct"] == 1.0 and r["clock_prediction"] == 1.0 for r in zero.rows)
    # resonant free field: kappa0 n in pi Z puts atoms on the lattice
    cfg = SMALL.replace(model=FREE, kappa0=PI,
                        subsequence=st.SubsequenceConfig(beta=0.0, count=2, stride=100, search_limit=200))
    rep = st.run_clock_laplace_experiment(cfg, workers=1)
    g = cfg.g()
    expected = math.exp(-float(np.sum(g(PI * np.arange(-3, 4)))))
    for r in rep.rows:
        assert r["direct"] == pytest.approx(expected, abs=1e-9)
        assert r["clock_prediction"] == pytest.approx(expected, abs=1e-9)
    assert rep.gate("identity_all_realizations").passed


def test_determinism_across_workers(tmp_path):
    for run in (st.run_clock_experiment, st.run_theta_experiment, st.run_holder_experiment,
                st.run_moment_experiment, st.run_clock_laplace_experiment):
        a, b = run(SMALL, workers=1), run(SMALL, workers=3)
        assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()
    pa = st.run_clock_experiment(SMALL, workers=1).write(tmp_path / "a")
    pb = st.run_clock_experiment(SMALL, workers=2).write(tmp_path / "b")
    for x, y in zip(pa, pb):
        assert x.name == y.name and x.read_bytes() == y.read_bytes()
        assert x.name.startswith(f"clock_{SMALL.hash()}")


def test_report_json_embeds_config():
    rep = st.run_moment_experiment(SMALL, workers=1)
    doc = json.loads(rep.to_json())
    assert doc["config"] == SMALL.to_dict()
    assert doc["provenance"] == {"seed": 12, "config_hash": SMALL.hash()}
    assert b"\r" not in rep.to_csv().encode()


def test_correlation_experiment_two_state_chain():
    cfg = st.ExperimentConfig(pot.PotentialModel(0.75, amplitudes=amp.two_state_chain(0.8)),
                              realizations=200, N=2000, max_lag=30)
    rep = st.run_correlation_experiment(cfg)
    assert list(rep.rows[0]) == ["lag", "corr", "stderr"]
    assert rep.summary["fit"]["rate"] == pytest.approx(-math.log(0.6), rel=0.1)
    assert rep.passed


def test_dynsys_check_passes():
    rep = st.run_dynsys_check(SMALL.replace(samples=200_000))
    assert rep.passed, [g for g in rep.gates if not g.passed]
