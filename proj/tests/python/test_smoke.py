import json
import math
import os
import subprocess

import numpy as np
import pytest

import amprt


def test_version_and_config():
    assert amprt.__version__ == "0.1.0"
    cfg = amprt.config(T=3)
    assert cfg["T"] == 3 and cfg["command"] == "simulate"
    with pytest.raises(KeyError):
        amprt.config(bogus=1)


def test_gmm_state_evolution():
    q = amprt.GmmParams(gamma=1.5, alpha=2.0, p=0.3, pi_plus=0.3)
    assert amprt.se_init_gmm(q).eta == pytest.approx(1.5 * 0.4 / math.sqrt(2.0), abs=1e-12)
    trace = amprt.se_trace_gmm(q, 5)
    assert len(trace) == 5
    assert all(b.eta >= a.eta - 1e-12 for a, b in zip(trace, trace[1:]))
    roots = amprt.crossover(amprt.GmmParams(gamma=1.5, alpha=2.0, p=0.2, pi_plus=0.3))
    assert roots[0] == pytest.approx(4.32, abs=0.05)
    assert amprt.p_star(1.5, 2.0)["residual"] <= 1e-10


def test_cobweb_accepts_python_maps():
    pairs = amprt.cobweb(lambda u: 0.5 * u + 1.0, 0.0, 4)
    assert [u for u, _ in pairs] == [0.0, 1.0, 1.5, 1.75]


def test_glm_closed_form():
    q = amprt.GlmParams(alpha=0.5, p=0.2, link="sign")
    assert amprt.se_init_glm(q).eta == pytest.approx(0.6 * math.sqrt(2 / math.pi) / 0.5, abs=1e-12)
    for u in (-1.0, 0.3, 2.0):
        assert amprt.optimal_aggregator_glm(u, 1.0, 0.7, q) == pytest.approx(amprt.optimal_aggregator_sign(u, 1.0, 0.7, q), abs=1e-6)
    assert amprt.glm_error_of_overlap(0.3, q) == pytest.approx(math.acos(0.3) / math.pi, abs=1e-12)


def test_dataset_is_numpy_and_deterministic():
    q = amprt.GmmParams(gamma=1.5, alpha=0.5, p=0.1, n=40)
    a = amprt.sample_gmm_dataset(q, seed=3)
    b = amprt.sample_gmm_dataset(q, seed=3)
    assert a["X"].shape == (40, 20)
    assert np.array_equal(a["X"], b["X"])
    assert np.linalg.norm(a["mu"]) == pytest.approx(1.5)


def test_simulate_report():
    rows = amprt.simulate(n=200, T=3, replications=2, seed=5)
    assert [r["t"] for r in rows] == [0, 1, 2, 3]
    assert all(r["n_ok"] == 2 for r in rows[1:])
    assert all(0.0 <= r["emp_mean"] <= 0.5 for r in rows[1:])


def test_bayesmix():
    rng = np.random.default_rng(0)
    z = np.concatenate([rng.normal(2, 0.7, 300), rng.normal(-2, 0.7, 300)])
    fit = amprt.fit_bimodal(z.tolist())
    assert fit["mu_plus"] == pytest.approx(2.0, abs=0.2)
    assert -1 < amprt.bayesmix_aggregate(0.5, -1.0, fit, 0.2) < 1


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(amprt.ConfigError):
        amprt.GmmParams(gamma=1.0, alpha=1.0, p=0.7)
    with pytest.raises(amprt.Error):
        amprt.run_command('{"bogus": 1}', str(tmp_path))


def test_run_command_and_cli_agree(tmp_path):
    files = amprt.run("se", tmp_path / "py", T=4, gamma=1.5, alpha=2.0, p=0.3)
    assert any(f.endswith("se.tsv") for f in files)
    cli = os.environ.get("AMPRT_CLI")
    if not cli:
        pytest.skip("AMPRT_CLI not set")
    subprocess.run([cli, "--out", str(tmp_path / "cli"), "se", "-T", "4", "--gamma", "1.5", "--alpha", "2", "--p", "0.3"],
                   check=True, capture_output=True)
    assert (tmp_path / "py" / "se.tsv").read_text() == (tmp_path / "cli" / "se.tsv").read_text()
    cfg = json.loads(amprt.extract_config((tmp_path / "cli" / "se.tsv").read_text()))
    assert cfg["command"] == "se"
