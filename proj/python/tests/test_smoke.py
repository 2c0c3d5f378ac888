import math

import numpy as np
import pytest

import foldcont


def test_default_config_round_trips():
    text = foldcont.default_config()
    assert foldcont.resolve_config(text) == text
    assert "continuation.mu_floor" in foldcont.config_keys()


def test_bad_key_raises_config_error():
    with pytest.raises(foldcont.ConfigError, match="continuation.mu_flor"):
        foldcont.trace(overrides={"continuation.mu_flor": 1})
    with pytest.raises(foldcont.ConfigError, match="mu_floor"):
        foldcont.trace(overrides={"continuation.mu_floor": 0})


def test_interval_trace_has_one_fold():
    out = foldcont.trace(overrides={"problem.domain": "interval:256", "continuation.norm_cap": 10})
    assert len(out["folds"]) == 1
    assert abs(out["folds"][0]["mu_fold"] - 3.5138) < 2e-3
    assert out["events"][-1]["kind"] == "MuFloor"
    assert len(out["last_point"]["v"]) == 256
    mus = [p["mu"] for p in out["points"]]
    assert max(mus) <= out["folds"][0]["mu_fold"] + 1e-8


def test_oracles():
    mu, sup = foldcont.radial_family(1.0)
    assert mu == 2.0
    assert sup == pytest.approx(2 * math.log(2), abs=1e-14)
    assert len(foldcont.shooting_roots(1.0)) == 2
    assert foldcont.shooting_fold() == pytest.approx(3.513830719, abs=1e-6)
    tables = foldcont.oracle(overrides={"oracle.mu_grid": "1"})
    assert [r["mu"] for r in tables["radial"]] == pytest.approx([16 / 9, 2, 16 / 9])
    with pytest.raises(foldcont.FoldcontError):
        foldcont.oracle(overrides={"oracle.mu_grid": "", "problem.nonlinearity": "power:2"})


def test_multistart_returns_arrays():
    sols = foldcont.multistart(9, 1.0, n_starts=100, seed=1)
    assert len(sols) == 2
    assert all(isinstance(s, np.ndarray) and s.shape == (9,) for s in sols)
    assert foldcont.multistart(9, 3.6, n_starts=50) == []


def test_spectrum_and_shape_check():
    sp = foldcont.spectrum(overrides={"problem.domain": "interval:128", "spectrum.k": 3})
    assert sp["morse_index"] == 0
    assert sp["sigma"] == sorted(sp["sigma"]) and sp["sigma"][0] > 0
    rep = foldcont.shape_check(overrides={"problem.domain": "interval:512"})
    assert rep["order_ok"] and rep["hadamard_ok"]
    with pytest.raises(foldcont.DomainError):
        foldcont.shape_check(overrides={"problem.domain": "interval:64", "shape.scale": 0})


def test_experiment_is_deterministic():
    knobs = {
        "experiment.domain": "rect:8x8:1x1",
        "experiment.n_samples": 2,
        "continuation.mu_floor": 3,
        "run.seed": 5,
    }
    a = foldcont.experiment(overrides=knobs)
    b = foldcont.experiment(overrides={**knobs, "run.jobs": 2})
    assert a == b
    assert a["summary"]["n_samples"] == 2
