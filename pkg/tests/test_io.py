import math

import numpy as np
import pytest

from lrfmp import io
from lrfmp.continuation import synthesize_data
from lrfmp.dictionary import Dictionary
from lrfmp.elements import AbelPoisson, SphericalHarmonic
from lrfmp.grids import reuter_grid
from lrfmp.kernels import apk_eval
from lrfmp.learner import LearnConfig, OptimizerConfig
from lrfmp.pursuit import PursuitConfig, run

from .helpers import random_elements


def test_read_model_examples(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("# one term\nSH 0 0 1.0\n")
    m = io.read_model(p)
    assert m.terms == [(1.0, SphericalHarmonic(0, 0))] and m.description == "one term"
    p.write_text("")
    assert len(io.read_model(p)) == 0
    assert np.array_equal(synthesize_data(io.read_model(p).terms, reuter_grid(3), 1.06), np.zeros(12))
    p.write_text("SH 0 0 1.0\nSH 1 0\n")
    with pytest.raises(ValueError, match=":2:"):
        io.read_model(p)
    p.write_text("APK 0 0 1.5 2.0\n")
    with pytest.raises(ValueError, match=":1:"):
        io.read_model(p)
    p.write_text("SH 0 0 nan\n")
    with pytest.raises(ValueError, match="non-finite"):
        io.read_model(p)


def test_model_and_expansion_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    elems = random_elements(rng, 5, 5)
    terms = [(float(c), d) for c, d in zip(rng.normal(size=10) / 3, elems)]
    model = io.GroundTruthModel(terms, "line one\nline two")
    io.write_model(model, tmp_path / "m.txt")
    back = io.read_model(tmp_path / "m.txt")
    assert back.terms == terms and back.description == model.description
    io.write_expansion(terms, tmp_path / "e.txt", {"reason": "max_iter", "lambda0": 1e-3})
    assert io.read_expansion(tmp_path / "e.txt") == terms
    assert "# reason = \"max_iter\"" in (tmp_path / "e.txt").read_text()


def test_grid_and_data_round_trip(tmp_path):
    g = reuter_grid(12)
    io.write_grid_csv(g, tmp_path / "g.csv")
    back = io.read_grid_csv(tmp_path / "g.csv")
    assert np.array_equal(back.points, g.points)
    header = (tmp_path / "g.csv").read_text().splitlines()[0]
    assert header == "index,x,y,z,lon_deg,lat_deg"
    y = np.random.default_rng(1).normal(size=len(g)) * 1e-7
    io.write_data_csv(y, tmp_path / "y.csv")
    assert np.array_equal(io.read_data_csv(tmp_path / "y.csv"), y)
    assert (tmp_path / "y.csv").read_text().splitlines()[0] == "index,value"


def test_data_csv_errors(tmp_path):
    p = tmp_path / "y.csv"
    p.write_text("index,value\n0,1.0\n2,3.0\n")
    with pytest.raises(ValueError):
        io.read_data_csv(p)


def test_evaluate_field_examples():
    g = reuter_grid(10)
    v = io.evaluate_field(io.GroundTruthModel([(1.0, SphericalHarmonic(0, 0))]), g)
    np.testing.assert_allclose(v, 1 / math.sqrt(4 * math.pi), rtol=1e-15)
    d = AbelPoisson((0.2, -0.1, 0.5))
    np.testing.assert_allclose(io.evaluate_field([(2.0, d)], g), 2 * apk_eval(np.array(d.x), g.points),
                               rtol=1e-15)
    np.testing.assert_array_equal(io.evaluate_field([], g), np.zeros(len(g)))
    # height evaluation is the upward continuation used for the data
    model = [(0.7, SphericalHarmonic(3, -1)), (0.1, d)]
    np.testing.assert_allclose(io.evaluate_field(model, g, 1.06), synthesize_data(model, g, 1.06),
                               rtol=1e-15)


def test_evaluate_field_linear():
    rng = np.random.default_rng(2)
    g = reuter_grid(9)
    elems = random_elements(rng, 4, 4)
    c = rng.normal(size=8)
    whole = io.evaluate_field(list(zip(c, elems)), g)
    parts = sum(io.evaluate_field([(ci, d)], g) for ci, d in zip(c, elems))
    assert np.linalg.norm(whole - parts) <= 1e-13 * np.linalg.norm(parts)


def test_exact_recovery_end_to_end():
    g = reuter_grid(12)
    model = [(1.0, SphericalHarmonic(2, 1)), (-0.4, AbelPoisson((0.3, 0.3, 0.6)))]
    from lrfmp.continuation import ProblemSetup

    setup = ProblemSetup(g, 1.06, synthesize_data(model, g, 1.06))
    dic = Dictionary((SphericalHarmonic(0, 0), SphericalHarmonic(2, 1), AbelPoisson((0.3, 0.3, 0.6))))
    res = run(dic, setup, PursuitConfig(lambda0=0.0, max_iter=50, rel_data_error_stop=1e-12))
    ev = reuter_grid(20)
    np.testing.assert_allclose(io.evaluate_field(res.expansion, ev), io.evaluate_field(model, ev),
                               atol=1e-9)


def test_error_metrics():
    t = np.array([3.0, 4.0])
    assert io.error_metrics(t, t) == (0.0, 0.0, 0.0)
    assert io.error_metrics(np.zeros(2), t)[0] == 1.0
    rel, mx, rms = io.error_metrics(np.array([3.0, 5.0]), t)
    assert rel == pytest.approx(0.2) and mx == 1.0 and rms == pytest.approx(math.sqrt(0.5))
    with pytest.raises(ValueError):
        io.error_metrics(np.zeros(3), t)


def test_diagnostics_csv(tmp_path):
    rng = np.random.default_rng(3)
    from .helpers import random_setup

    setup = random_setup(rng)
    res = run(Dictionary(tuple(random_elements(rng, 3, 3))), setup, PursuitConfig(max_iter=5))
    io.write_diagnostics_csv(res.diagnostics, tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "iter,lambda,res_norm,rel_data_error,elem_kind,elem_params,alpha,objective"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert first[0] == "1" and float(first[6]) == res.diagnostics[0].alpha


def test_field_csv(tmp_path):
    g = reuter_grid(2)
    io.write_field_csv(g, np.arange(6.0), tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "lon_deg,lat_deg,value" and len(lines) == 7
    assert lines[1].split(",")[1] == "90"


def test_experiment_config_round_trip(tmp_path):
    cfg = io.ExperimentConfig(
        data_gamma=12, eval_gamma=17, noise_level=0.01, noise_seed=3,
        learn_lambdas=[1e-2, 1e-3], manual_modes=["fixed", "nonstationary"],
        pursuit=PursuitConfig(lambda0=1e-3, lambda_mode="nonstationary", max_iter=20),
        learn=LearnConfig(force_sh_first=4, opt=OptimizerConfig(max_opt_iter=33)),
    )
    cfg.write(tmp_path / "c.json")
    back = io.ExperimentConfig.read(tmp_path / "c.json")
    assert back == cfg
    with pytest.raises(ValueError, match="unknown"):
        io.ExperimentConfig.from_dict({"data_gama": 3})
    with pytest.raises(ValueError):
        io.ExperimentConfig(data_gamma=20, eval_gamma=20)
