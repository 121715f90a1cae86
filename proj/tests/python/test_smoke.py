import math

import pytest

import acbl


def test_profile_constants():
    c = acbl.profile_integrals()
    assert abs(c.gamma0 - 2 * math.sqrt(2) / 3) < 1e-10
    assert abs(c.gamma1 - 8 / (3 * math.sqrt(2))) < 1e-10


def test_heteroclinic_matches_tanh():
    for x in (-3.0, -0.4, 0.0, 1.1, 5.0):
        H, Hx = acbl.heteroclinic(x)
        assert H == pytest.approx(math.tanh(x / math.sqrt(2)), abs=1e-15)
        assert Hx == pytest.approx((1 - H * H) / math.sqrt(2), abs=1e-15)


def test_single_layer_offset_closed_form():
    fbar, residual = acbl.solve_barf_node(1)
    assert abs(fbar[0] - math.log(9 * 8 / (3 * math.sqrt(2))) / (2 * math.sqrt(2))) < 1e-10
    assert residual < 1e-12


def test_radial_solve_and_prediction():
    s = acbl.solve_radial(1, 0.01)
    assert s.residual < 1e-10
    assert len(s.depths) == 1
    assert s.predicted[0] == pytest.approx(2.629253, rel=1e-6)
    assert abs(s.depths[0] / s.predicted[0] - 1) < 0.01


def test_radial_with_python_potential():
    s = acbl.solve_radial(1, 0.01, V=lambda r: 1.0 + 0.5 * r * r)
    assert s.residual < 1e-10
    assert len(s.depths) == 1


def test_config_errors_are_typed():
    with pytest.raises(acbl.ConfigError, match="options.bogus"):
        acbl.config_hash('{"kind": "predict", "eps": [0.01], "options": {"bogus": 1}}')


def test_run_predict(tmp_path):
    rec = acbl.run_experiment({"kind": "predict", "N": 2, "eps": [0.01]}, out=tmp_path)
    assert rec["kind"] == "predict"
    assert rec["passed"]
    assert (tmp_path / rec["config_hash"] / rec["artifacts"][0]).exists()
