import math

import numpy as np
import pytest

import eitdg


def test_phantoms():
    assert set(eitdg.phantom_names()) == {"one_blob", "two_blobs", "discontinuous"}
    assert eitdg.phantom_value("one_blob", 0.0, 0.55) == pytest.approx(2.0)
    assert eitdg.phantom_value("discontinuous", 0.5, -0.5) == pytest.approx(1.5 + math.exp(-5.8))


def test_eoc_orders():
    rows = eitdg.run_eoc("smooth", [8, 16, 32])
    assert [r["n"] for r in rows] == [8, 16, 32]
    assert rows[0]["order_u"] is None
    assert rows[-1]["order_u"] == pytest.approx(3.0, abs=0.2)


def test_forward_currents_balance():
    g = eitdg.forward_currents("one_blob", 8)
    assert len(g) == 4
    assert g[0].shape == (32, 4)
    # Gauss weights times half the edge length; the net current vanishes
    w = np.array([0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538]) * 0.125
    for current in g:
        assert abs((current * w).sum()) < 1e-10


def test_small_reconstruction():
    r = eitdg.reconstruct("one_blob", n=8, epsilon=1e-2, seed=3, max_outer=5)
    assert r["sigma"].shape == (8, 8)
    assert r["history"][-1] <= r["history"][0]
    assert r["height"] > 1.0
    assert r["stop"] in {"discrepancy", "max_outer"}


def test_run_config(tmp_path):
    cfg = tmp_path / "fwd.ini"
    cfg.write_text("[run]\nmode = forward\n[mesh]\nn = 4\n[forward]\nboundary = zero\n")
    assert eitdg.run_config(str(cfg), str(tmp_path / "out")) == 0
    assert (tmp_path / "out" / "flux_1.csv").read_text().startswith("edge,qp,x,y,f,flux\n")

    bad = tmp_path / "bad.ini"
    bad.write_text("[mesh]\nn = zero\n")
    with pytest.raises(eitdg.ConfigError):
        eitdg.run_config(str(bad))
