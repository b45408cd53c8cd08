import numpy as np
import pytest

import halfpel


def test_phase_round_trip():
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 255, size=(20, 26))
    a, b, h, j = halfpel.extract_phases(img)
    assert a.shape == (10, 13)
    assert np.array_equal(halfpel.interleave_phases(a, b, h, j), img)


def test_fixed_filters_keep_constants():
    img = np.full((16, 12), 93.0)
    for pos in ("h", "v", "d"):
        assert np.array_equal(halfpel.interp_half(img, pos), img)
        assert np.array_equal(halfpel.interp_half(img, pos, method="avg2"), img)


def test_pgm_round_trip(tmp_path):
    img = np.arange(12, dtype=float).reshape(3, 4) * 20
    halfpel.save_pgm(img, tmp_path / "x.pgm")
    assert np.array_equal(halfpel.load_pgm(tmp_path / "x.pgm"), img)
    with pytest.raises(OSError):
        halfpel.load_pgm(tmp_path / "missing.pgm")


def test_network_weights_round_trip(tmp_path):
    net = halfpel.init_network("v", 27, init_std=0.01, seed=4)
    assert net.position == "v" and net.qp == 27
    halfpel.save_weights(net, tmp_path / "n.cnif")
    assert halfpel.load_weights(tmp_path / "n.cnif") == net
    out = halfpel.apply_network(net, np.full((12, 12), 100.0))
    assert out.shape == (12, 12)


def test_train_reduces_loss():
    rng = np.random.default_rng(1)
    pairs = [(rng.uniform(0, 255, (12, 12)), np.full((12, 12), 180.0)) for _ in range(4)]
    net, curve = halfpel.train(pairs, "h", lr_front=1e-3, lr_last=2e-2, batch_size=1, epochs=10, init_std=1e-3)
    assert len(curve) == 10
    assert curve[-1] < curve[0]


def test_motion_harness_and_bd_rate():
    frames = halfpel.synthetic_clip(width=48, height=32, frames=2)
    same = halfpel.simulate_sequence([frames[0], frames[0]])
    assert same["total"]["sse"] == 0.0
    moving = halfpel.simulate_sequence(frames, method="dctif")
    assert moving["total"]["half_mv_count"] > 0
    anchor = [(100.0, 32.0), (180.0, 34.5), (320.0, 37.2), (600.0, 40.1)]
    assert halfpel.bd_rate(anchor, anchor) == 0.0
    assert halfpel.bd_rate(anchor, [(r * 0.9, p) for r, p in anchor]) == pytest.approx(-10.0, abs=1e-9)
    assert [halfpel.select_model_qp(q) for q in (24, 25, 51)] == [22, 27, 37]


def test_cli_exit_codes(tmp_path):
    assert halfpel.run_cli(["synth", "--kind", "clip", "--frames", "2", "--width", "32", "--height", "32",
                            "--out", str(tmp_path / "clip")]) == 0
    assert halfpel.run_cli(["mc-eval", str(tmp_path / "nowhere"), "--out", str(tmp_path / "m")]) == 2
