import json
import math

import pytest

import avgcn


def line_text(n_frames=25, peds=3):
    rows = []
    for f in range(n_frames):
        for p in range(peds):
            rows.append(f"{f * 10} {p + 1} {0.4 * f:.3f} {1.5 * p:.3f}")
    return "\n".join(rows) + "\n"


def test_windows_and_metrics():
    windows = avgcn.parse_windows(line_text(), "TOY")
    assert len(windows) == 6
    w = windows[0]
    assert len(w) == 3
    assert w.t_obs == 8 and w.t_pred == 12
    cv = avgcn.constant_velocity_baseline(w)
    truth = [tuple(p) for p in w.positions[0][8:]]
    assert avgcn.ade(cv[0], truth) == pytest.approx(0.0, abs=1e-12)
    shifted = [(x + 0.3, y + 0.4) for x, y in truth]
    assert avgcn.ade(shifted, truth) == pytest.approx(0.5)
    assert avgcn.fde(shifted, truth) == pytest.approx(0.5)
    assert avgcn.best_of_k([shifted, truth], truth) == (0.0, 0.0)


def test_normalised_distributions():
    out = avgcn.visual_filter([0.25, 0.25, 0.5], [(0, 0), (-1, 0), (2, 0.5)], 0, (1.0, 0.0))
    assert out[1] == 0.0
    assert sum(out) == pytest.approx(1.0)
    gt = avgcn.ground_truth_attention([(1.0, 0.0)], [(0, 0), (1, 0), (4, 4)], 0.5)
    assert sum(gt) == pytest.approx(1.0)
    assert max(range(3), key=lambda j: gt[j]) == 1
    for row in avgcn.star_adjacency(4, 2):
        assert sum(row) == pytest.approx(1.0)


def test_networks_train_and_predict(tmp_path):
    corpus = avgcn.crowd_corpus(4, seed=2)
    assert [d.name for d in corpus] == ["ETH", "HOTEL", "UNIV", "ZARA1", "ZARA2"]
    windows = [w for d in corpus for w in d.windows]
    net, losses = avgcn.AttentionNet.train(windows, epochs=2, seed=1)
    assert len(losses) == 2
    out = net.forward(windows[0], 0)
    assert sum(out["attention"]) == pytest.approx(1.0)
    assert len(out["motion"]) == 4

    pred, recon = avgcn.Predictor.train(windows, arm="AVGCN", attention=net, epochs=1)
    assert len(recon) == 1
    samples = pred.predict(windows[0], arm="AVGCN", attention=net, k=3, seed=5)
    assert len(samples) == len(windows[0])
    assert len(samples[0]) == 3 and len(samples[0][0]) == 12
    again = pred.predict(windows[0], arm="AVGCN", attention=net, k=3, seed=5)
    assert samples == again

    with pytest.raises(avgcn.ConfigError):
        pred.predict(windows[0], arm="AVGCN")

    k1 = pred.evaluate(windows, arm="GCN", k=1)
    k20 = pred.evaluate(windows, arm="GCN", k=20)
    assert k20["ade"] <= k1["ade"] + 1e-12

    path = str(tmp_path / "pred.ckpt")
    pred.save(path)
    loaded = avgcn.Predictor.load(path)
    assert loaded.predict(windows[0], k=2, seed=1) == pred.predict(windows[0], k=2, seed=1)
    with pytest.raises(avgcn.DataError):
        avgcn.AttentionNet.load(path)


def test_session_validation():
    samples = [
        {"t": i / 50, "gaze_xy": [0.0, 0.0], "agent_xy": [0.0, 0.0], "agent_v": [0.0, 0.0]}
        for i in range(60)
    ]
    doc = {
        "format_version": 1,
        "scene_ref": {"dataset_id": "ETH", "start_frame": 0},
        "goal": [5.0, 0.0],
        "samples": samples,
    }
    assert avgcn.validate_session(json.dumps(doc)) == []
    samples[9]["t"] = samples[8]["t"]
    errors = avgcn.validate_session(json.dumps(doc))
    assert errors[0][0] == "samples[9].t"
    assert "sample index 9" in errors[0][1]


def test_config_and_commands(tmp_path):
    cfg = json.loads(avgcn.parse_config("{}"))
    assert cfg["attention_lr"] == 1e-3 and cfg["k"] == 20 and cfg["field_angle"] == 120.0
    with pytest.raises(avgcn.ConfigError):
        avgcn.parse_config('{"learning_rate": 1}')

    data = tmp_path / "data"
    avgcn.synth(str(data), frames=60, seed=3)
    base = {"data_dir": str(data), "held_out": "ZARA1", "arm": "GCN",
            "attention_epochs": 1, "predictor_epochs": 1, "k": 2}
    ckpt = avgcn.run_command("train-predictor",
                             json.dumps({**base, "output_dir": str(tmp_path / "p")}))
    report = avgcn.run_command("eval", json.dumps(
        {**base, "output_dir": str(tmp_path / "e"), "predictor_checkpoint": ckpt}))
    assert avgcn.validate_report(report) == []
    parsed = json.loads(report)
    assert parsed["rows"][0]["dataset"] == "ZARA1"
    assert math.isfinite(parsed["average"]["model"]["ade"])
    with pytest.raises(avgcn.ConfigError):
        avgcn.run_command("train-predictor",
                          json.dumps({**base, "arm": "AVGCN", "output_dir": str(tmp_path / "q")}))
