import dataclasses

import numpy as np
import pytest

from tdgraph import io
from tdgraph.cli import main
from tdgraph.model import init_model
from tdgraph.objective import OptimState
from tdgraph.synth import SynthConfig, generate_dataset
from tdgraph.train import RunConfig

SMALL = """\
# tiny end-to-end config
dataset = {d}/train.tdgv
eval_dataset = {d}/eval.tdgv
mode = dynamic
K = 3
window = 4
epochs = 3
base_lr = 0.1
late_lr = 0.01
decay_epoch = 2
videos = 3
eval_videos = 2
n_frames = 6
n_regions = 8
n_classes = 3
d_raw = 6
max_hits = 2
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL.format(d=tmp_path / "data"))
    return path


def test_dataset_round_trip(tmp_path):
    vids = generate_dataset(SynthConfig(n_frames=5, n_regions=8, n_classes=3, d_raw=5, max_hits=2), 3, 9)
    vids[0].annotations[0].noun = ""
    io.write_dataset(tmp_path / "d.tdgv", vids, 3)
    back, c = io.read_dataset(tmp_path / "d.tdgv")
    assert c == 3 and len(back) == 3
    for a, b in zip(vids, back):
        assert all(x.tobytes() == y.tobytes() for x, y in zip(a.raw_features, b.raw_features))
        assert a.boxes == b.boxes and a.gt_objects == b.gt_objects
        assert a.annotations == b.annotations and a.seed == b.seed


def test_bad_dataset(tmp_path):
    (tmp_path / "bad.tdgv").write_bytes(b"NOTTDG 1 2 3 4\n")
    with pytest.raises(io.FormatError):
        io.read_dataset(tmp_path / "bad.tdgv")
    (tmp_path / "empty.tdgv").write_bytes(b"")
    with pytest.raises(io.FormatError):
        io.read_dataset(tmp_path / "empty.tdgv")


def test_checkpoint_round_trip(tmp_path):
    model = init_model(6, 5, 3, 11)
    optim = OptimState(0.1, 0.9, 5e-4, {k: np.random.default_rng(0).normal(size=v.shape)
                                          for k, v in model.flat().items()})
    io.save_checkpoint(tmp_path / "ck", model, optim, 7, {"mode": "dynamic"})
    m2, o2, epoch, cfg = io.load_checkpoint(tmp_path / "ck")
    assert epoch == 7 and cfg == {"mode": "dynamic"}
    for k, v in model.flat().items():
        assert v.tobytes() == m2.flat()[k].tobytes()
        assert optim.velocity[k].tobytes() == o2.velocity[k].tobytes()
    assert (o2.lr, o2.momentum, o2.weight_decay) == (0.1, 0.9, 5e-4)


def test_config_parsing(tmp_path):
    (tmp_path / "a.cfg").write_text("mode = mean\nuse_lstm = false\nlate_lr = none\n"
                                    "label_fraction = 0.2, 0.4\nvideos = 5\n")
    cfg, synth, sizes = io.split_config(io.read_kv(tmp_path / "a.cfg"), RunConfig)
    assert cfg.mode.value == "mean" and cfg.use_lstm is False and cfg.late_lr is None
    assert synth.label_fraction == (0.2, 0.4) and sizes == {"videos": 5}
    with pytest.raises(io.FormatError):
        io.split_config({"learning_rate": "1"}, RunConfig)
    with pytest.raises(io.FormatError):
        io.split_config({"use_lstm": "maybe"}, RunConfig)


def test_metrics_round_trip(tmp_path):
    io.write_metrics(tmp_path / "m.csv", [(1, "dynamic", 0, "cls_map", "all", 0.1 + 0.2)])
    (row,) = io.read_metrics(tmp_path / "m.csv")
    assert float(row["value"]) == 0.1 + 0.2 and row["variant"] == "dynamic"


def test_cli_pipeline(tmp_path, small_cfg, capsys):
    data = tmp_path / "data"
    assert main(["gen-data", "--config", str(small_cfg), "--out", str(data)]) == 0
    assert (data / "train.tdgv").is_file()
    run = tmp_path / "run"
    assert main(["train", "--config", str(small_cfg), "--out", str(run)]) == 0
    rows = io.read_metrics(run / "metrics.csv")
    assert [int(r["epoch"]) for r in rows] == [1, 2, 3]
    assert len((run / "graph_digests.txt").read_text().splitlines()) == 3
    assert main(["eval", "--config", str(small_cfg), "--out", str(run)]) == 0
    first = (run / "eval_metrics.csv").read_bytes()
    assert main(["eval", "--config", str(small_cfg), "--out", str(run)]) == 0
    assert (run / "eval_metrics.csv").read_bytes() == first
    metrics = {r["metric"] for r in io.read_metrics(run / "eval_metrics.csv")}
    assert {"cls_ap", "cls_map", "det_ap", "det_map"} <= metrics


def test_cli_errors_before_training(tmp_path, small_cfg, capsys):
    run = tmp_path / "run"
    assert main(["train", "--config", str(small_cfg), "--out", str(run)]) == 2
    assert not run.exists()
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / "train.tdgv").write_bytes(b"garbage\n")
    assert main(["train", "--config", str(small_cfg), "--out", str(run)]) == 2
    assert not (run / "checkpoint").exists()
    bad = tmp_path / "bad.cfg"
    bad.write_text("window = 0\n")
    assert main(["train", "--config", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_eval_shape_mismatch(tmp_path, small_cfg):
    data = tmp_path / "data"
    main(["gen-data", "--config", str(small_cfg), "--out", str(data)])
    ck = tmp_path / "ck"
    io.save_checkpoint(ck, init_model(4, 4, 3, 0), None, 0)
    assert main(["eval", "--config", str(small_cfg), "--out", str(tmp_path / "r"), "--checkpoint", str(ck)]) == 2


def test_cli_gradcheck(capsys):
    assert main(["gradcheck", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "worst" in out and "PASS" in out


def test_cli_ablation(tmp_path, small_cfg, capsys):
    out = tmp_path / "abl"
    lines = [ln for ln in small_cfg.read_text().splitlines() if "dataset" not in ln]
    small_cfg.write_text("\n".join(lines).replace("epochs = 3", "epochs = 1"))
    assert main(["ablation", "--config", str(small_cfg), "--out", str(out), "--seeds", "0"]) == 0
    rows = io.read_metrics(out / "ablation.csv")
    assert len({r["variant"] for r in rows}) == 8
    assert "dynamic" in capsys.readouterr().out
