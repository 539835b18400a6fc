import numpy as np
import pytest

from slimlogr import io, slim
from slimlogr.cli import interior_maximum, main


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--n-drugs", "16", "--n-pos", "30", "--n-neg", "30", "--seed", "1", "--out", str(out)]) == 0
    return out


def _data_args(d):
    return ["--pos", str(d / "positives.txt"), "--neg", str(d / "negatives.txt"), "--vocab", str(d / "vocab.txt")]


def test_train_recommend_evaluate(synth_dir, tmp_path):
    model = tmp_path / "model.txt"
    assert main(["train", *_data_args(synth_dir), "--max-admm-iters", "20", "--out", str(model)]) == 0
    rx = tmp_path / "rx.txt"
    rx.write_text("d00|d02\nd08\n")
    recs = tmp_path / "recs.tsv"
    assert main(["recommend", "--model", str(model), "--input", str(rx), "-N", "3", "--out", str(recs)]) == 0
    lines = recs.read_text().splitlines()
    assert lines[0].startswith("prescription_id")
    assert {ln.split("\t")[5] for ln in lines[1:]} <= {"to_avoid", "safe"}
    report = tmp_path / "report.tsv"
    assert main(["evaluate", *_data_args(synth_dir), "--methods", "rand,slim", "--max-admm-iters", "5",
                 "--out", str(report)]) == 0
    rows = report.read_text().splitlines()
    assert rows[0].split("\t") == list(io.REPORT_COLUMNS) and len(rows[1].split("\t")) == 6
    assert "seed=0" in rows


def test_omega_zero_reduces_to_slim(synth_dir, tmp_path):
    model = tmp_path / "m.txt"
    assert main(["train", *_data_args(synth_dir), "--omega", "0", "--out", str(model)]) == 0
    joint, _ = io.load_joint(model)
    data = io.load_dataset(synth_dir / "positives.txt", synth_dir / "negatives.txt", synth_dir / "vocab.txt")
    ref = slim.train_slim(data.positives, slim.SlimHyper(joint.hyper.alpha, joint.hyper.lam, 5000, 1e-10))
    assert np.max(np.abs(joint.W_plus.W - ref.W)) < 1e-4


def test_user_errors_exit_nonzero(synth_dir, tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("a|b\na|b\n")
    assert main(["train", "--pos", str(bad), "--neg", str(synth_dir / "negatives.txt"), "--out", str(tmp_path / "m")]) == 1
    assert "bad.txt:2" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", *_data_args(synth_dir), "--universe-pos", str(bad)])
    assert exc.value.code == 2


def test_interior_maximum():
    g = np.zeros((4, 5))
    g[1, 2] = 1
    assert interior_maximum(g) == (1, 2)
    g[0, 0] = 2
    assert interior_maximum(g) is None
