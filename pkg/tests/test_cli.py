"""End-to-end command line tests, run in process through main()."""

import csv
import json
from types import SimpleNamespace

import pytest

from bandgcn.cli import main

CONFIG_TEXT = """\
[experiment]
bands = Broadband
cv_folds = 2
seed = 11

[synthesis]
duration_s = 240
n_seizures = 4
seizure_min_s = 10
seizure_max_s = 20

[balance]
smote_k = 2

[gcn]
layer_dims = 66,8,2
epochs = 10
"""


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One completed run shared by the read-only CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    ini = root / "exp.ini"
    ini.write_text(CONFIG_TEXT)
    out = root / "out"
    assert main(["run", "--config", str(ini), "--output-dir", str(out)]) == 0
    (run_dir,) = list(out.iterdir())
    return SimpleNamespace(root=root, ini=ini, out=out, run_dir=run_dir)


# ------------------------------------------------------------------- success

def test_validate_graph(capsys):
    assert main(["validate-graph"]) == 0
    output = capsys.readouterr().out
    assert "nodes: 23" in output
    assert "edges: 43" in output
    assert "all invariants hold" in output


def test_validate_graph_exports_edges(tmp_path, capsys):
    edges = tmp_path / "edges.csv"
    assert main(["validate-graph", "--edges", str(edges)]) == 0
    rows = read_rows(edges)
    assert rows[0] == ["node_i", "node_j"]
    assert len(rows) == 1 + 43


def test_run_writes_expected_artifacts(workspace):
    run_dir = workspace.run_dir
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["run_id"] == run_dir.name
    for name in ("metrics.csv", "comparison.csv", "graph_edges.csv"):
        assert (run_dir / name).is_file()
    band_dir = run_dir / "Broadband"
    for name in ("roc.csv", "pr.csv", "confusion.csv", "checkpoint.json"):
        assert (band_dir / name).is_file()
    header = read_rows(run_dir / "metrics.csv")[0]
    assert header[:2] == ["band", "fold"]


def test_run_is_write_once(workspace, capsys):
    code = main(["run", "--config", str(workspace.ini),
                 "--output-dir", str(workspace.out)])
    assert code == 1
    assert "write-once" in capsys.readouterr().err


def test_run_from_manifest_reproduces_bytes(workspace, tmp_path):
    manifest = workspace.run_dir / "manifest.json"
    assert main(["run", "--manifest", str(manifest),
                 "--output-dir", str(tmp_path)]) == 0
    replay_dir = tmp_path / workspace.run_dir.name
    for name in ("manifest.json", "metrics.csv", "comparison.csv"):
        assert (replay_dir / name).read_bytes() == \
            (workspace.run_dir / name).read_bytes()


def test_run_override_changes_run_id(workspace, tmp_path):
    assert main(["run", "--config", str(workspace.ini),
                 "--set", "experiment.seed=12", "--set", "gcn.epochs=2",
                 "--output-dir", str(tmp_path)]) == 0
    (new_dir,) = list(tmp_path.iterdir())
    assert new_dir.name != workspace.run_dir.name


def test_synth_writes_recording(workspace, tmp_path, capsys):
    assert main(["synth", "--config", str(workspace.ini),
                 "--output-dir", str(tmp_path)]) == 0
    output = capsys.readouterr().out
    assert output.count("wrote ") == 2
    edf = tmp_path / "synthetic.edf"
    assert edf.stat().st_size > 256 * 24  # header and at least one record
    rows = read_rows(tmp_path / "annotations.csv")
    assert rows[0] == ["file_id", "start_s", "end_s"]
    assert len(rows) == 1 + 4
    assert all(row[0] == "synthetic.edf" for row in rows[1:])


def test_features_exports_per_band_csv(workspace, tmp_path):
    assert main(["features", "--config", str(workspace.ini),
                 "--output-dir", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "features_Broadband.csv")
    assert rows[0][:5] == ["source_file", "band", "window_k", "label", "f_0"]
    assert len(rows) == 1 + 40  # 240 s in 6 s windows
    manifest = json.loads((tmp_path / "features_manifest.json").read_text())
    assert manifest["n_feature_columns"] == 23 * 66


def test_predict_scores_every_window(workspace, tmp_path):
    edf_dir = tmp_path / "rec"
    assert main(["synth", "--config", str(workspace.ini),
                 "--set", "experiment.seed=99",
                 "--output-dir", str(edf_dir)]) == 0
    out_csv = tmp_path / "pred.csv"
    checkpoint = workspace.run_dir / "Broadband" / "checkpoint.json"
    assert main(["predict", "--checkpoint", str(checkpoint),
                 "--edf", str(edf_dir / "synthetic.edf"),
                 "--out", str(out_csv), "--band", "Broadband"]) == 0
    rows = read_rows(out_csv)
    assert rows[0] == ["window_k", "start_s", "end_s", "p_seizure", "label"]
    assert len(rows) == 1 + 40
    assert {row[4] for row in rows[1:]} <= {"0", "1"}


# ------------------------------------------------------------ failure modes

def test_run_needs_exactly_one_source(workspace, capsys):
    assert main(["run"]) == 1
    assert "exactly one" in capsys.readouterr().err
    assert main(["run", "--config", str(workspace.ini),
                 "--manifest", "x.json"]) == 1


def test_run_rejects_overrides_with_manifest(workspace, capsys):
    manifest = workspace.run_dir / "manifest.json"
    assert main(["run", "--manifest", str(manifest),
                 "--set", "experiment.seed=1"]) == 1
    assert "--set" in capsys.readouterr().err


def test_missing_config_file(capsys):
    assert main(["run", "--config", "no_such.ini"]) == 1
    assert "config error" in capsys.readouterr().err


def test_unknown_band_rejected(workspace, tmp_path, capsys):
    code = main(["run", "--config", str(workspace.ini),
                 "--set", "experiment.bands=Gamma",
                 "--output-dir", str(tmp_path)])
    assert code == 1
    assert "unknown band" in capsys.readouterr().err


def test_unknown_config_key_rejected(workspace, capsys):
    assert main(["run", "--config", str(workspace.ini),
                 "--set", "experiment.bogus=1"]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_malformed_override_rejected(workspace, capsys):
    assert main(["synth", "--config", str(workspace.ini),
                 "--set", "bad_override"]) == 1
    assert "section.key=value" in capsys.readouterr().err


def test_predict_band_mismatch_is_data_error(workspace, tmp_path, capsys):
    checkpoint = workspace.run_dir / "Broadband" / "checkpoint.json"
    edf_dir = tmp_path / "rec"
    assert main(["synth", "--config", str(workspace.ini),
                 "--output-dir", str(edf_dir)]) == 0
    code = main(["predict", "--checkpoint", str(checkpoint),
                 "--edf", str(edf_dir / "synthetic.edf"),
                 "--out", str(tmp_path / "p.csv"), "--band", "Delta"])
    assert code == 2
    assert "data error" in capsys.readouterr().err


def test_predict_missing_checkpoint(tmp_path, capsys):
    code = main(["predict", "--checkpoint", str(tmp_path / "none.json"),
                 "--edf", str(tmp_path / "none.edf"),
                 "--out", str(tmp_path / "p.csv")])
    assert code == 1
    assert "config error" in capsys.readouterr().err


def test_predict_corrupt_edf(workspace, tmp_path, capsys):
    checkpoint = workspace.run_dir / "Broadband" / "checkpoint.json"
    bad = tmp_path / "bad.edf"
    bad.write_bytes(b"this is not an edf file")
    code = main(["predict", "--checkpoint", str(checkpoint),
                 "--edf", str(bad), "--out", str(tmp_path / "p.csv")])
    assert code == 2
    assert "data error" in capsys.readouterr().err


def test_unknown_subcommand_and_empty(capsys):
    assert main(["frobnicate"]) == 1
    assert main([]) == 1
    err = capsys.readouterr().err
    assert "bandgcn" in err


def test_missing_required_flag(capsys):
    assert main(["synth"]) == 1
    assert "--config" in capsys.readouterr().err
