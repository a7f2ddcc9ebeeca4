"""End-to-end command-line flows in temporary directories."""

import json

import numpy as np
import pytest

from subgraph_contrast.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_kv(line):
    return dict(token.split("=", 1) for token in line.split())


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One gen-synth -> train flow shared by the downstream command tests."""
    root = tmp_path_factory.mktemp("cli")
    data_dir = root / "data"
    cfg_path = root / "run.cfg"

    code = main([
        "gen-synth", "--out", str(data_dir), "--seed", "3",
        "--blocks", "2", "--nodes-per-block", "20",
        "--p-in", "0.3", "--p-out", "0.05", "--feat-dim", "8",
    ])
    assert code == 0

    cfg_path.write_text(
        f"data_dir = {data_dir}\n"
        "k = 4\nf = 8\nepochs = 3\nbatch_size = 6\not_subsample = 3\n"
        "max_iters = 100\nseed = 3\n"
    )
    train_dir = root / "train"
    code = main(["train", "--config", str(cfg_path), "--out", str(train_dir)])
    assert code == 0
    return {"root": root, "data": data_dir, "cfg": cfg_path, "train": train_dir}


def test_gen_synth_writes_dataset_and_manifest(tmp_path, capsys):
    out = tmp_path / "synth"
    code, stdout, _ = run_cli(
        capsys, "gen-synth", "--out", str(out), "--seed", "1",
        "--blocks", "2", "--nodes-per-block", "15", "--feat-dim", "6",
    )
    assert code == 0
    kv = parse_kv(stdout.strip())
    assert kv["nodes"] == "30"
    for name in ("edges.tsv", "features.csv", "labels.txt", "splits.tsv", "manifest.json"):
        assert (out / name).is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "gen-synth"
    assert manifest["seed"] == 1
    assert set(manifest["artifacts"]) == {"edges", "features", "labels", "splits"}


def test_train_artifacts_and_stdout(workspace):
    train_dir = workspace["train"]
    for name in ("checkpoint.bin", "checkpoint_best.bin", "metrics.tsv", "manifest.json"):
        assert (train_dir / name).is_file()
    manifest = json.loads((train_dir / "manifest.json").read_text())
    assert manifest["command"] == "train"
    assert any(line.startswith("lambda = ") for line in manifest["config"])
    assert "edges" in manifest["input_digests"]
    assert manifest["timings_seconds"]["total"] > 0
    metrics = (train_dir / "metrics.tsv").read_text().splitlines()
    assert metrics[0].startswith("epoch\t")
    assert len(metrics) == 1 + 3  # header + one line per epoch


def test_train_reports_epoch_seconds_on_stderr(workspace, tmp_path, capsys):
    out = tmp_path / "t"
    code, stdout, stderr = run_cli(
        capsys, "train", "--config", str(workspace["cfg"]), "--out", str(out),
    )
    assert code == 0
    kv = parse_kv(stdout.strip())
    assert kv["epochs"] == "3"
    float(kv["final_loss"])
    assert stderr.count("epoch ") == 3
    for line in stderr.strip().splitlines():
        assert line.endswith("s")


def test_embed_then_eval_flow(workspace, tmp_path, capsys):
    embed_dir = tmp_path / "embed"
    code, stdout, _ = run_cli(
        capsys, "embed", "--config", str(workspace["cfg"]),
        "--checkpoint", str(workspace["train"] / "checkpoint.bin"),
        "--out", str(embed_dir),
    )
    assert code == 0
    kv = parse_kv(stdout.strip())
    assert kv["rows"] == "40" and kv["cols"] == "8"
    emb_path = embed_dir / "embeddings.csv"
    assert emb_path.is_file()

    code, stdout, _ = run_cli(
        capsys, "eval", "--config", str(workspace["cfg"]),
        "--embeddings", str(emb_path),
    )
    assert code == 0
    kv = parse_kv(stdout.strip())
    assert 0.0 <= float(kv["accuracy"]) <= 1.0
    assert 0.0 <= float(kv["micro_f1"]) <= 1.0


def test_eval_from_checkpoint_matches_embeddings_csv(workspace, tmp_path, capsys):
    code, from_ckpt, _ = run_cli(
        capsys, "eval", "--config", str(workspace["cfg"]),
        "--checkpoint", str(workspace["train"] / "checkpoint.bin"),
    )
    assert code == 0

    embed_dir = tmp_path / "e"
    run_cli(
        capsys, "embed", "--config", str(workspace["cfg"]),
        "--checkpoint", str(workspace["train"] / "checkpoint.bin"),
        "--out", str(embed_dir),
    )
    code, from_csv, _ = run_cli(
        capsys, "eval", "--config", str(workspace["cfg"]),
        "--embeddings", str(embed_dir / "embeddings.csv"),
    )
    assert code == 0
    assert from_ckpt == from_csv


def test_embed_twice_is_byte_identical(workspace, tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code, _, _ = run_cli(
            capsys, "embed", "--config", str(workspace["cfg"]),
            "--checkpoint", str(workspace["train"] / "checkpoint.bin"),
            "--out", str(out),
        )
        assert code == 0
        outs.append((out / "embeddings.csv").read_bytes())
    assert outs[0] == outs[1]


def test_ot_dist_reports_distances(workspace, tmp_path, capsys):
    cfg = tmp_path / "ot.cfg"
    cfg.write_text(f"data_dir = {workspace['data']}\nk = 4\nmax_iters = 20000\n")
    code, stdout, stderr = run_cli(
        capsys, "ot-dist", "--config", str(cfg),
        "--center-a", "0", "--center-b", "25",
    )
    assert code == 0
    kv = parse_kv(stdout.strip())
    assert float(kv["dw"]) > 0
    assert float(kv["dgw"]) >= 0
    assert float(kv["violation"]) < 1e-6
    assert int(kv["iterations"]) >= 1
    assert "warning" not in stderr


def test_ot_dist_accepts_checkpoint(workspace, capsys):
    code, stdout, _ = run_cli(
        capsys, "ot-dist", "--config", str(workspace["cfg"]),
        "--checkpoint", str(workspace["train"] / "checkpoint.bin"),
        "--center-a", "0", "--center-b", "25",
    )
    assert code == 0
    assert "dw=" in stdout


def test_report_renders_figures(workspace, tmp_path, capsys):
    out = tmp_path / "report"
    code, stdout, _ = run_cli(
        capsys, "report", "--metrics", str(workspace["train"] / "metrics.tsv"),
        "--out", str(out),
    )
    assert code == 0
    kv = parse_kv(stdout.strip())
    assert (out / "loss_curves.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert (out / "distance_means.png").is_file()
    assert (out / "report.tsv").read_text().startswith("metric\t")
    assert kv["summary"].endswith("report.tsv")


def test_config_error_exit_code_and_message(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("lambda = 1.5\n")
    code, _, stderr = run_cli(capsys, "train", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2
    assert "lambda" in stderr


def test_missing_data_dir_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "no_data.cfg"
    cfg.write_text("epochs = 1\n")
    code, _, stderr = run_cli(capsys, "train", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2
    assert "data_dir" in stderr


def test_missing_dataset_file_is_ingestion_error(workspace, tmp_path, capsys):
    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "edges.tsv").write_text("0\t1\n")
    cfg = tmp_path / "broken.cfg"
    cfg.write_text(f"data_dir = {broken}\nepochs = 1\n")
    code, _, stderr = run_cli(capsys, "train", "--config", str(cfg), "--out", str(tmp_path / "out"))
    assert code == 3
    assert "features.csv" in stderr


def test_eval_without_source_is_config_error(workspace, capsys):
    code, _, stderr = run_cli(capsys, "eval", "--config", str(workspace["cfg"]))
    assert code == 2
    assert "--checkpoint or --embeddings" in stderr


def test_bad_checkpoint_is_ingestion_error(workspace, tmp_path, capsys):
    fake = tmp_path / "fake.bin"
    fake.write_bytes(b"not a checkpoint")
    code, _, stderr = run_cli(
        capsys, "embed", "--config", str(workspace["cfg"]),
        "--checkpoint", str(fake), "--out", str(tmp_path),
    )
    assert code == 3
    assert "ingestion error" in stderr


def test_seed_flag_overrides_config(workspace, tmp_path, capsys):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out, seed in ((out_a, "3"), (out_b, "17")):
        code, _, _ = run_cli(
            capsys, "train", "--config", str(workspace["cfg"]),
            "--seed", seed, "--out", str(out),
        )
        assert code == 0
    same = (out_a / "metrics.tsv").read_bytes() == (workspace["train"] / "metrics.tsv").read_bytes()
    assert same  # seed 3 matches the config-seeded baseline run
    assert (out_b / "metrics.tsv").read_bytes() != (out_a / "metrics.tsv").read_bytes()
    manifest = json.loads((out_b / "manifest.json").read_text())
    assert manifest["seed"] == 17
