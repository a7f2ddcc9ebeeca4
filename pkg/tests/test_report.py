"""Metrics parsing and report rendering (figures + summary table)."""

import numpy as np
import pytest

from subgraph_contrast.errors import IngestionError
from subgraph_contrast.report import METRIC_COLUMNS, read_metrics, render_report
from subgraph_contrast.training import METRICS_HEADER

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def metrics_text(rows):
    lines = [METRICS_HEADER]
    lines += ["\t".join(str(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_metrics(tmp_path, rows):
    path = tmp_path / "metrics.tsv"
    path.write_text(metrics_text(rows))
    return path


def test_read_metrics_columns(tmp_path):
    rows = [[1, 0.5, 0.6, 0.55, 0.2, 0.9], [2, 0.4, 0.5, 0.45, 0.1, 1.0]]
    path = write_metrics(tmp_path, rows)
    metrics = read_metrics(path)
    assert sorted(metrics) == sorted(METRIC_COLUMNS)
    np.testing.assert_array_equal(metrics["epoch"], [1.0, 2.0])
    np.testing.assert_array_equal(metrics["mean_dw_neg"], [0.9, 1.0])


def test_read_metrics_empty_body(tmp_path):
    metrics = read_metrics(write_metrics(tmp_path, []))
    assert metrics["epoch"].shape == (0,)


def test_read_metrics_rejects_bad_header(tmp_path):
    path = tmp_path / "metrics.tsv"
    path.write_text("epoch\tloss\n1\t0.5\n")
    with pytest.raises(IngestionError, match="header"):
        read_metrics(path)


def test_read_metrics_rejects_ragged_rows(tmp_path):
    path = tmp_path / "metrics.tsv"
    path.write_text(METRICS_HEADER + "\n1\t0.5\n")
    with pytest.raises(IngestionError, match=":2: expected 6 fields"):
        read_metrics(path)


def test_read_metrics_rejects_non_numbers(tmp_path):
    path = tmp_path / "metrics.tsv"
    path.write_text(METRICS_HEADER + "\n1\ta\tb\tc\td\te\n")
    with pytest.raises(IngestionError, match="malformed"):
        read_metrics(path)


def test_read_metrics_missing_file(tmp_path):
    with pytest.raises(IngestionError, match="cannot read"):
        read_metrics(tmp_path / "absent.tsv")


def test_render_report_writes_figures_and_summary(tmp_path):
    rows = [
        [1, 0.9, 0.8, 0.85, 0.3, 0.7],
        [2, 0.7, 0.6, 0.65, 0.25, 0.8],
        [3, 0.5, 0.55, 0.52, 0.2, 0.85],
    ]
    path = write_metrics(tmp_path, rows)
    out = tmp_path / "report"
    artifacts = render_report(path, out)

    for key in ("loss_curves", "distance_means"):
        data = artifacts[key].read_bytes()
        assert data[:8] == PNG_MAGIC
        assert len(data) > 1000

    summary = artifacts["summary"].read_text().splitlines()
    assert summary[0] == "metric\tfirst\tlast\tmin\tmax"
    table = {line.split("\t")[0]: line.split("\t")[1:] for line in summary[1:]}
    assert table["l1"] == ["0.9", "0.5", "0.5", "0.9"]
    assert table["total"][1] == "0.52"
    assert set(table) == set(METRIC_COLUMNS[1:])
