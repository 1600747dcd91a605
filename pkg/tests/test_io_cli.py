import json
import os

import numpy as np
import pytest

from pcsparse import ParseError, make_grid, read_cloud, write_cloud
from pcsparse.cli import main


def test_xyz_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(1000, 3))
    path = tmp_path / "cloud.xyz"
    write_cloud(pts, path)
    back = read_cloud(path)
    assert np.array_equal(back, pts)  # 17 significant digits round-trip


def test_xyz_line_parse(tmp_path):
    path = tmp_path / "p.xyz"
    path.write_text("1.0 2.0 3.0\n")
    assert read_cloud(path).tolist() == [[1.0, 2.0, 3.0]]


def test_xyz_parse_error_has_line_number(tmp_path):
    path = tmp_path / "bad.xyz"
    path.write_text("1.0 2.0 3.0\n1.0 oops 3.0\n")
    with pytest.raises(ParseError, match="line 2"):
        read_cloud(path)


def test_xyz_ragged_rows(tmp_path):
    path = tmp_path / "bad.xyz"
    path.write_text("1.0 2.0 3.0\n1.0 2.0\n")
    with pytest.raises(ParseError, match="line 2"):
        read_cloud(path)


def test_ply_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(257, 3))
    path = tmp_path / "cloud.ply"
    write_cloud(pts, path)
    text = path.read_text().splitlines()
    assert text[0] == "ply"
    assert text[1] == "format ascii 1.0"
    assert text[2] == "element vertex 257"
    assert np.array_equal(read_cloud(path), pts)


def test_ply_binary_rejected(tmp_path):
    path = tmp_path / "b.ply"
    path.write_text(
        "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n"
    )
    with pytest.raises(ParseError, match="unsupported"):
        read_cloud(path)


def test_ply_short_body(tmp_path):
    path = tmp_path / "s.ply"
    path.write_text(
        "ply\nformat ascii 1.0\nelement vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "end_header\n0 0 0\n"
    )
    with pytest.raises(ParseError):
        read_cloud(path)


def test_ply_requires_3d(tmp_path):
    with pytest.raises(ParseError):
        write_cloud(np.zeros((3, 2)), tmp_path / "d.ply")


def _write_grid(tmp_path, side=16):
    grid = make_grid(side, 2)
    path = tmp_path / "grid.xyz"
    write_cloud(grid, path)
    return path


def test_cli_octree_quadrants(tmp_path):
    inp = _write_grid(tmp_path)
    out = tmp_path / "out.xyz"
    metrics = tmp_path / "m.json"
    code = main(
        [
            "--input", str(inp), "--output", str(out),
            "--octree-iters", "1", "--metrics", str(metrics),
        ]
    )
    assert code == 0
    pts = read_cloud(out)
    assert pts.shape[0] == 4
    centers = sorted(map(tuple, pts.round(6).tolist()))
    assert centers == [(3.5, 3.5), (3.5, 11.5), (11.5, 3.5), (11.5, 11.5)]
    report = json.loads(metrics.read_text())
    assert report["input_points"] == 256
    assert report["output_points"] == 4
    assert np.isclose(report["compression_percent"], 100 * 4 / 256)
    # metrics trace equals the library trace exactly
    from pcsparse import knn_graph, run_octree

    graph, _ = knn_graph(read_cloud(inp), 8)
    _, _, trace = run_octree(graph, read_cloud(inp), 1)
    assert report["energy_trace"] == trace.energies


def test_cli_l0_run_with_metrics_and_report(tmp_path):
    rng = np.random.default_rng(3)
    pts = rng.random((300, 3))
    inp = tmp_path / "in.ply"
    write_cloud(pts, inp)
    out = tmp_path / "out.ply"
    metrics = tmp_path / "metrics.json"
    report_dir = tmp_path / "figs"
    code = main(
        [
            "--input", str(inp), "--output", str(out),
            "--regularizer", "l0", "--alpha", "0.01",
            "--metrics", str(metrics), "--report", str(report_dir),
        ]
    )
    assert code == 0
    result = read_cloud(out)
    assert 1 <= result.shape[0] < 300
    rep = json.loads(metrics.read_text())
    assert rep["output_points"] == result.shape[0]
    assert rep["iterations"] == len(rep["energy_trace"]) - 1
    assert all(np.isfinite(e) for e in rep["energy_trace"])
    figs = sorted(os.listdir(report_dir))
    assert "clouds.png" in figs and "convergence.png" in figs


def test_cli_determinism(tmp_path):
    rng = np.random.default_rng(4)
    pts = rng.random((200, 3))
    inp = tmp_path / "in.xyz"
    write_cloud(pts, inp)
    outs = []
    for i in range(2):
        out = tmp_path / f"out{i}.xyz"
        code = main(
            ["--input", str(inp), "--output", str(out),
             "--regularizer", "l0", "--alpha", "0.005", "--seed", "7"]
        )
        assert code == 0
        outs.append(read_cloud(out))
    assert np.array_equal(outs[0], outs[1])


def test_cli_expand_writes_full_resolution(tmp_path):
    inp = _write_grid(tmp_path, side=8)
    out = tmp_path / "out.xyz"
    code = main(
        ["--input", str(inp), "--output", str(out), "--octree-iters", "1", "--expand"]
    )
    assert code == 0
    assert read_cloud(out).shape[0] == 64


def test_cli_baseline_path(tmp_path):
    rng = np.random.default_rng(5)
    pts = rng.random((150, 2))
    inp = tmp_path / "in.xyz"
    write_cloud(pts, inp)
    out = tmp_path / "out.xyz"
    code = main(
        [
            "--input", str(inp), "--output", str(out),
            "--baseline", "--regularizer", "pq", "--p", "1", "--q", "1",
            "--alpha", "0.001",
        ]
    )
    assert code == 0
    assert read_cloud(out).shape[0] <= 150


def test_cli_pq_path_with_noise(tmp_path):
    inp = _write_grid(tmp_path, side=8)
    out = tmp_path / "out.xyz"
    code = main(
        [
            "--input", str(inp), "--output", str(out),
            "--regularizer", "pq", "--p", "1", "--q", "1",
            "--alpha", "0.05", "--beta", "0.05",
            "--noise-sigma", "0.01", "--seed", "2",
        ]
    )
    assert code == 0


def test_cli_handles_duplicate_points(tmp_path):
    rng = np.random.default_rng(6)
    base = rng.random((100, 3))
    pts = np.vstack([base, base[:17]])  # repeated rows merge into one vertex
    inp = tmp_path / "dup.xyz"
    write_cloud(pts, inp)
    out = tmp_path / "out.xyz"
    code = main(
        ["--input", str(inp), "--output", str(out),
         "--regularizer", "l0", "--alpha", "0.01", "--expand"]
    )
    assert code == 0
    expanded = read_cloud(out)
    assert expanded.shape[0] == 117  # one value per original point
    assert np.array_equal(expanded[:17], expanded[100:])


def test_cli_missing_input_exits_3(tmp_path):
    code = main(
        ["--input", str(tmp_path / "nope.xyz"), "--output", str(tmp_path / "o.xyz")]
    )
    assert code == 3


def test_cli_bad_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["--input", "x", "--output", "y", "--regularizer", "bogus"])
    assert exc.value.code == 2


def test_cli_invalid_combination_exits_4(tmp_path):
    inp = _write_grid(tmp_path, side=4)
    code = main(
        [
            "--input", str(inp), "--output", str(tmp_path / "o.xyz"),
            "--regularizer", "pq", "--p", "1", "--q", "2", "--cut", "aniso",
        ]
    )
    assert code == 4
