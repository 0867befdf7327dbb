from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from dcx_sa.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, read_sa, run, write_sa


@pytest.fixture
def banana(tmp_path):
    path = tmp_path / "banana.txt"
    path.write_bytes(b"banana")
    return path


def test_banana_verify(banana, tmp_path):
    out = tmp_path / "sa.bin"
    assert run(["--input", str(banana), "--out", str(out), "--verify"]) == EXIT_OK
    assert read_sa(out).tolist() == [6, 5, 3, 1, 0, 4, 2]
    assert out.stat().st_size == 7 * 8


def test_outputs_identical_across_parameters(tmp_path):
    text = np.random.default_rng(0).integers(97, 101, 20_000).astype(np.uint8).tobytes()
    src = tmp_path / "t.txt"
    src.write_bytes(text)
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    assert run(["--input", str(src), "--out", str(a), "--pes", "1", "--buckets", "1"]) == EXIT_OK
    assert run(["--input", str(src), "--out", str(b), "--pes", "8", "--buckets", "32,8,1"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_int_width_5(banana, tmp_path):
    out = tmp_path / "sa5.bin"
    assert run(["--input", str(banana), "--out", str(out), "--int-width", "5"]) == EXIT_OK
    assert out.stat().st_size == 5 * 7
    assert read_sa(out, 5).tolist() == [6, 5, 3, 1, 0, 4, 2]


def test_round_trip(tmp_path):
    sa = np.random.default_rng(1).permutation(1000)
    sa[0] = (1 << 39) + 5
    for width in (5, 8):
        path = tmp_path / f"w{width}"
        write_sa(sa, path, width)
        assert np.array_equal(read_sa(path, width), sa)
    with pytest.raises(ValueError):
        write_sa(np.array([1 << 40]), tmp_path / "x", 5)


def test_zero_byte_rejected(tmp_path):
    src = tmp_path / "z.txt"
    src.write_bytes(b"ab\0c")
    assert run(["--input", str(src)]) == EXIT_USAGE


def test_missing_input(tmp_path):
    assert run(["--input", str(tmp_path / "nope")]) == EXIT_IO


def test_unwritable_output(banana, tmp_path):
    assert run(["--input", str(banana), "--out", str(tmp_path / "no" / "dir" / "sa")]) == EXIT_IO


def test_bad_x_is_usage_error(banana):
    with pytest.raises(SystemExit) as exc:
        run(["--input", str(banana), "--x", "5"])
    assert exc.value.code == EXIT_USAGE


def test_metrics_json(banana, tmp_path):
    metrics = tmp_path / "m.json"
    assert run(["--input", str(banana), "--pes", "1", "--metrics", str(metrics), "--verify"]) == EXIT_OK
    doc = json.loads(metrics.read_text())
    assert doc["schema_version"] == 1 and doc["p"] == 1
    assert doc["params"]["int_width"] == 8 and doc["params"]["byte_order"] == "little"
    for level in doc["levels"]:
        for ph in level["phases"].values():
            assert len(ph["sent"]) == 1 and sum(ph["sent"]) == sum(ph["received"])


def test_metrics_deterministic(tmp_path):
    text = np.random.default_rng(3).integers(97, 99, 30_000).astype(np.uint8).tobytes()
    src = tmp_path / "t.txt"
    src.write_bytes(text)
    docs = []
    for i in range(2):
        m = tmp_path / f"m{i}.json"
        assert run(["--input", str(src), "--pes", "3", "--metrics", str(m), "--out", str(tmp_path / f"s{i}")]) == 0
        doc = json.loads(m.read_text())
        for level in doc["levels"]:
            for ph in level["phases"].values():
                ph.pop("wall_time_s")
        doc["params"].pop("output")
        docs.append(doc)
    assert docs[0] == docs[1]
    assert (tmp_path / "s0").read_bytes() == (tmp_path / "s1").read_bytes()


def test_module_entry_point(banana, tmp_path):
    out = tmp_path / "sa.bin"
    proc = subprocess.run(
        [sys.executable, "-m", "dcx_sa", "--input", str(banana), "--out", str(out), "--verify"],
        capture_output=True,
    )
    assert proc.returncode == 0
    assert read_sa(out).tolist() == [6, 5, 3, 1, 0, 4, 2]
