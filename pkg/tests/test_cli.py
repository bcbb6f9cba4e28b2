import csv
import io
import json
import math
import subprocess
import sys

import pytest

from pdptools.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_pmf_rows(capsys):
    code, out, _ = run(capsys, "pmf", "--a", "0.5", "--b", "1", "--n", "3")
    assert code == 0
    table = rows(out)
    assert table[0] == ["M", "probability"]
    probs = [float(p) for _, p in table[1:]]
    assert probs == pytest.approx([0.125, 0.375, 0.5], rel=1e-12)


def test_floats_round_trip(capsys):
    _, out, _ = run(capsys, "pmf", "--a", "0.3", "--b", "2.5", "--n", "7")
    for _, p in rows(out)[1:]:
        assert f"{float(p):.17g}" == p


def test_sampling_is_deterministic(capsys):
    first = run(capsys, "sample", "crp", "--a", "0.5", "--b", "1", "--n", "50", "--seed", "42")[1]
    second = run(capsys, "sample", "crp", "--a", "0.5", "--b", "1", "--n", "50", "--seed", "42")[1]
    third = run(capsys, "sample", "crp", "--a", "0.5", "--b", "1", "--n", "50", "--seed", "43")[1]
    assert first == second
    assert first != third


def test_tree_json(capsys):
    code, out, _ = run(capsys, "sample", "tree", "--n", "20", "--schedule", "0.2,0.5", "--maxdepth", "2", "--b", "1", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    text = json.dumps(doc)
    assert "nodes" in text and "edges" in text


@pytest.mark.parametrize(
    "argv",
    [
        ("pmf", "--a", "1.2", "--b", "1", "--n", "3"),
        ("pmf", "--a", "0.5", "--b", "-0.7", "--n", "3"),
        ("pmf", "--a", "0.5", "--b", "1", "--n", "3", "--bogus"),
        ("sample", "tree", "--n", "5", "--schedule", "0.5,0.2", "--maxdepth", "2"),
        ("frobnicate",),
    ],
)
def test_bad_configuration_exits_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("pdptools: error[config]:")
    assert err.count("\n") == 1


def test_memory_cap_exits_4(capsys, monkeypatch):
    monkeypatch.setenv("PDPTOOLS_MEMORY_CAP", "1000")
    code, _, err = run(capsys, "table", "stirling", "--a", "0.5", "--n", "2000")
    assert code == 4
    assert err.startswith("pdptools: error[resource]:")


def test_output_directory_from_environment(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("PDPTOOLS_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "pmf", "--a", "0.5", "--b", "1", "--n", "3")
    assert code == 0 and out == ""
    written = list(tmp_path.iterdir())
    assert len(written) == 1
    assert rows(written[0].read_text())[0] == ["M", "probability"]


def test_explicit_output_file(capsys, tmp_path):
    dest = tmp_path / "pmf.json"
    assert run(capsys, "pmf", "--a", "0", "--b", "1", "--n", "3", "--format", "json", "--output", str(dest))[0] == 0
    assert json.loads(dest.read_text())


def test_evidence_file(capsys, tmp_path):
    counts = tmp_path / "counts.csv"
    counts.write_text(f"count,multiplicity,log_base_mass\n2,1,{math.log(0.2)!r}\n")
    code, out, _ = run(capsys, "evidence", "--a", "0.5", "--b", "1", "--counts", str(counts))
    assert code == 0
    got = {form: float(v) for form, v in rows(out)[1:]}
    assert math.exp(got["multiplicity"]) == pytest.approx(0.05, rel=1e-12)
    assert math.exp(got["indicator"]) == pytest.approx(0.025, rel=1e-12)


def test_malformed_counts_file(capsys, tmp_path):
    counts = tmp_path / "counts.csv"
    counts.write_text("2,x,y,z\n")
    assert run(capsys, "evidence", "--a", "0.5", "--b", "1", "--counts", str(counts))[0] == 2


def test_moments_json(capsys):
    code, out, _ = run(capsys, "moments", "--a", "0.5", "--b", "1", "--n", "3", "--format", "json")
    doc = json.loads(out)
    values = {r[0]: r[1] for r in doc["rows"]}
    assert values["mean"] == pytest.approx(2.375)
    assert values["variance"] == pytest.approx(0.484375)


def test_ratio_table(capsys):
    code, out, _ = run(capsys, "table", "ratio", "--a", "0.5", "--n", "4")
    assert code == 0
    assert rows(out)[0] == ["n", "t", "V"]


def test_verify_quick_as_a_process():
    proc = subprocess.run([sys.executable, "-m", "pdptools", "verify", "quick"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert "[FAIL]" not in proc.stdout
