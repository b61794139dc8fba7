import json
import subprocess
import sys
from fractions import Fraction

import pytest

from precy_pipeline.circle_example import load_fixture
from precy_pipeline.main import EXIT_ADVISORY, EXIT_OK, EXIT_VERIFICATION_FAILED, main


def test_main_cli_help():
    # CLI запускается и выдаёт help
    result = subprocess.run([sys.executable, "-m", "precy_pipeline.main", "--help"], capture_output=True, text=True)
    assert "usage" in result.stdout.lower()
    assert result.returncode == 0


@pytest.fixture
def env(tmp_path):
    return ["--env", str(tmp_path / ".env")]


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


def test_narrow_window_is_advisory(env):
    assert main(["homology", "--l", "1", "--d", "1", "--window", "0", "1"] + env) == EXIT_ADVISORY


def test_circle_needs_two_beads(env):
    assert main(["circle", "--bounds", "1"] + env) == EXIT_ADVISORY


def test_odd_legendre_roundtrip(tmp_path, env):
    out = tmp_path / "lambda.json"
    code = main(["odd-legendre", "--dim", "3", "--order", "3", "--seed", "2", "--check", "--out", str(out)] + env)
    doc = json.loads(out.read_text())
    assert code == EXIT_OK
    assert doc["roundtrip"] is True
    assert "2" in doc["lambda"]


def test_odd_legendre_singular(tmp_path, env):
    path = _write(tmp_path, "gamma.json", {"dim": 2, "gamma": {"2": [[1, 1], [1, 1]]}})
    assert main(["odd-legendre", "--input", path] + env) == EXIT_VERIFICATION_FAILED


def test_odd_legendre_malformed(tmp_path, env):
    path = _write(tmp_path, "gamma.json", "{not json")
    assert main(["odd-legendre", "--input", path] + env) == EXIT_ADVISORY


def test_transform_rejects_open_chain(tmp_path, env):
    doc = {"complex": {"vertices": [0, 1], "simplices": [[0, 1]],
                       "fundamental_chain": [{"simplex": [0, 1], "coeff": "1"}]}}
    path = _write(tmp_path, "input.json", doc)
    assert main(["transform", "--input", path] + env) == EXIT_ADVISORY


def test_transform_needs_alpha(tmp_path, env):
    doc = {"complex": {"vertices": [0, 1, 2], "simplices": [[0, 1], [1, 2], [0, 2]],
                       "fundamental_chain": [{"simplex": [0, 1], "coeff": "1"}, {"simplex": [1, 2], "coeff": "1"},
                                             {"simplex": [0, 2], "coeff": "-1"}]}}
    path = _write(tmp_path, "input.json", doc)
    assert main(["transform", "--input", path] + env) == EXIT_ADVISORY


def test_verify_rejects_malformed_candidate(tmp_path, env):
    path = _write(tmp_path, "candidate.json", {"window": 3})
    assert main(["verify", "--input", path] + env) == EXIT_ADVISORY


def test_verify_mu_only_candidate(tmp_path, env):
    path = _write(tmp_path, "candidate.json", {"d": 1, "window": 1, "components": {}})
    out = tmp_path / "report.json"
    code = main(["verify", "--input", path, "--bounds", "2", "--max-tensor", "1", "--out", str(out)] + env)
    assert code == EXIT_OK
    assert json.loads(out.read_text())["passed"] is True


def test_transform_checkpoint_follows_the_inputs(tmp_path, env, monkeypatch):
    monkeypatch.setenv("PRECY_CHECKPOINT_DIR", str(tmp_path / "checkpoints"))
    flags = ["transform", "--lmax", "2", "--bounds", "2", "--max-tensor", "1"] + env
    first = tmp_path / "first.json"
    assert main(flags + ["--out", str(first)]) == EXIT_OK
    resumed = tmp_path / "resumed.json"
    assert main(flags + ["--resume", "--out", str(resumed)]) == EXIT_OK
    assert json.loads(resumed.read_text()) == json.loads(first.read_text())

    fixture = load_fixture("circle")
    doubled = [dict(row, coeff=str(Fraction(row["coeff"]) * 2)) for row in fixture["alpha"]]
    path = _write(tmp_path, "doubled.json", {"complex": fixture["complex"], "alpha": doubled})
    assert main(flags + ["--resume", "--input", path]) == EXIT_VERIFICATION_FAILED


def test_seed_is_a_common_flag(tmp_path, env):
    outs = []
    for n in range(2):
        out = tmp_path / f"lambda_{n}.json"
        assert main(["odd-legendre", "--dim", "3", "--order", "3", "--seed", "2", "--out", str(out)] + env) == EXIT_OK
        outs.append(json.loads(out.read_text()))
    assert outs[0] == outs[1]
    assert outs[0]["bounds"]["seed"] == 2
