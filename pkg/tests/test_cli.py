import io
import re

import pytest

from raredetect import cli


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def test_boundary_chimeric():
    code, text = run("boundary", "--family", "chimeric", "--beta", "0.75")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("# raredetect ") and "seed=20240101" in lines[0]
    assert float(lines[1]) == 0.5


def test_global_flags_before_and_after():
    _, a = run("--seed", "7", "boundary", "--family", "chimeric", "--beta", "0.75")
    _, b = run("boundary", "--family", "chimeric", "--beta", "0.75", "--seed", "7")
    assert "seed=7" in a and a == b


def test_are():
    code, text = run("are", "--h1", "const", "--h2", "linear2x", "--beta", "0.75", "--r", "0.5")
    assert code == 0
    closed = float(re.search(r"ARE closed-form (\S+)", text).group(1))
    assert closed == pytest.approx(0.75, abs=1e-12)


def test_power_normal_beta1():
    code, text = run("power", "--family", "normal", "--beta", "1", "--r", "1", "--n", "100000", "--test", "llr",
                     "--reps", "200", "--threads", "4")
    assert code == 0
    mean = float(re.search(r"null-mean (\S+)", text).group(1))
    # limit -1/2, approached slowly (about -0.42 at this n)
    assert -0.55 < mean < -0.3


def test_classify_and_critical():
    code, text = run("classify", "--beta", "0.7", "--r", "0.6")
    assert code == 0 and "CompletelyDetectable" in text
    code, text = run("critical", "--beta", "0.7", "--r", "0.6", "--n", "1000", "--reps", "100", "--test", "hc")
    assert code == 0


def test_sweep_writes_files(tmp_path):
    code, _ = run("sweep", "--betas", "0.6,0.8", "--rs", "0.1,0.9", "--out", str(tmp_path))
    assert code == 0
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 5
    assert (tmp_path / "sweep.svg").read_text().rstrip().endswith("</svg>")


def test_limits(tmp_path):
    code, text = run("limits", "--beta", "1", "--r", "2", "--draws", "10000", "--out", str(tmp_path))
    assert code == 0 and "mass_at_inf 1" in text


def test_config_file(tmp_path):
    cfg = tmp_path / "c.conf"
    cfg.write_text("family = chimeric\nbeta = 0.9  # sparse\n")
    code, text = run("--config", str(cfg), "boundary")
    assert code == 0 and float(text.splitlines()[1]) == pytest.approx(0.8)
    code, text = run("--config", str(cfg), "boundary", "--beta", "0.75")
    assert float(text.splitlines()[1]) == 0.5


def test_exit_codes(capsys):
    assert run("bogus")[0] == 2
    assert run("boundary", "--nope")[0] == 2
    assert run("boundary", "--family", "chimeric", "--beta", "0.3")[0] == 1
    assert "beta must lie" in capsys.readouterr().err
    assert run("boundary", "--family", "chimeric")[0] == 1
    assert run("--alpha", "2", "boundary", "--beta", "0.7")[0] == 1
    assert run("--config", "/nonexistent/file", "boundary", "--beta", "0.7")[0] == 1
