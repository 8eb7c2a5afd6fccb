import csv
import io
import math
import subprocess
import sys

import pytest

from bsnoise import __version__
from bsnoise.cli import main, parse_angle, read_config


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def data_rows(path, stop_at=None):
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            if stop_at and line == f"# {stop_at}":
                break
            continue
        rows.append(line)
    return list(csv.reader(io.StringIO("\n".join(rows))))


@pytest.mark.parametrize("text,expected", [
    ("0.7", 0.7), ("pi", math.pi), ("pi/4", math.pi / 4), ("3pi/8", 3 * math.pi / 8),
    ("-pi/3", -math.pi / 3), ("2*pi", 2 * math.pi), ("1e-2", 0.01),
])
def test_parse_angle(text, expected):
    assert parse_angle(text) == pytest.approx(expected)


@pytest.mark.parametrize("text", ["", "pie", "pi/", "abc"])
def test_parse_angle_rejects(text):
    import argparse
    with pytest.raises(argparse.ArgumentTypeError):
        parse_angle(text)


def test_read_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nalpha-sq = 4\n\nr_list = 0,0.5  # trailing\n")
    assert read_config(p) == {"alpha_sq": "4", "r_list": "0,0.5"}
    p.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        read_config(p)


def test_sweep_special_rows(tmp_path):
    code, out = run(tmp_path, "disentangle-sweep", "--gamma-steps", "5", "--r-steps", "4")
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == ["gamma", "r", "sigma1", "sigma2", "sigmaS", "sigmaT", "residual"]
    vals = [[float(x) for x in row] for row in rows[1:]]
    assert len(vals) == 20
    for g, r, s1, s2, sS, sT, res in vals:
        assert res <= 1e-10
        if r == 0:
            assert max(abs(s1), abs(s2), abs(sS), abs(sT)) <= 1e-12
        if abs(g - math.pi / 2) < 1e-12:
            assert (s1, s2, sS, sT) == pytest.approx((r, 0, 0, 0), abs=1e-10)
        if abs(g - math.pi / 4) < 1e-12:
            assert (s1, s2, sS, sT) == pytest.approx((r / 2, r / 2, r / 2, 0), abs=1e-10)


def test_header_comments(tmp_path):
    code, out = run(tmp_path, "kappa", "--r-steps", "3")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == f"# bsnoise {__version__} kappa"
    assert any(line.startswith("# r_max=") for line in lines)
    assert any(line.startswith("# angles=") for line in lines)


def test_kappa_rows(tmp_path):
    code, out = run(tmp_path, "kappa", "--r-steps", "3", "--r-max", "1", "--angles", "0,pi/2,pi")
    assert code == 0
    rows = [[float(x) for x in row] for row in data_rows(out)[1:]]
    for ang, r, mod, _ in rows:
        want = {0.0: math.exp(r), math.pi / 2: math.sqrt(math.cosh(2 * r)), math.pi: math.exp(-r)}
        assert mod == pytest.approx(min(want.items(), key=lambda kv: abs(kv[0] - ang))[1], rel=1e-12)


def test_determinism_byte_identical(tmp_path):
    argv = ["dist", "--r-list", "0,0.5", "--alpha-sq", "4", "--baseline", "--threads", "2"]
    _, a = run(tmp_path, *argv, name="a.csv")
    _, b = run(tmp_path, *argv, name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_dist_summary_poisson_half(tmp_path):
    code, out = run(tmp_path, "dist", "--r-list", "0", "--gamma", "pi/4")
    assert code == 0
    text = out.read_text()
    summary = text.split("# summary\n", 1)[1].splitlines()
    assert summary[0].startswith("r,mean,variance")
    r, mean, var = (float(x) for x in summary[1].split(",")[:3])
    assert (mean, var) == pytest.approx((10.0, 10.0), abs=1e-5)


def test_dist_fixed_grid_too_small_is_tolerance_failure(tmp_path):
    code, _ = run(tmp_path, "dist", "--r-list", "1.5", "--gamma", "pi/8", "--grid", "80,80")
    assert code == 3


def test_darkport_moment_table(tmp_path):
    code, out = run(tmp_path, "darkport", "--r-list", "0,0.6")
    assert code == 0
    table = out.read_text().split("# moments\n", 1)[1].splitlines()
    vals = [[float(x) for x in row.split(",")] for row in table[1:]]
    assert vals[1][3] == pytest.approx(20 + math.sinh(0.6) ** 2)
    assert max(max(v[5], v[6]) for v in vals) <= 1e-6


def test_optimal_monotone(tmp_path):
    code, out = run(tmp_path, "optimal", "--points", "10")
    assert code == 0
    rs = [float(row[1]) for row in data_rows(out)[1:]]
    assert all(b >= a for a, b in zip(rs, rs[1:]))


def test_oracle_check_pass_and_golden(tmp_path, capsys):
    g = tmp_path / "g.csv"
    code, out = run(tmp_path, "oracle-check", "--golden", str(g))
    assert code == 0
    assert "PASS" in capsys.readouterr().err
    assert g.read_text().startswith("# cutoff=24")


def test_oracle_check_theta_case(tmp_path):
    code, _ = run(tmp_path, "oracle-check", "--theta", "pi/3", "--r", "0.4",
                  "--gamma", "0.7", "--alpha-sq", "2")
    assert code == 0


def test_oracle_check_tolerance_exit(tmp_path, capsys):
    code, _ = run(tmp_path, "oracle-check", "--tol", "1e-30", "--r", "0.5")
    assert code == 3
    assert "FAIL" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["dist", "--alpha-sq", "-1"],
    ["dist", "--r-list", "-0.5"],
    ["dist", "--gamma", "nonsense"],
    ["disentangle-sweep", "--gamma-steps", "1"],
    ["optimal", "--min", "10", "--max", "1"],
    ["kappa", "--r-max", "-1"],
    ["nope"],
])
def test_invalid_input_exit_code(tmp_path, argv, capsys):
    code, _ = run(tmp_path, *argv)
    assert code == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("r-steps = 3\nr-max = 1.0\nangles = 0\n")
    code, out = run(tmp_path, "kappa", "--config", str(cfg))
    assert code == 0
    rows = data_rows(out)[1:]
    assert len(rows) == 3 and float(rows[-1][1]) == 1.0
    code, out = run(tmp_path, "kappa", "--config", str(cfg), "--r-steps", "5", name="b.csv")
    assert len(data_rows(out)[1:]) == 5


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("wibble = 3\n")
    code, _ = run(tmp_path, "kappa", "--config", str(cfg))
    assert code == 2


def test_svg_written(tmp_path):
    svg = tmp_path / "k.svg"
    code, _ = run(tmp_path, "kappa", "--r-steps", "5", "--svg", str(svg))
    assert code == 0
    text = svg.read_text()
    assert text.startswith("<svg") or text.startswith("<?xml")
    assert "polyline" in text or "path" in text


def test_module_entry_point_stdout():
    proc = subprocess.run([sys.executable, "-m", "bsnoise", "kappa", "--r-steps", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("# bsnoise")
