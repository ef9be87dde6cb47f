import filecmp
from pathlib import Path

import pytest

from randdyn.cli import main
from randdyn.config import parse_config_text
from randdyn.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_prob_finite_prints_half(tmp_path, capsys):
    code, out, _ = run(capsys, "prob-finite", "--config", str(CONFIGS / "quadratic_pair.ini"), "--out-dir", str(tmp_path))
    assert code == 0 and out.strip() == "1/2"
    assert (tmp_path / "manifest.json").exists()


def test_reproducible_outputs(tmp_path, capsys):
    for d in ("a", "b"):
        assert main(["delta", "--config", str(CONFIGS / "squares_cubes.ini"), "--out-dir", str(tmp_path / d),
                     "--trials", "8"]) == 0
    capsys.readouterr()
    for name in ("delta.csv", "manifest.json"):
        assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)


def test_counterexample_csv(tmp_path, capsys):
    code, _, _ = run(capsys, "counterexample", "--k", "10", "--d1", "2", "--d2", "3", "--out-dir", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "counterexample.csv").read_text().splitlines()[1:]
    last_odd = float(rows[8].split(",")[3])
    last_even = float(rows[9].split(",")[3])
    assert abs(last_odd - 2.2894) < 2e-3 and abs(last_even - 2.6207) < 1e-4


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[maps]\nf = x^2\n[measure]\nf = 1/3\n")
    assert run(capsys, "delta", "--config", str(bad), "--out-dir", str(tmp_path))[0] == 1
    eq = tmp_path / "eq.ini"
    eq.write_text("[maps]\na = x^2\nb = 2*x^2 + 1\n")
    code, _, err = run(capsys, "clt", "--config", str(eq), "--out-dir", str(tmp_path), "--n-max", "10")
    assert code == 3 and "ZeroVariance" in err
    capped = tmp_path / "capped.ini"
    capped.write_text((CONFIGS / "square.ini").read_text() + "max_bits = 100000\n")
    code, _, _ = run(capsys, "canht", "--config", str(capped), "--out-dir", str(tmp_path), "--eps", "1e-300")
    assert code == 2


def test_usage_error_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["delta", "--seed", "x"])
    assert exc.value.code == 1


def test_classify_fixed_point(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[maps]\nf = x^2\n[point]\nP = 1\n")
    assert run(capsys, "classify", "--config", str(cfg), "--out-dir", str(tmp_path))[0] == 0


@pytest.mark.parametrize("cmd", ["classify", "expected-canht", "census", "orbit", "canht", "check"])
def test_commands_run(tmp_path, capsys, cmd):
    cfg = CONFIGS / ("square.ini" if cmd == "canht" else "quadratic_pair.ini")
    assert run(capsys, cmd, "--config", str(cfg), "--out-dir", str(tmp_path))[0] == 0


def test_config_validation():
    with pytest.raises(ConfigError):
        parse_config_text("[maps]\nf = x^2\n[measure]\ng = 1\n")
    with pytest.raises(ConfigError):
        parse_config_text("[space]\ndimension = 2\n[maps]\nf = X0^2:X1^2:X2^2\n[point]\nP = [1:2]\n")
    with pytest.raises(ConfigError):
        parse_config_text("[bogus]\nx = 1\n")
    cfg = parse_config_text((CONFIGS / "cremona.ini").read_text())
    assert cfg.dimension == 2 and cfg.maps["q"].asserted_morphism
    assert cfg.int_list("n_list") == (1, 2, 3, 4, 6, 8)
