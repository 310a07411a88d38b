from fractions import Fraction as F

import pytest

from tropmc.cli import main
from tropmc.tables import build, load


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_tables_subcommand(tmp_path, capsys):
    out = tmp_path / "t.tables"
    code, stdout, _ = run_cli(
        capsys, "tables", "--k", "4", "--dim", "4", "--mode", "positive",
        "--loops", "6", "--legs", "4", "--out", str(out),
    )
    assert code == 0
    assert out.exists()
    back = load(out)
    fresh = build(4, 4, "positive", 6, 4)
    assert back.z(3, 6) == fresh.z(3, 6)


def test_sample_subcommand_deterministic(capsys):
    args = ("sample", "--k", "3", "--dim", "3", "--loops", "2", "--legs", "3",
            "--samples", "3", "--seed", "11")
    code1, out1, _ = run_cli(capsys, *args)
    code2, out2, _ = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    for line in out1.splitlines():
        assert line.startswith("V=") and " X=" in line


def test_sample_projective(capsys):
    code, out, _ = run_cli(
        capsys, "sample", "--k", "3", "--dim", "3", "--loops", "1", "--legs", "2",
        "--samples", "2", "--seed", "3", "--projective",
    )
    assert code == 0
    for line in out.splitlines():
        coords = [float(x) for x in line.split(" X=")[1].split(",")]
        assert max(coords) == 1.0


def test_estimate_phi3_deterministic_stdout(capsys):
    args = ("estimate-phi3", "--loops", "1", "--samples", "20000", "--seed", "1")
    code1, out1, _ = run_cli(capsys, *args)
    code2, out2, _ = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    assert "value=" in out1 and "seconds=" not in out1
    value = float(out1.split("value=")[1].split()[0])
    assert abs(value - 0.4431109) < 0.02


def test_estimate_phi3_invalid_sector(capsys):
    code, _, err = run_cli(capsys, "estimate-phi3", "--loops", "1", "--legs", "1",
                           "--samples", "100")
    assert code == 1
    assert "error:" in err


def test_estimate_with_table_file_round_trip(tmp_path, capsys):
    out = tmp_path / "phi3.tables"
    code, _, _ = run_cli(capsys, "tables", "--k", "3", "--dim", "3", "--mode", "plain",
                         "--loops", "1", "--legs", "3", "--out", str(out))
    assert code == 0
    args = ("estimate-phi3", "--loops", "1", "--samples", "20000", "--seed", "5")
    _, direct, _ = run_cli(capsys, *args)
    _, viafile, _ = run_cli(capsys, *args, "--tables", str(out))
    assert direct == viafile


def test_estimate_beta_csv_and_log(tmp_path, capsys):
    log = tmp_path / "runs.log"
    code, out, _ = run_cli(
        capsys, "estimate-beta-prim", "--loops", "3", "--samples", "20000",
        "--seed", "2", "--format", "csv", "--out", str(log),
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "L,samples,value,stderr,seconds"
    assert lines[1].startswith("3,20000,")
    assert "hepp_value=" in log.read_text()


def test_oracle_subcommand(capsys):
    code, out, _ = run_cli(capsys, "oracle", "--k", "3", "--dim", "3",
                           "--loops", "1", "--legs", "2")
    assert code == 0
    assert out.strip() == "2/1"


def test_oracle_rational_output(capsys):
    code, out, _ = run_cli(capsys, "oracle", "--k", "3", "--dim", "7/2",
                           "--loops", "1", "--legs", "2")
    assert code == 0
    num, den = out.strip().split("/")
    assert F(int(num), int(den)) == F(2) / (4 - F(7, 2))


def test_oracle_invalid_sector(capsys):
    code, _, err = run_cli(capsys, "oracle", "--k", "4", "--dim", "4",
                           "--loops", "1", "--legs", "3")
    assert code == 1 and "error:" in err


def test_series_subcommand(capsys):
    code, out, _ = run_cli(capsys, "series", "--dim", "5", "--couplings", "3",
                           "--max-weight", "3")
    assert code == 0
    assert "L=1 phi lam3: -1/3" in out
    assert "L=2 phi lam3^3: -1" in out


def test_series_non_generic_dimension(capsys):
    code, _, err = run_cli(capsys, "series", "--dim", "5", "--couplings", "3,4,5,6",
                           "--max-weight", "4")
    assert code == 1 and "error:" in err


def test_nonpositive_dimension_parse(capsys):
    with pytest.raises(SystemExit):
        main(["oracle", "--k", "3", "--dim", "x/y", "--loops", "1", "--legs", "2"])
