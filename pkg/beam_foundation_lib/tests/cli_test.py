import json
import math
import os

import pytest

from beam_foundation_lib.logger import LogHandler
from cli import CLI, EXIT_CONTRACTION, EXIT_FAILED, EXIT_OK, EXIT_USAGE, LOG_MAX_BYTES, build_parser


@pytest.fixture
def cli(tmp_path):
    """
    CLI logging into a temporary file.

    :param tmp_path: Pytest temporary directory.
    :return: CLI instance.
    """
    return CLI(log_file=tmp_path / "logs" / "cli.log")


def test_parser_defaults():
    """
    Test the defaults of the spectrum and deflect subcommands.
    """
    args = build_parser().parse_args(["spectrum"])
    assert (args.n, args.rule, args.window) == (400, "gauss_legendre", [16, 48])
    args = build_parser().parse_args(["deflect", "--load", "w.csv"])
    assert (args.mode, args.epsilon, args.amplitude) == ("infinite", 0.1, None)


def test_log_goes_to_rotating_file_only(cli):
    """
    :param cli: CLI fixture.
    """
    handlers = cli.logger.logger.handlers
    assert [type(handler) for handler in handlers] == [LogHandler.ROTATING.value]
    assert handlers[0].maxBytes == LOG_MAX_BYTES
    assert not cli.logger.logger.propagate


def test_eval_q_at_one(cli, capsys):
    """
    :param cli: CLI fixture.
    :param capsys: Pytest fixture capturing stdout.
    """
    assert cli.run(["eval", "q", "1"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "q(1) = 0"


def test_eval_ghat_at_lower_branch_point(cli, capsys):
    """
    Test ghat(sqrt2 - 1) = -pi/2.

    :param cli: CLI fixture.
    :param capsys: Pytest fixture capturing stdout.
    """
    assert cli.run(["eval", "ghat", "0.4142135624"]) == EXIT_OK
    value = float(capsys.readouterr().out.split("=")[1])
    assert value == pytest.approx(-0.5 * math.pi, abs=1e-9)


def test_eval_kernel_at_zero(cli, capsys):
    """
    :param cli: CLI fixture.
    :param capsys: Pytest fixture capturing stdout.
    """
    assert cli.run(["eval", "K", "0", "--alpha", "1", "--k", "1"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "K(0) = 0.353553390593274"


def test_eval_several_values_with_L(cli, capsys):
    """
    :param cli: CLI fixture.
    :param capsys: Pytest fixture capturing stdout.
    """
    assert cli.run(["eval", "psi", "0", "1", "--L", "2"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    assert lines[0] == "psi(0) = 1"


def test_eval_domain_error(cli, capsys):
    """
    Test that a value outside the domain is a usage error.

    :param cli: CLI fixture.
    :param capsys: Pytest fixture capturing stdout.
    """
    assert cli.run(["eval", "f", "2"]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    [],
    ["eval", "nope", "1"],
    ["scan", "--grid", "5"],
    ["scan", "--depth", "deep"],
    ["deflect"],
])
def test_malformed_arguments(cli, argv):
    """
    :param cli: CLI fixture.
    :param argv: Invalid argument list.
    """
    assert cli.run(argv) == EXIT_USAGE


def test_scan_small_region(cli, tmp_path, capsys):
    """
    Test a coarse scan: exit 0, JSON report with manifest and the per-cell CSV.

    :param cli: CLI fixture.
    :param tmp_path: Pytest temporary directory.
    :param capsys: Pytest fixture capturing stdout.
    """
    output, cells = tmp_path / "scan.json", tmp_path / "cells.csv"
    code = cli.run(["scan", "--kappa-min", "0.1", "--kappa-max", "10", "--L-min", "0.5", "--L-max", "20",
                    "--grid", "20", "10", "--depth", "1", "--output", str(output), "--cells", str(cells)])
    assert code == EXIT_OK
    assert "all_positive = true" in capsys.readouterr().out
    report = json.loads(output.read_text())
    assert report["schema_version"] == "1.0"
    assert report["manifest"]["subcommand"] == "scan"
    assert report["manifest"]["parameters"]["grid"] == [20, 10]
    assert report["scan"]["all_positive"] is True
    assert cells.read_text().startswith("kappa_lo,kappa_hi,L_lo,L_hi,min_margin,error_bound,depth")


def test_scan_inverted_fails(cli, tmp_path, capsys):
    """
    :param cli: CLI fixture.
    :param tmp_path: Pytest temporary directory.
    :param capsys: Pytest fixture capturing stdout.
    """
    code = cli.run(["scan", "--grid", "10", "6", "--depth", "0", "--invert", "--output", str(tmp_path / "inv.json")])
    assert code == EXIT_FAILED
    assert "all_positive = false" in capsys.readouterr().out


def test_scan_output_is_directory(cli, tmp_path):
    """
    :param cli: CLI fixture.
    :param tmp_path: Pytest temporary directory.
    """
    assert cli.run(["scan", "--grid", "4", "4", "--output", str(tmp_path)]) == EXIT_USAGE


def test_spectrum(cli, tmp_path, capsys):
    """
    Test the spectrum summary line and both output files.

    :param cli: CLI fixture.
    :param tmp_path: Pytest temporary directory.
    :param capsys: Pytest fixture capturing stdout.
    """
    output = tmp_path / "spectrum.json"
    assert cli.run(["spectrum", "--n", "200", "--window", "4", "12", "--output", str(output)]) == EXIT_OK
    line = capsys.readouterr().out.strip()
    assert line.startswith("lambda_1 = 0.")
    assert "verdict = CONFINED" in line
    assert "decay slope = -" in line
    summary = json.loads(output.read_text())["spectrum"]
    assert summary["n"] == 200
    assert summary["decay"]["window"] == [4, 12]
    table = output.with_suffix(".csv").read_text().splitlines()
    assert table[0] == "index,eigenvalue,symmetry_class,residual,error_estimate"
    assert len(table) == 201


def test_spectrum_too_few_nodes(cli, tmp_path):
    """
    :param cli: CLI fixture.
    :param tmp_path: Pytest temporary directory.
    """
    assert cli.run(["spectrum", "--n", "3", "--output", str(tmp_path / "s.json")]) == EXIT_USAGE


def test_deflect_zero_load(cli, test_data_path, tmp_path, capsys):
    """
    :param cli: CLI fixture.
    :param test_data_path: Path to the test data directory.
    :param tmp_path: Pytest temporary directory.
    :param capsys: Pytest fixture capturing stdout.
    """
    output = tmp_path / "zero.csv"
    assert cli.run(["deflect", "--load", str(test_data_path / "zero_load.csv"), "--output", str(output)]) == EXIT_OK
    assert "residual = 0" in capsys.readouterr().out
    rows = output.read_text().splitlines()
    assert rows[0] == "x,u"
    assert all(float(row.split(",")[1]) == 0.0 for row in rows[1:])


def test_deflect_gaussian_residual(cli, gaussian_load_file, tmp_path, capsys):
    """
    :param cli: CLI fixture.
    :param gaussian_load_file: CSV with a unit Gaussian load.
    :param tmp_path: Pytest temporary directory.
    :param capsys: Pytest fixture capturing stdout.
    """
    output = tmp_path / "gaussian.csv"
    assert cli.run(["deflect", "--load", str(gaussian_load_file), "--output", str(output)]) == EXIT_OK
    residual_line = next(line for line in capsys.readouterr().out.splitlines() if line.startswith("residual"))
    assert float(residual_line.split("=")[1]) < 1e-3
    metadata = json.loads(output.with_suffix(".json").read_text())
    assert metadata["deflection"]["solver"] == "infinite"
    assert metadata["manifest"]["paths"]["load"] == str(gaussian_load_file)


def test_deflect_nonlinear(cli, tmp_path, capsys):
    """
    Test the iteration table of the fixed-point mode.

    :param cli: CLI fixture.
    :param tmp_path: Pytest temporary directory.
    :param capsys: Pytest fixture capturing stdout.
    """
    load = tmp_path / "unit_load.csv"
    load.write_text("x,w\n" + "".join(f"{-1.0 + 0.01 * i:.2f},1\n" for i in range(201)))
    output = tmp_path / "nonlinear.csv"
    code = cli.run(["deflect", "--load", str(load), "--mode", "nonlinear", "--n", "100", "--output", str(output)])
    assert code == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0].split() == ["m", "diff", "ratio"]
    assert any(line.startswith("rho = ") for line in out)
    metadata = json.loads(output.with_suffix(".json").read_text())["deflection"]
    assert metadata["solver"] == "fixed_point"
    assert metadata["rho"] < 0.1


def test_deflect_non_contraction(cli, gaussian_load_file, tmp_path, capsys):
    """
    :param cli: CLI fixture.
    :param gaussian_load_file: CSV with a unit Gaussian load.
    :param tmp_path: Pytest temporary directory.
    :param capsys: Pytest fixture capturing stdout.
    """
    code = cli.run(["deflect", "--load", str(gaussian_load_file), "--mode", "nonlinear", "--n", "100",
                    "--lipschitz", "100", "--output", str(tmp_path / "nc.csv")])
    assert code == EXIT_CONTRACTION
    assert "contraction factor" in capsys.readouterr().err
    assert not (tmp_path / "nc.csv").exists()


@pytest.mark.parametrize("filename", ["malformed_load.csv", "nonuniform_load.csv", "non_utf8_load.csv",
                                      "missing.csv"])
def test_deflect_bad_load(cli, test_data_path, tmp_path, filename):
    """
    :param cli: CLI fixture.
    :param test_data_path: Path to the test data directory.
    :param tmp_path: Pytest temporary directory.
    :param filename: Load file that is malformed or absent.
    """
    code = cli.run(["deflect", "--load", str(test_data_path / filename), "--output", str(tmp_path / "bad.csv")])
    assert code == EXIT_USAGE
    assert not (tmp_path / "bad.csv").exists()


def test_check(cli, tmp_path, capsys):
    """
    :param cli: CLI fixture.
    :param tmp_path: Pytest temporary directory.
    :param capsys: Pytest fixture capturing stdout.
    """
    output = tmp_path / "checks.json"
    assert cli.run(["check", "--seed", "3", "--output", str(output)]) == EXIT_OK
    assert "FAIL" not in capsys.readouterr().out
    report = json.loads(output.read_text())
    assert report["all_passed"] is True
    assert report["manifest"]["seed"] == 3
    assert len(report["checks"]) == 14


@pytest.mark.parametrize("argv", [
    ["scan", "--grid", "10", "5", "--depth", "0"],
    ["check", "--seed", "0"],
])
def test_unwritable_report_is_usage_error(cli, tmp_path, monkeypatch, capsys, argv):
    """
    Test that a report that cannot be moved into place fails the run instead of exiting 0.

    :param cli: CLI fixture.
    :param tmp_path: Pytest temporary directory.
    :param monkeypatch: Pytest fixture replacing os.replace.
    :param capsys: Pytest fixture capturing stdout.
    :param argv: Subcommand writing a single JSON report.
    """
    def refuse(src, dst):
        raise PermissionError(13, "Permission denied", str(dst))

    output = tmp_path / "report.json"
    monkeypatch.setattr(os, "replace", refuse)
    assert cli.run(argv + ["--output", str(output)]) == EXIT_USAGE
    assert "Could not write" in capsys.readouterr().err
    assert not output.exists()
