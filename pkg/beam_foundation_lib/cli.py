import argparse
from pathlib import Path
import sys
from typing import List, Optional

from beam_foundation_lib.exceptions import (BeamFoundationError, ConvergenceError, MaxIterationsError,
                                            NonContractionError)
from beam_foundation_lib.logger import get_logger
from beam_foundation_lib.run_manager import DEFLECT_MODES, EVALUATORS, RunManager
from beam_foundation_lib.utils import (CONFINEMENT_MARGIN, CONFINEMENT_TOLERANCE, DEFAULT_DECAY_WINDOW, DEFAULT_N,
                                       DEFAULT_REFINE_DEPTH, DEFAULT_RULE, DEFAULT_SCAN_GRID, DEFAULT_SCAN_KAPPA,
                                       DEFAULT_SCAN_L, EIGEN_TOLERANCE, FIXED_POINT_MAX_ITER, FIXED_POINT_TOLERANCE,
                                       INVERSE_TOLERANCE, QUADRATURE_RULES, BeamConfig, FoundationLaw, RunManifest,
                                       ScanRegion)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FAILED = 3
EXIT_EIGENSOLVER = 4
EXIT_CONTRACTION = 5

DEFAULT_LOG_FILE = "./logs/cli.log"
LOG_MAX_BYTES = 5 * 1024 * 1024
# Parser attributes that are not run parameters
_NOT_PARAMETERS = {"command", "handler", "output", "cells", "load"}


def _config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("beam configuration")
    group.add_argument("--E", type=float, default=1.0, help="Young's modulus (default: 1).")
    group.add_argument("--I", type=float, default=1.0, help="Moment of inertia (default: 1).")
    group.add_argument("--k", type=float, default=1.0, help="Foundation spring constant (default: 1).")
    group.add_argument("--l", type=float, default=1.0, help="Half-length of the beam (default: 1).")
    group.add_argument("--alpha", type=float, default=None,
                       help="Prescribe alpha = (k/EI)^(1/4) directly; sets I = 1 and E = k/alpha^4.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beam-foundation",
        description="Characteristic functions, certification scans, spectra and deflections of a finite beam "
                    "on an elastic foundation.")
    commands = parser.add_subparsers(dest="command", required=True)

    evaluate = commands.add_parser("eval", help="Evaluate a characteristic function.")
    evaluate.add_argument("function", choices=list(EVALUATORS), help="Function name.")
    evaluate.add_argument("values", type=float, nargs="+", help="Argument value(s).")
    evaluate.add_argument("--L", type=float, default=None, help="Length parameter L (default: 2 sqrt2 l alpha).")
    _config_flags(evaluate)

    scan = commands.add_parser("scan", help="Certify psi_L(kappa) > q(kappa) over a region.")
    scan.add_argument("--kappa-min", type=float, default=DEFAULT_SCAN_KAPPA[0], dest="kappa_min")
    scan.add_argument("--kappa-max", type=float, default=DEFAULT_SCAN_KAPPA[1], dest="kappa_max")
    scan.add_argument("--L-min", type=float, default=DEFAULT_SCAN_L[0], dest="L_min")
    scan.add_argument("--L-max", type=float, default=DEFAULT_SCAN_L[1], dest="L_max")
    scan.add_argument("--grid", type=int, nargs=2, default=list(DEFAULT_SCAN_GRID), metavar=("N_KAPPA", "N_L"))
    scan.add_argument("--depth", type=int, default=DEFAULT_REFINE_DEPTH, help="Refinement depth (default: 4).")
    scan.add_argument("--output", type=str, default="reports/scan.json", help="Path to JSON report.")
    scan.add_argument("--cells", type=str, default=None, help="Optional CSV of per-cell margins.")
    scan.add_argument("--with-checks", action="store_true", dest="with_checks",
                      help="Attach the auxiliary inequality checks to the report.")
    scan.add_argument("--invert", action="store_true", help="Scan q - psi_L instead (exercises the failure path).")
    scan.add_argument("--seed", type=int, default=0, help="Seed of the randomised checks (default: 0).")

    spectrum = commands.add_parser("spectrum", help="Spectrum of the finite-beam operator.")
    _config_flags(spectrum)
    spectrum.add_argument("--n", type=int, default=DEFAULT_N, help=f"Quadrature nodes (default: {DEFAULT_N}).")
    spectrum.add_argument("--rule", choices=QUADRATURE_RULES, default=DEFAULT_RULE)
    spectrum.add_argument("--panels", type=int, default=1, help="Gauss-Legendre panels (default: 1).")
    spectrum.add_argument("--window", type=int, nargs=2, default=list(DEFAULT_DECAY_WINDOW),
                          metavar=("N_LO", "N_HI"), help="Decay-fit window, 1-based inclusive.")
    spectrum.add_argument("--output", type=str, default="reports/spectrum.json",
                          help="Path to JSON summary; the CSV table gets the same stem.")

    deflect = commands.add_parser("deflect", help="Deflection under a load read from CSV (columns x, w).")
    _config_flags(deflect)
    deflect.add_argument("--load", type=str, required=True, help="Load CSV path.")
    deflect.add_argument("--mode", choices=DEFLECT_MODES, default="infinite")
    deflect.add_argument("--output", type=str, default="reports/deflection.csv", help="Path to solution CSV.")
    deflect.add_argument("--n", type=int, default=DEFAULT_N, help="Quadrature nodes for finite-beam modes.")
    deflect.add_argument("--rule", choices=QUADRATURE_RULES, default=DEFAULT_RULE)
    deflect.add_argument("--epsilon", type=float, default=0.1, help="Cubic coefficient of phi = k u + eps u^3.")
    deflect.add_argument("--amplitude", type=float, default=None,
                         help="Operating range |u| <= A for the Lipschitz estimate (default: max |K_l[w]|).")
    deflect.add_argument("--lipschitz", type=float, default=None,
                         help="Override the Lipschitz constant of k u - phi(u, x).")
    deflect.add_argument("--tol", type=float, default=FIXED_POINT_TOLERANCE)
    deflect.add_argument("--max-iter", type=int, default=FIXED_POINT_MAX_ITER, dest="max_iter")

    check = commands.add_parser("check", help="Run every auxiliary inequality check.")
    check.add_argument("--output", type=str, default="reports/checks.json", help="Path to JSON report.")
    check.add_argument("--seed", type=int, default=0, help="Seed of the randomised checks (default: 0).")
    return parser


class CLI:
    def __init__(self, log_file: str | Path = DEFAULT_LOG_FILE) -> None:
        """
        Sets up file logging and the RunManager; the console is kept for results.

        :param log_file: Log file path; its directory is created if missing.
        """
        self.logger = get_logger("cli_logger", log_file, level="INFO", console=False, max_bytes=LOG_MAX_BYTES)
        self.logger.logger.propagate = False
        self.manager = RunManager(self.logger)
        self.handlers = {"eval": self.cmd_eval, "scan": self.cmd_scan, "spectrum": self.cmd_spectrum,
                         "deflect": self.cmd_deflect, "check": self.cmd_check}

    @staticmethod
    def config_from(args: argparse.Namespace) -> BeamConfig:
        if args.alpha is not None:
            return BeamConfig.with_alpha(args.alpha, k=args.k, l=args.l)
        return BeamConfig(E=args.E, I=args.I, k=args.k, l=args.l)

    @staticmethod
    def manifest_from(args: argparse.Namespace, tolerances: dict, paths: dict) -> RunManifest:
        parameters = {key: value for key, value in vars(args).items() if key not in _NOT_PARAMETERS}
        return RunManifest(subcommand=args.command, parameters=parameters, paths=paths, tolerances=tolerances,
                           seed=getattr(args, "seed", None))

    def _usage_error(self, message: str) -> int:
        self.logger.log_message(message, "ERROR")
        print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE

    def cmd_eval(self, args: argparse.Namespace) -> int:
        config = self.config_from(args)
        for value, result in zip(args.values, self.manager.evaluate(args.function, args.values, config, args.L)):
            print(f"{args.function}({value:.15g}) = {result:.15g}")
        return EXIT_OK

    def cmd_scan(self, args: argparse.Namespace) -> int:
        region = ScanRegion(kappa_min=args.kappa_min, kappa_max=args.kappa_max, L_min=args.L_min, L_max=args.L_max,
                            initial_grid=tuple(args.grid), refine_depth=args.depth)
        outputs = [args.output] + ([args.cells] if args.cells else [])
        problem = self.manager.validate_paths(outputs=outputs)
        if problem:
            return self._usage_error(problem)
        manifest = self.manifest_from(args, {"inverse": INVERSE_TOLERANCE},
                                      {"output": args.output, "cells": args.cells})
        report = self.manager.scan(region, manifest, args.output, args.cells, inverted=args.invert,
                                   with_sub_reports=args.with_checks, seed=args.seed)
        print(f"min_margin = {report.min_margin:.15g} at kappa = {report.witness[0]:.15g}, "
              f"L = {report.witness[1]:.15g}")
        print(f"cells = {report.cells_evaluated}, points = {report.points_evaluated}, "
              f"all_positive = {str(report.all_positive).lower()}")
        return EXIT_OK if report.all_positive else EXIT_FAILED

    def cmd_spectrum(self, args: argparse.Namespace) -> int:
        config = self.config_from(args)
        problem = self.manager.validate_paths(outputs=[args.output, Path(args.output).with_suffix(".csv")])
        if problem:
            return self._usage_error(problem)
        manifest = self.manifest_from(
            args, {"eigen": EIGEN_TOLERANCE, "confinement": CONFINEMENT_TOLERANCE, "margin": CONFINEMENT_MARGIN},
            {"output": args.output, "table": str(Path(args.output).with_suffix(".csv"))})
        summary = self.manager.spectrum(config, manifest, args.output, args.n, args.rule, args.panels,
                                        tuple(args.window))
        slope = "n/a" if summary.decay is None else f"{summary.decay.slope:.6g}"
        verdict = "CONFINED" if summary.verdict else "VIOLATED"
        print(f"lambda_1 = {summary.spectrum.eigenvalues[0]:.15g}, verdict = {verdict}, decay slope = {slope}")
        return EXIT_OK if summary.verdict else EXIT_FAILED

    def cmd_deflect(self, args: argparse.Namespace) -> int:
        config = self.config_from(args)
        problem = self.manager.validate_paths(inputs=[args.load], outputs=[args.output])
        if problem:
            return self._usage_error(problem)
        law = None
        if args.mode == "nonlinear":
            amplitude = args.amplitude
            if amplitude is None:
                amplitude = self.manager.default_amplitude(args.load, config, args.n, args.rule)
                if amplitude is None:
                    return self._usage_error(f"Cannot use load file {args.load}: {self.manager.last_error}")
            law = FoundationLaw.cubic(config.k, args.epsilon, amplitude)
            if args.lipschitz is not None:
                law = FoundationLaw(phi=law.phi, lipschitz=args.lipschitz, name=law.name)
        manifest = self.manifest_from(args, {"fixed_point": args.tol},
                                      {"load": args.load, "output": args.output,
                                       "metadata": str(Path(args.output).with_suffix(".json"))})
        profile = self.manager.deflect(args.load, config, args.mode, manifest, args.output, law, args.n, args.rule,
                                       args.tol, args.max_iter)
        metadata = profile.metadata
        if args.mode == "nonlinear":
            print(f"{'m':>4} {'diff':>22} {'ratio':>22}")
            ratios = [float("nan")] + list(metadata["ratios"])
            for m, (difference, ratio) in enumerate(zip(metadata["history"], ratios), start=1):
                print(f"{m:>4} {difference:>22.15g} {ratio:>22.15g}")
            print(f"rho = {metadata['rho']:.15g}, observed ratio = {metadata['observed_ratio']:.15g}")
        if "residual" in metadata:
            print(f"residual = {metadata['residual']:.15g}")
        print(f"wrote {profile.x.size} points to {args.output}")
        return EXIT_OK

    def cmd_check(self, args: argparse.Namespace) -> int:
        problem = self.manager.validate_paths(outputs=[args.output])
        if problem:
            return self._usage_error(problem)
        manifest = self.manifest_from(args, {"inverse": INVERSE_TOLERANCE}, {"output": args.output})
        reports = self.manager.check(manifest, args.output, args.seed)
        for report in reports:
            print(f"{report.name:<28} {'pass' if report.passed else 'FAIL':<5} {report.checked:>7} "
                  f"{report.worst_value:.15g}")
        return EXIT_OK if all(report.passed for report in reports) else EXIT_FAILED

    def run(self, argv: Optional[List[str]] = None) -> int:
        """
        Parses the arguments and runs one subcommand.

        :param argv: Arguments without the program name; sys.argv[1:] when None.
        :return: Exit code (0 ok, 2 usage or domain error, 3 certification failure, 4 eigensolver failure,
                 5 non-contraction).
        """
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exit_:
            return int(exit_.code or 0)
        self.logger.log_message(f"Running {args.command} with {vars(args)}", "INFO")
        try:
            return self.handlers[args.command](args)
        except (NonContractionError, MaxIterationsError) as error:
            self.logger.log_message(str(error), "ERROR")
            print(f"error: {error}", file=sys.stderr)
            return EXIT_CONTRACTION
        except ConvergenceError as error:
            self.logger.log_message(str(error), "ERROR")
            print(f"error: {error}", file=sys.stderr)
            return EXIT_EIGENSOLVER
        except BeamFoundationError as error:
            return self._usage_error(str(error))


def main(argv: Optional[List[str]] = None) -> int:
    return CLI().run(argv)


if __name__ == "__main__":
    sys.exit(main())
