from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from beam_foundation_lib import charfun
from beam_foundation_lib.deflect import DeflectionSolver
from beam_foundation_lib.exceptions import DomainError, InsufficientEigenvaluesError, ReportWriteError
from beam_foundation_lib.file import File
from beam_foundation_lib.logger import Logger
from beam_foundation_lib.reader import LoadReader
from beam_foundation_lib.scanner import Scanner
from beam_foundation_lib.spectral import SpectralAnalyzer, kernel_K
from beam_foundation_lib.utils import (DEFAULT_DECAY_WINDOW, DEFAULT_N, DEFAULT_RULE, FIXED_POINT_MAX_ITER,
                                       FIXED_POINT_TOLERANCE, BeamConfig, DeflectionProfile, FoundationLaw,
                                       LoadProfile, RunManifest, ScanRegion, ScanReport, SpectrumSummary, SubReport)
from beam_foundation_lib.writer import ReportWriter

DEFLECT_MODES = ("infinite", "operator", "nonlinear")

# name -> (callable(x, L, config), argument label)
EVALUATORS: Dict[str, Tuple[Callable[[float, float, BeamConfig], float], str]] = {
    "q": (lambda x, L, config: charfun.eval_q(x), "kappa"),
    "q'": (lambda x, L, config: charfun.eval_q_prime(x), "kappa"),
    "f": (lambda x, L, config: charfun.eval_f(x), "t"),
    "f'": (lambda x, L, config: charfun.eval_f_prime(x), "t"),
    "ghat": (lambda x, L, config: charfun.eval_ghat(x).value, "kappa"),
    "ghat'": (lambda x, L, config: charfun.eval_ghat_prime(x), "kappa"),
    "gL": (lambda x, L, config: charfun.eval_gL(x, L), "kappa"),
    "gL'": (lambda x, L, config: charfun.eval_gL_prime(x, L), "kappa"),
    "gL_inv": (lambda x, L, config: charfun.invert_gL(x, L), "t"),
    "gL_inv_dL": (lambda x, L, config: charfun.invert_gL_dL(x, L), "t"),
    "psi": (lambda x, L, config: charfun.eval_psi(x, L), "kappa"),
    "psi'": (lambda x, L, config: charfun.eval_psi_prime(x, L), "kappa"),
    "psi_dL": (lambda x, L, config: charfun.eval_psi_dL(x, L), "kappa"),
    "margin": (lambda x, L, config: charfun.eval_margin(x, L), "kappa"),
    "K": (lambda x, L, config: kernel_K(x, config), "y"),
    "ghat_inv": (lambda x, L, config: charfun.ghat_inverse(x), "s"),
    "ghat_inv_closed": (lambda x, L, config: charfun.ghat_inverse_closed(x), "t"),
}


class RunManager:
    def __init__(self, logger: Logger, workers: Optional[int] = None) -> None:
        """
        Initializes the RunManager with a logger.
        Owns one instance of every computational component and the report writer.

        :param logger: Logger instance for logging events
        :param workers: Worker threads for the scanner and the convolution; environment default when None
        """
        self.logger = logger
        self.scanner = Scanner(logger, workers)
        self.analyzer = SpectralAnalyzer(logger)
        self.solver = DeflectionSolver(logger, workers)
        self.writer = ReportWriter(logger)
        self.last_error: Optional[str] = None

    def validate_paths(self, inputs: Sequence[str | Path] = (), outputs: Sequence[str | Path] = ()) -> str:
        """
        Checks paths before any computation starts.

        :param inputs: Files that must exist.
        :param outputs: Report targets; must not be directories.
        :return: Empty string if valid, otherwise a message naming the first bad path.
        """
        for path in map(Path, inputs):
            if not path.is_file():
                return f"Input file {path} does not exist"
        for path in map(Path, outputs):
            if path.is_dir():
                return f"Output path {path} is a directory"
            parent = path.parent
            while not parent.exists():
                parent = parent.parent
            if not parent.is_dir():
                return f"Cannot create a directory for {path}: {parent} is not a directory"
        return ""

    def evaluate(self, name: str, values: Sequence[float], config: BeamConfig,
                 L: Optional[float] = None) -> List[float]:
        """
        Evaluates one named function at each value.

        :param name: One of EVALUATORS.
        :param values: Arguments.
        :param config: Beam parameters, used by K and as the default source of L.
        :param L: Length parameter for the L-dependent functions; config.L when None.
        :return: Function values.
        :raises DomainError: For an unknown name or a value outside the domain.
        """
        if name not in EVALUATORS:
            raise DomainError(f"Unknown function {name!r}, expected one of {', '.join(EVALUATORS)}")
        function, label = EVALUATORS[name]
        length = config.L if L is None else L
        results = []
        for value in values:
            try:
                results.append(float(function(float(value), length, config)))
            except DomainError as error:
                self.logger.log_message(f"{name}({label}={value}) failed: {error}", "ERROR")
                raise
        self.logger.log_message(f"Evaluated {name} at {len(results)} point(s) with L={length:.15g}", "INFO")
        return results

    def _report(self, manifest: RunManifest, body: dict) -> dict:
        return {"schema_version": manifest.schema_version, "manifest": manifest.to_dict(), **body}

    def _written(self, written: bool, path: str | Path) -> None:
        """
        :raises ReportWriteError: If the writer reported a failure for path.
        """
        if not written:
            self.last_error = f"Could not write {path}"
            raise ReportWriteError(f"Could not write {path}; see the log for the cause")

    def scan(self, region: ScanRegion, manifest: RunManifest, output: str | Path,
             cells_output: Optional[str | Path] = None, inverted: bool = False,
             with_sub_reports: bool = False, seed: int = 0) -> ScanReport:
        """
        Runs the certification scan and writes its JSON report (and optionally the per-cell CSV).

        :return: The ScanReport; all_positive decides success.
        """
        report = self.scanner.scan_psi_minus_q(region, inverted=inverted, with_sub_reports=with_sub_reports, seed=seed)
        self._written(self.writer.write_json(self._report(manifest, {"scan": report.to_dict()}), output), output)
        if cells_output is not None:
            self._written(self.writer.write_scan_cells_csv(report, cells_output), cells_output)
        return report

    def check(self, manifest: RunManifest, output: str | Path, seed: int = 0) -> List[SubReport]:
        reports = self.scanner.run_auxiliary_checks(seed=seed)
        passed = all(report.passed for report in reports)
        self._written(self.writer.write_json(self._report(manifest, {"all_passed": passed, "checks": reports}), output),
                      output)
        return reports

    def spectrum(self, config: BeamConfig, manifest: RunManifest, output: str | Path, n: int = DEFAULT_N,
                 rule: str = DEFAULT_RULE, panels: int = 1,
                 window: Tuple[int, int] = DEFAULT_DECAY_WINDOW) -> SpectrumSummary:
        """
        Computes the spectrum, its confinement verdict and decay fit, and writes
        <output>.json (summary) and <output>.csv (eigenvalue table).

        :param config: Beam parameters.
        :param manifest: Run manifest embedded in the report.
        :param output: Path of the JSON summary; the CSV gets the same stem.
        :param n: Number of nodes.
        :param rule: Quadrature rule.
        :param panels: Gauss-Legendre panel count.
        :param window: Decay-fit window (1-based, inclusive).
        :return: SpectrumSummary.
        :raises EigensolverError: If the eigensolver fails.
        """
        spectrum = self.analyzer.analyze(config, n, rule, panels)
        verdict = self.analyzer.verify_confinement(spectrum, config)
        summary = SpectrumSummary(config=config, rule=rule, spectrum=spectrum, verdict=verdict, window=window)
        try:
            summary.decay = self.analyzer.decay_fit(spectrum, *window)
        except InsufficientEigenvaluesError as error:
            summary.decay_note = str(error)
        output = Path(output)
        self._written(self.writer.write_json(self._report(manifest, {"spectrum": summary.to_dict()}), output), output)
        table = output.with_suffix(".csv")
        self._written(self.writer.write_spectrum_csv(spectrum, table), table)
        return summary

    def read_load(self, path: str | Path) -> Optional[LoadProfile]:
        """
        :return: LoadProfile, or None if the file is missing or malformed (the reason is logged).
        """
        with File(path, self.logger) as handle:
            reader = LoadReader(handle, self.logger)
            profile = reader.read()
        self.last_error = reader.last_error
        return profile

    def deflect(self, load_path: str | Path, config: BeamConfig, mode: str, manifest: RunManifest,
                output: str | Path, law: Optional[FoundationLaw] = None, n: int = DEFAULT_N,
                rule: str = DEFAULT_RULE, tol: float = FIXED_POINT_TOLERANCE,
                max_iter: int = FIXED_POINT_MAX_ITER) -> DeflectionProfile:
        """
        Solves for the deflection and writes <output> (CSV x,u) and <output>.json (metadata).

        :param load_path: CSV with columns x, w.
        :param config: Beam parameters.
        :param mode: infinite, operator or nonlinear.
        :param manifest: Run manifest embedded in the metadata.
        :param output: CSV target.
        :param law: Foundation law for the nonlinear mode.
        :param n: Quadrature nodes for the finite-beam modes.
        :param rule: Quadrature rule for the finite-beam modes.
        :param tol: Fixed-point tolerance.
        :param max_iter: Fixed-point iteration budget.
        :return: DeflectionProfile; infinite mode records the ODE residual in metadata.
        :raises DomainError: For an unknown mode, a malformed load file or a missing law.
        """
        if mode not in DEFLECT_MODES:
            raise DomainError(f"Unknown deflection mode {mode!r}, expected one of {', '.join(DEFLECT_MODES)}")
        load = self.read_load(load_path)
        if load is None:
            raise DomainError(f"Cannot use load file {load_path}: {self.last_error}")
        if mode == "infinite":
            profile = self.solver.solve_infinite(load, config)
            profile.metadata["residual"] = self.solver.residual_ode(profile, load, None, config)
        elif mode == "operator":
            profile = self.solver.solve_operator(load, config, n, rule)
        else:
            if law is None:
                raise DomainError("nonlinear mode needs a foundation law")
            profile = self.solver.solve_nonlinear_fixed_point(load, law, config, tol, max_iter, n, rule)
        output = Path(output)
        self._written(self.writer.write_profile_csv(profile, output), output)
        metadata = output.with_suffix(".json")
        self._written(self.writer.write_json(self._report(manifest, {"deflection": profile.metadata}), metadata),
                      metadata)
        return profile

    def default_amplitude(self, load_path: str | Path, config: BeamConfig, n: int = DEFAULT_N,
                          rule: str = DEFAULT_RULE) -> Optional[float]:
        """
        max |K_l[w]|, the operating range used for the Lipschitz estimate of a hardening law.
        """
        load = self.read_load(load_path)
        if load is None:
            return None
        return float(np.max(np.abs(self.solver.solve_operator(load, config, n, rule).u)))
