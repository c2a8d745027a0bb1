import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Any, Iterable, List, Sequence

import numpy as np

from beam_foundation_lib.file import AtomicFile
from beam_foundation_lib.logger import Logger
from beam_foundation_lib.utils import DeflectionProfile, ScanReport, Spectrum

SCAN_CELL_COLUMNS = ("kappa_lo", "kappa_hi", "L_lo", "L_hi", "min_margin", "error_bound", "depth")
SPECTRUM_COLUMNS = ("index", "eigenvalue", "symmetry_class", "residual", "error_estimate")
PROFILE_COLUMNS = ("x", "u")


def make_json_safe(obj: Any) -> Any:
    """
    Recursively converts dataclasses, numpy values and paths into JSON types.
    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(key): make_json_safe(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [make_json_safe(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [make_json_safe(value) for value in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer, np.floating)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _number(value: float) -> str:
    return f"{value:.17g}"


class ReportWriter:
    def __init__(self, logger: Logger) -> None:
        """
        Initializes the ReportWriter instance.

        :param logger: Logger instance for logging events.
        """
        self.logger = logger

    def write_json(self, payload: Any, path: str | Path) -> bool:
        """
        Writes a report as indented JSON, atomically.

        :param payload: Dict or dataclass report.
        :param path: Target path.
        :return: True if the file was written.
        """
        with AtomicFile(path, self.logger) as output:
            handle = output.get_file()
            if handle is None:
                return False
            json.dump(make_json_safe(payload), handle, indent=2)
            handle.write("\n")
        return output.committed

    def write_rows(self, header: Sequence[str], rows: Iterable[Sequence[Any]], path: str | Path) -> bool:
        """
        Writes a CSV table atomically; floats keep 17 significant digits.

        :param header: Column names.
        :param rows: Data rows.
        :param path: Target path.
        :return: True if the file was written.
        """
        with AtomicFile(path, self.logger) as output:
            handle = output.get_file()
            if handle is None:
                return False
            table = csv.writer(handle)
            table.writerow(header)
            count = 0
            for row in rows:
                table.writerow([_number(value) if isinstance(value, (float, np.floating)) else value
                                for value in row])
                count += 1
        self.logger.log_message(f"Wrote {count} rows to {path}", "DEBUG")
        return output.committed

    def write_spectrum_csv(self, spectrum: Spectrum, path: str | Path) -> bool:
        classes = spectrum.parity_classes()
        residuals = spectrum.residuals if spectrum.residuals is not None else \
            np.full(spectrum.eigenvalues.size, spectrum.residual_bound)
        errors = spectrum.error_estimates if spectrum.error_estimates is not None else \
            np.full(spectrum.eigenvalues.size, np.nan)
        rows = [(index + 1, float(value), classes[index], float(residuals[index]), float(errors[index]))
                for index, value in enumerate(spectrum.eigenvalues)]
        return self.write_rows(SPECTRUM_COLUMNS, rows, path)

    def write_profile_csv(self, profile: DeflectionProfile, path: str | Path) -> bool:
        rows = zip(profile.x.astype(float), profile.u.astype(float))
        return self.write_rows(PROFILE_COLUMNS, rows, path)

    def write_scan_cells_csv(self, report: ScanReport, path: str | Path) -> bool:
        """
        Writes the per-cell margins of a scan for plotting.

        :param report: ScanReport holding a cells table.
        :param path: Target path.
        :return: True if the file was written, False if the report has no cells table.
        """
        if report.cells is None:
            self.logger.log_message("Scan report carries no per-cell table", "ERROR")
            return False
        rows: List[list] = [[float(v) for v in row[:6]] + [int(row[6])] for row in report.cells]
        return self.write_rows(SCAN_CELL_COLUMNS, rows, path)
