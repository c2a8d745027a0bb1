import csv
from typing import List, Optional, Tuple

import numpy as np

from beam_foundation_lib.exceptions import BeamFoundationError
from beam_foundation_lib.file import File
from beam_foundation_lib.logger import Logger
from beam_foundation_lib.utils import LoadProfile

LOAD_COLUMNS = ("x", "w")


class LoadReader:
    def __init__(self, file_handler: File, logger: Logger) -> None:
        """
        Initializes the LoadReader instance.

        :param file_handler: Open File holding a CSV with columns x, w.
        :param logger: Logger instance for logging events.
        """
        self.file_handler = file_handler
        self.logger = logger
        self.last_error: Optional[str] = None

    def read(self) -> Optional[LoadProfile]:
        """
        Parses the whole file into a LoadProfile.
        Blank lines and lines starting with '#' are skipped.

        :return: LoadProfile, or None if the file is missing or malformed (see last_error).
        """
        rows = self.read_rows()
        if rows is None:
            return None
        message = self.validate(rows)
        if message:
            return self._fail(message)
        x = np.array([row[0] for row in rows])
        w = np.array([row[1] for row in rows])
        try:
            profile = LoadProfile(x=x, w=w)
        except BeamFoundationError as error:
            return self._fail(f"Invalid load profile in {self.file_handler.filepath}: {error}")
        self.logger.log_message(
            f"Read load profile with {x.size} samples on [{x[0]}, {x[-1]}] from {self.file_handler.filepath}",
            "INFO")
        return profile

    def read_rows(self) -> Optional[List[Tuple[float, float]]]:
        """
        :return: The (x, w) rows as floats, or None if the file cannot be parsed.
        """
        file = self.file_handler.get_file()
        if file is None:
            return self._fail(f"Load file {self.file_handler.filepath} is not open")
        file.seek(0)
        try:
            lines = [line for line in file if line.strip() and not line.lstrip().startswith("#")]
        except UnicodeDecodeError:
            return self._fail(f"Load file {self.file_handler.filepath} is not UTF-8")
        reader = csv.reader(lines)
        header = next(reader, None)
        if header is None:
            return self._fail(f"Load file {self.file_handler.filepath} is empty")
        columns = [name.strip().lower() for name in header]
        if tuple(columns[:2]) != LOAD_COLUMNS:
            return self._fail(f"Expected columns {','.join(LOAD_COLUMNS)}, got {','.join(header)}")
        rows = []
        for line_number, record in enumerate(reader, start=2):
            if len(record) < 2:
                return self._fail(f"Line {line_number}: expected 2 values, got {len(record)}")
            try:
                rows.append((float(record[0]), float(record[1])))
            except ValueError:
                return self._fail(f"Line {line_number}: cannot parse {record[:2]} as numbers")
        return rows

    @staticmethod
    def validate(rows: List[Tuple[float, float]]) -> str:
        """
        Checks the parsed rows before they become a LoadProfile.

        :param rows: Parsed (x, w) pairs.
        :return: Empty string if valid, otherwise a message describing the first problem.
        """
        if len(rows) < 2:
            return f"A load profile needs at least 2 samples, got {len(rows)}"
        x = np.array([row[0] for row in rows])
        w = np.array([row[1] for row in rows])
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(w)):
            return "Load profile contains non-finite values"
        steps = np.diff(x)
        if np.any(steps <= 0):
            return "Load grid x must be strictly increasing"
        if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
            return "Load grid x must be uniformly spaced"
        return ""

    def _fail(self, message: str) -> None:
        self.last_error = message
        self.logger.log_message(message, "ERROR")
        return None
