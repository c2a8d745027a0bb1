import os
from pathlib import Path
import tempfile
from typing import IO, Optional

from beam_foundation_lib.logger import Logger


class File:
    """
    Read handle on an input file (load profiles) usable as a context manager.
    Open failures are logged and leave get_file() returning None.
    """
    def __init__(self, filepath: str | Path, logger: Logger) -> None:
        self.filepath = Path(filepath)
        self.mode = "r"
        self.newline = ""  # csv module handles line endings itself
        self._file: Optional[IO[str]] = None
        self.logger = logger

    def get_file(self) -> Optional[IO[str]]:
        """
        :return: The open file handle, or None if the file is not open.
        """
        return self._file

    def open(self) -> None:
        if self._file is None or self._file.closed:
            try:
                self._file = open(self.filepath, self.mode, newline=self.newline, encoding="utf-8")
                self.logger.log_message(f"File opened: {self.filepath}", "DEBUG")
            except OSError:
                self._file = None
                self.logger.log_message(f"Failed to open file '{self.filepath}'", "ERROR", exception=True)

    def close(self) -> None:
        if self._file and not self._file.closed:
            try:
                self._file.close()
                self.logger.log_message(f"File closed: {self.filepath}", "DEBUG")
            except OSError:
                self.logger.log_message(f"Failed to close file '{self.filepath}'", "ERROR", exception=True)
        self._file = None

    def __enter__(self) -> "File":
        self.open()
        return self

    def __exit__(self, exc_type, exc_value, traceback) -> None:
        self.close()


class AtomicFile(File):
    """
    Output file written to a temporary sibling and renamed onto the target on success.

    If the managed block raises, the temporary file is removed and the target is left untouched,
    so no partial report is ever visible under the final name.
    """
    def __init__(self, filepath: str | Path, logger: Logger) -> None:
        super().__init__(filepath, logger)
        self.mode = "w"
        self._temp_path: Optional[Path] = None
        self.committed = False

    def open(self) -> None:
        """
        Creates the parent directory and a temporary file next to the target.
        """
        if self._file is not None and not self._file.closed:
            return
        try:
            self.filepath.parent.mkdir(parents=True, exist_ok=True)
            handle, temp_name = tempfile.mkstemp(prefix=f".{self.filepath.name}.", suffix=".tmp",
                                                 dir=self.filepath.parent)
            self._temp_path = Path(temp_name)
            self._file = os.fdopen(handle, self.mode, newline=self.newline, encoding="utf-8")
            self.logger.log_message(f"Writing {self.filepath} through {self._temp_path.name}", "DEBUG")
        except OSError:
            self._file = None
            self._temp_path = None
            self.logger.log_message(f"Failed to create a temporary file for '{self.filepath}'", "ERROR",
                                    exception=True)

    def commit(self) -> bool:
        """
        Flushes, closes and renames the temporary file onto the target.

        :return: True if the target now holds the new content.
        """
        if self._temp_path is None:
            return False
        try:
            if self._file and not self._file.closed:
                self._file.flush()
                os.fsync(self._file.fileno())
                self._file.close()
            os.replace(self._temp_path, self.filepath)
            self.committed = True
            self.logger.log_message(f"File written: {self.filepath}", "INFO")
            return True
        except OSError:
            self.logger.log_message(f"Failed to move output into '{self.filepath}'", "ERROR", exception=True)
            self.discard()
            return False
        finally:
            self._file = None
            self._temp_path = None

    def discard(self) -> None:
        """
        Closes and deletes the temporary file; the target is not touched.
        """
        if self._file and not self._file.closed:
            self._file.close()
        self._file = None
        if self._temp_path is not None:
            self._temp_path.unlink(missing_ok=True)
            self.logger.log_message(f"Discarded partial output for {self.filepath}", "WARNING")
            self._temp_path = None

    def __exit__(self, exc_type, exc_value, traceback) -> None:
        if exc_type is None:
            self.commit()
        else:
            self.discard()
