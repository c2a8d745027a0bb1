from contextlib import contextmanager
from enum import Enum
import logging
from logging import handlers
from pathlib import Path
import time
from typing import Iterator, List, Optional, Union

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class LogHandler(Enum):
    """
    Handler classes the numerical components log through.
    Get the .value and instantiate it; FILE and ROTATING need a file path.
    """
    STREAM = logging.StreamHandler  # Console
    FILE = logging.FileHandler
    NULL = logging.NullHandler
    # Rolls the file over after a size limit; the CLI log uses it
    ROTATING = handlers.RotatingFileHandler


class Logger:
    """
    Wrapper around a named logging.Logger shared by the scanner, the spectral analyzer,
    the deflection solver and the file layer.

    The level should be set explicitly, otherwise the logging module default applies.
    """
    def __init__(self,
                 logger_name: str,
                 handlers: List[logging.Handler],
                 formatting: str = DEFAULT_FORMAT) -> None:
        """
        Attaches handlers to the named logger unless it already has some.

        :param logger_name: Name of the logger instance.
        :param handlers: Logging handlers receiving the records.
        :param formatting: Log record format.
        :raises ValueError: If no handlers are provided.
        :raises TypeError: If a handler is not a logging.Handler instance.
        """
        self.logger = logging.getLogger(logger_name)
        if self.logger.handlers:
            return
        if not handlers:
            raise ValueError("Logger has to have at least one handler on creation")
        formatter = logging.Formatter(formatting)
        for handler in handlers:
            if not isinstance(handler, logging.Handler):
                raise TypeError(f"Invalid handler type: {handler}. Must be a logging.Handler instance.")
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)
        self.log_message(f"Logger '{logger_name}' set up with {len(handlers)} handler(s)", "DEBUG")

    def set_level(self, level: Union[str, int]) -> None:
        """
        Sets the level of this logger; an unknown level is reported and ignored.

        :param level: Level name or number from the logging module.
        """
        resolved_level = self._resolve_level(level)
        if resolved_level is None:
            current_level = logging.getLevelName(self.logger.getEffectiveLevel())
            self.logger.error(f"Invalid log level {level}. Level not changed from {current_level}")
            return
        self.logger.setLevel(resolved_level)
        self.log_message(f"Logging level set to {logging.getLevelName(resolved_level)}", "DEBUG")

    def log_message(self, message: str, level: Union[str, int], exception: bool = False) -> None:
        """
        Logs a message at the given level.

        :param message: The message to log.
        :param level: Level name (for example "INFO") or number.
        :param exception: If True, the active exception traceback is attached.
        """
        resolved = self._resolve_level(level)
        if resolved is not None:
            self.logger.log(resolved, message, exc_info=exception)
        else:
            self.logger.error(f"Invalid log level {level} Message was not logged properly: {message}")

    @contextmanager
    def timed(self, stage: str) -> Iterator[None]:
        """
        Logs the wall time spent in a numerical stage at DEBUG level.

        :param stage: Label of the stage, e.g. "eigensolve n=400".
        """
        start = time.perf_counter()
        try:
            yield
        finally:
            self.log_message(f"{stage} took {time.perf_counter() - start:.3f} s", "DEBUG")

    @staticmethod
    def _resolve_level(level: Union[str, int]) -> Union[str, int, None]:
        """
        :param level: Level name or number.
        :return: The level if the logging module knows it, otherwise None.
        """
        level_name = logging.getLevelName(level)  # Converts between name and number or returns "Level {x}"
        if isinstance(level_name, str):
            if level_name.startswith("Level "):
                return None
            return level
        return level_name


def get_logger(name: str, log_file: Optional[str | Path] = None, level: Union[str, int] = "INFO",
               console: bool = True, max_bytes: int = 0, backup_count: int = 3) -> Logger:
    """
    Builds a Logger with the standard format, a console handler and optionally a file handler.

    :param name: Logger name.
    :param log_file: File to append records to; parent directories are created.
    :param level: Initial level.
    :param console: Whether records also go to the console.
    :param max_bytes: Size after which the file is rolled over; 0 keeps a plain file handler.
    :param backup_count: Rolled-over files kept next to log_file.
    :return: Configured Logger.
    """
    log_handlers: List[logging.Handler] = []
    if console:
        log_handlers.append(LogHandler.STREAM.value())
    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        if max_bytes > 0:
            log_handlers.append(LogHandler.ROTATING.value(str(log_file), maxBytes=max_bytes,
                                                          backupCount=backup_count))
        else:
            log_handlers.append(LogHandler.FILE.value(str(log_file)))
    if not log_handlers:
        log_handlers.append(LogHandler.NULL.value())
    logger = Logger(name, log_handlers)
    logger.set_level(level)
    return logger
