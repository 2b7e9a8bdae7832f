"""Validated file access shared by the dataset, checkpoint and report writers.

Text goes through ``splurge_safe_io`` (UTF-8, canonical LF newlines); binary
payloads are read and written whole after the path has been validated.
Library errors are mapped onto the package hierarchy here so callers only
ever see ``SplurgeSqcpc*`` exceptions.
"""

from __future__ import annotations

import logging
from pathlib import Path

from splurge_safe_io import (
    PathValidator,
    SafeTextFileReader,
    SplurgeSafeIoError,
    SplurgeSafeIoFileNotFoundError,
    SplurgeSafeIoPathValidationError,
    SplurgeSafeIoUnicodeError,
    TextFileWriteMode,
    open_safe_text_writer,
)

from .exceptions import SplurgeSqcpcDataError, SplurgeSqcpcOSError

logger = logging.getLogger(__name__)


def _map_safe_io_error(error: SplurgeSafeIoError, path: Path | str, action: str) -> SplurgeSqcpcOSError:
    if isinstance(error, SplurgeSafeIoFileNotFoundError):
        code = "file-not-found"
    elif isinstance(error, SplurgeSafeIoPathValidationError):
        code = "path-validation-failed"
    else:
        code = f"{action}-failed"
    return SplurgeSqcpcOSError(
        message=f"Failed to {action} {path}: {error}",
        error_code=code,
        details={"path": str(path)},
    )


def validated_path(path: str | Path, *, must_exist: bool = False) -> Path:
    try:
        return PathValidator.get_validated_path(path, must_exist=must_exist, must_be_file=must_exist)
    except SplurgeSafeIoError as e:
        raise _map_safe_io_error(e, path, "access") from e


def read_lines(path: str | Path) -> list[str]:
    """Read a UTF-8 text file as a list of lines without trailing newlines."""
    try:
        return SafeTextFileReader(path).readlines()
    except SplurgeSafeIoUnicodeError as e:
        raise SplurgeSqcpcDataError(
            message=f"{path} is not valid UTF-8: {e}",
            error_code="encoding",
            details={"path": str(path)},
        ) from e
    except SplurgeSafeIoError as e:
        raise _map_safe_io_error(e, path, "read") from e


def write_text(path: str | Path, lines: list[str], *, append: bool = False) -> Path:
    """Write lines (each terminated by a newline) to a UTF-8 text file, creating parents."""
    mode = TextFileWriteMode.CREATE_OR_APPEND if append else TextFileWriteMode.CREATE_OR_TRUNCATE
    try:
        with open_safe_text_writer(path, file_write_mode=mode, create_parents=True) as writer:
            for line in lines:
                writer.write(line + "\n")
    except SplurgeSafeIoError as e:
        raise _map_safe_io_error(e, path, "write") from e
    logger.debug(f"Wrote {len(lines)} lines to {path}")
    return Path(path)


def read_bytes(path: str | Path) -> bytes:
    target = validated_path(path, must_exist=True)
    try:
        return target.read_bytes()
    except PermissionError as e:
        raise SplurgeSqcpcOSError(
            message=f"Permission denied reading {path}: {e}",
            error_code="permission-denied",
            details={"path": str(path)},
        ) from e
    except OSError as e:
        raise SplurgeSqcpcOSError(
            message=f"Failed to read {path}: {e}",
            error_code="read-failed",
            details={"path": str(path)},
        ) from e


def write_bytes(path: str | Path, payload: bytes) -> Path:
    target = validated_path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(payload)
    except PermissionError as e:
        raise SplurgeSqcpcOSError(
            message=f"Permission denied writing {path}: {e}",
            error_code="permission-denied",
            details={"path": str(path)},
        ) from e
    except OSError as e:
        raise SplurgeSqcpcOSError(
            message=f"Failed to write {path}: {e}",
            error_code="write-failed",
            details={"path": str(path)},
        ) from e
    logger.debug(f"Wrote {len(payload)} bytes to {path}")
    return target
