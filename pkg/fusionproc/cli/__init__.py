"""Shared plumbing for the command-line subcommands."""

from __future__ import annotations

import sys
from contextlib import contextmanager
from typing import IO, Any, Iterator, Mapping, Optional

from pydantic import ValidationError

from fusionproc.services.records import write_jsonl

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INPUT = 2
EXIT_INTERRUPTED = 130


class CommandError(Exception):
    """Raised by command handlers; ``main`` prints ``detail`` and exits with ``exit_code``."""

    def __init__(self, exit_code: int, detail: str) -> None:
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail


@contextmanager
def input_errors() -> Iterator[None]:
    """Report invalid input as exit code 2."""

    try:
        yield
    except ValidationError as exc:
        raise CommandError(EXIT_INPUT, _validation_detail(exc)) from exc
    except ValueError as exc:
        raise CommandError(EXIT_INPUT, str(exc)) from exc
    except OSError as exc:
        raise CommandError(EXIT_INPUT, f"{exc.filename}: {exc.strerror}") from exc


def _validation_detail(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error.get("loc", ()))
        parts.append(f"{location}: {error.get('msg')}" if location else str(error.get("msg")))
    return "; ".join(parts) or str(exc)


def emit(record: Mapping[str, Any], stream: Optional[IO[str]] = None) -> None:
    write_jsonl([record], stream or sys.stdout)


def parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise CommandError(EXIT_INPUT, f"{flag} expects comma-separated integers, got {text!r}") from exc
