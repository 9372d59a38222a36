"""Exception hierarchy and the global operator size cap."""

import os

DEFAULT_SIZE_CAP = 20000


class ErgolabError(Exception):
    exit_code = 3


class InvalidInput(ErgolabError, ValueError):
    exit_code = 2


class NumericalFailure(ErgolabError, ArithmeticError):
    exit_code = 3


class SizeCapExceeded(ErgolabError):
    exit_code = 4


def size_cap() -> int:
    """Max stored entries per operator; overridable through ``ERGOLAB_SIZE_CAP``."""
    raw = os.environ.get("ERGOLAB_SIZE_CAP")
    if raw is None:
        return DEFAULT_SIZE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise InvalidInput(f"ERGOLAB_SIZE_CAP must be an integer, got {raw!r}") from exc
    if cap <= 0:
        raise InvalidInput("ERGOLAB_SIZE_CAP must be positive")
    return cap


def check_size(entries: int, what: str, cap: int | None = None) -> None:
    cap = size_cap() if cap is None else cap
    if entries > cap:
        raise SizeCapExceeded(f"{what} needs {entries} stored entries, cap is {cap}")
