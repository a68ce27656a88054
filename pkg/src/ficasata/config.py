"""Run-wide numeric bound.

Ground values range over {0, ..., max}. The bound is a process-global
setting (default 1) so that parsing, interpretation and compilation all
agree on the value alphabet without threading it through every call.
"""

from contextlib import contextmanager

_MAX = 1


def max_value() -> int:
    """Largest representable numeral."""
    return _MAX


def set_max_value(n: int) -> None:
    if n < 0:
        raise ValueError(f"max must be >= 0, got {n}")
    global _MAX
    _MAX = n


@contextmanager
def scoped_max(n: int):
    """Temporarily override the bound (tests, CLI)."""
    global _MAX
    old = _MAX
    set_max_value(n)
    try:
        yield
    finally:
        _MAX = old
