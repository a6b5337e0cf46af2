"""Edge list and update stream files.

Edge lists hold one "u v" pair per line; update streams hold "<+|-> u v t"
with batch timestamps that never decrease. '#' starts a comment in both.
All failures carry the file path and line number.
"""

from __future__ import annotations

from .relations import SignedUpdate

_MAX_ID = 2**64 - 1


def _fail(path: str, lineno: int, message: str) -> None:
    raise ValueError(f"{path}:{lineno}: {message}")


def _vertex(path: str, lineno: int, token: str) -> int:
    try:
        v = int(token)
    except ValueError:
        _fail(path, lineno, f"bad vertex id {token!r}")
    if not 0 <= v <= _MAX_ID:
        _fail(path, lineno, f"vertex id {v} outside 64-bit unsigned range")
    return v


def read_edges(path: str) -> list[tuple[int, int]]:
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                _fail(path, lineno, f"expected 'u v', found {body!r}")
            edges.append(
                (_vertex(path, lineno, parts[0]), _vertex(path, lineno, parts[1]))
            )
    return edges


def read_updates(path: str) -> list[list[SignedUpdate]]:
    """Signed updates grouped into batches by equal timestamp."""
    batches: list[list[SignedUpdate]] = []
    last_time = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 4 or parts[0] not in ("+", "-"):
                _fail(path, lineno, f"expected '<+|-> u v t', found {body!r}")
            u = _vertex(path, lineno, parts[1])
            v = _vertex(path, lineno, parts[2])
            try:
                t = int(parts[3])
            except ValueError:
                _fail(path, lineno, f"bad timestamp {parts[3]!r}")
            if last_time is not None and t < last_time:
                _fail(path, lineno, f"timestamp {t} decreases from {last_time}")
            weight = 1 if parts[0] == "+" else -1
            if t != last_time:
                batches.append([])
                last_time = t
            batches[-1].append(SignedUpdate((u, v), t, weight))
    return batches
