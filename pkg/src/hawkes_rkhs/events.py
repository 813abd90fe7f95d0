"""Marked event sequences on [0, T] and their CSV serialization.

The file format is line-oriented CSV with ``#``-prefixed metadata comments,
a ``time,mark`` header, strictly increasing times and 1-based integer marks:

    # scenario=mutually-exciting
    # T=2000
    # U=3
    # seed=1
    time,mark
    0.81717864519964937,2
    ...
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EventSequence:
    """Realization of a U-dimensional point process over [0, T].

    Times are strictly increasing and strictly below T (an event at or past
    the horizon is rejected); marks are dimension labels in {1..U}.
    """

    times: np.ndarray
    marks: np.ndarray
    T: float
    U: int

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).copy()
        marks = np.asarray(self.marks, dtype=int).copy()
        if times.ndim != 1 or marks.shape != times.shape:
            raise ValueError("times and marks must be 1-d arrays of equal length")
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if self.U < 1:
            raise ValueError(f"dimension count U must be >= 1, got {self.U}")
        if times.size:
            if times[0] < 0:
                raise ValueError(f"negative event time {times[0]}")
            diffs = np.diff(times)
            if np.any(diffs == 0):
                k = int(np.flatnonzero(diffs == 0)[0])
                raise ValueError(f"duplicate event time {times[k]} at index {k + 1}")
            if np.any(diffs < 0):
                raise ValueError("event times must be strictly increasing")
            if times[-1] >= self.T:
                raise ValueError(
                    f"event time {times[-1]} is at or past the horizon T={self.T}")
            if marks.min() < 1 or marks.max() > self.U:
                bad = marks[(marks < 1) | (marks > self.U)][0]
                raise ValueError(f"mark {bad} outside 1..{self.U}")
        times.setflags(write=False)
        marks.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)

    def __len__(self) -> int:
        return self.times.size

    @property
    def counts(self) -> np.ndarray:
        """Number of events per dimension, |N_i| for i = 1..U."""
        return np.bincount(self.marks, minlength=self.U + 1)[1:].astype(float)

    def dim_indices(self, i: int) -> np.ndarray:
        """Indices of the events on dimension i (1-based i)."""
        return np.flatnonzero(self.marks == i)

    def restrict(self, t_end: float) -> "EventSequence":
        """Events strictly before t_end, with the horizon shrunk to t_end."""
        keep = self.times < t_end
        return EventSequence(self.times[keep], self.marks[keep], t_end, self.U)


def write_events_csv(path, events: EventSequence, meta: dict | None = None) -> None:
    """Write an event sequence with metadata comments; floats use 17
    significant digits so parsing round-trips exactly."""
    lines = []
    meta = dict(meta or {})
    meta.setdefault("T", events.T)
    meta.setdefault("U", events.U)
    for key in sorted(meta):
        value = meta[key]
        if isinstance(value, float):
            value = format(value, ".17g")
        lines.append(f"# {key}={value}")
    lines.append("time,mark")
    for t, m in zip(events.times, events.marks):
        lines.append(f"{t:.17g},{m}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_events_csv(path, T: float | None = None, U: int | None = None):
    """Parse an events file; returns (EventSequence, metadata dict).

    The horizon and dimension count come from the ``T``/``U`` arguments when
    given, else from the file metadata.  Malformed rows raise ValueError
    naming the offending line number.
    """
    meta: dict[str, str] = {}
    times: list[float] = []
    marks: list[int] = []
    header_seen = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, value = body.split("=", 1)
                    meta[key.strip()] = value.strip()
                continue
            if not header_seen:
                if line.replace(" ", "") != "time,mark":
                    raise ValueError(
                        f"{path}: line {lineno}: expected header 'time,mark', got {line!r}")
                header_seen = True
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ValueError(
                    f"{path}: line {lineno}: expected 'time,mark', got {line!r}")
            try:
                t = float(fields[0])
                m = int(fields[1])
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: malformed row {line!r}") from None
            if times and t == times[-1]:
                raise ValueError(f"{path}: duplicate event time at line {lineno}")
            if times and t < times[-1]:
                raise ValueError(f"{path}: non-increasing event time at line {lineno}")
            times.append(t)
            marks.append(m)
    if not header_seen:
        raise ValueError(f"{path}: missing 'time,mark' header")
    if T is None:
        if "T" not in meta:
            raise ValueError(
                f"{path}: no horizon: pass one explicitly or add a '# T=...' comment")
        T = float(meta["T"])
    if U is None:
        U = int(meta["U"]) if "U" in meta else (max(marks) if marks else 1)
    events = EventSequence(np.asarray(times), np.asarray(marks, dtype=int), T, U)
    return events, meta


__all__ = ["EventSequence", "write_events_csv", "read_events_csv"]
