"""Time-series records and quantum-vs-classical divergence diagnostics."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import MisuseError
from .phasespace import moment, norm

__all__ = [
    "TrajectoryRecord",
    "Divergence",
    "Saturation",
    "divergence",
    "saturation_check",
    "config_hash",
    "standard_observers",
]

REL_FLOOR = 1e-9


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class TrajectoryRecord:
    """Aligned time series plus free-form metadata.

    ``series`` maps a name (``x``, ``p``, ``p2``, ``norm``, ``purity``,
    ``gamma``, ``nu``...) to a vector the same length as ``times``.
    """

    times: np.ndarray
    series: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.series = {k: np.asarray(v, dtype=float) for k, v in self.series.items()}
        for name, v in self.series.items():
            if v.shape != self.times.shape:
                raise MisuseError(f"series {name!r} has {v.size} points, times has {self.times.size}")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise MisuseError("record times must be strictly increasing")

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.series[name]
        except KeyError:
            raise MisuseError(f"record has no series {name!r}; available: {sorted(self.series)}")

    def __len__(self) -> int:
        return self.times.size

    @property
    def names(self) -> list[str]:
        return list(self.series)

    def concatenate(self, other: "TrajectoryRecord") -> "TrajectoryRecord":
        """Append ``other``, dropping its first point if it repeats our last time."""
        if set(other.series) != set(self.series):
            raise MisuseError("cannot join records with different series")
        start = 1 if len(self) and other.times.size and np.isclose(other.times[0], self.times[-1]) else 0
        return TrajectoryRecord(
            np.concatenate([self.times, other.times[start:]]),
            {k: np.concatenate([v, other.series[k][start:]]) for k, v in self.series.items()},
            {**self.metadata, **other.metadata},
        )

    def to_csv(self, path) -> None:
        """Write ``# key = value`` metadata lines, a header row, then 17-digit rows."""
        with open(path, "w") as fh:
            for key in sorted(self.metadata):
                fh.write(f"# {key} = {json.dumps(self.metadata[key], sort_keys=True)}\n")
            fh.write(",".join(["t", *self.series]) + "\n")
            cols = np.column_stack([self.times, *self.series.values()]) if len(self) else []
            for row in cols:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "TrajectoryRecord":
        meta, header, rows = {}, None, []
        with open(path) as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].partition("=")
                    try:
                        meta[key.strip()] = json.loads(value.strip())
                    except json.JSONDecodeError:
                        meta[key.strip()] = value.strip()
                elif header is None:
                    header = line.split(",")
                else:
                    rows.append([float(v) for v in line.split(",")])
        if header is None or header[0] != "t":
            raise MisuseError(f"{path}: not a trajectory record (missing 't' header)")
        data = np.array(rows, dtype=float).reshape(-1, len(header))
        return cls(data[:, 0], {name: data[:, i] for i, name in enumerate(header) if i}, meta)


@dataclass
class Divergence:
    max_relative: float
    first_crossing: float | None
    times: np.ndarray
    relative: np.ndarray


def _aligned(a: TrajectoryRecord, b: TrajectoryRecord, name: str):
    lo = max(a.times[0], b.times[0])
    hi = min(a.times[-1], b.times[-1])
    if hi < lo:
        raise MisuseError("records cover disjoint time ranges")
    if a.times.shape == b.times.shape and np.array_equal(a.times, b.times):
        return a.times, a[name], b[name]
    keep = (a.times >= lo) & (a.times <= hi)
    t = a.times[keep]
    return t, a[name][keep], np.interp(t, b.times, b[name])


def divergence(quantum: TrajectoryRecord, classical: TrajectoryRecord, series: str,
               threshold: float | None = None, floor: float = REL_FLOOR) -> Divergence:
    """Relative deviation ``|q - c| / max(|c|, floor)`` on the quantum record's times.

    The classical record is linearly interpolated onto those times when the
    cadences differ; identical time grids are compared directly.
    """
    t, q, c = _aligned(quantum, classical, series)
    rel = np.abs(q - c) / np.maximum(np.abs(c), floor)
    first = None
    if threshold is not None:
        hit = np.nonzero(rel > threshold)[0]
        first = float(t[hit[0]]) if hit.size else None
    return Divergence(float(rel.max()), first, t, rel)


@dataclass
class Saturation:
    saturated: bool
    slope: float
    scale: float
    window: float


def saturation_check(record: TrajectoryRecord, series: str, window: float | None = None,
                     threshold: float = 0.01) -> Saturation:
    """Least-squares slope over the trailing ``window`` of the run.

    Saturated when ``|slope| < threshold * scale`` where ``scale`` is the mean
    absolute value of the series inside the window. The default window is the
    trailing third of the record's time span.
    """
    t, y = record.times, record[series]
    span = t[-1] - t[0]
    if window is None:
        window = span / 3.0
    if window > span * (1 + 1e-12) or window <= 0:
        raise MisuseError(f"window {window} does not fit in a record spanning {span}")
    sel = t >= t[-1] - window * (1 + 1e-12)
    if sel.sum() < 2:
        raise MisuseError("window holds fewer than two samples")
    slope = float(np.polyfit(t[sel], y[sel], 1)[0])
    scale = float(np.mean(np.abs(y[sel])))
    return Saturation(abs(slope) < threshold * max(scale, REL_FLOOR), slope, scale, float(window))


def standard_observers(names) -> dict:
    """Map observable names to callables ``state -> float``.

    Known names: ``x``, ``p``, ``x2``, ``p2``, ``norm``, ``purity``, ``gamma``,
    ``nu`` and ``min_eig`` (the last two need a commensurate grid).
    """
    from . import weyl

    cache = {}

    def report(s):
        # nu and min_eig at one observation share a single eigendecomposition
        if cache.get("state") is not s:
            cache["state"] = s
            cache["report"] = weyl.spectrum(weyl.to_density_matrix(s))
        return cache["report"]

    table = {
        "x": lambda s: moment(s, 1, 0),
        "p": lambda s: moment(s, 0, 1),
        "x2": lambda s: moment(s, 2, 0),
        "p2": lambda s: moment(s, 0, 2),
        "norm": norm,
        "purity": weyl.purity,
        "gamma": weyl.gamma,
        "f2": lambda s: float((s.f ** 2).sum() * s.grid.cell_area),
        "nu": lambda s: report(s).negative_mass,
        "min_eig": lambda s: report(s).min_eigenvalue,
    }
    out = {}
    for name in names:
        if name not in table:
            raise MisuseError(f"unknown observable {name!r}; known: {sorted(table)}")
        out[name] = table[name]
    return out
