"""Sampled solutions: 1D profiles and 2D space-time grids, with CSV I/O."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import NonFiniteState

__all__ = ["SolutionGrid"]


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


class SolutionGrid:
    """Columns sampled on one axis (profiles) or on a (t, x) tensor grid.

    ``axes`` maps axis names to strictly monotone 1D arrays; every column
    has shape ``tuple(len(a) for a in axes.values())``.
    """

    def __init__(self, axes: dict, columns: dict, meta: dict | None = None):
        self.axes = {k: np.asarray(v, dtype=float) for k, v in axes.items()}
        self.columns = {k: np.asarray(v, dtype=float) for k, v in columns.items()}
        self.meta = dict(meta or {})
        shape = tuple(len(a) for a in self.axes.values())
        for name, a in self.axes.items():
            if a.ndim != 1 or len(a) < 1:
                raise ValueError(f"axis {name} must be a nonempty 1D array")
            d = np.diff(a)
            if len(d) and not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError(f"axis {name} is not strictly monotone")
            if not np.all(np.isfinite(a)):
                raise NonFiniteState(f"axis {name} has non-finite entries", where=name, state=None)
        for name, c in self.columns.items():
            if c.shape != shape:
                raise ValueError(f"column {name} has shape {c.shape}, expected {shape}")
            bad = ~np.isfinite(c)
            if bad.any():
                idx = tuple(int(i[0]) for i in np.nonzero(bad))
                where = {ax: float(self.axes[ax][i]) for ax, i in zip(self.axes, idx)}
                raise NonFiniteState(f"column {name} is not finite", where=where,
                                     state=float(c[idx]))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def axis(self, name):
        return self.axes[name]

    def __getitem__(self, name):
        return self.columns[name]

    def spacing(self, name) -> float | None:
        """Uniform spacing of an axis, or None if it is not uniform."""
        d = np.diff(self.axes[name])
        if len(d) == 0:
            return None
        return float(d[0]) if np.allclose(d, d[0], rtol=1e-9, atol=0) else None

    # -- serialization ---------------------------------------------------------
    def to_csv(self, path) -> Path:
        """Write the long-format CSV plus a JSON metadata sidecar."""
        path = Path(path)
        names = list(self.axes) + list(self.columns)
        grids = np.meshgrid(*self.axes.values(), indexing="ij")
        flat = [g.ravel() for g in grids] + [c.ravel() for c in self.columns.values()]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in zip(*flat):
                w.writerow([_fmt(v) for v in row])
        side = {"axes": {k: {"n": len(v), "start": float(v[0]), "stop": float(v[-1]),
                             "spacing": self.spacing(k)} for k, v in self.axes.items()},
                "columns": list(self.columns), "meta": self.meta}
        path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "SolutionGrid":
        path = Path(path)
        side = json.loads(path.with_suffix(".json").read_text())
        axes_names = list(side["axes"])
        shape = tuple(side["axes"][a]["n"] for a in axes_names)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        nax = len(axes_names)
        axes = {}
        for j, a in enumerate(axes_names):
            col = data[:, j].reshape(shape)
            sl = [0] * nax
            sl[j] = slice(None)
            axes[a] = col[tuple(sl)]
        cols = {c: data[:, nax + i].reshape(shape) for i, c in enumerate(side["columns"])}
        return cls(axes, cols, side.get("meta", {}))

    def __repr__(self):
        ax = ", ".join(f"{k}[{len(v)}]" for k, v in self.axes.items())
        return f"SolutionGrid({ax}; {', '.join(self.columns)})"
