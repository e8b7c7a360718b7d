"""Shared report records and deterministic serialization."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


@dataclass
class WindowSample:
    L: float
    shift: float
    max_distance: float
    fraction: float


@dataclass
class WitnessReport:
    """Checkable transcript of a witness search or verification run."""

    experiment: str
    inputs: dict
    M: float | None = None
    windows: list[WindowSample] = field(default_factory=list)
    passed: bool = False
    assumptions: list[str] = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "experiment": self.experiment,
            "inputs": self.inputs,
            "M": self.M,
            "windows": [
                {"L": w.L, "shift": w.shift,
                 "max_distance": w.max_distance, "fraction": w.fraction}
                for w in self.windows
            ],
            "pass": self.passed,
            "assumptions": list(self.assumptions),
            "residuals": self.residuals,
            "extra": self.extra,
        }


def dump_json(obj: dict, path) -> None:
    """Deterministic JSON: sorted keys, fixed separators, repr floats."""
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def emit_plot_data(series: dict[str, list], path) -> None:
    """Write named columns as CSV with a header row.

    ``series`` maps column name -> sequence; all columns must have equal
    length.  Floats are written via repr so reruns are byte-identical.
    """
    names = list(series.keys())
    if not names:
        raise ValueError("no columns to write")
    lengths = {len(series[n]) for n in names}
    if len(lengths) != 1:
        raise ValueError("columns have unequal lengths")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*(series[n] for n in names)):
            writer.writerow([repr(float(v)) for v in row])
