"""Experiment reports with deterministic CSV / JSON rendering.

CSV columns: ``experiment, group keys..., repeats, mean, std, sem``.  ``std``
is the sample standard deviation over repeats (ddof=1) and ``sem`` the
standard deviation of the mean.  JSON additionally carries the config echo and
the per-repeat values.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np


def summarize(values) -> dict:
    v = np.asarray(values, dtype=float)
    k = v.size
    std = float(np.std(v, ddof=1)) if k > 1 else 0.0
    return {"repeats": k, "mean": float(np.mean(v)), "std": std,
            "sem": std / math.sqrt(k) if k > 1 else 0.0}


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    rows: list[dict] = field(default_factory=list)

    def add(self, values, **keys) -> dict:
        row = {**keys, **summarize(values), "values": [float(x) for x in values]}
        self.rows.append(row)
        return row

    def lookup(self, **keys) -> dict:
        for row in self.rows:
            if all(row.get(k) == v for k, v in keys.items()):
                return row
        raise KeyError(keys)

    def to_json(self) -> str:
        return json.dumps({"experiment": self.experiment, "config": self.config, "rows": self.rows},
                          indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        keys = []
        for row in self.rows:
            keys += [k for k in row if k not in keys and k not in ("values", "repeats", "mean", "std", "sem")]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", *keys, "repeats", "mean", "std", "sem"])
        for row in self.rows:
            w.writerow([self.experiment, *(row.get(k, "") for k in keys),
                        row["repeats"], repr(row["mean"]), repr(row["std"]), repr(row["sem"])])
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown format {fmt!r}")
