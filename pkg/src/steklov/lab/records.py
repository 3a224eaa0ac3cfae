"""Experiment records and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ExperimentRecord", "records_to_csv", "records_from_csv", "records_to_json",
           "records_from_json", "sort_records"]


def _plain(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, str):
        return value
    raise TypeError(f"unsupported record value {value!r}")


@dataclass(frozen=True)
class ExperimentRecord:
    """One row of a study: its parameters and observables plus the verdict.

    ``tolerance`` is the threshold the record was judged against.
    """

    experiment: str
    params: dict = field(default_factory=dict)
    observables: dict = field(default_factory=dict)
    tolerance: float = 0.0
    passed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "params", {str(k): _plain(v) for k, v in self.params.items()})
        object.__setattr__(self, "observables", {str(k): _plain(v) for k, v in self.observables.items()})
        object.__setattr__(self, "tolerance", float(self.tolerance))
        object.__setattr__(self, "passed", bool(self.passed))

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "params": dict(self.params),
                "observables": dict(self.observables), "tolerance": self.tolerance,
                "passed": self.passed}


def sort_records(records):
    return sorted(records, key=lambda r: (r.experiment, r.params.get("index", 0)))


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text):
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def records_to_csv(records) -> str:
    """Flat CSV: ``experiment,passed,tolerance`` then ``param:*`` and ``obs:*`` columns."""
    records = sort_records(records)
    pkeys = sorted({k for r in records for k in r.params})
    okeys = sorted({k for r in records for k in r.observables})
    header = ["experiment", "passed", "tolerance"] + [f"param:{k}" for k in pkeys] + [f"obs:{k}" for k in okeys]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in records:
        row = [r.experiment, _fmt(r.passed), _fmt(r.tolerance)]
        row += [_fmt(r.params[k]) if k in r.params else "" for k in pkeys]
        row += [_fmt(r.observables[k]) if k in r.observables else "" for k in okeys]
        w.writerow(row)
    return buf.getvalue()


def records_from_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return []
    header = rows[0]
    if header[:3] != ["experiment", "passed", "tolerance"]:
        raise ValueError("not a record CSV (bad header)")
    out = []
    for row in rows[1:]:
        if not row:
            continue
        params, obs = {}, {}
        for name, cell in zip(header[3:], row[3:]):
            if cell == "":
                continue
            kind, key = name.split(":", 1)
            (params if kind == "param" else obs)[key] = _parse(cell)
        out.append(ExperimentRecord(row[0], params, obs, float(row[2]), row[1] == "true"))
    return out


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def records_to_json(records, indent=2) -> str:
    data = []
    for r in sort_records(records):
        d = r.to_dict()
        d["observables"] = {k: _json_safe(v) for k, v in d["observables"].items()}
        d["params"] = {k: _json_safe(v) for k, v in d["params"].items()}
        data.append(d)
    return json.dumps(data, indent=indent)


def records_from_json(text: str) -> list:
    def back(v):
        return float(v) if v in ("inf", "-inf", "nan") else v
    return [ExperimentRecord(d["experiment"], {k: back(v) for k, v in d["params"].items()},
                             {k: back(v) for k, v in d["observables"].items()},
                             d["tolerance"], d["passed"]) for d in json.loads(text)]
