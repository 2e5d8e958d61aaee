"""Verification reports and their JSON/CSV serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

PASS, FAIL, NUMERICAL_FAILURE = "PASS", "FAIL", "NUMERICAL_FAILURE"
STATUSES = (PASS, FAIL, NUMERICAL_FAILURE)


@dataclass
class VerificationReport:
    scenario_id: str
    inputs: dict
    computed: dict
    status: str
    tolerances: dict
    wall_time: float = field(default=0.0, compare=False)
    message: str = ""

    @classmethod
    def from_margins(cls, scenario_id, inputs, computed, margins, tolerances):
        """PASS iff every margin >= -tolerance; margins maps name -> (value, tol)."""
        ok = all(v >= -tol for v, tol in margins.values())
        finite = all(math.isfinite(v) for v in computed.values())
        status = PASS if ok and finite else (NUMERICAL_FAILURE if not finite else FAIL)
        return cls(scenario_id, inputs, dict(computed), status, dict(tolerances))

    def to_dict(self):
        return {
            "scenario_id": self.scenario_id,
            "status": self.status,
            "inputs": self.inputs,
            "computed": self.computed,
            "tolerances": self.tolerances,
            "message": self.message,
        }


REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "array",
    "items": {
        "type": "object",
        "additionalProperties": False,
        "required": ["scenario_id", "status", "inputs", "computed", "tolerances", "message"],
        "properties": {
            "scenario_id": {"type": "string", "minLength": 1},
            "status": {"enum": list(STATUSES)},
            "inputs": {"type": "object"},
            "computed": {"type": "object", "additionalProperties": {"type": "number"}},
            "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
            "message": {"type": "string"},
        },
    },
}


def _encode(obj, indent=0):
    """Deterministic JSON with floats at 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite value {obj!r} cannot be serialized")
        return format(obj, ".17g") if obj != int(obj) or abs(obj) >= 1e17 else format(obj, ".1f")
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_reports(reports):
    return _encode([r.to_dict() for r in reports]) + "\n"


def emit_report(reports, fmt, out_dir):
    """Write ``reports.json`` or ``reports.csv`` into ``out_dir``; return the path."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path = out / "reports.json"
            path.write_text(dumps_reports(reports))
        elif fmt == "csv":
            path = out / "reports.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["scenario_id", "key", "value", "status"])
                for r in reports:
                    for k, v in r.computed.items():
                        w.writerow([r.scenario_id, k, format(float(v), ".17g"), r.status])
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return path


def load_reports(path):
    """Parse a JSON report file back into VerificationReport objects."""
    data = json.loads(Path(path).read_text())
    return [VerificationReport(d["scenario_id"], d["inputs"], d["computed"], d["status"], d["tolerances"],
                               message=d.get("message", "")) for d in data]
