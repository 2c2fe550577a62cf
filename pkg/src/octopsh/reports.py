"""Machine-readable check reports."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = ["Report", "to_jsonable", "digest"]


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    if hasattr(obj, "to_text"):
        return obj.to_text()
    return obj


def digest(inputs: dict) -> str:
    blob = json.dumps(to_jsonable(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Report:
    """Outcome of one numerical check.

    ``status`` is ``"pass"``, ``"fail"`` or ``"inconclusive"``; ``passed`` is
    true only for ``"pass"``.
    """

    check: str
    inputs: dict
    estimate: Any
    stderr: Any
    gate: str
    status: str
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @staticmethod
    def status_of(ok: bool) -> str:
        return "pass" if ok else "fail"

    def as_dict(self) -> dict:
        return to_jsonable(
            {
                "check": self.check,
                "inputs": self.inputs,
                "inputs_digest": digest(self.inputs),
                "value": self.estimate,
                "stderr": self.stderr,
                "gate": self.gate,
                "pass": self.passed,
                "status": self.status,
                "details": self.details,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))

    def line(self) -> str:
        return f"{self.status.upper():12s} {self.check}: estimate={_short(self.estimate)} stderr={_short(self.stderr)} gate[{self.gate}]"


def _short(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    if x is None:
        return "-"
    if isinstance(x, (list, tuple, np.ndarray)) and len(x) <= 4:
        return "[" + ", ".join(_short(v) for v in x) + "]"
    if isinstance(x, (list, tuple, np.ndarray)):
        return f"<{len(x)} values>"
    return str(x)
