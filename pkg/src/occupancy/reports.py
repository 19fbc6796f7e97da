"""Structured results pairing a number with the conditions that make it valid."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Condition:
    """One validity condition of a bound, e.g. ``n > threshold``."""

    name: str
    satisfied: bool
    threshold: float | None = None

    def to_dict(self):
        return {"name": self.name, "satisfied": self.satisfied,
                "threshold": self.threshold}


@dataclass(frozen=True)
class BoundReport:
    """An upper bound on a probability together with its provenance.

    A report whose conditions are not all satisfied is *inapplicable*: its
    ``value`` is ``None``. Reports built from simulated expectations are marked
    ``estimated`` and must never be read as certified bounds.
    """

    theorem: str
    value: float | None
    validity: tuple[Condition, ...] = ()
    components: dict = field(default_factory=dict)
    estimated: bool = False

    def __post_init__(self):
        if not self.applicable and self.value is not None:
            object.__setattr__(self, "value", None)
        if self.value is not None and not self.value >= 0:
            raise ValueError(f"bound value must be nonnegative, got {self.value}")

    @property
    def applicable(self):
        return all(c.satisfied for c in self.validity)

    @property
    def thresholds(self):
        return [c.threshold for c in self.validity
                if not c.satisfied and c.threshold is not None]

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "value": self.value,
            "applicable": self.applicable,
            "estimated": self.estimated,
            "components": {k: _jsonable(v) for k, v in self.components.items()},
            "validity": [c.to_dict() for c in self.validity],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if hasattr(v, "tolist"):
        return v.tolist()
    return v
