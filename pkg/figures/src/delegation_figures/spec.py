"""Figure specifications and the result-file schemas they consume.

This package reads only the documented CSV outputs of an experiment run
(`draws.csv`, `objectives.csv`); it has no dependency on the simulator's
internals, so it can be pointed at any outputs with the same schemas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

DRAWS_COLUMNS = [
    "draw",
    "stable",
    "idle_stake",
    "delegated_stake",
    "pledged_stake",
    "idle_n",
    "delegator_n",
    "spo_n",
]

OBJECTIVES_COLUMNS = [
    "draw",
    "ref_index",
    "ref_pledge",
    "participation",
    "decentralization",
    "expenditure",
]

KINDS = (
    "ParticipationScatter",
    "ParticipationBars",
    "ObjectiveCurves",
    "DecentVsExpenditure",
)


class SpecError(ValueError):
    """The figure spec or its inputs are malformed."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    out_path: str
    group_key: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SpecError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise SpecError("figure spec needs at least one input CSV")
        object.__setattr__(self, "inputs", tuple(self.inputs))

    @classmethod
    def from_dict(cls, data: dict) -> "FigureSpec":
        missing = [key for key in ("kind", "inputs", "out_path") if key not in data]
        if missing:
            raise SpecError(f"figure spec missing fields: {', '.join(missing)}")
        return cls(
            kind=data["kind"],
            inputs=tuple(data["inputs"]),
            out_path=data["out_path"],
            group_key=data.get("group_key"),
        )


def load_spec(path: str | Path) -> FigureSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec is not valid JSON: {exc}") from exc
    return FigureSpec.from_dict(data)
