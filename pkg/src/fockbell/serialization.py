"""State files and report encoding.

A state file is UTF-8 JSON::

    {
      "statistics": "boson",
      "truncation": {"max_quanta_per_side": 8, "amplitude_floor": 1e-12},
      "partition": {"a_modes": [{"party": "A", "field_tag": 0, "index": 1}, ...],
                    "b_modes": [...]},
      "pruned_weight": 0.0,
      "amplitudes": [{"a_occ": [[0, 1]], "b_occ": [[1, 2]], "re": 0.5, "im": 0.0}, ...]
    }

``a_occ``/``b_occ`` list ``[position, count]`` pairs for the nonzero counts,
where ``position`` indexes the party's sorted mode list.  Floats are written
with Python's shortest round-trip repr, so a load reproduces every bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .fock import (
    FieldState,
    ModeId,
    ModePartition,
    Occupation,
    Party,
    Statistics,
    TruncationPolicy,
)


class StateFormatError(ValueError):
    """A state file is malformed or fails validation."""


def sparse_occupation(occ: Occupation) -> list[list[int]]:
    return [[i, c] for i, c in enumerate(occ) if c]


def dense_occupation(pairs: list, size: int) -> Occupation:
    occ = [0] * size
    for pos, count in pairs:
        if not 0 <= pos < size:
            raise StateFormatError(f"mode position {pos} out of range")
        occ[pos] = int(count)
    return tuple(occ)


def _mode_dict(m: ModeId) -> dict:
    return {"party": m.party.value, "field_tag": m.field_tag, "index": m.index}


def state_to_dict(s: FieldState) -> dict[str, Any]:
    return {
        "statistics": s.statistics.value,
        "truncation": {
            "max_quanta_per_side": s.truncation.max_quanta_per_side,
            "amplitude_floor": s.truncation.amplitude_floor,
        },
        "partition": {
            "a_modes": [_mode_dict(m) for m in s.partition.a_modes],
            "b_modes": [_mode_dict(m) for m in s.partition.b_modes],
        },
        "pruned_weight": s.pruned_weight,
        "amplitudes": [
            {
                "a_occ": sparse_occupation(ka),
                "b_occ": sparse_occupation(kb),
                "re": v.real,
                "im": v.imag,
            }
            for (ka, kb), v in s.amplitudes.items()
        ],
    }


def state_from_dict(data: dict[str, Any]) -> FieldState:
    try:
        modes = data["partition"]
        partition = ModePartition(
            tuple(ModeId(Party(m["party"]), int(m["index"]), int(m.get("field_tag", 0))) for m in modes["a_modes"]),
            tuple(ModeId(Party(m["party"]), int(m["index"]), int(m.get("field_tag", 0))) for m in modes["b_modes"]),
        )
        trunc = data.get("truncation", {})
        policy = TruncationPolicy(
            int(trunc.get("max_quanta_per_side", TruncationPolicy.max_quanta_per_side)),
            float(trunc.get("amplitude_floor", TruncationPolicy.amplitude_floor)),
        )
        n_a, n_b = len(partition.a_modes), len(partition.b_modes)
        amps = {}
        for rec in data["amplitudes"]:
            key = (dense_occupation(rec["a_occ"], n_a), dense_occupation(rec["b_occ"], n_b))
            if key in amps:
                raise StateFormatError(f"duplicate basis key {key}")
            amps[key] = complex(float(rec["re"]), float(rec.get("im", 0.0)))
        return FieldState(
            partition,
            amps,
            statistics=Statistics(data.get("statistics", "boson")),
            truncation=policy,
            pruned_weight=float(data.get("pruned_weight", 0.0)),
        )
    except StateFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise StateFormatError(str(exc)) from exc


def validate_state(s: FieldState, norm_tol: float = 1e-10) -> None:
    if not s.partition.is_bipartite:
        raise StateFormatError("both parties need at least one mode")
    if abs(s.norm_squared() - 1.0) > norm_tol:
        raise StateFormatError(f"state is not normalized (norm^2 = {s.norm_squared()!r})")


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError("non-finite value in report")
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _clean(obj.item())
    return obj


def save_state(s: FieldState, path: str | Path) -> None:
    Path(path).write_text(dumps(state_to_dict(s)), encoding="utf-8")


def load_state(path: str | Path, validate: bool = True) -> FieldState:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"{path}: {exc}") from exc
    s = state_from_dict(data)
    if validate:
        validate_state(s)
    return s
