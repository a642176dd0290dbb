"""Ordered event log of a protocol run, serialized as JSON lines.

Each line is one event with the stable keys ``seq``, ``kind``, ``party``,
``positions`` and ``payload``. Keys are sorted and separators fixed, so two
logs of the same run are byte-identical and diff cleanly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

EVENT_KEYS = ("seq", "kind", "party", "positions", "payload")


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class Transcript:
    def __init__(self, events: Iterable[dict] | None = None):
        self.events: list[dict[str, Any]] = list(events) if events is not None else []

    def record(self, kind: str, party=None, positions=None, **payload) -> dict:
        event = {
            "seq": len(self.events),
            "kind": kind,
            "party": None if party is None else str(party),
            "positions": None if positions is None else _plain(np.asarray(positions, dtype=np.int64)),
            "payload": _plain(payload),
        }
        self.events.append(event)
        return event

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __eq__(self, other):
        if not isinstance(other, Transcript):
            return NotImplemented
        return self.to_jsonl() == other.to_jsonl()

    def of_kind(self, kind: str) -> list[dict]:
        return [e for e in self.events if e["kind"] == kind]

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in self.events
        )

    @classmethod
    def from_jsonl(cls, text: str) -> Transcript:
        events = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"transcript line {lineno}: {exc.msg}") from exc
            missing = [k for k in EVENT_KEYS if k not in event]
            if missing:
                raise ValueError(f"transcript line {lineno}: missing keys {missing}")
            events.append(event)
        return cls(events)

    def dump(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> Transcript:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))

    def first_difference(self, other: Transcript) -> int | None:
        """Index of the first differing event, or None if the logs match."""
        for i, (a, b) in enumerate(zip(self.events, other.events)):
            if json.dumps(a, sort_keys=True) != json.dumps(b, sort_keys=True):
                return i
        if len(self.events) != len(other.events):
            return min(len(self.events), len(other.events))
        return None
