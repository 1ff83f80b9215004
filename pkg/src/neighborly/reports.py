"""Structured experiment reports and seed derivation.

Reports are line-delimited JSON, one flat record per unit of work, with
keys sorted so identical runs serialize to identical bytes.  Every record
carries the run seed and a wall_clock_ms field; freezing the timer zeroes
wall_clock_ms so that full reports become byte-stable across reruns.

All randomness flows from one root seed through derive_rng(root, tag,
index), so parallel or reordered trials reproduce exactly.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np


def derive_seed(root: int, tag: str, index: int = 0) -> int:
    """Stable 63-bit seed from (root, module tag, trial index)."""
    digest = hashlib.sha256(f"{root}:{tag}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def derive_rng(root: int, tag: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, tag, index))


def _jsonable(value):
    if isinstance(value, (np.floating,)):
        value = float(value)
    if isinstance(value, (np.integer,)):
        value = int(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            return repr(value)
        return value
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    return str(value)


@dataclass
class ExperimentReport:
    """Append-only record list with a stable per-subcommand schema."""

    seed: int
    freeze_timing: bool = False
    records: List[dict] = field(default_factory=list)
    _t0: float = field(default_factory=time.perf_counter)

    def restart_clock(self) -> None:
        self._t0 = time.perf_counter()

    def elapsed_ms(self) -> int:
        if self.freeze_timing:
            return 0
        return int((time.perf_counter() - self._t0) * 1000)

    def add(self, **fields) -> dict:
        record = {k: _jsonable(v) for k, v in fields.items()}
        record.setdefault("seed", self.seed)
        record.setdefault("wall_clock_ms", self.elapsed_ms())
        self.records.append(record)
        self.restart_clock()
        return record

    def to_bytes(self) -> bytes:
        lines = [json.dumps(r, sort_keys=True, separators=(",", ":"))
                 for r in self.records]
        return ("\n".join(lines) + "\n").encode()

    def write(self, out: Optional[str]) -> None:
        data = self.to_bytes()
        if out is None or out == "-":
            import sys
            sys.stdout.write(data.decode())
        else:
            Path(out).write_bytes(data)


def read_report(path) -> List[dict]:
    records = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records


def canonical_bytes(records: List[dict], drop_timing: bool = True) -> bytes:
    """Serialization with volatile timing masked, for byte comparisons."""
    out = []
    for r in records:
        r = dict(r)
        if drop_timing:
            r["wall_clock_ms"] = 0
        out.append(json.dumps(r, sort_keys=True, separators=(",", ":")))
    return ("\n".join(out) + "\n").encode()
