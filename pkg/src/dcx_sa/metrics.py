"""Per-PE counters and their aggregation into a run report."""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Iterator

SCHEMA_VERSION = 1


@dataclass
class PhaseRecord:
    sent: int = 0
    received: int = 0
    # Records materialized per bucket before / after the sorting exchange.
    bucket_local: list[int] = field(default_factory=list)
    bucket_received: list[int] = field(default_factory=list)
    elements: int = 0
    wall_time: float = 0.0


class PeMetrics:
    """PE-local recorder. Only touched by the owning PE's thread."""

    def __init__(self) -> None:
        self.phases: dict[tuple[int, str], PhaseRecord] = {}
        self.levels: dict[int, dict[str, Any]] = {}
        self._stack: list[tuple[int, str]] = []

    @contextmanager
    def phase(self, depth: int, name: str) -> Iterator[PhaseRecord]:
        key = (depth, name)
        rec = self.phases.setdefault(key, PhaseRecord())
        self._stack.append(key)
        start = time.perf_counter()
        try:
            yield rec
        finally:
            rec.wall_time += time.perf_counter() - start
            self._stack.pop()

    def current(self) -> PhaseRecord:
        key = self._stack[-1] if self._stack else (-1, "untracked")
        return self.phases.setdefault(key, PhaseRecord())

    def record_exchange(self, sent: int, received: int) -> None:
        rec = self.current()
        rec.sent += sent
        rec.received += received

    def record_bucket(self, local: int, received: int) -> None:
        rec = self.current()
        rec.bucket_local.append(int(local))
        rec.bucket_received.append(int(received))

    def record_level(self, depth: int, **info: Any) -> None:
        self.levels.setdefault(depth, {}).update(info)


@dataclass
class PhaseSummary:
    """One phase at one recursion level, aggregated over PEs."""

    depth: int
    name: str
    sent: list[int]
    received: list[int]
    bucket_loads: list[list[int]]
    bucket_received: list[list[int]]
    wall_time: list[float]
    elements: int = 0

    @property
    def p(self) -> int:
        return len(self.sent)

    @property
    def q(self) -> int:
        return max((len(b) for b in self.bucket_loads), default=0)

    @property
    def max_materialized(self) -> list[int]:
        return [max(b, default=0) for b in self.bucket_loads]

    @property
    def max_bucket_load(self) -> int:
        return max(self.max_materialized, default=0)

    @property
    def conserved(self) -> bool:
        return sum(self.sent) == sum(self.received)

    def to_dict(self) -> dict[str, Any]:
        p, q = self.p, self.q
        n = self.elements
        out = {
            "sent": self.sent,
            "received": self.received,
            "bucket_loads": self.bucket_loads,
            "bucket_received": self.bucket_received,
            "max_materialized_per_pe": self.max_materialized,
            "max_bucket_load": self.max_bucket_load,
            "wall_time_s": self.wall_time,
            "elements": n,
            "q": q,
        }
        if q:
            out["expected_load"] = n / (p * q)
            out["bound_2n_over_pq"] = 2 * n / (p * q)
        return out


@dataclass
class RunMetrics:
    p: int
    params: dict[str, Any]
    levels: list[dict[str, Any]]
    phases: list[PhaseSummary]

    @classmethod
    def from_pes(cls, pes: list[PeMetrics], params: dict[str, Any] | None = None) -> "RunMetrics":
        p = len(pes)
        keys = sorted({k for pe in pes for k in pe.phases})
        phases = []
        for depth, name in keys:
            recs = [pe.phases.get((depth, name), PhaseRecord()) for pe in pes]
            phases.append(
                PhaseSummary(
                    depth=depth,
                    name=name,
                    sent=[r.sent for r in recs],
                    received=[r.received for r in recs],
                    bucket_loads=[list(r.bucket_local) for r in recs],
                    bucket_received=[list(r.bucket_received) for r in recs],
                    wall_time=[r.wall_time for r in recs],
                    elements=max(r.elements for r in recs),
                )
            )
        depths = sorted({d for pe in pes for d in pe.levels})
        levels = []
        for d in depths:
            info: dict[str, Any] = {"depth": d}
            for pe in pes:
                info.update(pe.levels.get(d, {}))
            levels.append(info)
        return cls(p=p, params=dict(params or {}), levels=levels, phases=phases)

    def phase(self, depth: int, name: str) -> PhaseSummary:
        for ph in self.phases:
            if ph.depth == depth and ph.name == name:
                return ph
        raise KeyError((depth, name))

    @property
    def recursion_depth(self) -> int:
        return max((lv["depth"] for lv in self.levels), default=0)

    def _phase_dict(self, ph: PhaseSummary) -> dict[str, Any]:
        out = ph.to_dict()
        c, gamma = self.params.get("chunk_size"), self.params.get("gamma")
        if ph.q and c is not None and gamma is not None and ph.p > 1:
            # 2n/(pq) load bound of random chunk redistribution holds w.h.p. above this n
            from .chunking import load_bound_min_n

            need = load_bound_min_n(ph.p, ph.q, c, gamma)
            out["load_bound_required_n"] = need
            out["load_bound_precondition"] = ph.elements >= need
        return out

    def to_dict(self) -> dict[str, Any]:
        levels = []
        for lv in self.levels:
            entry = dict(lv)
            entry["phases"] = {
                ph.name: self._phase_dict(ph) for ph in self.phases if ph.depth == lv["depth"]
            }
            levels.append(entry)
        return {
            "schema_version": SCHEMA_VERSION,
            "p": self.p,
            "params": self.params,
            "recursion_depth": self.recursion_depth,
            "levels": levels,
            "other_phases": {
                ph.name: self._phase_dict(ph)
                for ph in self.phases
                if ph.depth not in {lv["depth"] for lv in self.levels}
            },
        }


def emit_metrics(metrics: RunMetrics, path) -> dict[str, Any]:
    doc = metrics.to_dict()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc
