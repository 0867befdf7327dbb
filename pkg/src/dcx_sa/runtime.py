"""Deterministic in-process SPMD runtime.

Each PE runs the same program in its own thread. Collectives are
synchronisation points: every PE deposits its contribution, the last one to
arrive computes all outputs, and everyone continues. Results therefore depend
only on the program and its inputs, never on thread scheduling.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .metrics import PeMetrics


class CollectiveError(RuntimeError):
    pass


class CollectiveMismatch(CollectiveError):
    """PEs reached the same synchronisation step through different collectives."""


class PeerAborted(CollectiveError):
    """Raised on surviving PEs after another PE failed."""


class _NoNeighbor:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "NO_NEIGHBOR"

    def __bool__(self) -> bool:
        return False


NO_NEIGHBOR = _NoNeighbor()


@dataclass(frozen=True)
class Topology:
    p: int
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"need at least one PE, got p={self.p}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _size(part: Any) -> int:
    if part is None:
        return 0
    try:
        return len(part)
    except TypeError:
        return 1


class _Service:
    def __init__(self, p: int):
        self.p = p
        self._cond = threading.Condition()
        self._names: list[str | None] = [None] * p
        self._slots: list[Any] = [None] * p
        self._arrived = 0
        self._generation = 0
        self._out: list[Any] = [None] * p
        self._failure: BaseException | None = None
        self._finished: dict[int, None] = {}

    def collective(self, rank: int, name: str, value: Any, combine: Callable[[list], list]):
        with self._cond:
            if self._failure is not None:
                raise PeerAborted("another PE failed") from None
            if self._finished:
                done = next(iter(self._finished))
                err = CollectiveMismatch(
                    f"PE {rank} entered {name} but PE {done} already returned from its program"
                )
                self._fail(err)
                raise err
            gen = self._generation
            self._names[rank] = name
            self._slots[rank] = value
            self._arrived += 1
            if self._arrived == self.p:
                names = self._names
                if len(set(names)) != 1:
                    first = names[0]
                    other = next(i for i, n in enumerate(names) if n != first)
                    err = CollectiveMismatch(
                        f"collective mismatch: PE 0 called {first} while PE {other} called {names[other]}"
                    )
                    self._fail(err)
                    raise err
                try:
                    self._out = combine(self._slots)
                except BaseException as exc:
                    self._fail(exc)
                    raise
                self._slots = [None] * self.p
                self._names = [None] * self.p
                self._arrived = 0
                self._generation += 1
                self._cond.notify_all()
                return self._out[rank]
            while self._generation == gen and self._failure is None:
                self._cond.wait()
            if self._generation == gen:
                raise PeerAborted(f"PE {rank} aborted inside {name}") from None
            return self._out[rank]

    def _fail(self, exc: BaseException) -> None:
        if self._failure is None:
            self._failure = exc
        self._cond.notify_all()

    def fail(self, exc: BaseException) -> None:
        with self._cond:
            self._fail(exc)

    def finish(self, rank: int) -> None:
        with self._cond:
            self._finished[rank] = None
            if self._arrived:
                waiting = [self._names[i] for i in range(self.p) if self._names[i] is not None]
                self._fail(
                    CollectiveMismatch(
                        f"PE {rank} returned from its program while other PEs wait in {waiting[0]}"
                    )
                )


@dataclass
class PeContext:
    """Handle given to each PE program: rank, topology, RNG and collectives."""

    rank: int
    topology: Topology
    _service: _Service = field(repr=False)
    metrics: PeMetrics = field(default_factory=PeMetrics, repr=False)

    def __post_init__(self):
        # Distinct spawn keys give independent streams per PE.
        self.rng = np.random.default_rng(
            np.random.SeedSequence(self.topology.seed, spawn_key=(self.rank,))
        )

    @property
    def p(self) -> int:
        return self.topology.p

    @property
    def seed(self) -> int:
        return self.topology.seed

    def _run(self, name: str, value: Any, combine: Callable[[list], list]):
        return self._service.collective(self.rank, name, value, combine)

    def barrier(self) -> None:
        self._run("barrier", None, lambda vals: [None] * len(vals))

    def prefix_sum(self, local: int) -> int:
        """Exclusive prefix sum of `local` over ranks."""

        def combine(vals):
            out, acc = [], 0
            for v in vals:
                out.append(acc)
                acc += v
            return out

        return self._run("prefix_sum", int(local), combine)

    def all_gather(self, local: Any) -> list:
        return self._run("all_gather", local, lambda vals: [list(vals)] * len(vals))

    def all_reduce_bool_or(self, local: bool) -> bool:
        return self._run("all_reduce_bool_or", bool(local), lambda vals: [any(vals)] * len(vals))

    def all_reduce_sum(self, local):
        return self._run("all_reduce_sum", local, lambda vals: [sum(vals)] * len(vals))

    def all_reduce_max(self, local):
        return self._run("all_reduce_max", local, lambda vals: [max(vals)] * len(vals))

    def broadcast(self, root: int, value: Any = None) -> Any:
        if not 0 <= root < self.p:
            raise ValueError(f"root {root} outside [0, {self.p})")
        return self._run("broadcast", value, lambda vals: [vals[root]] * len(vals))

    def neighbor_exchange(self, to_prev: Any, to_next: Any) -> tuple[Any, Any]:
        """Returns (from_prev, from_next); NO_NEIGHBOR at the ends."""

        def combine(vals):
            p = len(vals)
            return [
                (
                    vals[i - 1][1] if i > 0 else NO_NEIGHBOR,
                    vals[i + 1][0] if i + 1 < p else NO_NEIGHBOR,
                )
                for i in range(p)
            ]

        return self._run("neighbor_exchange", (to_prev, to_next), combine)

    def all_to_all(self, outgoing: Sequence[Any]) -> list:
        """outgoing[d] goes to PE d; returns incoming grouped by source rank."""
        if len(outgoing) != self.p:
            raise ValueError(f"all_to_all needs {self.p} outgoing parts, got {len(outgoing)}")
        sent = sum(_size(part) for part in outgoing)

        def combine(vals):
            p = len(vals)
            return [[vals[src][dst] for src in range(p)] for dst in range(p)]

        incoming = self._run("all_to_all", list(outgoing), combine)
        self.metrics.record_exchange(sent, sum(_size(part) for part in incoming))
        return incoming


def _spawn(topology: Topology, program: Callable[[PeContext], Any]):
    service = _Service(topology.p)
    contexts = [PeContext(r, topology, service) for r in range(topology.p)]
    results: list[Any] = [None] * topology.p
    errors: list[BaseException | None] = [None] * topology.p

    def body(ctx: PeContext) -> None:
        try:
            results[ctx.rank] = program(ctx)
        except BaseException as exc:
            errors[ctx.rank] = exc
            service.fail(exc)
        else:
            service.finish(ctx.rank)

    if topology.p == 1:
        body(contexts[0])
    else:
        threads = [
            threading.Thread(target=body, args=(ctx,), name=f"pe-{ctx.rank}", daemon=True)
            for ctx in contexts
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    if service._failure is not None:
        raise service._failure
    for err in errors:
        if err is not None:
            raise err
    return results, contexts


def spawn(topology: Topology, program: Callable[[PeContext], Any]) -> list:
    """Run `program` on all PEs and return the per-rank results."""
    return _spawn(topology, program)[0]


def spawn_with_metrics(topology: Topology, program: Callable[[PeContext], Any]):
    """Like spawn, but also returns each PE's metrics recorder."""
    results, contexts = _spawn(topology, program)
    return results, [ctx.metrics for ctx in contexts]
