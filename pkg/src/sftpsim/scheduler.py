"""Deterministic discrete-event queue.

Events fire in (tick, insertion-sequence) order, so equal ticks dequeue in
the order they were scheduled and reruns are reproducible.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

BROADCAST = "broadcast"
RECEIVE = "receive"
ACK = "ack"
TIMEOUT = "timeout"
PING_REQ = "ping_req"
PING_RESP = "ping_resp"


@dataclass(frozen=True)
class SimEvent:
    tick: int
    sequence: int
    kind: str
    payload: dict = field(default_factory=dict, compare=False)


class EventQueue:
    def __init__(self):
        self._heap: list[tuple[int, int, SimEvent]] = []
        self._sequence = 0
        self._clock = 0

    @property
    def clock(self) -> int:
        return self._clock

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, tick: int, kind: str, **payload) -> SimEvent:
        if tick < self._clock:
            raise ValueError(f"event scheduled in the past (tick {tick} < clock {self._clock})")
        event = SimEvent(tick, self._sequence, kind, payload)
        self._sequence += 1
        heapq.heappush(self._heap, (tick, event.sequence, event))
        return event

    def pop(self) -> SimEvent:
        tick, _, event = heapq.heappop(self._heap)
        self._clock = tick
        return event
