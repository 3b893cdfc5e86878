"""Labelled prime event structures: events, causality, conflict,
configurations, interleavings and the prefix order.

Events are pairs (label, history); the history is a configuration and the
event's immediate causes are its maximal events.  Conflict is stored as
direct conflicts assigned at creation time and closed hereditarily on
query.  The structure is built single-writer and queried freely afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional


class CapExceeded(Exception):
    """A configured enumeration cap was hit; the result would be partial."""


@dataclass
class Event:
    eid: int
    label: object  # transformer; must expose .edge or a stable key
    immediate_causes: frozenset[int]
    causes: frozenset[int]  # transitive closure, cached at creation
    direct_conflicts: set[int] = field(default_factory=set)
    cached_state: object = None
    cutoff: bool = False

    @property
    def depth(self) -> int:
        """Size of the local configuration [e]."""
        return len(self.causes) + 1

    def local_config(self) -> frozenset[int]:
        return self.causes | {self.eid}


def label_key(label: object) -> object:
    """Stable identity of a label; edge-backed transformers share the edge."""
    edge = getattr(label, "edge", None)
    if edge is not None:
        return edge.index
    return getattr(label, "name", label)


class PES:
    """Event store with derived causality and hereditary conflict."""

    def __init__(self, dependent: Callable[[object, object], bool]):
        self.dependent = dependent
        self.events: list[Event] = []
        self._index: dict[tuple[object, frozenset[int]], int] = {}

    def __len__(self) -> int:
        return len(self.events)

    def event(self, eid: int) -> Event:
        return self.events[eid]

    def event_ids(self) -> range:
        return range(len(self.events))

    def find(self, label: object, history: frozenset[int]) -> Optional[int]:
        return self._index.get((label_key(label), history))

    def add_event(self, label: object, history: frozenset[int]) -> tuple[int, bool]:
        """Insert the event (label, history); dedup on the pair.

        Returns (event id, created).  The history must be a configuration;
        direct conflicts with all dependent events outside the history are
        recorded on both sides.
        """
        history = frozenset(history)
        if not self.is_configuration(history):
            raise ValueError("event history is not a configuration")
        key = (label_key(label), history)
        existing = self._index.get(key)
        if existing is not None:
            return existing, False
        eid = len(self.events)
        maximal = self._maximal(history)
        ev = Event(
            eid=eid,
            label=label,
            immediate_causes=frozenset(maximal),
            causes=history,
        )
        for other in self.events:
            if other.eid in history:
                continue
            if self.dependent(label, other.label):
                ev.direct_conflicts.add(other.eid)
                other.direct_conflicts.add(eid)
        self.events.append(ev)
        self._index[key] = eid
        return eid, True

    def _maximal(self, config: frozenset[int]) -> set[int]:
        out = set(config)
        for eid in config:
            out -= self.events[eid].causes
        return out

    def maximal_events(self, config: frozenset[int]) -> set[int]:
        return self._maximal(config)

    # -- relations ---------------------------------------------------------

    def lt(self, a: int, b: int) -> bool:
        return a in self.events[b].causes

    def in_conflict(self, a: int, b: int) -> bool:
        """Hereditary conflict: some causes (inclusive) are in direct conflict."""
        if a == b:
            return False
        ca = self.events[a].local_config()
        cb = self.events[b].local_config()
        for x in ca:
            dx = self.events[x].direct_conflicts
            if dx & cb:
                return True
        return False

    def conflict_free_with(self, config: frozenset[int], eid: int) -> bool:
        # valid when config is causally closed and causes(eid) <= config:
        # within a causally closed set, hereditary conflict always exposes a
        # direct conflict between members
        return not (self.events[eid].direct_conflicts & config)

    def is_configuration(self, ids: Iterable[int]) -> bool:
        s = frozenset(ids)
        for eid in s:
            if eid < 0 or eid >= len(self.events):
                raise ValueError(f"unknown event id {eid}")
        for eid in s:
            if not self.events[eid].causes <= s:
                return False
        # causally closed, so conflict-freedom reduces to direct conflicts
        for eid in s:
            if self.events[eid].direct_conflicts & s:
                return False
        return True

    def local_config(self, eid: int) -> frozenset[int]:
        return self.events[eid].local_config()

    # -- configuration enumeration -----------------------------------------

    def extensions(self, config: frozenset[int],
                   allow_cutoffs: bool = True) -> list[int]:
        """Events that can be added to config keeping it a configuration."""
        out = []
        for ev in self.events:
            if ev.eid in config:
                continue
            if not allow_cutoffs and ev.cutoff:
                continue
            if not ev.causes <= config:
                continue
            if not self.conflict_free_with(config, ev.eid):
                continue
            out.append(ev.eid)
        return out

    def all_configurations(self, cap: int = 100000) -> list[frozenset[int]]:
        """Every finite configuration, generated in increasing-id order.

        Event ids respect causality (causes have smaller ids), so growing
        strictly by id enumerates each configuration exactly once.
        """
        out: list[frozenset[int]] = []

        def grow(config: frozenset[int], min_id: int) -> None:
            out.append(config)
            if len(out) > cap:
                raise CapExceeded(f"more than {cap} configurations")
            for ev in self.events:
                if ev.eid < min_id:
                    continue
                if not ev.causes <= config:
                    continue
                if not self.conflict_free_with(config, ev.eid):
                    continue
                grow(config | {ev.eid}, ev.eid + 1)

        grow(frozenset(), 0)
        return out

    def maximal_configurations(self, cap: int = 100000) -> list[frozenset[int]]:
        return [c for c in self.all_configurations(cap) if not self.extensions(c)]

    # -- interleavings -------------------------------------------------------

    def interleavings(self, config: frozenset[int], cap: int = 100000) -> list[tuple]:
        """Label sequences of all topological sorts of the configuration."""
        if not self.is_configuration(config):
            raise ValueError("not a configuration")
        out: list[tuple] = []
        remaining = set(config)
        seq: list[object] = []

        def rec() -> None:
            if not remaining:
                out.append(tuple(seq))
                if len(out) > cap:
                    raise CapExceeded(f"more than {cap} interleavings")
                return
            ready = sorted(
                e for e in remaining
                if not (self.events[e].causes & remaining)
            )
            for eid in ready:
                remaining.discard(eid)
                seq.append(self.events[eid].label)
                rec()
                seq.pop()
                remaining.add(eid)

        rec()
        return out

    def one_topological_sort(self, config: frozenset[int]) -> list[int]:
        remaining = set(config)
        out = []
        while remaining:
            ready = min(
                e for e in remaining if not (self.events[e].causes & remaining)
            )
            out.append(ready)
            remaining.discard(ready)
        return out

    # -- structural checks ---------------------------------------------------

    def check_axioms(self) -> None:
        """Assert the PES axioms; used by tests and debug paths."""
        for ev in self.events:
            assert ev.eid not in ev.causes, "causality must be irreflexive"
            for c in ev.causes:
                assert c < ev.eid, "causes must precede the event"
                assert self.events[c].causes <= ev.causes, "causes must be closed"
            assert ev.eid not in ev.direct_conflicts, "conflict must be irreflexive"
            for c in ev.direct_conflicts:
                assert ev.eid in self.events[c].direct_conflicts, "conflict symmetry"
        # hereditary closure: e # e' and e' < e'' implies e # e''
        for a in self.event_ids():
            for b in self.event_ids():
                if a == b:
                    continue
                if self.in_conflict(a, b):
                    for c in self.event_ids():
                        if self.lt(b, c):
                            assert self.in_conflict(a, c), "hereditary conflict"


# ---------------------------------------------------------------------------
# Structural comparison
# ---------------------------------------------------------------------------

def _signatures(pes: PES) -> dict[int, object]:
    """Canonical per-event signature: label key plus causes' signatures."""
    sig: dict[int, object] = {}
    for ev in pes.events:  # ids respect causality, so causes are done first
        sig[ev.eid] = (label_key(ev.label),
                       frozenset(sig[c] for c in ev.immediate_causes))
    return sig


def is_prefix(p1: PES, p2: PES) -> bool:
    """Is p1 a prefix of p2?  Events are matched by (label, causes) identity."""
    s1 = _signatures(p1)
    s2 = _signatures(p2)
    rev2 = {}
    for eid, s in s2.items():
        if s in rev2:
            return False  # event uniqueness violated; cannot match
        rev2[s] = eid
    mapping = {}
    for eid, s in s1.items():
        if s not in rev2:
            return False
        mapping[eid] = rev2[s]
    mapped = set(mapping.values())
    # causal closure of the image
    for eid2 in mapped:
        if not p2.events[eid2].causes <= mapped:
            return False
    # causality and conflict must project
    ids1 = list(p1.event_ids())
    for i, a in enumerate(ids1):
        for b in ids1[i + 1:]:
            if p1.lt(a, b) != p2.lt(mapping[a], mapping[b]):
                return False
            if p1.lt(b, a) != p2.lt(mapping[b], mapping[a]):
                return False
            if p1.in_conflict(a, b) != p2.in_conflict(mapping[a], mapping[b]):
                return False
    return True


def isomorphic(p1: PES, p2: PES) -> bool:
    return len(p1) == len(p2) and is_prefix(p1, p2) and is_prefix(p2, p1)
