"""Independence between transformers, from syntactic read/write sets.

Two edges of different threads are independent when neither writes a
variable the other reads or writes.  In heap mode every shared variable
counts; in sync mode only mutex ghost variables do (data accesses are then
assumed race-free).  Same-thread edges are never independent, which keeps
program order as causality in the unfolding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .lang import Edge, Program, stmt_reads, stmt_writes


class ActionSet(NamedTuple):
    reads: frozenset[int]
    writes: frozenset[int]


def actions_of(p: Program, e: Edge) -> ActionSet:
    """Shared-variable (global and ghost) accesses of one edge."""
    shared = {i for i, v in enumerate(p.variables) if v.is_shared}
    return ActionSet(
        reads=stmt_reads(e.stmt) & shared,
        writes=stmt_writes(e.stmt) & shared,
    )


@dataclass(frozen=True)
class IndepRelation:
    """Symmetric irreflexive relation over edge indices.

    weak_certified records whether commutation of the related interval
    transformers is guaranteed.  Heap mode earns it structurally: related
    edges touch disjoint variables and distinct location coordinates, so
    their transformers commute exactly.  Sync mode does not (independent
    edges may share data variables), and needs empirical validation before
    cutoffs may be used.
    """

    pairs: frozenset[tuple[int, int]]
    mode: str  # 'sync' | 'heap'
    weak_certified: bool

    def independent(self, i: int, j: int) -> bool:
        if i == j:
            return False
        key = (i, j) if i < j else (j, i)
        return key in self.pairs

    def dependent(self, i: int, j: int) -> bool:
        return not self.independent(i, j)

    def __len__(self) -> int:
        return len(self.pairs)


def _conflicts(a: ActionSet, b: ActionSet) -> bool:
    return bool(a.writes & (b.reads | b.writes)) or bool(b.writes & (a.reads | a.writes))


def build_independence(p: Program, mode: str = "heap") -> IndepRelation:
    """Pairs of cross-thread edges with no read/write conflict."""
    if mode not in ("sync", "heap"):
        raise ValueError(f"unknown independence mode {mode!r}")
    ghosts = frozenset(i for i, v in enumerate(p.variables) if v.kind == "ghost")
    actions = {}
    for e in p.edges:
        acts = actions_of(p, e)
        if mode == "sync":
            acts = ActionSet(acts.reads & ghosts, acts.writes & ghosts)
        actions[e.index] = acts
    edges = p.edges
    pairs = set()
    for i, a in enumerate(edges):
        for b in edges[i + 1:]:
            if a.tid == b.tid:
                continue
            if not _conflicts(actions[a.index], actions[b.index]):
                pairs.add((min(a.index, b.index), max(a.index, b.index)))
    return IndepRelation(frozenset(pairs), mode, weak_certified=(mode == "heap"))


@dataclass(frozen=True)
class Partition:
    """Per-thread split into local and global edge indices."""

    locals_: tuple[frozenset[int], ...]
    globals_: tuple[frozenset[int], ...]

    def is_local(self, e: Edge) -> bool:
        return e.index in self.locals_[e.tid]

    def all_globals(self) -> frozenset[int]:
        return frozenset(i for g in self.globals_ for i in g)


def classify_transformers(p: Program, r: IndepRelation) -> Partition:
    """An edge is local iff independent of every other thread's edges."""
    locals_: list[set[int]] = [set() for _ in p.threads]
    globals_: list[set[int]] = [set() for _ in p.threads]
    edges = p.edges
    for e in edges:
        local = all(
            r.independent(e.index, f.index)
            for f in edges if f.tid != e.tid
        )
        (locals_ if local else globals_)[e.tid].add(e.index)
    return Partition(
        tuple(frozenset(s) for s in locals_),
        tuple(frozenset(s) for s in globals_),
    )


@dataclass(frozen=True)
class CommutationViolation:
    f: object
    g: object
    element: object
    lhs: object  # f(g(d))
    rhs: object  # g(f(d))


def check_weak_independence(pairs: Iterable[tuple[object, object]],
                            elements: Iterable[object]) -> list[CommutationViolation]:
    """Check f(g(d)) == g(f(d)) for every pair and element.

    Works for any transformer kind with an apply method (interval or
    collecting).  An empty result certifies weak independence on the given
    sample only.
    """
    violations = []
    elems = list(elements)
    for f, g in pairs:
        for d in elems:
            lhs = f.apply(g.apply(d))
            rhs = g.apply(f.apply(d))
            if lhs != rhs:
                violations.append(CommutationViolation(f, g, d, lhs, rhs))
    return violations


def lifted_pairs(instance, r: IndepRelation) -> list[tuple[object, object]]:
    """Pointwise lifting of an edge relation to an instance's transformers."""
    return [
        (instance.transformer(i), instance.transformer(j))
        for (i, j) in sorted(r.pairs)
    ]
