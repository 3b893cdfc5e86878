"""Desk-scale ground truth: exhaustive concrete enumeration, abstract reach
enumeration, and executable checks for the analyzer's correctness claims
(commutation of independent statements, unique representative
configurations, completeness of cutoff pruning, soundness against the
concrete state space).

Everything here is deliberately naive; the oracle must stay trustworthy.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .domains import AbsElement, IntervalInstance
from .indep import IndepRelation
from .lang import (
    ConcreteState, Edge, Program, assert_violated, concrete_step, enabled,
)
from .pes import PES, CapExceeded
from .unfolder import Unfolder, UnfoldOptions, UnfoldResult


# ---------------------------------------------------------------------------
# Concrete reachability
# ---------------------------------------------------------------------------

@dataclass
class ReachReport:
    states: frozenset[ConcreteState]
    violated_asserts: dict[str, tuple[str, ...]]  # assert id -> witness run
    truncated: bool

    def summary(self) -> dict[str, object]:
        return {
            "states": len(self.states),
            "violated_asserts": sorted(self.violated_asserts),
            "truncated": self.truncated,
        }


def enumerate_reach_concrete(p: Program, max_states: int = 200000) -> ReachReport:
    """BFS over the interleaving semantics with visited-set dedup.

    Exact when the cap is not hit.  Assert violations are recorded with one
    witness run (edge descriptions from the initial state) per assert id.
    """
    s0 = p.initial_state()
    visited: set[ConcreteState] = {s0}
    parent: dict[ConcreteState, tuple[ConcreteState, Edge]] = {}
    queue: deque[ConcreteState] = deque((s0,))
    violated: dict[str, tuple[str, ...]] = {}
    truncated = False

    def run_to(s: ConcreteState, last: Optional[Edge]) -> tuple[str, ...]:
        steps: list[str] = [] if last is None else [last.describe()]
        cur = s
        while cur in parent:
            prev, e = parent[cur]
            steps.append(e.describe())
            cur = prev
        return tuple(reversed(steps))

    while queue:
        s = queue.popleft()
        for e in enabled(p, s):
            if assert_violated(s, e):
                aid = e.stmt.assert_id
                if aid not in violated:
                    violated[aid] = run_to(s, e)
            for s2 in concrete_step(p, s, e):
                if s2 in visited:
                    continue
                if len(visited) >= max_states:
                    truncated = True
                    queue.clear()
                    break
                visited.add(s2)
                parent[s2] = (s, e)
                queue.append(s2)
            else:
                continue
            break
    return ReachReport(frozenset(visited), violated, truncated)


# ---------------------------------------------------------------------------
# Abstract reachability
# ---------------------------------------------------------------------------

def enumerate_reach_abstract(instance: IntervalInstance, relation: IndepRelation,
                             opts: UnfoldOptions, depth: int,
                             max_elements: int = 100000) -> set[AbsElement]:
    """Non-bottom elements reachable by at most `depth` applications of the
    instance's transformers from d0.

    With tla enabled the transformers are the collapsed global ones (the
    same step relation the unfolder explores); with tla disabled they are
    the plain per-edge transformers.
    """
    unf = Unfolder(instance, relation, replace(opts, use_cutoffs=False))
    if opts.use_tla:
        step_fns = [instance.transformer(i)
                    for t in range(instance.program.n_threads)
                    for i in sorted(unf.partition.globals_[t])]
    else:
        step_fns = [instance.transformer(e.index) for e in instance.program.edges]
    seen: set[AbsElement] = {instance.d0}
    frontier = [instance.d0]
    for _ in range(depth):
        nxt = []
        for d in frontier:
            for f in step_fns:
                d2 = unf.collapsed_apply(f, d)
                if d2.is_bottom or d2 in seen:
                    continue
                if len(seen) >= max_elements:
                    raise CapExceeded("abstract reach enumeration cap hit")
                seen.add(d2)
                nxt.append(d2)
        frontier = nxt
        if not frontier:
            break
    return seen


def enumerate_runs_abstract(instance: IntervalInstance, relation: IndepRelation,
                            opts: UnfoldOptions, depth: int,
                            max_runs: int = 200000) -> list[tuple[int, ...]]:
    """All non-bottom transformer sequences (by edge index) up to `depth`."""
    unf = Unfolder(instance, relation, replace(opts, use_cutoffs=False))
    if opts.use_tla:
        step_fns = [instance.transformer(i)
                    for t in range(instance.program.n_threads)
                    for i in sorted(unf.partition.globals_[t])]
    else:
        step_fns = [instance.transformer(e.index) for e in instance.program.edges]
    runs: list[tuple[int, ...]] = []
    frontier: list[tuple[tuple[int, ...], AbsElement]] = [((), instance.d0)]
    for _ in range(depth):
        nxt = []
        for seq, d in frontier:
            for f in step_fns:
                d2 = unf.collapsed_apply(f, d)
                if d2.is_bottom:
                    continue
                seq2 = seq + (f.edge.index,)
                runs.append(seq2)
                if len(runs) > max_runs:
                    raise CapExceeded("abstract run enumeration cap hit")
                nxt.append((seq2, d2))
        frontier = nxt
        if not frontier:
            break
    return runs


# ---------------------------------------------------------------------------
# Completeness and soundness checks
# ---------------------------------------------------------------------------

@dataclass
class CoverageReport:
    checked: int
    uncovered: list

    @property
    def ok(self) -> bool:
        return not self.uncovered


def _config_states(result: UnfoldResult, cap: int = 100000) -> list[tuple[frozenset[int], AbsElement]]:
    unf = result.unfolder
    out = []
    for c in result.pes.all_configurations(cap):
        out.append((c, unf.state_of(c)))
    return out


def check_d_complete(result: UnfoldResult, elements: Iterable[AbsElement],
                     cap: int = 100000) -> CoverageReport:
    """Every reachable element must be covered by some configuration state.

    Configurations may end in cutoff events (those events exist in the
    produced structure; only their successors were pruned).
    """
    configs = _config_states(result, cap)
    uncovered = []
    checked = 0
    for d in elements:
        checked += 1
        if not any(d.leq(st) for _, st in configs):
            uncovered.append(d)
    return CoverageReport(checked, uncovered)


def local_closure(result: UnfoldResult, d: AbsElement) -> AbsElement:
    """Close a configuration state under trailing local moves of every
    thread (identity when the unfolding was built without tla)."""
    if not result.options.use_tla:
        return d
    unf = result.unfolder
    for tid in range(unf.program.n_threads):
        d = unf.tla(tid, d)
    return d


@dataclass
class SoundCoverReport:
    states_checked: int
    uncovered_states: list[ConcreteState]
    missed_asserts: list[str]

    @property
    def ok(self) -> bool:
        return not self.uncovered_states and not self.missed_asserts


def check_sound_cover(result: UnfoldResult, rr: ReachReport,
                      cap: int = 100000) -> SoundCoverReport:
    """Every reachable concrete state lies in some configuration's state
    (closed under trailing thread-local moves), and every concretely
    violated assert is warned about."""
    if rr.truncated:
        raise ValueError("soundness check requires an exact reach report")
    closures = [local_closure(result, st) for _, st in _config_states(result, cap)]
    uncovered = []
    for s in sorted(rr.states, key=lambda s: (s.locs, s.values)):
        if not any(c.contains(s) for c in closures):
            uncovered.append(s)
    missed = [aid for aid in sorted(rr.violated_asserts) if aid not in result.warnings]
    return SoundCoverReport(len(rr.states), uncovered, missed)


# ---------------------------------------------------------------------------
# Representative configurations (adequacy)
# ---------------------------------------------------------------------------

def representative_config(result: UnfoldResult, sigma: Iterable[int]) -> frozenset[int]:
    """The unique configuration whose interleavings contain sigma.

    Follows the push-back construction: the history of each successive
    transformer is the current configuration with independent maximal
    events stripped.  Raises LookupError when an event is missing, which
    indicates the unfolding is not adequate for the instance.
    """
    unf = result.unfolder
    pes = result.pes
    config: frozenset[int] = frozenset()
    for edge_index in sigma:
        f = unf.instance.transformer(edge_index)
        history = unf.mkevent(f, config)
        eid = pes.find(f, history)
        if eid is None:
            raise LookupError(
                f"no event for transformer {edge_index} after history {sorted(history)}")
        config = config | {eid}
    return config


def configs_containing_run(result: UnfoldResult, sigma: tuple[int, ...],
                           cap: int = 100000) -> list[frozenset[int]]:
    """Exhaustive scan: every configuration with sigma among its
    interleavings.  Used to verify uniqueness independently."""
    pes = result.pes
    out = []
    for c in pes.all_configurations(cap):
        if len(c) != len(sigma):
            continue
        seqs = {tuple(f.edge.index for f in seq)
                for seq in pes.interleavings(c, cap=result.options.interleaving_cap)}
        if sigma in seqs:
            out.append(c)
    return out


# ---------------------------------------------------------------------------
# Statement-level commutation (independence premise)
# ---------------------------------------------------------------------------

@dataclass
class CommutationReport:
    pairs_checked: int
    enabledness_violations: list[tuple[int, int, ConcreteState]]
    state_violations: list[tuple[int, int, ConcreteState]]

    @property
    def ok(self) -> bool:
        return not self.enabledness_violations and not self.state_violations


def check_statement_commutation(p: Program, r: IndepRelation,
                                rr: ReachReport) -> CommutationReport:
    """Verify both commutation clauses for every related pair at every
    reachable state: firing one side must not change the other's
    enabledness, and when both are enabled, the two orders must reach the
    same states."""
    from .lang import is_enabled

    if rr.truncated:
        raise ValueError("commutation check requires an exact reach report")
    edges = {e.index: e for e in p.edges}
    enab_viol = []
    state_viol = []
    pairs = sorted(r.pairs)
    for s in sorted(rr.states, key=lambda s: (s.locs, s.values)):
        en = {e.index for e in enabled(p, s)}
        for (i, j) in pairs:
            for a_idx, b_idx in ((i, j), (j, i)):
                if a_idx not in en:
                    continue
                a, b = edges[a_idx], edges[b_idx]
                before = b_idx in en
                for s2 in concrete_step(p, s, a):
                    if before != is_enabled(p, s2, b):
                        enab_viol.append((a_idx, b_idx, s))
                        break
            if i in en and j in en:
                a, b = edges[i], edges[j]
                ab = {s3 for s2 in concrete_step(p, s, a) if is_enabled(p, s2, b)
                      for s3 in concrete_step(p, s2, b)}
                ba = {s3 for s2 in concrete_step(p, s, b) if is_enabled(p, s2, a)
                      for s3 in concrete_step(p, s2, a)}
                if ab != ba:
                    state_viol.append((i, j, s))
    return CommutationReport(len(pairs), enab_viol, state_viol)


# ---------------------------------------------------------------------------
# Reference unfolding (direct saturation of the definition)
# ---------------------------------------------------------------------------

def reference_unfold(instance: IntervalInstance, relation: IndepRelation,
                     event_cap: int = 2000, config_cap: int = 100000) -> PES:
    """Plain unfolding by direct saturation: repeatedly scan every
    configuration and every transformer enabled at its state (meet over
    all interleavings), adding the event when all maximal events of the
    configuration are dependent with the transformer.

    Exponential and trustworthy; the fast unfolder is checked against this
    on desk-scale instances (tla off, cutoffs off).
    """
    def dependent(f, g):
        return relation.dependent(f.edge.index, g.edge.index)

    pes = PES(dependent)
    transformers = [instance.transformer(e.index) for e in instance.program.edges]

    def config_state(c: frozenset[int]) -> AbsElement:
        result: Optional[AbsElement] = None
        for seq in pes.interleavings(c, cap=config_cap):
            d = instance.d0
            for f in seq:
                d = f.apply(d)
            result = d if result is None else result.meet(d)
        return instance.d0 if result is None else result

    changed = True
    while changed:
        changed = False
        for c in pes.all_configurations(config_cap):
            st = config_state(c)
            if st.is_bottom:
                continue
            maximal = pes.maximal_events(c)
            for f in transformers:
                if any(relation.independent(f.edge.index,
                                            pes.event(m).label.edge.index)
                       for m in maximal):
                    continue
                if pes.find(f, c) is not None:
                    continue
                if f.apply(st).is_bottom:
                    continue
                if len(pes) >= event_cap:
                    raise CapExceeded("reference unfolding event cap hit")
                pes.add_event(f, c)
                changed = True
    return pes
