"""Construction of the abstract unfolding of an analysis instance.

The unfolder enumerates configurations in size order and, for each thread,
runs a thread-local interval fixpoint (tla) from the configuration's state;
every global transformer enabled on that result becomes a candidate event
whose canonical history is computed by stripping independent maximal events
(mkevent).  Subsumption cutoffs bound the construction on cyclic programs:
an event is a cutoff when an earlier event with the same transformer
identity and a strictly smaller local configuration already reached a
data state that covers it.  Cutoff events are inserted but never extended.

With tla disabled every transformer labels events directly and the
construction coincides with the plain saturation definition of the
unfolding; with cutoffs also disabled the result is the full (possibly
infinite, hence capped) structure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from heapq import heappop, heappush
from typing import Optional

from .domains import (
    AbsElement, Env, IntervalInstance, env_join, env_leq, env_widen,
)
from .indep import IndepRelation, Partition, classify_transformers
from .lang import Assert, Program
from .pes import PES, CapExceeded


@dataclass(frozen=True)
class UnfoldOptions:
    use_tla: bool = True
    use_cutoffs: bool = True
    widening_level: int = 15
    event_cap: int = 20000
    config_cap: int = 200000
    interleaving_cap: int = 200000
    # strict depth inequality in the cutoff predicate; the non-strict
    # variant is unsound and exists only for the mutation experiments
    cutoff_strict: bool = True


@dataclass
class UnfoldStats:
    events: int = 0
    cutoffs: int = 0
    tla_calls: int = 0
    configs_explored: int = 0
    wall_time: float = 0.0
    truncated: bool = False


@dataclass
class UnfoldResult:
    pes: PES
    warnings: frozenset[str]
    stats: UnfoldStats
    unfolder: "Unfolder"
    options: UnfoldOptions


def _joined_env(d: AbsElement) -> Optional[Env]:
    env: Optional[Env] = None
    for _, e in d.entries():
        env = e if env is None else env_join(env, e)
    return env


class Unfolder:
    """Stateful driver bundling an instance, a relation and options."""

    def __init__(self, instance: IntervalInstance, relation: IndepRelation,
                 opts: UnfoldOptions = UnfoldOptions(),
                 partition: Optional[Partition] = None):
        self.instance = instance
        self.program: Program = instance.program
        self.relation = relation
        self.opts = opts
        if opts.use_tla:
            self.partition = partition or classify_transformers(self.program, relation)
        else:
            # plain mode: every transformer labels events
            n = self.program.n_threads
            self.partition = Partition(
                tuple(frozenset() for _ in range(n)),
                tuple(frozenset(e.index for e in self.program.threads[t].edges)
                      for t in range(n)),
            )
        self.stats = UnfoldStats()
        self._tla_cache: dict[tuple[int, AbsElement], tuple[AbsElement, frozenset[str]]] = {}
        self._state_cache: dict[frozenset[int], AbsElement] = {frozenset(): instance.d0}
        self._assert_sink: set[str] = set()
        self._cutoff_table: dict[int, list[tuple[AbsElement, int]]] = {}
        self.pes = PES(self._dependent)

    def _dependent(self, f, g) -> bool:
        return self.relation.dependent(f.edge.index, g.edge.index)

    # -- thread-local analysis ----------------------------------------------

    def tla(self, tid: int, d: AbsElement) -> AbsElement:
        """Sound fixpoint of thread tid's local transformers from d.

        Ascending worklist with per-location widening after the configured
        number of updates, followed by at most two descending passes to
        recover bounds lost to widening.  Descending iterates stay post-
        fixpoints, so the result still covers every local composition.
        """
        elem, flags = self._tla_full(tid, d)
        self._assert_sink.update(flags)
        return elem

    def _tla_full(self, tid: int, d: AbsElement) -> tuple[AbsElement, frozenset[str]]:
        if d.is_bottom:
            return d, frozenset()
        key = (tid, d)
        cached = self._tla_cache.get(key)
        if cached is not None:
            return cached
        self.stats.tla_calls += 1
        w = self.opts.widening_level
        local_edges = [self.instance.transformer(i).edge
                       for i in sorted(self.partition.locals_[tid])]
        by_src: dict[int, list] = {}
        for e in local_edges:
            by_src.setdefault(e.src, []).append(e)

        from .domains import _apply_stmt_env  # single statement on one env

        acc: dict = {v: env for v, env in d.entries()}
        counters: dict = {}
        pending = sorted(acc)
        in_pending = set(pending)
        while pending:
            v = pending.pop()
            in_pending.discard(v)
            env = acc[v]
            for e in by_src.get(v[tid], ()):
                env2 = _apply_stmt_env(e.stmt, env)
                if env2 is None:
                    continue
                tv = list(v)
                tv[tid] = e.dst
                tvv = tuple(tv)
                cur = acc.get(tvv)
                if cur is None:
                    acc[tvv] = env2
                elif env_leq(env2, cur):
                    continue
                else:
                    joined = env_join(cur, env2)
                    counters[tvv] = counters.get(tvv, 0) + 1
                    if counters[tvv] > w:
                        joined = env_widen(cur, joined)
                    acc[tvv] = joined
                if tvv not in in_pending:
                    pending.append(tvv)
                    in_pending.add(tvv)

        # descending passes (full function application, replacement); each
        # pass moves information one edge, so allow enough to cross loops
        base = {v: env for v, env in d.entries()}
        for _ in range(16):
            nxt = dict(base)
            for v, env in acc.items():
                for e in by_src.get(v[tid], ()):
                    env2 = _apply_stmt_env(e.stmt, env)
                    if env2 is None:
                        continue
                    tv = list(v)
                    tv[tid] = e.dst
                    tvv = tuple(tv)
                    cur = nxt.get(tvv)
                    nxt[tvv] = env2 if cur is None else env_join(cur, env2)
            if nxt == acc:
                break
            acc = nxt

        result = AbsElement(acc)
        flags = set()
        for e in local_edges:
            if isinstance(e.stmt, Assert):
                t = self.instance.transformer(e.index)
                if t.may_fail(result):
                    flags.add(e.stmt.assert_id)
        out = (result, frozenset(flags))
        self._tla_cache[key] = out
        return out

    # -- collapsed transformers and configuration states ---------------------

    def collapsed_apply(self, f, d: AbsElement) -> AbsElement:
        """f composed with the thread-local analysis of f's thread."""
        if d.is_bottom:
            return d
        if self.opts.use_tla:
            return f.apply(self.tla(f.tid, d))
        return f.apply(d)

    def state_of(self, config: frozenset[int],
                 all_interleavings: bool = False) -> AbsElement:
        """State reached by a configuration.

        Default mode folds collapsed transformers along one topological
        sort (sound under a weak, independence-respecting setup); the
        validation mode takes the meet over every interleaving instead.
        """
        config = frozenset(config)
        if all_interleavings:
            result: Optional[AbsElement] = None
            for seq in self.pes.interleavings(config, cap=self.opts.interleaving_cap):
                d = self.instance.d0
                for f in seq:
                    d = self.collapsed_apply(f, d)
                result = d if result is None else result.meet(d)
            return self.instance.d0 if result is None else result
        return self._state_single(config)

    def _state_single(self, config: frozenset[int]) -> AbsElement:
        cached = self._state_cache.get(config)
        if cached is not None:
            return cached
        # peel max ids (always maximal: ids respect causality) until a
        # memoized prefix is found, then fold forward
        chain = []
        cur = config
        while cur not in self._state_cache:
            m = max(cur)
            chain.append(m)
            cur = cur - {m}
        d = self._state_cache[cur]
        for eid in reversed(chain):
            cur = cur | {eid}
            d = self.collapsed_apply(self.pes.event(eid).label, d)
            self._state_cache[cur] = d
        return d

    # -- event construction ----------------------------------------------------

    def mkevent(self, f, config: frozenset[int]) -> frozenset[int]:
        """Canonical history: strip independent maximal events to fixpoint."""
        h = set(config)
        while True:
            maximal = self.pes.maximal_events(frozenset(h))
            removable = {
                e for e in maximal
                if self.relation.independent(f.edge.index, self.pes.event(e).label.edge.index)
            }
            if not removable:
                return frozenset(h)
            h -= removable

    def iscutoff(self, f_index: int, state: AbsElement, depth: int) -> bool:
        """Subsumption cutoff: an earlier event with the same transformer
        identity and strictly smaller local configuration already covers
        this data state.  Mirrors a hash table keyed by control location:
        the comparison is on the data environments (the transformer
        identity pins the firing thread's control).
        """
        bucket = self._cutoff_table.get(f_index)
        if not bucket:
            return False
        env = _joined_env(state)
        if env is None:
            return False
        strict = self.opts.cutoff_strict
        for st, dep in bucket:
            if (dep < depth) if strict else (dep <= depth):
                wenv = _joined_env(st)
                if wenv is not None and env_leq(env, wenv):
                    return True
        return False

    def _record_feasible(self, f_index: int, state: AbsElement, depth: int) -> None:
        self._cutoff_table.setdefault(f_index, []).append((state, depth))

    # -- the main loop -----------------------------------------------------------

    def unfold(self) -> UnfoldResult:
        if self.opts.use_cutoffs and not self.relation.weak_certified:
            raise ValueError(
                "cutoff pruning requires a weak independence relation; "
                "validate the relation first or disable cutoffs")
        t0 = time.perf_counter()
        self._assert_sink.clear()
        pes = self.pes
        heap: list[tuple[int, int, frozenset[int]]] = []
        seq = 0
        seen: set[frozenset[int]] = {frozenset()}
        processed: list[frozenset[int]] = []
        heappush(heap, (0, seq, frozenset()))
        truncated = False

        def enqueue(c: frozenset[int]) -> None:
            nonlocal seq
            if c in seen:
                return
            seen.add(c)
            seq += 1
            heappush(heap, (len(c), seq, c))

        while heap:
            _, _, config = heappop(heap)
            self.stats.configs_explored += 1
            if self.stats.configs_explored > self.opts.config_cap:
                truncated = True
                break
            if len(pes) > self.opts.event_cap:
                truncated = True
                break

            base = self._state_single(config)
            new_events: list[int] = []
            for tid in range(self.program.n_threads):
                pre = self.tla(tid, base) if self.opts.use_tla else base
                for f_index in sorted(self.partition.globals_[tid]):
                    f = self.instance.transformer(f_index)
                    post = f.apply(pre)
                    if post.is_bottom:
                        continue
                    if isinstance(f.edge.stmt, Assert) and f.may_fail(pre):
                        self._assert_sink.add(f.edge.stmt.assert_id)
                    history = self.mkevent(f, config)
                    if pes.find(f, history) is not None:
                        continue
                    eid, created = pes.add_event(f, history)
                    assert created
                    ev = pes.event(eid)
                    state = self._state_single(ev.local_config())
                    ev.cached_state = state
                    if self.opts.use_cutoffs:
                        if self.iscutoff(f_index, state, ev.depth):
                            ev.cutoff = True
                            self.stats.cutoffs += 1
                        else:
                            self._record_feasible(f_index, state, ev.depth)
                    if not ev.cutoff:
                        new_events.append(eid)

            processed.append(config)

            # extend already-processed configurations with the new events;
            # unprocessed ones will see them when they are popped
            for eid in new_events:
                ev = pes.event(eid)
                for c in processed:
                    if ev.causes <= c and pes.conflict_free_with(c, eid):
                        enqueue(c | {eid})

            # extend this configuration with every compatible existing event
            for eid in pes.extensions(config, allow_cutoffs=False):
                enqueue(config | {eid})

        self.stats.events = len(pes)
        self.stats.wall_time = time.perf_counter() - t0
        self.stats.truncated = truncated
        return UnfoldResult(
            pes=pes,
            warnings=frozenset(self._assert_sink),
            stats=self.stats,
            unfolder=self,
            options=self.opts,
        )


def unfold(instance: IntervalInstance, relation: IndepRelation,
           opts: UnfoldOptions = UnfoldOptions()) -> UnfoldResult:
    return Unfolder(instance, relation, opts).unfold()


# ---------------------------------------------------------------------------
# Validation of the tla/independence interplay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RespectViolation:
    f_index: int
    g_index: int
    element: AbsElement
    lhs: AbsElement
    rhs: AbsElement


def check_respects_independence(instance: IntervalInstance, relation: IndepRelation,
                                opts: UnfoldOptions,
                                samples: list[AbsElement]) -> list[RespectViolation]:
    """Check that collapsed global transformers still commute for every
    independent pair, over the sampled elements.  Violations mean cutoff
    pruning would be unsound and must be disabled.
    """
    unf = Unfolder(instance, relation, replace(opts, use_cutoffs=False))
    part = unf.partition
    pairs = []
    for i, j in sorted(relation.pairs):
        ei = instance.program.edge(i)
        ej = instance.program.edge(j)
        if i in part.globals_[ei.tid] and j in part.globals_[ej.tid]:
            pairs.append((instance.transformer(i), instance.transformer(j)))
    violations = []
    for f, g in pairs:
        for d in samples:
            lhs = unf.collapsed_apply(g, unf.collapsed_apply(f, d))
            rhs = unf.collapsed_apply(f, unf.collapsed_apply(g, d))
            if lhs != rhs:
                violations.append(
                    RespectViolation(f.edge.index, g.edge.index, d, lhs, rhs))
    return violations
