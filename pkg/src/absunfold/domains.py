"""Lattice and transformer infrastructure for the analyzer.

Two analysis instances share the transformer-per-edge interface:

* the interval instance, whose elements map location vectors to
  per-variable interval environments (a disjunction over control states,
  data merged per control point), and
* the collecting instance over finite sets of concrete states, used by the
  oracle as ground truth.

Both use mathematical (unbounded) integers; interval bounds use IEEE
infinities as sentinels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

from .lang import (
    Assert, Assign, Assume, BinOp, BoolLit, Cmp, Cond, Const, ConcreteState,
    Edge, Expr, GuardedAssign, Havoc, And, Neg, Not, Or, Program, Skip, Var,
    concrete_step, is_enabled, negate_cond,
)

INF = float("inf")
Bound = Union[int, float]


class Interval(NamedTuple):
    """Non-empty integer interval; lo may be -inf and hi may be +inf."""

    lo: Bound
    hi: Bound

    def contains(self, v: int) -> bool:
        return self.lo <= v <= self.hi

    def leq(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def join(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def meet(self, other: "Interval") -> Optional["Interval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def widen(self, other: "Interval") -> "Interval":
        lo = self.lo if self.lo <= other.lo else -INF
        hi = self.hi if self.hi >= other.hi else INF
        return Interval(lo, hi)

    def add(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def sub(self, other: "Interval") -> "Interval":
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def mul(self, other: "Interval") -> "Interval":
        corners = [
            _mul(self.lo, other.lo), _mul(self.lo, other.hi),
            _mul(self.hi, other.lo), _mul(self.hi, other.hi),
        ]
        return Interval(min(corners), max(corners))

    def neg(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def __str__(self) -> str:
        lo = "-inf" if self.lo == -INF else str(self.lo)
        hi = "+inf" if self.hi == INF else str(self.hi)
        return f"[{lo},{hi}]"


def _mul(a: Bound, b: Bound) -> Bound:
    # interval-arithmetic convention: 0 * inf = 0 (the unbounded factor
    # stands for arbitrarily large finite values)
    if a == 0 or b == 0:
        return 0
    return a * b


TOP = Interval(-INF, INF)

Env = tuple[Interval, ...]
LocVec = tuple[int, ...]


def env_leq(a: Env, b: Env) -> bool:
    return all(x.leq(y) for x, y in zip(a, b))


def env_join(a: Env, b: Env) -> Env:
    return tuple(x.join(y) for x, y in zip(a, b))


def env_meet(a: Env, b: Env) -> Optional[Env]:
    out = []
    for x, y in zip(a, b):
        m = x.meet(y)
        if m is None:
            return None
        out.append(m)
    return tuple(out)


def env_widen(a: Env, b: Env) -> Env:
    return tuple(x.widen(y) for x, y in zip(a, b))


class AbsElement:
    """Bottom, or a finite map from location vectors to interval envs.

    Immutable and hashable; the empty map is the canonical bottom.
    """

    __slots__ = ("_entries", "_hash")

    def __init__(self, entries: dict[LocVec, Env]):
        self._entries = dict(entries)
        self._hash: Optional[int] = None

    @staticmethod
    def bottom() -> "AbsElement":
        return AbsElement({})

    @staticmethod
    def make(pairs: dict[LocVec, Optional[Env]]) -> "AbsElement":
        return AbsElement({v: e for v, e in pairs.items() if e is not None})

    @property
    def is_bottom(self) -> bool:
        return not self._entries

    def entries(self) -> list[tuple[LocVec, Env]]:
        return sorted(self._entries.items())

    def get(self, locvec: LocVec) -> Optional[Env]:
        return self._entries.get(locvec)

    def loc_vectors(self) -> list[LocVec]:
        return sorted(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, AbsElement) and self._entries == other._entries

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._entries.items()))
        return self._hash

    def __repr__(self) -> str:
        if self.is_bottom:
            return "AbsElement(bottom)"
        parts = []
        for v, env in self.entries():
            envs = " ".join(str(i) for i in env)
            parts.append(f"{v}: {envs}")
        return "AbsElement({" + "; ".join(parts) + "})"

    def _check_shape(self, other: "AbsElement") -> None:
        if self._entries and other._entries:
            a = next(iter(self._entries))
            b = next(iter(other._entries))
            if len(a) != len(b):
                raise ValueError("abstract elements over different programs")

    def leq(self, other: "AbsElement") -> bool:
        self._check_shape(other)
        for v, env in self._entries.items():
            o = other._entries.get(v)
            if o is None or not env_leq(env, o):
                return False
        return True

    def join(self, other: "AbsElement") -> "AbsElement":
        self._check_shape(other)
        out = dict(self._entries)
        for v, env in other._entries.items():
            cur = out.get(v)
            out[v] = env if cur is None else env_join(cur, env)
        return AbsElement(out)

    def meet(self, other: "AbsElement") -> "AbsElement":
        self._check_shape(other)
        out: dict[LocVec, Env] = {}
        for v, env in self._entries.items():
            o = other._entries.get(v)
            if o is None:
                continue
            m = env_meet(env, o)
            if m is not None:
                out[v] = m
        return AbsElement(out)

    def widen(self, other: "AbsElement") -> "AbsElement":
        out = dict(self._entries)
        for v, env in other._entries.items():
            cur = out.get(v)
            out[v] = env if cur is None else env_widen(cur, env)
        return AbsElement(out)

    def contains(self, s: ConcreteState) -> bool:
        env = self._entries.get(s.locs)
        if env is None:
            return False
        return all(iv.contains(val) for iv, val in zip(env, s.values))


def contains(a: AbsElement, s: ConcreteState) -> bool:
    """Membership view of concretization: is s described by a?"""
    return a.contains(s)


# ---------------------------------------------------------------------------
# Interval evaluation and condition refinement
# ---------------------------------------------------------------------------

def eval_expr_interval(e: Expr, env: Env) -> Interval:
    if isinstance(e, Const):
        return Interval(e.value, e.value)
    if isinstance(e, Var):
        return env[e.index]
    if isinstance(e, Neg):
        return eval_expr_interval(e.operand, env).neg()
    a = eval_expr_interval(e.left, env)
    b = eval_expr_interval(e.right, env)
    if e.op == "+":
        return a.add(b)
    if e.op == "-":
        return a.sub(b)
    return a.mul(b)


def _back_propagate(e: Expr, target: Interval, env: Env) -> Optional[Env]:
    """Refine env so the value of e falls in target; sound, best-effort.

    Inverts +, - and negation; anything else (multiplication) is left
    unrefined, which is always a sound over-approximation.
    """
    if isinstance(e, Const):
        return env if target.contains(e.value) else None
    if isinstance(e, Var):
        m = env[e.index].meet(target)
        if m is None:
            return None
        out = list(env)
        out[e.index] = m
        return tuple(out)
    if isinstance(e, Neg):
        return _back_propagate(e.operand, target.neg(), env)
    if isinstance(e, BinOp) and e.op in ("+", "-"):
        a = eval_expr_interval(e.left, env)
        b = eval_expr_interval(e.right, env)
        if e.op == "+":
            lt, rt = target.sub(b), target.sub(a)
        else:
            lt, rt = target.add(b), a.sub(target)
        env2 = _back_propagate(e.left, lt, env)
        if env2 is None:
            return None
        return _back_propagate(e.right, rt, env2)
    # multiplication: check feasibility only
    val = eval_expr_interval(e, env)
    return env if val.meet(target) is not None else None


def _refine_cmp(env: Env, c: Cmp) -> Optional[Env]:
    li = eval_expr_interval(c.left, env)
    ri = eval_expr_interval(c.right, env)
    if c.op == "==":
        m = li.meet(ri)
        if m is None:
            return None
        env2 = _back_propagate(c.left, m, env)
        if env2 is None:
            return None
        return _back_propagate(c.right, m, env2)
    if c.op == "!=":
        lt, rt = li, ri
        if ri.is_singleton():
            lt = _trim(li, int(ri.lo))
            if lt is None:
                return None
        if li.is_singleton():
            rt = _trim(ri, int(li.lo))
            if rt is None:
                return None
        env2 = _back_propagate(c.left, lt, env)
        if env2 is None:
            return None
        return _back_propagate(c.right, rt, env2)
    if c.op == "<":
        lt = li.meet(Interval(-INF, ri.hi - 1))
        rt = ri.meet(Interval(li.lo + 1, INF))
    elif c.op == "<=":
        lt = li.meet(Interval(-INF, ri.hi))
        rt = ri.meet(Interval(li.lo, INF))
    elif c.op == ">":
        lt = li.meet(Interval(ri.lo + 1, INF))
        rt = ri.meet(Interval(-INF, li.hi - 1))
    else:  # '>='
        lt = li.meet(Interval(ri.lo, INF))
        rt = ri.meet(Interval(-INF, li.hi))
    if lt is None or rt is None:
        return None
    env2 = _back_propagate(c.left, lt, env)
    if env2 is None:
        return None
    return _back_propagate(c.right, rt, env2)


def _trim(iv: Interval, c: int) -> Optional[Interval]:
    if iv.is_singleton() and iv.lo == c:
        return None
    if iv.lo == c:
        return Interval(iv.lo + 1, iv.hi)
    if iv.hi == c:
        return Interval(iv.lo, iv.hi - 1)
    return iv


def refine_env(env: Env, cond: Cond) -> Optional[Env]:
    """Non-relational constraint filtering: meet env with cond.

    Conjunctions are iterated to a local fixpoint, disjunctions joined,
    negation is pushed to the comparisons first.  Returns None for bottom.
    """
    if isinstance(cond, BoolLit):
        return env if cond.value else None
    if isinstance(cond, Not):
        return refine_env(env, negate_cond(cond.operand))
    if isinstance(cond, Cmp):
        return _refine_cmp(env, cond)
    if isinstance(cond, And):
        cur: Optional[Env] = env
        for _ in range(8):
            if cur is None:
                return None
            nxt = refine_env(cur, cond.left)
            if nxt is None:
                return None
            nxt = refine_env(nxt, cond.right)
            if nxt == cur:
                return cur
            cur = nxt
        return cur
    # Or
    a = refine_env(env, cond.left)
    b = refine_env(env, cond.right)
    if a is None:
        return b
    if b is None:
        return a
    return env_join(a, b)


def cond_may_hold(env: Env, cond: Cond) -> bool:
    return refine_env(env, cond) is not None


# ---------------------------------------------------------------------------
# Transformers
# ---------------------------------------------------------------------------

def _apply_stmt_env(stmt, env: Env) -> Optional[Env]:
    if isinstance(stmt, Assign):
        out = list(env)
        out[stmt.var] = eval_expr_interval(stmt.expr, env)
        return tuple(out)
    if isinstance(stmt, Havoc):
        out = list(env)
        out[stmt.var] = Interval(stmt.lo, stmt.hi)
        return tuple(out)
    if isinstance(stmt, Assume):
        return refine_env(env, stmt.cond)
    if isinstance(stmt, GuardedAssign):
        refined = refine_env(env, stmt.cond)
        if refined is None:
            return None
        out = list(refined)
        out[stmt.var] = eval_expr_interval(stmt.expr, refined)
        return tuple(out)
    if isinstance(stmt, (Assert, Skip)):
        # asserts are non-blocking: the data state passes through unchanged
        # and a possible violation is reported through may_fail
        return env
    raise ValueError(f"cannot build abstract transformer for {stmt!r}")


class Transformer:
    """Monotone, bottom-strict function on AbsElement for one CFG edge."""

    __slots__ = ("edge",)

    def __init__(self, edge: Edge):
        self.edge = edge

    @property
    def tid(self) -> int:
        return self.edge.tid

    def apply(self, d: AbsElement) -> AbsElement:
        e = self.edge
        out: dict[LocVec, Env] = {}
        for locvec, env in d._entries.items():
            if locvec[e.tid] != e.src:
                continue
            env2 = _apply_stmt_env(e.stmt, env)
            if env2 is None:
                continue
            target = list(locvec)
            target[e.tid] = e.dst
            tv = tuple(target)
            cur = out.get(tv)
            out[tv] = env2 if cur is None else env_join(cur, env2)
        return AbsElement(out)

    def may_fail(self, d: AbsElement) -> bool:
        """For assert edges: can the condition be violated at the source?"""
        e = self.edge
        if not isinstance(e.stmt, Assert):
            return False
        neg = negate_cond(e.stmt.cond)
        for locvec, env in d._entries.items():
            if locvec[e.tid] != e.src:
                continue
            if refine_env(env, neg) is not None:
                return True
        return False

    def __repr__(self) -> str:
        return f"Transformer({self.edge.index}: {self.edge.describe()})"


def abstract_transformer(p: Program, e: Edge) -> Transformer:
    return Transformer(e)


ConcreteElement = frozenset  # of ConcreteState


class CollectingTransformer:
    """Exact image of one statement on finite sets of concrete states."""

    __slots__ = ("program", "edge")

    def __init__(self, program: Program, edge: Edge):
        self.program = program
        self.edge = edge

    @property
    def tid(self) -> int:
        return self.edge.tid

    def apply(self, d: ConcreteElement) -> ConcreteElement:
        out = set()
        for s in d:
            if is_enabled(self.program, s, self.edge):
                out.update(concrete_step(self.program, s, self.edge))
        return frozenset(out)

    def __repr__(self) -> str:
        return f"CollectingTransformer({self.edge.index}: {self.edge.describe()})"


def collecting_transformer(p: Program, e: Edge) -> CollectingTransformer:
    return CollectingTransformer(p, e)


# ---------------------------------------------------------------------------
# Analysis instances
# ---------------------------------------------------------------------------

@dataclass
class IntervalInstance:
    """Interval analysis instance: d0 plus one transformer per edge."""

    program: Program
    d0: AbsElement
    transformers: dict[int, Transformer]

    @staticmethod
    def of(program: Program) -> "IntervalInstance":
        s0 = program.initial_state()
        env = tuple(Interval(v, v) for v in s0.values)
        d0 = AbsElement({s0.locs: env})
        return IntervalInstance(
            program, d0, {e.index: Transformer(e) for e in program.edges})

    def transformer(self, edge_index: int) -> Transformer:
        return self.transformers[edge_index]


@dataclass
class CollectingInstance:
    """Collecting-semantics instance over sets of concrete states."""

    program: Program
    d0: ConcreteElement
    transformers: dict[int, CollectingTransformer]

    @staticmethod
    def of(program: Program,
           d0: Optional[ConcreteElement] = None) -> "CollectingInstance":
        if d0 is None:
            d0 = frozenset((program.initial_state(),))
        return CollectingInstance(
            program, d0,
            {e.index: CollectingTransformer(program, e) for e in program.edges})

    def transformer(self, edge_index: int) -> CollectingTransformer:
        return self.transformers[edge_index]


class FnTransformer:
    """Ad-hoc transformer built from a plain function, for lattice-level
    experiments where the function is not the semantics of any edge."""

    __slots__ = ("name", "fn", "tid")

    def __init__(self, name: str, fn: Callable[[AbsElement], AbsElement], tid: int = 0):
        self.name = name
        self.fn = fn
        self.tid = tid

    def apply(self, d: AbsElement) -> AbsElement:
        if d.is_bottom:
            return AbsElement.bottom()
        return self.fn(d)

    def __repr__(self) -> str:
        return f"FnTransformer({self.name})"


def pointwise(name: str, env_fn: Callable[[Env], Optional[Env]], tid: int = 0) -> FnTransformer:
    """Lift an environment function to every entry of an element."""

    def apply(d: AbsElement) -> AbsElement:
        out: dict[LocVec, Env] = {}
        for v, env in d._entries.items():
            env2 = env_fn(env)
            if env2 is not None:
                out[v] = env2
        return AbsElement(out)

    return FnTransformer(name, apply, tid)
