"""Concurrent mini-language: syntax, parser, per-thread CFGs, concrete semantics.

A program is a set of integer globals, a set of mutexes, and a fixed list of
threads.  Thread bodies are written in a small structured language (assign,
havoc, assume, assert, lock/unlock, skip, if/else, while) which is compiled
into a control-flow graph per thread; every CFG edge carries one atomic
statement.  The concrete semantics is the usual interleaving transition
system over (location vector, variable valuation) states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


class ParseError(Exception):
    """Syntax or semantic error in a program text, with source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Expressions and conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str
    index: int  # resolved slot in the program's variable table


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*'
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


Expr = Union[Const, Var, BinOp, Neg]


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str  # '==', '!=', '<', '<=', '>', '>='
    left: Expr
    right: Expr


@dataclass(frozen=True)
class And:
    left: "Cond"
    right: "Cond"


@dataclass(frozen=True)
class Or:
    left: "Cond"
    right: "Cond"


@dataclass(frozen=True)
class Not:
    operand: "Cond"


Cond = Union[BoolLit, Cmp, And, Or, Not]


def expr_vars(e: Expr) -> frozenset[int]:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e.index,))
    if isinstance(e, Neg):
        return expr_vars(e.operand)
    return expr_vars(e.left) | expr_vars(e.right)


def cond_vars(c: Cond) -> frozenset[int]:
    if isinstance(c, BoolLit):
        return frozenset()
    if isinstance(c, Cmp):
        return expr_vars(c.left) | expr_vars(c.right)
    if isinstance(c, Not):
        return cond_vars(c.operand)
    return cond_vars(c.left) | cond_vars(c.right)


def eval_expr(e: Expr, values: tuple[int, ...]) -> int:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return values[e.index]
    if isinstance(e, Neg):
        return -eval_expr(e.operand, values)
    a = eval_expr(e.left, values)
    b = eval_expr(e.right, values)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    return a * b


_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_cond(c: Cond, values: tuple[int, ...]) -> bool:
    if isinstance(c, BoolLit):
        return c.value
    if isinstance(c, Cmp):
        return _CMP[c.op](eval_expr(c.left, values), eval_expr(c.right, values))
    if isinstance(c, Not):
        return not eval_cond(c.operand, values)
    if isinstance(c, And):
        return eval_cond(c.left, values) and eval_cond(c.right, values)
    return eval_cond(c.left, values) or eval_cond(c.right, values)


_NEG_CMP = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def negate_cond(c: Cond) -> Cond:
    """Negation pushed to the comparisons (negation normal form)."""
    if isinstance(c, BoolLit):
        return BoolLit(not c.value)
    if isinstance(c, Cmp):
        return Cmp(_NEG_CMP[c.op], c.left, c.right)
    if isinstance(c, Not):
        return c.operand
    if isinstance(c, And):
        return Or(negate_cond(c.left), negate_cond(c.right))
    return And(negate_cond(c.left), negate_cond(c.right))


# ---------------------------------------------------------------------------
# Statements (CFG edge payloads)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    var: int
    var_name: str
    expr: Expr


@dataclass(frozen=True)
class Havoc:
    var: int
    var_name: str
    lo: int
    hi: int


@dataclass(frozen=True)
class Assume:
    cond: Cond


@dataclass(frozen=True)
class Assert:
    cond: Cond
    assert_id: str
    line: int
    col: int


@dataclass(frozen=True)
class Lock:
    mutex: int  # variable-table index of the ghost variable
    mutex_name: str


@dataclass(frozen=True)
class Unlock:
    mutex: int
    mutex_name: str


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class GuardedAssign:
    """Atomic assume-then-assign; the desugared form of lock and unlock."""

    cond: Cond
    var: int
    var_name: str
    expr: Expr


Stmt = Union[Assign, Havoc, Assume, Assert, Lock, Unlock, Skip, GuardedAssign]


def stmt_reads(s: Stmt) -> frozenset[int]:
    if isinstance(s, Assign):
        return expr_vars(s.expr)
    if isinstance(s, (Assume, Assert)):
        return cond_vars(s.cond)
    if isinstance(s, (Lock, Unlock)):
        return frozenset((s.mutex,))
    if isinstance(s, GuardedAssign):
        return cond_vars(s.cond) | expr_vars(s.expr)
    return frozenset()


def stmt_writes(s: Stmt) -> frozenset[int]:
    if isinstance(s, (Assign, Havoc)):
        return frozenset((s.var,))
    if isinstance(s, (Lock, Unlock)):
        return frozenset((s.mutex,))
    if isinstance(s, GuardedAssign):
        return frozenset((s.var,))
    return frozenset()


# ---------------------------------------------------------------------------
# Program structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarInfo:
    name: str
    kind: str  # 'global' | 'ghost' | 'local'
    tid: Optional[int]  # owning thread for locals, None otherwise
    init: int

    @property
    def is_shared(self) -> bool:
        return self.kind in ("global", "ghost")


@dataclass(frozen=True)
class Edge:
    index: int  # program-wide edge id, also the transformer identity
    tid: int
    src: int
    dst: int
    stmt: Stmt

    def describe(self) -> str:
        return format_stmt(self.stmt)


@dataclass(frozen=True)
class ThreadCfg:
    tid: int
    n_locs: int
    entry: int
    edges: tuple[Edge, ...]


@dataclass(frozen=True)
class Program:
    variables: tuple[VarInfo, ...]
    threads: tuple[ThreadCfg, ...]
    mutexes: tuple[str, ...]
    syntax: "ProgramSyntax"

    @property
    def n_threads(self) -> int:
        return len(self.threads)

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(e for t in self.threads for e in t.edges)

    def edge(self, index: int) -> Edge:
        for t in self.threads:
            for e in t.edges:
                if e.index == index:
                    return e
        raise KeyError(index)

    def initial_state(self) -> "ConcreteState":
        return ConcreteState(
            locs=tuple(t.entry for t in self.threads),
            values=tuple(v.init for v in self.variables),
        )

    def asserts(self) -> tuple[Assert, ...]:
        out = []
        for e in self.edges:
            if isinstance(e.stmt, Assert):
                out.append(e.stmt)
        return tuple(out)

    def out_edges(self, tid: int, loc: int) -> tuple[Edge, ...]:
        return tuple(e for e in self.threads[tid].edges if e.src == loc)

    def is_terminal(self, tid: int, loc: int) -> bool:
        return not any(e.src == loc for e in self.threads[tid].edges)

    def var_index(self, name: str, tid: Optional[int] = None) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name and (v.tid is None or v.tid == tid):
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class ConcreteState:
    locs: tuple[int, ...]
    values: tuple[int, ...]


# Structured syntax tree, retained for printing (the CFG is not invertible).

@dataclass(frozen=True)
class SIf:
    cond: Cond
    then: tuple["SyntaxStmt", ...]
    orelse: tuple["SyntaxStmt", ...]


@dataclass(frozen=True)
class SWhile:
    cond: Cond
    body: tuple["SyntaxStmt", ...]


SyntaxStmt = Union[Assign, Havoc, Assume, Assert, Lock, Unlock, Skip, SIf, SWhile]


@dataclass(frozen=True)
class ThreadSyntax:
    locals_: tuple[tuple[str, int], ...]
    body: tuple[SyntaxStmt, ...]


@dataclass(frozen=True)
class ProgramSyntax:
    globals_: tuple[tuple[str, int], ...]
    mutexes: tuple[str, ...]
    threads: tuple[ThreadSyntax, ...]


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_KEYWORDS = {
    "global", "mutex", "thread", "local", "havoc", "assume", "assert",
    "lock", "unlock", "skip", "if", "else", "while", "true", "false",
}

_PUNCT = (
    "==", "!=", "<=", ">=", "&&", "||",
    "{", "}", "(", ")", ";", ",", "=", "<", ">", "!", "+", "-", "*",
)


@dataclass(frozen=True)
class _Token:
    kind: str  # 'int' | 'ident' | 'kw' | 'punct' | 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(_Token("kw" if word in _KEYWORDS else "ident", word, line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(_Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(_Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, msg: str, tok: Optional[_Token] = None) -> ParseError:
        t = tok or self.peek()
        return ParseError(msg, t.line, t.col)

    def expect(self, text: str) -> _Token:
        t = self.peek()
        if t.text != text or t.kind == "eof":
            raise self.error(f"expected {text!r}, found {t.text!r}")
        return self.next()

    def accept(self, text: str) -> bool:
        if self.peek().text == text and self.peek().kind != "eof":
            self.next()
            return True
        return False

    def expect_ident(self) -> _Token:
        t = self.peek()
        if t.kind != "ident":
            raise self.error(f"expected identifier, found {t.text!r}")
        return self.next()

    def parse_int(self) -> int:
        neg = self.accept("-")
        t = self.peek()
        if t.kind != "int":
            raise self.error(f"expected integer, found {t.text!r}")
        self.next()
        v = int(t.text)
        return -v if neg else v

    # -- program level ---------------------------------------------------

    def parse_program(self) -> ProgramSyntax:
        globals_: list[tuple[str, int]] = []
        mutexes: list[str] = []
        threads: list[ThreadSyntax] = []
        while self.peek().kind != "eof":
            t = self.peek()
            if t.text == "global":
                self.next()
                name = self.expect_ident()
                self.expect("=")
                init = self.parse_int()
                self.expect(";")
                globals_.append((name.text, init))
            elif t.text == "mutex":
                self.next()
                name = self.expect_ident()
                self.expect(";")
                mutexes.append(name.text)
            elif t.text == "thread":
                self.next()
                threads.append(self.parse_thread())
            else:
                raise self.error(f"expected 'global', 'mutex' or 'thread', found {t.text!r}")
        return ProgramSyntax(tuple(globals_), tuple(mutexes), tuple(threads))

    def parse_thread(self) -> ThreadSyntax:
        self.expect("{")
        locals_: list[tuple[str, int]] = []
        while self.peek().text == "local":
            self.next()
            name = self.expect_ident()
            self.expect("=")
            init = self.parse_int()
            self.expect(";")
            locals_.append((name.text, init))
        body = self.parse_block_body()
        self.expect("}")
        return ThreadSyntax(tuple(locals_), tuple(body))

    def parse_block(self) -> tuple[SyntaxStmt, ...]:
        self.expect("{")
        body = self.parse_block_body()
        self.expect("}")
        return tuple(body)

    def parse_block_body(self) -> list[SyntaxStmt]:
        out: list[SyntaxStmt] = []
        while self.peek().text != "}" and self.peek().kind != "eof":
            out.append(self.parse_stmt())
        return out

    def parse_stmt(self) -> SyntaxStmt:
        t = self.peek()
        if t.kind == "ident":
            name = self.next()
            self.expect("=")
            e = self.parse_expr()
            self.expect(";")
            return Assign(-1, name.text, e)
        if t.text == "havoc":
            self.next()
            self.expect("(")
            name = self.expect_ident()
            self.expect(",")
            lo = self.parse_int()
            self.expect(",")
            hi = self.parse_int()
            self.expect(")")
            self.expect(";")
            if lo > hi:
                raise self.error(f"havoc bounds must satisfy lo <= hi, got {lo} > {hi}", name)
            return Havoc(-1, name.text, lo, hi)
        if t.text == "assume":
            self.next()
            self.expect("(")
            c = self.parse_cond()
            self.expect(")")
            self.expect(";")
            return Assume(c)
        if t.text == "assert":
            tok = self.next()
            self.expect("(")
            c = self.parse_cond()
            self.expect(")")
            self.expect(";")
            return Assert(c, "", tok.line, tok.col)  # id assigned during elaboration
        if t.text == "lock":
            self.next()
            self.expect("(")
            name = self.expect_ident()
            self.expect(")")
            self.expect(";")
            return Lock(-1, name.text)
        if t.text == "unlock":
            self.next()
            self.expect("(")
            name = self.expect_ident()
            self.expect(")")
            self.expect(";")
            return Unlock(-1, name.text)
        if t.text == "skip":
            self.next()
            self.expect(";")
            return Skip()
        if t.text == "if":
            self.next()
            self.expect("(")
            c = self.parse_cond()
            self.expect(")")
            then = self.parse_block()
            orelse: tuple[SyntaxStmt, ...] = ()
            if self.accept("else"):
                orelse = self.parse_block()
            return SIf(c, then, orelse)
        if t.text == "while":
            self.next()
            self.expect("(")
            c = self.parse_cond()
            self.expect(")")
            body = self.parse_block()
            return SWhile(c, body)
        raise self.error(f"expected statement, found {t.text!r}")

    # -- expressions -----------------------------------------------------

    def parse_expr(self) -> Expr:
        e = self.parse_term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            e = BinOp(op, e, self.parse_term())
        return e

    def parse_term(self) -> Expr:
        e = self.parse_factor()
        while self.peek().text == "*":
            self.next()
            e = BinOp("*", e, self.parse_factor())
        return e

    def parse_factor(self) -> Expr:
        t = self.peek()
        if t.text == "-":
            self.next()
            return Neg(self.parse_factor())
        if t.kind == "int":
            self.next()
            return Const(int(t.text))
        if t.kind == "ident":
            self.next()
            return Var(t.text, -1)
        if t.text == "(":
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return e
        raise self.error(f"expected expression, found {t.text!r}")

    # -- conditions ------------------------------------------------------

    def parse_cond(self) -> Cond:
        c = self.parse_cond_and()
        while self.peek().text == "||":
            self.next()
            c = Or(c, self.parse_cond_and())
        return c

    def parse_cond_and(self) -> Cond:
        c = self.parse_cond_atom()
        while self.peek().text == "&&":
            self.next()
            c = And(c, self.parse_cond_atom())
        return c

    def parse_cond_atom(self) -> Cond:
        t = self.peek()
        if t.text == "!":
            self.next()
            return Not(self.parse_cond_atom())
        if t.text == "true":
            self.next()
            return BoolLit(True)
        if t.text == "false":
            self.next()
            return BoolLit(False)
        if t.text == "(":
            # '(' may open a nested condition or a parenthesized arithmetic
            # operand; try the condition reading first and backtrack.
            save = self.pos
            try:
                self.next()
                c = self.parse_cond()
                self.expect(")")
                return c
            except ParseError:
                self.pos = save
        return self.parse_cmp()

    def parse_cmp(self) -> Cond:
        left = self.parse_expr()
        t = self.peek()
        if t.text not in ("==", "!=", "<", "<=", ">", ">="):
            raise self.error(f"expected comparison operator, found {t.text!r}")
        self.next()
        right = self.parse_expr()
        return Cmp(t.text, left, right)


# ---------------------------------------------------------------------------
# Elaboration: syntax tree -> Program (variable resolution + CFG build)
# ---------------------------------------------------------------------------

class _Scope:
    def __init__(self, variables: list[VarInfo], tid: int):
        self.variables = variables
        self.tid = tid

    def resolve(self, name: str, line: int, col: int) -> int:
        # local of this thread shadows nothing: names are disjoint by check
        for i, v in enumerate(self.variables):
            if v.name == name and (v.tid is None or v.tid == self.tid):
                if v.kind == "ghost":
                    raise ParseError(f"mutex {name!r} used as a variable", line, col)
                return i
        raise ParseError(f"undeclared variable {name!r}", line, col)


def _resolve_expr(e: Expr, scope: _Scope) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return Var(e.name, scope.resolve(e.name, 0, 0))
    if isinstance(e, Neg):
        return Neg(_resolve_expr(e.operand, scope))
    return BinOp(e.op, _resolve_expr(e.left, scope), _resolve_expr(e.right, scope))


def _resolve_cond(c: Cond, scope: _Scope) -> Cond:
    if isinstance(c, BoolLit):
        return c
    if isinstance(c, Cmp):
        return Cmp(c.op, _resolve_expr(c.left, scope), _resolve_expr(c.right, scope))
    if isinstance(c, Not):
        return Not(_resolve_cond(c.operand, scope))
    if isinstance(c, And):
        return And(_resolve_cond(c.left, scope), _resolve_cond(c.right, scope))
    return Or(_resolve_cond(c.left, scope), _resolve_cond(c.right, scope))


class _CfgBuilder:
    def __init__(self, tid: int, scope: _Scope, mutex_slots: dict[str, int],
                 assert_counter: list[int]):
        self.tid = tid
        self.scope = scope
        self.mutex_slots = mutex_slots
        self.assert_counter = assert_counter
        self.n_locs = 1  # location 0 is the entry
        self.edges: list[tuple[int, Stmt, int]] = []

    def fresh(self) -> int:
        self.n_locs += 1
        return self.n_locs - 1

    def emit(self, src: int, stmt: Stmt, dst: int) -> None:
        self.edges.append((src, stmt, dst))

    def build_block(self, stmts: tuple[SyntaxStmt, ...], src: int, dst: int) -> None:
        if not stmts:
            if src != dst:
                self.emit(src, Skip(), dst)
            return
        cur = src
        for k, s in enumerate(stmts):
            target = dst if k == len(stmts) - 1 else self.fresh()
            self.build_stmt(s, cur, target)
            cur = target

    def build_stmt(self, s: SyntaxStmt, src: int, dst: int) -> None:
        if isinstance(s, Assign):
            idx = self.scope.resolve(s.var_name, 0, 0)
            self.emit(src, Assign(idx, s.var_name, _resolve_expr(s.expr, self.scope)), dst)
        elif isinstance(s, Havoc):
            idx = self.scope.resolve(s.var_name, 0, 0)
            self.emit(src, Havoc(idx, s.var_name, s.lo, s.hi), dst)
        elif isinstance(s, Assume):
            self.emit(src, Assume(_resolve_cond(s.cond, self.scope)), dst)
        elif isinstance(s, Assert):
            aid = f"a{self.assert_counter[0]}"
            self.assert_counter[0] += 1
            self.emit(src, Assert(_resolve_cond(s.cond, self.scope), aid, s.line, s.col), dst)
        elif isinstance(s, Lock):
            slot = self._mutex_slot(s.mutex_name)
            self.emit(src, Lock(slot, s.mutex_name), dst)
        elif isinstance(s, Unlock):
            slot = self._mutex_slot(s.mutex_name)
            self.emit(src, Unlock(slot, s.mutex_name), dst)
        elif isinstance(s, Skip):
            self.emit(src, Skip(), dst)
        elif isinstance(s, SIf):
            c = _resolve_cond(s.cond, self.scope)
            then_entry = self.fresh()
            self.emit(src, Assume(c), then_entry)
            self.build_block(s.then, then_entry, dst)
            else_entry = self.fresh()
            self.emit(src, Assume(negate_cond(c)), else_entry)
            self.build_block(s.orelse, else_entry, dst)
        elif isinstance(s, SWhile):
            c = _resolve_cond(s.cond, self.scope)
            body_entry = self.fresh()
            self.emit(src, Assume(c), body_entry)
            self.build_block(s.body, body_entry, src)
            self.emit(src, Assume(negate_cond(c)), dst)
        else:  # pragma: no cover - parser produces no other nodes
            raise AssertionError(s)

    def _mutex_slot(self, name: str) -> int:
        if name not in self.mutex_slots:
            raise ParseError(f"undeclared mutex {name!r}", 0, 0)
        return self.mutex_slots[name]


def elaborate(syntax: ProgramSyntax) -> Program:
    variables: list[VarInfo] = []
    seen: set[str] = set()
    for name, init in syntax.globals_:
        if name in seen:
            raise ParseError(f"duplicate global {name!r}", 0, 0)
        seen.add(name)
        variables.append(VarInfo(name, "global", None, init))
    mutex_slots: dict[str, int] = {}
    for name in syntax.mutexes:
        if name in seen:
            raise ParseError(f"mutex {name!r} clashes with a variable", 0, 0)
        seen.add(name)
        mutex_slots[name] = len(variables)
        variables.append(VarInfo(name, "ghost", None, 0))
    for tid, th in enumerate(syntax.threads):
        local_seen: set[str] = set()
        for name, init in th.locals_:
            if name in seen or name in local_seen:
                raise ParseError(f"local {name!r} clashes with another declaration", 0, 0)
            local_seen.add(name)
            variables.append(VarInfo(name, "local", tid, init))

    threads: list[ThreadCfg] = []
    assert_counter = [0]
    edge_index = [0]
    for tid, th in enumerate(syntax.threads):
        scope = _Scope(variables, tid)
        builder = _CfgBuilder(tid, scope, mutex_slots, assert_counter)
        exit_loc = builder.fresh()
        builder.build_block(th.body, 0, exit_loc)
        edges = []
        for src, stmt, dst in builder.edges:
            edges.append(Edge(edge_index[0], tid, src, dst, stmt))
            edge_index[0] += 1
        threads.append(ThreadCfg(tid, builder.n_locs, 0, tuple(edges)))
    if not threads:
        raise ParseError("program has no threads", 0, 0)
    return Program(tuple(variables), tuple(threads), tuple(syntax.mutexes), syntax)


def parse_program(text: str) -> Program:
    """Parse mini-language source into a Program with per-thread CFGs."""
    return elaborate(_Parser(text).parse_program())


# ---------------------------------------------------------------------------
# Printer (canonical form; parse . print . parse == parse)
# ---------------------------------------------------------------------------

def format_expr(e: Expr) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"-({format_expr(e.operand)})"
    return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"


def format_cond(c: Cond) -> str:
    if isinstance(c, BoolLit):
        return "true" if c.value else "false"
    if isinstance(c, Cmp):
        return f"{format_expr(c.left)} {c.op} {format_expr(c.right)}"
    if isinstance(c, Not):
        return f"!({format_cond(c.operand)})"
    if isinstance(c, And):
        return f"({format_cond(c.left)}) && ({format_cond(c.right)})"
    return f"({format_cond(c.left)}) || ({format_cond(c.right)})"


def format_stmt(s: Stmt) -> str:
    if isinstance(s, Assign):
        return f"{s.var_name} = {format_expr(s.expr)}"
    if isinstance(s, Havoc):
        return f"havoc({s.var_name}, {s.lo}, {s.hi})"
    if isinstance(s, Assume):
        return f"assume({format_cond(s.cond)})"
    if isinstance(s, Assert):
        return f"assert({format_cond(s.cond)})"
    if isinstance(s, Lock):
        return f"lock({s.mutex_name})"
    if isinstance(s, Unlock):
        return f"unlock({s.mutex_name})"
    if isinstance(s, GuardedAssign):
        return f"[{format_cond(s.cond)}] {s.var_name} = {format_expr(s.expr)}"
    return "skip"


def _format_syntax_stmt(s: SyntaxStmt, indent: str, out: list[str]) -> None:
    if isinstance(s, SIf):
        out.append(f"{indent}if ({format_cond(s.cond)}) {{")
        for t in s.then:
            _format_syntax_stmt(t, indent + "    ", out)
        if s.orelse:
            out.append(f"{indent}}} else {{")
            for t in s.orelse:
                _format_syntax_stmt(t, indent + "    ", out)
        out.append(f"{indent}}}")
    elif isinstance(s, SWhile):
        out.append(f"{indent}while ({format_cond(s.cond)}) {{")
        for t in s.body:
            _format_syntax_stmt(t, indent + "    ", out)
        out.append(f"{indent}}}")
    else:
        out.append(f"{indent}{format_stmt(s)};")


def format_program(p: Program) -> str:
    """Render a parsed program back to canonical source text."""
    out: list[str] = []
    for name, init in p.syntax.globals_:
        out.append(f"global {name} = {init};")
    for name in p.syntax.mutexes:
        out.append(f"mutex {name};")
    for th in p.syntax.threads:
        out.append("thread {")
        for name, init in th.locals_:
            out.append(f"    local {name} = {init};")
        for s in th.body:
            _format_syntax_stmt(s, "    ", out)
        out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Mutex desugaring
# ---------------------------------------------------------------------------

def desugar_mutexes(p: Program) -> Program:
    """Replace lock/unlock edges with atomic guarded assignments on ghosts.

    lock(m) in thread i becomes [m == 0] m = i + 1 and unlock(m) becomes
    [m == i + 1] m = 0, each as a single atomic edge.  Programs without
    mutexes are returned unchanged.
    """
    if not p.mutexes:
        return p
    threads = []
    for th in p.threads:
        edges = []
        for e in th.edges:
            s = e.stmt
            if isinstance(s, Lock):
                ghost = Var(s.mutex_name, s.mutex)
                stmt: Stmt = GuardedAssign(
                    Cmp("==", ghost, Const(0)), s.mutex, s.mutex_name, Const(e.tid + 1))
                edges.append(Edge(e.index, e.tid, e.src, e.dst, stmt))
            elif isinstance(s, Unlock):
                ghost = Var(s.mutex_name, s.mutex)
                stmt = GuardedAssign(
                    Cmp("==", ghost, Const(e.tid + 1)), s.mutex, s.mutex_name, Const(0))
                edges.append(Edge(e.index, e.tid, e.src, e.dst, stmt))
            else:
                edges.append(e)
        threads.append(ThreadCfg(th.tid, th.n_locs, th.entry, tuple(edges)))
    return Program(p.variables, tuple(threads), p.mutexes, p.syntax)


# ---------------------------------------------------------------------------
# Concrete semantics
# ---------------------------------------------------------------------------

def is_enabled(p: Program, s: ConcreteState, e: Edge) -> bool:
    if s.locs[e.tid] != e.src:
        return False
    st = e.stmt
    if isinstance(st, Assume):
        return eval_cond(st.cond, s.values)
    if isinstance(st, GuardedAssign):
        return eval_cond(st.cond, s.values)
    if isinstance(st, (Lock, Unlock)):
        raise ValueError("concrete semantics requires a desugared program")
    # Assign, Havoc, Skip and Assert are always enabled at their location;
    # asserts do not block, a violation is recorded by the caller.
    return True


def enabled(p: Program, s: ConcreteState) -> tuple[Edge, ...]:
    out = []
    for tid, th in enumerate(p.threads):
        loc = s.locs[tid]
        for e in th.edges:
            if e.src == loc and is_enabled(p, s, e):
                out.append(e)
    return tuple(out)


def concrete_step(p: Program, s: ConcreteState, e: Edge) -> tuple[ConcreteState, ...]:
    """All successor states of firing edge e at s.

    Havoc produces one successor per value in its range; everything else is
    deterministic.  Raises if e is not enabled.
    """
    if not is_enabled(p, s, e):
        raise ValueError(f"edge {e.index} ({e.describe()}) not enabled")
    locs = list(s.locs)
    locs[e.tid] = e.dst
    locs_t = tuple(locs)
    st = e.stmt
    if isinstance(st, Assign):
        vals = list(s.values)
        vals[st.var] = eval_expr(st.expr, s.values)
        return (ConcreteState(locs_t, tuple(vals)),)
    if isinstance(st, Havoc):
        out = []
        for v in range(st.lo, st.hi + 1):
            vals = list(s.values)
            vals[st.var] = v
            out.append(ConcreteState(locs_t, tuple(vals)))
        return tuple(out)
    if isinstance(st, GuardedAssign):
        vals = list(s.values)
        vals[st.var] = eval_expr(st.expr, s.values)
        return (ConcreteState(locs_t, tuple(vals)),)
    # Assume, Assert, Skip: valuation unchanged
    return (ConcreteState(locs_t, s.values),)


def assert_violated(s: ConcreteState, e: Edge) -> bool:
    """True when firing this assert edge at s witnesses a violation."""
    return isinstance(e.stmt, Assert) and not eval_cond(e.stmt.cond, s.values)


def successors(p: Program, s: ConcreteState) -> Iterator[tuple[Edge, ConcreteState]]:
    for e in enabled(p, s):
        for s2 in concrete_step(p, s, e):
            yield e, s2
