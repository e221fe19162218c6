"""Carib abstract syntax.

The statement grammar is deliberately small: eight assignment forms, a
two-way conditional, a while loop, calls whose actuals are bare identifiers,
and a mandatory ``return id``. Conditions are always ``id rel_op id`` and a
dereference (field or array) may appear on one side of an assignment only.

``BottomAssign`` is the single extension over the surface grammar: a parallel
assignment of the divergence value to a set of l-value representatives. It is
never produced by the parser for user source; the divergence rewriter
introduces it, and the parser only accepts it in ``allow_bottom`` mode so
rewritten programs can round-trip.

Source locations never participate in structural equality, so
``parse(pretty(p)) == p`` compares shape, not layout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..representatives import Representative

# ---------------------------------------------------------------------------
# types and locations
# ---------------------------------------------------------------------------

INT = "int"

UNARY_OPS = ("-", "!")
BINARY_OPS = ("+", "-", "*", "/", "%")
REL_OPS = ("<", "<=", ">", ">=", "==", "!=")


def is_array_type(t: str) -> bool:
    return t.endswith("[]")


def elem_type(t: str) -> str:
    return t[:-2]


def is_ref_type(t: str) -> bool:
    return t != INT and not is_array_type(t)


@dataclass(frozen=True, slots=True)
class Loc:
    line: int = 0
    col: int = 0


UNKNOWN_LOC = Loc()


class DivergenceCause(enum.Enum):
    API = "api"
    LOOP = "loop"
    RECURSION = "recursion"


# ---------------------------------------------------------------------------
# statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Cond:
    left: str
    op: str
    right: str

    def render(self) -> str:
        return f"{self.left} {self.op} {self.right}"


class Stmt:
    """Marker base; concrete statements are the dataclasses below."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class ConstAssign(Stmt):
    target: str
    value: int | None  # None encodes the null literal
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class CopyAssign(Stmt):
    target: str
    source: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class UnaryAssign(Stmt):
    target: str
    op: str
    operand: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class BinaryAssign(Stmt):
    target: str
    left: str
    op: str
    right: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class FieldRead(Stmt):
    target: str
    obj: str
    field_name: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class FieldWrite(Stmt):
    obj: str
    field_name: str
    source: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class ArrayRead(Stmt):
    target: str
    array: str
    index: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class ArrayWrite(Stmt):
    array: str
    index: str
    source: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class IfElse(Stmt):
    cond: Cond
    then_body: Stmt | None
    else_body: Stmt | None
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class While(Stmt):
    cond: Cond
    body: Stmt | None
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class Call(Stmt):
    target: str
    callee: str
    actuals: tuple[str, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class Return(Stmt):
    value: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class BottomAssign(Stmt):
    """Parallel assignment of divergence to a set of representatives."""

    targets: tuple[Representative, ...]
    cause: DivergenceCause
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


ASSIGN_FORMS = (
    ConstAssign,
    CopyAssign,
    UnaryAssign,
    BinaryAssign,
    FieldRead,
    FieldWrite,
    ArrayRead,
    ArrayWrite,
)


# ---------------------------------------------------------------------------
# declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class FieldDecl:
    name: str
    type: str
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class ClassDecl:
    name: str
    superclass: str | None
    interfaces: tuple[str, ...]
    fields: tuple[FieldDecl, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class InterfaceDecl:
    name: str
    extends: tuple[str, ...]
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)


@dataclass(frozen=True, slots=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True, slots=True)
class Method:
    name: str
    owner: str | None
    formals: tuple[Param, ...]
    locals: tuple[Param, ...]
    return_type: str
    body: Stmt | None  # None only for extern declarations
    extern: bool = False
    loc: Loc = field(default=UNKNOWN_LOC, compare=False)

    @property
    def id(self) -> str:
        return f"{self.owner}.{self.name}" if self.owner else self.name


@dataclass(frozen=True, slots=True)
class Program:
    classes: tuple[ClassDecl, ...]
    interfaces: tuple[InterfaceDecl, ...]
    methods: tuple[Method, ...]


# ---------------------------------------------------------------------------
# traversal helpers
# ---------------------------------------------------------------------------


def flatten(stmt: Stmt | None) -> list[Stmt]:
    """Unfold a right-nested Seq chain into a flat statement list."""
    out: list[Stmt] = []
    stack = [stmt]
    while stack:
        s = stack.pop()
        if s is None:
            continue
        if isinstance(s, Seq):
            stack.append(s.second)
            stack.append(s.first)
        else:
            out.append(s)
    return out


def sequence(stmts: list[Stmt], loc: Loc = UNKNOWN_LOC) -> Stmt | None:
    """Right-fold a statement list back into a Seq chain."""
    if not stmts:
        return None
    acc = stmts[-1]
    for s in reversed(stmts[:-1]):
        acc = Seq(s, acc, loc=s.loc if isinstance(s.loc, Loc) else loc)
    return acc


def normalize_seqs(stmt: Stmt | None) -> Stmt | None:
    """Canonical right-nested Seq chains at every block level, matching what
    the parser builds; needed for structural round-trip equality."""
    if stmt is None:
        return None
    flat = [
        _normalize_one(s) for s in flatten(stmt)
    ]
    return sequence(flat)


def _normalize_one(s: Stmt) -> Stmt:
    if isinstance(s, IfElse):
        return IfElse(s.cond, normalize_seqs(s.then_body), normalize_seqs(s.else_body), loc=s.loc)
    if isinstance(s, While):
        return While(s.cond, normalize_seqs(s.body), loc=s.loc)
    return s


def walk(stmt: Stmt | None):
    """Yield every statement in a body, including nested ones."""
    stack = [stmt]
    while stack:
        s = stack.pop()
        if s is None:
            continue
        if isinstance(s, Seq):
            stack.append(s.second)
            stack.append(s.first)
            continue
        yield s
        if isinstance(s, IfElse):
            stack.append(s.else_body)
            stack.append(s.then_body)
        elif isinstance(s, While):
            stack.append(s.body)


def free_vars(e: Cond | Stmt) -> set[str]:
    """Identifiers syntactically occurring in a condition or a statement's RHS.

    Follows syntactic occurrence: the RHS ``a[i]`` reads both ``a`` and ``i``,
    the RHS ``o.f`` reads ``o``, and constants read nothing.
    """
    if isinstance(e, Cond):
        return {e.left, e.right}
    if isinstance(e, ConstAssign):
        return set()
    if isinstance(e, CopyAssign):
        return {e.source}
    if isinstance(e, UnaryAssign):
        return {e.operand}
    if isinstance(e, BinaryAssign):
        return {e.left, e.right}
    if isinstance(e, FieldRead):
        return {e.obj}
    if isinstance(e, ArrayRead):
        return {e.array, e.index}
    if isinstance(e, (FieldWrite, ArrayWrite)):
        return {e.source}
    if isinstance(e, Call):
        return set(e.actuals)
    if isinstance(e, Return):
        return {e.value}
    if isinstance(e, BottomAssign):
        return set()
    raise TypeError(f"no RHS for {type(e).__name__}")


def deref_base_vars(s: Stmt) -> set[str]:
    """Identifiers a statement dereferences to reach its written location."""
    if isinstance(s, FieldWrite):
        return {s.obj}
    if isinstance(s, ArrayWrite):
        return {s.array, s.index}
    return set()


def instruction_count(stmt: Stmt | None) -> int:
    """Statement count used as the size unit in reports (branches count once)."""
    return sum(1 for _ in walk(stmt))
