"""
AST for the synthesizable Verilog subset.

Nodes are frozen dataclasses. Every node carries the byte span it was parsed
from; spans (and the auxiliary head/keyword spans used by slicing) are
excluded from equality, so `==` compares structure only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union

from rtl.services.source import SourceText, Span


def _aux(default=None):
    # Auxiliary positions: kept for slicing, ignored by structural equality.
    return field(default=default, compare=False, repr=False)


@dataclass(frozen=True)
class Node:
    span: Span = field(compare=False, repr=False, kw_only=True)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Identifier(Node):
    name: str


@dataclass(frozen=True)
class Number(Node):
    value: int
    width: int
    sized: bool = True
    # casez wildcard bits ('?' or 'z' digits); always 0 outside case labels
    wildcard: int = 0


@dataclass(frozen=True)
class UnaryOp(Node):
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class BinaryOp(Node):
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Ternary(Node):
    cond: "Expr"
    then: "Expr"
    other: "Expr"


@dataclass(frozen=True)
class Concat(Node):
    parts: tuple


@dataclass(frozen=True)
class Replicate(Node):
    count: "Expr"
    parts: tuple


@dataclass(frozen=True)
class BitSelect(Node):
    name: str
    index: "Expr"


@dataclass(frozen=True)
class PartSelect(Node):
    name: str
    msb: "Expr"
    lsb: "Expr"


Expr = Union[Identifier, Number, UnaryOp, BinaryOp, Ternary, Concat, Replicate, BitSelect, PartSelect]

REDUCTION_OPS = frozenset({"&", "~&", "|", "~|", "^", "~^"})
COMPARISON_OPS = frozenset({"==", "!=", "===", "!==", "<", "<=", ">", ">="})
LOGICAL_OPS = frozenset({"&&", "||"})
SHIFT_OPS = frozenset({"<<", ">>", "<<<", ">>>", "**"})


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Assign(Node):
    lhs: Expr
    rhs: Expr
    blocking: bool


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: "Stmt"
    other: Optional["Stmt"] = None
    head_span: Optional[Span] = _aux()
    else_span: Optional[Span] = _aux()


@dataclass(frozen=True)
class CaseItem(Node):
    # Empty labels means `default`.
    labels: tuple
    body: "Stmt"
    label_span: Optional[Span] = _aux()

    @property
    def is_default(self) -> bool:
        return not self.labels


@dataclass(frozen=True)
class Case(Node):
    kind: str  # case | casez | casex
    subject: Expr
    items: tuple
    head_span: Optional[Span] = _aux()
    end_span: Optional[Span] = _aux()


@dataclass(frozen=True)
class Block(Node):
    stmts: tuple
    label: Optional[str] = None
    begin_span: Optional[Span] = _aux()
    end_span: Optional[Span] = _aux()


@dataclass(frozen=True)
class NullStmt(Node):
    pass


Stmt = Union[Assign, If, Case, Block, NullStmt]


# ---------------------------------------------------------------------------
# Module items and declarations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensEntry(Node):
    name: str
    edge: Optional[str] = None  # posedge | negedge | None (level)


@dataclass(frozen=True)
class Sensitivity(Node):
    star: bool
    entries: tuple = ()

    @property
    def edges(self) -> tuple:
        return tuple(e for e in self.entries if e.edge)

    @property
    def is_edge(self) -> bool:
        return any(e.edge for e in self.entries)


@dataclass(frozen=True)
class ContinuousAssign(Node):
    lhs: Expr
    rhs: Expr
    # Net declaration assignments (`wire y = a;`) carry the span of `= a`.
    init_span: Optional[Span] = _aux()

    @property
    def from_declaration(self) -> bool:
        return self.init_span is not None


@dataclass(frozen=True)
class AlwaysBlock(Node):
    sens: Sensitivity
    body: Stmt
    head_span: Optional[Span] = _aux()


@dataclass(frozen=True)
class UnsupportedItem(Node):
    """A whole module item outside the subset, kept opaque for diagnostics."""

    construct: str


Item = Union[ContinuousAssign, AlwaysBlock]


@dataclass(frozen=True)
class Declarator(Node):
    name: str
    init: Optional[Expr] = None
    init_span: Optional[Span] = _aux()


@dataclass(frozen=True)
class NetDecl(Node):
    kind: str  # wire | reg
    msb: Optional[int]
    lsb: Optional[int]
    signed: bool
    declarators: tuple
    head_span: Optional[Span] = _aux()
    semi_span: Optional[Span] = _aux()

    @property
    def width(self) -> int:
        return range_width(self.msb, self.lsb)

    @property
    def names(self) -> tuple:
        return tuple(d.name for d in self.declarators)


@dataclass(frozen=True)
class PortGroup(Node):
    """
    One port declaration: an ANSI header group (`input [3:0] a, b`) or a
    non-ANSI body statement (`output reg y;`, semi_span set).
    """

    direction: str
    kind: Optional[str]
    msb: Optional[int]
    lsb: Optional[int]
    signed: bool
    declarators: tuple
    head_span: Optional[Span] = _aux()
    semi_span: Optional[Span] = _aux()


@dataclass(frozen=True)
class PortDecl(Node):
    name: str
    direction: str  # input | output
    width: int
    kind: str  # wire | reg
    msb: int = 0
    lsb: int = 0
    signed: bool = False


@dataclass(frozen=True)
class Param(Node):
    name: str
    value: int
    width: int = 32
    local: bool = False


@dataclass(frozen=True)
class ParamDecl(Node):
    params: tuple
    local: bool = False


@dataclass(frozen=True)
class HeaderName(Node):
    # A bare port name in a non-ANSI header list.
    name: str


@dataclass(frozen=True)
class ModuleAst(Node):
    name: str
    ports: tuple
    decls: tuple
    items: tuple
    params: tuple = ()
    param_decls: tuple = ()
    port_groups: tuple = ()
    unsupported: tuple = ()
    ansi: bool = True
    header_names: tuple = _aux(())
    name_span: Optional[Span] = _aux()
    param_list_span: Optional[Span] = _aux()
    header_span: Optional[Span] = _aux()
    ports_open_span: Optional[Span] = _aux()
    ports_close_span: Optional[Span] = _aux()
    end_span: Optional[Span] = _aux()
    trivia: tuple = _aux(())
    source: Optional[SourceText] = _aux()

    # -----------------------------
    # Lookups
    # -----------------------------

    def port(self, name: str) -> Optional[PortDecl]:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    @property
    def inputs(self) -> tuple:
        return tuple(p for p in self.ports if p.direction == "input")

    @property
    def outputs(self) -> tuple:
        return tuple(p for p in self.ports if p.direction == "output")

    @property
    def param_values(self) -> dict:
        return {p.name: p.value for p in self.params}

    def signal_widths(self) -> dict:
        """Width of every port and declared net, by name."""
        widths = {p.name: p.width for p in self.ports}
        for decl in self.decls:
            for d in decl.declarators:
                widths.setdefault(d.name, decl.width)
        return widths

    def signal_kinds(self) -> dict:
        kinds = {p.name: p.kind for p in self.ports}
        for decl in self.decls:
            for d in decl.declarators:
                kinds.setdefault(d.name, decl.kind)
        return kinds

    def signal_ranges(self) -> dict:
        """(msb, lsb) of every signal; scalars are (0, 0)."""
        ranges = {p.name: (p.msb, p.lsb) for p in self.ports}
        for decl in self.decls:
            for d in decl.declarators:
                if d.name not in ranges:
                    ranges[d.name] = (decl.msb or 0, decl.lsb or 0)
        return ranges

    def interface(self) -> frozenset:
        return frozenset((p.name, p.direction, p.width) for p in self.ports)


def range_width(msb: Optional[int], lsb: Optional[int]) -> int:
    if msb is None:
        return 1
    return abs(msb - lsb) + 1


# ---------------------------------------------------------------------------
# Traversal helpers
# ---------------------------------------------------------------------------

def iter_subexprs(expr) -> Iterator:
    """Pre-order walk over an expression tree, including select indices."""
    yield expr
    if isinstance(expr, UnaryOp):
        yield from iter_subexprs(expr.operand)
    elif isinstance(expr, BinaryOp):
        yield from iter_subexprs(expr.left)
        yield from iter_subexprs(expr.right)
    elif isinstance(expr, Ternary):
        yield from iter_subexprs(expr.cond)
        yield from iter_subexprs(expr.then)
        yield from iter_subexprs(expr.other)
    elif isinstance(expr, Concat):
        for part in expr.parts:
            yield from iter_subexprs(part)
    elif isinstance(expr, Replicate):
        yield from iter_subexprs(expr.count)
        for part in expr.parts:
            yield from iter_subexprs(part)
    elif isinstance(expr, BitSelect):
        yield from iter_subexprs(expr.index)
    elif isinstance(expr, PartSelect):
        yield from iter_subexprs(expr.msb)
        yield from iter_subexprs(expr.lsb)


def expr_reads(expr, params: Optional[Mapping] = None) -> set:
    """Names of signals an expression reads (parameters excluded)."""
    params = params or {}
    names = set()
    for node in iter_subexprs(expr):
        if isinstance(node, Identifier):
            names.add(node.name)
        elif isinstance(node, (BitSelect, PartSelect)):
            names.add(node.name)
    return {n for n in names if n not in params}


def ternary_conditions(expr) -> list:
    return [node.cond for node in iter_subexprs(expr) if isinstance(node, Ternary)]


def lvalue_targets(lhs) -> list:
    """Signals written by an assignment target, left to right."""
    if isinstance(lhs, Identifier):
        return [lhs.name]
    if isinstance(lhs, (BitSelect, PartSelect)):
        return [lhs.name]
    if isinstance(lhs, Concat):
        out = []
        for part in lhs.parts:
            out.extend(lvalue_targets(part))
        return out
    return []


def lvalue_index_reads(lhs, params: Optional[Mapping] = None) -> set:
    """Signals read by the select expressions of an assignment target."""
    names = set()
    if isinstance(lhs, BitSelect):
        names |= expr_reads(lhs.index, params)
    elif isinstance(lhs, PartSelect):
        names |= expr_reads(lhs.msb, params) | expr_reads(lhs.lsb, params)
    elif isinstance(lhs, Concat):
        for part in lhs.parts:
            names |= lvalue_index_reads(part, params)
    return names


def iter_statements(stmt) -> Iterator:
    """Pre-order walk over a statement tree."""
    if stmt is None:
        return
    yield stmt
    if isinstance(stmt, Block):
        for s in stmt.stmts:
            yield from iter_statements(s)
    elif isinstance(stmt, If):
        yield from iter_statements(stmt.then)
        yield from iter_statements(stmt.other)
    elif isinstance(stmt, Case):
        for item in stmt.items:
            yield from iter_statements(item.body)


def assigned_signals(stmt) -> set:
    names = set()
    for s in iter_statements(stmt):
        if isinstance(s, Assign):
            names.update(lvalue_targets(s.lhs))
    return names


def item_targets(item) -> set:
    if isinstance(item, ContinuousAssign):
        return set(lvalue_targets(item.lhs))
    if isinstance(item, AlwaysBlock):
        return assigned_signals(item.body)
    return set()


# ---------------------------------------------------------------------------
# Constant evaluation
# ---------------------------------------------------------------------------

class NotConstant(Exception):
    pass


class ConstantTooWide(NotConstant):
    pass


# Bound on intermediate constant results; wider than any signal.
CONST_BITS = 128


def constant_value(expr, params: Mapping[str, int]) -> int:
    """
    Evaluate an expression over literals and parameters. Raises NotConstant
    when a signal is read and ConstantTooWide when a shift or power would
    grow past CONST_BITS.
    """
    if isinstance(expr, Number):
        return expr.value
    if isinstance(expr, Identifier):
        if expr.name in params:
            return params[expr.name]
        raise NotConstant(expr.name)
    if isinstance(expr, UnaryOp):
        v = constant_value(expr.operand, params)
        if expr.op == "-":
            return -v
        if expr.op == "+":
            return v
        if expr.op == "!":
            return int(v == 0)
        if expr.op == "~":
            return ~v
        raise NotConstant(expr.op)
    if isinstance(expr, BinaryOp):
        a = constant_value(expr.left, params)
        b = constant_value(expr.right, params)
        return _const_binary(expr.op, a, b)
    if isinstance(expr, Ternary):
        if constant_value(expr.cond, params):
            return constant_value(expr.then, params)
        return constant_value(expr.other, params)
    raise NotConstant(type(expr).__name__)


def _const_binary(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op in ("/", "%"):
        if b == 0:
            raise NotConstant("division by zero")
        q = abs(a) // abs(b)
        if (a < 0) != (b < 0):
            q = -q
        return q if op == "/" else a - q * b
    if op == "**":
        if b < 0:
            raise NotConstant("negative exponent")
        if abs(a) > 1 and (a.bit_length() - 1) * b >= CONST_BITS:
            raise ConstantTooWide(f"{a} ** {b}")
        return a ** b
    if op in ("<<", "<<<", ">>", ">>>") and b < 0:
        raise NotConstant("negative shift")
    if op in ("<<", "<<<"):
        if a and b > 0 and a.bit_length() + b > CONST_BITS:
            raise ConstantTooWide(f"{a} << {b}")
        return a << b
    if op in (">>", ">>>"):
        return a >> b
    if op == "&":
        return a & b
    if op == "|":
        return a | b
    if op == "^":
        return a ^ b
    if op in ("==", "==="):
        return int(a == b)
    if op in ("!=", "!=="):
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "&&":
        return int(bool(a) and bool(b))
    if op == "||":
        return int(bool(a) or bool(b))
    raise NotConstant(op)


def is_constant(expr, params: Mapping[str, int]) -> bool:
    try:
        constant_value(expr, params)
    except NotConstant:
        return False
    return True


# ---------------------------------------------------------------------------
# Widths
# ---------------------------------------------------------------------------

def self_width(expr, widths: Mapping[str, int], params: Mapping[str, "Param"]) -> int:
    """Self-determined width of an expression (unsigned rules)."""
    if isinstance(expr, Number):
        return expr.width
    if isinstance(expr, Identifier):
        if expr.name in params:
            return params[expr.name].width
        return widths[expr.name]
    if isinstance(expr, UnaryOp):
        if expr.op in REDUCTION_OPS or expr.op == "!":
            return 1
        return self_width(expr.operand, widths, params)
    if isinstance(expr, BinaryOp):
        if expr.op in COMPARISON_OPS or expr.op in LOGICAL_OPS:
            return 1
        if expr.op in SHIFT_OPS:
            return self_width(expr.left, widths, params)
        return max(self_width(expr.left, widths, params), self_width(expr.right, widths, params))
    if isinstance(expr, Ternary):
        return max(self_width(expr.then, widths, params), self_width(expr.other, widths, params))
    if isinstance(expr, Concat):
        return sum(self_width(p, widths, params) for p in expr.parts)
    if isinstance(expr, Replicate):
        values = {name: p.value for name, p in params.items()}
        count = constant_value(expr.count, values)
        return max(count, 0) * sum(self_width(p, widths, params) for p in expr.parts)
    if isinstance(expr, BitSelect):
        return 1
    if isinstance(expr, PartSelect):
        values = {name: p.value for name, p in params.items()}
        return abs(constant_value(expr.msb, values) - constant_value(expr.lsb, values)) + 1
    raise TypeError(f"not an expression: {expr!r}")
