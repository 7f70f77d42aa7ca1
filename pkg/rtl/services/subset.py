"""
Subset guard for the simulator's semantic domain.

supported_subset_check never raises; it returns one Diagnostic per
violation so `salvkit lint` and the verifier can report all of them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from rtl.services import ast
from rtl.services.errors import Diagnostic, UnsupportedConstruct
from rtl.services.source import Span

logger = logging.getLogger(__name__)

SUPPORTED_BINARY = frozenset(
    {"&", "|", "^", "+", "-", "*", "<<", ">>", "==", "!=", "<", "<=", ">", ">=", "&&", "||"}
)
SUPPORTED_UNARY = frozenset({"~", "!", "&", "|", "^", "-", "+"})


@dataclass(frozen=True)
class EdgeRoles:
    """Clock and asynchronous reset entries of one edge-triggered block."""

    clock: Optional[ast.SensEntry]
    reset: Optional[ast.SensEntry] = None
    reset_active_high: Optional[bool] = None


def condition_test(cond) -> Optional[tuple[str, bool]]:
    """
    (signal, active_high) when a condition tests a single signal's level:
    `r`, `!r`, `~r`, `r == 0`, `r != 1`, ...
    """
    if isinstance(cond, ast.Identifier):
        return cond.name, True
    if isinstance(cond, ast.UnaryOp) and cond.op in ("!", "~") and isinstance(cond.operand, ast.Identifier):
        return cond.operand.name, False
    if isinstance(cond, ast.BinaryOp) and cond.op in ("==", "!="):
        ident, number = cond.left, cond.right
        if isinstance(ident, ast.Number):
            ident, number = number, ident
        if isinstance(ident, ast.Identifier) and isinstance(number, ast.Number):
            high = number.value != 0
            return ident.name, high if cond.op == "==" else not high
    return None


def leading_if(stmt) -> Optional[ast.If]:
    while isinstance(stmt, ast.Block) and stmt.stmts:
        stmt = stmt.stmts[0]
    return stmt if isinstance(stmt, ast.If) else None


def edge_roles(block: ast.AlwaysBlock) -> EdgeRoles:
    edges = block.sens.edges
    if len(edges) == 1:
        return EdgeRoles(edges[0])
    if len(edges) == 2:
        first_if = leading_if(block.body)
        test = condition_test(first_if.cond) if first_if is not None else None
        if test is not None:
            for i, entry in enumerate(edges):
                if entry.name == test[0]:
                    return EdgeRoles(edges[1 - i], entry, test[1])
    return EdgeRoles(None)


def statement_reads(stmt, params) -> set:
    """Every signal a statement tree reads, guards and select indices included."""
    names = set()
    for s in ast.iter_statements(stmt):
        if isinstance(s, ast.Assign):
            names |= ast.expr_reads(s.rhs, params)
            names |= ast.lvalue_index_reads(s.lhs, params)
        elif isinstance(s, ast.If):
            names |= ast.expr_reads(s.cond, params)
        elif isinstance(s, ast.Case):
            names |= ast.expr_reads(s.subject, params)
            for item in s.items:
                for label in item.labels:
                    names |= ast.expr_reads(label, params)
    return names


class _Checker:
    def __init__(self, module: ast.ModuleAst):
        self.module = module
        self.params = module.param_values
        self.kinds = module.signal_kinds()
        self.directions = {p.name: p.direction for p in module.ports}
        self.diagnostics: list[Diagnostic] = []

    def report(self, span: Optional[Span], construct: str, message: Optional[str] = None):
        source = self.module.source
        origin = source.origin if source is not None else "<ast>"
        line, col = source.line_col(span.start) if source is not None and span is not None else (1, 1)
        error = UnsupportedConstruct(construct, message, origin=origin, line=line, col=col)
        self.diagnostics.append(error.diagnostic())

    # -----------------------------
    # Whole-module checks
    # -----------------------------

    def run(self) -> list[Diagnostic]:
        for item in self.module.unsupported:
            self.report(item.span, item.construct)

        for port in self.module.ports:
            if port.signed:
                self.report(port.span, "signed declaration")
        for decl in self.module.decls:
            if decl.signed:
                self.report(decl.span, "signed declaration")

        comb_driven: dict[str, Span] = {}
        seq_driven: dict[str, Span] = {}
        clock_edges: dict[str, set] = {}

        for item in self.module.items:
            if isinstance(item, ast.ContinuousAssign):
                self.check_lvalue(item.lhs, procedural=False)
                self.check_expr(item.rhs)
                for name in ast.lvalue_targets(item.lhs):
                    comb_driven.setdefault(name, item.span)
            else:
                clocked = self.check_always(item, clock_edges)
                driven = seq_driven if clocked else comb_driven
                for name in ast.assigned_signals(item.body):
                    driven.setdefault(name, item.span)

        for name, edges in sorted(clock_edges.items()):
            if len(edges) > 1:
                self.report(None, "mixed clock edges", f"unsupported construct: mixed clock edges on '{name}'")

        for name in sorted(set(comb_driven) & set(seq_driven)):
            self.report(
                seq_driven[name],
                "mixed drivers",
                f"unsupported construct: '{name}' is driven by both combinational and clocked logic",
            )
        return self.diagnostics

    def check_always(self, block: ast.AlwaysBlock, clock_edges: dict) -> bool:
        sens = block.sens
        edges = sens.edges
        levels = [e for e in sens.entries if not e.edge]
        clocked = bool(edges)

        if edges and levels:
            self.report(sens.span, "mixed edge and level sensitivity")
        elif len(edges) > 2:
            self.report(sens.span, "more than two edge events in one sensitivity list")
        elif len(edges) == 2:
            roles = edge_roles(block)
            if roles.reset is None:
                self.report(
                    sens.span,
                    "second edge event",
                    "unsupported construct: second edge event is not an asynchronous reset tested by the leading if",
                )
            else:
                expected_high = roles.reset.edge == "posedge"
                if roles.reset_active_high != expected_high:
                    self.report(roles.reset.span, "reset edge does not match its test")
                clock_edges.setdefault(roles.clock.name, set()).add(roles.clock.edge)
        elif len(edges) == 1:
            clock_edges.setdefault(edges[0].name, set()).add(edges[0].edge)
        elif not sens.star:
            reads = statement_reads(block.body, self.params)
            missing = sorted(reads - ast.assigned_signals(block.body) - {e.name for e in levels})
            if missing:
                self.report(
                    sens.span,
                    "incomplete sensitivity list",
                    f"unsupported construct: incomplete sensitivity list (missing {', '.join(missing)})",
                )

        self.check_statement(block.body)
        return clocked

    # -----------------------------
    # Statements and expressions
    # -----------------------------

    def check_statement(self, stmt):
        for s in ast.iter_statements(stmt):
            if isinstance(s, ast.Assign):
                self.check_lvalue(s.lhs, procedural=True)
                self.check_expr(s.rhs)
            elif isinstance(s, ast.If):
                self.check_expr(s.cond)
            elif isinstance(s, ast.Case):
                if s.kind == "casex":
                    self.report(s.head_span or s.span, "casex")
                self.check_expr(s.subject)
                for item in s.items:
                    for label in item.labels:
                        if not ast.is_constant(label, self.params):
                            self.report(label.span, "non-constant case label")
                        self.check_expr(label)

    def check_lvalue(self, lhs, procedural: bool):
        for name in ast.lvalue_targets(lhs):
            if self.directions.get(name) == "input":
                self.report(lhs.span, "assignment to input", f"unsupported construct: assignment to input '{name}'")
            elif procedural and self.kinds.get(name) == "wire":
                self.report(
                    lhs.span,
                    "procedural assignment to wire",
                    f"unsupported construct: procedural assignment to wire '{name}'",
                )
            elif not procedural and self.kinds.get(name) == "reg":
                self.report(
                    lhs.span,
                    "continuous assignment to reg",
                    f"unsupported construct: continuous assignment to reg '{name}'",
                )
        self.check_expr(lhs)

    def check_expr(self, expr):
        for node in ast.iter_subexprs(expr):
            if isinstance(node, ast.BinaryOp) and node.op not in SUPPORTED_BINARY:
                self.report(node.span, f"operator '{node.op}'")
            elif isinstance(node, ast.UnaryOp) and node.op not in SUPPORTED_UNARY:
                self.report(node.span, f"operator '{node.op}'")
            elif isinstance(node, ast.BitSelect):
                if not ast.is_constant(node.index, self.params):
                    self.report(node.span, "non-constant bit-select")
            elif isinstance(node, ast.PartSelect):
                if not (ast.is_constant(node.msb, self.params) and ast.is_constant(node.lsb, self.params)):
                    self.report(node.span, "non-constant part-select")
                else:
                    self.check_part_direction(node)
            elif isinstance(node, ast.Replicate):
                if not ast.is_constant(node.count, self.params):
                    self.report(node.span, "non-constant replication count")
                elif ast.constant_value(node.count, self.params) < 1:
                    self.report(node.span, "replication count below 1")

    def check_part_direction(self, node: ast.PartSelect):
        ranges = self.module.signal_ranges()
        if node.name not in ranges:
            return
        msb, lsb = ranges[node.name]
        hi = ast.constant_value(node.msb, self.params)
        lo = ast.constant_value(node.lsb, self.params)
        if msb != lsb and hi != lo and (hi > lo) != (msb > lsb):
            self.report(node.span, "part-select direction opposite to the declared range")


def supported_subset_check(module: ast.ModuleAst) -> list[Diagnostic]:
    """Diagnostics for every construct outside the simulated subset; [] when clean."""
    diagnostics = _Checker(module).run()
    if diagnostics:
        logger.debug("%s: %d subset diagnostic(s)", module.name, len(diagnostics))
    return diagnostics
