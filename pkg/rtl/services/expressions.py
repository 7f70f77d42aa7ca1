"""
Compile subset expressions and statements to Python closures.

Values are unsigned ints held in a flat list indexed by signal. Expressions
follow Verilog's unsigned width rules: context-determined operands are
evaluated at max(context width, self width), comparison operands at the
wider of the two sides, and shift amounts, reduction and logical operands
at their own width. Statements take (values, nba) where nba collects
nonblocking writes for the caller to apply.
"""

from __future__ import annotations

from typing import Callable

from rtl.services import ast

Eval = Callable[[list], int]
Exec = Callable[[list, list], None]
Write = Callable[[list, int], None]


def mask(width: int) -> int:
    return (1 << width) - 1


class ExpressionCompiler:
    def __init__(self, module: ast.ModuleAst, index: dict):
        self.module = module
        self.index = index
        self.widths = module.signal_widths()
        self.ranges = module.signal_ranges()
        self.params = {p.name: p for p in module.params}
        self.param_values = module.param_values

    # -----------------------------
    # Helpers
    # -----------------------------

    def width_of(self, expr) -> int:
        return ast.self_width(expr, self.widths, self.params)

    def bit_position(self, name: str, i: int) -> int:
        msb, lsb = self.ranges.get(name, (self.params[name].width - 1, 0) if name in self.params else (0, 0))
        return i - lsb if msb >= lsb else lsb - i

    def const(self, expr) -> int:
        return ast.constant_value(expr, self.param_values)

    # -----------------------------
    # Expressions
    # -----------------------------

    def compile(self, expr, context: int = 0) -> Eval:
        """Closure computing expr at width max(context, self width)."""
        width = max(context, self.width_of(expr))
        return self._compile(expr, width)

    def truth(self, expr) -> Eval:
        f = self.compile(expr)
        return lambda v: f(v) != 0

    def _compile(self, expr, width: int) -> Eval:
        m = mask(width)

        if isinstance(expr, ast.Number):
            value = expr.value & m
            return lambda v: value

        if isinstance(expr, ast.Identifier):
            if expr.name in self.params:
                value = self.params[expr.name].value & m
                return lambda v: value
            i = self.index[expr.name]
            return lambda v: v[i]

        if isinstance(expr, ast.UnaryOp):
            return self._unary(expr, width, m)

        if isinstance(expr, ast.BinaryOp):
            return self._binary(expr, width, m)

        if isinstance(expr, ast.Ternary):
            cond = self.truth(expr.cond)
            then = self._compile(expr.then, width)
            other = self._compile(expr.other, width)
            return lambda v: then(v) if cond(v) else other(v)

        if isinstance(expr, ast.Concat):
            return self._concat(expr.parts, 1)

        if isinstance(expr, ast.Replicate):
            return self._concat(expr.parts, self.const(expr.count))

        if isinstance(expr, ast.BitSelect):
            return self._bit_select(expr)

        if isinstance(expr, ast.PartSelect):
            return self._part_select(expr)

        raise TypeError(f"cannot compile {expr!r}")

    def _unary(self, expr: ast.UnaryOp, width: int, m: int) -> Eval:
        op = expr.op
        if op == "~":
            f = self._compile(expr.operand, width)
            return lambda v: ~f(v) & m
        if op == "-":
            f = self._compile(expr.operand, width)
            return lambda v: -f(v) & m
        if op == "+":
            return self._compile(expr.operand, width)

        f = self.compile(expr.operand)
        full = mask(self.width_of(expr.operand))
        if op == "!":
            return lambda v: int(f(v) == 0)
        if op == "&":
            return lambda v: int(f(v) == full)
        if op == "~&":
            return lambda v: int(f(v) != full)
        if op == "|":
            return lambda v: int(f(v) != 0)
        if op == "~|":
            return lambda v: int(f(v) == 0)
        if op == "^":
            return lambda v: f(v).bit_count() & 1
        if op == "~^":
            return lambda v: (f(v).bit_count() & 1) ^ 1
        raise TypeError(f"unknown unary operator {op}")

    def _binary(self, expr: ast.BinaryOp, width: int, m: int) -> Eval:
        op = expr.op

        if op in ast.COMPARISON_OPS:
            cw = max(self.width_of(expr.left), self.width_of(expr.right))
            a = self._compile(expr.left, cw)
            b = self._compile(expr.right, cw)
            if op in ("==", "==="):
                return lambda v: int(a(v) == b(v))
            if op in ("!=", "!=="):
                return lambda v: int(a(v) != b(v))
            if op == "<":
                return lambda v: int(a(v) < b(v))
            if op == "<=":
                return lambda v: int(a(v) <= b(v))
            if op == ">":
                return lambda v: int(a(v) > b(v))
            return lambda v: int(a(v) >= b(v))

        if op in ast.LOGICAL_OPS:
            a = self.truth(expr.left)
            b = self.truth(expr.right)
            if op == "&&":
                return lambda v: int(a(v) and b(v))
            return lambda v: int(a(v) or b(v))

        if op in ast.SHIFT_OPS:
            a = self._compile(expr.left, width)
            b = self.compile(expr.right)
            if op in ("<<", "<<<"):
                return lambda v: (a(v) << s) & m if (s := b(v)) < width else 0
            if op in (">>", ">>>"):
                return lambda v: a(v) >> s if (s := b(v)) < width else 0
            return lambda v: pow(a(v), b(v), 1 << width)

        a = self._compile(expr.left, width)
        b = self._compile(expr.right, width)
        if op == "+":
            return lambda v: (a(v) + b(v)) & m
        if op == "-":
            return lambda v: (a(v) - b(v)) & m
        if op == "*":
            return lambda v: (a(v) * b(v)) & m
        if op == "/":
            return lambda v: a(v) // d if (d := b(v)) else 0
        if op == "%":
            return lambda v: a(v) % d if (d := b(v)) else 0
        if op == "&":
            return lambda v: a(v) & b(v)
        if op == "|":
            return lambda v: a(v) | b(v)
        if op == "^":
            return lambda v: a(v) ^ b(v)
        if op == "~^":
            return lambda v: ~(a(v) ^ b(v)) & m
        raise TypeError(f"unknown binary operator {op}")

    def _concat(self, parts, count: int) -> Eval:
        compiled = [(self.compile(p), self.width_of(p)) for p in parts]
        unit = sum(w for _, w in compiled)

        def once(v):
            acc = 0
            for f, w in compiled:
                acc = (acc << w) | f(v)
            return acc

        if count == 1:
            return once

        def repeated(v):
            value = once(v)
            acc = 0
            for _ in range(count):
                acc = (acc << unit) | value
            return acc

        return repeated

    def _source(self, name: str) -> Eval:
        if name in self.params:
            value = self.params[name].value
            return lambda v: value
        i = self.index[name]
        return lambda v: v[i]

    def _bit_select(self, expr: ast.BitSelect) -> Eval:
        src = self._source(expr.name)
        limit = self.widths.get(expr.name) or self.params[expr.name].width
        if ast.is_constant(expr.index, self.param_values):
            pos = self.bit_position(expr.name, self.const(expr.index))
            if not 0 <= pos < limit:
                return lambda v: 0
            return lambda v: (src(v) >> pos) & 1
        index = self.compile(expr.index)
        name = expr.name

        def dynamic(v):
            p = self.bit_position(name, index(v))
            return (src(v) >> p) & 1 if 0 <= p < limit else 0

        return dynamic

    def _part_select(self, expr: ast.PartSelect) -> Eval:
        src = self._source(expr.name)
        a = self.bit_position(expr.name, self.const(expr.msb))
        b = self.bit_position(expr.name, self.const(expr.lsb))
        lo, hi = min(a, b), max(a, b)
        m = mask(hi - lo + 1)
        if lo < 0:
            return lambda v: (src(v) << -lo) & m
        return lambda v: (src(v) >> lo) & m

    # -----------------------------
    # Assignment targets
    # -----------------------------

    def lvalue(self, lhs) -> tuple[Write, int]:
        """(writer, total width) for an assignment target."""
        if isinstance(lhs, ast.Concat):
            writers = [self.lvalue(p) for p in lhs.parts]
            total = sum(w for _, w in writers)

            def write_concat(v, value):
                shift = total
                for write, w in writers:
                    shift -= w
                    write(v, (value >> shift) & mask(w))

            return write_concat, total

        name = lhs.name
        i = self.index[name]
        full = mask(self.widths[name])

        if isinstance(lhs, ast.Identifier):
            def write_whole(v, value):
                v[i] = value & full

            return write_whole, self.widths[name]

        if isinstance(lhs, ast.BitSelect):
            if ast.is_constant(lhs.index, self.param_values):
                return self._field_writer(i, self.bit_position(name, self.const(lhs.index)), 1, full), 1
            index = self.compile(lhs.index)

            def write_dynamic(v, value):
                p = self.bit_position(name, index(v))
                if 0 <= p < self.widths[name]:
                    v[i] = (v[i] & ~(1 << p) & full) | ((value & 1) << p)

            return write_dynamic, 1

        a = self.bit_position(name, self.const(lhs.msb))
        b = self.bit_position(name, self.const(lhs.lsb))
        lo, hi = min(a, b), max(a, b)
        return self._field_writer(i, lo, hi - lo + 1, full), hi - lo + 1

    @staticmethod
    def _field_writer(i: int, lo: int, width: int, full: int) -> Write:
        if lo < 0:
            width += lo
            drop = -lo
            lo = 0
        else:
            drop = 0
        if width <= 0:
            return lambda v, value: None
        field_mask = mask(width) << lo

        def write_field(v, value):
            v[i] = ((v[i] & ~field_mask) | (((value >> drop) << lo) & field_mask)) & full

        return write_field

    # -----------------------------
    # Statements
    # -----------------------------

    def statement(self, stmt) -> Exec:
        if isinstance(stmt, ast.Assign):
            write, width = self.lvalue(stmt.lhs)
            rhs = self.compile(stmt.rhs, width)
            if stmt.blocking:
                def blocking(v, nba):
                    write(v, rhs(v))

                return blocking

            def nonblocking(v, nba):
                nba.append((write, rhs(v)))

            return nonblocking

        if isinstance(stmt, ast.Block):
            body = [self.statement(s) for s in stmt.stmts]

            def block(v, nba):
                for s in body:
                    s(v, nba)

            return block

        if isinstance(stmt, ast.If):
            cond = self.truth(stmt.cond)
            then = self.statement(stmt.then)
            if stmt.other is None:
                def if_then(v, nba):
                    if cond(v):
                        then(v, nba)

                return if_then
            other = self.statement(stmt.other)

            def if_else(v, nba):
                if cond(v):
                    then(v, nba)
                else:
                    other(v, nba)

            return if_else

        if isinstance(stmt, ast.Case):
            return self._case(stmt)

        return lambda v, nba: None

    def _case(self, stmt: ast.Case) -> Exec:
        cw = max([self.width_of(stmt.subject)] + [self.width_of(l) for item in stmt.items for l in item.labels])
        subject = self._compile(stmt.subject, cw)
        wildcards = stmt.kind == "casez"
        arms = []
        default = None
        for item in stmt.items:
            body = self.statement(item.body)
            if item.is_default:
                default = body
                continue
            tests = []
            for label in item.labels:
                care = mask(cw)
                if wildcards and isinstance(label, ast.Number) and label.wildcard:
                    care &= ~label.wildcard
                if ast.is_constant(label, self.param_values):
                    tests.append((None, self.const(label) & mask(cw) & care, care))
                else:
                    tests.append((self._compile(label, cw), None, care))
            arms.append((tests, body))

        def case(v, nba):
            s = subject(v)
            for tests, body in arms:
                for f, const, care in tests:
                    value = const if f is None else f(v)
                    if (s & care) == (value & care):
                        body(v, nba)
                        return
            if default is not None:
                default(v, nba)

        return case


def exposed_reads(stmt, params) -> set:
    """
    Signals a statement may read before writing them in the same execution.

    Whole-signal blocking assignments on every path shadow later reads.
    """
    exposed: set = set()

    def walk(s, assigned: frozenset) -> frozenset:
        if isinstance(s, ast.Assign):
            exposed.update(ast.expr_reads(s.rhs, params) - assigned)
            exposed.update(ast.lvalue_index_reads(s.lhs, params) - assigned)
            if s.blocking and isinstance(s.lhs, ast.Identifier):
                return assigned | {s.lhs.name}
            return assigned
        if isinstance(s, ast.Block):
            for child in s.stmts:
                assigned = walk(child, assigned)
            return assigned
        if isinstance(s, ast.If):
            exposed.update(ast.expr_reads(s.cond, params) - assigned)
            then = walk(s.then, assigned)
            if s.other is None:
                return assigned
            return then & walk(s.other, assigned)
        if isinstance(s, ast.Case):
            exposed.update(ast.expr_reads(s.subject, params) - assigned)
            for item in s.items:
                for label in item.labels:
                    exposed.update(ast.expr_reads(label, params) - assigned)
            branches = [walk(item.body, assigned) for item in s.items]
            if not any(item.is_default for item in s.items):
                return assigned
            result = branches[0]
            for b in branches[1:]:
                result = result & b
            return result
        return assigned

    walk(stmt, frozenset())
    return exposed
