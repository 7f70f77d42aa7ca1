"""
Recursive-descent parser for the synthesizable Verilog subset.

Tokens come from the ply lexer; the parser builds rtl.services.ast nodes with
byte-exact spans, resolves names against the module's ports, nets and
parameters, and enforces the 64-bit width ceiling. Whole module items that
fall outside the subset but can be skipped (initial blocks, instances,
functions, ...) become UnsupportedItem entries for supported_subset_check;
anything that cannot be skipped raises UnsupportedConstruct here.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Optional

from rtl.services import ast
from rtl.services.errors import (
    FrontendError,
    MultipleModules,
    UnresolvedIdentifier,
    UnsupportedConstruct,
    VerilogSyntaxError,
    WidthOverflow,
)
from rtl.services.lexer import token_end, tokenize
from rtl.services.source import SourceText, Span, normalize_source

logger = logging.getLogger(__name__)

MAX_WIDTH = 64
UNSIZED_WIDTH = 32

BINARY_OPS = {
    "LOR": ("||", 1),
    "LAND": ("&&", 2),
    "BAR": ("|", 3),
    "CARET": ("^", 4),
    "XNOR": ("~^", 4),
    "AMP": ("&", 5),
    "EQ": ("==", 6),
    "NE": ("!=", 6),
    "CASE_EQ": ("===", 6),
    "CASE_NE": ("!==", 6),
    "LT": ("<", 7),
    "LE": ("<=", 7),
    "GT": (">", 7),
    "GE": (">=", 7),
    "LSHIFT": ("<<", 8),
    "RSHIFT": (">>", 8),
    "LSHIFTA": ("<<<", 8),
    "RSHIFTA": (">>>", 8),
    "PLUS": ("+", 9),
    "MINUS": ("-", 9),
    "STAR": ("*", 10),
    "SLASH": ("/", 10),
    "PERCENT": ("%", 10),
    "POWER": ("**", 11),
}

UNARY_OPS = {
    "PLUS": "+",
    "MINUS": "-",
    "BANG": "!",
    "TILDE": "~",
    "AMP": "&",
    "BAR": "|",
    "CARET": "^",
    "NAND": "~&",
    "NOR": "~|",
    "XNOR": "~^",
}

SKIP_TO_END = {
    "FUNCTION": ("ENDFUNCTION", "function"),
    "TASK": ("ENDTASK", "task"),
    "GENERATE": ("ENDGENERATE", "generate"),
}

SKIP_TO_SEMI = {
    "GENVAR": "genvar",
    "INTEGER": "integer",
    "REAL": "real",
}

_BASE_BITS = {"b": 1, "o": 3, "h": 4}


class Parser:
    def __init__(self, source: SourceText):
        self.source = source
        self.tokens, self.trivia = tokenize(source)
        self.pos = 0
        self.last = None
        self.params: dict[str, ast.Param] = {}

    # -----------------------------
    # Token plumbing
    # -----------------------------

    def peek(self, offset: int = 0):
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, *types: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.type in types

    def advance(self):
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self.pos += 1
        self.last = tok
        return tok

    def accept(self, type_: str):
        if self.at(type_):
            return self.advance()
        return None

    def expect(self, type_: str, what: Optional[str] = None):
        if not self.at(type_):
            found = self.peek()
            shown = repr(found.value) if found is not None else "end of input"
            raise self.error(f"expected {what or type_.lower()}, found {shown}")
        return self.advance()

    def position(self, tok=None) -> tuple[int, int]:
        offset = tok.lexpos if tok is not None else len(self.source)
        return self.source.line_col(offset)

    def error(self, message: str, tok=None) -> VerilogSyntaxError:
        if tok is None:
            tok = self.peek()
        line, col = self.position(tok)
        return VerilogSyntaxError(message, origin=self.source.origin, line=line, col=col)

    def unsupported(self, construct: str, tok=None) -> UnsupportedConstruct:
        if tok is None:
            tok = self.peek()
        line, col = self.position(tok)
        return UnsupportedConstruct(construct, origin=self.source.origin, line=line, col=col)

    def at_offset(self, error_cls, offset: int, *args, **kwargs) -> FrontendError:
        line, col = self.source.line_col(offset)
        return error_cls(*args, origin=self.source.origin, line=line, col=col, **kwargs)

    def span_from(self, start: int) -> Span:
        return Span(start, token_end(self.last))

    # -----------------------------
    # Module
    # -----------------------------

    def parse(self) -> ast.ModuleAst:
        if not self.tokens:
            raise self.error("no module definition found")
        if self.at("SV_KEYWORD"):
            raise self.unsupported(f"SystemVerilog keyword '{self.peek().value}'")
        module_tok = self.expect("MODULE", "'module'")
        self.expect("ID", "module name")
        name = self.last.value
        name_span = self.span_from(module_tok.lexpos)

        param_decls = []
        param_list_span = None
        if self.at("HASH"):
            hash_tok = self.advance()
            self.expect("LPAREN", "'('")
            params = self.parse_param_assignments(header=True)
            self.expect("RPAREN", "')'")
            param_list_span = self.span_from(hash_tok.lexpos)
            param_decls.append(ast.ParamDecl(tuple(params), span=param_list_span))

        ansi = True
        port_groups = []
        header_names = []
        open_span = close_span = None
        if self.at("LPAREN"):
            open_tok = self.advance()
            open_span = Span(open_tok.lexpos, token_end(open_tok))
            if self.at("INPUT", "OUTPUT", "INOUT"):
                port_groups = self.parse_ansi_ports()
            elif self.at("ID"):
                ansi = False
                header_names = self.parse_header_names()
            close_tok = self.expect("RPAREN", "')'")
            close_span = Span(close_tok.lexpos, token_end(close_tok))
        self.expect("SEMI", "';'")
        header_span = self.span_from(module_tok.lexpos)

        decls = []
        items = []
        unsupported = []
        while not self.at("ENDMODULE"):
            tok = self.peek()
            if tok is None:
                raise self.error("missing 'endmodule'")
            kind = tok.type
            if kind in ("INPUT", "OUTPUT", "INOUT"):
                if ansi and port_groups:
                    raise self.error(f"port declaration '{tok.value}' in a module with an ANSI header")
                ansi = False
                port_groups.append(self.parse_port_statement())
            elif kind in ("WIRE", "REG"):
                decl, decl_assigns = self.parse_net_decl()
                decls.append(decl)
                items.extend(decl_assigns)
            elif kind in ("PARAMETER", "LOCALPARAM"):
                param_decls.append(self.parse_param_decl())
            elif kind == "ASSIGN":
                items.append(self.parse_continuous_assign())
            elif kind == "ALWAYS":
                items.append(self.parse_always())
            elif kind == "INITIAL":
                start = self.advance().lexpos
                self.skip_statement()
                unsupported.append(ast.UnsupportedItem("initial", span=self.span_from(start)))
            elif kind in SKIP_TO_END:
                end_type, construct = SKIP_TO_END[kind]
                start = self.advance().lexpos
                while not self.at(end_type):
                    self.advance()
                self.advance()
                unsupported.append(ast.UnsupportedItem(construct, span=self.span_from(start)))
            elif kind in SKIP_TO_SEMI:
                start = self.advance().lexpos
                self.skip_to_semi()
                unsupported.append(ast.UnsupportedItem(SKIP_TO_SEMI[kind], span=self.span_from(start)))
            elif kind == "ID" and self.peek(1) is not None and self.peek(1).type in ("ID", "HASH"):
                start = self.advance().lexpos
                self.skip_to_semi()
                unsupported.append(ast.UnsupportedItem("instantiation", span=self.span_from(start)))
            elif kind == "MODULE":
                line, col = self.position(tok)
                raise MultipleModules(
                    "module definition inside a module (missing 'endmodule'?)",
                    origin=self.source.origin,
                    line=line,
                    col=col,
                )
            elif kind == "SV_KEYWORD":
                raise self.unsupported(f"SystemVerilog keyword '{tok.value}'")
            elif kind == "TRI":
                raise self.unsupported(f"net type '{tok.value}'")
            else:
                raise self.error(f"unexpected {tok.value!r} at module level")

        end_tok = self.advance()
        end_span = Span(end_tok.lexpos, token_end(end_tok))
        trailing = self.peek()
        if trailing is not None:
            if trailing.type == "MODULE":
                line, col = self.position(trailing)
                raise MultipleModules(
                    "more than one module definition",
                    origin=self.source.origin,
                    line=line,
                    col=col,
                )
            raise self.error(f"unexpected {trailing.value!r} after 'endmodule'", trailing)

        ports = self.collect_ports(ansi, port_groups, header_names, decls)
        module = ast.ModuleAst(
            name=name,
            ports=tuple(ports),
            decls=tuple(decls),
            items=tuple(sorted(items, key=lambda it: it.span.start)),
            params=tuple(self.params.values()),
            param_decls=tuple(param_decls),
            port_groups=tuple(port_groups),
            unsupported=tuple(unsupported),
            ansi=ansi,
            header_names=tuple(header_names),
            name_span=name_span,
            param_list_span=param_list_span,
            header_span=header_span,
            ports_open_span=open_span,
            ports_close_span=close_span,
            end_span=end_span,
            trivia=tuple(self.trivia),
            source=self.source,
            span=Span(module_tok.lexpos, end_span.end),
        )
        self.resolve(module)
        return module

    # -----------------------------
    # Parameters
    # -----------------------------

    def parse_param_assignments(self, header: bool) -> list:
        params = []
        local = False
        while True:
            if self.at("PARAMETER", "LOCALPARAM"):
                local = self.advance().type == "LOCALPARAM"
            elif not params and not header:
                raise self.error("expected 'parameter'")
            self.accept("INTEGER")
            self.accept("SIGNED")
            width = UNSIZED_WIDTH
            if self.at("LBRACKET"):
                msb, lsb = self.parse_range()
                width = ast.range_width(msb, lsb)
            name_tok = self.expect("ID", "parameter name")
            self.check_fresh(name_tok)
            self.expect("EQUALS", "'='")
            expr = self.parse_expr()
            value = self.const(expr, "parameter value")
            param = ast.Param(
                name_tok.value,
                value & ((1 << width) - 1),
                width,
                local,
                span=Span(name_tok.lexpos, expr.span.end),
            )
            self.params[param.name] = param
            params.append(param)
            if not self.accept("COMMA"):
                return params

    def parse_param_decl(self) -> ast.ParamDecl:
        start = self.peek()
        local = start.type == "LOCALPARAM"
        params = self.parse_param_assignments(header=False)
        self.expect("SEMI", "';'")
        return ast.ParamDecl(tuple(params), local, span=self.span_from(start.lexpos))

    # -----------------------------
    # Ports and declarations
    # -----------------------------

    def parse_port_head(self):
        """direction [wire|reg] [signed] [range] -> (direction, kind, signed, msb, lsb, head span)."""
        dir_tok = self.advance()
        if dir_tok.type == "INOUT":
            raise self.unsupported("inout port", dir_tok)
        kind = None
        if self.at("WIRE", "REG"):
            kind = self.advance().value
        elif self.at("TRI", "SV_KEYWORD", "INTEGER"):
            raise self.unsupported(f"port type '{self.peek().value}'")
        signed = self.accept("SIGNED") is not None
        msb = lsb = None
        if self.at("LBRACKET"):
            msb, lsb = self.parse_range()
        return dir_tok.value, kind, signed, msb, lsb, self.span_from(dir_tok.lexpos)

    def parse_ansi_ports(self) -> list:
        groups = []
        head = None
        declarators = []
        start = None

        def close_group():
            direction, kind, signed, msb, lsb, head_span = head
            groups.append(
                ast.PortGroup(
                    direction,
                    kind,
                    msb,
                    lsb,
                    signed,
                    tuple(declarators),
                    head_span=head_span,
                    span=Span(start, declarators[-1].span.end),
                )
            )

        while True:
            if self.at("INPUT", "OUTPUT", "INOUT"):
                if head is not None:
                    close_group()
                start = self.peek().lexpos
                head = self.parse_port_head()
                declarators = []
            name_tok = self.expect("ID", "port name")
            if self.at("EQUALS"):
                raise self.unsupported("port initializer")
            declarators.append(ast.Declarator(name_tok.value, span=Span(name_tok.lexpos, token_end(name_tok))))
            if not self.accept("COMMA"):
                break
        close_group()
        return groups

    def parse_header_names(self) -> list:
        names = []
        while True:
            tok = self.expect("ID", "port name")
            names.append(ast.HeaderName(tok.value, span=Span(tok.lexpos, token_end(tok))))
            if not self.accept("COMMA"):
                return names

    def parse_port_statement(self) -> ast.PortGroup:
        start = self.peek().lexpos
        direction, kind, signed, msb, lsb, head_span = self.parse_port_head()
        declarators = []
        while True:
            tok = self.expect("ID", "port name")
            declarators.append(ast.Declarator(tok.value, span=Span(tok.lexpos, token_end(tok))))
            if not self.accept("COMMA"):
                break
        semi = self.expect("SEMI", "';'")
        return ast.PortGroup(
            direction,
            kind,
            msb,
            lsb,
            signed,
            tuple(declarators),
            head_span=head_span,
            semi_span=Span(semi.lexpos, token_end(semi)),
            span=self.span_from(start),
        )

    def parse_net_decl(self):
        kind_tok = self.advance()
        signed = self.accept("SIGNED") is not None
        msb = lsb = None
        if self.at("LBRACKET"):
            msb, lsb = self.parse_range()
        if self.at("HASH"):
            raise self.unsupported("delay")
        head_span = self.span_from(kind_tok.lexpos)
        declarators = []
        assigns = []
        while True:
            name_tok = self.expect("ID", "net name")
            name_span = Span(name_tok.lexpos, token_end(name_tok))
            if self.at("LBRACKET"):
                raise self.unsupported("memory array")
            init = None
            init_span = None
            if self.at("EQUALS"):
                eq_tok = self.advance()
                if kind_tok.type == "REG":
                    raise self.unsupported("variable initializer", eq_tok)
                init = self.parse_expr()
                init_span = Span(eq_tok.lexpos, init.span.end)
                assigns.append(
                    ast.ContinuousAssign(
                        ast.Identifier(name_tok.value, span=name_span),
                        init,
                        init_span=init_span,
                        span=Span(name_tok.lexpos, init.span.end),
                    )
                )
            declarators.append(
                ast.Declarator(
                    name_tok.value,
                    init,
                    init_span=init_span,
                    span=Span(name_tok.lexpos, (init_span or name_span).end),
                )
            )
            if not self.accept("COMMA"):
                break
        semi = self.expect("SEMI", "';'")
        decl = ast.NetDecl(
            kind_tok.value,
            msb,
            lsb,
            signed,
            tuple(declarators),
            head_span=head_span,
            semi_span=Span(semi.lexpos, token_end(semi)),
            span=self.span_from(kind_tok.lexpos),
        )
        return decl, assigns

    def parse_range(self) -> tuple[int, int]:
        lb = self.expect("LBRACKET", "'['")
        msb = self.const(self.parse_expr(), "range bound")
        self.expect("COLON", "':'")
        lsb = self.const(self.parse_expr(), "range bound")
        self.expect("RBRACKET", "']'")
        if abs(msb - lsb) + 1 > MAX_WIDTH:
            raise self.at_offset(
                WidthOverflow,
                lb.lexpos,
                f"range [{msb}:{lsb}] is {abs(msb - lsb) + 1} bits wide (limit {MAX_WIDTH})",
            )
        return msb, lsb

    def const(self, expr, what: str) -> int:
        try:
            return ast.constant_value(expr, {name: p.value for name, p in self.params.items()})
        except ast.ConstantTooWide as e:
            raise self.at_offset(
                WidthOverflow, expr.span.start, f"{what} {e} exceeds {ast.CONST_BITS} bits"
            ) from None
        except ast.NotConstant:
            raise self.at_offset(
                UnsupportedConstruct, expr.span.start, f"non-constant {what}"
            ) from None

    def check_fresh(self, name_tok):
        if name_tok.value in self.params:
            raise self.error(f"duplicate declaration of '{name_tok.value}'", name_tok)

    def collect_ports(self, ansi, port_groups, header_names, decls) -> list:
        net_ranges = {}
        net_kinds = {}
        seen_nets = set()
        for decl in decls:
            for d in decl.declarators:
                if d.name in seen_nets or d.name in self.params:
                    raise self.at_offset(
                        VerilogSyntaxError, d.span.start, f"duplicate declaration of '{d.name}'"
                    )
                seen_nets.add(d.name)
                net_kinds[d.name] = decl.kind
                if decl.msb is not None:
                    net_ranges[d.name] = (decl.msb, decl.lsb)

        declared = {}
        for group in port_groups:
            for d in group.declarators:
                if d.name in declared or d.name in self.params:
                    raise self.at_offset(
                        VerilogSyntaxError, d.span.start, f"duplicate port declaration of '{d.name}'"
                    )
                declared[d.name] = (group, d)

        if ansi:
            order = [d.name for g in port_groups for d in g.declarators]
            for name in order:
                group, d = declared[name]
                # `output y` followed by `reg y;` is tolerated; a typed port is not redeclarable
                if name in seen_nets and group.kind is not None:
                    raise self.at_offset(
                        VerilogSyntaxError, d.span.start, f"port '{name}' redeclared in the module body"
                    )
        else:
            order = [h.name for h in header_names]
            listed = set(order)
            for name, (group, d) in declared.items():
                if name not in listed:
                    raise self.at_offset(
                        VerilogSyntaxError, d.span.start, f"'{name}' is not in the port list"
                    )
            for h in header_names:
                if h.name not in declared:
                    raise self.at_offset(
                        VerilogSyntaxError, h.span.start, f"port '{h.name}' has no direction declaration"
                    )

        ports = []
        for name in order:
            group, d = declared[name]
            if group.msb is not None:
                msb, lsb = group.msb, group.lsb
            else:
                msb, lsb = net_ranges.get(name, (0, 0))
            kind = group.kind or net_kinds.get(name, "wire")
            ports.append(
                ast.PortDecl(
                    name,
                    group.direction,
                    abs(msb - lsb) + 1,
                    kind,
                    msb,
                    lsb,
                    group.signed,
                    span=d.span,
                )
            )
        return ports

    # -----------------------------
    # Items
    # -----------------------------

    def parse_continuous_assign(self) -> ast.ContinuousAssign:
        start = self.advance().lexpos
        if self.at("HASH"):
            raise self.unsupported("delay")
        if self.at("LPAREN"):
            raise self.unsupported("drive strength")
        lhs = self.parse_lvalue()
        self.expect("EQUALS", "'='")
        rhs = self.parse_expr()
        if self.at("COMMA"):
            raise self.unsupported("multiple assignments in one assign statement")
        self.expect("SEMI", "';'")
        return ast.ContinuousAssign(lhs, rhs, span=self.span_from(start))

    def parse_always(self) -> ast.AlwaysBlock:
        always_tok = self.advance()
        if self.at("HASH"):
            raise self.unsupported("delay")
        if not self.at("AT"):
            raise self.unsupported("always block without event control")
        sens_start = self.advance().lexpos
        if self.accept("STAR"):
            sens = ast.Sensitivity(True, span=self.span_from(sens_start))
        else:
            self.expect("LPAREN", "'('")
            if self.at("STAR") and self.peek(1) is not None and self.peek(1).type == "RPAREN":
                self.advance()
                self.advance()
                sens = ast.Sensitivity(True, span=self.span_from(sens_start))
            else:
                entries = [self.parse_sens_entry()]
                while self.accept("KW_OR") or self.accept("COMMA"):
                    entries.append(self.parse_sens_entry())
                self.expect("RPAREN", "')'")
                sens = ast.Sensitivity(False, tuple(entries), span=self.span_from(sens_start))
        head_span = self.span_from(always_tok.lexpos)
        body = self.parse_statement()
        return ast.AlwaysBlock(sens, body, head_span=head_span, span=self.span_from(always_tok.lexpos))

    def parse_sens_entry(self) -> ast.SensEntry:
        start = self.peek()
        edge = None
        if self.at("POSEDGE", "NEGEDGE"):
            edge = self.advance().value
        name_tok = self.expect("ID", "signal name")
        if self.at("LBRACKET"):
            raise self.unsupported("select in sensitivity list")
        return ast.SensEntry(name_tok.value, edge, span=self.span_from(start.lexpos))

    # -----------------------------
    # Statements
    # -----------------------------

    def parse_statement(self):
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input in statement")
        kind = tok.type
        if kind == "BEGIN":
            return self.parse_block()
        if kind == "IF":
            return self.parse_if()
        if kind in ("CASE", "CASEZ", "CASEX"):
            return self.parse_case()
        if kind == "SEMI":
            self.advance()
            return ast.NullStmt(span=Span(tok.lexpos, token_end(tok)))
        if kind in ("ID", "LBRACE"):
            return self.parse_assignment()
        if kind in ("FOR", "WHILE", "REPEAT", "FOREVER"):
            raise self.unsupported(f"'{tok.value}' loop")
        if kind == "FORK":
            raise self.unsupported("fork/join")
        if kind == "SYSID":
            raise self.unsupported(f"system task {tok.value}")
        if kind == "HASH":
            raise self.unsupported("delay")
        if kind == "AT":
            raise self.unsupported("event control inside a procedural block")
        if kind == "ASSIGN":
            raise self.unsupported("procedural continuous assignment")
        if kind == "SV_KEYWORD":
            raise self.unsupported(f"SystemVerilog keyword '{tok.value}'")
        if kind in ("REG", "WIRE", "INTEGER"):
            raise self.unsupported("declaration inside a procedural block")
        raise self.error(f"unexpected {tok.value!r} in statement")

    def parse_assignment(self) -> ast.Assign:
        start = self.peek().lexpos
        lhs = self.parse_lvalue()
        if self.accept("EQUALS"):
            blocking = True
        elif self.accept("LE"):
            blocking = False
        else:
            raise self.error("expected '=' or '<='")
        if self.at("HASH"):
            raise self.unsupported("intra-assignment delay")
        rhs = self.parse_expr()
        self.expect("SEMI", "';'")
        return ast.Assign(lhs, rhs, blocking, span=self.span_from(start))

    def parse_block(self) -> ast.Block:
        begin_tok = self.advance()
        label = None
        if self.accept("COLON"):
            label = self.expect("ID", "block label").value
        begin_span = self.span_from(begin_tok.lexpos)
        stmts = []
        while not self.at("END"):
            if self.peek() is None:
                raise self.error("missing 'end'")
            stmts.append(self.parse_statement())
        end_tok = self.advance()
        return ast.Block(
            tuple(stmts),
            label,
            begin_span=begin_span,
            end_span=Span(end_tok.lexpos, token_end(end_tok)),
            span=self.span_from(begin_tok.lexpos),
        )

    def parse_if(self) -> ast.If:
        if_tok = self.advance()
        self.expect("LPAREN", "'('")
        cond = self.parse_expr()
        self.expect("RPAREN", "')'")
        head_span = self.span_from(if_tok.lexpos)
        then = self.parse_statement()
        other = None
        else_span = None
        if self.at("ELSE"):
            else_tok = self.advance()
            else_span = Span(else_tok.lexpos, token_end(else_tok))
            other = self.parse_statement()
        return ast.If(
            cond,
            then,
            other,
            head_span=head_span,
            else_span=else_span,
            span=self.span_from(if_tok.lexpos),
        )

    def parse_case(self) -> ast.Case:
        case_tok = self.advance()
        self.expect("LPAREN", "'('")
        subject = self.parse_expr()
        self.expect("RPAREN", "')'")
        head_span = self.span_from(case_tok.lexpos)
        items = []
        has_default = False
        while not self.at("ENDCASE"):
            start = self.peek()
            if start is None:
                raise self.error("missing 'endcase'")
            if start.type == "DEFAULT":
                if has_default:
                    raise self.error("more than one default item")
                has_default = True
                self.advance()
                self.accept("COLON")
                labels = ()
            else:
                labels = [self.parse_expr()]
                while self.accept("COMMA"):
                    labels.append(self.parse_expr())
                self.expect("COLON", "':'")
                labels = tuple(labels)
            label_span = self.span_from(start.lexpos)
            body = self.parse_statement()
            items.append(
                ast.CaseItem(labels, body, label_span=label_span, span=self.span_from(start.lexpos))
            )
        end_tok = self.advance()
        return ast.Case(
            case_tok.value,
            subject,
            tuple(items),
            head_span=head_span,
            end_span=Span(end_tok.lexpos, token_end(end_tok)),
            span=self.span_from(case_tok.lexpos),
        )

    # -----------------------------
    # Expressions
    # -----------------------------

    def parse_lvalue(self):
        tok = self.peek()
        if tok is not None and tok.type == "LBRACE":
            self.advance()
            parts = [self.parse_lvalue()]
            while self.accept("COMMA"):
                parts.append(self.parse_lvalue())
            self.expect("RBRACE", "'}'")
            return ast.Concat(tuple(parts), span=self.span_from(tok.lexpos))
        name_tok = self.expect("ID", "assignment target")
        return self.parse_selects(name_tok)

    def parse_selects(self, name_tok):
        ident = ast.Identifier(name_tok.value, span=Span(name_tok.lexpos, token_end(name_tok)))
        if not self.at("LBRACKET"):
            return ident
        self.check_indexed_part_select()
        self.advance()
        first = self.parse_expr()
        if self.accept("COLON"):
            second = self.parse_expr()
            self.expect("RBRACKET", "']'")
            node = ast.PartSelect(name_tok.value, first, second, span=self.span_from(name_tok.lexpos))
        else:
            self.expect("RBRACKET", "']'")
            node = ast.BitSelect(name_tok.value, first, span=self.span_from(name_tok.lexpos))
        if self.at("LBRACKET"):
            raise self.unsupported("multi-dimensional select")
        return node

    def check_indexed_part_select(self):
        depth = 0
        i = self.pos
        while i + 1 < len(self.tokens):
            tok = self.tokens[i]
            if tok.type == "LBRACKET":
                depth += 1
            elif tok.type == "RBRACKET":
                depth -= 1
                if depth == 0:
                    return
            elif depth == 1 and tok.type in ("PLUS", "MINUS") and self.tokens[i + 1].type == "COLON":
                raise self.unsupported("indexed part-select", tok)
            i += 1

    def parse_expr(self):
        cond = self.parse_binary(1)
        if not self.at("QUESTION"):
            return cond
        self.advance()
        then = self.parse_expr()
        self.expect("COLON", "':'")
        other = self.parse_expr()
        return ast.Ternary(cond, then, other, span=Span(cond.span.start, other.span.end))

    def parse_binary(self, min_prec: int):
        left = self.parse_unary()
        while True:
            tok = self.peek()
            entry = BINARY_OPS.get(tok.type) if tok is not None else None
            if entry is None or entry[1] < min_prec:
                return left
            op, prec = entry
            self.advance()
            right = self.parse_binary(prec + 1)
            left = ast.BinaryOp(op, left, right, span=Span(left.span.start, right.span.end))

    def parse_unary(self):
        tok = self.peek()
        if tok is not None and tok.type in UNARY_OPS:
            self.advance()
            operand = self.parse_unary()
            return ast.UnaryOp(UNARY_OPS[tok.type], operand, span=Span(tok.lexpos, operand.span.end))
        return self.parse_primary()

    def parse_primary(self):
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input in expression")
        kind = tok.type
        if kind == "NUMBER":
            self.advance()
            return self.make_number(tok)
        if kind == "ID":
            self.advance()
            if self.at("LPAREN"):
                raise self.unsupported(f"function call '{tok.value}'", tok)
            return self.parse_selects(tok)
        if kind == "LPAREN":
            self.advance()
            inner = self.parse_expr()
            self.expect("RPAREN", "')'")
            return replace(inner, span=self.span_from(tok.lexpos))
        if kind == "LBRACE":
            return self.parse_concat()
        if kind == "SYSID":
            raise self.unsupported(f"system function {tok.value}")
        if kind == "STRING":
            raise self.unsupported("string literal")
        if kind == "HASH":
            raise self.unsupported("delay")
        raise self.error(f"unexpected {tok.value!r} in expression")

    def parse_concat(self):
        lb = self.advance()
        first = self.parse_expr()
        if self.at("LBRACE"):
            self.advance()
            parts = [self.parse_expr()]
            while self.accept("COMMA"):
                parts.append(self.parse_expr())
            self.expect("RBRACE", "'}'")
            self.expect("RBRACE", "'}'")
            return ast.Replicate(first, tuple(parts), span=self.span_from(lb.lexpos))
        parts = [first]
        while self.accept("COMMA"):
            parts.append(self.parse_expr())
        self.expect("RBRACE", "'}'")
        return ast.Concat(tuple(parts), span=self.span_from(lb.lexpos))

    def make_number(self, tok) -> ast.Number:
        span = Span(tok.lexpos, token_end(tok))
        try:
            value, width, sized, wildcard = decode_number(tok.value)
        except ValueError as e:
            raise self.error(str(e), tok) from None
        if width > MAX_WIDTH:
            raise self.at_offset(
                WidthOverflow, tok.lexpos, f"literal {tok.value} is {width} bits wide (limit {MAX_WIDTH})"
            )
        return ast.Number(value, width, sized, wildcard, span=span)

    # -----------------------------
    # Skipping opaque items
    # -----------------------------

    def skip_to_semi(self):
        depth = 0
        while True:
            tok = self.advance()
            if tok.type in ("LPAREN", "LBRACE", "LBRACKET"):
                depth += 1
            elif tok.type in ("RPAREN", "RBRACE", "RBRACKET"):
                depth -= 1
            elif tok.type == "SEMI" and depth <= 0:
                return

    def skip_parens(self):
        self.expect("LPAREN", "'('")
        depth = 1
        while depth:
            tok = self.advance()
            if tok.type == "LPAREN":
                depth += 1
            elif tok.type == "RPAREN":
                depth -= 1

    def skip_statement(self):
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        kind = tok.type
        if kind in ("BEGIN", "FORK"):
            closer = "END" if kind == "BEGIN" else "JOIN"
            depth = 0
            while True:
                t = self.advance()
                if t.type == kind:
                    depth += 1
                elif t.type == closer:
                    depth -= 1
                    if depth == 0:
                        return
        elif kind in ("CASE", "CASEZ", "CASEX"):
            depth = 0
            while True:
                t = self.advance()
                if t.type in ("CASE", "CASEZ", "CASEX"):
                    depth += 1
                elif t.type == "ENDCASE":
                    depth -= 1
                    if depth == 0:
                        return
        elif kind == "IF":
            self.advance()
            self.skip_parens()
            self.skip_statement()
            if self.accept("ELSE"):
                self.skip_statement()
        elif kind in ("FOR", "WHILE", "REPEAT"):
            self.advance()
            self.skip_parens()
            self.skip_statement()
        elif kind == "FOREVER":
            self.advance()
            self.skip_statement()
        elif kind in ("HASH", "AT"):
            self.advance()
            if self.at("LPAREN"):
                self.skip_parens()
            else:
                self.advance()
            self.skip_statement()
        else:
            self.skip_to_semi()

    # -----------------------------
    # Name resolution and widths
    # -----------------------------

    def resolve(self, module: ast.ModuleAst):
        widths = module.signal_widths()
        params = {p.name: p for p in module.params}
        known = set(widths) | set(params)

        def check_expr(expr):
            for node in ast.iter_subexprs(expr):
                if isinstance(node, (ast.Identifier, ast.BitSelect, ast.PartSelect)):
                    if node.name not in known:
                        raise self.at_offset(UnresolvedIdentifier, node.span.start, node.name)
            for node in ast.iter_subexprs(expr):
                if isinstance(node, (ast.Concat, ast.Replicate)):
                    try:
                        width = ast.self_width(node, widths, params)
                    except ast.ConstantTooWide:
                        raise self.at_offset(
                            WidthOverflow, node.span.start, f"expression exceeds {ast.CONST_BITS} bits"
                        ) from None
                    except ast.NotConstant:
                        continue
                    if width > MAX_WIDTH:
                        raise self.at_offset(
                            WidthOverflow,
                            node.span.start,
                            f"expression is {width} bits wide (limit {MAX_WIDTH})",
                        )

        def check_lvalue(lhs):
            check_expr(lhs)
            for name in ast.lvalue_targets(lhs):
                if name in params:
                    raise self.at_offset(
                        VerilogSyntaxError, lhs.span.start, f"cannot assign to parameter '{name}'"
                    )

        def check_stmt(stmt):
            for s in ast.iter_statements(stmt):
                if isinstance(s, ast.Assign):
                    check_lvalue(s.lhs)
                    check_expr(s.rhs)
                elif isinstance(s, ast.If):
                    check_expr(s.cond)
                elif isinstance(s, ast.Case):
                    check_expr(s.subject)
                    for item in s.items:
                        for label in item.labels:
                            check_expr(label)

        for item in module.items:
            if isinstance(item, ast.ContinuousAssign):
                check_lvalue(item.lhs)
                check_expr(item.rhs)
            else:
                for entry in item.sens.entries:
                    if entry.name not in widths:
                        raise self.at_offset(UnresolvedIdentifier, entry.span.start, entry.name)
                check_stmt(item.body)


def decode_number(text: str) -> tuple[int, int, bool, int]:
    """
    Decode a Verilog integer literal into (value, width, sized, wildcard).

    x digits read as 0 (two-state); z and ? digits read as 0 and are also
    flagged in the wildcard mask used by casez labels.
    """
    t = text.replace("_", "").replace(" ", "").replace("\t", "")
    if "'" not in t:
        value = int(t)
        return value, max(UNSIZED_WIDTH, value.bit_length()), False, 0
    size_part, rest = t.split("'", 1)
    if rest[:1] in ("s", "S"):
        rest = rest[1:]
    base = rest[0].lower()
    digits = rest[1:]
    sized = bool(size_part)
    width = int(size_part) if sized else UNSIZED_WIDTH
    if width == 0:
        raise ValueError(f"zero-width literal {text}")
    if not digits:
        raise ValueError(f"literal {text} has no digits")
    if width > MAX_WIDTH:
        # caller reports the overflow
        return 0, width, sized, 0
    mask = (1 << width) - 1
    if base == "d":
        lowered = digits.lower()
        if all(c in "xz?" for c in lowered):
            wild = mask if lowered[0] in "z?" else 0
            return 0, width, sized, wild
        if not digits.isdigit():
            raise ValueError(f"invalid digit in decimal literal {text}")
        return int(digits) & mask, width, sized, 0
    bits = _BASE_BITS[base]
    value = 0
    wild = 0
    digit_mask = (1 << bits) - 1
    for c in digits.lower():
        if c in "xz?":
            d = 0
            w = digit_mask if c in "z?" else 0
        else:
            try:
                d = int(c, 16)
            except ValueError:
                raise ValueError(f"invalid digit {c!r} in literal {text}") from None
            if d > digit_mask:
                raise ValueError(f"invalid digit {c!r} for base '{base}' in literal {text}")
            w = 0
        value = ((value << bits) | d) & mask
        wild = ((wild << bits) | w) & mask
    given = len(digits) * bits
    lead = digits[0].lower()
    if given < width and lead in "z?":
        wild |= mask & ~((1 << given) - 1)
    return value & mask, width, sized, wild & mask


def parse_module(src: SourceText) -> ast.ModuleAst:
    """
    Parse exactly one module.

    Raises VerilogSyntaxError, UnsupportedConstruct, UnresolvedIdentifier,
    WidthOverflow or MultipleModules; never anything else.
    """
    try:
        return Parser(src).parse()
    except RecursionError:
        raise VerilogSyntaxError("expression nesting too deep", origin=src.origin) from None


def parse_text(text, origin: str = "<inline>") -> ast.ModuleAst:
    return parse_module(normalize_source(text, origin))
