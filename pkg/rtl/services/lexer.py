"""
ply-based lexer for the synthesizable Verilog subset.

Tokens keep their raw text as value and their byte offset as lexpos (the
lexer runs over SourceText.lexable, one character per byte). Comments and
attributes are not tokens; their spans are collected as trivia.
"""

from __future__ import annotations

import sys

import ply.lex as lex

from rtl.services.errors import UnsupportedConstruct, VerilogSyntaxError
from rtl.services.source import SourceText, Span

reserved = {
    "module": "MODULE",
    "endmodule": "ENDMODULE",
    "input": "INPUT",
    "output": "OUTPUT",
    "inout": "INOUT",
    "wire": "WIRE",
    "reg": "REG",
    "signed": "SIGNED",
    "parameter": "PARAMETER",
    "localparam": "LOCALPARAM",
    "assign": "ASSIGN",
    "always": "ALWAYS",
    "initial": "INITIAL",
    "begin": "BEGIN",
    "end": "END",
    "if": "IF",
    "else": "ELSE",
    "case": "CASE",
    "casez": "CASEZ",
    "casex": "CASEX",
    "endcase": "ENDCASE",
    "default": "DEFAULT",
    "posedge": "POSEDGE",
    "negedge": "NEGEDGE",
    "or": "KW_OR",
    "integer": "INTEGER",
    "real": "REAL",
    "genvar": "GENVAR",
    "function": "FUNCTION",
    "endfunction": "ENDFUNCTION",
    "task": "TASK",
    "endtask": "ENDTASK",
    "generate": "GENERATE",
    "endgenerate": "ENDGENERATE",
    "for": "FOR",
    "while": "WHILE",
    "repeat": "REPEAT",
    "forever": "FOREVER",
    "fork": "FORK",
    "join": "JOIN",
    "always_ff": "SV_KEYWORD",
    "always_comb": "SV_KEYWORD",
    "always_latch": "SV_KEYWORD",
    "logic": "SV_KEYWORD",
    "bit": "SV_KEYWORD",
    "typedef": "SV_KEYWORD",
    "enum": "SV_KEYWORD",
    "struct": "SV_KEYWORD",
    "interface": "SV_KEYWORD",
    "tri": "TRI",
    "supply0": "TRI",
    "supply1": "TRI",
}

tokens = [
    "ID",
    "NUMBER",
    "SYSID",
    "STRING",
    # multi-character operators
    "LSHIFTA",
    "RSHIFTA",
    "CASE_EQ",
    "CASE_NE",
    "POWER",
    "LSHIFT",
    "RSHIFT",
    "EQ",
    "NE",
    "LE",
    "GE",
    "LAND",
    "LOR",
    "NAND",
    "NOR",
    "XNOR",
    # single-character operators and punctuation
    "PLUS",
    "MINUS",
    "STAR",
    "SLASH",
    "PERCENT",
    "AMP",
    "BAR",
    "CARET",
    "TILDE",
    "BANG",
    "LT",
    "GT",
    "QUESTION",
    "COLON",
    "SEMI",
    "COMMA",
    "DOT",
    "EQUALS",
    "AT",
    "HASH",
    "LPAREN",
    "RPAREN",
    "LBRACKET",
    "RBRACKET",
    "LBRACE",
    "RBRACE",
] + sorted(set(reserved.values()))

t_ignore = " \t\n\f\v"


# Function rules are tried in definition order, before the string rules.

def t_LINE_COMMENT(t):
    r"//[^\n]*"
    t.lexer.trivia.append(Span(t.lexpos, t.lexpos + len(t.value)))


def t_BLOCK_COMMENT(t):
    r"/\*[\s\S]*?\*/"
    t.lexer.trivia.append(Span(t.lexpos, t.lexpos + len(t.value)))


def t_ATTRIBUTE(t):
    r"\(\*\s*[A-Za-z_][\s\S]*?\*\)"
    t.lexer.trivia.append(Span(t.lexpos, t.lexpos + len(t.value)))


def t_DIRECTIVE(t):
    r"`[A-Za-z_][A-Za-z0-9_]*"
    _raise(t, UnsupportedConstruct, construct=f"preprocessor directive {t.value}")


def t_NUMBER(t):
    r"(?:\d[\d_]*[ \t]*)?'[sS]?[bBoOdDhH][ \t]*[0-9a-fA-FxXzZ?_]+|\d[\d_]*"
    return t


def t_SYSID(t):
    r"\$[A-Za-z_][A-Za-z0-9_$]*"
    return t


def t_STRING(t):
    r'"(?:[^"\\\n]|\\.)*"'
    return t


def t_ID(t):
    r"[A-Za-z_][A-Za-z0-9_$]*"
    t.type = reserved.get(t.value, "ID")
    return t


t_LSHIFTA = r"<<<"
t_RSHIFTA = r">>>"
t_CASE_EQ = r"==="
t_CASE_NE = r"!=="
t_POWER = r"\*\*"
t_LSHIFT = r"<<"
t_RSHIFT = r">>"
t_EQ = r"=="
t_NE = r"!="
t_LE = r"<="
t_GE = r">="
t_LAND = r"&&"
t_LOR = r"\|\|"
t_NAND = r"~&"
t_NOR = r"~\|"
t_XNOR = r"~\^|\^~"
t_PLUS = r"\+"
t_MINUS = r"-"
t_STAR = r"\*"
t_SLASH = r"/"
t_PERCENT = r"%"
t_AMP = r"&"
t_BAR = r"\|"
t_CARET = r"\^"
t_TILDE = r"~"
t_BANG = r"!"
t_LT = r"<"
t_GT = r">"
t_QUESTION = r"\?"
t_COLON = r":"
t_SEMI = r";"
t_COMMA = r","
t_DOT = r"\."
t_EQUALS = r"="
t_AT = r"@"
t_HASH = r"\#"
t_LPAREN = r"\("
t_RPAREN = r"\)"
t_LBRACKET = r"\["
t_RBRACKET = r"\]"
t_LBRACE = r"\{"
t_RBRACE = r"\}"


def t_error(t):
    _raise(t, VerilogSyntaxError, message=f"illegal character {t.value[0]!r}")


def _raise(t, error_cls, **kwargs):
    source: SourceText = t.lexer.source
    line, col = source.line_col(t.lexpos)
    raise error_cls(origin=source.origin, line=line, col=col, **kwargs)


_master = lex.lex(module=sys.modules[__name__], errorlog=lex.NullLogger())


def tokenize(source: SourceText) -> tuple[list, list[Span]]:
    """
    Lex a whole source into (tokens, trivia spans).

    Raises VerilogSyntaxError on an illegal character and UnsupportedConstruct
    on preprocessor directives.
    """
    lexer = _master.clone()
    lexer.source = source
    lexer.trivia = []
    lexer.input(source.lexable)
    toks = list(iter(lexer.token, None))
    return toks, lexer.trivia


def token_end(tok) -> int:
    return tok.lexpos + len(tok.value)
