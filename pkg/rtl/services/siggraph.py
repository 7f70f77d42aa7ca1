"""
Signal dependency graph and signal-level slicing.

build_graph turns a module into a networkx DiGraph over its signals with
data and control edges; backward_closure walks predecessors from target
outputs; extract_slice keeps the statements that implement the closure,
reporting them both as byte spans over the original source (the masks used
for preference pairs) and as a standalone module that parses on its own.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import networkx as nx

from rtl.services import ast
from rtl.services.errors import FrontendError, SalvkitError
from rtl.services.parser import parse_module
from rtl.services.source import SourceText, Span, normalize_source
from rtl.services.subset import leading_if

logger = logging.getLogger(__name__)

DATA = "data"
CONTROL = "control"


class UnknownSignal(SalvkitError):
    def __init__(self, name: str, reason: str = "is not a signal of the module"):
        self.name = name
        super().__init__(f"'{name}' {reason}")


class SliceNotCompilable(SalvkitError):
    """A reconstructed slice failed to parse. Always a bug in the slicer."""


@dataclass(frozen=True, order=True)
class SignalId:
    name: str
    width: int = 1


SignalRef = Union[str, SignalId]


def _name(ref: SignalRef) -> str:
    return ref.name if isinstance(ref, SignalId) else ref


class SignalGraph:
    """Directed graph of data/control dependencies between module signals."""

    def __init__(self, module_name: str, widths: dict, digraph: nx.DiGraph, def_sites: dict, decl_sites: dict):
        self.module_name = module_name
        self.widths = widths
        self.digraph = digraph
        self.def_sites = def_sites
        self.decl_sites = decl_sites

    @property
    def nodes(self) -> frozenset:
        return frozenset(self.digraph.nodes)

    @property
    def signals(self) -> frozenset:
        return frozenset(SignalId(n, self.widths[n]) for n in self.digraph.nodes)

    @property
    def edges(self) -> frozenset:
        """(from, to, kind) triples."""
        return frozenset(
            (a, b, kind) for a, b, data in self.digraph.edges(data=True) for kind in data["kinds"]
        )

    def has_edge(self, a: str, b: str, kind: Optional[str] = None) -> bool:
        if not self.digraph.has_edge(a, b):
            return False
        return kind is None or kind in self.digraph.edges[a, b]["kinds"]

    def predecessors(self, name: str) -> set:
        return set(self.digraph.predecessors(name))

    def to_json(self) -> dict:
        return {
            "module": self.module_name,
            "nodes": [{"name": n, "width": self.widths[n]} for n in sorted(self.digraph.nodes)],
            "edges": [
                {"from": a, "to": b, "kind": kind} for a, b, kind in sorted(self.edges)
            ],
        }


@dataclass(frozen=True)
class SignalSlice:
    targets: frozenset
    kept_signals: frozenset
    declared_signals: frozenset
    spans: tuple
    text: str
    module_name: str = ""

    def spans_json(self) -> list:
        return [s.to_json() for s in self.spans]


# ---------------------------------------------------------------------------
# Graph construction
# ---------------------------------------------------------------------------

def _split_reads(expr, params) -> tuple[set, set]:
    """(data reads, ternary-condition reads) of an expression."""
    data, control = set(), set()

    def walk(node):
        if isinstance(node, ast.Ternary):
            control.update(ast.expr_reads(node.cond, params))
            walk(node.then)
            walk(node.other)
        elif isinstance(node, (ast.Identifier, ast.BitSelect, ast.PartSelect)):
            if node.name not in params:
                data.add(node.name)
            if isinstance(node, ast.BitSelect):
                walk(node.index)
            elif isinstance(node, ast.PartSelect):
                walk(node.msb)
                walk(node.lsb)
        elif isinstance(node, ast.UnaryOp):
            walk(node.operand)
        elif isinstance(node, ast.BinaryOp):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, ast.Concat):
            for part in node.parts:
                walk(part)
        elif isinstance(node, ast.Replicate):
            walk(node.count)
            for part in node.parts:
                walk(part)

    walk(expr)
    return data, control


def build_graph(module: ast.ModuleAst) -> SignalGraph:
    params = module.param_values
    widths = module.signal_widths()
    g = nx.DiGraph()
    g.add_nodes_from(widths)
    def_sites: dict[str, list] = {}

    def add(sources: Iterable[str], target: str, kind: str):
        for src in sources:
            if g.has_edge(src, target):
                g.edges[src, target]["kinds"].add(kind)
            else:
                g.add_edge(src, target, kinds={kind})

    def record(lhs, rhs, guards: set, span: Span):
        data, control = _split_reads(rhs, params)
        data |= ast.lvalue_index_reads(lhs, params)
        for target in ast.lvalue_targets(lhs):
            add(data, target, DATA)
            add(control | guards, target, CONTROL)
            def_sites.setdefault(target, []).append(span)

    def walk(stmt, guards: set):
        if isinstance(stmt, ast.Assign):
            record(stmt.lhs, stmt.rhs, guards, stmt.span)
        elif isinstance(stmt, ast.Block):
            for s in stmt.stmts:
                walk(s, guards)
        elif isinstance(stmt, ast.If):
            inner = guards | ast.expr_reads(stmt.cond, params)
            walk(stmt.then, inner)
            if stmt.other is not None:
                walk(stmt.other, inner)
        elif isinstance(stmt, ast.Case):
            inner = set(guards) | ast.expr_reads(stmt.subject, params)
            for item in stmt.items:
                for label in item.labels:
                    inner |= ast.expr_reads(label, params)
            for item in stmt.items:
                walk(item.body, inner)

    for item in module.items:
        if isinstance(item, ast.ContinuousAssign):
            record(item.lhs, item.rhs, set(), item.span)
        else:
            edge_signals = {e.name for e in item.sens.edges}
            walk(item.body, edge_signals)

    decl_sites = {p.name: p.span for p in module.ports}
    for decl in module.decls:
        for d in decl.declarators:
            decl_sites.setdefault(d.name, d.span)

    logger.debug(
        "%s: signal graph with %d nodes, %d edges", module.name, g.number_of_nodes(), g.number_of_edges()
    )
    return SignalGraph(
        module.name,
        widths,
        g,
        {name: tuple(spans) for name, spans in def_sites.items()},
        decl_sites,
    )


def backward_closure(graph: SignalGraph, targets: Iterable[SignalRef]) -> frozenset:
    names = {_name(t) for t in targets}
    for name in sorted(names):
        if name not in graph.digraph:
            raise UnknownSignal(name)
    closure = set(names)
    for name in names:
        closure |= nx.ancestors(graph.digraph, name)
    return frozenset(closure)


# ---------------------------------------------------------------------------
# Slice extraction
# ---------------------------------------------------------------------------

@dataclass
class _Pruned:
    # Spans and synthesized separators, in output order.
    parts: list = field(default_factory=list)
    # Ends with an if that has no else, so an else written after it would bind to it.
    dangling: bool = False


class _Slicer:
    def __init__(self, module: ast.ModuleAst, kept: frozenset):
        self.module = module
        self.source: SourceText = module.source
        self.kept = kept
        self.params = module.param_values
        self.referenced: set = set()
        # leading if of the async-reset block being pruned; it must survive
        self.reset_if = None

    def text_of(self, parts) -> str:
        return "".join(self.source.span_text(p) if isinstance(p, Span) else p for p in parts)

    # -----------------------------
    # Statements
    # -----------------------------

    def prune(self, stmt) -> Optional[_Pruned]:
        if isinstance(stmt, ast.Assign):
            targets = ast.lvalue_targets(stmt.lhs)
            if not self.kept.intersection(targets):
                return None
            self.referenced.update(targets)
            self.referenced |= ast.expr_reads(stmt.rhs, self.params)
            self.referenced |= ast.lvalue_index_reads(stmt.lhs, self.params)
            return _Pruned([stmt.span])

        if isinstance(stmt, ast.Block):
            children = [p for p in (self.prune(s) for s in stmt.stmts) if p is not None]
            if not children:
                return None
            parts = [stmt.begin_span]
            for child in children:
                parts.append(" ")
                parts.extend(child.parts)
            parts.extend([" ", stmt.end_span])
            return _Pruned(parts)

        if isinstance(stmt, ast.If):
            then = self.prune(stmt.then)
            other = self.prune(stmt.other) if stmt.other is not None else None
            if then is None and other is None:
                if stmt is not self.reset_if:
                    return None
                self.referenced |= ast.expr_reads(stmt.cond, self.params)
                return _Pruned([stmt.head_span, " ;"], dangling=True)
            self.referenced |= ast.expr_reads(stmt.cond, self.params)
            parts = [stmt.head_span, " "]
            if other is None:
                parts.extend(then.parts)
                return _Pruned(parts, dangling=True)
            if then is None:
                parts.append(";")
            elif then.dangling:
                parts.extend(["begin ", *then.parts, " end"])
            else:
                parts.extend(then.parts)
            parts.extend([" ", stmt.else_span, " ", *other.parts])
            return _Pruned(parts, dangling=other.dangling)

        if isinstance(stmt, ast.Case):
            pruned = [self.prune(item.body) for item in stmt.items]
            kept_idx = [i for i, p in enumerate(pruned) if p is not None]
            if not kept_idx:
                return None
            if any(stmt.items[i].is_default for i in kept_idx):
                last = len(stmt.items) - 1
            else:
                last = kept_idx[-1]
            self.referenced |= ast.expr_reads(stmt.subject, self.params)
            parts = [stmt.head_span]
            for item, body in zip(stmt.items[: last + 1], pruned[: last + 1]):
                for label in item.labels:
                    self.referenced |= ast.expr_reads(label, self.params)
                parts.extend([" ", item.label_span, " "])
                if body is None:
                    parts.append(";")
                else:
                    parts.extend(body.parts)
            parts.extend([" ", stmt.end_span])
            return _Pruned(parts)

        return None

    # -----------------------------
    # Module elements
    # -----------------------------

    def items(self) -> list:
        """(position, parts) for every retained continuous assign and always block."""
        out = []
        for item in self.module.items:
            if isinstance(item, ast.ContinuousAssign):
                targets = ast.lvalue_targets(item.lhs)
                if not self.kept.intersection(targets) or item.from_declaration:
                    continue
                self.referenced.update(targets)
                self.referenced |= ast.expr_reads(item.rhs, self.params)
                self.referenced |= ast.lvalue_index_reads(item.lhs, self.params)
                out.append((item.span.start, [item.span]))
            else:
                if not self.kept.intersection(ast.assigned_signals(item.body)):
                    continue
                self.reset_if = leading_if(item.body) if len(item.sens.edges) == 2 else None
                body = self.prune(item.body)
                self.reset_if = None
                if body is None:
                    continue
                self.referenced.update(e.name for e in item.sens.entries)
                out.append((item.span.start, [item.head_span, " ", *body.parts]))
        return out

    def declarations(self, declared: frozenset) -> list:
        out = []
        for decl in self.module.decls:
            kept = [d for d in decl.declarators if d.name in declared]
            if not kept:
                continue
            parts = [decl.head_span, " "]
            for i, d in enumerate(kept):
                if i:
                    parts.append(", ")
                parts.append(Span(d.span.start, d.span.start + len(d.name)))
                if d.init_span is not None and d.name in self.kept:
                    parts.extend([" ", d.init_span])
            parts.append(decl.semi_span)
            out.append((decl.span.start, parts))
        for decl in self.module.param_decls:
            if decl.span != self.module.param_list_span:
                out.append((decl.span.start, [decl.span]))
        if not self.module.ansi:
            for group in self.module.port_groups:
                kept = [d for d in group.declarators if d.name in declared]
                if not kept:
                    continue
                parts = [group.head_span, " "]
                for i, d in enumerate(kept):
                    if i:
                        parts.append(", ")
                    parts.append(d.span)
                parts.append(group.semi_span)
                out.append((group.span.start, parts))
        return out

    def header(self, declared: frozenset) -> list:
        m = self.module
        parts = [m.name_span]
        if m.param_list_span is not None:
            parts.extend([" ", m.param_list_span])
        semi = Span(m.header_span.end - 1, m.header_span.end)
        if m.ports_open_span is None:
            parts.append(semi)
            return parts
        parts.extend([" ", m.ports_open_span])
        first = True
        if m.ansi:
            for group in m.port_groups:
                kept = [d for d in group.declarators if d.name in declared]
                if not kept:
                    continue
                parts.append("" if first else ", ")
                first = False
                parts.extend([group.head_span, " "])
                for i, d in enumerate(kept):
                    if i:
                        parts.append(", ")
                    parts.append(d.span)
        else:
            for h in m.header_names:
                if h.name in declared:
                    parts.append("" if first else ", ")
                    first = False
                    parts.append(h.span)
        parts.extend([m.ports_close_span, semi])
        return parts

    def run(self, targets: frozenset) -> SignalSlice:
        items = self.items()
        declared = frozenset(self.kept | (self.referenced & set(self.module.signal_widths())))
        elements = self.declarations(declared) + items
        elements.sort(key=lambda e: e[0])
        header = self.header(declared)

        lines = [self.text_of(header)]
        spans = [p for p in header if isinstance(p, Span)]
        for _, parts in elements:
            lines.append("  " + self.text_of(parts))
            spans.extend(p for p in parts if isinstance(p, Span))
        lines.append(self.source.span_text(self.module.end_span))
        spans.append(self.module.end_span)

        return SignalSlice(
            targets=targets,
            kept_signals=self.kept,
            declared_signals=declared,
            spans=tuple(sorted(set(spans))),
            text="\n".join(lines) + "\n",
            module_name=self.module.name,
        )


def extract_slice(
    module: ast.ModuleAst,
    graph: SignalGraph,
    targets: Iterable[SignalRef],
    *,
    verify: bool = True,
) -> SignalSlice:
    """
    Keep the code implementing `targets` (output ports).

    Raises UnknownSignal for a target that is not an output port and
    SliceNotCompilable if the reconstructed module does not parse.
    """
    names = frozenset(_name(t) for t in targets)
    if not names:
        raise UnknownSignal("", "no target signals given")
    outputs = {p.name for p in module.outputs}
    for name in sorted(names):
        if name not in outputs:
            raise UnknownSignal(name, "is not an output port of the module")
    if module.source is None:
        raise ValueError("module has no source text attached")

    kept = backward_closure(graph, names)
    result = _Slicer(module, kept).run(names)

    if verify:
        origin = f"{module.source.origin}#slice({','.join(sorted(names))})"
        try:
            parse_module(normalize_source(result.text, origin))
        except FrontendError as e:
            logger.error("slice of %s for %s does not parse: %s", module.name, sorted(names), e)
            raise SliceNotCompilable(f"slice for {sorted(names)} does not parse: {e}") from e
    return result


def body_span(module: ast.ModuleAst) -> Span:
    """The whole module definition, used as the unfiltered mask."""
    return module.span


def slice_module(module: ast.ModuleAst, targets: Iterable[SignalRef]) -> SignalSlice:
    return extract_slice(module, build_graph(module), targets)
