"""
Seeded random corpus of subset modules.

Each generated prompt is a reference module (combinational or single-clock
sequential, at most 6 outputs and 12 signals) plus candidates derived from
it by small operator/constant mutations, some left as exact copies. The
modules are kept as expression trees so mutations always render to valid
Verilog.

Expression trees are tuples:

    ("id", name) ("num", value, width) ("bit", name, index)
    ("un", op, a) ("bin", op, a, b) ("tern", cond, a, b) ("cat", a, b)
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

logger = logging.getLogger(__name__)

MAX_OUTPUTS = 6
MAX_SIGNALS = 12

WIDTHS = (1, 2, 4, 8)
BINARY_OPS = ("&", "|", "^", "+", "-", "==", "!=", "<", ">=", "*")
SWAPS = {
    "&": "|", "|": "&", "^": "&", "+": "-", "-": "+", "*": "+",
    "==": "!=", "!=": "==", "<": ">=", ">=": "<",
}


@dataclass
class FuzzModule:
    name: str
    inputs: list  # (name, width), data inputs only
    outputs: list  # (name, width, is_reg)
    wires: list = field(default_factory=list)  # (name, width, expr)
    items: list = field(default_factory=list)
    clock: str = ""
    reset: str = ""
    reset_active_low: bool = False
    async_reset: bool = False

    @property
    def sequential(self) -> bool:
        return bool(self.clock)

    @property
    def signal_count(self) -> int:
        return len(self.inputs) + len(self.outputs) + len(self.wires) + bool(self.clock) + bool(self.reset)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def _pick(rng: np.random.Generator, seq):
    return seq[int(rng.integers(len(seq)))]


def _leaf(rng, signals: dict):
    names = sorted(signals)
    wide = [n for n in names if signals[n] > 1]
    roll = rng.random()
    if roll < 0.15:
        width = _pick(rng, WIDTHS)
        return ("num", int(rng.integers(1 << width)), width)
    if roll < 0.25 and wide:
        name = _pick(rng, wide)
        return ("bit", name, int(rng.integers(signals[name])))
    return ("id", _pick(rng, names))


def gen_expr(rng: np.random.Generator, signals: dict, depth: int = 3):
    if depth == 0 or rng.random() < 0.3:
        return _leaf(rng, signals)
    roll = rng.random()
    if roll < 0.6:
        return ("bin", _pick(rng, BINARY_OPS), gen_expr(rng, signals, depth - 1), gen_expr(rng, signals, depth - 1))
    if roll < 0.7:
        return ("un", _pick(rng, ("~", "!")), gen_expr(rng, signals, depth - 1))
    if roll < 0.85:
        return ("tern", gen_cond(rng, signals), gen_expr(rng, signals, depth - 1), gen_expr(rng, signals, depth - 1))
    return ("cat", gen_expr(rng, signals, depth - 1), gen_expr(rng, signals, depth - 1))


def gen_cond(rng: np.random.Generator, signals: dict):
    name = _pick(rng, sorted(signals))
    width = signals[name]
    roll = rng.random()
    if width == 1 or roll < 0.3:
        return ("id", name) if width == 1 else ("bit", name, int(rng.integers(width)))
    if roll < 0.65:
        return ("bin", "==", ("id", name), ("num", int(rng.integers(1 << width)), width))
    return ("bin", "<", ("id", name), gen_expr(rng, signals, 1))


def generate_module(rng: np.random.Generator, name: str) -> FuzzModule:
    sequential = rng.random() < 0.5
    n_inputs = int(rng.integers(1, 4))
    n_outputs = int(rng.integers(1, 5))
    n_wires = int(rng.integers(0, 3))

    module = FuzzModule(name=name, inputs=[], outputs=[])
    if sequential:
        module.reset_active_low = bool(rng.random() < 0.4)
        module.clock = "clk"
        module.reset = "rst_n" if module.reset_active_low else "rst"
        module.async_reset = bool(rng.random() < 0.5)

    readable = {}
    for i in range(n_inputs):
        width = _pick(rng, WIDTHS)
        module.inputs.append((f"i{i}", width))
        readable[f"i{i}"] = width
    for i in range(n_wires):
        width = _pick(rng, WIDTHS)
        module.wires.append((f"w{i}", width, gen_expr(rng, readable)))
        readable[f"w{i}"] = width

    seq_targets = []
    kinds = []
    for i in range(n_outputs):
        width = _pick(rng, WIDTHS)
        if sequential and (rng.random() < 0.6 or (i == n_outputs - 1 and not seq_targets)):
            kind = "seq"
            seq_targets.append((f"y{i}", width))
        else:
            kind = _pick(rng, ("assign", "assign", "if", "case"))
        kinds.append(kind)
        module.outputs.append((f"y{i}", width, kind != "assign"))

    # Registers may read each other and themselves; combinational outputs
    # read inputs, wires and registers only, so there are no loops.
    with_regs = dict(readable)
    with_regs.update(seq_targets)
    for (out, width, _), kind in zip(module.outputs, kinds):
        if kind == "assign":
            module.items.append(("assign", out, gen_expr(rng, with_regs)))
        elif kind == "if":
            module.items.append(
                ("if", out, gen_cond(rng, with_regs), gen_expr(rng, with_regs), gen_expr(rng, with_regs))
            )
        elif kind == "case":
            subject = _pick(rng, sorted(readable))
            swidth = min(readable[subject], 4)
            labels = sorted({int(v) for v in rng.integers(1 << swidth, size=int(rng.integers(1, 4)))})
            arms = [(("num", v, readable[subject]), gen_expr(rng, with_regs, 2)) for v in labels]
            module.items.append(("case", out, subject, arms, gen_expr(rng, with_regs, 2)))
    if seq_targets:
        module.items.append(("seq", [(t, gen_expr(rng, with_regs)) for t, _ in seq_targets]))
    return module


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render_expr(expr) -> str:
    tag = expr[0]
    if tag == "id":
        return expr[1]
    if tag == "num":
        return f"{expr[2]}'d{expr[1]}"
    if tag == "bit":
        return f"{expr[1]}[{expr[2]}]"
    if tag == "un":
        return f"{expr[1]}({render_expr(expr[2])})"
    if tag == "bin":
        return f"({render_expr(expr[2])} {expr[1]} {render_expr(expr[3])})"
    if tag == "tern":
        return f"({render_expr(expr[1])} ? {render_expr(expr[2])} : {render_expr(expr[3])})"
    if tag == "cat":
        return f"{{{render_expr(expr[1])}, {render_expr(expr[2])}}}"
    raise ValueError(f"unknown expression node {tag!r}")


def _range(width: int) -> str:
    return f"[{width - 1}:0] " if width > 1 else ""


def render_module(module: FuzzModule) -> str:
    ports = []
    if module.clock:
        ports += [f"input {module.clock}", f"input {module.reset}"]
    ports += [f"input {_range(w)}{n}" for n, w in module.inputs]
    ports += [f"output {'reg ' if is_reg else ''}{_range(w)}{n}" for n, w, is_reg in module.outputs]

    lines = [f"module {module.name}("]
    lines += [f"  {p}{',' if i < len(ports) - 1 else ''}" for i, p in enumerate(ports)]
    lines.append(");")
    for name, width, _ in module.wires:
        lines.append(f"  wire {_range(width)}{name};")
    for name, _, expr in module.wires:
        lines.append(f"  assign {name} = {render_expr(expr)};")

    for item in module.items:
        kind = item[0]
        if kind == "assign":
            lines.append(f"  assign {item[1]} = {render_expr(item[2])};")
        elif kind == "if":
            _, target, cond, then, other = item
            lines += [
                "  always @(*) begin",
                f"    if ({render_expr(cond)})",
                f"      {target} = {render_expr(then)};",
                "    else",
                f"      {target} = {render_expr(other)};",
                "  end",
            ]
        elif kind == "case":
            _, target, subject, arms, default = item
            lines += ["  always @(*) begin", f"    case ({subject})"]
            lines += [f"      {render_expr(label)}: {target} = {render_expr(e)};" for label, e in arms]
            lines += [f"      default: {target} = {render_expr(default)};", "    endcase", "  end"]
        elif kind == "seq":
            lines += _render_seq(module, item[1])
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def _render_seq(module: FuzzModule, assigns: list) -> list:
    rst = module.reset
    if module.async_reset:
        edge = "negedge" if module.reset_active_low else "posedge"
        head = f"  always @(posedge {module.clock} or {edge} {rst}) begin"
    else:
        head = f"  always @(posedge {module.clock}) begin"
    test = f"!{rst}" if module.reset_active_low else rst
    lines = [head, f"    if ({test}) begin"]
    lines += [f"      {t} <= 0;" for t, _ in assigns]
    lines.append("    end else begin")
    lines += [f"      {t} <= {render_expr(e)};" for t, e in assigns]
    lines += ["    end", "  end"]
    return lines


# ---------------------------------------------------------------------------
# Mutation
# ---------------------------------------------------------------------------

def _slots(module: FuzzModule) -> list:
    """(getter, setter) for every expression tree in the module."""
    slots = []
    for i, (name, width, _) in enumerate(module.wires):
        slots.append((lambda i=i: module.wires[i][2], lambda e, i=i: module.wires.__setitem__(i, module.wires[i][:2] + (e,))))
    for i, item in enumerate(module.items):
        if item[0] == "assign":
            slots.append((lambda i=i: module.items[i][2], lambda e, i=i: _set_item(module, i, 2, e)))
        elif item[0] == "if":
            for k in (2, 3, 4):
                slots.append((lambda i=i, k=k: module.items[i][k], lambda e, i=i, k=k: _set_item(module, i, k, e)))
        elif item[0] == "case":
            slots.append((lambda i=i: module.items[i][4], lambda e, i=i: _set_item(module, i, 4, e)))
            for a in range(len(item[3])):
                slots.append((
                    lambda i=i, a=a: module.items[i][3][a][1],
                    lambda e, i=i, a=a: module.items[i][3].__setitem__(a, (module.items[i][3][a][0], e)),
                ))
        elif item[0] == "seq":
            for a in range(len(item[1])):
                slots.append((
                    lambda i=i, a=a: module.items[i][1][a][1],
                    lambda e, i=i, a=a: module.items[i][1].__setitem__(a, (module.items[i][1][a][0], e)),
                ))
    return slots


def _set_item(module: FuzzModule, index: int, position: int, expr):
    item = list(module.items[index])
    item[position] = expr
    module.items[index] = tuple(item)


def _mutable_paths(expr, path=()) -> list:
    found = []
    tag = expr[0]
    if (tag == "bin" and expr[1] in SWAPS) or tag in ("num", "tern"):
        found.append(path)
    children = {"un": (2,), "bin": (2, 3), "tern": (1, 2, 3), "cat": (1, 2)}.get(tag, ())
    for k in children:
        found += _mutable_paths(expr[k], path + (k,))
    return found


def _replace(expr, path, fn):
    if not path:
        return fn(expr)
    k = path[0]
    return expr[:k] + (_replace(expr[k], path[1:], fn),) + expr[k + 1:]


def _flip(expr):
    tag = expr[0]
    if tag == "bin":
        return ("bin", SWAPS[expr[1]], expr[2], expr[3])
    if tag == "num":
        return ("num", expr[1] ^ 1, expr[2])
    return ("tern", expr[1], expr[3], expr[2])


def mutate(module: FuzzModule, rng: np.random.Generator) -> FuzzModule:
    """A copy with one expression changed."""
    mutant = copy.deepcopy(module)
    slots = _slots(mutant)
    get, put = slots[int(rng.integers(len(slots)))]
    expr = get()
    paths = _mutable_paths(expr)
    if paths:
        put(_replace(expr, paths[int(rng.integers(len(paths)))], _flip))
    else:
        put(("un", "~", expr))
    return mutant


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------

def fuzz_modules(count: int, seed: int = 0) -> Iterator[FuzzModule]:
    for i in range(count):
        yield generate_module(np.random.default_rng([seed, i]), f"fuzz_{i:04d}")


def fuzz_prompt(index: int, candidates: int, seed: int = 0) -> tuple:
    """(prompt_id, reference text, candidate texts) for one corpus entry."""
    rng = np.random.default_rng([seed, index])
    module = generate_module(rng, f"fuzz_{index:04d}")
    texts = []
    for _ in range(candidates):
        roll = rng.random()
        if roll < 0.2:
            mutant = module
        else:
            mutant = mutate(module, rng)
            if roll > 0.8:
                mutant = mutate(mutant, rng)
        texts.append(render_module(mutant))
    return module.name, render_module(module), texts


def write_corpus(out_dir, count: int, candidates: int, seed: int = 0) -> list:
    out_dir = Path(out_dir)
    prompt_ids = []
    for index in range(count):
        prompt_id, reference, texts = fuzz_prompt(index, candidates, seed)
        prompt_dir = out_dir / prompt_id
        prompt_dir.mkdir(parents=True, exist_ok=True)
        (prompt_dir / "ref.v").write_text(reference, encoding="utf-8", newline="\n")
        for k, text in enumerate(texts):
            (prompt_dir / f"cand_{k}.v").write_text(text, encoding="utf-8", newline="\n")
        prompt_ids.append(prompt_id)
    logger.info("wrote %d fuzz prompt(s) with %d candidate(s) each to %s", count, candidates, out_dir)
    return prompt_ids
