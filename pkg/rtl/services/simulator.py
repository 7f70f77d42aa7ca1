"""
Two-state cycle simulator for subset modules.

elaborate() compiles a module once into a SimInstance: combinational items
in dependency order, clocked blocks, and the clock/reset roles. run() then
drives one vector per cycle:

    apply inputs -> async reset blocks (while reset is active) -> settle
    -> sample outputs -> one active clock edge (nonblocking writes applied
    together)

so outputs are observed post-settle, pre-edge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from rtl.services import ast
from rtl.services.errors import SalvkitError
from rtl.services.expressions import ExpressionCompiler, exposed_reads
from rtl.services.stimulus import StimulusSet, classify_ports
from rtl.services.subset import edge_roles

logger = logging.getLogger(__name__)

DEFAULT_MAX_SWEEPS = 64


class SimulationError(SalvkitError):
    pass


class CombinationalLoop(SimulationError):
    pass


class MultipleClocks(SimulationError):
    pass


class UnsettledLogic(SimulationError):
    pass


class StimulusMismatch(SimulationError):
    pass


@dataclass(frozen=True)
class NetState:
    value: int
    width: int


@dataclass(frozen=True)
class ResetInfo:
    name: str
    active_high: bool
    asynchronous: bool


@dataclass
class _CombItem:
    run: object
    reads: frozenset
    writes: frozenset
    order: int


@dataclass
class SimInstance:
    module: ast.ModuleAst
    names: list
    index: dict
    widths: dict
    comb_order: list
    acyclic: bool
    seq_blocks: list
    async_blocks: list
    regs: frozenset
    clock: Optional[str]
    reset: Optional[ResetInfo]
    values: list = field(default_factory=list)

    @property
    def inputs(self) -> list:
        return [p.name for p in self.module.inputs]

    @property
    def outputs(self) -> list:
        return [p.name for p in self.module.outputs]

    @property
    def state(self) -> dict:
        return {n: NetState(self.values[i], self.widths[n]) for n, i in self.index.items()}

    def reset_state(self):
        self.values = [0] * len(self.names)


@dataclass(frozen=True)
class SimTrace:
    cycles: int
    outputs: dict

    def to_json(self) -> dict:
        return {
            "cycles": self.cycles,
            "outputs": {name: [str(v) for v in values] for name, values in self.outputs.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "SimTrace":
        return cls(
            cycles=int(data["cycles"]),
            outputs={name: [int(v) for v in values] for name, values in data["outputs"].items()},
        )


def _max_sweeps_default() -> int:
    try:
        return getattr(settings, "SALVKIT_MAX_SWEEPS", DEFAULT_MAX_SWEEPS)
    except ImproperlyConfigured:
        return DEFAULT_MAX_SWEEPS


def elaborate(module: ast.ModuleAst, *, fixpoint: bool = True) -> SimInstance:
    """
    Compile a subset-clean module.

    Raises MultipleClocks when clocked blocks use more than one clock signal
    and CombinationalLoop when the combinational items have no topological
    order and fixpoint settling is disabled.
    """
    names = list(module.signal_widths())
    index = {n: i for i, n in enumerate(names)}
    widths = module.signal_widths()
    params = module.param_values
    compiler = ExpressionCompiler(module, index)

    comb: list[_CombItem] = []
    seq_blocks = []
    async_blocks = []
    clocks = set()
    regs = set()
    async_resets = {}

    for order, item in enumerate(module.items):
        if isinstance(item, ast.ContinuousAssign):
            write, width = compiler.lvalue(item.lhs)
            rhs = compiler.compile(item.rhs, width)

            def run_assign(v, nba, write=write, rhs=rhs):
                write(v, rhs(v))

            reads = ast.expr_reads(item.rhs, params) | ast.lvalue_index_reads(item.lhs, params)
            comb.append(_CombItem(run_assign, frozenset(reads), frozenset(ast.lvalue_targets(item.lhs)), order))
            continue

        body = compiler.statement(item.body)
        if not item.sens.is_edge:
            comb.append(
                _CombItem(
                    body,
                    frozenset(exposed_reads(item.body, params)),
                    frozenset(ast.assigned_signals(item.body)),
                    order,
                )
            )
            continue

        roles = edge_roles(item)
        if roles.clock is None:
            clocks.update(e.name for e in item.sens.edges)
        else:
            clocks.add(roles.clock.name)
        regs |= ast.assigned_signals(item.body)
        seq_blocks.append(body)
        if roles.reset is not None:
            async_resets[roles.reset.name] = roles.reset_active_high
            async_blocks.append((index[roles.reset.name], roles.reset_active_high, body))

    if len(clocks) > 1:
        raise MultipleClocks(f"clocked blocks use {len(clocks)} clock signals: {', '.join(sorted(clocks))}")

    comb_order, acyclic = _schedule(comb)
    if not acyclic and not fixpoint:
        raise CombinationalLoop(f"{module.name}: combinational logic has a dependency cycle")

    classes = classify_ports(module)
    reset = None
    for pc in classes:
        if pc.role == "reset":
            asynchronous = pc.name in async_resets
            active_high = async_resets[pc.name] if asynchronous else pc.active_high
            reset = ResetInfo(pc.name, active_high, asynchronous)
    if reset is None and async_resets:
        name = sorted(async_resets)[0]
        reset = ResetInfo(name, async_resets[name], True)

    inst = SimInstance(
        module=module,
        names=names,
        index=index,
        widths=widths,
        comb_order=comb_order,
        acyclic=acyclic,
        seq_blocks=seq_blocks,
        async_blocks=async_blocks,
        regs=frozenset(regs),
        clock=next(iter(clocks)) if clocks else None,
        reset=reset,
    )
    inst.reset_state()
    logger.debug(
        "elaborated %s: %d comb items (%s), %d clocked blocks, clock=%s",
        module.name,
        len(comb_order),
        "acyclic" if acyclic else "fixpoint",
        len(seq_blocks),
        inst.clock,
    )
    return inst


def _schedule(items: list) -> tuple[list, bool]:
    g = nx.DiGraph()
    g.add_nodes_from(range(len(items)))
    for a, producer in enumerate(items):
        for b, consumer in enumerate(items):
            if producer.writes & consumer.reads:
                g.add_edge(a, b)
    if nx.is_directed_acyclic_graph(g):
        order = list(nx.lexicographical_topological_sort(g, key=lambda n: items[n].order))
        return [items[n] for n in order], True
    # Strongly connected groups in dependency order, source order inside each.
    condensed = nx.condensation(g)
    order = []
    for scc in nx.lexicographical_topological_sort(
        condensed, key=lambda c: min(items[n].order for n in condensed.nodes[c]["members"])
    ):
        members = sorted(condensed.nodes[scc]["members"], key=lambda n: items[n].order)
        order.extend(members)
    return [items[n] for n in order], False


def _apply(values: list, nba: list):
    for write, value in nba:
        write(values, value)


def _sweep(inst: SimInstance):
    v = inst.values
    for item in inst.comb_order:
        nba = []
        item.run(v, nba)
        if nba:
            _apply(v, nba)


def settle(inst: SimInstance, max_sweeps: int):
    if inst.acyclic:
        _sweep(inst)
        return
    for _ in range(max_sweeps):
        before = list(inst.values)
        _sweep(inst)
        if inst.values == before:
            return
    raise UnsettledLogic(f"{inst.module.name}: combinational logic did not settle within {max_sweeps} sweeps")


def clock_edge(inst: SimInstance):
    nba = []
    for block in inst.seq_blocks:
        block(inst.values, nba)
    _apply(inst.values, nba)


def _check_stimuli(inst: SimInstance, stimuli: StimulusSet) -> list:
    inputs = {p.name: p.width for p in inst.module.inputs}
    optional = {pc.name for pc in classify_ports(inst.module) if pc.role == "clock"}
    optional |= {pc.name for pc in stimuli.classes if pc.role == "clock"}
    if inst.clock:
        optional.add(inst.clock)
    bound = []
    for name, column in stimuli.columns.items():
        if name not in inputs:
            raise StimulusMismatch(f"stimulus column '{name}' is not an input of {inst.module.name}")
        if len(column) != stimuli.n:
            raise StimulusMismatch(f"stimulus column '{name}' has {len(column)} values, expected {stimuli.n}")
        limit = 1 << inputs[name]
        if any(not 0 <= value < limit for value in column):
            raise StimulusMismatch(f"stimulus column '{name}' has values wider than {inputs[name]} bits")
        bound.append((inst.index[name], column))
    missing = sorted(set(inputs) - set(stimuli.columns) - optional)
    if missing:
        raise StimulusMismatch(f"no stimulus for input(s) {', '.join(missing)}")
    return bound


def run(inst: SimInstance, stimuli: StimulusSet, max_sweeps: Optional[int] = None) -> SimTrace:
    """Simulate one vector per cycle and record every output each cycle."""
    max_sweeps = max_sweeps or _max_sweeps_default()
    bound = _check_stimuli(inst, stimuli)
    inst.reset_state()
    v = inst.values
    out_slots = [(name, inst.index[name]) for name in inst.outputs]
    outputs = {name: [] for name, _ in out_slots}
    clocked = bool(inst.seq_blocks)

    for t in range(stimuli.n):
        for i, column in bound:
            v[i] = column[t]
        for reset_index, active_high, block in inst.async_blocks:
            if (v[reset_index] != 0) == active_high:
                nba = []
                block(v, nba)
                _apply(v, nba)
        settle(inst, max_sweeps)
        for name, i in out_slots:
            outputs[name].append(v[i])
        if clocked:
            clock_edge(inst)

    return SimTrace(cycles=stimuli.n, outputs=outputs)


def simulate(module: ast.ModuleAst, stimuli: StimulusSet, max_sweeps: Optional[int] = None) -> SimTrace:
    return run(elaborate(module), stimuli, max_sweeps)
