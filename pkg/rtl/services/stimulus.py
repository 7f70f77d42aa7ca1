"""
Port classification and stimulus generation.

Ports are classified from the module header (with sensitivity lists as a
fallback) into one clock, one reset and data inputs. Data columns come from
per-port xoshiro256** streams, so a port's column depends only on the seed
and its name, never on declaration order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

from rtl.services import ast
from rtl.services.errors import SalvkitError
from rtl.services.prng import MASK64, column_stream
from rtl.services.subset import edge_roles

logger = logging.getLogger(__name__)

CLOCK_NAMES = frozenset({"clk", "clock", "i_clk", "clk_i"})
RESET_NAMES = frozenset({"rst", "reset", "rst_n", "resetn", "nrst", "areset", "aresetn", "i_rst"})
ACTIVE_LOW_NAMES = frozenset({"rst_n", "resetn", "nrst", "aresetn"})

RESET_CYCLES = 2
DEFAULT_EXHAUSTIVE_MAX_BITS = 20


class ExhaustiveTooLarge(SalvkitError):
    pass


@dataclass(frozen=True)
class PortClass:
    name: str
    width: int
    role: str  # clock | reset | data
    active_high: Optional[bool] = None

    @property
    def reset_polarity(self) -> Optional[str]:
        if self.role != "reset":
            return None
        return "active_high" if self.active_high else "active_low"

    def to_json(self) -> dict:
        data = {"signal": self.name, "role": self.role, "width": self.width}
        if self.role == "reset":
            data["polarity"] = self.reset_polarity
        return data

    @classmethod
    def from_json(cls, data: dict) -> "PortClass":
        active_high = None
        if data["role"] == "reset":
            active_high = data.get("polarity", "active_high") == "active_high"
        return cls(data["signal"], int(data.get("width", 1)), data["role"], active_high)


@dataclass(frozen=True)
class StimulusSet:
    seed: int
    n: int
    columns: dict
    classes: tuple
    exhaustive: bool = False

    @property
    def data_classes(self) -> list:
        return [pc for pc in self.classes if pc.role == "data"]

    def to_json(self) -> dict:
        data = {
            "seed": self.seed,
            "n": self.n,
            "columns": {name: [str(v) for v in values] for name, values in self.columns.items()},
            "classes": [pc.to_json() for pc in self.classes],
        }
        if self.exhaustive:
            data["exhaustive"] = True
        return data

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, data: dict) -> "StimulusSet":
        return cls(
            seed=int(data["seed"]),
            n=int(data["n"]),
            columns={name: [int(v) for v in values] for name, values in data["columns"].items()},
            classes=tuple(PortClass.from_json(c) for c in data.get("classes", [])),
            exhaustive=bool(data.get("exhaustive", False)),
        )


def _is_active_low(lname: str) -> bool:
    return lname in ACTIVE_LOW_NAMES or lname.endswith("_n")


def classify_ports(module: ast.ModuleAst) -> list[PortClass]:
    """
    Classify every input port.

    Precedence: clock-name list, reset-name list, then edge usage (a signal
    tested as the asynchronous reset of its block is a reset; any other
    1-bit edge signal is a clock). At most one clock and one reset; the
    first port in declaration order wins.
    """
    edge_clocks = set()
    edge_resets = {}
    for item in module.items:
        if not isinstance(item, ast.AlwaysBlock) or not item.sens.is_edge:
            continue
        roles = edge_roles(item)
        if roles.reset is not None:
            edge_resets.setdefault(roles.reset.name, roles.reset.edge == "posedge")
        if roles.clock is not None:
            edge_clocks.add(roles.clock.name)
        else:
            edge_clocks.update(e.name for e in item.sens.edges)

    classes = []
    have_clock = have_reset = False
    for port in module.inputs:
        lname = port.name.lower()
        if lname in CLOCK_NAMES and not have_clock:
            have_clock = True
            classes.append(PortClass(port.name, port.width, "clock"))
        elif lname in RESET_NAMES and not have_reset:
            have_reset = True
            classes.append(PortClass(port.name, port.width, "reset", not _is_active_low(lname)))
        elif port.name in edge_resets and port.width == 1 and not have_reset:
            have_reset = True
            classes.append(PortClass(port.name, port.width, "reset", edge_resets[port.name]))
        elif port.name in edge_clocks and port.width == 1 and not have_clock:
            have_clock = True
            classes.append(PortClass(port.name, port.width, "clock"))
        else:
            classes.append(PortClass(port.name, port.width, "data"))
    return classes


def _reset_column(pc: PortClass, n: int) -> list:
    asserted = 1 if pc.active_high else 0
    return [asserted if t < RESET_CYCLES else asserted ^ 1 for t in range(n)]


def generate(classes, n: int, seed: int) -> StimulusSet:
    """N pseudo-random vectors; the clock gets no column."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    seed &= MASK64
    columns = {}
    for pc in classes:
        if pc.role == "data":
            stream = column_stream(seed, pc.name)
            columns[pc.name] = [stream.bits(pc.width) for _ in range(n)]
        elif pc.role == "reset":
            columns[pc.name] = _reset_column(pc, n)
    return StimulusSet(seed=seed, n=n, columns=columns, classes=tuple(classes))


def exhaustive(classes, max_bits: int = DEFAULT_EXHAUSTIVE_MAX_BITS, seed: int = 0) -> StimulusSet:
    """
    Every combination of the data inputs, first data port varying slowest.

    Raises ExhaustiveTooLarge when the data inputs total more than max_bits.
    """
    data = [pc for pc in classes if pc.role == "data"]
    total = sum(pc.width for pc in data)
    if total > max_bits:
        raise ExhaustiveTooLarge(f"{total} data input bits exceed the exhaustive limit of {max_bits}")
    n = 1 << total
    columns = {}
    shift = total
    for pc in classes:
        if pc.role == "data":
            shift -= pc.width
            m = (1 << pc.width) - 1
            columns[pc.name] = [(t >> shift) & m for t in range(n)]
        elif pc.role == "reset":
            columns[pc.name] = _reset_column(pc, n)
    return StimulusSet(seed=seed & MASK64, n=n, columns=columns, classes=tuple(classes), exhaustive=True)


def stimuli_for(module: ast.ModuleAst, n: int, seed: int, *, use_exhaustive: bool = False, max_bits: Optional[int] = None) -> StimulusSet:
    classes = classify_ports(module)
    if use_exhaustive:
        return exhaustive(classes, max_bits or DEFAULT_EXHAUSTIVE_MAX_BITS, seed)
    return generate(classes, n, seed)
