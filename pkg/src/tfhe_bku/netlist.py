"""Line-oriented gate netlists: ``OUT = KIND(IN1[, IN2])``.

Blank lines and ``#`` comments are ignored. Optional ``INPUT a, b`` and
``OUTPUT s, c`` lines fix the order of primary inputs and outputs; without
them the inputs are the wires that are read but never driven (in order of
first use) and the outputs are the driven wires nobody reads.
"""

from __future__ import annotations

import dataclasses
import re
from collections import defaultdict

import numpy as np

from .bootstrap import CloudKeySet, GateKind, gate_bootstrap, gate_linear
from .lattice import LweCiphertext
from .transform.backend import Backend
from .transform.cpfft import TransformCounters

_WIRE = r"[A-Za-z0-9_]+"
_GATE_RE = re.compile(rf"^({_WIRE})\s*=\s*([A-Za-z]+)\s*\(\s*({_WIRE})\s*(?:,\s*({_WIRE})\s*)?\)$")
_DECL_RE = re.compile(r"^(INPUT|OUTPUT)S?\b\s*(.*)$", re.IGNORECASE)


class NetlistError(ValueError):
    """Malformed netlist, undriven/duplicate wire, arity mismatch or cycle."""


@dataclasses.dataclass(frozen=True)
class Gate:
    out: str
    kind: GateKind
    inputs: tuple[str, ...]
    line: int


@dataclasses.dataclass(frozen=True)
class Netlist:
    gates: tuple[Gate, ...]  # topological order
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    def levels(self) -> list[list[Gate]]:
        """Gates grouped by logic depth; every gate of a level is independent."""
        depth: dict[str, int] = {w: 0 for w in self.inputs}
        out: dict[int, list[Gate]] = defaultdict(list)
        for g in self.gates:
            d = 1 + max(depth[w] for w in g.inputs)
            depth[g.out] = d
            out[d].append(g)
        return [out[d] for d in sorted(out)]

    def evaluate_plain(self, bits: dict[str, int]) -> dict[str, int]:
        vals = {w: int(bits[w]) for w in self.inputs}
        for g in self.gates:
            vals[g.out] = g.kind.plain(*(vals[w] for w in g.inputs))
        return {w: vals[w] for w in self.outputs}

    @property
    def bootstrap_count(self) -> int:
        return sum(g.kind is not GateKind.NOT for g in self.gates)


def _split_names(text: str) -> list[str]:
    names = [t for t in re.split(r"[\s,]+", text.strip()) if t]
    for t in names:
        if not re.fullmatch(_WIRE, t):
            raise NetlistError(f"invalid wire name {t!r}")
    return names


def parse_netlist(text: str) -> Netlist:
    gates: list[Gate] = []
    declared_in: list[str] | None = None
    declared_out: list[str] | None = None
    driver: dict[str, Gate] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        decl = _DECL_RE.match(line)
        if decl and "=" not in line:
            names = _split_names(decl.group(2))
            if decl.group(1).upper() == "INPUT":
                declared_in = (declared_in or []) + names
            else:
                declared_out = (declared_out or []) + names
            continue
        m = _GATE_RE.match(line)
        if not m:
            raise NetlistError(f"line {lineno}: expected 'OUT = KIND(IN1[, IN2])', got {raw.strip()!r}")
        out, kind_s, a, b = m.groups()
        try:
            kind = GateKind.parse(kind_s)
        except ValueError as exc:
            raise NetlistError(f"line {lineno}: {exc}") from None
        ins = (a,) if b is None else (a, b)
        if len(ins) != kind.arity:
            raise NetlistError(f"line {lineno}: {kind.value} takes {kind.arity} input(s), got {len(ins)}")
        if out in driver:
            raise NetlistError(f"line {lineno}: wire {out!r} already driven on line {driver[out].line}")
        g = Gate(out, kind, ins, lineno)
        driver[out] = g
        gates.append(g)

    used_order: list[str] = []
    seen = set()
    for g in gates:
        for w in g.inputs:
            if w not in seen:
                seen.add(w)
                used_order.append(w)
    if declared_in is not None:
        inputs = declared_in
        for w in inputs:
            if w in driver:
                raise NetlistError(f"primary input {w!r} is also driven by a gate (line {driver[w].line})")
        undriven = [w for w in used_order if w not in driver and w not in set(inputs)]
        if undriven:
            raise NetlistError(f"wires read but never driven: {undriven}")
    else:
        inputs = [w for w in used_order if w not in driver]
    if declared_out is not None:
        outputs = declared_out
        known = set(inputs) | set(driver)
        missing = [w for w in outputs if w not in known]
        if missing:
            raise NetlistError(f"unknown output wires: {missing}")
    else:
        outputs = [g.out for g in gates if g.out not in seen]

    return Netlist(tuple(_toposort(gates, driver, set(inputs))), tuple(inputs), tuple(outputs))


def _toposort(gates: list[Gate], driver: dict[str, Gate], inputs: set[str]) -> list[Gate]:
    order: list[Gate] = []
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(w: str, path: list[str]) -> None:
        if w in inputs or w not in driver:
            return
        st = state.get(w)
        if st == 2:
            return
        if st == 1:
            cyc = path[path.index(w):] + [w]
            raise NetlistError("combinational cycle: " + " -> ".join(cyc))
        state[w] = 1
        path.append(w)
        for x in driver[w].inputs:
            visit(x, path)
        path.pop()
        state[w] = 2
        order.append(driver[w])

    for g in gates:
        visit(g.out, [])
    return order


def load_netlist(path) -> Netlist:
    with open(path, encoding="utf-8") as fh:
        return parse_netlist(fh.read())


def parse_bits(text: str) -> dict[str, int]:
    """``wire = 0|1`` lines (or comma separated ``a=1,b=0``)."""
    bits: dict[str, int] = {}
    for item in re.split(r"[\n,;]+", text):
        item = item.split("#", 1)[0].strip()
        if not item:
            continue
        if "=" not in item:
            raise NetlistError(f"expected 'wire = bit', got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        if v not in ("0", "1"):
            raise NetlistError(f"bit for {k!r} must be 0 or 1, got {v!r}")
        bits[k] = int(v)
    return bits


def evaluate_encrypted(
    netlist: Netlist,
    inputs: dict[str, LweCiphertext],
    cloud: CloudKeySet,
    backend: Backend,
    counters: TransformCounters | None = None,
    threads: int = 1,
) -> dict[str, LweCiphertext]:
    """Evaluate level by level; all bootstraps of a level run as one batch."""
    missing = [w for w in netlist.inputs if w not in inputs]
    if missing:
        raise NetlistError(f"missing input ciphertexts: {missing}")
    vals = dict(inputs)
    for level in netlist.levels():
        lin = [(g, gate_linear(g.kind, *(vals[w] for w in g.inputs))) for g in level]
        boot = [(g, c) for g, c in lin if g.kind is not GateKind.NOT]
        for g, c in lin:
            if g.kind is GateKind.NOT:
                vals[g.out] = c
        if boot:
            batch = LweCiphertext.stack(c for _, c in boot)
            res = gate_bootstrap(batch, cloud, backend, counters, threads=threads)
            for i, (g, _) in enumerate(boot):
                vals[g.out] = res[i]
    return {w: vals[w] for w in netlist.outputs}


def random_netlist(rng: np.random.Generator, n_inputs: int, n_gates: int) -> Netlist:
    """Random acyclic netlist over all gate kinds (each gate reads earlier wires)."""
    kinds = list(GateKind)
    wires = [f"i{j}" for j in range(n_inputs)]
    lines = [f"INPUT {', '.join(wires)}"]
    for j in range(n_gates):
        kind = kinds[int(rng.integers(len(kinds)))]
        ins = [wires[int(rng.integers(len(wires)))] for _ in range(kind.arity)]
        name = f"g{j}"
        lines.append(f"{name} = {kind.value}({', '.join(ins)})")
        wires.append(name)
    return parse_netlist("\n".join(lines))
