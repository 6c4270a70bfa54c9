"""Random circuit generation over a hardware-style gate set.

Two circuit families are provided.  The coupled-layer family draws one- and
two-qubit gates layer by layer against a device coupling map, hitting exact
gate budgets (g1 one-qubit gates from {U1, U2, U3}, g2 CNOTs) with a per-layer
cap on parallel CNOTs and a rule that no CNOT pair repeats the immediately
preceding layer.  The permutation family pairs qubits under a fresh uniform
permutation each layer and applies independent Haar-random SU(4) blocks.

One-qubit gates are the Euler-angle products

    U3(theta, phi, lam) = Rz(phi + 3*pi) Rx(pi/2) Rz(theta + pi) Rx(pi/2) Rz(lam)
    U2(phi, lam)        = Rz(phi + pi/2) Rx(pi/2) Rz(lam - pi/2)
    U1(lam)             = Rz(lam)

with Rz(a) = exp(-i a Z / 2), Rx(a) = exp(-i a X / 2), so every matrix is a
determinant-one representative and daggers stay inside the gate set exactly
(U3(t,p,l)^dag = U3(-t,-l,-p), U2(p,l)^dag = U3(-pi/2,-l,-p), U1(l)^dag =
U1(-l), CNOT is self-inverse, SU4 daggers to the adjoint matrix).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from hsbench.linalg import CapacityError, RandomSource, apply_1q, apply_2q, haar_unitary

ONE_QUBIT_KINDS = ("U1", "U2", "U3")
_PARAM_COUNT = {"U1": 1, "U2": 2, "U3": 3, "CNOT": 0}


@dataclass(frozen=True)
class CouplingMap:
    """Undirected connectivity graph of the device qubits."""

    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"a coupling map needs at least 2 qubits, got {self.n}")
        edges = frozenset(tuple(sorted(map(int, e))) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        for a, b in edges:
            if a == b or not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a},{b}) invalid for {self.n} qubits")
        seen = {0}
        frontier = [0]
        adj = {q: [] for q in range(self.n)}
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        while frontier:
            v = frontier.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        if len(seen) != self.n:
            raise ValueError("coupling graph is not connected")

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def make_coupling(style: str, n: int) -> CouplingMap:
    """Build a named coupling map: 'linear', 'full', or 'grid(rows,cols)'."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    style = style.strip()
    if style == "linear":
        edges = {(i, i + 1) for i in range(n - 1)}
    elif style == "full":
        edges = {(i, j) for i in range(n) for j in range(i + 1, n)}
    elif style.startswith("grid(") and style.endswith(")"):
        rows, cols = (int(p) for p in style[5:-1].split(","))
        if rows * cols != n:
            raise ValueError(f"grid({rows},{cols}) does not cover {n} qubits")
        edges = set()
        for r in range(rows):
            for c in range(cols):
                q = r * cols + c
                if c + 1 < cols:
                    edges.add((q, q + 1))
                if r + 1 < rows:
                    edges.add((q, q + cols))
    else:
        raise ValueError(f"unknown coupling style {style!r}")
    return CouplingMap(n=n, edges=frozenset(edges))


@dataclass(frozen=True)
class GateSpec:
    """One gate: a kind tag, its parameters, and the qubits it acts on.

    params is a tuple of angles for U1/U2/U3, empty for CNOT, and a 4x4
    complex array for SU4.  Two-qubit operand order is significant: the first
    operand is the CNOT control and indexes the more significant factor of an
    SU4 matrix.
    """

    kind: str
    params: tuple | np.ndarray
    operands: tuple

    def __post_init__(self):
        object.__setattr__(self, "operands", tuple(int(q) for q in self.operands))
        if self.kind in _PARAM_COUNT:
            params = tuple(float(p) for p in self.params)
            object.__setattr__(self, "params", params)
            if len(params) != _PARAM_COUNT[self.kind]:
                raise ValueError(
                    f"{self.kind} takes {_PARAM_COUNT[self.kind]} angles, got {len(params)}"
                )
            expected = 2 if self.kind == "CNOT" else 1
        elif self.kind == "SU4":
            m = np.asarray(self.params, dtype=complex)
            if m.shape != (4, 4):
                raise ValueError("SU4 parameter must be a 4x4 matrix")
            object.__setattr__(self, "params", m)
            expected = 2
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.operands) != expected:
            raise ValueError(f"{self.kind} acts on {expected} qubits")
        if expected == 2 and self.operands[0] == self.operands[1]:
            raise ValueError("two-qubit gate operands must be distinct")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in ("CNOT", "SU4")


def _rz(a: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * a), 0.0], [0.0, np.exp(0.5j * a)]])


_RX_HALF_PI = np.array([[1.0, -1.0j], [-1.0j, 1.0]]) / math.sqrt(2.0)

_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def gate_matrix(gate: GateSpec) -> np.ndarray:
    """The gate's unitary, 2x2 or 4x4, in the operand-order convention."""
    if gate.kind == "U1":
        return _rz(gate.params[0])
    if gate.kind == "U2":
        phi, lam = gate.params
        return _rz(phi + math.pi / 2) @ _RX_HALF_PI @ _rz(lam - math.pi / 2)
    if gate.kind == "U3":
        theta, phi, lam = gate.params
        return (
            _rz(phi + 3 * math.pi)
            @ _RX_HALF_PI
            @ _rz(theta + math.pi)
            @ _RX_HALF_PI
            @ _rz(lam)
        )
    if gate.kind == "CNOT":
        return _CNOT
    return np.asarray(gate.params)


def dagger_gate(gate: GateSpec) -> GateSpec:
    """Exact inverse of a gate, expressed inside the same gate set."""
    if gate.kind == "U1":
        return GateSpec("U1", (-gate.params[0],), gate.operands)
    if gate.kind == "U2":
        phi, lam = gate.params
        return GateSpec("U3", (-math.pi / 2, -lam, -phi), gate.operands)
    if gate.kind == "U3":
        theta, phi, lam = gate.params
        return GateSpec("U3", (-theta, -lam, -phi), gate.operands)
    if gate.kind == "CNOT":
        return gate
    return GateSpec("SU4", np.asarray(gate.params).conj().T, gate.operands)


@dataclass(frozen=True)
class QuantumCircuit:
    """An ordered gate list on n qubits; gates[0] acts first."""

    n: int
    gates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(q >= self.n for q in g.operands):
                raise ValueError(f"gate {g.kind} on {g.operands} exceeds n={self.n}")

    @property
    def g1(self) -> int:
        return sum(1 for g in self.gates if not g.is_two_qubit)

    @property
    def g2(self) -> int:
        return sum(1 for g in self.gates if g.is_two_qubit)

    def dagger(self) -> "QuantumCircuit":
        return QuantumCircuit(self.n, tuple(dagger_gate(g) for g in reversed(self.gates)))


def apply_gate(state: np.ndarray, gate: GateSpec, n: int) -> np.ndarray:
    """Apply one gate to a state (or batch of states) over n qubits."""
    m = gate_matrix(gate)
    if gate.is_two_qubit:
        return apply_2q(state, m, gate.operands[0], gate.operands[1], n)
    return apply_1q(state, m, gate.operands[0], n)


def circuit_unitary(circuit: QuantumCircuit) -> np.ndarray:
    """Dense unitary of the whole circuit (declared gate order)."""
    if circuit.n > 13:
        raise CapacityError(f"dense assembly capped at 13 qubits, got {circuit.n}")
    u = np.eye(1 << circuit.n, dtype=complex)
    for gate in circuit.gates:
        u = apply_gate(u, gate, circuit.n)
    return u


# -- generation ---------------------------------------------------------------


def _random_one_qubit_gate(q: int, gen: np.random.Generator) -> GateSpec:
    kind = ONE_QUBIT_KINDS[gen.integers(3)]
    angles = tuple(gen.uniform(0.0, 2.0 * math.pi, _PARAM_COUNT[kind]))
    return GateSpec(kind, angles, (q,))


def _draw_layer_pairs(edges, previous, cap, gen):
    """Greedy maximal set of vertex-disjoint pairs avoiding the previous layer."""
    chosen = []
    busy = set()
    order = gen.permutation(len(edges))
    for idx in order:
        if len(chosen) >= cap:
            break
        a, b = edges[idx]
        if (a, b) in previous or a in busy or b in busy:
            continue
        chosen.append((a, b))
        busy.add(a)
        busy.add(b)
    return chosen, busy


def rqc_layers(
    coupling: CouplingMap, g1: int, p1: float, rng: RandomSource
) -> list[list[GateSpec]]:
    """Layer-by-layer draw of the coupled random circuit (see generate_rqc)."""
    if not 0.0 < p1 < 1.0:
        raise ValueError(f"one-qubit gate density must be in (0,1), got {p1}")
    if g1 < 0:
        raise ValueError("g1 must be nonnegative")
    if not coupling.edges:
        raise ValueError("coupling map has no edges")
    n = coupling.n
    g2 = math.ceil((1.0 - p1) / (2.0 * p1) * g1)
    y2 = math.ceil((1.0 - p1) / 2.0 * n)
    edges = coupling.sorted_edges()
    gen = rng.generator

    layers: list[list[GateSpec]] = []
    m1 = m2 = 0
    previous: set[tuple[int, int]] = set()
    while m1 < g1 and m2 < g2:
        layer: list[GateSpec] = []
        pairs, busy = _draw_layer_pairs(edges, previous, min(y2, g2 - m2), gen)
        for a, b in pairs:
            control, target = (a, b) if gen.integers(2) else (b, a)
            layer.append(GateSpec("CNOT", (), (control, target)))
        free = [q for q in range(n) if q not in busy]
        x1 = min(len(free), g1 - m1)
        for q in gen.choice(free, size=x1, replace=False) if x1 else ():
            layer.append(_random_one_qubit_gate(int(q), gen))
        if not layer:
            break
        layers.append(layer)
        m1 += x1
        m2 += len(pairs)
        previous = set(pairs)
    while m1 < g1:
        x1 = min(n, g1 - m1)
        layers.append(
            [_random_one_qubit_gate(int(q), gen) for q in gen.choice(n, size=x1, replace=False)]
        )
        m1 += x1
    while m2 < g2:
        pairs, _ = _draw_layer_pairs(edges, previous, min(y2, g2 - m2), gen)
        if not pairs:
            previous = set()  # single-edge maps: allow a repeat over deadlock
            continue
        layer = []
        for a, b in pairs:
            control, target = (a, b) if gen.integers(2) else (b, a)
            layer.append(GateSpec("CNOT", (), (control, target)))
        layers.append(layer)
        m2 += len(pairs)
        previous = set(pairs)
    return layers


def generate_rqc(
    coupling: CouplingMap, g1: int, p1: float, rng: RandomSource
) -> QuantumCircuit:
    """Layered random circuit hitting exact one- and two-qubit gate budgets.

    Layers alternate as long as both budgets are open: up to
    y2 = ceil((1-p1)/2 * n) vertex-disjoint CNOTs that do not repeat the
    previous layer's pairs, then one-qubit gates on (a random subset of) the
    remaining qubits.  Whichever budget is left unfinished is drained by
    trailing layers of that gate type alone.  g2 is derived from the target
    one-qubit density p1 as ceil((1-p1)/(2*p1) * g1).
    """
    layers = rqc_layers(coupling, g1, p1, rng)
    circuit = QuantumCircuit(coupling.n, tuple(g for layer in layers for g in layer))
    g2 = math.ceil((1.0 - p1) / (2.0 * p1) * g1)
    if circuit.g1 != g1 or circuit.g2 != g2:
        raise RuntimeError(
            f"budget mismatch: drew ({circuit.g1},{circuit.g2}), wanted ({g1},{g2})"
        )
    return circuit


def generate_qv(n: int, layers: int, rng: RandomSource) -> QuantumCircuit:
    """Permutation-paired layers of Haar-random SU(4) blocks."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if layers < 1:
        raise ValueError(f"need at least one layer, got {layers}")
    gen = rng.generator
    gates = []
    for _ in range(layers):
        perm = gen.permutation(n)
        for i in range(n // 2):
            a, b = int(perm[2 * i]), int(perm[2 * i + 1])
            gates.append(GateSpec("SU4", haar_unitary(4, rng), (a, b)))
    return QuantumCircuit(n, tuple(gates))


# -- Haar convergence measures -------------------------------------------------


def column_stats(u: np.ndarray) -> tuple[np.ndarray, float]:
    """First five moments and entropy of the first-column outcome weights.

    Over p_i = |U_{i0}|^2: returns ([sum p^k for k=1..5], -sum p ln p).
    """
    p = np.abs(u[:, 0]) ** 2
    moments = np.array([np.sum(p**k) for k in range(1, 6)])
    nonzero = p[p > 0]
    entropy = float(-(nonzero * np.log(nonzero)).sum())
    return moments, entropy


def haar_reference(k: int, dim: int) -> tuple[Fraction, Fraction, Fraction]:
    """Exact Haar ensemble values (M_k, relative variance of M_k, entropy).

    All three in rational arithmetic: the moment mean
    prod_{i=1}^{k-1}(1+i)/(N+i), its relative variance, and the expected
    outcome entropy sum_{i=2}^{N} 1/i.
    """
    if not 1 <= k <= 8:
        raise ValueError(f"moment order must be in 1..8, got {k}")
    n_f = Fraction(dim)
    moment = Fraction(1)
    for i in range(1, k):
        moment *= Fraction(1 + i, dim + i)
    var = Fraction(math.comb(2 * k, k), dim) + Fraction(dim - 1, dim)
    for i in range(k, 2 * k):
        var *= Fraction(dim - k + i, dim + i)
    var -= 1
    entropy = sum((Fraction(1, i) for i in range(2, dim + 1)), Fraction(0))
    return moment, var, entropy


# -- file format ----------------------------------------------------------------


def _emit(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        raise TypeError("no booleans in circuit files")
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        inner = ", ".join(f"{json.dumps(k)}: {_emit(v)}" for k, v in value.items())
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_emit(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)}")


def _gate_payload(gate: GateSpec) -> dict:
    if gate.kind == "SU4":
        m = np.asarray(gate.params)
        params = [[[float(z.real), float(z.imag)] for z in row] for row in m]
    else:
        params = list(gate.params)
    return {"kind": gate.kind, "params": params, "operands": list(gate.operands)}


def circuit_file_text(circuit: QuantumCircuit, coupling: CouplingMap | None = None) -> str:
    payload = {
        "n": circuit.n,
        "coupling": [list(e) for e in coupling.sorted_edges()] if coupling else None,
        "gates": [_gate_payload(g) for g in circuit.gates],
    }
    return _emit(payload) + "\n"


def write_circuit_file(path, circuit: QuantumCircuit, coupling: CouplingMap | None = None):
    with open(path, "w") as fh:
        fh.write(circuit_file_text(circuit, coupling))


def read_circuit_file(path) -> tuple[QuantumCircuit, CouplingMap | None]:
    with open(path) as fh:
        obj = json.load(fh)
    gates = []
    for g in obj["gates"]:
        if g["kind"] == "SU4":
            params = np.array(
                [[complex(re, im) for re, im in row] for row in g["params"]]
            )
        else:
            params = tuple(g["params"])
        gates.append(GateSpec(g["kind"], params, tuple(g["operands"])))
    circuit = QuantumCircuit(int(obj["n"]), tuple(gates))
    coupling = None
    if obj.get("coupling") is not None:
        coupling = CouplingMap(circuit.n, frozenset(tuple(e) for e in obj["coupling"]))
        for g in circuit.gates:
            if g.kind == "CNOT" and tuple(sorted(g.operands)) not in coupling.edges:
                raise ValueError(f"CNOT on {g.operands} violates the coupling map")
    return circuit, coupling
