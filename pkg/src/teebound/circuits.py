"""Layered local circuits of one- and two-qubit gates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .lattice import Lattice, Region, forward_cone, _qubits

ONE_QUBIT = ("H", "S", "SDG", "X", "Y", "Z")
TWO_QUBIT = ("CNOT", "CZ")
CLIFFORD_KINDS = ONE_QUBIT + TWO_QUBIT + ("CLIFFORD",)
UNITARY_TOL = 1e-12

_SQ2 = 1 / np.sqrt(2)
_MATS = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.diag([1, 1j]).astype(complex),
    "SDG": np.diag([1, -1j]).astype(complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    # first support qubit is the most significant bit
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
}
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_INVERSE_NAME = {"S": "SDG", "SDG": "S"}


class CircuitError(ValueError):
    pass


def _embed(name: str, local: tuple[int, ...], arity: int) -> np.ndarray:
    """Matrix of a named gate acting on local positions of an ``arity``-qubit block."""
    mat = _MATS[name]
    if arity == len(local):
        if local == tuple(range(arity)):
            return mat
        # two-qubit gate with reversed orientation
        return _SWAP @ mat @ _SWAP
    (q,) = local
    return np.kron(mat, np.eye(2)) if q == 0 else np.kron(np.eye(2), mat)


@dataclass(frozen=True)
class Gate:
    """A gate on one or two qubits.

    ``kind`` is a named Clifford, ``CLIFFORD`` (a word ``ops`` of named gates on local
    positions, applied left to right in time) or ``UNITARY`` (dense ``matrix``).
    """

    kind: str
    support: tuple[int, ...]
    ops: tuple[tuple[str, tuple[int, ...]], ...] = ()
    matrix: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(q) for q in self.support))
        if not 1 <= len(self.support) <= 2:
            raise CircuitError("gates act on one or two qubits")
        if len(set(self.support)) != len(self.support):
            raise CircuitError(f"repeated qubit in gate support {self.support}")
        if self.kind in ONE_QUBIT and len(self.support) != 1:
            raise CircuitError(f"{self.kind} is a one-qubit gate")
        if self.kind in TWO_QUBIT and len(self.support) != 2:
            raise CircuitError(f"{self.kind} is a two-qubit gate")
        if self.kind == "UNITARY":
            if self.matrix is None:
                raise CircuitError("UNITARY gate needs a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            if isinstance(self.matrix, np.ndarray):
                object.__setattr__(self, "matrix", _freeze(m))
            d = 2 ** len(self.support)
            if m.shape != (d, d):
                raise CircuitError(f"matrix shape {m.shape} does not match support size")
            if np.linalg.norm(m.conj().T @ m - np.eye(d), 2) > UNITARY_TOL:
                raise CircuitError("gate matrix is not unitary")
        elif self.kind == "CLIFFORD":
            object.__setattr__(self, "ops", tuple((n, tuple(l)) for n, l in self.ops))
        elif self.kind not in CLIFFORD_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")

    @property
    def is_clifford(self) -> bool:
        return self.kind != "UNITARY"

    def named_ops(self) -> list[tuple[str, tuple[int, ...]]]:
        """Time-ordered named gates on global qubits (Clifford gates only)."""
        if self.kind == "UNITARY":
            raise CircuitError("dense gate has no Clifford decomposition")
        if self.kind == "CLIFFORD":
            return [(n, tuple(self.support[i] for i in loc)) for n, loc in self.ops]
        return [(self.kind, self.support)]

    def unitary(self) -> np.ndarray:
        if self.kind == "UNITARY":
            return np.array(self.matrix, dtype=complex)
        if self.kind != "CLIFFORD":
            return _MATS[self.kind].copy()
        arity = len(self.support)
        u = np.eye(2**arity, dtype=complex)
        for name, loc in self.ops:
            u = _embed(name, tuple(loc), arity) @ u
        return u

    def inverse(self) -> "Gate":
        if self.kind == "UNITARY":
            return Gate("UNITARY", self.support, matrix=_freeze(np.array(self.matrix).conj().T))
        if self.kind == "CLIFFORD":
            ops = tuple((_INVERSE_NAME.get(n, n), loc) for n, loc in reversed(self.ops))
            return Gate("CLIFFORD", self.support, ops=ops)
        return Gate(_INVERSE_NAME.get(self.kind, self.kind), self.support)

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind, "support": list(self.support)}
        if self.kind == "CLIFFORD":
            doc["ops"] = [[n, list(loc)] for n, loc in self.ops]
        if self.kind == "UNITARY":
            doc["matrix"] = [[float(z.real), float(z.imag)] for z in np.array(self.matrix).ravel()]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Gate":
        kind = doc["kind"]
        support = tuple(doc["support"])
        if kind == "UNITARY":
            flat = np.array([complex(re, im) for re, im in doc["matrix"]])
            d = 2 ** len(support)
            return cls(kind, support, matrix=_freeze(flat.reshape(d, d)))
        ops = tuple((n, tuple(loc)) for n, loc in doc.get("ops", ()))
        return cls(kind, support, ops=ops)


def _freeze(m: np.ndarray) -> tuple:
    return tuple(tuple(complex(z) for z in row) for row in np.asarray(m))


@dataclass(frozen=True)
class Circuit:
    layers: tuple[tuple[Gate, ...], ...] = ()

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        for li, layer in enumerate(layers):
            seen: set[int] = set()
            for gate in layer:
                if seen.intersection(gate.support):
                    raise CircuitError(f"overlapping gates in layer {li}")
                seen.update(gate.support)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(q for layer in self.layers for g in layer for q in g.support)

    @property
    def is_clifford(self) -> bool:
        return all(g.is_clifford for _, _, g in self.gates())

    def gates(self) -> Iterator[tuple[int, int, Gate]]:
        for li, layer in enumerate(self.layers):
            for gi, gate in enumerate(layer):
                yield li, gi, gate

    def __len__(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def to_json(self) -> str:
        return json.dumps([[g.to_dict() for g in layer] for layer in self.layers])

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls(tuple(tuple(Gate.from_dict(g) for g in layer) for layer in json.loads(text)))

    def compose(self, later: "Circuit") -> "Circuit":
        """Circuit applying ``self`` first, then ``later``."""
        return Circuit(self.layers + later.layers)


IDENTITY = Circuit(())


def invert(circuit: Circuit) -> Circuit:
    return Circuit(tuple(tuple(g.inverse() for g in layer) for layer in reversed(circuit.layers)))


# --- random two-qubit Cliffords -------------------------------------------------

_GENERATORS = (("H", (0,)), ("H", (1,)), ("S", (0,)), ("S", (1,)), ("CNOT", (0, 1)))


def _phase_key(u: np.ndarray) -> bytes:
    flat = u.ravel()
    idx = int(np.argmax(np.abs(flat) > 0.3))
    v = flat * (abs(flat[idx]) / flat[idx])
    # adding 0.0 folds -0.0 into +0.0 so equal matrices hash equally
    return (np.round(np.concatenate([v.real, v.imag]), 6) + 0.0).tobytes()


@lru_cache(maxsize=1)
def two_qubit_clifford_table() -> tuple[tuple[tuple[str, tuple[int, ...]], ...], ...]:
    """All 11520 two-qubit Cliffords (modulo global phase) as words in H, S, CNOT.

    Breadth-first enumeration of the group generated by H and S on each qubit and
    CNOT, deduplicating by phase-normalized unitary.
    """
    start = np.eye(4, dtype=complex)
    words = [()]
    seen = {_phase_key(start)}
    frontier = [(start, ())]
    gens = [(_embed(n, loc, 2), (n, loc)) for n, loc in _GENERATORS]
    while frontier:
        nxt = []
        for u, word in frontier:
            for g, op in gens:
                v = g @ u
                key = _phase_key(v)
                if key not in seen:
                    seen.add(key)
                    w = word + (op,)
                    words.append(w)
                    nxt.append((v, w))
        frontier = nxt
    return tuple(words)


def random_two_qubit_clifford(support: Sequence[int], rng: np.random.Generator) -> Gate:
    table = two_qubit_clifford_table()
    return Gate("CLIFFORD", tuple(support), ops=table[int(rng.integers(len(table)))])


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# --- brickwork ensembles -----------------------------------------------------------


def brickwork_pairs(lattice: Lattice, layer: int) -> list[tuple[int, int]]:
    """Perfect matching of horizontal to vertical edges sharing a vertex.

    Four corner patterns are cycled so consecutive layers entangle in different directions.
    """
    pattern = layer % 4
    pairs = []
    for r in range(lattice.rows):
        for c in range(lattice.cols):
            h = lattice.h(r, c)
            if pattern == 0:
                v = lattice.v(r, c)
            elif pattern == 1:
                v = lattice.v(r - 1, c + 1)
            elif pattern == 2:
                v = lattice.v(r, c + 1)
            else:
                v = lattice.v(r - 1, c)
            pairs.append((h, v))
    return pairs


def _layer_rng(seed: int, layer: int, gate: int) -> np.random.Generator:
    return np.random.default_rng([seed, layer, gate])


def _brickwork(lattice, depth, restrict, make_gate) -> Circuit:
    if depth < 0:
        raise CircuitError("depth must be >= 0")
    if not lattice.periodic:
        raise CircuitError("brickwork ensembles are defined on the torus")
    keep = None if restrict is None else _qubits(restrict)
    layers = []
    for li in range(depth):
        layer = []
        for gi, pair in enumerate(brickwork_pairs(lattice, li)):
            if keep is not None and not keep.issuperset(pair):
                continue
            layer.append(make_gate(pair, li, gi))
        layers.append(tuple(layer))
    return Circuit(tuple(layers))


def random_shallow_clifford(lattice: Lattice, depth: int, seed: int, restrict_to=None) -> Circuit:
    """Brickwork of uniformly random two-qubit Cliffords on adjacent edge pairs."""
    return _brickwork(
        lattice,
        depth,
        restrict_to,
        lambda pair, li, gi: random_two_qubit_clifford(pair, _layer_rng(seed, li, gi)),
    )


def random_shallow_unitary(lattice: Lattice, depth: int, seed: int, restrict_to=None) -> Circuit:
    """Brickwork of Haar-random two-qubit unitaries; gates leaving ``restrict_to`` are dropped."""
    return _brickwork(
        lattice,
        depth,
        restrict_to,
        lambda pair, li, gi: Gate("UNITARY", pair, matrix=_freeze(haar_unitary(4, _layer_rng(seed, li, gi)))),
    )


def random_circuit_on_pairs(
    pairs_per_layer: Sequence[Sequence[tuple[int, int]]], seed: int, clifford: bool = True
) -> Circuit:
    """Random circuit on explicitly listed (disjoint) pairs per layer."""
    layers = []
    for li, pairs in enumerate(pairs_per_layer):
        layer = []
        for gi, pair in enumerate(pairs):
            rng = _layer_rng(seed, li, gi)
            if clifford:
                layer.append(random_two_qubit_clifford(pair, rng))
            else:
                layer.append(Gate("UNITARY", pair, matrix=_freeze(haar_unitary(4, rng))))
        layers.append(tuple(layer))
    return Circuit(tuple(layers))


# --- light-cone surgery -------------------------------------------------------------


def restrict_outside_light_cone(circuit: Circuit, protected) -> Circuit:
    """Drop the causal future of ``protected`` from ``circuit``.

    The result U' acts trivially on ``protected`` and satisfies U = V U' with V made of the
    dropped gates, supported inside the forward cone of ``protected``. Layer count is kept.
    """
    _, removed = forward_cone(circuit, protected)
    return Circuit(
        tuple(
            tuple(g for gi, g in enumerate(layer) if (li, gi) not in removed)
            for li, layer in enumerate(circuit.layers)
        )
    )


def removed_part(circuit: Circuit, protected) -> Circuit:
    """The gates that :func:`restrict_outside_light_cone` drops, as their own circuit."""
    _, removed = forward_cone(circuit, protected)
    return Circuit(
        tuple(
            tuple(g for gi, g in enumerate(layer) if (li, gi) in removed)
            for li, layer in enumerate(circuit.layers)
        )
    )


def restrict_to_region(circuit: Circuit, region) -> Circuit:
    keep = _qubits(region)
    return Circuit(tuple(tuple(g for g in layer if keep.issuperset(g.support)) for layer in circuit.layers))


def circuit_unitary(circuit: Circuit, qubits: Sequence[int]) -> np.ndarray:
    """Dense unitary of ``circuit`` on the ordered ``qubits`` (first = most significant)."""
    pos = {q: i for i, q in enumerate(qubits)}
    n = len(qubits)
    u = np.eye(2**n, dtype=complex).reshape([2] * n + [2**n])
    for _, _, gate in circuit.gates():
        axes = [pos[q] for q in gate.support]
        k = len(axes)
        g = gate.unitary().reshape([2] * (2 * k))
        u = np.tensordot(g, u, axes=(list(range(k, 2 * k)), axes))
        u = np.moveaxis(u, list(range(k)), axes)
    return u.reshape(2**n, 2**n)


def gates_touching(circuit: Circuit, region: Iterable[int]) -> int:
    reg = set(region)
    return sum(1 for _, _, g in circuit.gates() if reg.intersection(g.support))
