"""Stabilizer-tableau engine: toric code states, Clifford evolution and exact entropies.

A Pauli is stored in XZ form ``i^k X^x Z^z``. Tableau rows are Hermitian generators
``(-1)^r`` times a tensor product of I, X, Y, Z, stored as bit vectors ``x, z`` with
Y on qubits where both bits are set.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import gf2
from .circuits import Circuit, CircuitError
from .lattice import GeometryError, Lattice, Region, _qubits

LOG2 = math.log(2.0)
DENSE_LIMIT = 12


class ResourceError(RuntimeError):
    pass


# --- Pauli strings --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PauliString:
    x: np.ndarray
    z: np.ndarray
    phase: int = 0  # power of i in XZ form

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.uint8) & 1
        z = np.asarray(self.z, dtype=np.uint8) & 1
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("X and Z masks must be equal-length vectors")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def from_ops(cls, n: int, ops: dict[int, str], sign: int = 1) -> "PauliString":
        """Hermitian Pauli from a {qubit: 'X'|'Y'|'Z'} map and a sign."""
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        for q, p in ops.items():
            x[q] = p in "XY"
            z[q] = p in "ZY"
        k = int(np.sum(x & z)) + (2 if sign < 0 else 0)
        return cls(x, z, k)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.x | self.z).tolist())

    @property
    def weight(self) -> int:
        return int(np.sum(self.x | self.z))

    @property
    def is_hermitian(self) -> bool:
        return (self.phase - int(np.sum(self.x & self.z))) % 2 == 0

    def commutes(self, other: "PauliString") -> bool:
        return int(np.sum(self.x & other.z) + np.sum(self.z & other.x)) % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        k = self.phase + other.phase + 2 * int(np.sum(self.z & other.x))
        return PauliString(self.x ^ other.x, self.z ^ other.z, k)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.phase == other.phase
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self):
        return hash((self.x.tobytes(), self.z.tobytes(), self.phase))

    def restricted(self, qubits: Sequence[int]) -> tuple[int, int, int]:
        """(x mask, z mask, phase) on ``qubits`` (first qubit = most significant bit)."""
        outside = set(self.support) - set(qubits)
        if outside:
            raise GeometryError(f"Pauli acts outside the region on {sorted(outside)[:5]}")
        return _masks(self.x[list(qubits)], self.z[list(qubits)]) + (self.phase,)

    def matrix(self, qubits: Sequence[int]) -> np.ndarray:
        xm, zm, k = self.restricted(qubits)
        return pauli_matrix(xm, zm, k, len(qubits))

    def label(self) -> str:
        chars = np.array(["I", "X", "Z", "Y"])[self.x + 2 * self.z]
        return f"i^{self.phase}*" + "".join(chars)


def _masks(xbits: np.ndarray, zbits: np.ndarray) -> tuple[int, int]:
    n = len(xbits)
    weights = 1 << np.arange(n - 1, -1, -1, dtype=object)
    return int(np.dot(xbits.astype(object), weights)), int(np.dot(zbits.astype(object), weights))


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.int64)
    count = np.zeros_like(a)
    while np.any(a):
        count += a & 1
        a = a >> 1
    return count


def pauli_matrix(xmask: int, zmask: int, k: int, n: int) -> np.ndarray:
    """Dense matrix of i^k X^x Z^z on n qubits (integer masks, MSB = first qubit)."""
    d = 2**n
    b = np.arange(d)
    m = np.zeros((d, d), dtype=complex)
    m[b ^ xmask, b] = (1j**k) * (-1.0) ** _popcount(b & zmask)
    return m


# --- gate action on rows of Paulis ----------------------------------------------------


def _conjugate(x: np.ndarray, z: np.ndarray, r: np.ndarray, name: str, qs: tuple[int, ...]) -> None:
    """Conjugate Hermitian rows (x, z, sign bit r) in place by a named Clifford."""
    if name == "H":
        (a,) = qs
        r ^= x[:, a] & z[:, a]
        tmp = x[:, a].copy()
        x[:, a] = z[:, a]
        z[:, a] = tmp
    elif name == "S":
        (a,) = qs
        r ^= x[:, a] & z[:, a]
        z[:, a] ^= x[:, a]
    elif name == "SDG":
        for _ in range(3):
            _conjugate(x, z, r, "S", qs)
    elif name == "X":
        r ^= z[:, qs[0]]
    elif name == "Z":
        r ^= x[:, qs[0]]
    elif name == "Y":
        r ^= x[:, qs[0]] ^ z[:, qs[0]]
    elif name == "CNOT":
        a, b = qs
        r ^= x[:, a] & z[:, b] & (x[:, b] ^ z[:, a] ^ 1)
        x[:, b] ^= x[:, a]
        z[:, a] ^= z[:, b]
    elif name == "CZ":
        a, b = qs
        _conjugate(x, z, r, "H", (b,))
        _conjugate(x, z, r, "CNOT", (a, b))
        _conjugate(x, z, r, "H", (b,))
    else:
        raise CircuitError(f"unknown Clifford {name!r}")


def _apply_circuit_rows(x, z, r, circuit: Circuit) -> None:
    for _, _, gate in circuit.gates():
        if not gate.is_clifford:
            raise CircuitError("dense gate cannot act on a stabilizer state")
        for name, qs in gate.named_ops():
            _conjugate(x, z, r, name, qs)


def conjugate_pauli(pauli: PauliString, circuit: Circuit) -> PauliString:
    """U P U^dagger for a Clifford circuit U."""
    ny = int(np.sum(pauli.x & pauli.z))
    extra = (pauli.phase - ny) % 4  # P = i^extra * (Hermitian product of I, X, Y, Z)
    herm_sign = extra // 2
    x = pauli.x[None, :].copy()
    z = pauli.z[None, :].copy()
    r = np.array([herm_sign], dtype=np.uint8)
    _apply_circuit_rows(x, z, r, circuit)
    k = (extra % 2) + 2 * int(r[0]) + int(np.sum(x[0] & z[0]))
    return PauliString(x[0], z[0], k)


# --- stabilizer states -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StabilizerState:
    x: np.ndarray
    z: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        for name in ("x", "z", "r"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.uint8) & 1)
        n = self.x.shape[0]
        if self.x.shape != (n, n) or self.z.shape != (n, n) or self.r.shape != (n,):
            raise ValueError("tableau must be n x n with n phases")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def tableau(self) -> np.ndarray:
        return np.concatenate([self.x, self.z], axis=1)

    def generator(self, i: int) -> PauliString:
        return PauliString(self.x[i], self.z[i], 2 * int(self.r[i]) + int(np.sum(self.x[i] & self.z[i])))

    def generators(self) -> list[PauliString]:
        return [self.generator(i) for i in range(self.n)]

    def check(self) -> None:
        """Raise if generators fail to commute or are dependent."""
        sym = (self.x.astype(np.int64) @ self.z.T.astype(np.int64) + self.z.astype(np.int64) @ self.x.T.astype(np.int64)) % 2
        if np.any(sym):
            raise ValueError("stabilizer generators do not commute")
        if gf2.rank(self.tableau) != self.n:
            raise ValueError("stabilizer generators are not independent")

    def same_group(self, other: "StabilizerState") -> bool:
        """True iff both tableaux generate the same signed stabilizer group."""
        if self.n != other.n or not gf2.same_row_space(self.tableau, other.tableau):
            return False
        return all(expectation(self, g) == 1 for g in other.generators())

    def dumps(self) -> str:
        lines = []
        for i in range(self.n):
            bits = "".join(map(str, self.x[i])) + "".join(map(str, self.z[i]))
            lines.append(("-" if self.r[i] else "+") + bits)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "StabilizerState":
        rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
        n = len(rows)
        x = np.zeros((n, n), np.uint8)
        z = np.zeros((n, n), np.uint8)
        r = np.zeros(n, np.uint8)
        for i, row in enumerate(rows):
            if row[0] not in "+-" or len(row) != 2 * n + 1:
                raise ValueError(f"malformed tableau row {i + 1}")
            r[i] = row[0] == "-"
            bits = np.frombuffer(row[1:].encode(), dtype=np.uint8) - ord("0")
            x[i], z[i] = bits[:n], bits[n:]
        state = cls(x, z, r)
        state.check()
        return state


def product_state(n: int) -> StabilizerState:
    """|0...0>, stabilized by Z on every qubit."""
    return StabilizerState(np.zeros((n, n), np.uint8), np.eye(n, dtype=np.uint8), np.zeros(n, np.uint8))


def from_generators(paulis: Sequence[PauliString]) -> StabilizerState:
    n = len(paulis)
    x = np.array([p.x for p in paulis], dtype=np.uint8).reshape(n, -1)
    z = np.array([p.z for p in paulis], dtype=np.uint8).reshape(n, -1)
    r = np.zeros(n, np.uint8)
    for i, p in enumerate(paulis):
        if not p.is_hermitian:
            raise ValueError("stabilizer generators must be Hermitian")
        r[i] = ((p.phase - int(np.sum(p.x & p.z))) % 4) // 2
    state = StabilizerState(x, z, r)
    state.check()
    return state


def toric_code_ground_state(lattice: Lattice, logical_sector: tuple[int, int] = (1, 1)) -> StabilizerState:
    """Toric-code ground state with both wrapping Z loops fixed to ``logical_sector``."""
    if not lattice.periodic:
        raise NotImplementedError("toric code is only implemented on the torus")
    n = lattice.n_qubits
    x = np.zeros((n, n), np.uint8)
    z = np.zeros((n, n), np.uint8)
    r = np.zeros(n, np.uint8)
    row = 0
    for star in lattice.stars()[:-1]:
        x[row, list(star)] = 1
        row += 1
    for plaq in lattice.plaquettes()[:-1]:
        z[row, list(plaq)] = 1
        row += 1
    z[row, [lattice.h(0, c) for c in range(lattice.cols)]] = 1
    r[row] = logical_sector[0] < 0
    row += 1
    z[row, [lattice.v(rr, 0) for rr in range(lattice.rows)]] = 1
    r[row] = logical_sector[1] < 0
    return StabilizerState(x, z, r)


def apply_clifford(state: StabilizerState, circuit: Circuit) -> StabilizerState:
    x, z, r = state.x.copy(), state.z.copy(), state.r.copy()
    _apply_circuit_rows(x, z, r, circuit)
    return StabilizerState(x, z, r)


def apply_pauli(state: StabilizerState, pauli: PauliString) -> StabilizerState:
    """P sigma P^dagger: flips the sign of every generator anticommuting with P."""
    anti = ((state.x.astype(np.int64) @ pauli.z + state.z.astype(np.int64) @ pauli.x) % 2).astype(np.uint8)
    return StabilizerState(state.x, state.z, state.r ^ anti)


# --- entropies -----------------------------------------------------------------------


def entropy_bits(state: StabilizerState, region) -> int:
    """S(region) / log 2, an exact integer."""
    qs = sorted(_qubits(region))
    n = state.n
    if any(q < 0 or q >= n for q in qs):
        raise GeometryError("region outside the state")
    if len(qs) > n // 2:
        qs = sorted(set(range(n)) - set(qs))
    if not qs:
        return 0
    sub = np.concatenate([state.x[:, qs], state.z[:, qs]], axis=1)
    return gf2.rank(sub) - len(qs)


def entropy(state: StabilizerState, region) -> float:
    return entropy_bits(state, region) * LOG2


def _check_disjoint(*regions) -> list[frozenset[int]]:
    sets = [_qubits(r) for r in regions]
    for i, a in enumerate(sets):
        for b in sets[i + 1:]:
            if a & b:
                raise GeometryError("regions overlap")
    return sets


def cmi_bits(state: StabilizerState, A, B, C) -> int:
    a, b, c = _check_disjoint(A, B, C)
    return (
        entropy_bits(state, a | b)
        + entropy_bits(state, b | c)
        - entropy_bits(state, b)
        - entropy_bits(state, a | b | c)
    )


def cmi(state: StabilizerState, A, B, C) -> float:
    return cmi_bits(state, A, B, C) * LOG2


def mutual_information_bits(state: StabilizerState, A, C) -> int:
    a, c = _check_disjoint(A, C)
    return entropy_bits(state, a) + entropy_bits(state, c) - entropy_bits(state, a | c)


def mutual_information(state: StabilizerState, A, C) -> float:
    return mutual_information_bits(state, A, C) * LOG2


def supported_rank(state: StabilizerState, region) -> int:
    """k_R: number of independent stabilizers supported inside ``region``."""
    qs = set(_qubits(region))
    comp = [q for q in range(state.n) if q not in qs]
    if not comp:
        return state.n
    return state.n - gf2.rank(np.concatenate([state.x[:, comp], state.z[:, comp]], axis=1))


def supported_subgroup(state: StabilizerState, region) -> list[PauliString]:
    """Independent generators of the stabilizer subgroup supported inside ``region``."""
    qs = set(_qubits(region))
    comp = [q for q in range(state.n) if q not in qs]
    if comp:
        kernel = gf2.left_kernel(np.concatenate([state.x[:, comp], state.z[:, comp]], axis=1))
    else:
        kernel = np.eye(state.n, dtype=np.uint8)
    gens = state.generators()
    out = []
    for combo in kernel:
        acc = PauliString.identity(state.n)
        for i in np.flatnonzero(combo):
            acc = acc * gens[i]
        out.append(acc)
    # reduce to an independent set (the kernel basis already is one)
    return out


def pauli_invisible(state: StabilizerState, pauli: PauliString, region) -> bool:
    """Does conjugating by ``pauli`` leave the marginal on ``region`` unchanged?

    True iff the Pauli commutes with every stabilizer supported inside the region; checked on
    the kernel basis directly, without forming the subgroup elements.
    """
    qs = set(_qubits(region))
    comp = [q for q in range(state.n) if q not in qs]
    anti = (state.x.astype(np.int64) @ pauli.z + state.z.astype(np.int64) @ pauli.x) % 2
    if not comp:
        return not np.any(anti)
    kernel = gf2.left_kernel(np.concatenate([state.x[:, comp], state.z[:, comp]], axis=1))
    if len(kernel) == 0:
        return True
    return not np.any((kernel.astype(np.int64) @ anti) % 2)


def expectation(state: StabilizerState, pauli: PauliString) -> int:
    """<P> on a stabilizer state: 0, +1 or -1 (P Hermitian)."""
    anti = (state.x.astype(np.int64) @ pauli.z + state.z.astype(np.int64) @ pauli.x) % 2
    if np.any(anti):
        return 0
    target = np.concatenate([pauli.x, pauli.z])
    combo = gf2.solve_left(state.tableau, target)
    if combo is None:  # pragma: no cover - impossible for a complete stabilizer set
        return 0
    acc = PauliString.identity(state.n)
    for i in np.flatnonzero(combo):
        acc = acc * state.generator(i)
    diff = (pauli.phase - acc.phase) % 4
    if diff == 0:
        return 1
    if diff == 2:
        return -1
    raise ValueError("expectation of a non-Hermitian Pauli")


# --- dense hand-off ---------------------------------------------------------------------


def _group_elements(gens: list[tuple[int, int, int]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All 2^k products of commuting generators as (x masks, z masks, phases)."""
    xs, zs, ks = [0], [0], [0]
    for gx, gz, gk in gens:
        m = len(xs)
        for j in range(m):
            x1, z1, k1 = xs[j], zs[j], ks[j]
            xs.append(x1 ^ gx)
            zs.append(z1 ^ gz)
            ks.append((k1 + gk + 2 * bin(z1 & gx).count("1")) % 4)
    return np.array(xs, dtype=np.int64), np.array(zs, dtype=np.int64), np.array(ks, dtype=np.int64)


def reduced_density_matrix(state: StabilizerState, region, limit: int = DENSE_LIMIT, labels=None):
    """Dense reduced state on ``region`` (qubits in ascending order, first = most significant).

    Stored as an orthonormal-column factor: rho = W W^dagger with W of shape (2^m, 2^(m-k)).
    """
    from .dense import DensityMatrix

    qs = sorted(_qubits(region))
    m = len(qs)
    if m > limit:
        raise ResourceError(f"region of {m} qubits exceeds the dense limit of {limit}")
    labels = tuple(qs) if labels is None else tuple(labels)
    if m == 0:
        return DensityMatrix(np.ones((1, 1), dtype=complex), (), ())
    gens = [p.restricted(qs) for p in supported_subgroup(state, qs)]
    k = len(gens)
    xs, zs, ks = _group_elements(gens)
    d = 2**m
    b = np.arange(d, dtype=np.int64)

    # basis states b surviving the pure-Z part of the group
    ok = np.ones(d, dtype=bool)
    for x1, z1, k1 in zip(xs, zs, ks):
        if x1 == 0:
            ok &= ((1j ** int(k1)) * (-1.0) ** _popcount(b & int(z1))).real > 0.5
    # canonical representatives of cosets of the X-part span
    xbasis = _xor_basis([int(v) for v in xs])
    canon = b.copy()
    for row, pivot in xbasis:
        hit = (canon >> pivot) & 1
        canon = np.where(hit == 1, canon ^ row, canon)
    reps = np.flatnonzero(ok & (canon == b))
    if len(reps) != 2 ** (m - k):  # pragma: no cover - structural invariant
        raise AssertionError("stabilizer code dimension mismatch")
    w = np.zeros((d, len(reps)), dtype=complex)
    cols = np.arange(len(reps))
    for x1, z1, k1 in zip(xs, zs, ks):
        w[reps ^ int(x1), cols] += (1j ** int(k1)) * (-1.0) ** _popcount(reps & int(z1))
    w /= np.linalg.norm(w, axis=0, keepdims=True)
    w /= math.sqrt(len(reps))
    return DensityMatrix(None, labels, (2,) * m, factor=w)


def _xor_basis(values: Iterable[int]) -> list[tuple[int, int]]:
    """Reduced XOR basis as (row, pivot bit) pairs with distinct leading bits."""
    basis: list[tuple[int, int]] = []
    for v in values:
        for row, pivot in basis:
            if (v >> pivot) & 1:
                v ^= row
        if v:
            pivot = v.bit_length() - 1
            basis = [((row ^ v) if (row >> pivot) & 1 else row, p) for row, p in basis]
            basis.append((v, pivot))
    return basis


# --- string operators -------------------------------------------------------------------


def _odd_vertices(lattice: Lattice, edges: Iterable[int]) -> set:
    odd: set = set()
    for q in edges:
        for vtx in lattice.edge_vertices(q):
            odd ^= {vtx}
    return odd


def _odd_plaquettes(lattice: Lattice, edges: Iterable[int]) -> set:
    odd: set = set()
    for q in edges:
        for p in lattice.edge_plaquettes(q):
            odd ^= {p}
    return odd


def primal_path(lattice: Lattice, start, end, avoid: Iterable[int] = ()) -> list[int]:
    """Shortest edge path between two vertices that uses no edge in ``avoid``."""
    return _bfs_path(lattice, lattice.vertex(*start), lattice.vertex(*end), set(avoid), dual=False)


def dual_path(lattice: Lattice, start, end, avoid: Iterable[int] = ()) -> list[int]:
    """Shortest dual path between two plaquettes; returns the edges it crosses."""
    return _bfs_path(lattice, lattice.vertex(*start), lattice.vertex(*end), set(avoid), dual=True)


def _bfs_path(lattice: Lattice, start, end, avoid: set[int], dual: bool) -> list[int]:
    return route_path(lattice, [start], [end], avoid, dual)


def route_path(lattice: Lattice, starts, ends, avoid: Iterable[int] = (), dual: bool = False) -> list[int]:
    """Shortest path from any start node to any end node, as the list of edges used or crossed.

    Nodes are vertices (``dual=False``) or plaquettes (``dual=True``); ties break by the
    sorted order of ``starts`` so routing is deterministic.
    """
    avoid = set(avoid)

    def steps(node):
        r, c = node
        if dual:  # plaquette (r, c): crossing its four edges
            out = [((r - 1, c), lattice.h(r, c)), ((r + 1, c), lattice.h(r + 1, c)),
                   ((r, c - 1), lattice.v(r, c)), ((r, c + 1), lattice.v(r, c + 1))]
        else:
            out = [((r, c + 1), lattice.h(r, c)), ((r, c - 1), lattice.h(r, c - 1)),
                   ((r + 1, c), lattice.v(r, c)), ((r - 1, c), lattice.v(r - 1, c))]
        return [(lattice.vertex(*nb), e) for nb, e in out]

    targets = {lattice.vertex(*e) for e in ends}
    prev: dict = {}
    queue: deque = deque()
    for s in sorted(lattice.vertex(*s) for s in starts):
        if s not in prev:
            prev[s] = None
            queue.append(s)
    hit = None
    while queue:
        node = queue.popleft()
        if node in targets:
            hit = node
            break
        for nb, edge in steps(node):
            if edge in avoid or nb in prev:
                continue
            prev[nb] = (node, edge)
            queue.append(nb)
    if hit is None:
        raise GeometryError("no path avoids the keep-out region")
    edges = []
    node = hit
    while prev[node] is not None:
        node, edge = prev[node]
        edges.append(edge)
    return edges[::-1]


ANYONS = ("1", "e", "m", "eps")


def _normalize_anyon(anyon: str) -> str:
    a = {"epsilon": "eps", "ε": "eps", "psi": "eps"}.get(anyon, anyon)
    if a not in ANYONS:
        raise ValueError(f"unknown anyon {anyon!r}")
    return a


def string_operator(lattice: Lattice, anyon: str, path: Sequence[int] = (), dual: Sequence[int] = ()) -> PauliString:
    """Open string creating ``anyon`` at the path ends.

    ``path`` is an open edge path (Z string, e charges at its end vertices) and ``dual``
    the edges crossed by an open dual path (X string, m fluxes at its end plaquettes).
    """
    a = _normalize_anyon(anyon)
    n = lattice.n_qubits
    x = np.zeros(n, np.uint8)
    z = np.zeros(n, np.uint8)
    if a in ("e", "eps"):
        if len(_odd_vertices(lattice, path)) != 2:
            raise GeometryError("e string needs an open edge path (use closed_string_operator for loops)")
        z[list(path)] ^= 1
    if a in ("m", "eps"):
        if len(_odd_plaquettes(lattice, dual)) != 2:
            raise GeometryError("m string needs an open dual path (use closed_string_operator for loops)")
        x[list(dual)] ^= 1
    return PauliString(x, z, int(np.sum(x & z)))


def closed_string_operator(lattice: Lattice, anyon: str, loop: Sequence[int] = (), dual: Sequence[int] = (), region=None) -> PauliString:
    """Closed string (sector witness): Z on an edge cycle and/or X on a dual cycle."""
    a = _normalize_anyon(anyon)
    n = lattice.n_qubits
    x = np.zeros(n, np.uint8)
    z = np.zeros(n, np.uint8)
    if a in ("e", "eps"):
        if not loop or _odd_vertices(lattice, loop):
            raise GeometryError("e loop is not a closed edge cycle")
        z[list(loop)] ^= 1
    if a in ("m", "eps"):
        if not dual or _odd_plaquettes(lattice, dual):
            raise GeometryError("m loop is not a closed dual cycle")
        x[list(dual)] ^= 1
    if region is not None:
        outside = (set(loop) | set(dual)) - _qubits(region)
        if outside:
            raise GeometryError("loop exits region")
    return PauliString(x, z, int(np.sum(x & z)))


def sector_witnesses(lattice: Lattice, primal_loop, dual_loop, region=None) -> dict[str, PauliString]:
    """The four closed strings around a hole, keyed by the anyon they transport."""
    return {
        "1": PauliString.identity(lattice.n_qubits),
        "e": closed_string_operator(lattice, "e", loop=primal_loop, region=region),
        "m": closed_string_operator(lattice, "m", dual=dual_loop, region=region),
        "eps": closed_string_operator(lattice, "eps", loop=primal_loop, dual=dual_loop, region=region),
    }
