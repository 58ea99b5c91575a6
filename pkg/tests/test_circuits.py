import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teebound import dense, stab
from teebound.circuits import (
    IDENTITY,
    Circuit,
    CircuitError,
    Gate,
    circuit_unitary,
    haar_unitary,
    invert,
    random_circuit_on_pairs,
    random_shallow_clifford,
    random_shallow_unitary,
    removed_part,
    restrict_outside_light_cone,
    restrict_to_region,
    two_qubit_clifford_table,
)
from teebound.lattice import Lattice, build_annulus_partition, forward_cone, light_cone


def layers_disjoint(circ: Circuit) -> bool:
    for layer in circ.layers:
        seen = set()
        for g in layer:
            if seen & set(g.support):
                return False
            seen |= set(g.support)
    return True


def test_clifford_table_size_and_closure():
    table = two_qubit_clifford_table()
    assert len(table) == 11520
    # every word is a Clifford: it maps Paulis to Paulis up to phase
    rng = np.random.default_rng(0)
    paulis = [np.kron(a, b) for a in stab_paulis() for b in stab_paulis()]
    for idx in rng.integers(len(table), size=20):
        u = Gate("CLIFFORD", (0, 1), ops=table[idx]).unitary()
        for p in paulis[1:]:
            img = u @ p @ u.conj().T
            overlaps = [abs(np.trace(q.conj().T @ img)) / 4 for q in paulis]
            assert max(overlaps) == pytest.approx(1.0)


def stab_paulis():
    return [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]


def test_depth_zero_is_identity(lat6):
    circ = random_shallow_clifford(lat6, 0, seed=1)
    assert circ.depth == 0 and circ.support == frozenset()


def test_deterministic_per_seed(lat6):
    assert random_shallow_clifford(lat6, 2, 7) == random_shallow_clifford(lat6, 2, 7)
    assert random_shallow_clifford(lat6, 2, 7) != random_shallow_clifford(lat6, 2, 8)
    assert random_shallow_unitary(lat6, 1, 7).to_json() == random_shallow_unitary(lat6, 1, 7).to_json()


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_full_support_and_disjoint_layers(lat12, depth):
    circ = random_shallow_clifford(lat12, depth, seed=depth)
    assert circ.depth == depth
    assert circ.support == frozenset(range(lat12.n_qubits))
    assert layers_disjoint(circ)


def test_dense_gates_unitary(lat6):
    circ = random_shallow_unitary(lat6, 1, seed=0)
    for _, _, g in circ.gates():
        u = g.unitary()
        assert np.linalg.norm(u.conj().T @ u - np.eye(4), 2) < 1e-12


def test_restricted_ensembles(lat12, annulus12):
    bc = annulus12.B.qubits | annulus12.C.qubits
    circ = random_shallow_unitary(lat12, 2, seed=4, restrict_to=bc)
    assert circ.support <= bc
    assert random_shallow_unitary(lat12, 2, seed=4, restrict_to=frozenset()).support == frozenset()


def test_gate_validation():
    with pytest.raises(CircuitError):
        Gate("CNOT", (1, 1))
    with pytest.raises(CircuitError):
        Gate("H", (0, 1))
    with pytest.raises(CircuitError):
        Gate("UNITARY", (0,), matrix=np.ones((2, 2)))
    with pytest.raises(CircuitError):
        Circuit(((Gate("H", (0,)), Gate("S", (0,))),))
    with pytest.raises(CircuitError):
        random_shallow_clifford(Lattice(4, 4), -1, seed=0)


def test_invert_trivial_and_involutive(lat6):
    assert invert(IDENTITY) == IDENTITY
    circ = random_shallow_clifford(lat6, 3, seed=2)
    assert invert(invert(circ)).depth == circ.depth
    for (_, _, g), (_, _, h) in zip(invert(invert(circ)).gates(), circ.gates()):
        assert np.allclose(g.unitary(), h.unitary())


@pytest.mark.parametrize("clifford", [True, False])
def test_invert_dense_roundtrip(clifford):
    pairs = [[(0, 1), (2, 3)], [(1, 2)], [(0, 3)]]
    circ = random_circuit_on_pairs(pairs, seed=3, clifford=clifford)
    qs = [0, 1, 2, 3]
    u = circuit_unitary(circ.compose(invert(circ)), qs)
    assert np.linalg.norm(u - np.eye(16)) < 1e-10


def test_invert_restores_toric_cmi(lat12, toric12, annulus12):
    circ = random_shallow_clifford(lat12, 2, seed=11)
    st = stab.apply_clifford(stab.apply_clifford(toric12, circ), invert(circ))
    assert st.same_group(toric12)
    p = annulus12
    assert stab.cmi_bits(st, p.A.qubits, p.B.qubits, p.C.qubits) == 2


def test_invert_restores_dense_cmi():
    lat = Lattice(8, 8)
    from teebound.lattice import build_ring_annulus
    ring = build_ring_annulus(lat, (3, 3))
    qs = ring.ABC.sorted
    sigma = stab.reduced_density_matrix(stab.toric_code_ground_state(lat), qs)
    circ = random_shallow_unitary(lat, 1, seed=2, restrict_to=ring.B.qubits | ring.C.qubits)
    back = dense.apply_unitary(dense.apply_unitary(sigma, circ), invert(circ))
    assert dense.trace_distance(back, sigma) < 1e-9
    val = dense.cmi(back, ring.A.sorted, ring.B.sorted, ring.C.sorted)
    assert abs(val - 2 * np.log(2)) < 1e-8


def test_restrict_outside_light_cone_extremes(lat6):
    circ = random_shallow_clifford(lat6, 2, seed=0)
    assert restrict_outside_light_cone(circ, set()) == circ
    assert len(restrict_outside_light_cone(circ, range(lat6.n_qubits))) == 0


@given(st.integers(1, 3), st.integers(0, 10**5), st.sets(st.integers(0, 71), min_size=1, max_size=10))
@settings(max_examples=25, deadline=None)
def test_surgery_factorizes(depth, seed, protected):
    """U = V U' with V inside the forward cone of the protected set, and U' avoiding it."""
    lat = Lattice(6, 6)
    circ = random_shallow_clifford(lat, depth, seed)
    u1 = restrict_outside_light_cone(circ, protected)
    v = removed_part(circ, protected)
    assert u1.depth <= circ.depth and layers_disjoint(u1)
    assert not (u1.support & set(protected))
    assert v.support <= forward_cone(circ, protected)[0].qubits
    assert len(u1) + len(v) == len(circ)
    # the product V U' reproduces U on any stabilizer state
    base = stab.toric_code_ground_state(lat)
    assert stab.apply_clifford(base, circ).same_group(stab.apply_clifford(stab.apply_clifford(base, u1), v))


def test_surgery_commutes_with_protected_operators():
    lat = Lattice(2, 3)
    keep = frozenset(range(12))
    circ = random_shallow_unitary(lat, 2, seed=9, restrict_to=keep)
    protected = {0, 6}
    u1 = restrict_outside_light_cone(circ, protected)
    qs = list(range(12))
    u = circuit_unitary(u1, qs)
    rng = np.random.default_rng(2)
    # random operator on the protected qubits
    op = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    full = _embed(op, [0, 6], 12)
    assert np.linalg.norm(u @ full - full @ u) < 1e-9


def _embed(op, where, n):
    """Operator acting on qubits ``where`` (in order) of an n-qubit register."""
    k = len(where)
    rest = [q for q in range(n) if q not in where]
    big = np.kron(op, np.eye(2 ** (n - k)))
    perm = list(where) + rest
    t = big.reshape([2] * (2 * n))
    inv = np.argsort(perm)
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


def test_hole_surgery_preserves_cmi():
    lat = Lattice(14, 14)
    part = build_annulus_partition(lat, (7, 7), 2, 6)
    circ = random_shallow_clifford(lat, 2, seed=5)
    everything = frozenset(range(lat.n_qubits))
    hole = part.A.qubits - light_cone(circ, everything - part.A.qubits).qubits
    assert hole
    u1 = restrict_outside_light_cone(circ, hole)
    base = stab.toric_code_ground_state(lat)
    args = (part.A.qubits, part.B.qubits, part.C.qubits)
    assert stab.cmi_bits(stab.apply_clifford(base, circ), *args) == stab.cmi_bits(stab.apply_clifford(base, u1), *args)


@pytest.mark.parametrize("inside", [True, False])
def test_entropy_invariant_under_local_unitaries(inside):
    rng = np.random.default_rng(4)
    rho = dense.DensityMatrix.random(list(range(5)), rng)
    region = [0, 1, 2]
    pair = (0, 2) if inside else (3, 4)
    u = haar_unitary(4, rng)
    moved = dense.apply_channel(dense.unitary_channel(u, list(pair)), rho)
    before = dense.entropy(dense.partial_trace(rho, region))
    after = dense.entropy(dense.partial_trace(moved, region))
    assert abs(before - after) < 1e-10


def test_json_roundtrip(lat6):
    for circ in (random_shallow_clifford(lat6, 2, 1), random_shallow_unitary(lat6, 1, 1)):
        again = Circuit.from_json(circ.to_json())
        assert again.to_json() == circ.to_json()
        for (_, _, g), (_, _, h) in zip(again.gates(), circ.gates()):
            assert np.allclose(g.unitary(), h.unitary())


def test_restrict_to_region(lat6):
    circ = random_shallow_clifford(lat6, 2, 3)
    keep = set(range(30))
    sub = restrict_to_region(circ, keep)
    assert sub.support <= keep
