import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import reduced_from_vector, stabilizer_vector, vn_entropy
from teebound import dense, stab
from teebound.circuits import Circuit, Gate, invert, random_shallow_clifford
from teebound.lattice import GeometryError, Lattice, build_annulus_partition, chain_partition, enclosing_loops

LOG2 = np.log(2)


def test_toric_code_size_and_stabilizers(lat6, toric6):
    toric6.check()
    assert toric6.n == 72
    for star in lat6.stars():
        assert stab.expectation(toric6, stab.PauliString.from_ops(72, {q: "X" for q in star})) == 1
    for plaq in lat6.plaquettes():
        assert stab.expectation(toric6, stab.PauliString.from_ops(72, {q: "Z" for q in plaq})) == 1


def test_logical_sector_signs():
    lat = Lattice(4, 4)
    minus = stab.toric_code_ground_state(lat, (-1, 1))
    loop = stab.PauliString.from_ops(lat.n_qubits, {lat.h(0, c): "Z" for c in range(4)})
    assert stab.expectation(minus, loop) == -1
    assert stab.expectation(stab.toric_code_ground_state(lat), loop) == 1


def test_open_plane_unimplemented():
    with pytest.raises(NotImplementedError):
        stab.toric_code_ground_state(Lattice(4, 4, "open-plane"))


@pytest.mark.parametrize("region", [[0], [0, 1], [0, 1, 4, 5], [0, 1, 2, 3, 4, 5], [0, 2, 5, 7], list(range(8))])
def test_entropy_against_state_vector(region):
    """Brute-force oracle: 2x2 torus state vector built by projecting onto the stabilizers."""
    lat = Lattice(2, 2)
    state = stab.toric_code_ground_state(lat)
    vec = stabilizer_vector(state)
    expect = vn_entropy(reduced_from_vector(vec, region, 8))
    assert stab.entropy(state, region) == pytest.approx(expect, abs=1e-10)


def test_plaquette_entropy_three_bits(lat6, toric6):
    plaq = lat6.plaquette(2, 2)
    assert stab.entropy_bits(toric6, plaq) == 3
    rho = stab.reduced_density_matrix(toric6, plaq)
    assert dense.entropy(rho) == pytest.approx(3 * LOG2, abs=1e-10)


def test_entropy_edge_cases(toric6):
    assert stab.entropy(toric6, []) == 0
    assert stab.entropy(toric6, range(72)) == 0


def test_disk_entropy_matches_dense(lat6, toric6):
    # 2x2 block of plaquettes minus nothing: a disk of 12 edges; use its 9 interior-ish qubits
    disk = sorted(set(lat6.plaquette(1, 1)) | set(lat6.plaquette(1, 2)) | {lat6.h(3, 1)})
    assert len(disk) <= 9
    rho = stab.reduced_density_matrix(toric6, disk)
    assert dense.entropy(rho) == pytest.approx(stab.entropy(toric6, disk), abs=1e-10)


def test_annulus_cmi_two_bits(toric12, annulus12):
    p = annulus12
    assert stab.cmi(toric12, p.A.qubits, p.B.qubits, p.C.qubits) == pytest.approx(2 * LOG2)
    assert stab.mutual_information_bits(toric12, p.A.qubits, p.C.qubits) == 0


def test_product_state_cmi_zero(annulus12):
    prod = stab.product_state(288)
    p = annulus12
    assert stab.cmi_bits(prod, p.A.qubits, p.B.qubits, p.C.qubits) == 0


def test_chain_like_proper_subregion_markov(lat12, toric12):
    chain = chain_partition(build_annulus_partition(lat12, (6, 6), 2, 4), 5)
    x = [r.qubits for r in chain]
    assert stab.cmi_bits(toric12, x[0], x[1], x[2]) == 0
    assert stab.cmi_bits(toric12, x[1], x[2] | x[3], x[4]) == 0


def test_cmi_rejects_overlap(toric6):
    with pytest.raises(ValueError):
        stab.cmi(toric6, {0, 1}, {1, 2}, {5})


def test_apply_identity_and_cnot(toric6):
    assert stab.apply_clifford(toric6, Circuit(())).same_group(toric6)
    moved = stab.apply_clifford(toric6, Circuit(((Gate("CNOT", (0, 40)),),)))
    moved.check()
    assert not moved.same_group(toric6)


def test_cnot_update_rule():
    # |00> stabilized by ZI, IZ; after H on 0 and CNOT(0,1): XX, ZZ (Bell pair)
    st0 = stab.product_state(2)
    bell = stab.apply_clifford(st0, Circuit(((Gate("H", (0,)),), (Gate("CNOT", (0, 1)),))))
    assert stab.expectation(bell, stab.PauliString.from_ops(2, {0: "X", 1: "X"})) == 1
    assert stab.expectation(bell, stab.PauliString.from_ops(2, {0: "Z", 1: "Z"})) == 1
    assert stab.expectation(bell, stab.PauliString.from_ops(2, {0: "Y", 1: "Y"})) == -1


def test_dense_gate_rejected(toric6):
    u = np.eye(4)
    with pytest.raises(Exception):
        stab.apply_clifford(toric6, Circuit(((Gate("UNITARY", (0, 1), matrix=u),),)))


@pytest.mark.parametrize("seed", range(3))
def test_clifford_then_inverse_same_group(lat6, toric6, seed):
    circ = random_shallow_clifford(lat6, 2, seed)
    back = stab.apply_clifford(stab.apply_clifford(toric6, circ), invert(circ))
    assert back.same_group(toric6)


@given(st.integers(0, 10**6), st.lists(st.integers(0, 3), min_size=72, max_size=72))
@settings(max_examples=25, deadline=None)
def test_ssa_and_monotonicity(seed, labels):
    """SSA and I(AA':C|B) >= I(A':C|B) on random depth-1 evolved toric codes."""
    lat = Lattice(6, 6)
    st_ = stab.apply_clifford(stab.toric_code_ground_state(lat), random_shallow_clifford(lat, 1, seed))
    A = {q for q, l in enumerate(labels) if l == 0}
    B = {q for q, l in enumerate(labels) if l == 1}
    C = {q for q, l in enumerate(labels) if l == 2}
    assert stab.cmi_bits(st_, A, B, C) >= 0
    half = set(sorted(A)[: len(A) // 2])
    assert stab.cmi_bits(st_, A, B, C) >= stab.cmi_bits(st_, half, B, C)


@given(st.integers(0, 10**6))
@settings(max_examples=10, deadline=None)
def test_entropy_unchanged_by_inside_or_outside_cliffords(seed):
    lat = Lattice(6, 6)
    base = stab.apply_clifford(stab.toric_code_ground_state(lat), random_shallow_clifford(lat, 1, seed))
    region = set(range(0, 36, 2)) | set(range(36, 50))
    circ = random_shallow_clifford(lat, 2, seed + 1)
    inside = Circuit(tuple(tuple(g for g in layer if set(g.support) <= region) for layer in circ.layers))
    outside = Circuit(tuple(tuple(g for g in layer if not set(g.support) & region) for layer in circ.layers))
    for part in (inside, outside):
        assert stab.entropy_bits(stab.apply_clifford(base, part), region) == stab.entropy_bits(base, region)


def test_e_string_endpoints(lat6, toric6):
    path = [lat6.h(2, 1), lat6.h(2, 2), lat6.h(2, 3)]
    e = stab.string_operator(lat6, "e", path=path)
    flipped = [s for s in lat6.stars() if not e.commutes(stab.PauliString.from_ops(72, {q: "X" for q in s}))]
    assert len(flipped) == 2
    assert all(e.commutes(stab.PauliString.from_ops(72, {q: "Z" for q in p})) for p in lat6.plaquettes())


def test_m_string_endpoints(lat6):
    dual = [lat6.h(1, 3), lat6.h(2, 3)]
    m = stab.string_operator(lat6, "m", dual=dual)
    flipped = [p for p in lat6.plaquettes() if not m.commutes(stab.PauliString.from_ops(72, {q: "Z" for q in p}))]
    assert len(flipped) == 2


def test_identity_string_and_errors(lat6):
    assert stab.string_operator(lat6, "1").weight == 0
    loop = [lat6.h(0, c) for c in range(6)]
    with pytest.raises(GeometryError):
        stab.string_operator(lat6, "e", path=loop)
    with pytest.raises(ValueError):
        stab.string_operator(lat6, "f")


def test_sector_witnesses(lat12, toric12, annulus12):
    primal, dual = enclosing_loops(lat12, annulus12.ABC.qubits)
    w = stab.sector_witnesses(lat12, sorted(primal[0]), sorted(dual[0]), region=annulus12.ABC)
    assert all(stab.expectation(toric12, op) == 1 for op in w.values())
    # an e charge dragged from the hole to the outside flips the m-type witness only
    inside_v = (6, 6)
    path = stab.route_path(lat12, [inside_v], [(0, 0)])
    rho_e = stab.apply_pauli(toric12, stab.string_operator(lat12, "e", path=path))
    assert stab.expectation(rho_e, w["m"]) == -1
    assert stab.expectation(rho_e, w["e"]) == 1
    with pytest.raises(GeometryError, match="exits"):
        stab.closed_string_operator(lat12, "e", loop=sorted(primal[0]), region=annulus12.A)


def test_witnesses_survive_shallow_clifford(lat12, toric12, annulus12):
    from teebound.lattice import forward_cone
    circ = random_shallow_clifford(lat12, 1, seed=0)
    abc = annulus12.ABC.qubits
    core = abc - __import__("teebound.lattice", fromlist=["light_cone"]).light_cone(
        circ, frozenset(range(lat12.n_qubits)) - abc).qubits
    primal, dual = enclosing_loops(lat12, core)
    assert primal and dual
    for loop in (primal[0], dual[0]):
        assert forward_cone(circ, loop)[0].qubits <= abc


def test_reduced_density_matrix_cases(toric6):
    one = stab.reduced_density_matrix(toric6, [3])
    assert np.allclose(one.matrix, np.eye(2) / 2)
    ghz = stab.from_generators([stab.PauliString.from_ops(4, {0: "X", 1: "X", 2: "X", 3: "X"}),
                                stab.PauliString.from_ops(4, {0: "Z", 1: "Z"}),
                                stab.PauliString.from_ops(4, {1: "Z", 2: "Z"}),
                                stab.PauliString.from_ops(4, {2: "Z", 3: "Z"})])
    rho = stab.reduced_density_matrix(ghz, range(4))
    assert np.allclose(rho.matrix @ rho.matrix, rho.matrix)
    with pytest.raises(Exception, match="limit"):
        stab.reduced_density_matrix(toric6, range(13))


def test_annulus_sector_cross_engine(toric12, annulus12):
    qs = annulus12.A.sorted[:8]
    rho = stab.reduced_density_matrix(toric12, qs)
    assert dense.entropy(rho) == pytest.approx(stab.entropy(toric12, qs), abs=1e-10)


@given(st.integers(0, 10**6), st.sets(st.integers(0, 71), min_size=1, max_size=30), st.integers(0, 71))
@settings(max_examples=25, deadline=None)
def test_pauli_invisible_matches_marginal_comparison(seed, region, q):
    lat = Lattice(6, 6)
    st_ = stab.apply_clifford(stab.toric_code_ground_state(lat), random_shallow_clifford(lat, 1, seed))
    p = stab.PauliString.from_ops(72, {q: "XYZ"[seed % 3]})
    moved = stab.apply_pauli(st_, p)
    same = stab.supported_rank(st_, region) == stab.supported_rank(moved, region) and all(
        stab.expectation(moved, g) == 1 for g in stab.supported_subgroup(st_, region))
    assert stab.pauli_invisible(st_, p, region) == same


def test_dump_load_roundtrip(toric6):
    again = stab.StabilizerState.loads(toric6.dumps())
    assert again.same_group(toric6)
    with pytest.raises(ValueError):
        stab.StabilizerState.loads("+0\n")
