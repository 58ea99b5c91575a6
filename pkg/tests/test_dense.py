import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teebound import dense, stab
from teebound.circuits import Circuit, Gate, invert, random_circuit_on_pairs
from teebound.dense import DensityMatrix
from teebound.lattice import Lattice, build_cross_annulus

LOG2 = np.log(2)


def _ptrace_oracle(m, n, keep):
    """Independent partial trace on an n-qubit matrix via einsum index strings."""
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows, cols = list(letters[:n]), list(letters[n:2 * n].upper())
    for i in range(n):
        if i not in keep:
            cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    t = m.reshape([2] * (2 * n))
    r = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = 2 ** len(keep)
    return r.reshape(d, d)


def _bell():
    return DensityMatrix.from_pure(np.array([1, 0, 0, 1]) / np.sqrt(2), ["a", "b"])


@pytest.fixture(scope="module")
def cross():
    lat = Lattice(8, 8)
    part = build_cross_annulus(lat, (3, 3))
    toric = stab.toric_code_ground_state(lat)
    rho = stab.reduced_density_matrix(toric, part.ABC.qubits)
    return lat, part, toric, rho


@given(st.integers(0, 10**6), st.sets(st.integers(0, 4), max_size=5))
@settings(max_examples=40, deadline=None)
def test_partial_trace_matches_einsum(seed, keep):
    rng = np.random.default_rng(seed)
    rho = DensityMatrix.random(list(range(5)), rng, rank=int(rng.integers(1, 33)))
    keep = sorted(keep)
    got = dense.partial_trace(rho, keep)
    assert np.allclose(got.matrix, _ptrace_oracle(rho.matrix, 5, keep), atol=1e-12)
    assert abs(got.trace() - 1) < 1e-10
    # matrix form takes the other code path
    got2 = dense.partial_trace(rho.to_matrix_form(), keep)
    assert np.allclose(got2.matrix, got.matrix, atol=1e-12)


def test_partial_trace_trivial_cases():
    bell = _bell()
    assert dense.partial_trace(bell, ["a", "b"]) is bell
    assert np.allclose(dense.partial_trace(bell, ["a"]).matrix, np.eye(2) / 2)
    with pytest.raises(dense.DenseError, match="unknown"):
        dense.partial_trace(bell, ["z"])


def test_toric_reduction_matches_stab(lat6, toric6):
    qs = sorted(set(lat6.plaquette(1, 1)) | set(lat6.plaquette(1, 2)))
    assert len(qs) == 7
    qs = qs + [lat6.h(4, 4)]
    rho = stab.reduced_density_matrix(toric6, qs)
    kept = qs[3:]
    assert dense.entropy(dense.partial_trace(rho, kept)) == pytest.approx(stab.entropy(toric6, kept), abs=1e-10)


def test_entropy_basics():
    assert dense.entropy(_bell()) == pytest.approx(0, abs=1e-12)
    for d in (2, 3, 5):
        mm = DensityMatrix.maximally_mixed(["x"], [d])
        assert dense.entropy(mm) == pytest.approx(np.log(d))
    four = dense.mix([DensityMatrix.basis_state(b, "pq") for b in [(0, 0), (0, 1), (1, 0), (1, 1)]], [0.25] * 4)
    assert dense.entropy(four) == pytest.approx(2 * LOG2)


def test_invariant_violations():
    with pytest.raises(dense.DenseError, match="trace"):
        DensityMatrix(np.eye(2), ["a"])
    with pytest.raises(dense.DenseError, match="Hermitian"):
        DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]), ["a"])
    with pytest.raises(dense.DenseError, match="negative"):
        DensityMatrix(np.diag([1.5, -0.5]), ["a"])
    with pytest.raises(dense.DenseError, match="duplicate"):
        DensityMatrix(np.eye(4) / 4, ["a", "a"])
    with pytest.raises(dense.ResourceLimitError):
        DensityMatrix.maximally_mixed(list(range(13)))


def test_product_cmi_zero():
    rng = np.random.default_rng(1)
    parts = [DensityMatrix.random([lab], rng) for lab in "abc"]
    assert abs(dense.cmi(dense.tensor(*parts), ["a"], ["b"], ["c"])) < 1e-10


def test_classical_ghz_mixture_cmi():
    rho = dense.mix([DensityMatrix.basis_state([0] * 4, range(1, 5)), DensityMatrix.basis_state([1] * 4, range(1, 5))], [0.5, 0.5])
    assert abs(dense.cmi(rho, [1], [2, 3], [4])) < 1e-10
    assert dense.mutual_information(rho, [1], [4]) == pytest.approx(LOG2)


def test_cross_annulus_cmi(cross):
    _, part, toric, rho = cross
    p = part
    got = dense.cmi(rho, p.A.sorted, p.B.sorted, p.C.sorted)
    assert got == pytest.approx(2 * LOG2, abs=1e-9)
    assert got == pytest.approx(stab.cmi(toric, p.A.qubits, p.B.qubits, p.C.qubits), abs=1e-9)


def test_cmi_overlap_rejected():
    with pytest.raises(dense.DenseError, match="overlap"):
        dense.cmi(_bell(), ["a"], ["a"], ["b"])


def test_petz_reproduces_reference():
    rng = np.random.default_rng(3)
    rho = DensityMatrix.random(list("bc"), rng, rank=2)
    phi = dense.petz_map(rho, ["b"], ["b", "c"])
    out = phi(dense.partial_trace(rho, ["b"]))
    assert dense.trace_distance(out, rho) < 1e-10
    assert phi.completeness_error() < 1e-10


def test_petz_recovers_markov_state():
    # rho_ABC = sum_j p_j rho_A^j (x) |j><j|_B (x) rho_C^j is Markov
    rng = np.random.default_rng(4)
    comps = []
    for j in range(2):
        comps.append(dense.tensor(DensityMatrix.random(["A"], rng), DensityMatrix.basis_state([j], ["B"]),
                                  DensityMatrix.random(["C"], rng)))
    rho = dense.mix(comps, [0.3, 0.7])
    assert abs(dense.cmi(rho, ["A"], ["B"], ["C"])) < 1e-10
    phi = dense.petz_map(rho, ["B"], ["B", "C"])
    out = phi(dense.partial_trace(rho, ["A", "B"]))
    assert dense.trace_distance(out, rho) < 1e-8


@pytest.mark.slow
def test_petz_one_arc_recovers_full_annulus_fails(cross):
    """A horseshoe A-B1-C holds no loop, so it is Markov; the full annulus is not."""
    _, p, _, rho = cross
    a, b1, c = p.A.sorted, p.B1.sorted, p.C.sorted
    sub = dense.partial_trace(rho, a + b1 + c)
    assert abs(dense.cmi(sub, a, b1, c)) < 1e-10
    out = dense.petz_map(sub, b1, b1 + c)(dense.partial_trace(sub, a + b1))
    assert dense.trace_distance(out, sub) < 1e-8
    b = p.B.sorted
    out = dense.petz_map(rho, b, b + c)(dense.partial_trace(rho, a + b))
    assert dense.trace_distance(out, dense.reorder(rho, out.labels)) > 0.1


def test_petz_support_mismatch():
    ref = dense.tensor(DensityMatrix.basis_state([0], ["b"]), DensityMatrix.maximally_mixed(["c"]))
    phi = dense.petz_map(ref, ["b"], ["b", "c"])
    with pytest.raises(dense.SupportMismatchError):
        phi(DensityMatrix.basis_state([1], ["b"]))


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_petz_recovery_iff_zero_cmi(seed):
    """Random 3-qubit states: recovery error vanishes exactly when the CMI does."""
    rng = np.random.default_rng(seed)
    if seed % 2:
        rho = DensityMatrix.random(list("ABC"), rng, rank=int(rng.integers(1, 9)))
    else:
        rho = dense.tensor(DensityMatrix.random(["A", "B"], rng), DensityMatrix.random(["C"], rng))
    i = dense.cmi(rho, ["A"], ["B"], ["C"])
    out = dense.petz_map(rho, ["B"], ["B", "C"])(dense.partial_trace(rho, ["A", "B"]))
    dist = dense.trace_distance(out, rho)
    if i < 1e-10:
        assert dist < 1e-6
    if dist < 1e-8:
        assert i < 1e-6


def test_channel_basics():
    rng = np.random.default_rng(5)
    rho = DensityMatrix.random(list("abc"), rng)
    assert dense.trace_distance(dense.identity_channel(["a"])(rho), rho) < 1e-12
    traced = dense.trace_channel(["b"])(rho)
    assert dense.trace_distance(traced, dense.partial_trace(rho, ["a", "c"])) < 1e-12
    with pytest.raises(dense.DenseError, match="drift"):
        dense.QuantumChannel(("a",), (2,), ("a",), (2,), [2 * np.eye(2)])(rho)
    with pytest.raises(dense.DenseError, match="not in state"):
        dense.identity_channel(["z"])(rho)


def test_petz_forward_round_trip():
    # forward map = trace over C; on a Markov state Petz then trace is a fixed point of the marginal
    rng = np.random.default_rng(6)
    comps = [dense.tensor(DensityMatrix.random(["A"], rng), DensityMatrix.basis_state([j], ["B"]),
                          DensityMatrix.random(["C"], rng)) for j in range(2)]
    rho = dense.mix(comps, [0.5, 0.5])
    ab = dense.partial_trace(rho, ["A", "B"])
    round_trip = dense.petz_map(rho, ["B"], ["B", "C"]).then(dense.trace_channel(["C"]))(ab)
    assert dense.trace_distance(round_trip, ab) < 1e-8


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_mutual_information_monotone_under_local_channel(seed):
    rng = np.random.default_rng(seed)
    rho = DensityMatrix.random(["P", "Q1", "Q2"], rng, rank=3)
    # random isometry Q1Q2 -> Q1Q2E followed by discarding Q2 and E
    g = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
    v, _ = np.linalg.qr(g)
    ch = dense.isometry_channel(v, ["Q1", "Q2"], ["R1", "R2", "E"])
    out = dense.partial_trace(ch(rho), ["P", "R1"])
    before = dense.mutual_information(rho, ["P"], ["Q1", "Q2"])
    assert dense.mutual_information(out, ["P"], ["R1"]) <= before + 1e-8


@given(st.integers(0, 10**6), st.integers(1, 4))
@settings(max_examples=25, deadline=None)
def test_mix_entropy_bounds(seed, k):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(k))
    states = [DensityMatrix.random(["a", "b"], rng, rank=int(rng.integers(1, 5))) for _ in range(k)]
    h = -np.sum(p * np.log(p))
    avg = sum(pi * dense.entropy(s) for pi, s in zip(p, states))
    s_mix = dense.entropy(dense.mix(states, p))
    assert avg - 1e-8 <= s_mix <= h + avg + 1e-8
    # orthogonal supports: flag register makes the bound tight
    flagged = [dense.tensor(s, DensityMatrix.basis_state([j // 2, j % 2], ["f", "g"])) for j, s in enumerate(states)]
    assert dense.entropy(dense.mix(flagged, p)) == pytest.approx(h + avg, abs=1e-8)


def test_mix_edge_cases():
    bell = _bell()
    assert dense.trace_distance(dense.mix([bell], [1.0]), bell) < 1e-12
    pair = dense.mix([DensityMatrix.basis_state([0], "a"), DensityMatrix.basis_state([1], "a")], [0.5, 0.5])
    assert dense.entropy(pair) == pytest.approx(LOG2)
    with pytest.raises(dense.DenseError):
        dense.mix([bell, DensityMatrix.basis_state([0], "a")], [0.5, 0.5])
    with pytest.raises(dense.DenseError):
        dense.mix([bell], [0.9])


@pytest.mark.slow
def test_sector_mixture_entropy_gain(cross):
    lat, p, toric, rho = cross
    from teebound.tee import route_anyon_strings
    ops = route_anyon_strings(p, Circuit(())).operators
    sectors = {a: stab.apply_pauli(toric, op) for a, op in ops.items()}
    lam = dense.mix([stab.reduced_density_matrix(s, p.ABC.qubits) for s in sectors.values()], [0.25] * 4)
    assert dense.entropy(lam) - dense.entropy(rho) == pytest.approx(2 * LOG2, abs=1e-9)
    flipped = stab.reduced_density_matrix(sectors["e"], p.ABC.qubits)
    assert dense.trace_distance(rho, flipped) == pytest.approx(1, abs=1e-9)


def test_apply_unitary_cases():
    rng = np.random.default_rng(7)
    rho = DensityMatrix.random([0, 1, 2, 3], rng, rank=3)
    assert dense.apply_unitary(rho, Circuit(())) is rho
    circ = random_circuit_on_pairs([[(0, 1), (2, 3)], [(1, 2)]], seed=1, clifford=False)
    there = dense.apply_unitary(rho, circ)
    assert dense.entropy(there) == pytest.approx(dense.entropy(rho), abs=1e-10)
    back = dense.apply_unitary(there, invert(circ))
    assert dense.trace_distance(back, rho) < 1e-9
    inside = random_circuit_on_pairs([[(0, 1)]], seed=2, clifford=False)
    moved = dense.apply_unitary(rho.to_matrix_form(), inside)
    assert dense.entropy_of(moved, [0, 1]) == pytest.approx(dense.entropy_of(rho, [0, 1]), abs=1e-10)
    with pytest.raises(dense.DenseError, match="outside"):
        dense.apply_unitary(rho, Circuit(((Gate("CNOT", (0, 9)),),)))


def test_distances():
    a, b = DensityMatrix.basis_state([0], "a"), DensityMatrix.basis_state([1], "a")
    assert dense.trace_distance(a, a) == pytest.approx(0, abs=1e-12)
    assert dense.trace_distance(a, b) == pytest.approx(1)
    assert dense.fidelity(a, a) == pytest.approx(1)
    assert dense.fidelity(a, b) == pytest.approx(0, abs=1e-12)
    with pytest.raises(dense.DenseError):
        dense.trace_distance(a, _bell())


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_distance_bounds_consistent(seed):
    rng = np.random.default_rng(seed)
    r = DensityMatrix.random(list("abc"), rng, rank=2)
    s = DensityMatrix.random(list("abc"), rng, rank=3)
    td = dense.trace_distance(r, s)
    assert -1e-10 <= td <= 1 + 1e-10
    assert td == pytest.approx(dense.trace_distance(r.to_matrix_form(), s.to_matrix_form()), abs=1e-10)
    assert dense.trace_distance_bound(r, s) >= td - 1e-10
    # Fuchs-van de Graaf
    f = dense.fidelity(r, s)
    assert 1 - np.sqrt(f) - 1e-9 <= td <= np.sqrt(1 - f) + 1e-9


def test_compress_keeps_state():
    rng = np.random.default_rng(8)
    low = DensityMatrix.random(list(range(4)), rng, rank=2)
    padded = DensityMatrix(None, low.labels, low.dims, factor=np.concatenate([low.factor(), np.zeros((16, 5))], axis=1))
    small = dense.compress(padded)
    assert small.rank_bound == 2
    assert dense.trace_distance(small.to_matrix_form(), low.to_matrix_form()) < 1e-10


def test_dump_load_roundtrip():
    rng = np.random.default_rng(9)
    rho = DensityMatrix.random(["x", "y"], rng)
    data = dense.dump(rho)
    assert data[:4] == (2).to_bytes(4, "little")
    again = dense.load(data, ["x", "y"])
    assert np.array_equal(again.matrix, rho.matrix)
