"""Instance generators shared by the CLI and the acceptance tests.

Each family is seeded; the same seed always yields the same states, blockings and channels.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from . import dense, markov, stab
from .circuits import haar_unitary, random_shallow_clifford
from .lattice import Lattice, edge_ring_chain

LOG2 = float(np.log(2))


# --- Markov suite --------------------------------------------------------------------------------


def contiguous_blockings(n_qubits: int, n_blocks: int) -> list[list[list[int]]]:
    """Every way to cut 0..n-1 into ``n_blocks`` nonempty contiguous runs."""
    out = []
    for cuts in combinations(range(1, n_qubits), n_blocks - 1):
        edges = (0,) + cuts + (n_qubits,)
        out.append([list(range(a, b)) for a, b in zip(edges, edges[1:])])
    return out


def _local_unitaries(rho: dense.DensityMatrix, rng) -> dense.DensityMatrix:
    for lab in rho.labels:
        rho = dense.reorder(dense.apply_channel(dense.unitary_channel(haar_unitary(2, rng), [lab]), rho), rho.labels)
    return rho


def _classical_cat(n: int) -> dense.DensityMatrix:
    m = np.zeros((1 << n, 1 << n))
    m[0, 0] = m[-1, -1] = 0.5
    return dense.DensityMatrix(m, list(range(n)))


def markov_test_states(count: int = 30, seed: int = 0, max_qubits: int = 10) -> list[tuple[str, dense.DensityMatrix]]:
    """A mix of Markov, locally-but-not-globally Markov and generic states on <= ``max_qubits`` qubits.

    Families cycle: generic random mixed, product, classical cat dressed by one-qubit unitaries,
    canonical chains of random states (Markov by construction), and the toric-code ring chain.
    """
    rng = np.random.default_rng(seed)
    out = []
    ring = None
    for i in range(count):
        fam = i % 5
        n = int(rng.integers(4, min(8, max_qubits) + 1))
        labels = list(range(n))
        if fam == 0:
            rho = dense.DensityMatrix.random(labels, rng, rank=int(rng.integers(1, 5)))
            name = f"random{n}"
        elif fam == 1:
            parts = [dense.DensityMatrix.random([q], rng) for q in labels]
            rho = dense.tensor(*parts)
            name = f"product{n}"
        elif fam == 2:
            rho = _local_unitaries(_classical_cat(n), rng)
            name = f"cat{n}"
        elif fam == 3:
            base = dense.DensityMatrix.random(labels, rng, rank=2)
            blocks = [[q] for q in labels]
            rho = markov.canonical_markov_chain(markov.OrderedChain(base, blocks), check=False)
            rho = dense.DensityMatrix(rho.matrix, labels)
            name = f"canonical{n}"
        else:
            if ring is None:
                lat = Lattice(8, 8)
                chain = edge_ring_chain(lat, (3, 3))
                order = [q for b in chain.blocks() for q in b]
                sig = stab.reduced_density_matrix(stab.toric_code_ground_state(lat), order)
                sig = dense.reorder(sig, order)
                ring = dense.DensityMatrix(sig.matrix, list(range(len(order))))
            rho = _local_unitaries(ring, rng)
            name = "toric_ring10"
        out.append((name, rho))
    return out


def proposition1_agreement(rho: dense.DensityMatrix, blocks, tol: float = markov.PREMISE_TOL,
                           cache: dict | None = None) -> dict:
    """Locally-Markov predicate versus constancy of the full-cover CMIs for one blocking."""
    chain = markov.OrderedChain(rho, blocks, cache if cache is not None else {})
    rep = markov.is_locally_markov(chain, tol)
    _, spread = markov.cmi_constancy_scan(chain)
    constant = spread <= tol
    return {"locally_markov": rep.is_locally_markov, "constant": constant, "spread": spread,
            "agree": rep.is_locally_markov == constant}


def markov_suite(count: int = 30, seed: int = 0, tol: float = markov.PREMISE_TOL) -> dict:
    """Local-vs-global Markov agreement on all 4- and 5-blockings, plus the canonical-chain certificates
    on one locally-Markov blocking per state."""
    rows = []
    chains = []
    for name, rho in markov_test_states(count, seed):
        n = len(rho.labels)
        cache: dict = {}
        stats = {"state": name, "n": n, "blockings": 0, "agree": 0, "locally_markov": 0}
        for k in (4, 5):
            if n < k:
                continue
            for blocks in contiguous_blockings(n, k):
                r = proposition1_agreement(rho, blocks, tol, cache)
                stats["blockings"] += 1
                stats["agree"] += r["agree"]
                stats["locally_markov"] += bool(r["locally_markov"])
        rows.append(stats)
        # canonical chain checks on the finest 5-blocking that is locally Markov
        if n >= 5 and stats["locally_markov"]:
            for blocks in contiguous_blockings(n, 5):
                chain = markov.OrderedChain(rho, blocks)
                if markov.is_locally_markov(chain, tol).is_locally_markov:
                    tau = markov.canonical_markov_chain(chain, tol, check=False)
                    certs = markov.verify_canonical_chain(tau, chain, tol)
                    chains.append({"state": name, "blocks": blocks, "passed": all(c.passed for c in certs),
                                   "entropy_gap": dense.entropy(tau) - dense.entropy(rho),
                                   "failures": [f for c in certs for f in c.failures]})
                    break
    return {
        "states": rows,
        "chains": chains,
        "prop1_ok": all(r["agree"] == r["blockings"] for r in rows),
        "chains_ok": bool(chains) and all(c["passed"] for c in chains),
    }


# --- entropy-difference identity instances ----------------------------------------------------------------------------


def _reversal_channel(v: np.ndarray, input_labels, output_labels) -> dense.QuantumChannel:
    """Channel undoing the isometry ``v``: V^dagger on its range, reset to |0> elsewhere."""
    dout, din = v.shape
    q, _ = np.linalg.qr(np.concatenate([v, np.eye(dout)], axis=1))
    comp = q[:, din:dout]
    e0 = np.zeros((din, 1))
    e0[0, 0] = 1.0
    kraus = [v.conj().T] + [e0 @ comp[:, [k]].conj().T for k in range(comp.shape[1])]
    return dense.QuantumChannel(tuple(output_labels), (2,) * len(output_labels), tuple(input_labels),
                                (2,) * len(input_labels), kraus, name="reversal")


def isometry_lemma_instance(seed: int) -> dict:
    """rho random on P Q, rho' = rho_P x rho_Q, R = random isometry Q -> Q plus an ancilla, T = reversal."""
    rng = np.random.default_rng(seed)
    nq = int(rng.integers(1, 3))
    P = ["p"]
    Q = [f"q{i}" for i in range(nq)]
    rho = dense.DensityMatrix.random(P + Q, rng, rank=int(rng.integers(1, 4)))
    rho_p = dense.tensor(dense.partial_trace(rho, P), dense.reorder(dense.partial_trace(rho, Q), Q))
    qhat = [f"h{i}" for i in range(nq + 1)]
    u = haar_unitary(1 << (nq + 1), rng)
    v = u[:, : 1 << nq]
    R = dense.isometry_channel(v, Q, qhat)
    T = _reversal_channel(v, Q, qhat)
    return markov.entropy_difference_lemma_check(rho, rho_p, R, T, P)


def petz_lemma_instance(seed: int) -> dict:
    """Petz-extension instance where tracing X3 is exactly undone.

    X2 is a pair (a, b) rotated by a random unitary W. The reference on X2 X3 is
    W (s_a x s_b3) W^dagger and omega on X1 X2 is W (w_{1a} x s_b) W^dagger, so the Petz map
    Phi: X2 -> X2 X3 inverts the partial trace on everything in play. rho = Phi(omega),
    rho' = Phi(omega_1 x omega_2), R traces X3 and T = Phi.
    """
    rng = np.random.default_rng(seed)
    w = dense.unitary_channel(haar_unitary(4, rng), ["xa", "xb"])
    s_b3 = dense.DensityMatrix.random(["xb", "x3"], rng)
    sigma = dense.reorder(w(dense.tensor(dense.DensityMatrix.random(["xa"], rng), s_b3)), ["xa", "xb", "x3"])
    w_1a = dense.DensityMatrix.random(["x1", "xa"], rng, rank=int(rng.integers(1, 5)))
    omega = dense.reorder(w(dense.tensor(w_1a, dense.partial_trace(s_b3, ["xb"]))), ["x1", "xa", "xb"])
    phi = dense.petz_map(sigma, ["xa", "xb"], ["xa", "xb", "x3"])
    prod = dense.tensor(dense.partial_trace(omega, ["x1"]), dense.reorder(dense.partial_trace(omega, ["xa", "xb"]), ["xa", "xb"]))
    order = ["x1", "xa", "xb", "x3"]
    rho = dense.reorder(dense.apply_channel(phi, omega), order)
    rho_p = dense.reorder(dense.apply_channel(phi, prod), order)
    R = dense.trace_channel(["x3"])
    return markov.entropy_difference_lemma_check(rho, rho_p, R, phi, ["x1"])


def lemma1_instances(n_isometry: int = 9, n_petz: int = 10, seed: int = 0, appendix_e: bool = True) -> list[dict]:
    """Named entropy-difference identity checks; the last one is the thin-annulus instantiation when requested."""
    out = []
    for i in range(n_isometry):
        out.append({"name": f"isometry_{i}", **isometry_lemma_instance(seed + i)})
    for i in range(n_petz):
        out.append({"name": f"petz_{i}", **petz_lemma_instance(seed + 1000 + i)})
    if appendix_e:
        from . import tee

        ref = tee.ReferenceDescriptor(rows=8, cols=8)
        part, circ, P = tee.appendix_e_instance(ref.lattice, gates="one", seed=1)
        rep = tee.appendix_e_fact_checks(ref, part, circ, P)
        out.append({**rep["facts"]["lemma1"], "name": "annulus_collar"})
    return out


# --- moves ----------------------------------------------------------------------------------------


def ring_move_partitions(lattice: Lattice, vertex=(3, 3)) -> dict:
    """The five-block ring chain and one single-move variant of each kind."""
    base = [list(b) for b in edge_ring_chain(lattice, vertex).blocks()]
    r, c = vertex
    h = lattice.h
    moved1 = [list(b) for b in base]
    # move 1: shift one edge across the X1|X2 boundary
    moved1[0] = [q for q in base[0] if q != h(r, c - 1)]
    moved1[1] = sorted(base[1] + [h(r, c - 1)])
    moved2 = [list(b) for b in base]
    # move 2: shift one edge across the X2|X3 boundary
    moved2[2] = [q for q in base[2] if q != h(r + 1, c)]
    moved2[1] = sorted(base[1] + [h(r + 1, c)])
    return {"base": base, "move1": moved1, "move2": moved2}


def moves_suite(tol: float = markov.CONCLUSION_TOL) -> list[dict]:
    lat = Lattice(8, 8)
    parts = ring_move_partitions(lat)
    order = [q for b in parts["base"] for q in b]
    sigma = dense.reorder(stab.reduced_density_matrix(stab.toric_code_ground_state(lat), order), order)
    return [{"variant": k, **markov.moves_invariance_check(sigma, parts["base"], parts[k], tol)}
            for k in ("move1", "move2")]


# --- cross-engine oracle --------------------------------------------------------------------------


def cross_engine_pairs(n_pairs: int = 200, seed: int = 0, max_region: int = 10) -> list[dict]:
    """Entropy of random regions in shallow-circuit toric-code states, computed by rank counting
    and by diagonalizing the dense reduced state built from the local stabilizer group."""
    rng = np.random.default_rng(seed)
    lat = Lattice(6, 6)
    base = stab.toric_code_ground_state(lat)
    states = [base] + [stab.apply_clifford(base, random_shallow_clifford(lat, d, seed + d)) for d in (1, 2)]
    out = []
    for i in range(n_pairs):
        si = i % len(states)
        st = states[si]
        size = int(rng.integers(1, max_region + 1))
        if i % 2:
            region = sorted(int(q) for q in rng.choice(lat.n_qubits, size=size, replace=False))
        else:
            start = int(rng.integers(lat.n_qubits))
            region = sorted(lat.distances_from([start], limit=3), key=lambda q: (lat.distance([start], [q]), q))[:size]
            region = sorted(region)
        exact = stab.entropy_bits(st, region) * LOG2
        numeric = dense.entropy(stab.reduced_density_matrix(st, region))
        out.append({"state": si, "region": region, "stabilizer": exact, "dense": numeric,
                    "difference": abs(exact - numeric)})
    return out
