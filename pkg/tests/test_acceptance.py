"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines, or
``python3 tests/test_acceptance.py`` for a plain report.
"""
import math
import time

import pytest

from teebound import suites, tee
from teebound.circuits import IDENTITY, invert, random_shallow_clifford
from teebound.lattice import Lattice, build_annulus_partition, build_ring_annulus

LOG2 = math.log(2)

# (depth, restriction, L, r_in, r_out); 10 consecutive seeds each, widths 3..5
CLIFFORD_CONFIGS = [
    (1, None, 12, 2, 5), (1, None, 14, 2, 6), (1, None, 16, 2, 7),
    (2, None, 14, 3, 6), (2, None, 16, 3, 6), (2, None, 16, 3, 7),
    (3, "BC", 14, 2, 6), (3, "BC", 16, 2, 7), (3, "BC", 16, 3, 6), (3, "near_BC", 16, 3, 7),
]


def _square(L, r_in, r_out):
    return build_annulus_partition(Lattice(L, L), (L // 2, L // 2), r_in, r_out)


def _report(n, ok, detail):
    print(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def criterion_1():
    t0 = time.perf_counter()
    rep = tee.reference_state_audit(tee.ReferenceDescriptor(rows=12, cols=12), n_partitions=5, seed=0)
    dt = time.perf_counter() - t0
    mi_zero = all(m["bits"] == 0 for m in rep.mutual_information_bits)
    ok = rep.passed and rep.cmi_bits == [2] * 5 and mi_zero and dt < 10
    return ok, f"reference audit: cmi bits {rep.cmi_bits}, non-adjacent MI zero={mi_zero}, {dt:.1f}s"


def criterion_2():
    t0 = time.perf_counter()
    seed, bad, margins = 0, [], []
    for depth, where, L, r_in, r_out in CLIFFORD_CONFIGS:
        ref = tee.ReferenceDescriptor(rows=L, cols=L)
        part = build_annulus_partition(ref.lattice, (L // 2, L // 2), r_in, r_out)
        spec = {"kind": "clifford", "depth": depth}
        if where:
            spec["restrict_to"] = where
        for _ in range(10):
            r = tee.tee_bound_experiment(ref, spec, part, seed)
            bits = r.cmi_bits - ref.gamma0_bits
            margins.append(bits)
            if not (r.precondition_ok and bits >= 0 and abs(r.margin - bits * LOG2) <= 1e-12):
                bad.append((depth, where, L, seed, r.precondition_ok, bits))
            seed += 1
    dt = time.perf_counter() - t0
    ref = tee.ReferenceDescriptor(rows=8, cols=8)
    ring = build_ring_annulus(ref.lattice, (3, 3))
    dense_worst, dense_bad = math.inf, 0
    for s in range(50):
        r = tee.tee_bound_experiment(ref, {"kind": "haar", "depth": 1, "restrict_to": "BC"}, ring, s, engine="dense")
        dense_worst = min(dense_worst, r.margin)
        dense_bad += not (r.precondition_ok and r.margin >= -1e-8)
    ok = not bad and seed == 100 and dt < 120 and dense_bad == 0
    return ok, (f"clifford {seed - len(bad)}/{seed} margins >= 0 (min {min(margins)} bits) in {dt:.1f}s; "
                f"dense 50 runs worst margin {dense_worst:.2e}" + (f"; failures {bad}" if bad else ""))


def criterion_3():
    ref = tee.ReferenceDescriptor(rows=12, cols=12)
    part = _square(12, 2, 5)
    spec = {"kind": "clifford", "depth": 1, "restrict_to": "BC"}
    uni = tee.anyon_mixture_check(ref, part, spec, seed=2)
    c = uni["checks"]["stabilizer"]
    half = tee.anyon_mixture_check(ref, part, spec, probs=(0.5, 0.5, 0, 0), seed=2)
    d_half = half["checks"]["stabilizer"]["entropy_difference"]
    ok = (uni["passed"] and c["orthogonality_ok"] and c["entropy_equal"] and c["indistinguishable_AB_BC"]
          and c["entropy_difference"] == 2 * LOG2 and half["passed"] and abs(d_half - LOG2) <= 1e-12)
    return ok, f"uniform difference {c['entropy_difference'] / LOG2:g} log 2, half-half {d_half / LOG2:g} log 2"


def criterion_4():
    ref = tee.ReferenceDescriptor(rows=14, cols=14)
    part = _square(14, 3, 6)
    fails = []
    for seed in range(25):
        rep = tee.deformation_chain_check(ref, {"kind": "clifford", "depth": 2}, part, seed)
        direct = tee.tee_bound_experiment(ref, {"kind": "clifford", "depth": 2}, part, seed)
        if not (rep["passed"] and rep["eq12_equal"] and rep["eq14_equal"] and rep["eq13_slack_bits"] >= 0
                and rep["eq16_margin_bits"] + rep["final_margin_bits"] == rep["total_margin_bits"]
                and rep["total_margin_bits"] == direct.cmi_bits - ref.gamma0_bits):
            fails.append(seed)
    return not fails, f"25 seeds on 14x14 depth 2, failing seeds {fails}"


def criterion_5():
    inst = suites.lemma1_instances()
    ok_n = sum(i["passed"] and i["gap"] <= 1e-6 and max(i["premises"].values()) <= 1e-7 for i in inst)
    has_annulus = any(i["name"] == "annulus_collar" for i in inst)
    worst = max(i["gap"] for i in inst)
    return len(inst) == 20 and ok_n == 20 and has_annulus, f"{ok_n}/{len(inst)} instances, worst gap {worst:.1e}"


def criterion_6():
    rep = suites.markov_suite(30)
    n_blk = sum(r["blockings"] for r in rep["states"])
    ok = len(rep["states"]) >= 30 and rep["prop1_ok"] and rep["chains_ok"]
    return ok, f"{len(rep['states'])} states, {n_blk} blockings agree={rep['prop1_ok']}, {len(rep['chains'])} chains ok={rep['chains_ok']}"


def criterion_7():
    ref = tee.ReferenceDescriptor(rows=8, cols=8)
    part, circ, P = tee.appendix_e_instance(ref.lattice, gates="one", seed=1)
    rep = tee.appendix_e_fact_checks(ref, part, circ, P)
    first = rep["facts"]["fact_first"]["value"]
    ubar = tee.collar_part(circ, part.ABC.qubits).support
    near = [q for q in part.A.qubits if ref.lattice.distance([q], ubar) < 2]
    try:
        tee.appendix_e_fact_checks(ref, part, circ, near[:1])
        rejected = False
    except tee.PreconditionError:
        rejected = True
    failed = [k for k, v in rep["facts"].items() if not v["passed"]]
    ok = rep["passed"] and abs(first - 2 * LOG2) <= 1e-7 and rejected and len(part.ABC.qubits) <= 12
    return ok, f"{len(rep['facts'])} facts, failed {failed}, fact_first {first / LOG2:.9f} log 2, adjacent P rejected={rejected}"


def criterion_8():
    rows = suites.moves_suite()
    worst = max(r["distance"] for r in rows)
    return all(r["passed"] for r in rows) and worst <= 1e-6, f"moves {[r['variant'] for r in rows]}, worst distance {worst:.1e}"


def criterion_9():
    ref = tee.ReferenceDescriptor(rows=16, cols=16)
    ladder = tee.default_ladder(ref.lattice, [3, 4], r_in=3)
    mins, bad = [], []
    for seed in (11, 12):
        V = random_shallow_clifford(ref.lattice, 2, seed)
        rep = tee.gamma_min_estimate(ref, V, {"identity": IDENTITY, "inverse": invert(V)}, ladder)
        for r in rep["rows"]:
            mins.append(r["minimum"])
            if not (r["inverse_achieves_gamma0"] and abs(r["minimum"] - LOG2) <= 1e-8
                    and all(r["precondition_ok"].values())):
                bad.append((seed, r))
        if not rep["passed"] or rep["flagged"]:
            bad.append((seed, "report"))
    return not bad, f"{len(mins)} (V, R) rows, minima {sorted({round(m / LOG2, 9) for m in mins})} log 2"


def criterion_10():
    rows = suites.cross_engine_pairs(200)
    worst = max(r["difference"] for r in rows)
    return len(rows) >= 200 and worst <= 1e-10, f"{len(rows)} pairs, worst difference {worst:.1e}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("n", range(1, 11))
def test_criterion(n):
    ok, detail = CRITERIA[n - 1]()
    _report(n, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    for i, fn in enumerate(CRITERIA, 1):
        t0 = time.perf_counter()
        ok, detail = fn()
        _report(i, ok, f"{detail} [{time.perf_counter() - t0:.1f}s]")
