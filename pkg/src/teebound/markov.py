"""Markov-chain structure of states over an ordered list of blocks.

Blocks ``X_1 .. X_n`` are tuples of factor labels. A chain-like tripartition is three
consecutive nonempty intervals ``A = [i, a)``, ``B = [a, b)``, ``C = [b, j)`` of block
indices; it is a full cover when ``i == 0`` and ``j == n``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterator, Sequence

import numpy as np

from . import dense
from .dense import DensityMatrix, SupportMismatchError

CONSTRUCTION_TOL = 1e-10
PREMISE_TOL = 1e-7
CONCLUSION_TOL = 1e-6


class MarkovError(ValueError):
    pass


class NotLocallyMarkovWarning(UserWarning):
    """The canonical chain was built from a state that is not locally Markov."""


class CanonicalChainError(SupportMismatchError):
    def __init__(self, step: int, message: str):
        super().__init__(f"Petz extension at k={step}: {message}")
        self.step = step


@dataclass(frozen=True)
class OrderedChain:
    state: DensityMatrix
    blocks: tuple[tuple[Hashable, ...], ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        blocks = tuple(tuple(b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if len(blocks) < 3:
            raise MarkovError(f"need at least 3 blocks, got {len(blocks)}")
        flat = [lab for b in blocks for lab in b]
        if any(not b for b in blocks):
            raise MarkovError("blocks must be nonempty")
        if len(set(flat)) != len(flat):
            raise MarkovError("blocks overlap")
        if set(flat) != set(self.state.labels):
            raise MarkovError("blocks do not partition the state's factors")

    @property
    def n(self) -> int:
        return len(self.blocks)

    def labels(self, i: int, j: int) -> list[Hashable]:
        return [lab for b in self.blocks[i:j] for lab in b]

    def entropy(self, i: int, j: int) -> float:
        if i >= j:
            return 0.0
        return dense.entropy_of(self.state, self.labels(i, j), self._cache)

    def cmi(self, i: int, a: int, b: int, j: int) -> float:
        return self.entropy(i, b) + self.entropy(a, j) - self.entropy(a, b) - self.entropy(i, j)

    def marginal(self, i: int, j: int) -> DensityMatrix:
        return dense.partial_trace(self.state, self.labels(i, j))

    def with_state(self, state: DensityMatrix) -> "OrderedChain":
        return OrderedChain(state, self.blocks)

    @classmethod
    def from_stabilizer(cls, state, regions: Sequence) -> "OrderedChain":
        """Dense chain over the union of ``regions`` of a stabilizer state (labels = qubits)."""
        from .stab import reduced_density_matrix

        blocks = [tuple(sorted(r)) for r in regions]
        support = [q for b in blocks for q in b]
        rho = reduced_density_matrix(state, support)
        return cls(dense.reorder(rho, support), blocks)


def tripartitions(n: int, proper: bool | None = None) -> Iterator[tuple[int, int, int, int]]:
    """Chain-like (i, a, b, j); ``proper`` True/False keeps only proper subsets / full covers."""
    for i, a, b, j in combinations(range(n + 1), 4):
        full = i == 0 and j == n
        if proper is None or proper != full:
            yield i, a, b, j


@dataclass
class MarkovReport:
    n: int
    tol: float
    table: list[dict]
    is_markov: bool
    is_locally_markov: bool | None
    global_cmi_constant: float | None
    spread: float
    flags: list[str] = field(default_factory=list)

    def worst(self, proper: bool | None = None) -> dict | None:
        rows = [r for r in self.table if proper is None or r["proper"] == proper]
        return max(rows, key=lambda r: r["cmi"], default=None)

    def to_json(self) -> str:
        doc = {
            "tripartitions": [
                {"A": list(r["A"]), "B": list(r["B"]), "C": list(r["C"]), "cmi": r["cmi"]} for r in self.table
            ],
            "flags": {
                "is_markov": self.is_markov,
                "is_locally_markov": self.is_locally_markov,
                "global_cmi_constant": self.global_cmi_constant,
                "spread": self.spread,
                "notes": self.flags,
            },
            "tolerances": {"cmi": self.tol},
        }
        return json.dumps(doc, indent=1)


def _scan(chain: OrderedChain, tol: float) -> MarkovReport:
    table = []
    for i, a, b, j in tripartitions(chain.n):
        table.append({
            "A": (i, a), "B": (a, b), "C": (b, j),
            "proper": not (i == 0 and j == chain.n),
            "cmi": chain.cmi(i, a, b, j),
        })
    full = [r["cmi"] for r in table if not r["proper"]]
    proper = [r["cmi"] for r in table if r["proper"]]
    spread = max(full) - min(full)
    locally = all(v <= tol for v in proper) if chain.n >= 4 else None
    return MarkovReport(
        n=chain.n,
        tol=tol,
        table=table,
        is_markov=all(r["cmi"] <= tol for r in table),
        is_locally_markov=locally,
        global_cmi_constant=float(np.mean(full)) if spread <= tol else None,
        spread=spread,
    )


def is_markov_chain(chain: OrderedChain, tol: float = PREMISE_TOL) -> MarkovReport:
    return _scan(chain, tol)


def is_locally_markov(chain: OrderedChain, tol: float = PREMISE_TOL) -> MarkovReport:
    if chain.n < 4:
        raise MarkovError("locally Markov needs at least 4 blocks")
    return _scan(chain, tol)


def cmi_constancy_scan(chain: OrderedChain) -> tuple[list[float], float]:
    """All full-cover chain-like CMIs and their spread (max - min)."""
    if chain.n < 4:
        raise MarkovError("constancy scan needs at least 4 blocks")
    values = [chain.cmi(*t) for t in tripartitions(chain.n, proper=False)]
    return values, max(values) - min(values)


def cmi_chain_rule_gap(rho: DensityMatrix, A, B, C, D, cache: dict | None = None) -> tuple[float, float, float]:
    """(I(A:C|B), I(A:CD|B), I(A:D|BC)); the chain rule says the first is the difference of the others."""
    cache = {} if cache is None else cache
    abc = dense.cmi(rho, A, B, C, cache)
    a_cd = dense.cmi(rho, A, B, list(C) + list(D), cache)
    a_d = dense.cmi(rho, A, list(B) + list(C), D, cache)
    return abc, a_cd, a_d


# --- canonical chain ----------------------------------------------------------------------


def canonical_markov_chain(chain: OrderedChain, tol: float = PREMISE_TOL, check: bool = True) -> DensityMatrix:
    """Iterated Petz extension tau_2 = sigma_{X1X2}, tau_{k+1} = Phi_{X_k -> X_k X_{k+1}}(tau_k).

    Warns with :class:`NotLocallyMarkovWarning` when ``check`` finds the input is not locally
    Markov; the recursion still runs.
    """
    sigma = chain.state
    if check and chain.n >= 4 and not is_locally_markov(chain, tol).is_locally_markov:
        warnings.warn("input state is not locally Markov; canonical chain properties are not guaranteed",
                      NotLocallyMarkovWarning, stacklevel=2)
    tau = dense.compress(chain.marginal(0, 2))
    for k in range(1, chain.n - 1):
        frm = chain.blocks[k]
        to = frm + chain.blocks[k + 1]
        phi = dense.petz_map(sigma, frm, to)
        try:
            tau = dense.compress(dense.apply_channel(phi, tau))
        except SupportMismatchError as exc:
            raise CanonicalChainError(k + 1, str(exc)) from exc
    return dense.reorder(tau, sigma.labels)


@dataclass
class CheckReport:
    name: str
    passed: bool
    tol: float
    values: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "tol": self.tol, "values": self.values,
                "failures": self.failures}


def connected_proper_intervals(n: int) -> Iterator[tuple[int, int]]:
    for i in range(n):
        for j in range(i + 1, n + 1):
            if (i, j) != (0, n):
                yield i, j


def verify_indistinguishability(tau: DensityMatrix, chain: OrderedChain, tol: float = PREMISE_TOL) -> CheckReport:
    """Trace distance between tau and sigma on every connected proper interval of blocks."""
    dists = {}
    for i, j in connected_proper_intervals(chain.n):
        labs = chain.labels(i, j)
        dists[f"X{i + 1}..X{j}"] = dense.trace_distance(chain.marginal(i, j), dense.partial_trace(tau, labs))
    bad = [name for name, d in dists.items() if d > tol]
    return CheckReport("indistinguishability", not bad, tol,
                       {"max_distance": max(dists.values()), "distances": dists}, bad)


def verify_max_entropy(tau: DensityMatrix, chain: OrderedChain, a: int, b: int, tol: float = PREMISE_TOL) -> CheckReport:
    """Certify tau as the max-entropy state matching sigma on AB = X[0,b) and BC = X[a,n).

    The certificate is the pair (marginals match, I(A:C|B)_tau = 0); any other state with the
    same AB and BC marginals has entropy at most S(tau) by strong subadditivity.
    """
    n = chain.n
    if not 0 < a < b < n:
        raise MarkovError("need a full-cover split 0 < a < b < n")
    t_chain = chain.with_state(tau)
    d_ab = dense.trace_distance(chain.marginal(0, b), t_chain.marginal(0, b))
    d_bc = dense.trace_distance(chain.marginal(a, n), t_chain.marginal(a, n))
    cmi_tau = t_chain.cmi(0, a, b, n)
    failures = []
    if d_ab > tol:
        failures.append(f"AB marginal differs by {d_ab:.3e}")
    if d_bc > tol:
        failures.append(f"BC marginal differs by {d_bc:.3e}")
    if cmi_tau > tol:
        failures.append(f"I(A:C|B)_tau = {cmi_tau:.3e} is not zero")
    values = {"d_AB": d_ab, "d_BC": d_bc, "cmi_tau": cmi_tau,
              "S_tau": t_chain.entropy(0, n), "S_sigma": chain.entropy(0, n)}
    return CheckReport("max_entropy", not failures, tol, values, failures)


def verify_canonical_chain(tau: DensityMatrix, chain: OrderedChain, tol: float = PREMISE_TOL) -> list[CheckReport]:
    """Indistinguishability, Markov property and the max-entropy certificate for every split."""
    reports = [verify_indistinguishability(tau, chain, tol)]
    scan = is_markov_chain(chain.with_state(tau), tol)
    worst = scan.worst()
    reports.append(CheckReport("markov", scan.is_markov, tol, {"max_cmi": worst["cmi"]},
                               [] if scan.is_markov else [f"CMI {worst['cmi']:.3e} at {worst['A']},{worst['B']},{worst['C']}"]))
    for a, b in combinations(range(1, chain.n), 2):
        reports.append(verify_max_entropy(tau, chain, a, b, tol))
    return reports


# --- lemmas ----------------------------------------------------------------------------------


def _apply(ch, rho: DensityMatrix) -> DensityMatrix:
    return ch(rho) if callable(ch) else dense.apply_channel(ch, rho)


def entropy_difference_lemma_check(rho: DensityMatrix, rho_p: DensityMatrix, R, T, P: Sequence[Hashable],
                                   premise_tol: float = PREMISE_TOL, tol: float = CONCLUSION_TOL) -> dict:
    """Check S(rho) - S(rho') = S(R rho) - S(R rho') for channels R: Q -> Qhat and T: Qhat -> Q.

    Premises (matched P and Q marginals, T R fixing both states) are reported apart from the
    conclusion and from the mutual-information identity I(P:Q)_rho = I(P:Qhat)_{R rho}.
    """
    P = list(P)
    Q = [lab for lab in rho.labels if lab not in set(P)]
    rho_p = dense.reorder(rho_p, rho.labels)
    r_rho, r_rho_p = _apply(R, rho), _apply(R, rho_p)
    back, back_p = _apply(T, r_rho), _apply(T, r_rho_p)
    premises = {
        "d_P": dense.trace_distance(dense.partial_trace(rho, P), dense.partial_trace(rho_p, P)),
        "d_Q": dense.trace_distance(dense.partial_trace(rho, Q), dense.partial_trace(rho_p, Q)),
        "d_TR_rho": dense.trace_distance(rho, back),
        "d_TR_rho_p": dense.trace_distance(rho_p, back_p),
    }
    premise_ok = all(v <= premise_tol for v in premises.values())
    lhs = dense.entropy(rho) - dense.entropy(rho_p)
    rhs = dense.entropy(r_rho) - dense.entropy(r_rho_p)
    q_hat = [lab for lab in r_rho.labels if lab not in set(P)]
    mi = dense.mutual_information(rho, P, Q)
    mi_hat = dense.mutual_information(r_rho, P, q_hat)
    conclusion_ok = abs(lhs - rhs) <= tol and abs(mi - mi_hat) <= tol
    return {
        "premises": premises,
        "premise_ok": premise_ok,
        "lhs": lhs,
        "rhs": rhs,
        "gap": abs(lhs - rhs),
        "mi": mi,
        "mi_hat": mi_hat,
        "conclusion_ok": conclusion_ok,
        "passed": premise_ok and conclusion_ok,
        "premise_tol": premise_tol,
        "tol": tol,
    }


def local_to_global_check(rho: DensityMatrix, sigma: DensityMatrix, A, B, C,
                          premise_tol: float = 1e-8, tol: float = CONCLUSION_TOL) -> dict:
    """Two Markov states with equal AB and BC marginals must coincide."""
    A, B, C = list(A), list(B), list(C)
    sigma = dense.reorder(sigma, rho.labels)
    cmi_rho, cmi_sigma = dense.cmi(rho, A, B, C), dense.cmi(sigma, A, B, C)
    d_ab = dense.trace_distance(dense.partial_trace(rho, A + B), dense.partial_trace(sigma, A + B))
    d_bc = dense.trace_distance(dense.partial_trace(rho, B + C), dense.partial_trace(sigma, B + C))
    premise_ok = max(cmi_rho, cmi_sigma, d_ab, d_bc) <= premise_tol
    dist = dense.trace_distance(rho, sigma)
    return {
        "cmi_rho": cmi_rho, "cmi_sigma": cmi_sigma, "d_AB": d_ab, "d_BC": d_bc,
        "premise_ok": premise_ok,
        "distance": dist,
        "applicable": premise_ok,
        "passed": premise_ok and dist <= tol,
    }


# --- moves ---------------------------------------------------------------------------------------


def classify_move(first: Sequence, second: Sequence) -> str:
    """'identical', 'move1' or 'move2' for two five-block partitions; raises otherwise."""
    x = [frozenset(b) for b in first]
    y = [frozenset(b) for b in second]
    if len(x) != 5 or len(y) != 5:
        raise MarkovError("moves are defined for five-block partitions")
    if any(not b for b in x + y):
        raise MarkovError("moved partition has an empty block")
    if frozenset().union(*x) != frozenset().union(*y):
        raise MarkovError("partitions cover different regions")
    if x == y:
        return "identical"
    if x[2] == y[2] and x[0] | x[1] == y[0] | y[1] and x[3] | x[4] == y[3] | y[4]:
        return "move1"
    if x[0] == y[0] and x[4] == y[4]:
        return "move2"
    for k in range(4):
        if frozenset().union(*x[: k + 1]) != frozenset().union(*y[: k + 1]):
            raise MarkovError(f"partitions are not related by a single move: boundary X{k + 1}|X{k + 2} unmatched")
    raise MarkovError("partitions are not related by a single move")


def moves_invariance_check(state: DensityMatrix, first: Sequence, second: Sequence,
                           tol: float = CONCLUSION_TOL) -> dict:
    kind = classify_move(first, second)
    c1 = OrderedChain(state, first)
    c2 = OrderedChain(state, second)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NotLocallyMarkovWarning)
        t1 = canonical_markov_chain(c1)
        t2 = canonical_markov_chain(c2)
    dist = dense.trace_distance(t1, t2)
    return {
        "move": kind,
        "distance": dist,
        "entropy_first": dense.entropy(t1),
        "entropy_second": dense.entropy(t2),
        "not_locally_markov": any(issubclass(w.category, NotLocallyMarkovWarning) for w in caught),
        "passed": dist <= tol,
        "tol": tol,
    }
