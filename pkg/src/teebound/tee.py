"""End-to-end experiments on the CMI lower bound for states prepared by shallow circuits.

Everything here composes the lower layers: stabilizer states give exact integer entropies,
dense states handle the max-entropy (canonical Markov chain) constructions, and circuits
supply the shallow unitaries together with their light cones.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import dense, markov, stab
from .circuits import (
    IDENTITY,
    Circuit,
    Gate,
    invert,
    random_circuit_on_pairs,
    random_shallow_clifford,
    random_shallow_unitary,
    random_two_qubit_clifford,
    restrict_outside_light_cone,
    restrict_to_region,
)
from .lattice import (
    AnnulusPartition,
    GeometryError,
    Lattice,
    Region,
    _angle,
    _qubits,
    build_annulus_partition,
    build_ring_annulus,
    enclosing_loops,
    forward_cone,
    light_cone,
    partition_from_spec,
)

LOG2 = math.log(2)
RECORD_TOL = 1e-9  # cmi vs entropy combination
DENSE_MARGIN_TOL = 1e-8
OVERLAP_TOL = 1e-9
ENTROPY_EQ_TOL = 1e-9
FACT_TOL = 1e-7
GAMMA_TOL = 1e-8


class PreconditionError(GeometryError):
    """A construction step's geometric precondition fails; ``step`` names the step."""

    def __init__(self, step: str, message: str):
        self.step = step
        super().__init__(f"{step}: {message}")


class AuditError(GeometryError):
    pass


class EngineMismatchError(ValueError):
    pass


class PathRoutingError(GeometryError):
    pass


# --- reference states --------------------------------------------------------------------

REFERENCE_KINDS = ("toric_code", "product", "external_file")


@lru_cache(maxsize=8)
def _reference_state(kind: str, rows: int, cols: int, path: str | None) -> stab.StabilizerState:
    lat = Lattice(rows, cols)
    if kind == "toric_code":
        return stab.toric_code_ground_state(lat)
    if kind == "product":
        return stab.product_state(lat.n_qubits)
    with open(path) as fh:
        st = stab.StabilizerState.loads(fh.read())
    if st.n != lat.n_qubits:
        raise GeometryError(f"state in {path} has {st.n} qubits, lattice {rows}x{cols} has {lat.n_qubits}")
    return st


@dataclass(frozen=True)
class ReferenceDescriptor:
    """What state the experiment starts from; ``gamma0`` is half its annulus CMI (nats)."""

    kind: str = "toric_code"
    rows: int = 12
    cols: int = 12
    gamma0: float | None = None
    total_quantum_dimension_log: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(f"unknown reference kind {self.kind!r}")
        default = {"toric_code": LOG2, "product": 0.0}.get(self.kind)
        if self.gamma0 is None:
            if default is None:
                raise ValueError("external_file references must declare gamma0")
            object.__setattr__(self, "gamma0", default)
        elif self.kind == "toric_code" and abs(self.gamma0 - LOG2) > 1e-12:
            raise ValueError("the toric code has gamma0 = log 2")
        if self.total_quantum_dimension_log is None:
            object.__setattr__(self, "total_quantum_dimension_log", self.gamma0)
        if self.kind == "external_file" and not self.path:
            raise ValueError("external_file references need a path")

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.rows, self.cols)

    def state(self) -> stab.StabilizerState:
        return _reference_state(self.kind, self.rows, self.cols, self.path)

    @property
    def gamma0_bits(self) -> int:
        """2*gamma0 / log 2 as an integer (stabilizer references have integer CMIs)."""
        bits = 2 * self.gamma0 / LOG2
        if abs(bits - round(bits)) > 1e-9:
            raise ValueError("2*gamma0 is not an integer multiple of log 2")
        return int(round(bits))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ReferenceDescriptor":
        return cls(**doc)


def resolve_partition(lattice: Lattice, partition) -> AnnulusPartition:
    if isinstance(partition, AnnulusPartition):
        return partition
    return partition_from_spec(lattice, partition)


# --- circuits ------------------------------------------------------------------------------


def _restriction(part: AnnulusPartition, where: str | None, collar: int = 1):
    if where in (None, "all"):
        return None
    if where == "ABC":
        return part.ABC.qubits
    if where == "BC":
        return part.B.qubits | part.C.qubits
    if where == "near_BC":
        bc = part.B.qubits | part.C.qubits
        return part.lattice.ball(bc, collar) - part.A.qubits
    raise ValueError(f"unknown restriction {where!r}")


def build_circuit(lattice: Lattice, spec, partition: AnnulusPartition, seed: int) -> Circuit:
    """Circuit from a spec dict (or pass a Circuit through).

    Spec keys: ``kind`` in identity | clifford | haar | explicit; ``depth``; optional ``seed``
    override; ``restrict_to`` in all | ABC | BC | near_BC; ``collar`` radius for near_BC;
    ``circuit`` (JSON text or layer list) for explicit.
    """
    if isinstance(spec, Circuit):
        return spec
    spec = dict(spec or {"kind": "identity"})
    kind = spec.get("kind", "clifford")
    s = int(spec.get("seed", seed))
    keep = _restriction(partition, spec.get("restrict_to"), int(spec.get("collar", 1)))
    if kind == "identity":
        return IDENTITY
    if kind == "clifford":
        return random_shallow_clifford(lattice, int(spec["depth"]), s, restrict_to=keep)
    if kind == "haar":
        return random_shallow_unitary(lattice, int(spec["depth"]), s, restrict_to=keep)
    if kind == "explicit":
        body = spec["circuit"]
        return Circuit.from_json(body if isinstance(body, str) else json.dumps(body))
    raise ValueError(f"unknown circuit kind {kind!r}")


def past_gates(circuit: Circuit, region) -> Circuit:
    """Only the gates in the backward light cone of ``region`` (same layer count)."""
    cone = set(_qubits(region))
    keep = []
    for layer in reversed(circuit.layers):
        kept = tuple(g for g in layer if cone.intersection(g.support))
        for g in kept:
            cone.update(g.support)
        keep.append(kept)
    return Circuit(tuple(reversed(keep)))


def collar_part(circuit: Circuit, region) -> Circuit:
    """Drop gates inside ``region`` that can be commuted to the end of the circuit.

    Those gates form a unitary acting within ``region`` after the rest, so no entropy of a
    union of ``region`` with outside qubits depends on them.
    """
    inside = _qubits(region)
    later: set[int] = set()
    keep = []
    for layer in reversed(circuit.layers):
        kept = []
        for g in layer:
            if inside.issuperset(g.support) and not later.intersection(g.support):
                continue
            kept.append(g)
        for g in kept:
            later.update(g.support)
        keep.append(tuple(kept))
    return Circuit(tuple(reversed(keep)))


def dense_region_state(state: stab.StabilizerState, circuit: Circuit, region) -> dense.DensityMatrix:
    """Marginal of U state U^dagger on ``region``, evolved densely on its light cone."""
    qs = sorted(_qubits(region))
    cone = light_cone(circuit, qs).qubits
    if len(cone) > stab.DENSE_LIMIT:
        raise dense.ResourceLimitError(f"light cone of {len(cone)} qubits exceeds the dense limit {stab.DENSE_LIMIT}")
    rho = stab.reduced_density_matrix(state, cone)
    rho = dense.apply_unitary(rho, past_gates(circuit, qs))
    return dense.reorder(dense.partial_trace(rho, qs), qs)


# --- records ----------------------------------------------------------------------------------

CSV_COLUMNS = (
    "seed", "engine", "reference", "partition", "rows", "cols", "center_r", "center_c",
    "r_in", "r_out", "width", "circuit", "depth", "n_gates", "support_size",
    "S_AB", "S_BC", "S_B", "S_ABC", "cmi", "bound", "margin",
    "cmi_log2", "bound_log2", "margin_log2", "precondition_ok",
)


@dataclass
class ExperimentRecord:
    """One evaluation of I(A:C|B) on a circuit-evolved reference state. Entropies in nats."""

    seed: int
    engine: str
    reference: dict
    partition: dict
    geometry: dict
    regions: dict
    circuit_kind: str
    circuit: str
    depth: int
    n_gates: int
    support_size: int
    S_AB: float
    S_BC: float
    S_B: float
    S_ABC: float
    cmi: float
    bound: float
    margin: float
    precondition_ok: bool
    precondition_notes: list = field(default_factory=list)
    cmi_bits: int | None = None
    wall_time: float = 0.0

    def __post_init__(self):
        combo = self.S_AB + self.S_BC - self.S_B - self.S_ABC
        if abs(combo - self.cmi) > RECORD_TOL:
            raise ValueError(f"cmi {self.cmi} disagrees with the entropy combination {combo}")
        if abs(self.margin - (self.cmi - self.bound)) > RECORD_TOL:
            raise ValueError("margin must equal cmi - bound")

    @property
    def margin_log2(self) -> float:
        return self.margin / LOG2

    def csv_row(self) -> dict:
        g = self.geometry
        center = g.get("center", [None, None])
        return {
            "seed": self.seed,
            "engine": self.engine,
            "reference": self.reference["kind"],
            "partition": g.get("kind"),
            "rows": g["L"][0],
            "cols": g["L"][1],
            "center_r": center[0],
            "center_c": center[1],
            "r_in": g.get("r_in"),
            "r_out": g.get("r_out"),
            "width": g.get("width"),
            "circuit": self.circuit_kind,
            "depth": self.depth,
            "n_gates": self.n_gates,
            "support_size": self.support_size,
            "S_AB": repr(self.S_AB),
            "S_BC": repr(self.S_BC),
            "S_B": repr(self.S_B),
            "S_ABC": repr(self.S_ABC),
            "cmi": repr(self.cmi),
            "bound": repr(self.bound),
            "margin": repr(self.margin),
            "cmi_log2": repr(self.cmi / LOG2),
            "bound_log2": repr(self.bound / LOG2),
            "margin_log2": repr(self.margin_log2),
            "precondition_ok": int(self.precondition_ok),
        }

    def to_json(self) -> str:
        """Deterministic JSON (wall time excluded; it belongs in a timing sidecar)."""
        doc = asdict(self)
        doc.pop("wall_time")
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentRecord":
        return cls(**json.loads(text))


# --- preconditions ---------------------------------------------------------------------------


def _loops_missing(lat: Lattice, region, circuit: Circuit) -> list[str]:
    """Anyon labels with no winding loop whose dressed version stays inside ``region``.

    A qubit's forward cone stays inside the region iff it lies outside the past cone of the
    complement, so the loops are sought in that shrunken core.
    """
    region = frozenset(region)
    core = region - light_cone(circuit, frozenset(range(lat.n_qubits)) - region).qubits
    primal, dual = enclosing_loops(lat, core)
    return [name for name, loops in (("e", primal), ("m", dual)) if not loops]


def light_cone_precondition(partition: AnnulusPartition, circuit: Circuit) -> tuple[bool, list[str]]:
    """Is the circuit shallow compared to the annulus?

    Checked in order: the past cones of A and C stay non-adjacent; at least one closed
    e-loop and one closed m-loop still lie inside ABC once dressed by the circuit; and the
    shrink-and-strip construction (gate-free hole in A, notched A', string corridor for the
    stripped circuit) can actually be carried out. The last condition is what the lower
    bound argument uses, so a record with precondition_ok set is a genuine test of it.
    """
    notes = []
    lat = partition.lattice
    abc = partition.ABC.qubits
    cone_a = light_cone(circuit, partition.A).qubits
    cone_c = light_cone(circuit, partition.C).qubits
    if lat.distance(cone_a, cone_c) < 2:
        notes.append("past cones of A and C touch")
    notes.extend(f"no dressed {name} loop fits inside ABC" for name in _loops_missing(lat, abc, circuit))
    if not notes and partition.kind != "deformed":
        try:
            deformation_plan(partition, circuit)
        except PreconditionError as exc:
            notes.append(f"shrink-and-strip construction fails at {exc}")
    return not notes, notes


# --- main bound ---------------------------------------------------------------------------------


def _entropies_stabilizer(st: stab.StabilizerState, part: AnnulusPartition) -> tuple[dict, int]:
    A, B, C = part.A.qubits, part.B.qubits, part.C.qubits
    bits = {
        "S_AB": stab.entropy_bits(st, A | B),
        "S_BC": stab.entropy_bits(st, B | C),
        "S_B": stab.entropy_bits(st, B),
        "S_ABC": stab.entropy_bits(st, A | B | C),
    }
    cmi_bits = bits["S_AB"] + bits["S_BC"] - bits["S_B"] - bits["S_ABC"]
    return {k: v * LOG2 for k, v in bits.items()}, cmi_bits


def _entropies_dense(rho: dense.DensityMatrix, part: AnnulusPartition) -> dict:
    A, B, C = sorted(part.A.qubits), sorted(part.B.qubits), sorted(part.C.qubits)
    cache: dict = {}
    return {
        "S_AB": dense.entropy_of(rho, A + B, cache),
        "S_BC": dense.entropy_of(rho, B + C, cache),
        "S_B": dense.entropy_of(rho, B, cache),
        "S_ABC": dense.entropy_of(rho, A + B + C, cache),
    }


def evolved_stabilizer_state(ref: ReferenceDescriptor, circuit: Circuit) -> stab.StabilizerState:
    if not circuit.is_clifford:
        raise EngineMismatchError("the stabilizer engine cannot apply dense (non-Clifford) gates")
    return stab.apply_clifford(ref.state(), circuit)


def tee_bound_experiment(ref: ReferenceDescriptor, circuit_spec, partition, seed: int = 0,
                         engine: str = "stabilizer") -> ExperimentRecord:
    """Evaluate margin = I(A:C|B)_{U sigma U^dagger} - 2 gamma0 for one circuit.

    The light-cone precondition is checked and recorded; the run happens either way.
    """
    t0 = time.perf_counter()
    lat = ref.lattice
    part = resolve_partition(lat, partition)
    part.validate()
    circ = build_circuit(lat, circuit_spec, part, seed)
    ok, notes = light_cone_precondition(part, circ)
    cmi_bits = None
    if engine == "stabilizer":
        ent, cmi_bits = _entropies_stabilizer(evolved_stabilizer_state(ref, circ), part)
        cmi = cmi_bits * LOG2
    elif engine == "dense":
        rho = dense_region_state(ref.state(), circ, part.ABC)
        ent = _entropies_dense(rho, part)
        cmi = ent["S_AB"] + ent["S_BC"] - ent["S_B"] - ent["S_ABC"]
    else:
        raise ValueError(f"unknown engine {engine!r}")
    bound = 2 * ref.gamma0
    spec = circuit_spec if isinstance(circuit_spec, dict) else {"kind": "explicit"}
    return ExperimentRecord(
        seed=seed,
        engine=engine,
        reference=ref.to_dict(),
        partition=part.spec(),
        geometry=part.geometry(),
        regions={r.label: r.sorted for r in part.regions()},
        circuit_kind=str(spec.get("kind", "explicit")),
        circuit=circ.to_json(),
        depth=circ.depth,
        n_gates=len(circ),
        support_size=len(circ.support),
        cmi=cmi,
        bound=bound,
        margin=cmi - bound,
        precondition_ok=ok,
        precondition_notes=notes,
        cmi_bits=cmi_bits,
        wall_time=time.perf_counter() - t0,
        **ent,
    )


def replay_record(record: ExperimentRecord) -> ExperimentRecord:
    """Re-run a record from its stored reference, partition and explicit circuit."""
    ref = ReferenceDescriptor.from_dict(record.reference)
    part = partition_from_spec(ref.lattice, record.partition)
    stored = {r.label: r.sorted for r in part.regions()}
    if stored != record.regions:
        raise GeometryError("rebuilt partition differs from the recorded regions")
    spec = {"kind": "explicit", "circuit": record.circuit}
    out = tee_bound_experiment(ref, spec, part, record.seed, record.engine)
    out.circuit_kind = record.circuit_kind
    return out


# --- reference audit ----------------------------------------------------------------------------


@dataclass
class AuditReport:
    reference: dict
    partitions: list
    cmi_bits: list
    expected_bits: int | None
    mutual_information_bits: list
    gamma0_audited: float | None
    failures: list
    wall_time: float

    @property
    def passed(self) -> bool:
        return not self.failures


def sample_annulus_partitions(lattice: Lattice, n: int, seed: int, max_tries: int = 1000) -> list[AnnulusPartition]:
    """Distinct random square annuli: varying center, radii and arc split points."""
    rng = np.random.default_rng(seed)
    rmax = (min(lattice.rows, lattice.cols) - 1) // 2
    out, seen = [], set()
    for _ in range(max_tries):
        if len(out) == n:
            break
        r_in = int(rng.integers(1, max(2, rmax - 1)))
        r_out = int(rng.integers(r_in + 1, rmax + 1))
        center = (int(rng.integers(lattice.rows)), int(rng.integers(lattice.cols)))
        base = np.array([45.0, 135.0, 225.0, 315.0])
        arcs = tuple(float(a) for a in base + rng.uniform(-20, 20, 4))
        try:
            part = build_annulus_partition(lattice, center, r_in, r_out, arcs)
        except GeometryError:
            continue
        key = tuple(tuple(r.sorted) for r in part.regions())
        if key in seen:
            continue
        seen.add(key)
        out.append(part)
    if len(out) < n:
        raise AuditError(f"could only place {len(out)} of {n} annuli on the lattice")
    return out


def reference_state_audit(ref: ReferenceDescriptor, n_partitions: int = 5, seed: int = 0,
                          partitions: Sequence | None = None) -> AuditReport:
    """Check partition-independent CMI and vanishing mutual information of non-adjacent regions."""
    t0 = time.perf_counter()
    lat = ref.lattice
    st = ref.state()
    if partitions is None:
        parts = sample_annulus_partitions(lat, n_partitions, seed)
    else:
        parts = [resolve_partition(lat, p) for p in partitions]
    for p in parts:
        try:
            p.validate()
        except GeometryError as exc:
            raise AuditError(f"invalid audit partition: {exc}") from exc
    rng = np.random.default_rng(seed + 1)
    cmis, mis, failures = [], [], []
    expected = ref.gamma0_bits
    for i, p in enumerate(parts):
        _, bits = _entropies_stabilizer(st, p)
        cmis.append(bits)
        if bits != expected:
            failures.append(f"partition {i}: CMI {bits} bits, expected {expected}")
        pairs = [("A", "C", p.A.qubits, p.C.qubits)]
        if lat.distance(p.B1.qubits, p.B2.qubits) >= 2:
            pairs.append(("B1", "B2", p.B1.qubits, p.B2.qubits))
        # a random pair of disks, kept apart by at least two steps
        for _ in range(50):
            a = lat.ball([int(rng.integers(lat.n_qubits))], int(rng.integers(1, 3)))
            c = lat.ball([int(rng.integers(lat.n_qubits))], int(rng.integers(1, 3)))
            if lat.distance(a, c) >= 2:
                pairs.append(("disk", "disk", a, c))
                break
        for la, lc, a, c in pairs:
            mi = stab.mutual_information_bits(st, a, c)
            mis.append({"partition": i, "pair": f"{la}:{lc}", "bits": mi})
            if mi != 0:
                failures.append(f"partition {i}: I({la}:{lc}) = {mi} bits")
    gamma = cmis[0] * LOG2 / 2 if cmis and len(set(cmis)) == 1 else None
    return AuditReport(
        reference=ref.to_dict(),
        partitions=[p.spec() if p.kind != "custom" else p.geometry() for p in parts],
        cmi_bits=cmis,
        expected_bits=expected,
        mutual_information_bits=mis,
        gamma0_audited=gamma,
        failures=failures,
        wall_time=time.perf_counter() - t0,
    )


# --- anyon strings ------------------------------------------------------------------------------


def _components(nodes, neighbors) -> list[set]:
    seen: set = set()
    comps = []
    for s in nodes:
        if s in seen:
            continue
        comp = {s}
        stack = [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            for y in neighbors(x):
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        comps.append(comp)
    return comps


def enclosed_nodes(lattice: Lattice, loop, dual: bool) -> set:
    """Nodes on the small side of a closed loop.

    For a dual loop (edges crossed by a closed dual path) the nodes are vertices; for a
    primal edge cycle they are plaquettes.
    """
    cut = set(loop)
    if dual:
        nodes = [(r, c) for r in range(lattice.rows) for c in range(lattice.cols)]

        def nbrs(n):
            r, c = n
            out = []
            for (dr, dc), e in (((0, 1), lattice.h(r, c)), ((0, -1), lattice.h(r, c - 1)),
                                ((1, 0), lattice.v(r, c)), ((-1, 0), lattice.v(r - 1, c))):
                if e not in cut:
                    out.append(lattice.vertex(r + dr, c + dc))
            return out
    else:
        nodes = [(r, c) for r in range(lattice.rows) for c in range(lattice.cols)]

        def nbrs(n):
            r, c = n
            out = []
            for (dr, dc), e in (((-1, 0), lattice.h(r, c)), ((1, 0), lattice.h(r + 1, c)),
                                ((0, -1), lattice.v(r, c)), ((0, 1), lattice.v(r, c + 1))):
                if e not in cut:
                    out.append(lattice.vertex(r + dr, c + dc))
            return out
    comps = _components(nodes, nbrs)
    if len(comps) != 2:
        raise GeometryError(f"loop splits the lattice into {len(comps)} pieces, expected 2")
    return min(comps, key=len)


@dataclass
class AnyonStrings:
    operators: dict  # anyon -> PauliString
    e_path: list
    m_path: list
    keepout: frozenset
    checked_by: str = "cone"  # how invisibility on AB and BC was established


def _string_ops(lat: Lattice, e_path, m_path) -> dict:
    return {
        "1": stab.PauliString.identity(lat.n_qubits),
        "e": stab.string_operator(lat, "e", path=e_path),
        "m": stab.string_operator(lat, "m", dual=m_path),
        "eps": stab.string_operator(lat, "eps", path=e_path, dual=m_path),
    }


def _local_piece(op: stab.PauliString, qubits) -> tuple[stab.PauliString, list[int]]:
    """The factor of a Pauli string acting on ``qubits`` (and the sorted qubits it touches)."""
    local = sorted(q for q in op.support if q in qubits)
    mask = np.zeros(op.n, np.uint8)
    mask[local] = 1
    x, z = op.x & mask, op.z & mask
    return stab.PauliString(x, z, int(np.sum(x & z))), local


def strings_invisible(partition: AnnulusPartition, circuit: Circuit, ops: dict,
                      sigma: stab.StabilizerState) -> str | None:
    """How the strings were shown to leave the AB and BC marginals of U sigma U^dagger unchanged.

    Returns "cone" when every string is invisible in sigma on the past light cones of AB and BC
    (sufficient for any circuit it commutes with), "stabilizer" or "dense" when checked directly
    on the evolved state, and None when no check succeeds.
    """
    A, B, C = partition.A.qubits, partition.B.qubits, partition.C.qubits
    ab, bc = A | B, B | C
    strings = [ops["e"], ops["m"]]
    cones = (light_cone(circuit, ab).qubits, light_cone(circuit, bc).qubits)
    if all(stab.pauli_invisible(sigma, v, cone) for v in strings for cone in cones):
        return "cone"
    if circuit.is_clifford:
        evolved = stab.apply_clifford(sigma, circuit)
        ok = all(stab.pauli_invisible(evolved, v, reg) for v in strings for reg in (ab, bc))
        return "stabilizer" if ok else None
    try:
        rho = dense_region_state(sigma, circuit, A | B | C)
    except dense.ResourceLimitError:
        return None
    labels = list(rho.labels)
    Al, Bl, Cl = sorted(A), sorted(B), sorted(C)
    for v in strings:
        piece, local = _local_piece(v, A | B | C)
        if not local:
            continue
        moved = dense.reorder(dense.apply_channel(dense.unitary_channel(piece.matrix(local), local), rho), labels)
        for keep in (Al + Bl, Bl + Cl):
            if dense.trace_distance(dense.partial_trace(moved, keep), dense.partial_trace(rho, keep)) > OVERLAP_TOL:
                return None
    return "dense"


def route_anyon_strings(partition: AnnulusPartition, circuit: Circuit) -> AnyonStrings:
    """Open strings placing each anyon inside the hole and its partner outside.

    Paths avoid the circuit support, so the strings commute with the circuit. Endpoint faces
    are first sought outside the past light cones of AB and BC; when the hole is too small for
    that, any face whose dressed version sticks out of ABC is allowed. Either way the strings
    must then pass ``strings_invisible``.
    """
    lat = partition.lattice
    if not partition.primal_loops or not partition.dual_loops:
        loops = enclosing_loops(lat, partition.ABC.qubits)
    else:
        loops = (partition.primal_loops, partition.dual_loops)
    if not loops[0] or not loops[1]:
        raise PathRoutingError("annulus carries no winding loops")
    A, B, C = partition.A.qubits, partition.B.qubits, partition.C.qubits
    outside = frozenset(range(lat.n_qubits)) - (A | B | C)
    far = light_cone(circuit, A | B).qubits | light_cone(circuit, B | C).qubits
    exposed = light_cone(circuit, outside).qubits
    rules = (lambda f: far.isdisjoint(f), lambda f: not exposed.isdisjoint(f))
    avoid = frozenset(circuit.support)
    all_nodes = [(r, c) for r in range(lat.rows) for c in range(lat.cols)]
    sigma = _reference_state("toric_code", lat.rows, lat.cols, None)
    problem = "no endpoint face sticks out of ABC after the circuit"
    for rule in rules:
        paths = {}
        for dual, loop in ((False, loops[1][0]), (True, loops[0][0])):
            inside = enclosed_nodes(lat, loop, dual=not dual)
            faces = (lambda n: lat.plaquette(*n)) if dual else (lambda n: lat.star(*n))
            free = [n for n in all_nodes if rule(faces(n))]
            starts = [n for n in free if n in inside]
            ends = [n for n in free if n not in inside]
            if not starts or not ends:
                break
            try:
                paths[dual] = stab.route_path(lat, starts, ends, avoid, dual=dual)
            except GeometryError as exc:
                problem = f"keep-out region blocks every {'m' if dual else 'e'} string: {exc}"
                break
        if len(paths) < 2:
            continue
        ops = _string_ops(lat, paths[False], paths[True])
        how = strings_invisible(partition, circuit, ops, sigma)
        if how is not None:
            return AnyonStrings(ops, paths[False], paths[True], avoid, how)
        problem = "the strings are visible on AB or BC of the evolved state"
    raise PathRoutingError(problem)


def same_marginal(s1: stab.StabilizerState, s2: stab.StabilizerState, region) -> bool:
    """Exact equality of two stabilizer marginals (same signed local subgroup)."""
    if stab.supported_rank(s1, region) != stab.supported_rank(s2, region):
        return False
    return all(stab.expectation(s2, g) == 1 for g in stab.supported_subgroup(s1, region))


def distinguishing_element(s1: stab.StabilizerState, s2: stab.StabilizerState, region):
    """A Pauli inside ``region`` with expectation +1 in s1 and -1 in s2, or None."""
    for g in stab.supported_subgroup(s1, region):
        if stab.expectation(s2, g) == -1:
            return g
    return None


def shannon(probs) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.shape != (4,):
        raise ValueError("need four probabilities (1, e, m, eps)")
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    return p


def anyon_mixture_check(ref: ReferenceDescriptor, partition, circuit_spec, probs=(0.25, 0.25, 0.25, 0.25),
                        seed: int = 0, engine: str = "stabilizer") -> dict:
    """Mixture of anyon-sector states for a circuit near BC, with the entropy identities it obeys.

    ``engine`` is stabilizer (exact), dense (trace overlaps, mixture spectrum) or both.
    """
    if ref.kind != "toric_code":
        raise ValueError("anyon mixtures need the toric-code reference")
    p = _check_probs(probs)
    lat = ref.lattice
    part = resolve_partition(lat, partition)
    circ = build_circuit(lat, circuit_spec, part, seed)
    strings = route_anyon_strings(part, circ)
    A, B, C = part.A.qubits, part.B.qubits, part.C.qubits
    abc = A | B | C
    anyons = list(stab.ANYONS)
    h_p = shannon(p)
    out: dict = {"probs": p.tolist(), "shannon": h_p, "engine": engine,
                 "e_path": strings.e_path, "m_path": strings.m_path, "checks": {}}

    st = evolved_stabilizer_state(ref, circ) if circ.is_clifford else None
    if engine in ("stabilizer", "both"):
        if st is None:
            raise EngineMismatchError("the stabilizer engine cannot apply dense (non-Clifford) gates")
        states = {a: stab.apply_pauli(st, strings.operators[a]) for a in anyons}
        # (i) pairwise orthogonality via a distinguishing stabilizer inside ABC
        ortho = {}
        for i, a in enumerate(anyons):
            for b in anyons[i + 1:]:
                ortho[f"{a}|{b}"] = distinguishing_element(states[a], states[b], abc) is not None
        witnesses = _loop_witness_table(part, circ, states)
        bits = {a: stab.entropy_bits(states[a], abc) for a in anyons}
        # the sectors differ from sigma~ by a Pauli string: marginals agree iff it commutes with the local group
        indist = all(stab.pauli_invisible(st, strings.operators[a], A | B)
                     and stab.pauli_invisible(st, strings.operators[a], B | C) for a in anyons)
        _, cmi_bits = _entropies_stabilizer(st, part)
        # orthogonal components: the mixture spectrum is p_a times each component's flat spectrum
        diff = h_p + float(sum(pa * (bits[a] - bits["1"]) for pa, a in zip(p, anyons))) * LOG2
        cmi_sigma = cmi_bits * LOG2
        cmi_lambda = cmi_sigma - diff
        out["checks"]["stabilizer"] = {
            "orthogonal": ortho,
            "orthogonality_ok": all(ortho.values()),
            "loop_witnesses": witnesses,
            "entropy_bits": bits,
            "entropy_equal": len(set(bits.values())) == 1,
            "indistinguishable_AB_BC": indist,
            "entropy_difference": diff,
            "difference_ok": abs(diff - h_p) <= ENTROPY_EQ_TOL,
            "cmi_sigma": cmi_sigma,
            "cmi_lambda": cmi_lambda,
            "bound_ok": cmi_sigma >= h_p - DENSE_MARGIN_TOL and cmi_lambda >= -DENSE_MARGIN_TOL,
        }
    if engine in ("dense", "both"):
        sig = dense_region_state(ref.state(), circ, abc)
        labels = list(sig.labels)
        comps = {}
        for a in anyons:
            # string pieces outside ABC drop out of the ABC marginal
            piece, local = _local_piece(strings.operators[a], abc)
            if local:
                ch = dense.unitary_channel(piece.matrix(local), local)
                comps[a] = dense.reorder(dense.apply_channel(ch, sig), labels)
            else:
                comps[a] = sig
        overlaps = {}
        for i, a in enumerate(anyons):
            for b in anyons[i + 1:]:
                fa, fb = comps[a].factor(), comps[b].factor()
                overlaps[f"{a}|{b}"] = float(np.linalg.norm(fa.conj().T @ fb) ** 2)
        ents = {a: dense.entropy(comps[a]) for a in anyons}
        present = [(pa, comps[a]) for pa, a in zip(p, anyons) if pa > 0]
        lam = dense.mix([s for _, s in present], [pa for pa, _ in present])
        s_sigma = ents["1"]
        s_lambda = dense.entropy(lam)
        Al, Bl, Cl = sorted(A), sorted(B), sorted(C)
        cmi_sigma = dense.cmi(sig, Al, Bl, Cl)
        cmi_lambda = dense.cmi(lam, Al, Bl, Cl)
        diff = s_lambda - s_sigma
        d_ab = dense.trace_distance(dense.partial_trace(lam, Al + Bl), dense.partial_trace(sig, Al + Bl))
        d_bc = dense.trace_distance(dense.partial_trace(lam, Bl + Cl), dense.partial_trace(sig, Bl + Cl))
        out["checks"]["dense"] = {
            "overlaps": overlaps,
            "orthogonality_ok": max(overlaps.values()) <= OVERLAP_TOL,
            "entropies": ents,
            "entropy_equal": max(ents.values()) - min(ents.values()) <= ENTROPY_EQ_TOL,
            "indistinguishable_AB_BC": max(d_ab, d_bc) <= FACT_TOL,
            "entropy_difference": diff,
            "difference_ok": abs(diff - h_p) <= DENSE_MARGIN_TOL,
            "cmi_sigma": cmi_sigma,
            "cmi_lambda": cmi_lambda,
            "identity_residual": abs(cmi_sigma - (cmi_lambda + diff)),
            "bound_ok": cmi_sigma >= h_p - DENSE_MARGIN_TOL and cmi_lambda >= -DENSE_MARGIN_TOL,
        }
    out["passed"] = all(
        c["orthogonality_ok"] and c["entropy_equal"] and c["indistinguishable_AB_BC"]
        and c["difference_ok"] and c["bound_ok"] and c.get("identity_residual", 0.0) <= DENSE_MARGIN_TOL
        for c in out["checks"].values()
    )
    return out


def _loop_witness_table(part: AnnulusPartition, circ: Circuit, states: dict) -> dict | None:
    """Expectations of the dressed closed strings U W U^dagger in each sector (None if none fit)."""
    abc = part.ABC.qubits
    lat = part.lattice
    for loop in part.primal_loops:
        for dloop in part.dual_loops:
            w = stab.sector_witnesses(lat, loop, dloop)
            dressed = {k: stab.conjugate_pauli(v, circ) for k, v in w.items() if k in ("e", "m")}
            if all(d.support <= abc for d in dressed.values()):
                return {a: {k: stab.expectation(s, d) for k, d in dressed.items()} for a, s in states.items()}
    return None


# --- deformation chain ----------------------------------------------------------------------------


def _angle_of(part: AnnulusPartition, q: int) -> float:
    return _angle(part.positions[q], part.center)


def _connected(lattice: Lattice, qubits) -> list[set]:
    qs = set(qubits)
    return _components(sorted(qs), lambda q: [n for n in lattice.adjacency[q] if n in qs])


@dataclass
class DeformationPlan:
    """Geometric data of the shrink-and-strip construction, before any entropy is computed."""

    branch: str
    u1: Circuit
    u2: Circuit
    a_prime: frozenset
    deep: frozenset
    partition: AnnulusPartition


def deformation_plan(part: AnnulusPartition, circ: Circuit,
                     notch_halfwidth: float | None = None) -> DeformationPlan:
    """Build A', U' and U''; raise PreconditionError naming the step that cannot be carried out."""
    lat = part.lattice
    A, B, C = part.A.qubits, part.B.qubits, part.C.qubits
    abc = A | B | C
    all_q = frozenset(range(lat.n_qubits))
    # U': remove gates confined to A's deep interior or to the far outside
    deep = A - light_cone(circ, all_q - A).qubits
    far = (all_q - abc) - light_cone(circ, abc).qubits
    u1 = restrict_outside_light_cone(circ, deep | far)
    special = True
    try:
        route_anyon_strings(part, circ)
    except PathRoutingError:
        special = False
    if special:
        return DeformationPlan("special", u1, u1, A, frozenset(deep), part)
    if not deep:
        raise PreconditionError("hole", "A has no qubit outside the light cone of its complement")
    if not part.positions:
        raise PreconditionError("A'", "partition carries no positions for cutting notches")
    mid = (part.arcs[1] + part.arcs[2]) / 2 if part.arcs else 180.0
    hw = notch_halfwidth
    if hw is None:
        r_mid = (part.inner_radius + part.outer_radius) / 2
        hw = math.degrees(math.atan2(circ.depth + 1.0, r_mid))
    notch = {q for q in A - deep if abs((_angle_of(part, q) - mid + 180) % 360 - 180) <= hw}
    a_prime = frozenset(A - notch)
    if not a_prime:
        raise PreconditionError("A'", "notches consume all of A")
    pieces = _connected(lat, a_prime)
    touches = [p for p in pieces if lat.distance(p, part.B1.qubits) <= 1 and lat.distance(p, part.B2.qubits) <= 1]
    if len(pieces) != 1 or not touches:
        raise PreconditionError("A'", "the notched A no longer joins B1 to B2 through the hole")
    if not (a_prime & deep):
        raise PreconditionError("A'", "no gate-free bridge left inside the hole")
    abc2 = a_prime | B | C
    deep2 = a_prime - light_cone(u1, all_q - a_prime).qubits
    far2 = (all_q - abc2) - light_cone(u1, abc2).qubits
    u2 = restrict_outside_light_cone(u1, deep2 | far2)
    part2 = AnnulusPartition(
        lattice=lat, A=Region(a_prime, "A'"), B1=part.B1, B2=part.B2, C=part.C,
        inner_radius=part.inner_radius, outer_radius=part.outer_radius, center=part.center,
        kind="deformed", primal_loops=(), dual_loops=(), hole=part.hole, positions=part.positions,
    )
    try:
        part2.validate()
    except GeometryError as exc:
        raise PreconditionError("A'", str(exc)) from exc
    loops2 = enclosing_loops(lat, part2.ABC.qubits)
    if not loops2[0] or not loops2[1]:
        raise PreconditionError("A'", "A'BC no longer surrounds the hole")
    part2 = replace(part2, primal_loops=loops2[0], dual_loops=loops2[1])
    for name in _loops_missing(lat, abc2, u2):
        raise PreconditionError("U'' collar", f"no dressed {name} loop fits inside A'BC")
    try:
        route_anyon_strings(part2, u2)
    except PathRoutingError as exc:
        raise PreconditionError("U'' collar", str(exc)) from exc
    return DeformationPlan("general", u1, u2, a_prime, frozenset(deep), part2)


def deformation_chain_check(ref: ReferenceDescriptor, circuit_spec, partition, seed: int = 0,
                            notch_halfwidth: float | None = None) -> dict:
    """Shrink A to A' and strip the circuit down to a collar of BC, tracking the CMI at each step.

    Steps: U' drops gates confined to the deep interior of A or far outside ABC (CMI
    unchanged); A' is A with two radial notches cut down to that gate-free hole (SSA can only
    lower the CMI); U'' drops gates confined to A' or to the outside of A'BC (CMI unchanged).
    The final circuit must leave a string corridor through A', the case handled by the
    anyon-mixture argument.
    """
    lat = ref.lattice
    part = resolve_partition(lat, partition)
    circ = build_circuit(lat, circuit_spec, part, seed)
    st0 = ref.state()
    if not circ.is_clifford:
        raise EngineMismatchError("deformation checks run on the stabilizer engine")
    A, B, C = part.A.qubits, part.B.qubits, part.C.qubits

    def cmi_bits(u: Circuit, a) -> int:
        return stab.cmi_bits(stab.apply_clifford(st0, u), a, B, C)

    plan = deformation_plan(part, circ, notch_halfwidth)
    branch, u1, u2, a_prime, deep = plan.branch, plan.u1, plan.u2, plan.a_prime, plan.deep
    i_u = cmi_bits(circ, A)
    i_u1 = cmi_bits(u1, A)
    i_u1_p = cmi_bits(u1, a_prime)
    i_u2_p = cmi_bits(u2, a_prime)
    floor = ref.gamma0_bits
    return {
        "branch": branch,
        "cmi_bits": {"U,A": i_u, "U',A": i_u1, "U',A'": i_u1_p, "U'',A'": i_u2_p},
        "eq12_equal": i_u == i_u1,
        "eq13_slack_bits": i_u1 - i_u1_p,
        "eq13_ok": i_u1 >= i_u1_p,
        "eq14_equal": i_u1_p == i_u2_p,
        "final_margin_bits": i_u2_p - floor,
        "eq16_margin_bits": i_u - i_u2_p,
        "total_margin_bits": i_u - floor,
        "sizes": {"A": len(A), "A'": len(a_prime), "hole": len(deep),
                  "gates": [len(circ), len(u1), len(u2)]},
        "passed": i_u == i_u1 and i_u1 >= i_u1_p and i_u1_p == i_u2_p and i_u2_p >= floor,
    }


# --- max-entropy state and the thin-annulus facts ----------------------------------------------------


@dataclass
class MaxEntropyState:
    state: dense.DensityMatrix
    certificates: list
    locally_markov: bool
    entropy_gap: float


def max_entropy_state_for_annulus(sigma: dense.DensityMatrix, blocks: Sequence, tol: float = markov.PREMISE_TOL,
                                  certify: bool = True) -> MaxEntropyState:
    """The canonical Markov chain of ``sigma`` over the ordered blocks, with its certificates."""
    chain = markov.OrderedChain(sigma, [list(b) for b in blocks])
    lm = markov.is_locally_markov(chain, tol).is_locally_markov if chain.n >= 4 else True
    lam = markov.canonical_markov_chain(chain, tol, check=False)
    certs = markov.verify_canonical_chain(lam, chain, tol) if certify else []
    return MaxEntropyState(lam, certs, lm, dense.entropy(lam) - dense.entropy(sigma))


def appendix_e_instance(lattice: Lattice, vertex=(3, 3), gates: str = "two", seed: int = 1):
    """A thin annulus with a depth-1 Clifford collar straddling its outer edge.

    Returns (partition, circuit, P). The gates pair qubits just outside the ring with the
    bump edges, so the annulus plus the circuit support stays within the dense limit.
    """
    part = build_ring_annulus(lattice, vertex)
    r, c = vertex
    h, v = lattice.h, lattice.v
    pairs = [(h(r - 2, c - 1), h(r - 1, c - 1)), (h(r - 1, c - 2), v(r - 1, c - 1))]
    if gates not in ("one", "two"):
        raise ValueError("gates must be 'one' or 'two'")
    rng = np.random.default_rng(seed)
    layer = tuple(random_two_qubit_clifford(p, rng) for p in pairs)
    if gates == "one":
        layer = layer[1:]
    return part, Circuit((layer,)), frozenset({v(r - 1, c + 1)})


def _dist_report(name: str, value: float, exact: bool, tol: float) -> dict:
    return {"name": name, "value": value, "exact": exact, "tol": tol, "passed": value <= tol}


def appendix_e_fact_checks(ref: ReferenceDescriptor, partition, circuit, P, tol: float = FACT_TOL,
                           seed: int = 0) -> dict:
    """Dense verification of the max-entropy facts on an annulus enlarged by the circuit support.

    Each entropy that the stabilizer engine can also produce is cross-checked against it.
    """
    t0 = time.perf_counter()
    lat = ref.lattice
    part = resolve_partition(lat, partition)
    circ = build_circuit(lat, circuit, part, seed)
    if not circ.is_clifford:
        raise EngineMismatchError("stabilizer cross-checks need a Clifford circuit")
    st = ref.state()
    A, B, C = part.A.qubits, part.B.qubits, part.C.qubits
    abc = A | B | C
    P = frozenset(P)
    if not P or not P <= A:
        raise PreconditionError("P", "P must be a nonempty subset of A")
    ubar_circ = collar_part(circ, abc)
    u = frozenset(circ.support)
    ubar = frozenset(ubar_circ.support)
    if ubar and lat.distance(P, ubar) < 2:
        raise PreconditionError("fact_second", "P lies within one step of the collar circuit support")
    Y = sorted(abc | u)
    if len(Y) > dense.DENSE_LIMIT_QUBITS:
        raise dense.ResourceLimitError(f"enlarged annulus has {len(Y)} qubits (limit {dense.DENSE_LIMIT_QUBITS})")
    Q = abc - P

    # chain [P, A~ \ P, B~, C~] from the past light cones
    b_t = light_cone(circ, B).qubits
    a_t = light_cone(circ, A | B).qubits - b_t
    c_t = light_cone(circ, B | C).qubits - b_t
    if a_t | b_t | c_t != frozenset(Y):
        raise PreconditionError("fact_first", "light cones of AB and BC do not cover the enlarged annulus")
    if not P <= a_t or not (a_t - P) or not c_t:
        raise PreconditionError("fact_first", "the cone partition leaves an empty block")
    blocks = [sorted(P), sorted(a_t - P), sorted(b_t), sorted(c_t)]

    sigma = dense.reorder(stab.reduced_density_matrix(st, Y), Y)
    chain = markov.OrderedChain(sigma, blocks)
    lm = markov.is_locally_markov(chain)
    lam = markov.canonical_markov_chain(chain, check=False)
    facts: dict = {}
    cross: dict = {}

    # fact_first
    s_lam, s_sig = dense.entropy(lam), dense.entropy(sigma)
    cross["S(sigma_Y)"] = abs(s_sig - stab.entropy(st, Y))
    gap = s_lam - s_sig
    facts["fact_first"] = {"name": "fact_first", "value": gap, "target": 2 * ref.gamma0,
                           "passed": abs(gap - 2 * ref.gamma0) <= tol}

    # fact_second on P and Q after the collar circuit
    lam_bar = dense.apply_unitary(lam, ubar_circ)
    sig_bar = dense.apply_unitary(sigma, ubar_circ)
    for name, region in (("P", P), ("Q", Q)):
        d, exact = dense.certified_distance(dense.partial_trace(lam_bar, sorted(region)),
                                            dense.partial_trace(sig_bar, sorted(region)))
        facts[f"fact_second_{name}"] = _dist_report(f"fact_second_{name}", d, exact, tol)

    # fact_third: trace the collar support, then Petz-extend from its surroundings
    vv = sorted({q for x in ubar for q in lat.adjacency[x] if q in abc} - ubar)
    inner = sorted(abc - ubar)
    target_labels = sorted(abc | ubar)
    phi = dense.petz_map(sigma, vv, vv + sorted(ubar)) if ubar else None

    def recover(x):
        y = dense.partial_trace(x, inner)
        return dense.apply_channel(phi, y) if phi is not None else y

    for name, state in (("lambda", lam), ("sigma", sigma)):
        got = recover(state)
        want = dense.partial_trace(state, target_labels)
        d, exact = dense.certified_distance(want, dense.reorder(got, want.labels))
        facts[f"fact_third_{name}"] = _dist_report(f"fact_third_{name}", d, exact, tol)

    # the conditional independences behind fact_third
    rest_q = sorted(Q - ubar - set(vv))
    rest_all = sorted(abc - ubar - set(vv))
    for name, rest in (("cmi_fact_key", rest_q), ("cmi_reference", rest_all)):
        if ubar and rest:
            val = dense.cmi(sigma, sorted(ubar), vv, rest)
            exact_val = stab.cmi(st, ubar, vv, rest)
            cross[name] = abs(val - exact_val)
        else:
            val = 0.0
        facts[name] = {"name": name, "value": val, "passed": abs(val) <= tol}

    # entropy-difference identity with R = trace + Petz and T = collar circuit + trace of the outside qubits
    rho = dense.partial_trace(lam_bar, sorted(abc))
    rho_p = dense.partial_trace(sig_bar, sorted(abc))

    def T(x):
        return dense.partial_trace(dense.apply_unitary(x, ubar_circ), sorted(abc))

    lemma = markov.entropy_difference_lemma_check(rho, rho_p, recover, T, sorted(P),
                                                  premise_tol=tol, tol=markov.CONCLUSION_TOL)
    facts["lemma1"] = {"name": "lemma1", "passed": lemma["passed"], "gap": lemma["gap"],
                       "premises": lemma["premises"]}

    # main-text identity with the full circuit: I_sigma~ = I_lambda~ + S(lambda~) - S(sigma~)
    lam_t = dense.partial_trace(dense.apply_unitary(lam, circ), sorted(abc))
    sig_t = dense.partial_trace(dense.apply_unitary(sigma, circ), sorted(abc))
    Al, Bl, Cl = sorted(A), sorted(B), sorted(C)
    i_sig = dense.cmi(sig_t, Al, Bl, Cl)
    i_lam = dense.cmi(lam_t, Al, Bl, Cl)
    ds = dense.entropy(lam_t) - dense.entropy(sig_t)
    cross["I(A:C|B)_sigma~"] = abs(i_sig - stab.cmi(stab.apply_clifford(st, circ), A, B, C))
    d_ab = dense.trace_distance(dense.partial_trace(lam_t, Al + Bl), dense.partial_trace(sig_t, Al + Bl))
    d_bc = dense.trace_distance(dense.partial_trace(lam_t, Bl + Cl), dense.partial_trace(sig_t, Bl + Cl))
    residual = abs(i_sig - (i_lam + ds))
    facts["main_identity"] = {
        "name": "main_identity", "cmi_sigma": i_sig, "cmi_lambda": i_lam, "entropy_difference": ds,
        "residual": residual, "d_AB": d_ab, "d_BC": d_bc,
        "passed": residual <= tol and max(d_ab, d_bc) <= tol and abs(ds - 2 * ref.gamma0) <= tol
        and i_sig >= 2 * ref.gamma0 - tol,
    }
    cross_ok = all(v <= 1e-10 for v in cross.values())
    return {
        "facts": facts,
        "cross_checks": cross,
        "cross_ok": cross_ok,
        "chain_blocks": blocks,
        "locally_markov": lm.is_locally_markov,
        "sizes": {"Y": len(Y), "u": len(u), "ubar": len(ubar), "v": len(vv)},
        "passed": all(f["passed"] for f in facts.values()) and cross_ok and lm.is_locally_markov,
        "wall_time": time.perf_counter() - t0,
    }


# --- gamma_min --------------------------------------------------------------------------------------


def gamma_min_estimate(ref: ReferenceDescriptor, V: Circuit, candidates: dict, ladder: Sequence,
                       depth_fraction: float = 1.0) -> dict:
    """Minimum of half the CMI over a supplied list of candidate circuits, per annulus size.

    ``candidates`` maps names to circuits applied after V; R is the annulus width, and every
    candidate must have depth below ``depth_fraction * R``. The lower bound only covers
    composite circuits U V that are shallow compared to the annulus, so each candidate's
    composite is run through :func:`light_cone_precondition` (the exact inverse composes
    to the identity). Dips of candidates outside that regime are listed apart.
    """
    if not V.is_clifford or not all(c.is_clifford for c in candidates.values()):
        raise EngineMismatchError("gamma_min runs on the stabilizer engine")
    lat = ref.lattice
    prepared = stab.apply_clifford(ref.state(), V)
    inverse = invert(V)
    rows = []
    for spec in ladder:
        part = resolve_partition(lat, spec)
        R = part.width
        values, regime = {}, {}
        for name, U in candidates.items():
            if U.depth >= depth_fraction * R:
                raise PreconditionError("depth", f"candidate {name} has depth {U.depth} >= {depth_fraction} * R = {depth_fraction * R}")
            _, bits = _entropies_stabilizer(stab.apply_clifford(prepared, U), part)
            values[name] = bits * LOG2 / 2
            composite = IDENTITY if U == inverse else Circuit(V.layers + U.layers)
            regime[name] = light_cone_precondition(part, composite)[0]
        best = min(values, key=lambda k: (values[k], k))
        inv_names = [n for n, U in candidates.items() if U == inverse]
        dips = [n for n, g in values.items() if g < ref.gamma0 - GAMMA_TOL]
        rows.append({
            "R": R,
            "partition": part.spec(),
            "values": values,
            "precondition_ok": regime,
            "minimum": values[best],
            "argmin": best,
            "inverse_candidates": inv_names,
            "inverse_achieves_gamma0": any(abs(values[n] - ref.gamma0) <= GAMMA_TOL for n in inv_names),
            "below_gamma0": [n for n in dips if regime[n]],
            "below_gamma0_flagged": [n for n in dips if not regime[n]],
        })
    has_inverse = any(r["inverse_candidates"] for r in rows)
    passed = all(not r["below_gamma0"] for r in rows) and (
        not has_inverse or all(r["inverse_achieves_gamma0"] for r in rows))
    flagged = any(r["below_gamma0_flagged"] for r in rows)
    return {"rows": rows, "gamma0": ref.gamma0, "passed": passed, "flagged": flagged}


def default_ladder(lattice: Lattice, widths: Sequence[int], r_in: int = 1) -> list[dict]:
    center = (lattice.rows // 2, lattice.cols // 2)
    return [{"kind": "square", "center": list(center), "r_in": r_in, "r_out": r_in + w,
             "arcs": [45.0, 135.0, 225.0, 315.0]} for w in widths]


__all__ = [
    "LOG2", "ReferenceDescriptor", "ExperimentRecord", "PreconditionError", "AuditError",
    "EngineMismatchError", "PathRoutingError", "tee_bound_experiment", "reference_state_audit",
    "anyon_mixture_check", "deformation_chain_check", "max_entropy_state_for_annulus",
    "appendix_e_fact_checks", "appendix_e_instance", "gamma_min_estimate", "CSV_COLUMNS",
    "route_anyon_strings", "light_cone_precondition", "dense_region_state", "replay_record",
    "build_circuit", "collar_part", "past_gates", "sample_annulus_partitions", "default_ladder",
    "random_circuit_on_pairs", "random_shallow_unitary", "restrict_to_region", "Gate",
]
