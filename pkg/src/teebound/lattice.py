"""Square-lattice geometry with qubits on edges.

Qubit indices are row-major over edges, horizontal edges first:
``h(r, c) = r*cols + c`` joins vertex (r, c) to (r, c+1) and
``v(r, c) = rows*cols + r*cols + c`` joins (r, c) to (r+1, c).
Plaquette (r, c) is the face with corners (r, c) and (r+1, c+1).
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import gf2


class GeometryError(ValueError):
    """A requested region or partition violates a geometric invariant."""


Coord = tuple[int, int]


@dataclass(frozen=True)
class Lattice:
    rows: int
    cols: int
    topology: str = "torus"

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise GeometryError("lattice dimensions must be positive")
        if self.topology not in ("torus", "open-plane"):
            raise GeometryError(f"unknown topology {self.topology!r}")

    @property
    def n_qubits(self) -> int:
        return 2 * self.rows * self.cols

    @property
    def periodic(self) -> bool:
        return self.topology == "torus"

    def _wrap(self, r: int, c: int) -> Coord:
        if self.periodic:
            return r % self.rows, c % self.cols
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise GeometryError(f"edge ({r}, {c}) outside the open patch")
        return r, c

    def h(self, r: int, c: int) -> int:
        r, c = self._wrap(r, c)
        return r * self.cols + c

    def v(self, r: int, c: int) -> int:
        r, c = self._wrap(r, c)
        return self.rows * self.cols + r * self.cols + c

    def edge_coord(self, q: int) -> tuple[str, int, int]:
        if not 0 <= q < self.n_qubits:
            raise GeometryError(f"qubit {q} outside lattice")
        kind = "h" if q < self.rows * self.cols else "v"
        r, c = divmod(q % (self.rows * self.cols), self.cols)
        return kind, r, c

    def vertex(self, r: int, c: int) -> Coord:
        if self.periodic:
            return r % self.rows, c % self.cols
        return r, c

    def edge_vertices(self, q: int) -> tuple[Coord, Coord]:
        kind, r, c = self.edge_coord(q)
        if kind == "h":
            return self.vertex(r, c), self.vertex(r, c + 1)
        return self.vertex(r, c), self.vertex(r + 1, c)

    def edge_plaquettes(self, q: int) -> tuple[Coord, Coord]:
        kind, r, c = self.edge_coord(q)
        if kind == "h":
            return self.vertex(r - 1, c), self.vertex(r, c)
        return self.vertex(r, c - 1), self.vertex(r, c)

    def star(self, r: int, c: int) -> tuple[int, ...]:
        """Edges meeting at vertex (r, c)."""
        return (self.h(r, c), self.h(r, c - 1), self.v(r, c), self.v(r - 1, c))

    def plaquette(self, r: int, c: int) -> tuple[int, ...]:
        """Edges bounding plaquette (r, c)."""
        return (self.h(r, c), self.h(r + 1, c), self.v(r, c), self.v(r, c + 1))

    def stars(self) -> list[tuple[int, ...]]:
        return [self.star(r, c) for r in range(self.rows) for c in range(self.cols)]

    def plaquettes(self) -> list[tuple[int, ...]]:
        return [self.plaquette(r, c) for r in range(self.rows) for c in range(self.cols)]

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        """Qubits sharing a vertex or a plaquette with each qubit."""
        groups: dict[tuple, list[int]] = {}
        for q in range(self.n_qubits):
            for vtx in self.edge_vertices(q):
                groups.setdefault(("v",) + vtx, []).append(q)
            for plaq in self.edge_plaquettes(q):
                groups.setdefault(("p",) + plaq, []).append(q)
        nbrs: list[set[int]] = [set() for _ in range(self.n_qubits)]
        for members in groups.values():
            for q in members:
                nbrs[q].update(members)
        for q, s in enumerate(nbrs):
            s.discard(q)
        return tuple(frozenset(s) for s in nbrs)

    @cached_property
    def adjacent_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(
            (a, b) for a in range(self.n_qubits) for b in sorted(self.adjacency[a]) if a < b
        )

    def distances_from(self, sources: Iterable[int], limit: int | None = None) -> dict[int, int]:
        """Breadth-first graph distances from a qubit set (optionally truncated)."""
        dist: dict[int, int] = {}
        queue: deque[int] = deque()
        for q in sources:
            if q not in dist:
                dist[q] = 0
                queue.append(q)
        while queue:
            q = queue.popleft()
            d = dist[q]
            if limit is not None and d >= limit:
                continue
            for nb in self.adjacency[q]:
                if nb not in dist:
                    dist[nb] = d + 1
                    queue.append(nb)
        return dist

    def distance(self, a: Iterable[int], b: Iterable[int]) -> float:
        """Graph distance between two qubit sets (inf if either is empty)."""
        b = set(b)
        a = list(a)
        if not a or not b:
            return math.inf
        dist = self.distances_from(a)
        found = [dist[q] for q in b if q in dist]
        return min(found) if found else math.inf

    def ball(self, qubits: Iterable[int], radius: int) -> frozenset[int]:
        return frozenset(self.distances_from(qubits, limit=radius))

    def to_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "topology": self.topology}


@dataclass(frozen=True)
class Region:
    qubits: frozenset[int]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", frozenset(int(q) for q in self.qubits))

    def __len__(self) -> int:
        return len(self.qubits)

    def __iter__(self):
        return iter(sorted(self.qubits))

    def __contains__(self, q) -> bool:
        return q in self.qubits

    def __or__(self, other: "Region") -> "Region":
        return Region(self.qubits | _qubits(other), _join(self.label, getattr(other, "label", "")))

    def __and__(self, other) -> "Region":
        return Region(self.qubits & _qubits(other), self.label)

    def __sub__(self, other) -> "Region":
        return Region(self.qubits - _qubits(other), self.label)

    @property
    def sorted(self) -> list[int]:
        return sorted(self.qubits)

    def isdisjoint(self, other) -> bool:
        return self.qubits.isdisjoint(_qubits(other))

    def check_within(self, lattice: Lattice) -> None:
        bad = [q for q in self.qubits if not 0 <= q < lattice.n_qubits]
        if bad:
            raise GeometryError(f"region {self.label!r} has qubits outside the lattice: {bad[:5]}")


def _qubits(x) -> frozenset[int]:
    return x.qubits if isinstance(x, Region) else frozenset(x)


def _join(a: str, b: str) -> str:
    return a + b if a and b else a or b


def union(regions: Iterable[Region], label: str | None = None) -> Region:
    qubits: set[int] = set()
    labels = []
    for reg in regions:
        qubits |= reg.qubits
        labels.append(reg.label)
    return Region(frozenset(qubits), "".join(labels) if label is None else label)


@dataclass(frozen=True)
class AnnulusPartition:
    """Annulus split into A (left), B = B1 (top) + B2 (bottom), C (right).

    ``primal_loops`` are edge cycles around the hole (closed e-strings);
    ``dual_loops`` are dual cycles around the hole (closed m-strings).
    """

    lattice: Lattice
    A: Region
    B1: Region
    B2: Region
    C: Region
    inner_radius: int
    outer_radius: int
    center: Coord
    kind: str = "square"
    primal_loops: tuple[frozenset[int], ...] = ()
    dual_loops: tuple[frozenset[int], ...] = ()
    hole: frozenset[int] = frozenset()
    arcs: tuple[float, ...] = ()
    positions: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def B(self) -> Region:
        return Region(self.B1.qubits | self.B2.qubits, "B")

    @property
    def ABC(self) -> Region:
        return Region(self.A.qubits | self.B1.qubits | self.B2.qubits | self.C.qubits, "ABC")

    @property
    def width(self) -> int:
        return self.outer_radius - self.inner_radius

    def regions(self) -> list[Region]:
        return [self.A, self.B1, self.B2, self.C]

    def validate(self) -> None:
        regs = self.regions()
        for reg in regs:
            if not reg.qubits:
                raise GeometryError(f"empty sector {reg.label}")
        for i, a in enumerate(regs):
            for b in regs[i + 1:]:
                if not a.isdisjoint(b):
                    raise GeometryError(f"sectors {a.label} and {b.label} overlap")
        if self.lattice.distance(self.A.qubits, self.C.qubits) < 2:
            raise GeometryError("A adjacent to C")

    def spec(self) -> dict:
        """Builder arguments that reproduce this partition (see :func:`partition_from_spec`)."""
        if self.kind == "square":
            return {"kind": "square", "center": list(self.center), "r_in": self.inner_radius,
                    "r_out": self.outer_radius, "arcs": list(self.arcs)}
        if self.kind in ("cross", "ring"):
            return {"kind": self.kind, "vertex": list(self.center)}
        raise GeometryError(f"partition kind {self.kind!r} has no builder spec")

    def geometry(self) -> dict:
        return {
            "kind": self.kind,
            "L": [self.lattice.rows, self.lattice.cols],
            "center": list(self.center),
            "r_in": self.inner_radius,
            "r_out": self.outer_radius,
            "width": self.width,
            "sizes": {r.label: len(r) for r in self.regions()},
        }


DEFAULT_ARCS = (45.0, 135.0, 225.0, 315.0)


def _closed_square(lattice: Lattice, center: Coord, k: int) -> dict[int, tuple[float, float]]:
    """Edges of the closed block of plaquettes within Chebyshev radius < k of ``center``.

    Returns qubit -> unwrapped (y, x) midpoint, so geometry stays local on the torus.
    """
    r0, c0 = center
    out: dict[int, tuple[float, float]] = {}
    if k <= 0:
        return out
    for r in range(r0 - k + 1, r0 + k + 1):
        for c in range(c0 - k + 1, c0 + k):
            out[lattice.h(r, c)] = (float(r), c + 0.5)
    for r in range(r0 - k + 1, r0 + k):
        for c in range(c0 - k + 1, c0 + k + 1):
            out[lattice.v(r, c)] = (r + 0.5, float(c))
    return out


def _square_boundary(lattice: Lattice, center: Coord, k: int) -> frozenset[int]:
    r0, c0 = center
    edges = set()
    for c in range(c0 - k + 1, c0 + k):
        edges.add(lattice.h(r0 - k + 1, c))
        edges.add(lattice.h(r0 + k, c))
    for r in range(r0 - k + 1, r0 + k):
        edges.add(lattice.v(r, c0 - k + 1))
        edges.add(lattice.v(r, c0 + k))
    return frozenset(edges)


def _vertex_coboundary(lattice: Lattice, vertices: Iterable[Coord]) -> frozenset[int]:
    """Edges with exactly one endpoint in the vertex set (a closed dual cycle)."""
    acc: set[int] = set()
    for r, c in vertices:
        acc ^= set(lattice.star(r, c))
    return frozenset(acc)


def _angle(pos: tuple[float, float], center: Coord) -> float:
    dy = (center[0] + 0.5) - pos[0]
    dx = pos[1] - (center[1] + 0.5)
    return math.degrees(math.atan2(dy, dx)) % 360.0


def _sector(angle: float, arcs: Sequence[float]) -> str:
    b1, b2, b3, b4 = arcs
    t = (angle - b4) % 360.0
    if t < (b1 - b4) % 360.0:
        return "C"
    if t < (b2 - b4) % 360.0:
        return "B1"
    if t < (b3 - b4) % 360.0:
        return "A"
    return "B2"


def build_annulus_partition(
    lattice: Lattice,
    center: Coord,
    r_in: int,
    r_out: int,
    arc_spec: Sequence[float] = DEFAULT_ARCS,
) -> AnnulusPartition:
    """Square annulus of plaquette rings ``r_in <= ring < r_out`` around a center plaquette.

    ``arc_spec`` lists the four counter-clockwise boundary angles (degrees, measured
    from the +x axis) separating C|B1, B1|A, A|B2 and B2|C.
    """
    if r_out == r_in:
        raise GeometryError("zero-width annulus")
    if r_out < r_in:
        raise GeometryError("outer radius smaller than inner radius")
    if r_in < 1:
        raise GeometryError("inner radius must be >= 1")
    arcs = tuple(float(a) % 360.0 for a in arc_spec)
    if len(arcs) != 4:
        raise GeometryError("arc_spec needs four boundary angles")
    rotated = [(a - arcs[3]) % 360.0 for a in arcs[:3]]
    if not (0 < rotated[0] < rotated[1] < rotated[2] < 360.0):
        raise GeometryError("arc_spec angles must be distinct and counter-clockwise")
    if lattice.periodic:
        if 2 * r_out + 1 > min(lattice.rows, lattice.cols):
            raise GeometryError("annulus wraps the torus (needs 2*r_out + 1 <= L)")
    else:
        r0, c0 = center
        if r0 - r_out + 1 < 0 or c0 - r_out + 1 < 0 or r0 + r_out >= lattice.rows or c0 + r_out >= lattice.cols:
            raise GeometryError("annulus leaves the open patch")

    outer = _closed_square(lattice, center, r_out)
    inner = _closed_square(lattice, center, r_in)
    positions = {q: p for q, p in outer.items() if q not in inner}
    buckets: dict[str, set[int]] = {"A": set(), "B1": set(), "B2": set(), "C": set()}
    for q, pos in positions.items():
        buckets[_sector(_angle(pos, center), arcs)].add(q)

    r0, c0 = center
    primal = tuple(_square_boundary(lattice, center, k) for k in range(r_in + 1, r_out + 1))
    dual = tuple(
        _vertex_coboundary(
            lattice,
            [(r, c) for r in range(r0 - k + 1, r0 + k + 1) for c in range(c0 - k + 1, c0 + k + 1)],
        )
        for k in range(r_in, r_out)
    )
    part = AnnulusPartition(
        lattice=lattice,
        A=Region(buckets["A"], "A"),
        B1=Region(buckets["B1"], "B1"),
        B2=Region(buckets["B2"], "B2"),
        C=Region(buckets["C"], "C"),
        inner_radius=r_in,
        outer_radius=r_out,
        center=tuple(center),
        kind="square",
        primal_loops=primal,
        dual_loops=dual,
        hole=frozenset(inner),
        arcs=arcs,
        positions=positions,
    )
    part.validate()
    return part


def build_cross_annulus(lattice: Lattice, vertex: Coord) -> AnnulusPartition:
    """Thinnest annulus around a vertex: the 2x2 plaquette block boundary plus four spokes.

    The hole is the star of ``vertex``. The 12 qubits carry exactly one closed e-string
    (the block boundary) and one closed m-string (boundary plus spokes), so the toric
    code gives the full topological CMI while A and C stay two steps apart.
    """
    if lattice.periodic and min(lattice.rows, lattice.cols) < 6:
        raise GeometryError("annulus wraps the torus (needs L >= 6)")
    r, c = vertex
    h, v = lattice.h, lattice.v
    pos = {}

    def put(q: int, y: float, x: float) -> int:
        pos[q] = (y, x)
        return q

    A = {put(h(r, c - 2), r, c - 1.5), put(v(r - 1, c - 1), r - 0.5, c - 1), put(v(r, c - 1), r + 0.5, c - 1)}
    C = {put(h(r, c + 1), r, c + 1.5), put(v(r - 1, c + 1), r - 0.5, c + 1), put(v(r, c + 1), r + 0.5, c + 1)}
    B1 = {put(v(r - 2, c), r - 1.5, c), put(h(r - 1, c - 1), r - 1, c - 0.5), put(h(r - 1, c), r - 1, c + 0.5)}
    B2 = {put(v(r + 1, c), r + 1.5, c), put(h(r + 1, c - 1), r + 1, c - 0.5), put(h(r + 1, c), r + 1, c + 0.5)}
    block = frozenset(
        [h(r - 1, c - 1), h(r - 1, c), h(r + 1, c - 1), h(r + 1, c)]
        + [v(r - 1, c - 1), v(r, c - 1), v(r - 1, c + 1), v(r, c + 1)]
    )
    dual = _vertex_coboundary(lattice, [(r, c), (r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)])
    part = AnnulusPartition(
        lattice=lattice,
        A=Region(A, "A"),
        B1=Region(B1, "B1"),
        B2=Region(B2, "B2"),
        C=Region(C, "C"),
        inner_radius=0,
        outer_radius=1,
        center=(r, c),
        kind="cross",
        primal_loops=(block,),
        dual_loops=(dual,),
        hole=frozenset(lattice.star(r, c)),
        positions=pos,
    )
    part.validate()
    return part


@dataclass(frozen=True)
class ChainPartition:
    """Ordered subsystems X1..Xn of an annulus viewed as a spin chain."""

    subsystems: tuple[Region, ...]
    wrap_adjacent: bool = False
    geometric_chain: bool = True

    def __post_init__(self):
        if len(self.subsystems) < 3:
            raise GeometryError("a chain needs at least three subsystems")

    @property
    def n(self) -> int:
        return len(self.subsystems)

    def __getitem__(self, i: int) -> Region:
        return self.subsystems[i]

    def __iter__(self):
        return iter(self.subsystems)

    def blocks(self) -> list[list[int]]:
        return [reg.sorted for reg in self.subsystems]


def chain_partition(annulus: AnnulusPartition, n: int) -> ChainPartition:
    """Cut the annulus into an ordered chain X1..Xn as in the five-block picture.

    X1 = A and Xn = C are the end caps; B (both arcs) is cut into n-2 vertical
    bands by horizontal position, so each middle block has an upper and a lower piece.
    """
    if n < 3:
        raise GeometryError("n must be >= 3")
    if n == 3:
        blocks = [annulus.A, Region(annulus.B.qubits, "B"), annulus.C]
    else:
        xs = sorted({annulus.positions[q][1] for q in annulus.B.qubits})
        if n - 2 > len(xs):
            raise GeometryError(f"n={n} too large: B spans only {len(xs)} columns (max n={len(xs) + 2})")
        bands: list[set[int]] = [set() for _ in range(n - 2)]
        rank_of = {x: i for i, x in enumerate(xs)}
        for q in annulus.B.qubits:
            band = rank_of[annulus.positions[q][1]] * (n - 2) // len(xs)
            bands[band].add(q)
        blocks = [annulus.A] + [Region(b, f"X{i + 2}") for i, b in enumerate(bands)] + [annulus.C]
    blocks = [Region(b.qubits, f"X{i + 1}") for i, b in enumerate(blocks)]
    lat = annulus.lattice
    wrap = lat.distance(blocks[0].qubits, blocks[-1].qubits) < 2
    return ChainPartition(tuple(blocks), wrap_adjacent=wrap, geometric_chain=is_chain_like(lat, blocks))


def edge_ring_chain(lattice: Lattice, vertex: Coord, bump: bool = True) -> ChainPartition:
    """Five-block chain on the ring of edges around the single hole edge ``h(vertex)``.

    The bare ring has 8 qubits; ``bump`` adds the two remaining edges of the plaquette
    north-west of the hole, giving a 10-qubit annulus with one stabilizer strictly inside
    it. Blocks run west to east; X1 and X5 touch (the ring is too thin for a gap), so
    the chain is valid for Markov-chain analysis but not as an A/B/C reference split.
    """
    r, c = vertex
    h, v = lattice.h, lattice.v
    west = {h(r, c - 1), v(r - 1, c)}
    if bump:
        west |= {h(r - 1, c - 1), v(r - 1, c - 1)}
    blocks = [west, {v(r, c)}, {h(r - 1, c), h(r + 1, c)}, {v(r, c + 1)}, {h(r, c + 1), v(r - 1, c + 1)}]
    regions = [Region(b, f"X{i + 1}") for i, b in enumerate(blocks)]
    return ChainPartition(
        tuple(regions),
        wrap_adjacent=lattice.distance(blocks[0], blocks[-1]) < 2,
        geometric_chain=is_chain_like(lattice, regions),
    )


def is_chain_like(lattice: Lattice, regions: Sequence[Region]) -> bool:
    """True iff consecutive regions touch and non-consecutive ones are >= 2 apart."""
    for reg in regions:
        if not len(reg):
            raise GeometryError(f"empty region {reg.label!r}")
    for i, a in enumerate(regions):
        for b in regions[i + 1:]:
            if not a.isdisjoint(b):
                raise GeometryError(f"regions {a.label!r} and {b.label!r} overlap")
    for i, a in enumerate(regions):
        for j in range(i + 1, len(regions)):
            d = lattice.distance(a.qubits, regions[j].qubits)
            if j == i + 1 and d != 1:
                return False
            if j > i + 1 and d < 2:
                return False
    return True


def light_cone(circuit, region) -> Region:
    """Past light cone: qubits whose initial state can influence ``region`` after ``circuit``.

    Propagates backwards layer by layer, absorbing the support of every gate that
    touches the current set.
    """
    cone = set(_qubits(region))
    for layer in reversed(circuit.layers):
        for gate in layer:
            if cone.intersection(gate.support):
                cone.update(gate.support)
    return Region(frozenset(cone), f"cone({getattr(region, 'label', '')})")


def forward_cone(circuit, region) -> tuple[Region, set[int]]:
    """Causal future of ``region``: (qubits reached, indices of gates inside the cone).

    Gate indices are (layer, position) pairs. A gate belongs to the cone when it touches
    ``region`` or a qubit already touched by an earlier cone gate.
    """
    cone = set(_qubits(region))
    gates: set = set()
    for li, layer in enumerate(circuit.layers):
        for gi, gate in enumerate(layer):
            if cone.intersection(gate.support):
                gates.add((li, gi))
        for gi, gate in enumerate(layer):
            if (li, gi) in gates:
                cone.update(gate.support)
    return Region(frozenset(cone), f"future({getattr(region, 'label', '')})"), gates


def regions_to_json(lattice: Lattice, regions: Iterable[Region]) -> str:
    doc = {
        "lattice": lattice.to_dict(),
        "regions": [{"label": r.label, "qubits": r.sorted} for r in regions],
    }
    return json.dumps(doc, sort_keys=True)


def regions_from_json(text: str) -> tuple[Lattice, list[Region]]:
    doc = json.loads(text)
    lat = Lattice(**doc["lattice"])
    regs = [Region(frozenset(r["qubits"]), r["label"]) for r in doc["regions"]]
    for reg in regs:
        reg.check_within(lat)
    return lat, regs


def build_ring_annulus(lattice: Lattice, vertex: Coord) -> AnnulusPartition:
    """Ten-edge ring around the hole edge ``h(vertex)`` with a bump to the north-west.

    A = {h(r-1,c), h(r,c+1), v(r-1,c+1)} and C = {v(r,c)} sit two steps apart; the upper
    arc B1 carries the bump plaquette. Small enough for dense evaluation of every marginal.
    """
    if lattice.periodic and min(lattice.rows, lattice.cols) < 6:
        raise GeometryError("annulus wraps the torus (needs L >= 6)")
    r, c = vertex
    h, v = lattice.h, lattice.v
    A = {h(r - 1, c), h(r, c + 1), v(r - 1, c + 1)}
    B1 = {h(r - 1, c - 1), v(r - 1, c - 1), h(r, c - 1), v(r - 1, c)}
    B2 = {h(r + 1, c), v(r, c + 1)}
    C = {v(r, c)}
    qubits = A | B1 | B2 | C
    primal, dual = enclosing_loops(lattice, qubits)
    part = AnnulusPartition(
        lattice=lattice,
        A=Region(A, "A"),
        B1=Region(B1, "B1"),
        B2=Region(B2, "B2"),
        C=Region(C, "C"),
        inner_radius=0,
        outer_radius=1,
        center=(r, c),
        kind="ring",
        primal_loops=primal,
        dual_loops=dual,
        hole=frozenset({h(r, c)}),
    )
    part.validate()
    return part


def enclosing_loops(lattice: Lattice, qubits) -> tuple[tuple[frozenset[int], ...], tuple[frozenset[int], ...]]:
    """Edge cycles and dual cycles inside ``qubits`` that are not generated by faces inside it.

    For an annulus these are the loops winding around the hole: one primal and one dual
    representative each (empty tuples when there is none).
    """
    edges = sorted(_qubits(qubits))
    inside = set(edges)
    out = []
    for dual in (False, True):
        nodes = sorted({p for q in edges for p in (lattice.edge_plaquettes(q) if dual else lattice.edge_vertices(q))})
        col = {p: i for i, p in enumerate(nodes)}
        inc = np.zeros((len(edges), len(nodes)), dtype=np.uint8)
        for i, q in enumerate(edges):
            for p in (lattice.edge_plaquettes(q) if dual else lattice.edge_vertices(q)):
                inc[i, col[p]] ^= 1
        cycles = gf2.left_kernel(inc)
        # faces fully inside: plaquettes for primal cycles, stars for dual ones
        faces = [lattice.star(*vt) for vt in _vertices_of(lattice, edges)] if dual else [
            lattice.plaquette(*p) for p in _plaquettes_of(lattice, edges)]
        trivial = [f for f in faces if inside.issuperset(f)]
        pos = {q: i for i, q in enumerate(edges)}
        span = np.zeros((len(trivial), len(edges)), dtype=np.uint8)
        for i, f in enumerate(trivial):
            span[i, [pos[q] for q in f]] = 1
        found = ()
        for cyc in cycles:
            if not trivial or gf2.solve_left(span, cyc) is None:
                found = (frozenset(edges[i] for i in np.flatnonzero(cyc)),)
                break
        out.append(found)
    return out[0], out[1]


def _vertices_of(lattice: Lattice, edges) -> set:
    return {vt for q in edges for vt in lattice.edge_vertices(q)}


def _plaquettes_of(lattice: Lattice, edges) -> set:
    return {p for q in edges for p in lattice.edge_plaquettes(q)}


def partition_from_spec(lattice: Lattice, spec: dict) -> AnnulusPartition:
    """Rebuild an annulus partition from :meth:`AnnulusPartition.spec` output."""
    kind = spec.get("kind", "square")
    if kind == "square":
        return build_annulus_partition(lattice, tuple(spec["center"]), int(spec["r_in"]), int(spec["r_out"]),
                                       spec.get("arcs") or DEFAULT_ARCS)
    if kind == "cross":
        return build_cross_annulus(lattice, tuple(spec["vertex"]))
    if kind == "ring":
        return build_ring_annulus(lattice, tuple(spec["vertex"]))
    raise GeometryError(f"unknown partition kind {kind!r}")
