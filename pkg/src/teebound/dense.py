"""Dense density matrices on labeled tensor factors.

A state is stored either as a full matrix or as a factor ``W`` with ``rho = W W^dagger``.
The factor form keeps low-rank states (stabilizer reductions, Petz extensions) cheap:
entropies come from the smaller Gram matrix and partial traces stay factored while the
traced-out dimension times the rank is below the kept dimension.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

ENTROPY_CUTOFF = 1e-12
PINV_THRESHOLD = 1e-10
DRIFT_BUDGET = 1e-8
SUPPORT_TOL = 1e-8
DENSE_LIMIT_QUBITS = 12
_EIG_CHECK_MAX_DIM = 1024
_FACTORIZE_MAX_DIM = 1024


class DenseError(ValueError):
    pass


class SupportMismatchError(DenseError):
    """Input has weight outside the support the Petz map can recover."""


class ResourceLimitError(DenseError):
    pass


def _prod(xs: Iterable[int]) -> int:
    out = 1
    for x in xs:
        out *= int(x)
    return out


class DensityMatrix:
    """Hermitian PSD trace-one operator on ordered labeled factors (first = most significant)."""

    __slots__ = ("labels", "dims", "_matrix", "_factor")

    def __init__(self, matrix, labels: Sequence[Hashable], dims: Sequence[int] | None = None, factor=None, check: bool = True):
        labels = tuple(labels)
        if dims is None:
            dims = (2,) * len(labels)
        dims = tuple(int(d) for d in dims)
        if len(labels) != len(dims):
            raise DenseError("labels and dims differ in length")
        if len(set(labels)) != len(labels):
            raise DenseError("duplicate factor labels")
        self.labels = labels
        self.dims = dims
        d = _prod(dims)
        if d > 2**DENSE_LIMIT_QUBITS:
            raise ResourceLimitError(f"dimension {d} exceeds the dense limit of {DENSE_LIMIT_QUBITS} qubits")
        self._matrix = None if matrix is None else np.asarray(matrix, dtype=complex)
        self._factor = None if factor is None else np.asarray(factor, dtype=complex)
        if self._matrix is None and self._factor is None:
            raise DenseError("need a matrix or a factor")
        if self._matrix is not None and self._matrix.shape != (d, d):
            raise DenseError(f"matrix shape {self._matrix.shape} does not match dims {dims}")
        if self._factor is not None and self._factor.shape[0] != d:
            raise DenseError("factor row count does not match dims")
        if check:
            self.validate()

    # --- views -------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return _prod(self.dims)

    @property
    def is_factored(self) -> bool:
        return self._factor is not None

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            w = self._factor
            self._matrix = w @ w.conj().T
        return self._matrix

    def factor(self) -> np.ndarray:
        """Some W with rho = W W^dagger (eigen-factor for matrix-form states)."""
        if self._factor is not None:
            return self._factor
        vals, vecs = np.linalg.eigh(self.matrix)
        keep = vals > ENTROPY_CUTOFF
        return vecs[:, keep] * np.sqrt(vals[keep])

    @property
    def rank_bound(self) -> int:
        return self._factor.shape[1] if self._factor is not None else self.dim

    def dim_of(self, labels: Iterable[Hashable]) -> int:
        idx = self.index_of(labels)
        return _prod(self.dims[i] for i in idx)

    def index_of(self, labels: Iterable[Hashable]) -> list[int]:
        out = []
        for lab in labels:
            try:
                out.append(self.labels.index(lab))
            except ValueError:
                raise DenseError(f"unknown factor label {lab!r}") from None
        return out

    def trace(self) -> float:
        if self._factor is not None:
            return float(np.vdot(self._factor, self._factor).real)
        return float(np.trace(self._matrix).real)

    def validate(self) -> None:
        tr = self.trace()
        if abs(tr - 1) > 1e-10:
            raise DenseError(f"trace {tr} differs from 1")
        if self._factor is not None:
            return
        m = self._matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12:
            raise DenseError("matrix is not Hermitian")
        if self.dim <= _EIG_CHECK_MAX_DIM and np.linalg.eigvalsh(m)[0] < -1e-10:
            raise DenseError("matrix has a negative eigenvalue")

    def __repr__(self) -> str:
        form = f"factor rank<={self.rank_bound}" if self.is_factored else "matrix"
        return f"DensityMatrix(labels={self.labels}, dims={self.dims}, {form})"

    # --- constructors ----------------------------------------------------------------

    @classmethod
    def from_pure(cls, psi, labels, dims=None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).reshape(-1, 1)
        return cls(None, labels, dims, factor=psi / np.linalg.norm(psi))

    @classmethod
    def maximally_mixed(cls, labels, dims=None) -> "DensityMatrix":
        dims = (2,) * len(tuple(labels)) if dims is None else dims
        d = _prod(dims)
        return cls(None, labels, dims, factor=np.eye(d, dtype=complex) / math.sqrt(d))

    @classmethod
    def basis_state(cls, bits: Sequence[int], labels, dims=None) -> "DensityMatrix":
        dims = (2,) * len(bits) if dims is None else tuple(dims)
        idx = int(np.ravel_multi_index(tuple(bits), dims)) if bits else 0
        psi = np.zeros(_prod(dims), dtype=complex)
        psi[idx] = 1
        return cls.from_pure(psi, labels, dims)

    @classmethod
    def random(cls, labels, rng: np.random.Generator, rank: int | None = None, dims=None) -> "DensityMatrix":
        """Random state W W^dagger / tr with complex Gaussian W of the given rank."""
        dims = (2,) * len(tuple(labels)) if dims is None else dims
        d = _prod(dims)
        rank = d if rank is None else rank
        w = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
        return cls(None, labels, dims, factor=w / np.linalg.norm(w))

    def with_labels(self, labels) -> "DensityMatrix":
        return DensityMatrix(self._matrix, labels, self.dims, factor=self._factor, check=False)

    def to_matrix_form(self) -> "DensityMatrix":
        return DensityMatrix(self.matrix, self.labels, self.dims, check=False)


# --- tensor plumbing -----------------------------------------------------------------


def _as_tensor(rho: DensityMatrix):
    """Return (kind, tensor) with the factor axes first."""
    if rho.is_factored:
        return "factor", rho._factor.reshape(rho.dims + (rho._factor.shape[1],))
    return "matrix", rho.matrix.reshape(rho.dims + rho.dims)


def reorder(rho: DensityMatrix, labels: Sequence[Hashable]) -> DensityMatrix:
    labels = tuple(labels)
    if sorted(map(repr, labels)) != sorted(map(repr, rho.labels)):
        raise DenseError("reorder needs a permutation of the labels")
    if labels == rho.labels:
        return rho
    perm = rho.index_of(labels)
    dims = tuple(rho.dims[i] for i in perm)
    d = rho.dim
    kind, t = _as_tensor(rho)
    n = len(rho.dims)
    if kind == "factor":
        w = np.transpose(t, perm + [n]).reshape(d, -1)
        return DensityMatrix(None, labels, dims, factor=w, check=False)
    m = np.transpose(t, perm + [n + p for p in perm]).reshape(d, d)
    return DensityMatrix(m, labels, dims, check=False)


def partial_trace(rho: DensityMatrix, keep: Iterable[Hashable]) -> DensityMatrix:
    """Reduce to the factors in ``keep`` (kept in the state's own order)."""
    keep_set = set(keep)
    unknown = keep_set - set(rho.labels)
    if unknown:
        raise DenseError(f"unknown factor labels {sorted(map(str, unknown))}")
    kept = [i for i, lab in enumerate(rho.labels) if lab in keep_set]
    gone = [i for i, lab in enumerate(rho.labels) if lab not in keep_set]
    labels = tuple(rho.labels[i] for i in kept)
    dims = tuple(rho.dims[i] for i in kept)
    if not gone:
        return rho
    dk = _prod(dims)
    dt = _prod(rho.dims[i] for i in gone)
    kind, t = _as_tensor(rho)
    n = len(rho.dims)
    if kind == "factor":
        r = rho._factor.shape[1]
        w = np.transpose(t, kept + gone + [n]).reshape(dk, dt * r)
        if dt * r <= dk:
            return DensityMatrix(None, labels, dims, factor=w, check=False)
        return DensityMatrix(w @ w.conj().T, labels, dims, check=False)
    m = np.transpose(t, kept + gone + [n + i for i in kept] + [n + i for i in gone]).reshape(dk, dt, dk, dt)
    return DensityMatrix(np.einsum("iaja->ij", m), labels, dims, check=False)


def tensor(*states: DensityMatrix) -> DensityMatrix:
    labels = tuple(lab for s in states for lab in s.labels)
    dims = tuple(d for s in states for d in s.dims)
    if all(s.is_factored for s in states):
        w = np.ones((1, 1), dtype=complex)
        for s in states:
            w = np.kron(w, s._factor)
        return DensityMatrix(None, labels, dims, factor=w, check=False)
    m = np.ones((1, 1), dtype=complex)
    for s in states:
        m = np.kron(m, s.matrix)
    return DensityMatrix(m, labels, dims, check=False)


def compress(rho: DensityMatrix, cutoff: float = ENTROPY_CUTOFF) -> DensityMatrix:
    """Shrink the representation: narrow factors lose null directions, wide ones become matrices.

    The rank comes from the Gram spectrum; the range is then captured with a fixed-seed Gaussian
    sketch, which is exact for exactly low-rank factors.
    """
    if not rho.is_factored:
        return rho
    w = rho._factor
    if w.shape[1] > rho.dim:
        return rho.to_matrix_form()
    vals = np.linalg.eigvalsh(w.conj().T @ w)
    top = max(float(vals[-1]), 0.0) if vals.size else 0.0
    k = int(np.sum(vals > cutoff * top)) if top > 0 else 0
    if k == w.shape[1] or k == 0:
        return rho
    sketch = np.random.default_rng(0).standard_normal((w.shape[1], k))
    q, _ = np.linalg.qr(w @ sketch)
    b = q.conj().T @ w
    mvals, mvecs = np.linalg.eigh(b @ b.conj().T)
    mvals = np.clip(mvals, 0.0, None)
    return DensityMatrix(None, rho.labels, rho.dims, factor=(q @ mvecs) * np.sqrt(mvals), check=False)


# --- spectra ---------------------------------------------------------------------------


def spectrum(rho: DensityMatrix) -> np.ndarray:
    if rho.is_factored and rho._factor.shape[1] < rho.dim:
        w = rho._factor
        return np.linalg.eigvalsh(w.conj().T @ w)
    return np.linalg.eigvalsh(rho.matrix)


def entropy(rho: DensityMatrix, cutoff: float = ENTROPY_CUTOFF) -> float:
    """Von Neumann entropy in nats."""
    vals = spectrum(rho)
    vals = vals[vals > cutoff]
    return float(max(0.0, -np.sum(vals * np.log(vals))))


def _check_disjoint(*groups) -> list[list[Hashable]]:
    out = [list(g) for g in groups]
    seen: set = set()
    for g in out:
        s = set(g)
        if s & seen:
            raise DenseError("label sets overlap")
        seen |= s
    return out


def entropy_of(rho: DensityMatrix, labels: Iterable[Hashable], cache: dict | None = None) -> float:
    key = frozenset(labels)
    if cache is not None and key in cache:
        return cache[key]
    value = entropy(partial_trace(rho, key)) if key else 0.0
    if cache is not None:
        cache[key] = value
    return value


def cmi(rho: DensityMatrix, A, B, C, cache: dict | None = None) -> float:
    a, b, c = _check_disjoint(A, B, C)
    s = lambda *parts: entropy_of(rho, [q for p in parts for q in p], cache)  # noqa: E731
    return s(a, b) + s(b, c) - s(b) - s(a, b, c)


def mutual_information(rho: DensityMatrix, A, C, cache: dict | None = None) -> float:
    a, c = _check_disjoint(A, C)
    return entropy_of(rho, a, cache) + entropy_of(rho, c, cache) - entropy_of(rho, a + c, cache)


def psd_power(m: np.ndarray, power: float, threshold: float = PINV_THRESHOLD) -> tuple[np.ndarray, np.ndarray]:
    """(m^power on the support, support projector); support = eigenvalues > threshold * max."""
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    top = max(float(vals[-1]), 0.0)
    keep = vals > threshold * top if top > 0 else np.zeros_like(vals, dtype=bool)
    v = vecs[:, keep]
    powered = (v * vals[keep] ** power) @ v.conj().T
    return powered, v @ v.conj().T


# --- channels ---------------------------------------------------------------------------


@dataclass
class QuantumChannel:
    """Kraus channel from ``input_labels`` to ``output_labels``; other factors pass through."""

    input_labels: tuple
    input_dims: tuple
    output_labels: tuple
    output_dims: tuple
    kraus: list
    support: np.ndarray | None = None  # projector on the input where trace preservation holds
    name: str = ""
    precheck: Callable[[DensityMatrix], None] | None = None

    def __post_init__(self):
        self.input_labels = tuple(self.input_labels)
        self.output_labels = tuple(self.output_labels)
        self.input_dims = tuple(self.input_dims)
        self.output_dims = tuple(self.output_dims)
        din, dout = _prod(self.input_dims), _prod(self.output_dims)
        self.kraus = [np.asarray(k, dtype=complex) for k in self.kraus]
        for k in self.kraus:
            if k.shape != (dout, din):
                raise DenseError(f"Kraus operator shape {k.shape} != ({dout}, {din})")

    def completeness_error(self) -> float:
        din = _prod(self.input_dims)
        total = sum(k.conj().T @ k for k in self.kraus) if self.kraus else np.zeros((din, din))
        target = np.eye(din) if self.support is None else self.support
        return float(np.max(np.abs(total - target), initial=0.0))

    def then(self, other: "QuantumChannel") -> "CompositeChannel":
        return CompositeChannel([self, other])

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        return apply_channel(self, rho)


class CompositeChannel:
    """Channels applied in sequence (each stage may act on different factors)."""

    def __init__(self, stages: Sequence):
        self.stages = list(stages)

    def then(self, other) -> "CompositeChannel":
        return CompositeChannel(self.stages + [other])

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        for stage in self.stages:
            rho = stage(rho)
        return rho


def identity_channel(labels, dims=None) -> QuantumChannel:
    labels = tuple(labels)
    dims = (2,) * len(labels) if dims is None else tuple(dims)
    return QuantumChannel(labels, dims, labels, dims, [np.eye(_prod(dims))], name="identity")


def trace_channel(labels, dims=None) -> QuantumChannel:
    """Partial trace over ``labels`` as a channel."""
    labels = tuple(labels)
    dims = (2,) * len(labels) if dims is None else tuple(dims)
    d = _prod(dims)
    kraus = [np.eye(d)[j:j + 1, :] for j in range(d)]
    return QuantumChannel(labels, dims, (), (), kraus, name="trace")


def unitary_channel(u: np.ndarray, labels, dims=None) -> QuantumChannel:
    labels = tuple(labels)
    dims = (2,) * len(labels) if dims is None else tuple(dims)
    return QuantumChannel(labels, dims, labels, dims, [np.asarray(u)], name="unitary")


def isometry_channel(v: np.ndarray, input_labels, output_labels, input_dims=None, output_dims=None) -> QuantumChannel:
    input_labels, output_labels = tuple(input_labels), tuple(output_labels)
    input_dims = (2,) * len(input_labels) if input_dims is None else tuple(input_dims)
    output_dims = (2,) * len(output_labels) if output_dims is None else tuple(output_dims)
    return QuantumChannel(input_labels, input_dims, output_labels, output_dims, [np.asarray(v)], name="isometry")


def apply_channel(ch: QuantumChannel, rho: DensityMatrix) -> DensityMatrix:
    """Apply ``ch`` to its input factors; outputs are appended after the untouched factors."""
    missing = set(ch.input_labels) - set(rho.labels)
    if missing:
        raise DenseError(f"channel input labels {sorted(map(str, missing))} not in state")
    for lab, d in zip(ch.input_labels, ch.input_dims):
        if rho.dims[rho.labels.index(lab)] != d:
            raise DenseError(f"dimension mismatch on factor {lab!r}")
    others = [lab for lab in rho.labels if lab not in set(ch.input_labels)]
    clash = set(others) & set(ch.output_labels)
    if clash:
        raise DenseError(f"output labels {sorted(map(str, clash))} collide with untouched factors")
    if ch.precheck is not None:
        ch.precheck(rho)
    if not rho.is_factored and rho.dim <= _FACTORIZE_MAX_DIM:
        rho = DensityMatrix(None, rho.labels, rho.dims, factor=rho.factor(), check=False)
    ordered = reorder(rho, others + list(ch.input_labels))
    do = _prod(ordered.dims[: len(others)])
    din = _prod(ch.input_dims)
    dout = _prod(ch.output_dims)
    out_labels = tuple(others) + ch.output_labels
    out_dims = tuple(ordered.dims[: len(others)]) + ch.output_dims
    total_out = do * dout
    if ordered.is_factored:
        w = ordered._factor.reshape(do, din, -1)
        blocks = [np.matmul(k, w).reshape(total_out, -1) for k in ch.kraus]
        f = np.concatenate(blocks, axis=1) if blocks else np.zeros((total_out, 0))
        if f.shape[1] <= total_out:
            return _finish(None, f, out_labels, out_dims)
        return _finish(f @ f.conj().T, None, out_labels, out_dims)
    m = ordered.matrix.reshape(do, din, do, din)
    acc = np.zeros((do, dout, do, dout), dtype=complex)
    for k in ch.kraus:
        left = np.einsum("ab,xbyc->xayc", k, m)
        acc += np.einsum("xayc,dc->xayd", left, k.conj())
    return _finish(acc.reshape(total_out, total_out), None, out_labels, out_dims)


def _finish(matrix, factor, labels, dims) -> DensityMatrix:
    if factor is not None:
        tr = float(np.vdot(factor, factor).real)
    else:
        matrix = (matrix + matrix.conj().T) / 2
        tr = float(np.trace(matrix).real)
    drift = abs(tr - 1)
    if drift > DRIFT_BUDGET:
        raise DenseError(f"channel output trace drifted by {drift:.3e} (budget {DRIFT_BUDGET})")
    if factor is not None:
        return DensityMatrix(None, labels, dims, factor=factor / math.sqrt(tr), check=False)
    return DensityMatrix(matrix / tr, labels, dims, check=False)


def petz_map(rho_ref: DensityMatrix, frm: Sequence[Hashable], to: Sequence[Hashable], threshold: float = PINV_THRESHOLD) -> QuantumChannel:
    """Petz recovery channel B -> BC built from the reference marginal on BC.

    ``frm`` lists the B labels and ``to`` the BC labels (B must be contained in BC).
    Kraus operators are rho_BC^(1/2) (rho_B^(-1/2) tensor |j>_C).
    """
    frm, to = tuple(frm), tuple(to)
    if not set(frm) <= set(to):
        raise DenseError("Petz map source must be contained in its target")
    extra = tuple(lab for lab in to if lab not in set(frm))
    bc = reorder(partial_trace(rho_ref, to), frm + extra)
    b = partial_trace(bc, frm)
    db = b.dim
    dc = bc.dim // db
    sqrt_bc, _ = psd_power(bc.matrix, 0.5, threshold)
    inv_sqrt_b, support_b = psd_power(b.matrix, -0.5, threshold)
    cols = sqrt_bc.reshape(db * dc, db, dc)
    # K_j = sqrt(rho_BC) (rho_B^(-1/2) tensor |j>_C)
    kraus = [cols[:, :, j] @ inv_sqrt_b for j in range(dc)]
    b_dims = bc.dims[: len(frm)]
    out_dims = bc.dims
    out_labels = frm + extra

    def precheck(rho: DensityMatrix) -> None:
        xb = reorder(partial_trace(rho, frm), frm).matrix
        outside = float(np.trace(xb).real - np.trace(support_b @ xb).real)
        if outside > SUPPORT_TOL:
            raise SupportMismatchError(f"input weight {outside:.3e} outside the support of the reference on {frm}")

    return QuantumChannel(frm, b_dims, out_labels, out_dims, kraus, support=support_b, name="petz", precheck=precheck)


# --- unitaries -------------------------------------------------------------------------------


def _apply_gate_rows(t: np.ndarray, axes: list[int], g: np.ndarray) -> np.ndarray:
    k = len(axes)
    gt = g.reshape([2] * (2 * k))
    t = np.tensordot(gt, t, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(t, list(range(k)), axes)


def apply_unitary(rho: DensityMatrix, circuit, labels_of: dict | None = None) -> DensityMatrix:
    """U rho U^dagger for a layered circuit whose qubits are factor labels."""
    if circuit.depth == 0:
        return rho
    labmap = labels_of or {}
    pos = {lab: i for i, lab in enumerate(rho.labels)}
    for q in circuit.support:
        if labmap.get(q, q) not in pos:
            raise DenseError(f"circuit acts on qubit {q} outside the state")
    n = len(rho.dims)
    kind, t = _as_tensor(rho)
    for _, _, gate in circuit.gates():
        axes = [pos[labmap.get(q, q)] for q in gate.support]
        u = gate.unitary()
        t = _apply_gate_rows(t, axes, u)
        if kind == "matrix":
            t = _apply_gate_rows(t, [n + a for a in axes], u.conj())
    if kind == "factor":
        return DensityMatrix(None, rho.labels, rho.dims, factor=t.reshape(rho.dim, -1), check=False)
    return DensityMatrix(t.reshape(rho.dim, rho.dim), rho.labels, rho.dims, check=False)


# --- mixtures and distances -------------------------------------------------------------------


def mix(states: Sequence[DensityMatrix], probs: Sequence[float]) -> DensityMatrix:
    probs = np.asarray(probs, dtype=float)
    if len(states) != len(probs) or not states:
        raise DenseError("need one probability per state")
    if np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
        raise DenseError("probabilities must be nonnegative and sum to 1")
    ref = states[0]
    for s in states[1:]:
        if s.dims != ref.dims or s.labels != ref.labels:
            raise DenseError("mixture components have mismatched factors")
    pairs = [(p, s) for p, s in zip(probs, states) if p > 0]
    if all(s.is_factored for _, s in pairs) and sum(s.rank_bound for _, s in pairs) <= ref.dim:
        w = np.concatenate([math.sqrt(p) * s._factor for p, s in pairs], axis=1)
        return DensityMatrix(None, ref.labels, ref.dims, factor=w, check=False)
    m = sum(p * s.matrix for p, s in pairs)
    return DensityMatrix(m, ref.labels, ref.dims, check=False)


def _aligned(rho: DensityMatrix, sigma: DensityMatrix) -> DensityMatrix:
    if set(rho.labels) != set(sigma.labels):
        raise DenseError("states live on different factors")
    sigma = reorder(sigma, rho.labels)
    if sigma.dims != rho.dims:
        raise DenseError("dimension mismatch")
    return sigma


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma."""
    sigma = _aligned(rho, sigma)
    if rho.is_factored and sigma.is_factored and rho.rank_bound + sigma.rank_bound < rho.dim:
        f = np.concatenate([rho._factor, sigma._factor], axis=1)
        signs = np.concatenate([np.ones(rho.rank_bound), -np.ones(sigma.rank_bound)])
        _, r = np.linalg.qr(f)
        vals = np.linalg.eigvalsh((r * signs) @ r.conj().T)
    else:
        vals = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return float(0.5 * np.sum(np.abs(vals)))


def trace_distance_bound(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Upper bound 0.5 * sqrt(rank) * ||rho - sigma||_F on the trace distance, with no eigensolve.

    For factored states the Frobenius norm comes from Gram blocks of the factors.
    """
    sigma = _aligned(rho, sigma)
    rank = min(rho.dim, rho.rank_bound + sigma.rank_bound)
    if rho.is_factored and sigma.is_factored:
        f, g = rho._factor, sigma._factor
        sq = (np.linalg.norm(f.conj().T @ f) ** 2 + np.linalg.norm(g.conj().T @ g) ** 2
              - 2 * np.linalg.norm(f.conj().T @ g) ** 2)
        fro = math.sqrt(max(float(sq), 0.0))
    else:
        fro = float(np.linalg.norm(rho.matrix - sigma.matrix))
    return 0.5 * math.sqrt(rank) * fro


def certified_distance(rho: DensityMatrix, sigma: DensityMatrix) -> tuple[float, bool]:
    """(value, exact): the trace distance when affordable, else :func:`trace_distance_bound`.

    Large factored states are compressed to their numerical rank first, so low-rank pairs
    still get the exact value from the joint column space.
    """
    small = rho.dim <= _EIG_CHECK_MAX_DIM
    if not small and rho.is_factored and sigma.is_factored:
        rho, sigma = compress(rho), compress(sigma)
    factored = rho.is_factored and sigma.is_factored and rho.rank_bound + sigma.rank_bound <= _EIG_CHECK_MAX_DIM
    if small or factored:
        return trace_distance(rho, sigma), True
    return trace_distance_bound(rho, sigma), False


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Squared fidelity (tr |sqrt(rho) sqrt(sigma)|)^2."""
    sigma = _aligned(rho, sigma)
    overlap = rho.factor().conj().T @ sigma.factor()
    return float(np.sum(np.linalg.svd(overlap, compute_uv=False)) ** 2)


# --- persistence ---------------------------------------------------------------------------------


def dump(rho: DensityMatrix) -> bytes:
    """Little-endian header (uint32 factor count, uint32 dims) then row-major complex128."""
    header = struct.pack("<I", len(rho.dims)) + struct.pack(f"<{len(rho.dims)}I", *rho.dims)
    return header + np.ascontiguousarray(rho.matrix, dtype="<c16").tobytes()


def load(data: bytes, labels: Sequence[Hashable] | None = None) -> DensityMatrix:
    (n,) = struct.unpack_from("<I", data, 0)
    dims = struct.unpack_from(f"<{n}I", data, 4)
    d = _prod(dims)
    offset = 4 + 4 * n
    m = np.frombuffer(data, dtype="<c16", count=d * d, offset=offset).reshape(d, d)
    labels = tuple(range(n)) if labels is None else tuple(labels)
    return DensityMatrix(m.astype(complex), labels, dims)
