"""States, measurements, channels, and instruments in the Choi representation.

The Choi matrix of a map F is the unnormalised C(F) = sum_ij |i><j| (x)
F(|i><j|), stored over subsystems (inputs..., outputs...).  With this
convention a map acts on a state as F(rho) = Tr_in[(rho^T (x) 1) C(F)], and a
trace-preserving map has Tr_out C(F) = 1_in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import HERM_TOL, PSD_TOL, TRACE_TOL
from .linalg import (
    ComplexMatrix,
    dag,
    hermiticity_defect,
    is_psd,
    ket,
    min_eigenvalue,
    proj,
)

PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class DensityOperator:
    """PSD, unit-trace operator over one (possibly composite) system."""

    mat: ComplexMatrix

    def __post_init__(self):
        if not is_psd(self.mat):
            raise ValueError("density operator must be PSD within tolerance")
        if abs(self.mat.trace() - 1.0) > HERM_TOL:
            raise ValueError(f"density operator trace {self.mat.trace()} != 1")

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int]) -> "DensityOperator":
        dims = tuple(dims)
        n = math.prod(dims)
        return cls(ComplexMatrix(np.eye(n) / n, dims))

    @classmethod
    def pure(cls, vec: np.ndarray, dims: Sequence[int] | None = None) -> "DensityOperator":
        vec = np.asarray(vec, dtype=np.complex128)
        dims = tuple(dims) if dims is not None else (len(vec),)
        return cls(ComplexMatrix(proj(vec / np.linalg.norm(vec)), dims))


@dataclass(frozen=True)
class Povm:
    """Outcome-indexed effects, PSD and summing to the identity."""

    effects: tuple[ComplexMatrix, ...]

    def __post_init__(self):
        effects = tuple(self.effects)
        if not effects:
            raise ValueError("POVM needs at least one effect")
        for e in effects:
            if not is_psd(e):
                raise ValueError("every POVM effect must be PSD")
        total = sum(e.array for e in effects)
        if np.max(np.abs(total - np.eye(effects[0].n))) > HERM_TOL:
            raise ValueError("POVM effects must sum to the identity")
        object.__setattr__(self, "effects", effects)


@dataclass(frozen=True)
class Pvm:
    """Projective measurement: orthogonal projectors summing to the identity."""

    projectors: tuple[ComplexMatrix, ...]

    def __post_init__(self):
        projs = tuple(self.projectors)
        for p in projs:
            if hermiticity_defect(p) > HERM_TOL:
                raise ValueError("projectors must be Hermitian")
            if np.max(np.abs(p.array @ p.array - p.array)) > HERM_TOL:
                raise ValueError("projectors must be idempotent")
        for i, p in enumerate(projs):
            for q in projs[i + 1:]:
                if np.max(np.abs(p.array @ q.array)) > HERM_TOL:
                    raise ValueError("projectors must be mutually orthogonal")
        total = sum(p.array for p in projs)
        if np.max(np.abs(total - np.eye(projs[0].n))) > HERM_TOL:
            raise ValueError("projectors must sum to the identity")
        object.__setattr__(self, "projectors", projs)

    def as_povm(self) -> Povm:
        return Povm(self.projectors)


@dataclass(frozen=True)
class ChoiMap:
    """A linear map between labelled systems stored as a Choi matrix.

    ``mat`` lives over subsystems ``in_dims + out_dims``.  The map is CP iff
    ``mat`` is PSD.
    """

    mat: ComplexMatrix
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    in_labels: tuple[str, ...] | None = None
    out_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        in_dims = tuple(int(d) for d in self.in_dims)
        out_dims = tuple(int(d) for d in self.out_dims)
        if self.mat.dims != in_dims + out_dims:
            raise ValueError(
                f"Choi dims {self.mat.dims} != declared {in_dims + out_dims}"
            )
        for name in ("in_labels", "out_labels"):
            labels = getattr(self, name)
            if labels is not None:
                labels = tuple(labels)
                if len(labels) != len(in_dims if name == "in_labels" else out_dims):
                    raise ValueError(f"{name} length mismatch")
                object.__setattr__(self, name, labels)
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dims", out_dims)

    @property
    def d_in(self) -> int:
        return math.prod(self.in_dims)

    @property
    def d_out(self) -> int:
        return math.prod(self.out_dims)

    def is_cp(self, tol: float = PSD_TOL) -> bool:
        return is_psd(self.mat, tol)

    def tp_defect(self) -> float:
        """Max-abs deviation of Tr_out(Choi) from the input identity."""
        k_in = len(self.in_dims)
        from .linalg import partial_trace

        reduced = partial_trace(self.mat, range(k_in))
        return float(np.max(np.abs(reduced.array - np.eye(self.d_in))))

    def is_tp(self, tol: float = TRACE_TOL) -> bool:
        return self.tp_defect() <= tol


def choi_from_kraus(
    kraus: Sequence[np.ndarray],
    in_dims: Sequence[int] | None = None,
    out_dims: Sequence[int] | None = None,
    in_labels: Sequence[str] | None = None,
    out_labels: Sequence[str] | None = None,
) -> ChoiMap:
    """Choi matrix of rho -> sum_k K rho K^dag."""
    kraus = [np.asarray(k, dtype=np.complex128) for k in kraus]
    if not kraus:
        raise ValueError("need at least one Kraus operator")
    d_out, d_in = kraus[0].shape
    for k in kraus:
        if k.shape != (d_out, d_in):
            raise ValueError("all Kraus operators must share one shape")
    in_dims = tuple(in_dims) if in_dims is not None else (d_in,)
    out_dims = tuple(out_dims) if out_dims is not None else (d_out,)
    c = np.zeros((d_in * d_out, d_in * d_out), dtype=np.complex128)
    for k in kraus:
        v = k.T.reshape(-1)  # v[(i, o)] = K[o, i]
        c += np.outer(v, v.conj())
    return ChoiMap(
        ComplexMatrix(c, in_dims + out_dims),
        in_dims,
        out_dims,
        tuple(in_labels) if in_labels else None,
        tuple(out_labels) if out_labels else None,
    )


def identity_choi(dims: Sequence[int] | int, in_labels=None, out_labels=None) -> ChoiMap:
    dims = (dims,) if isinstance(dims, int) else tuple(dims)
    n = math.prod(dims)
    return choi_from_kraus([np.eye(n)], dims, dims, in_labels, out_labels)


def apply_choi(c: ChoiMap, rho: ComplexMatrix) -> ComplexMatrix:
    """Apply a (not necessarily TP) map to an operator."""
    if rho.n != c.d_in:
        raise ValueError(f"state dim {rho.n} != channel input dim {c.d_in}")
    c4 = c.mat.array.reshape(c.d_in, c.d_out, c.d_in, c.d_out)
    out = np.einsum("ij,iajb->ab", rho.array, c4)
    return ComplexMatrix(out, c.out_dims)


def apply_channel(c: ChoiMap, rho: DensityOperator) -> DensityOperator:
    """Apply a TP channel to a state."""
    return DensityOperator(apply_choi(c, rho.mat))


def compose(second: ChoiMap, first: ChoiMap) -> ChoiMap:
    """Choi matrix of the sequential composition second o first."""
    if first.d_out != second.d_in:
        raise ValueError(
            f"output dim {first.d_out} of first != input dim {second.d_in} of second"
        )
    if first.out_labels is not None and second.in_labels is not None:
        if first.out_labels != second.in_labels:
            raise ValueError(
                f"system mismatch: {first.out_labels} -> {second.in_labels}"
            )
    a = first.mat.array.reshape(first.d_in, first.d_out, first.d_in, first.d_out)
    b = second.mat.array.reshape(second.d_in, second.d_out, second.d_in, second.d_out)
    c = np.einsum("imjn,monp->iojp", a, b)
    side = first.d_in * second.d_out
    return ChoiMap(
        ComplexMatrix(c.reshape(side, side), first.in_dims + second.out_dims),
        first.in_dims,
        second.out_dims,
        first.in_labels,
        second.out_labels,
    )


def pauli_channel(p: str, in_label: str = "in", out_label: str = "out") -> ChoiMap:
    """Choi of the qubit unitary conjugation rho -> P rho P^dag."""
    if p not in PAULI:
        raise ValueError(f"unknown Pauli {p!r}; expected one of {sorted(PAULI)}")
    return choi_from_kraus([PAULI[p]], (2,), (2,), (in_label,), (out_label,))


def depolarizing_choi(d: int = 2, in_label="in", out_label="out") -> ChoiMap:
    """Choi of the totally depolarising channel rho -> Tr(rho) 1/d."""
    c = np.kron(np.eye(d), np.eye(d) / d)
    return ChoiMap(ComplexMatrix(c, (d, d)), (d,), (d,), (in_label,), (out_label,))


def permutation_dephasing_channel(p: Sequence[int], d: int) -> ChoiMap:
    """Measure in the computational basis, relabel the outcome by p, reprepare.

    rho -> sum_i |p(i)><p(i)| <i|rho|i>.
    """
    from .linalg import check_permutation

    p = check_permutation(p, d)
    c = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        c += np.kron(proj(ket(i, d)), proj(ket(p[i], d)))
    return ChoiMap(ComplexMatrix(c, (d, d)), (d,), (d,))


@dataclass(frozen=True)
class Instrument:
    """Finite outcome-indexed family of CP maps summing to a CPTP map."""

    branches: tuple[ChoiMap, ...]
    outcomes: tuple = ()

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise ValueError("instrument needs at least one branch")
        first = branches[0]
        for b in branches:
            if (b.in_dims, b.out_dims) != (first.in_dims, first.out_dims):
                raise ValueError("all branches must share input/output systems")
        outcomes = tuple(self.outcomes) or tuple(range(len(branches)))
        if len(outcomes) != len(branches):
            raise ValueError("need one outcome label per branch")
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def in_dims(self) -> tuple[int, ...]:
        return self.branches[0].in_dims

    @property
    def out_dims(self) -> tuple[int, ...]:
        return self.branches[0].out_dims

    def total(self) -> ChoiMap:
        mat = sum(b.mat.array for b in self.branches)
        first = self.branches[0]
        return ChoiMap(
            ComplexMatrix(mat, first.mat.dims),
            first.in_dims,
            first.out_dims,
            first.in_labels,
            first.out_labels,
        )


@dataclass(frozen=True)
class InstrumentReport:
    branch_min_eigenvalues: tuple[float, ...]
    tp_defect: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "branch_min_eigenvalues": list(self.branch_min_eigenvalues),
            "tp_defect": self.tp_defect,
            "passed": self.passed,
        }


def validate_instrument(ins: Instrument, tol: float = PSD_TOL) -> InstrumentReport:
    """Check each branch is CP and the branch sum is trace preserving."""
    mins = tuple(min_eigenvalue(b.mat) for b in ins.branches)
    tp = ins.total().tp_defect()
    passed = all(m >= -tol for m in mins) and tp <= tol
    return InstrumentReport(mins, tp, passed)


def link_choi(a: ChoiMap, b: ChoiMap, a_out: int, b_in: int) -> ChoiMap:
    """Feed output subsystem ``a_out`` of map a into input subsystem ``b_in`` of b.

    The result maps (a inputs + remaining b inputs) to (remaining a outputs +
    b outputs), with the linked subsystem contracted away.  Used to wire
    ancilla-carrying strategies together.
    """
    if a.out_dims[a_out] != b.in_dims[b_in]:
        raise ValueError("linked subsystem dimensions differ")
    ka_i, ka_o = len(a.in_dims), len(a.out_dims)
    kb_i, kb_o = len(b.in_dims), len(b.out_dims)
    ta = a.mat.tensor()  # axes: a_in, a_out, a_in', a_out'
    tb = b.mat.tensor()
    # Index bookkeeping via einsum integer labels.
    next_label = 0

    def fresh(k):
        nonlocal next_label
        out = list(range(next_label, next_label + k))
        next_label += k
        return out

    ai = fresh(ka_i)
    ao = fresh(ka_o)
    aic = fresh(ka_i)
    aoc = fresh(ka_o)
    bi = fresh(kb_i)
    bo = fresh(kb_o)
    bic = fresh(kb_i)
    boc = fresh(kb_o)
    # contract: a's out subsystem with b's in subsystem, rows with rows and
    # columns with columns (sequential-composition index rule).
    bi[b_in] = ao[a_out]
    bic[b_in] = aoc[a_out]
    keep_ao = [ao[i] for i in range(ka_o) if i != a_out]
    keep_aoc = [aoc[i] for i in range(ka_o) if i != a_out]
    keep_bi = [bi[i] for i in range(kb_i) if i != b_in]
    keep_bic = [bic[i] for i in range(kb_i) if i != b_in]
    out_rows = ai + keep_bi + keep_ao + bo
    out_cols = aic + keep_bic + keep_aoc + boc
    t = np.einsum(ta, ai + ao + aic + aoc, tb, bi + bo + bic + boc,
                  out_rows + out_cols)
    in_dims = a.in_dims + tuple(d for i, d in enumerate(b.in_dims) if i != b_in)
    out_dims = tuple(d for i, d in enumerate(a.out_dims) if i != a_out) + b.out_dims
    side = math.prod(in_dims + out_dims)
    return ChoiMap(ComplexMatrix(t.reshape(side, side), in_dims + out_dims),
                   in_dims, out_dims)
