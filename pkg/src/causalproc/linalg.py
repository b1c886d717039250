"""Dense complex linear algebra over multi-subsystem Hilbert spaces.

Operators are stored as square complex matrices together with an ordered
profile of subsystem dimensions.  Everything here is a pure function of its
inputs; matrices are frozen after construction and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import HERM_TOL, PSD_TOL


@dataclass(frozen=True, eq=False)
class ComplexMatrix:
    """Square complex matrix over an ordered list of subsystems."""

    array: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        arr = np.asarray(self.array, dtype=np.complex128)
        dims = tuple(int(d) for d in self.dims)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        if any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be >= 1, got {dims}")
        if math.prod(dims) != arr.shape[0]:
            raise ValueError(
                f"product of dims {dims} does not match matrix side {arr.shape[0]}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)
        object.__setattr__(self, "dims", dims)

    @property
    def n(self) -> int:
        return self.array.shape[0]

    @property
    def num_subsystems(self) -> int:
        return len(self.dims)

    def tensor(self) -> np.ndarray:
        """View as a 2k-index tensor (row subsystems, then column subsystems)."""
        return self.array.reshape(self.dims + self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.array))

    @classmethod
    def identity(cls, dims: Sequence[int]) -> "ComplexMatrix":
        dims = tuple(dims)
        return cls(np.eye(math.prod(dims), dtype=np.complex128), dims)


def ket(i: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.complex128)
    v[i] = 1.0
    return v


def proj(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    return np.outer(v, v.conj())


def dag(m: np.ndarray) -> np.ndarray:
    return np.conjugate(np.transpose(m))


def check_permutation(perm: Sequence[int], k: int) -> tuple[int, ...]:
    """Validate that perm is a bijection on range(k)."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(k)):
        raise ValueError(f"{perm} is not a permutation of range({k})")
    return perm


def invert_permutation(perm: Sequence[int]) -> tuple[int, ...]:
    perm = check_permutation(perm, len(perm))
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return tuple(inv)


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Kronecker product; result dims are a.dims followed by b.dims."""
    return ComplexMatrix(np.kron(a.array, b.array), a.dims + b.dims)


def kron_all(mats: Iterable[ComplexMatrix]) -> ComplexMatrix:
    mats = list(mats)
    if not mats:
        raise ValueError("need at least one matrix")
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


def partial_trace(m: ComplexMatrix, keep: Iterable[int]) -> ComplexMatrix:
    """Trace out all subsystems not listed in keep.

    Kept subsystems stay in their original relative order and the total trace
    is preserved.
    """
    k = m.num_subsystems
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= k for i in keep):
        raise IndexError(f"keep indices {keep} out of range for {k} subsystems")
    keep_set = set(keep)
    row_idx = list(range(k))
    col_idx = [i if i not in keep_set else k + i for i in range(k)]
    out_idx = [i for i in keep] + [k + i for i in keep]
    t = np.einsum(m.tensor(), row_idx + col_idx, out_idx)
    new_dims = tuple(m.dims[i] for i in keep)
    side = math.prod(new_dims) if new_dims else 1
    return ComplexMatrix(t.reshape(side, side), new_dims or (1,))


def permute_subsystems(m: ComplexMatrix, perm: Sequence[int]) -> ComplexMatrix:
    """Reorder subsystems so that result subsystem j is m's subsystem perm[j]."""
    k = m.num_subsystems
    perm = check_permutation(perm, k)
    axes = list(perm) + [k + p for p in perm]
    t = np.transpose(m.tensor(), axes)
    new_dims = tuple(m.dims[p] for p in perm)
    return ComplexMatrix(t.reshape(m.n, m.n), new_dims)


def hermiticity_defect(m: ComplexMatrix) -> float:
    return float(np.max(np.abs(m.array - dag(m.array))))


def is_hermitian(m: ComplexMatrix, tol: float = HERM_TOL) -> bool:
    return hermiticity_defect(m) <= tol


def trace_distance(a: ComplexMatrix, b: ComplexMatrix) -> float:
    """Half the trace norm of a - b for Hermitian a, b of equal dims."""
    if a.dims != b.dims:
        raise ValueError(f"dimension profiles differ: {a.dims} vs {b.dims}")
    for name, m in (("a", a), ("b", b)):
        if not is_hermitian(m):
            raise ValueError(f"argument {name} is not Hermitian within {HERM_TOL}")
    diff = a.array - b.array
    eigs = np.linalg.eigvalsh((diff + dag(diff)) / 2)
    return float(0.5 * np.sum(np.abs(eigs)))


def min_eigenvalue(m: ComplexMatrix) -> float:
    return float(np.min(np.linalg.eigvalsh((m.array + dag(m.array)) / 2)))


def is_psd(m: ComplexMatrix, tol: float = PSD_TOL) -> bool:
    """True iff m is Hermitian within tol and its minimum eigenvalue >= -tol."""
    if not is_hermitian(m, tol):
        return False
    return min_eigenvalue(m) >= -tol


def haar_random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state vector of the given dimension."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
