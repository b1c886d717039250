"""Finite catalogues of channels, instruments, and bases used by the scans.

``cptp_spanning_chois`` returns a fixed family of measure-and-reprepare
channels whose affine span is the full affine hull of CPTP maps between the
given systems (d_in^2 * d_out^2 channels; 16 per qubit site).  Scanning a
multilinear functional over this family therefore pins its value on every
CPTP map.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .linalg import ComplexMatrix, ket, proj
from .objects import ChoiMap, Instrument


def ic_pure_states(d: int) -> list[np.ndarray]:
    """d^2 pure states spanning the Hermitian operators on C^d."""
    states = [ket(i, d) for i in range(d)]
    for j in range(d):
        for k in range(j + 1, d):
            states.append((ket(j, d) + ket(k, d)) / math.sqrt(2))
            states.append((ket(j, d) + 1j * ket(k, d)) / math.sqrt(2))
    return states


@lru_cache(maxsize=None)
def cptp_spanning_chois(d_in: int, d_out: int) -> np.ndarray:
    """Stack of Choi matrices affinely spanning CPTP(d_in -> d_out).

    Channel (m, l): measure the binary POVM {P_m, 1 - P_m}; reprepare s_l on
    outcome 0 and the reference state s_0 on outcome 1.  Choi:
    P_m^T (x) s_l + (1 - P_m^T) (x) s_0.
    """
    ins = [proj(s) for s in ic_pure_states(d_in)]
    outs = [proj(s) for s in ic_pure_states(d_out)]
    ref = outs[0]
    eye = np.eye(d_in)
    stack = np.empty((len(ins) * len(outs), d_in * d_out, d_in * d_out),
                     dtype=np.complex128)
    idx = 0
    for p in ins:
        for s in outs:
            stack[idx] = np.kron(p.T, s) + np.kron(eye - p.T, ref)
            idx += 1
    stack.flags.writeable = False
    return stack


def basis_vectors(name: str, d: int) -> list[np.ndarray]:
    """Orthonormal measurement basis by name.

    'z' is the computational basis for any d; 'fourier' the discrete Fourier
    basis; 'x' and 'y' are the qubit Pauli eigenbases.
    """
    if name == "z":
        return [ket(i, d) for i in range(d)]
    if name == "fourier":
        omega = np.exp(2j * np.pi / d)
        return [
            np.array([omega ** (i * j) for j in range(d)], dtype=np.complex128)
            / math.sqrt(d)
            for i in range(d)
        ]
    if name == "x":
        if d != 2:
            raise ValueError("basis 'x' is qubit-only; use 'fourier'")
        return [np.array([1, 1]) / math.sqrt(2), np.array([1, -1]) / math.sqrt(2)]
    if name == "y":
        if d != 2:
            raise ValueError("basis 'y' is qubit-only")
        return [np.array([1, 1j]) / math.sqrt(2), np.array([1, -1j]) / math.sqrt(2)]
    raise ValueError(f"unknown basis {name!r}")


def prepare_channel(state: np.ndarray, d_in: int) -> ChoiMap:
    """Constant channel rho -> Tr(rho) |state><state|."""
    state = np.asarray(state, dtype=np.complex128)
    d_out = len(state)
    c = np.kron(np.eye(d_in), proj(state))
    return ChoiMap(ComplexMatrix(c, (d_in, d_out)), (d_in,), (d_out,))


def measure_reprepare_instrument(
    basis: list[np.ndarray], reprepare: list[np.ndarray] | np.ndarray
) -> Instrument:
    """Measure in ``basis``; on outcome m, prepare reprepare[m] (or the fixed
    state if a single vector is given)."""
    d = len(basis[0])
    if isinstance(reprepare, np.ndarray):
        reprepare = [reprepare] * len(basis)
    branches = []
    for b, r in zip(basis, reprepare):
        c = np.kron(proj(b).T, proj(r))
        branches.append(ChoiMap(ComplexMatrix(c, (d, len(r))), (d,), (len(r),)))
    return Instrument(tuple(branches))


def measure_forward_instrument(basis: list[np.ndarray], flip: bool) -> Instrument:
    """Measure in a 2-outcome basis and forward the (optionally flipped) result."""
    if len(basis) != 2:
        raise ValueError("measure-and-forward is defined for qubit bases")
    reprep = [basis[1], basis[0]] if flip else [basis[0], basis[1]]
    return measure_reprepare_instrument(basis, reprep)


def probe_instruments(d: int) -> list[Instrument]:
    """Extremal instruments used when scanning for signalling at a site."""
    zs = basis_vectors("z", d)
    fs = basis_vectors("fourier", d)
    return [
        measure_reprepare_instrument(zs, zs[0]),
        measure_reprepare_instrument(fs, zs[0]),
        measure_reprepare_instrument(zs, zs),
    ]


def instrument_choi_stack(ins: Instrument) -> np.ndarray:
    return np.stack([b.mat.array for b in ins.branches])
