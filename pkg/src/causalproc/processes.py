"""Multi-site process matrices.

A process matrix lives over the interleaved subsystems
(site1_in, site1_out, site2_in, site2_out, ...) of a site registry, and
assigns joint probabilities to per-site maps via

    P = Tr[ W . (M_1 (x) M_2 (x) ...)^T ]

where M_k is the Choi matrix of the map applied at site k.  The same
transpose convention as ``objects.apply_choi`` is used, so the two cannot
drift apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import BORN_TOL, HERM_TOL, PSD_TOL, SIGNAL_TOL, TRACE_TOL
from .linalg import (
    ComplexMatrix,
    check_permutation,
    hermiticity_defect,
    invert_permutation,
    kron_all,
    min_eigenvalue,
    permute_subsystems,
)
from .objects import ChoiMap, DensityOperator, Instrument, identity_choi
from .catalogues import (
    basis_vectors,
    cptp_spanning_chois,
    instrument_choi_stack,
    measure_reprepare_instrument,
    prepare_channel,
)


@dataclass(frozen=True)
class Site:
    label: str
    d_in: int
    d_out: int


@dataclass(frozen=True)
class SiteRegistry:
    """Ordered registry of sites; fixes the subsystem layout of processes."""

    sites: tuple[Site, ...]

    def __post_init__(self):
        sites = tuple(
            s if isinstance(s, Site) else Site(*s) for s in self.sites
        )
        labels = [s.label for s in sites]
        if len(set(labels)) != len(labels):
            raise ValueError(f"site labels must be unique, got {labels}")
        if any(s.d_in < 1 or s.d_out < 1 for s in sites):
            raise ValueError("site dimensions must be >= 1")
        object.__setattr__(self, "sites", sites)

    @classmethod
    def qubit_sites(cls, n: int) -> "SiteRegistry":
        """n isomorphic qubit sites labelled A, B, C, ..."""
        labels = [chr(ord("A") + i) for i in range(n)]
        return cls(tuple(Site(l, 2, 2) for l in labels))

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.sites)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no site labelled {label!r} in registry {self.labels}")

    def dims_profile(self) -> tuple[int, ...]:
        """Interleaved (in, out) subsystem dimensions in registry order."""
        out: list[int] = []
        for s in self.sites:
            out.extend((s.d_in, s.d_out))
        return tuple(out)

    def site_block_dims(self) -> tuple[int, ...]:
        return tuple(s.d_in * s.d_out for s in self.sites)

    def total_out_dim(self) -> int:
        return math.prod(s.d_out for s in self.sites)


def check_causal_order(order: Sequence[str], registry: SiteRegistry) -> tuple[str, ...]:
    order = tuple(order)
    if sorted(order) != sorted(registry.labels):
        raise ValueError(
            f"order {order} is not a permutation of registry labels {registry.labels}"
        )
    return order


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    """Matrix over the registry's interleaved subsystems.

    ``order``, when present, records the causal order the process was built
    with; it is metadata, not re-derived from the matrix.
    """

    mat: ComplexMatrix
    registry: SiteRegistry
    order: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.mat.dims != self.registry.dims_profile():
            raise ValueError(
                f"matrix dims {self.mat.dims} do not match registry profile "
                f"{self.registry.dims_profile()}"
            )
        if self.order is not None:
            object.__setattr__(
                self, "order", check_causal_order(self.order, self.registry)
            )


def fully_mixed_process(registry: SiteRegistry) -> ProcessMatrix:
    """The deterministic white-noise process (all outcomes maximally mixed)."""
    blocks = []
    for s in registry.sites:
        blocks.append(ComplexMatrix(np.eye(s.d_in) / s.d_in, (s.d_in,)))
        blocks.append(ComplexMatrix.identity((s.d_out,)))
    return ProcessMatrix(kron_all(blocks), registry)


def markov_process(
    registry: SiteRegistry,
    initial: DensityOperator,
    links: Sequence[ChoiMap],
    order: Sequence[str] | None = None,
) -> ProcessMatrix:
    """Ordered Markovian process: initial state into the first site, a channel
    from each site to the next, last output discarded."""
    seq = check_causal_order(order or registry.labels, registry)
    sites = [registry.sites[registry.index(l)] for l in seq]
    if len(links) != len(sites) - 1:
        raise ValueError(f"need {len(sites) - 1} links for {len(sites)} sites")
    if initial.mat.n != sites[0].d_in:
        raise ValueError(
            f"initial state dim {initial.mat.n} != first site input {sites[0].d_in}"
        )
    for k, link in enumerate(links):
        if link.d_in != sites[k].d_out or link.d_out != sites[k + 1].d_in:
            raise ValueError(
                f"link {k} maps {link.d_in}->{link.d_out}, expected "
                f"{sites[k].d_out}->{sites[k + 1].d_in}"
            )
    blocks = [ComplexMatrix(initial.mat.array, (sites[0].d_in,))]
    for link in links:
        blocks.append(ComplexMatrix(link.mat.array, (link.d_in, link.d_out)))
    blocks.append(ComplexMatrix.identity((sites[-1].d_out,)))
    mat = kron_all(blocks)
    # Subsystems are now in causal sequence; move each site's (in, out) pair
    # to its registry slot.
    n = len(sites)
    perm = [0] * (2 * n)
    for pos, label in enumerate(seq):
        r = registry.index(label)
        perm[2 * r] = 2 * pos
        perm[2 * r + 1] = 2 * pos + 1
    return ProcessMatrix(permute_subsystems(mat, perm), registry, seq)


def permute_sites(w: ProcessMatrix, p: Sequence[int]) -> ProcessMatrix:
    """Move the site block at position i to position p[i] (in/out as a unit)."""
    n = len(w.registry)
    p = check_permutation(p, n)
    for i in range(n):
        src, dst = w.registry.sites[i], w.registry.sites[p[i]]
        if (src.d_in, src.d_out) != (dst.d_in, dst.d_out):
            raise ValueError(
                f"sites {src.label} and {dst.label} are not isomorphic"
            )
    inv = invert_permutation(p)
    perm = [0] * (2 * n)
    for r in range(n):
        perm[2 * r] = 2 * inv[r]
        perm[2 * r + 1] = 2 * inv[r] + 1
    order = None
    if w.order is not None:
        labels = w.registry.labels
        order = tuple(labels[p[w.registry.index(s)]] for s in w.order)
    return ProcessMatrix(permute_subsystems(w.mat, perm), w.registry, order)


def _site_block_tensor(w: ProcessMatrix) -> np.ndarray:
    q = w.registry.site_block_dims()
    return w.mat.array.reshape(q + q)


def contract_site_stacks(w: ProcessMatrix, stacks: Sequence[np.ndarray]) -> np.ndarray:
    """Contract W with one stack of site Choi matrices per site.

    stacks[k] has shape (m_k, q_k, q_k) with q_k = d_in_k * d_out_k.  Returns
    the real tensor of shape (m_1, ..., m_n) whose entries are
    Tr[W . (M_1 (x) ... (x) M_n)^T].
    """
    n = len(w.registry)
    if len(stacks) != n:
        raise ValueError(f"need one stack per site ({n}), got {len(stacks)}")
    q = w.registry.site_block_dims()
    for k, s in enumerate(stacks):
        if s.shape[1:] != (q[k], q[k]):
            raise ValueError(
                f"stack {k} has Choi shape {s.shape[1:]}, expected {(q[k], q[k])}"
            )
    t = _site_block_tensor(w)
    operands = [t, list(range(2 * n))]
    for k, s in enumerate(stacks):
        operands.extend([s, [2 * n + k, k, n + k]])
    operands.append([2 * n + k for k in range(n)])
    res = np.einsum(*operands, optimize=True)
    return np.asarray(res).real


def _site_choi_array(site: Site, c: ChoiMap) -> np.ndarray:
    if c.in_dims != (site.d_in,) and math.prod(c.in_dims) != site.d_in:
        raise ValueError(f"map input dims {c.in_dims} do not match site {site}")
    if math.prod(c.out_dims) != site.d_out:
        raise ValueError(f"map output dims {c.out_dims} do not match site {site}")
    return c.mat.array


def born_probability(w: ProcessMatrix, branches: Sequence[ChoiMap]) -> float:
    """Probability assigned to one CP branch per site (product strategies)."""
    if len(branches) != len(w.registry):
        raise ValueError("need one branch per site, in registry order")
    stacks = [
        _site_choi_array(site, c)[None, :, :]
        for site, c in zip(w.registry.sites, branches)
    ]
    return float(contract_site_stacks(w, stacks).reshape(()))


@dataclass(frozen=True)
class ProcessReport:
    hermiticity_defect: float
    min_eigenvalue: float
    trace_defect: float
    born_defect: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "hermiticity_defect": self.hermiticity_defect,
            "min_eigenvalue": self.min_eigenvalue,
            "trace_defect": self.trace_defect,
            "born_defect": self.born_defect,
            "passed": self.passed,
        }

    def failures(self) -> list[str]:
        out = []
        if self.hermiticity_defect > HERM_TOL:
            out.append("hermiticity")
        if self.min_eigenvalue < -PSD_TOL:
            out.append("positivity")
        if self.trace_defect > TRACE_TOL:
            out.append("trace_normalisation")
        if self.born_defect > BORN_TOL:
            out.append("born_normalisation")
        return out


def _spanning_stacks(registry: SiteRegistry) -> list[np.ndarray]:
    return [cptp_spanning_chois(s.d_in, s.d_out) for s in registry.sites]


def validate_process(w: ProcessMatrix) -> ProcessReport:
    """Hermiticity, positivity, trace normalisation, and unit total
    probability over the affine spanning set of product CPTP maps."""
    herm = hermiticity_defect(w.mat)
    min_eig = min_eigenvalue(w.mat)
    trace = abs(w.mat.trace() - w.registry.total_out_dim())
    probs = contract_site_stacks(w, _spanning_stacks(w.registry))
    born = float(np.max(np.abs(probs - 1.0)))
    passed = (
        herm <= HERM_TOL
        and min_eig >= -PSD_TOL
        and trace <= TRACE_TOL
        and born <= BORN_TOL
    )
    return ProcessReport(herm, min_eig, trace, born, passed)


def _probe_instruments(site: Site) -> list[Instrument]:
    zs = basis_vectors("z", site.d_in)
    fs = basis_vectors("fourier", site.d_in)
    out0 = basis_vectors("z", site.d_out)[0]
    probes = [
        measure_reprepare_instrument(zs, out0),
        measure_reprepare_instrument(fs, out0),
    ]
    if site.d_in == site.d_out:
        probes.append(measure_reprepare_instrument(zs, zs))
    return probes


def signals(
    w: ProcessMatrix, from_site: str, to_site: str, tol: float = SIGNAL_TOL
) -> bool:
    """True iff varying the channel at from_site can change some instrument's
    outcome statistics at to_site, scanning the CPTP spanning set at every
    other site."""
    fi = w.registry.index(from_site)
    ti = w.registry.index(to_site)
    if fi == ti:
        raise ValueError("from_site and to_site must differ")
    spanning = _spanning_stacks(w.registry)
    for probe in _probe_instruments(w.registry.sites[ti]):
        stacks = list(spanning)
        stacks[ti] = instrument_choi_stack(probe)
        t = contract_site_stacks(w, stacks)
        # axes: one per site; outcome axis at ti, scanned channel axis at fi
        t = np.moveaxis(t, (fi, ti), (-2, -1))
        t = t.reshape(-1, t.shape[-2], t.shape[-1])
        tv = 0.5 * np.sum(
            np.abs(t[:, :, None, :] - t[:, None, :, :]), axis=-1
        )
        if float(np.max(tv)) > tol:
            return True
    return False


def _strict_pair(w: ProcessMatrix, a: str, b: str, tol: float) -> bool:
    """Search the prepare/measure catalogue for a deterministic bit from a to b."""
    reg = w.registry
    ai, bi = reg.index(a), reg.index(b)
    site_a, site_b = reg.sites[ai], reg.sites[bi]
    idents = []
    for k, s in enumerate(reg.sites):
        if k in (ai, bi):
            idents.append(None)
        else:
            if s.d_in != s.d_out:
                raise ValueError("non-isomorphic intermediate sites unsupported")
            idents.append(identity_choi(s.d_in).mat.array[None, :, :])
    enc_bases = ["z", "fourier"]
    dec_bases = ["z", "fourier"]
    dec_reprep = basis_vectors("z", site_b.d_out)[0]
    for enc in enc_bases:
        vecs = basis_vectors(enc, site_a.d_out)
        for flip in (False, True):
            pair = [vecs[1], vecs[0]] if flip else [vecs[0], vecs[1]]
            enc_stack = np.stack(
                [prepare_channel(v, site_a.d_in).mat.array for v in pair]
            )
            for dec in dec_bases:
                dvecs = basis_vectors(dec, site_b.d_in)
                dec_ins = measure_reprepare_instrument(dvecs, dec_reprep)
                stacks = list(idents)
                stacks[ai] = enc_stack
                stacks[bi] = instrument_choi_stack(dec_ins)
                t = contract_site_stacks(w, stacks)
                t = np.moveaxis(t, (ai, bi), (0, 1)).reshape(2, -1)
                if abs(t[0, 0] - 1.0) <= tol and abs(t[1, 1] - 1.0) <= tol:
                    return True
    return False


def is_causally_strict(
    w: ProcessMatrix, order: Sequence[str], tol: float = SIGNAL_TOL
) -> bool:
    """True iff every adjacent pair in the order admits a deterministic
    prepare/measure bit (one noiseless bit of forward capacity)."""
    seq = check_causal_order(order, w.registry)
    for j in range(len(seq)):
        for i in range(j):
            if signals(w, seq[j], seq[i], tol):
                raise ValueError(
                    f"order {seq} incompatible: {seq[j]} signals to {seq[i]}"
                )
    return all(
        _strict_pair(w, seq[k], seq[k + 1], tol) for k in range(len(seq) - 1)
    )
