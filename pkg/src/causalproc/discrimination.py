"""Single-shot interventions on processes and perfect discrimination.

An intervention is an outcome-indexed family of CP maps from all site inputs
to all site outputs whose sum is a non-signalling channel.  Branches are
stored extensionally as Choi matrices over (site inputs..., site outputs...)
in registry order; product strategies additionally keep their per-site
factors for fast contraction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import EXACT_TOL, PSD_TOL, SIGNAL_TOL, SUPPORT_TOL
from .linalg import (
    ComplexMatrix,
    kron_all,
    min_eigenvalue,
    partial_trace,
    permute_subsystems,
)
from .objects import ChoiMap, Instrument, Povm, identity_choi, link_choi
from .catalogues import basis_vectors, instrument_choi_stack, measure_forward_instrument
from .processes import ProcessMatrix, SiteRegistry, contract_site_stacks


class WiringSignallingError(ValueError):
    """The requested strategy wiring lets one site signal to another."""


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities indexed by outcome labels."""

    outcomes: tuple
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (len(self.outcomes),):
            raise ValueError("need one probability per outcome")
        if np.min(probs) < -1e-12:
            raise ValueError(f"negative probability {np.min(probs)}")
        if abs(float(np.sum(probs)) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {np.sum(probs)}, not 1")
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "outcomes", tuple(self.outcomes))

    def support(self, threshold: float = SUPPORT_TOL) -> set:
        return {
            o for o, p in zip(self.outcomes, self.probs) if p > threshold
        }

    def __getitem__(self, outcome) -> float:
        return float(self.probs[self.outcomes.index(outcome)])

    def to_dict(self) -> dict:
        return {"outcomes": [repr(o) for o in self.outcomes],
                "probs": [float(p) for p in self.probs]}


def _interleave_perm(n: int) -> list[int]:
    # (in_1..in_n, out_1..out_n) -> (in_1, out_1, in_2, out_2, ...)
    perm = []
    for k in range(n):
        perm.extend((k, n + k))
    return perm


@dataclass(frozen=True, eq=False)
class Intervention:
    """Outcome-indexed CP maps from all site inputs to all site outputs."""

    registry: SiteRegistry
    outcomes: tuple
    branches: tuple[ChoiMap, ...] | None = None
    site_factors: tuple[Instrument, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if self.branches is None and self.site_factors is None:
            raise ValueError("need explicit branches or per-site factors")
        in_dims = tuple(s.d_in for s in self.registry.sites)
        out_dims = tuple(s.d_out for s in self.registry.sites)
        if self.branches is not None:
            branches = tuple(self.branches)
            if len(branches) != len(self.outcomes):
                raise ValueError("need one branch per outcome")
            for b in branches:
                if b.in_dims != in_dims or b.out_dims != out_dims:
                    raise ValueError(
                        f"branch dims {(b.in_dims, b.out_dims)} do not match "
                        f"registry {(in_dims, out_dims)}"
                    )
            object.__setattr__(self, "branches", branches)
        if self.site_factors is not None:
            factors = tuple(self.site_factors)
            if len(factors) != len(self.registry):
                raise ValueError("need one instrument per site")
            for s, f in zip(self.registry.sites, factors):
                if math.prod(f.in_dims) != s.d_in or math.prod(f.out_dims) != s.d_out:
                    raise ValueError(f"instrument does not fit site {s.label}")
            n_out = math.prod(len(f.branches) for f in factors)
            if n_out != len(self.outcomes):
                raise ValueError("outcome count must match the branch product")
            object.__setattr__(self, "site_factors", factors)

    def explicit_branches(self) -> tuple[ChoiMap, ...]:
        if self.branches is not None:
            return self.branches
        out = []
        for combo in itertools.product(*[f.branches for f in self.site_factors]):
            out.append(_product_branch(self.registry, combo))
        return tuple(out)

    def branch_sum(self) -> ChoiMap:
        if self.site_factors is not None:
            return _product_branch(
                self.registry, [f.total() for f in self.site_factors]
            )
        first = self.branches[0]
        total = sum(b.mat.array for b in self.branches)
        return ChoiMap(ComplexMatrix(total, first.mat.dims),
                       first.in_dims, first.out_dims)


def _product_branch(registry: SiteRegistry, per_site: Sequence[ChoiMap]) -> ChoiMap:
    """Choi of a tensor product of per-site maps, over (all ins, all outs)."""
    n = len(registry)
    mat = kron_all([c.mat for c in per_site])
    # subsystem order is (in_1, out_1, in_2, out_2, ...); move to canonical
    perm = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    mat = permute_subsystems(mat, perm)
    in_dims = tuple(s.d_in for s in registry.sites)
    out_dims = tuple(s.d_out for s in registry.sites)
    return ChoiMap(mat, in_dims, out_dims,
                   registry.labels, registry.labels)


@dataclass(frozen=True)
class InterventionReport:
    branch_min_eigenvalues: tuple[float, ...]
    tp_defect: float
    nosignalling_residuals: dict[str, float]
    passed: bool

    def to_dict(self) -> dict:
        return {
            "branch_min_eigenvalues": list(self.branch_min_eigenvalues),
            "tp_defect": self.tp_defect,
            "nosignalling_residuals": dict(self.nosignalling_residuals),
            "passed": self.passed,
        }


def _nosignalling_residual(total: ChoiMap, registry: SiteRegistry, site_idx: int) -> float:
    """Residual of the summed channel ignoring the chosen site's input after
    its output is discarded (Choi form of the no-signalling condition)."""
    n = len(registry)
    # trace out this site's output subsystem
    reduced = partial_trace(total.mat, [i for i in range(2 * n) if i != n + site_idx])
    d = registry.sites[site_idx].d_in
    k = reduced.num_subsystems
    rest = partial_trace(reduced, [i for i in range(k) if i != site_idx])
    expected = kron_all([
        ComplexMatrix(np.eye(d) / d, (d,)),
        rest,
    ])
    # move the identity factor back into the site's input slot
    perm = list(range(1, site_idx + 1)) + [0] + list(range(site_idx + 1, k))
    expected = permute_subsystems(expected, perm)
    return float(np.max(np.abs(reduced.array - expected.array)))


def validate_intervention(iv: Intervention, tol: float = PSD_TOL,
                          signal_tol: float = SIGNAL_TOL) -> InterventionReport:
    if iv.site_factors is not None:
        mins = tuple(
            min_eigenvalue(b.mat)
            for f in iv.site_factors
            for b in f.branches
        )
    else:
        mins = tuple(min_eigenvalue(b.mat) for b in iv.branches)
    total = iv.branch_sum()
    tp = total.tp_defect()
    residuals = {
        s.label: _nosignalling_residual(total, iv.registry, k)
        for k, s in enumerate(iv.registry.sites)
    }
    passed = (
        all(m >= -tol for m in mins)
        and tp <= tol
        and all(r <= signal_tol for r in residuals.values())
    )
    return InterventionReport(mins, tp, residuals, passed)


def from_product_strategy(
    registry: SiteRegistry,
    per_site: Sequence[Instrument],
    wiring: "SharedAncillaWiring | RoutedAncillaWiring | None" = None,
) -> Intervention:
    """Build an intervention from per-site instruments, optionally assisted by
    a shared ancilla.  Wirings that create inter-site signalling are rejected.
    """
    if wiring is None:
        outcomes = tuple(
            itertools.product(*[f.outcomes for f in per_site])
        )
        iv = Intervention(registry, outcomes, site_factors=tuple(per_site))
    else:
        iv = wiring.build(registry, per_site)
    report = validate_intervention(iv)
    if max(report.nosignalling_residuals.values()) > SIGNAL_TOL:
        raise WiringSignallingError(
            f"strategy signals between sites: residuals "
            f"{report.nosignalling_residuals}"
        )
    if not report.passed:
        raise ValueError(f"invalid intervention: {report.to_dict()}")
    return iv


def _plug_input_state(c: ChoiMap, slots: Sequence[int], state: ComplexMatrix) -> ChoiMap:
    """Fix the listed input subsystems of a map to a (joint) state."""
    slots = list(slots)
    k_in, k_out = len(c.in_dims), len(c.out_dims)
    k = k_in + k_out
    t = c.mat.tensor()
    labels_row = list(range(k))
    labels_col = list(range(k, 2 * k))
    st = state.tensor()
    s_row = [labels_row[s] for s in slots]
    s_col = [labels_col[s] for s in slots]
    keep_row = [labels_row[i] for i in range(k) if i not in slots]
    keep_col = [labels_col[i] for i in range(k) if i not in slots]
    res = np.einsum(t, labels_row + labels_col, st, s_row + s_col,
                    keep_row + keep_col)
    new_in = tuple(d for i, d in enumerate(c.in_dims) if i not in slots)
    side = math.prod(new_in + c.out_dims)
    return ChoiMap(ComplexMatrix(res.reshape(side, side), new_in + c.out_dims),
                   new_in, c.out_dims)


def _plug_output_effect(c: ChoiMap, slots: Sequence[int], effect: ComplexMatrix) -> ChoiMap:
    """Measure the listed output subsystems with a POVM effect and discard."""
    k_in, k_out = len(c.in_dims), len(c.out_dims)
    slots = [k_in + s for s in slots]
    k = k_in + k_out
    t = c.mat.tensor()
    labels_row = list(range(k))
    labels_col = list(range(k, 2 * k))
    et = effect.tensor()
    # weight E_{t' t} pairs the row slot index t with E's column index
    e_labels = [labels_col[s] for s in slots] + [labels_row[s] for s in slots]
    keep_row = [labels_row[i] for i in range(k) if i not in slots]
    keep_col = [labels_col[i] for i in range(k) if i not in slots]
    res = np.einsum(t, labels_row + labels_col, et, e_labels,
                    keep_row + keep_col)
    new_out = tuple(
        d for i, d in enumerate(c.out_dims) if k_in + i not in slots
    )
    side = math.prod(c.in_dims + new_out)
    return ChoiMap(ComplexMatrix(res.reshape(side, side), c.in_dims + new_out),
                   c.in_dims, new_out)


def _canonical_branch(
    registry: SiteRegistry, components: Sequence[ChoiMap]
) -> ChoiMap:
    """Kron labelled components and reorder subsystems to canonical
    (inputs in registry order, outputs in registry order)."""
    mats = []
    roles: list[tuple[str, str]] = []
    for c in components:
        if c.in_labels is None or c.out_labels is None:
            raise ValueError("components must carry site labels")
        mats.append(c.mat)
        roles.extend(("in", l) for l in c.in_labels)
        roles.extend(("out", l) for l in c.out_labels)
    big = kron_all(mats)
    perm = []
    for kind in ("in", "out"):
        for label in registry.labels:
            perm.append(roles.index((kind, label)))
    if sorted(perm) != list(range(len(roles))):
        raise ValueError(f"components do not cover every site exactly once: {roles}")
    big = permute_subsystems(big, perm)
    in_dims = tuple(s.d_in for s in registry.sites)
    out_dims = tuple(s.d_out for s in registry.sites)
    return ChoiMap(big, in_dims, out_dims, registry.labels, registry.labels)


@dataclass(frozen=True)
class SharedAncillaWiring:
    """Entangled ancilla shared across sites, one share routed through each
    extended instrument, with a final joint measurement on all shares.

    ``extended`` maps site labels to extended instruments acting on
    (site_in, share) -> (site_out, share); unlisted sites use their plain
    instrument from ``per_site``.
    """

    ancilla_state: ComplexMatrix  # dims = one share per extended site, in registry order
    extended: dict[str, Instrument]
    final_povm: Povm

    def build(self, registry: SiteRegistry, per_site: Sequence[Instrument]) -> Intervention:
        ext_labels = [l for l in registry.labels if l in self.extended]
        if set(self.extended) - set(registry.labels):
            raise ValueError("extended instruments for unknown sites")
        share_dims = self.ancilla_state.dims
        if len(share_dims) != len(ext_labels):
            raise ValueError("one ancilla share per extended site required")
        branch_lists = []
        outcome_lists = []
        for k, label in enumerate(registry.labels):
            ins = self.extended.get(label, per_site[k])
            branch_lists.append(ins.branches)
            outcome_lists.append(ins.outcomes)
        outcomes = []
        branches = []
        for combo_idx in itertools.product(
            *[range(len(b)) for b in branch_lists]
        ):
            comps = []
            for k, label in enumerate(registry.labels):
                b = branch_lists[k][combo_idx[k]]
                if label in self.extended:
                    comps.append(ChoiMap(
                        b.mat, b.in_dims, b.out_dims,
                        (label, f"share:{label}"), (label, f"share:{label}"),
                    ))
                else:
                    comps.append(ChoiMap(
                        b.mat, b.in_dims, b.out_dims, (label,), (label,)
                    ))
            for m, effect in enumerate(self.final_povm.effects):
                joint = _assemble_ancilla_branch(
                    registry, comps, ext_labels, self.ancilla_state, effect
                )
                branches.append(joint)
                outcomes.append(
                    tuple(outcome_lists[k][combo_idx[k]]
                          for k in range(len(registry))) + (m,)
                )
        return Intervention(registry, tuple(outcomes), branches=tuple(branches))


def _assemble_ancilla_branch(registry, comps, ext_labels, ancilla_state, effect):
    n = len(registry)
    mats = [c.mat for c in comps]
    roles = []
    for c in comps:
        roles.extend(("in", l) for l in c.in_labels)
        roles.extend(("out", l) for l in c.out_labels)
    big = kron_all(mats)
    # order: site ins, ancilla-share ins, site outs, ancilla-share outs
    perm = []
    for label in registry.labels:
        perm.append(roles.index(("in", label)))
    for label in ext_labels:
        perm.append(roles.index(("in", f"share:{label}")))
    for label in registry.labels:
        perm.append(roles.index(("out", label)))
    for label in ext_labels:
        perm.append(roles.index(("out", f"share:{label}")))
    big = permute_subsystems(big, perm)
    in_dims = tuple(s.d_in for s in registry.sites) + ancilla_state.dims
    out_dims = tuple(s.d_out for s in registry.sites) + ancilla_state.dims
    c = ChoiMap(big, in_dims, out_dims)
    n_sh = len(ext_labels)
    c = _plug_input_state(c, list(range(n, n + n_sh)), ancilla_state)
    c = _plug_output_effect(c, list(range(n, n + n_sh)), effect)
    return ChoiMap(c.mat, c.in_dims, c.out_dims, registry.labels, registry.labels)


@dataclass(frozen=True)
class RoutedAncillaWiring:
    """A single ancilla carried from one site to another (a comb).

    ``sender`` acts on site_in -> (site_out, carrier); ``receiver`` on
    (site_in, carrier) -> site_out.  Such a wiring presumes a causal order
    between the two sites, so building it always fails the no-signalling
    check; it exists to exercise that rejection path.
    """

    route: tuple[str, str]
    sender: Instrument
    receiver: Instrument

    def build(self, registry: SiteRegistry, per_site: Sequence[Instrument]) -> Intervention:
        a, b = self.route
        branches = []
        outcomes = []
        other = [
            (k, label) for k, label in enumerate(registry.labels)
            if label not in self.route
        ]
        other_branches = [
            [(o, br) for o, br in zip(per_site[k].outcomes, per_site[k].branches)]
            for k, _ in other
        ]
        for sa, ba in zip(self.sender.outcomes, self.sender.branches):
            for sb, bb in zip(self.receiver.outcomes, self.receiver.branches):
                linked = link_choi(ba, bb, a_out=1, b_in=1)
                linked = ChoiMap(linked.mat, linked.in_dims, linked.out_dims,
                                 (a, b), (a, b))
                for combo in itertools.product(*other_branches):
                    comps = [linked]
                    label_out = {}
                    for (k, label), (o, br) in zip(other, combo):
                        comps.append(ChoiMap(br.mat, br.in_dims, br.out_dims,
                                             (label,), (label,)))
                        label_out[label] = o
                    branches.append(_canonical_branch(registry, comps))
                    outcomes.append(
                        tuple(
                            sa if l == a else sb if l == b else label_out[l]
                            for l in registry.labels
                        )
                    )
        return Intervention(registry, tuple(outcomes), branches=tuple(branches))


def run(w: ProcessMatrix, iv: Intervention) -> OutcomeDistribution:
    """Outcome distribution of an intervention on a process."""
    if iv.registry.labels != w.registry.labels:
        raise ValueError("intervention and process registries differ")
    if iv.site_factors is not None:
        stacks = [instrument_choi_stack(f) for f in iv.site_factors]
        t = contract_site_stacks(w, stacks)
        probs = t.reshape(-1)
    else:
        n = len(w.registry)
        perm = _interleave_perm(n)
        probs = np.empty(len(iv.branches))
        for i, b in enumerate(iv.branches):
            g = permute_subsystems(b.mat, perm)
            probs[i] = float(np.real(np.sum(w.mat.array * g.array)))
    probs = np.where(np.abs(probs) < 1e-13, 0.0, probs)
    return OutcomeDistribution(iv.outcomes, probs)


def perfectly_discriminates(
    iv: Intervention, w: ProcessMatrix, v: ProcessMatrix,
    threshold: float = SUPPORT_TOL,
) -> bool:
    """True iff the outcome supports on the two processes are disjoint."""
    pw = run(w, iv)
    pv = run(v, iv)
    return not (pw.support(threshold) & pv.support(threshold))


def parity_protocol(
    registry: SiteRegistry,
    pair: tuple[str, str],
    flip_site: str,
    basis: str = "z",
) -> Intervention:
    """Measure-and-forward at two sites (one forwarding the flipped bit),
    identity channels everywhere else.

    Matching bits certify that the non-flipping site came first; differing
    bits certify the flipping site came first.
    """
    a, b = pair
    if flip_site not in pair:
        raise ValueError("flip_site must be one of the pair")
    vecs = basis_vectors(basis, 2)
    per_site = []
    for s in registry.sites:
        if s.label in pair:
            if (s.d_in, s.d_out) != (2, 2):
                raise ValueError("parity protocol needs qubit pair sites")
            per_site.append(
                measure_forward_instrument(vecs, flip=(s.label == flip_site))
            )
        else:
            if s.d_in != s.d_out:
                raise ValueError("fill sites must be isomorphic for identity fill")
            per_site.append(Instrument((identity_choi(s.d_in),)))
    return from_product_strategy(registry, per_site)


def pair_bits(iv_outcome: tuple, registry: SiteRegistry, pair: tuple[str, str]) -> tuple[int, int]:
    """Extract the two pair-site bits from a parity-protocol outcome."""
    return (
        iv_outcome[registry.index(pair[0])],
        iv_outcome[registry.index(pair[1])],
    )


def coarse_grain(iv: Intervention, label_fn: Callable) -> Intervention:
    """Merge outcomes that map to the same label, summing their branches."""
    branches = iv.explicit_branches()
    merged: dict = {}
    order: list = []
    for o, b in zip(iv.outcomes, branches):
        label = label_fn(o)
        if label not in merged:
            merged[label] = np.zeros_like(b.mat.array)
            order.append(label)
        merged[label] = merged[label] + b.mat.array
    first = branches[0]
    new_branches = tuple(
        ChoiMap(ComplexMatrix(merged[l], first.mat.dims),
                first.in_dims, first.out_dims)
        for l in order
    )
    return Intervention(iv.registry, tuple(order), branches=new_branches)


def encode_outcomes(iv: Intervention) -> ChoiMap:
    """Encode an intervention's outcomes into an orthonormal basis of a
    result space: a single deterministic map whose output carries
    |i><i| (x) (branch-i output)."""
    branches = iv.explicit_branches()
    r = len(branches)
    p_in = math.prod(b for b in branches[0].in_dims)
    p_out = math.prod(b for b in branches[0].out_dims)
    enc = np.zeros((p_in, r, p_out, p_in, r, p_out), dtype=np.complex128)
    for i, b in enumerate(branches):
        c4 = b.mat.array.reshape(p_in, p_out, p_in, p_out)
        enc[:, i, :, :, i, :] = c4
    side = p_in * r * p_out
    in_dims = branches[0].in_dims
    out_dims = (r,) + branches[0].out_dims
    return ChoiMap(
        ComplexMatrix(enc.reshape(side, side), in_dims + out_dims),
        in_dims, out_dims,
    )


def result_space_distribution(w: ProcessMatrix, encoded: ChoiMap, outcomes=None) -> OutcomeDistribution:
    """Read the result space of an encoded intervention in the computational
    basis; recovers ``run`` exactly."""
    n = len(w.registry)
    if len(encoded.out_dims) != n + 1 or len(encoded.in_dims) != n:
        raise ValueError("expected an encoded intervention with a result space")
    r = encoded.out_dims[0]
    p_in = math.prod(encoded.in_dims)
    p_out = math.prod(encoded.out_dims[1:])
    enc = encoded.mat.array.reshape(p_in, r, p_out, p_in, r, p_out)
    in_dims = encoded.in_dims
    out_dims = encoded.out_dims[1:]
    perm = _interleave_perm(n)
    probs = np.empty(r)
    for i in range(r):
        c4 = enc[:, i, :, :, i, :]
        side = p_in * p_out
        cm = ComplexMatrix(c4.reshape(side, side), in_dims + out_dims)
        g = permute_subsystems(cm, perm)
        probs[i] = float(np.real(np.sum(w.mat.array * g.array)))
    probs = np.where(np.abs(probs) < 1e-13, 0.0, probs)
    return OutcomeDistribution(tuple(outcomes) if outcomes is not None else tuple(range(r)), probs)
