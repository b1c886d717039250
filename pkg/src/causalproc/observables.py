"""Causal classes and the three observability conditions.

Reproduces, mechanically: the permuted-process ensembles and their pairwise
discrimination, the dimension-counting obstruction to joint discrimination
(including the permutation-channel analogue), and the Pauli-linked two-class
construction whose uniform mixtures coincide.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import EXACT_TOL, SUPPORT_TOL
from .linalg import ComplexMatrix, trace_distance
from .objects import DensityOperator, pauli_channel, permutation_dephasing_channel
from .processes import (
    ProcessMatrix,
    SiteRegistry,
    is_causally_strict,
    markov_process,
    permute_sites,
    validate_process,
)
from .discrimination import (
    Intervention,
    parity_protocol,
    perfectly_discriminates,
    run,
)


@dataclass(frozen=True, eq=False)
class CausalClass:
    """A labelled set of processes sharing one causal order."""

    label: str
    members: tuple[ProcessMatrix, ...]
    order: tuple[str, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("class needs at least one member")
        reg = members[0].registry
        for m in members:
            if m.registry.labels != reg.labels:
                raise ValueError("class members must share one registry")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "order", tuple(self.order))

    @property
    def registry(self) -> SiteRegistry:
        return self.members[0].registry

    def validate(self) -> bool:
        """Every member valid, compatible with the class order, and strict."""
        return all(
            validate_process(m).passed and is_causally_strict(m, self.order)
            for m in self.members
        )


@dataclass(frozen=True, eq=False)
class ClassRepresentative:
    """Strictly positive convex mixture over a class's members."""

    weights: tuple[float, ...]
    mix: ProcessMatrix


def class_representative(
    c: CausalClass, weights: Sequence[float] | None = None
) -> ClassRepresentative:
    if weights is None:
        weights = [1.0 / len(c.members)] * len(c.members)
    weights = tuple(float(x) for x in weights)
    if len(weights) != len(c.members):
        raise ValueError("need one weight per member")
    if any(x <= 0 for x in weights):
        raise ValueError(f"weights must be strictly positive, got {weights}")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {sum(weights)}, not 1")
    mat = sum(
        x * m.mat.array for x, m in zip(weights, c.members)
    )
    mix = ProcessMatrix(
        ComplexMatrix(mat, c.members[0].mat.dims), c.registry, c.order
    )
    return ClassRepresentative(weights, mix)


def permuted_ensemble(starting: ProcessMatrix, n: int | None = None) -> list[CausalClass]:
    """All site permutations of a strict Markovian starting process, as
    singleton classes enumerated lexicographically."""
    reg = starting.registry
    if n is None:
        n = len(reg)
    if n != len(reg):
        raise ValueError(f"starting process has {len(reg)} sites, not {n}")
    if starting.order is None:
        raise ValueError("starting process must carry its causal order")
    if not is_causally_strict(starting, starting.order):
        raise ValueError("starting process is not causally strict")
    classes = []
    for p in itertools.permutations(range(n)):
        member = permute_sites(starting, p)
        classes.append(CausalClass("".join(member.order), (member,), member.order))
    return classes


def order_discrimination_protocol(
    registry: SiteRegistry,
    order1: Sequence[str],
    order2: Sequence[str],
    basis: str = "z",
):
    """Pick a site pair ordered oppositely by the two causal orders and build
    the parity protocol for it.  Returns ((site, flip_site), intervention)."""
    o1, o2 = list(order1), list(order2)
    for s, t in itertools.combinations(registry.labels, 2):
        if (o1.index(s) < o1.index(t)) != (o2.index(s) < o2.index(t)):
            return (s, t), parity_protocol(
                registry, (s, t), flip_site=t, basis=basis
            )
    raise ValueError(f"orders {order1} and {order2} are identical")


@dataclass(frozen=True)
class Condition1Report:
    entries: tuple[dict, ...]
    passed: bool

    def to_dict(self) -> dict:
        return {"entries": list(self.entries), "passed": self.passed}


ProtocolProvider = Callable[
    [CausalClass, ProcessMatrix, CausalClass, ProcessMatrix],
    "Intervention | None",
]


def check_condition1(
    classes: Sequence[CausalClass], protocol: ProtocolProvider
) -> Condition1Report:
    """Check sharpness: every cross-class member pair perfectly discriminated
    by the intervention the provider supplies for it."""
    entries = []
    passed = True
    for i, ci in enumerate(classes):
        for cj in classes[i + 1:]:
            for ki, wi in enumerate(ci.members):
                for kj, wj in enumerate(cj.members):
                    iv = protocol(ci, wi, cj, wj)
                    if iv is None:
                        status = "no_protocol"
                        passed = False
                    elif perfectly_discriminates(iv, wi, wj):
                        status = "disjoint"
                    else:
                        status = "overlap"
                        passed = False
                    entries.append({
                        "class_a": ci.label, "member_a": ki,
                        "class_b": cj.label, "member_b": kj,
                        "status": status,
                    })
    return Condition1Report(tuple(entries), passed)


# ---------------------------------------------------------------------------
# Counting bound


@dataclass(frozen=True)
class CountingBound:
    orders: int
    image_cap: int
    obstructed: bool
    min_d: int

    def to_dict(self) -> dict:
        return {
            "orders": self.orders,
            "image_cap": self.image_cap,
            "obstructed": self.obstructed,
            "min_d": self.min_d,
        }


def _min_dim_exact(n: int, fact: int) -> int:
    """Smallest integer d with d**(4n) >= n!, by exact comparison."""
    if fact <= 1:
        return 1
    d = max(1, int(round(math.exp(math.lgamma(n + 1) / (4 * n)))))
    while d ** (4 * n) < fact:
        d += 1
    while d > 1 and (d - 1) ** (4 * n) >= fact:
        d -= 1
    return d


def counting_bound(n: int, d: int) -> CountingBound:
    """Compare n! causal orders against the d**(4n)-dimensional image cap of
    any outcome-encoding intervention, with exact integer arithmetic."""
    if n < 1 or d < 2:
        raise ValueError("need n >= 1 and d >= 2")
    fact = math.factorial(n)
    cap = d ** (4 * n)
    return CountingBound(fact, cap, fact > cap, _min_dim_exact(n, fact))


def smallest_obstructed_n(d: int, n_limit: int = 10_000) -> int:
    """Smallest n with n! > d**(4n), by exact search."""
    fact = 1
    for n in range(1, n_limit + 1):
        fact *= n
        if fact > d ** (4 * n):
            return n
    raise RuntimeError(f"no obstruction found below n = {n_limit}")


def min_dimension_sweep(n_max: int) -> list[int]:
    """min_d for every n in 1..n_max.

    Floating-point prefilter with exact big-integer fallback near the
    boundary, so the result matches the exact definition everywhere.
    """
    out = []
    fact = 1
    log_fact = 0.0
    for n in range(1, n_max + 1):
        fact *= n
        log_fact += math.log(n)

        def at_least(dd: int) -> bool:
            gap = 4 * n * math.log(dd) - log_fact
            if abs(gap) < 1e-6 * max(1.0, log_fact):
                return dd ** (4 * n) >= fact
            return gap >= 0

        d = max(1, int(round(math.exp(log_fact / (4 * n)))))
        while not at_least(d):
            d += 1
        while d > 1 and at_least(d - 1):
            d -= 1
        out.append(d)
    return out


# ---------------------------------------------------------------------------
# Channel analogue of the condition-2 obstruction


@dataclass(frozen=True, eq=False)
class ChannelDefectRecord:
    gram: np.ndarray           # Hilbert-Schmidt overlaps of the d! outputs
    rank: int
    defect: float              # sum of off-diagonal overlaps

    def to_dict(self) -> dict:
        return {"rank": self.rank, "defect": self.defect}


def channel_orthogonality_defect(d: int, inp: DensityOperator) -> ChannelDefectRecord:
    """Push one input (system x ancilla) through all d! permutation-dephasing
    channels and measure how far the outputs are from mutual orthogonality."""
    if d < 2:
        raise ValueError("need d >= 2")
    dims = inp.mat.dims
    if len(dims) != 2 or dims[0] != d:
        raise ValueError(f"input must live on (system of dim {d}, ancilla)")
    d_anc = dims[1]
    t = inp.mat.array.reshape(d, d_anc, d, d_anc)
    blocks = np.stack([t[i, :, i, :] for i in range(d)])  # (d, anc, anc)
    overlaps = np.real(np.einsum("iab,jba->ij", blocks, blocks))
    perms = list(itertools.permutations(range(d)))
    inv = [np.argsort(p) for p in perms]
    m = len(perms)
    gram = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            gram[a, b] = overlaps[inv[a], inv[b]].sum()
    eigs = np.linalg.eigvalsh(gram)
    rank = int(np.sum(eigs > 1e-10 * max(1.0, eigs[-1])))
    defect = float(np.sum(gram) - np.trace(gram))
    return ChannelDefectRecord(gram, rank, defect)


# ---------------------------------------------------------------------------
# Pauli-linked two-site classes (condition 3)

_BIT_FLIP = {
    # whether each Pauli flips the bit label of each measurement basis
    "z": {"I": 0, "X": 1, "Y": 1, "Z": 0},
    "x": {"I": 0, "X": 0, "Y": 1, "Z": 1},
    "y": {"I": 0, "X": 1, "Y": 0, "Z": 1},
}

PAULI_LABELS = ("I", "X", "Y", "Z")


def compensation_basis(p: str, q: str) -> str:
    """Measurement basis in which both Pauli links act as plain bit
    relabelings of the same parity, making the parity protocol exact."""
    for basis in ("z", "x", "y"):
        if _BIT_FLIP[basis][p] == _BIT_FLIP[basis][q]:
            return basis
    raise RuntimeError("unreachable: some basis always matches")


def pauli_linked_classes(d: int = 2) -> tuple[CausalClass, CausalClass]:
    """Two opposite-order classes of two-site processes linked by each Pauli."""
    if d != 2:
        raise ValueError("only d = 2 (Pauli set) is implemented")
    reg = SiteRegistry.qubit_sites(2)
    mixed = DensityOperator.maximally_mixed((2,))
    forward = tuple(
        markov_process(reg, mixed, [pauli_channel(p)], ("A", "B"))
        for p in PAULI_LABELS
    )
    backward = tuple(
        markov_process(reg, mixed, [pauli_channel(p)], ("B", "A"))
        for p in PAULI_LABELS
    )
    return (
        CausalClass("A<B", forward, ("A", "B")),
        CausalClass("B<A", backward, ("B", "A")),
    )


def pauli_pair_protocol(registry: SiteRegistry, p: str, q: str) -> Intervention:
    """Parity protocol discriminating the p-linked A<B process from the
    q-linked B<A process, in the compensating basis."""
    return parity_protocol(
        registry, ("A", "B"), flip_site="B", basis=compensation_basis(p, q)
    )


@dataclass(frozen=True, eq=False)
class Condition3Result:
    condition1: Condition1Report
    mixture_distance: float
    condition3_violated: bool

    def to_dict(self) -> dict:
        return {
            "condition1": self.condition1.to_dict(),
            "mixture_distance": self.mixture_distance,
            "condition3_violated": self.condition3_violated,
        }


def condition3_counterexample(d: int = 2) -> Condition3Result:
    """Two sharp opposite-order classes whose uniform mixtures coincide:
    every cross pair is perfectly discriminable, yet no intervention can
    separate the classes as wholes."""
    forward, backward = pauli_linked_classes(d)
    reg = forward.registry

    def provider(ci, wi, cj, wj):
        p = PAULI_LABELS[ci.members.index(wi)]
        q = PAULI_LABELS[cj.members.index(wj)]
        return pauli_pair_protocol(reg, p, q)

    cond1 = check_condition1([forward, backward], provider)
    mix_f = class_representative(forward).mix
    mix_b = class_representative(backward).mix
    dist = trace_distance(mix_f.mat, mix_b.mat)
    violated = cond1.passed and dist <= EXACT_TOL
    return Condition3Result(cond1, dist, violated)


# ---------------------------------------------------------------------------
# Delta classification


@dataclass(frozen=True)
class DeltaReport:
    entries: tuple[dict, ...]
    passed: bool

    def to_dict(self) -> dict:
        return {"entries": list(self.entries), "passed": self.passed}


def delta_classify(
    iv: Intervention, classes: Sequence[CausalClass], tol: float = SUPPORT_TOL
) -> DeltaReport:
    """Check that outcome j fires with probability 1 exactly on members of
    class j."""
    labels = [c.label for c in classes]
    if set(iv.outcomes) != set(labels):
        raise ValueError(
            f"intervention outcomes {iv.outcomes} do not match class labels {labels}"
        )
    entries = []
    passed = True
    for c in classes:
        for k, m in enumerate(c.members):
            dist = run(m, iv)
            p_own = dist[c.label]
            ok = abs(p_own - 1.0) <= tol
            passed = passed and ok
            entries.append({
                "class": c.label, "member": k,
                "p_own_outcome": p_own, "passed": ok,
            })
    return DeltaReport(tuple(entries), passed)
