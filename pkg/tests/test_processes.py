"""Process matrices against an independent Kraus-circuit oracle."""

import itertools

import numpy as np
import pytest

from causalproc.linalg import ComplexMatrix, dag, kron_all, permute_subsystems
from causalproc.objects import (
    ChoiMap,
    DensityOperator,
    Instrument,
    choi_from_kraus,
    depolarizing_choi,
    identity_choi,
    pauli_channel,
)
from causalproc.catalogues import cptp_spanning_chois
from causalproc.processes import (
    ProcessMatrix,
    Site,
    SiteRegistry,
    born_probability,
    contract_site_stacks,
    fully_mixed_process,
    is_causally_strict,
    markov_process,
    permute_sites,
    signals,
    validate_process,
)

MIXED = DensityOperator.maximally_mixed((2,))


# ---------------------------------------------------------------------------
# Oracle: simulate the ordered circuit with Kraus operators recovered from
# each Choi matrix by eigendecomposition — no shared code with the package's
# contraction machinery.


def _kraus_from_choi(c: np.ndarray, d_in: int, d_out: int):
    vals, vecs = np.linalg.eigh((c + dag(c)) / 2)
    out = []
    for lam, v in zip(vals, vecs.T):
        if lam > 1e-12:
            out.append(np.sqrt(lam) * v.reshape(d_in, d_out).T)
    return out


def _apply_kraus(c: np.ndarray, d_in: int, d_out: int, rho: np.ndarray):
    return sum(
        (k @ rho @ dag(k) for k in _kraus_from_choi(c, d_in, d_out)),
        np.zeros((d_out, d_out), dtype=np.complex128),
    )


def _circuit_prob(initial, links, site_branches):
    """Probability of one branch choice: push the state through branch, link,
    branch, link, ..., branch; the final trace is the probability."""
    rho = initial
    for k, br in enumerate(site_branches):
        d = rho.shape[0]
        rho = _apply_kraus(br, d, br.shape[0] // d, rho)
        if k < len(links):
            lk = links[k]
            d = rho.shape[0]
            rho = _apply_kraus(lk, d, lk.shape[0] // d, rho)
    return float(np.real(np.trace(rho)))


def _random_cptp_choi(rng, d=2, n_kraus=2):
    ks = rng.standard_normal((n_kraus, d, d)) + 1j * rng.standard_normal((n_kraus, d, d))
    total = sum(dag(k) @ k for k in ks)
    vals, vecs = np.linalg.eigh(total)
    root_inv = (vecs / np.sqrt(vals)) @ dag(vecs)
    return choi_from_kraus([k @ root_inv for k in ks])


def _random_instrument(rng, d=2):
    """Two-outcome instrument splitting a random channel by a random effect."""
    c = _random_cptp_choi(rng, d, n_kraus=3)
    ks = _kraus_from_choi(c.mat.array, d, d)
    lam = rng.uniform(0.2, 0.8)
    b0 = choi_from_kraus([np.sqrt(lam) * k for k in ks])
    b1 = choi_from_kraus([np.sqrt(1 - lam) * k for k in ks])
    return Instrument((b0, b1))


# ---------------------------------------------------------------------------
# construction and validity


def test_identity_chain_trace_and_validity():
    reg = SiteRegistry.qubit_sites(3)
    w = markov_process(reg, MIXED, [identity_choi(2)] * 2, reg.labels)
    assert w.mat.trace() == pytest.approx(reg.total_out_dim())
    report = validate_process(w)
    assert report.passed and not report.failures()


def test_single_site_markov_process():
    reg = SiteRegistry((Site("A", 2, 2),))
    w = markov_process(reg, MIXED, [], ("A",))
    want = np.kron(np.eye(2) / 2, np.eye(2))
    assert np.allclose(w.mat.array, want, atol=1e-14)


def test_fully_mixed_process_is_valid_but_silent():
    reg = SiteRegistry.qubit_sites(2)
    w = fully_mixed_process(reg)
    assert validate_process(w).passed
    assert not signals(w, "A", "B")
    assert not signals(w, "B", "A")
    assert not is_causally_strict(w, ("A", "B"))


def test_markov_process_rejects_mismatched_links():
    reg = SiteRegistry.qubit_sites(3)
    with pytest.raises(ValueError):
        markov_process(reg, MIXED, [identity_choi(2)], reg.labels)
    with pytest.raises(ValueError):
        markov_process(reg, MIXED, [identity_choi(3)] * 2, reg.labels)


def test_two_way_identity_wiring_is_not_a_process():
    # Identity channel A_out -> B_in together with identity B_out -> A_in:
    # a causal loop.  PSD and correctly normalised in trace, but total
    # probability is not 1 for all product channels.
    reg = SiteRegistry.qubit_sites(2)
    fwd = identity_choi(2).mat  # over (A_out, B_in)
    bwd = identity_choi(2).mat  # over (B_out, A_in)
    loop = kron_all([fwd, bwd])  # (A_out, B_in, B_out, A_in)
    loop = permute_subsystems(loop, [3, 0, 1, 2])  # -> (A_in, A_out, B_in, B_out)
    w = ProcessMatrix(loop, reg)
    report = validate_process(w)
    assert not report.passed
    assert "born_normalisation" in report.failures()


# ---------------------------------------------------------------------------
# Born rule vs the circuit oracle


def test_born_probability_matches_circuit_oracle():
    rng = np.random.default_rng(42)
    for n in (2, 3):
        reg = SiteRegistry.qubit_sites(n)
        for order in itertools.permutations(reg.labels):
            links = [_random_cptp_choi(rng) for _ in range(n - 1)]
            w = markov_process(reg, MIXED, links, order)
            instruments = [_random_instrument(rng) for _ in range(n)]
            # compare every joint branch choice
            for combo in itertools.product(*[ins.branches for ins in instruments]):
                p = born_probability(w, combo)
                seq_branches = [
                    combo[reg.index(label)].mat.array for label in order
                ]
                want = _circuit_prob(
                    MIXED.mat.array,
                    [l.mat.array for l in links],
                    seq_branches,
                )
                assert p == pytest.approx(want, abs=1e-12)


def test_contract_convention_against_direct_trace():
    # Tr[W (M_1 (x) M_2)^T] computed with raw numpy, no package contraction.
    rng = np.random.default_rng(43)
    reg = SiteRegistry.qubit_sites(2)
    w = markov_process(reg, MIXED, [_random_cptp_choi(rng)], ("B", "A"))
    m1 = _random_cptp_choi(rng).mat.array
    m2 = _random_cptp_choi(rng).mat.array
    want = float(np.real(np.trace(w.mat.array @ np.kron(m1, m2).T)))
    got = born_probability(w, [
        ChoiMap(ComplexMatrix(m1, (2, 2)), (2,), (2,)),
        ChoiMap(ComplexMatrix(m2, (2, 2)), (2,), (2,)),
    ])
    assert got == pytest.approx(want, abs=1e-12)


def test_born_is_linear_in_each_site():
    rng = np.random.default_rng(44)
    reg = SiteRegistry.qubit_sites(2)
    w = markov_process(reg, MIXED, [pauli_channel("X")], reg.labels)
    a, b, c = (_random_cptp_choi(rng) for _ in range(3))
    lam = 0.3
    mixed_choi = ChoiMap(
        ComplexMatrix(lam * a.mat.array + (1 - lam) * b.mat.array, (2, 2)),
        (2,), (2,),
    )
    lhs = born_probability(w, [mixed_choi, c])
    rhs = lam * born_probability(w, [a, c]) + (1 - lam) * born_probability(w, [b, c])
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_spanning_scan_shape():
    reg = SiteRegistry.qubit_sites(2)
    w = markov_process(reg, MIXED, [identity_choi(2)], reg.labels)
    t = contract_site_stacks(w, [cptp_spanning_chois(2, 2)] * 2)
    assert t.shape == (16, 16)
    assert np.max(np.abs(t - 1.0)) < 1e-10


# ---------------------------------------------------------------------------
# permutation


def test_permute_sites_roundtrip_and_order():
    reg = SiteRegistry.qubit_sites(3)
    w = markov_process(reg, MIXED, [pauli_channel("X"), pauli_channel("Z")],
                       ("A", "B", "C"))
    p = [2, 0, 1]  # A->slot2, B->slot0, C->slot1
    v = permute_sites(w, p)
    # A's content now sits at the slot labelled C, etc., so the causal
    # sequence of labels is C, A, B.
    assert v.order == ("C", "A", "B")
    inv = [1, 2, 0]
    back = permute_sites(v, inv)
    assert np.allclose(back.mat.array, w.mat.array, atol=1e-14)
    assert back.order == w.order


def test_permuted_probabilities_follow_the_sites():
    rng = np.random.default_rng(45)
    reg = SiteRegistry.qubit_sites(3)
    w = markov_process(reg, MIXED, [_random_cptp_choi(rng) for _ in range(2)],
                       reg.labels)
    p = [1, 2, 0]
    v = permute_sites(w, p)
    branches = [_random_cptp_choi(rng) for _ in range(3)]
    moved = [None] * 3
    for i in range(3):
        moved[p[i]] = branches[i]
    assert born_probability(w, branches) == pytest.approx(
        born_probability(v, moved), abs=1e-12
    )


def test_permute_sites_rejects_non_isomorphic():
    reg = SiteRegistry((Site("A", 2, 2), Site("B", 3, 3)))
    w = fully_mixed_process(reg)
    with pytest.raises(ValueError):
        permute_sites(w, [1, 0])


# ---------------------------------------------------------------------------
# signalling and strictness


@pytest.mark.parametrize("link_name", ["identity", "X", "Z"])
def test_unitary_chain_signals_exactly_forward(link_name):
    link = identity_choi(2) if link_name == "identity" else pauli_channel(link_name)
    reg = SiteRegistry.qubit_sites(3)
    order = ("B", "A", "C")
    w = markov_process(reg, MIXED, [link] * 2, order)
    pos = {l: i for i, l in enumerate(order)}
    for a, b in itertools.permutations(reg.labels, 2):
        assert signals(w, a, b) == (pos[a] < pos[b])


def test_depolarizing_link_blocks_signalling():
    reg = SiteRegistry.qubit_sites(3)
    w = markov_process(
        reg, MIXED, [identity_choi(2), depolarizing_choi(2)], reg.labels
    )
    assert signals(w, "A", "B")
    assert not signals(w, "B", "C")
    assert not signals(w, "A", "C")


@pytest.mark.parametrize("link_name", ["identity", "X", "Z"])
def test_unitary_chain_is_strict(link_name):
    link = identity_choi(2) if link_name == "identity" else pauli_channel(link_name)
    reg = SiteRegistry.qubit_sites(3)
    w = markov_process(reg, MIXED, [link] * 2, reg.labels)
    assert is_causally_strict(w, ("A", "B", "C"))


def test_depolarizing_chain_is_not_strict():
    reg = SiteRegistry.qubit_sites(2)
    w = markov_process(reg, MIXED, [depolarizing_choi(2)], reg.labels)
    assert not is_causally_strict(w, ("A", "B"))


def test_strictness_rejects_back_signalling_order():
    reg = SiteRegistry.qubit_sites(2)
    w = markov_process(reg, MIXED, [identity_choi(2)], ("A", "B"))
    with pytest.raises(ValueError):
        is_causally_strict(w, ("B", "A"))
