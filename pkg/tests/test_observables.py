"""Causal classes, counting bounds, and the observability conditions."""

import itertools
import math

import numpy as np
import pytest

from causalproc.linalg import ComplexMatrix, proj, trace_distance
from causalproc.objects import DensityOperator, identity_choi, pauli_channel
from causalproc.processes import SiteRegistry, markov_process
from causalproc.discrimination import coarse_grain, parity_protocol, run
from causalproc.observables import (
    PAULI_LABELS,
    CausalClass,
    channel_orthogonality_defect,
    check_condition1,
    class_representative,
    compensation_basis,
    condition3_counterexample,
    counting_bound,
    delta_classify,
    min_dimension_sweep,
    order_discrimination_protocol,
    pauli_linked_classes,
    pauli_pair_protocol,
    permuted_ensemble,
    smallest_obstructed_n,
)

MIXED = DensityOperator.maximally_mixed((2,))


def _identity_chain(n):
    reg = SiteRegistry.qubit_sites(n)
    return reg, markov_process(
        reg, MIXED, [identity_choi(2)] * (n - 1), reg.labels
    )


# ---------------------------------------------------------------------------
# ensembles and condition 1


def test_permuted_ensemble_enumeration():
    _, w = _identity_chain(3)
    classes = permuted_ensemble(w)
    assert [c.label for c in classes] == [
        "ABC", "ACB", "BAC", "BCA", "CAB", "CBA"
    ]
    # all members pairwise distinct
    for a, b in itertools.combinations(classes, 2):
        assert trace_distance(a.members[0].mat, b.members[0].mat) > 1e-6


def test_permuted_ensemble_requires_strictness():
    from causalproc.objects import depolarizing_choi

    reg = SiteRegistry.qubit_sites(2)
    soft = markov_process(reg, MIXED, [depolarizing_choi(2)], reg.labels)
    with pytest.raises(ValueError):
        permuted_ensemble(soft)


def test_order_discrimination_protocol_picks_an_inverted_pair():
    reg, _ = _identity_chain(3)
    (s, t), _ = order_discrimination_protocol(reg, ("A", "B", "C"), ("A", "C", "B"))
    assert (s, t) == ("B", "C")
    with pytest.raises(ValueError):
        order_discrimination_protocol(reg, ("A", "B", "C"), ("A", "B", "C"))


def test_condition1_holds_for_permuted_ensemble():
    reg, w = _identity_chain(3)
    classes = permuted_ensemble(w)

    def provider(ci, wi, cj, wj):
        _, iv = order_discrimination_protocol(reg, ci.order, cj.order)
        return iv

    report = check_condition1(classes, provider)
    assert report.passed
    assert len(report.entries) == 15
    assert all(e["status"] == "disjoint" for e in report.entries)


def test_condition1_fails_on_duplicated_class():
    reg, w = _identity_chain(2)
    c = CausalClass("AB", (w,), ("A", "B"))
    dup = CausalClass("AB2", (w,), ("A", "B"))
    report = check_condition1(
        [c, dup],
        lambda ci, wi, cj, wj: parity_protocol(reg, ("A", "B"), flip_site="B"),
    )
    assert not report.passed
    assert report.entries[0]["status"] == "overlap"


def test_condition1_reports_missing_protocol():
    reg, w = _identity_chain(2)
    v = permuted_ensemble(w)
    report = check_condition1([v[0], v[1]], lambda *args: None)
    assert not report.passed
    assert report.entries[0]["status"] == "no_protocol"


def test_class_representative_weights():
    fwd, _ = pauli_linked_classes()
    rep = class_representative(fwd)
    assert rep.weights == (0.25,) * 4
    with pytest.raises(ValueError):
        class_representative(fwd, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        class_representative(fwd, [0.5, 0.5])


# ---------------------------------------------------------------------------
# counting bound


def test_counting_bound_small_cases():
    b = counting_bound(4, 2)
    assert (b.orders, b.image_cap) == (24, 65536)
    assert not b.obstructed
    assert b.min_d == 2


def test_counting_bound_exact_arithmetic():
    for n in (1, 2, 5, 20, 41, 60):
        for d in (2, 3):
            b = counting_bound(n, d)
            assert b.orders == math.factorial(n)
            assert b.image_cap == d ** (4 * n)
            assert b.obstructed == (math.factorial(n) > d ** (4 * n))
            # min_d is the smallest d with d^{4n} >= n!
            assert b.min_d ** (4 * n) >= math.factorial(n)
            if b.min_d > 1:
                assert (b.min_d - 1) ** (4 * n) < math.factorial(n)


def test_smallest_obstructed_n_at_d2():
    n = smallest_obstructed_n(2)
    assert math.factorial(n) > 2 ** (4 * n)
    assert math.factorial(n - 1) <= 2 ** (4 * (n - 1))


def test_min_dimension_sweep_matches_exact_definition():
    sweep = min_dimension_sweep(200)
    for n, d in enumerate(sweep, start=1):
        fact = math.factorial(n)
        assert d ** (4 * n) >= fact
        if d > 1:
            assert (d - 1) ** (4 * n) < fact


# ---------------------------------------------------------------------------
# permutation-channel analogue


def test_channel_defect_vanishes_for_correlated_basis_input():
    arr = np.zeros((4, 4))
    arr[0, 0] = arr[3, 3] = 0.5
    inp = DensityOperator(ComplexMatrix(arr, (2, 2)))
    rec = channel_orthogonality_defect(2, inp)
    assert rec.defect <= 1e-12
    assert rec.rank == 2


def test_channel_defect_positive_for_coherent_input():
    plus = np.ones(2) / np.sqrt(2)
    inp = DensityOperator(ComplexMatrix(np.kron(proj(plus), proj(plus)), (2, 2)))
    rec = channel_orthogonality_defect(2, inp)
    assert rec.defect > 0.1


def test_channel_defect_gram_size():
    inp = DensityOperator.maximally_mixed((3, 2))
    rec = channel_orthogonality_defect(3, inp)
    assert rec.gram.shape == (6, 6)
    assert rec.defect > 1e-8  # mixed input cannot orthogonalise 6 outputs


# ---------------------------------------------------------------------------
# Pauli-linked classes and condition 3


def test_compensation_basis_equalises_parities():
    from causalproc.observables import _BIT_FLIP

    for p, q in itertools.product(PAULI_LABELS, repeat=2):
        basis = compensation_basis(p, q)
        assert _BIT_FLIP[basis][p] == _BIT_FLIP[basis][q]


def test_pauli_pair_protocols_discriminate_every_cross_pair():
    fwd, bwd = pauli_linked_classes()
    reg = fwd.registry
    for i, p in enumerate(PAULI_LABELS):
        for j, q in enumerate(PAULI_LABELS):
            iv = pauli_pair_protocol(reg, p, q)
            dw = run(fwd.members[i], iv)
            dv = run(bwd.members[j], iv)
            assert not (dw.support() & dv.support())


def test_pauli_mixtures_coincide():
    fwd, bwd = pauli_linked_classes()
    dist = trace_distance(
        class_representative(fwd).mix.mat, class_representative(bwd).mix.mat
    )
    assert dist <= 1e-12


def test_condition3_counterexample_verdict():
    res = condition3_counterexample()
    assert res.condition1.passed
    assert res.mixture_distance <= 1e-12
    assert res.condition3_violated


# ---------------------------------------------------------------------------
# delta classification


def _parity_classifier(reg, label_match, label_differ, basis="z"):
    iv = parity_protocol(reg, ("A", "B"), flip_site="B", basis=basis)
    return coarse_grain(
        iv, lambda o: label_match if o[0] == o[1] else label_differ
    )


def test_delta_classifier_separates_two_identity_classes():
    _, w = _identity_chain(2)
    classes = permuted_ensemble(w)  # labels AB, BA
    iv = _parity_classifier(classes[0].registry, "AB", "BA")
    report = delta_classify(iv, classes)
    assert report.passed


def test_single_basis_classifier_fails_on_pauli_classes():
    fwd, bwd = pauli_linked_classes()
    iv = _parity_classifier(fwd.registry, "A<B", "B<A", basis="z")
    report = delta_classify(iv, [fwd, bwd])
    assert not report.passed  # X and Y links flip the z-parity


def test_delta_classifier_label_mismatch():
    _, w = _identity_chain(2)
    classes = permuted_ensemble(w)
    iv = _parity_classifier(classes[0].registry, "good", "bad")
    with pytest.raises(ValueError):
        delta_classify(iv, classes)
