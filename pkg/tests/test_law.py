import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    delete_ball,
    deletion_pushforward,
    eppf_from_law,
    last_part_marginal,
    ordering_factor_sum_all_orders,
    rising,
    size_biased_triple,
    visit_probability,
)
from regcomp.decrement import (
    decrement_from_family,
    decrement_from_phi,
    degenerate_decrement,
    last_part_one_probability,
    two_param_decrement,
)
from regcomp.law import (
    CapExceeded,
    Composition,
    CompositionLaw,
    check_sampling_consistency,
    composition_probability,
    compositions,
    enumerate_law,
    eppf,
    first_part_law,
    green_matrix,
    green_matrix_formula,
    integer_partitions,
    last_part_law,
    ordering_factor_sum,
    sampling_extensions,
    singleton_frequency_moment,
    tripartite_moment,
    two_param_eppf,
)
from regcomp.phi_model import PRESETS, RAW, DiscreteMeasure, TwoParam, build_phi_table, myriads
from regcomp.scalar import FLOAT

EWENS1 = two_param_decrement(0, 1, 12)


# --------------------------------------------------------------------------
# compositions


def test_composition_parse_and_str():
    comp = Composition.parse("3-1-2")
    assert comp == (3, 1, 2) and str(comp) == "3-1-2" and comp.total == 6
    assert comp.tail_sums() == (6, 3, 2)


@pytest.mark.parametrize("bad", ["", "3--1", "0-2", "a", "-1"])
def test_composition_parse_rejects(bad):
    with pytest.raises(ValueError):
        Composition.parse(bad)


def test_composition_count_and_order():
    assert list(compositions(3)) == [(1, 1, 1), (1, 2), (2, 1), (3,)]
    for n in range(1, 11):
        comps = list(compositions(n))
        assert len(comps) == 2 ** (n - 1) == len(set(comps))
        assert all(sum(c) == n for c in comps)


def test_integer_partitions_counts():
    assert [len(list(integer_partitions(n))) for n in range(1, 11)] == [1, 2, 3, 5, 7, 11, 15, 22, 30, 42]


@given(st.lists(st.integers(1, 9), min_size=1, max_size=8))
def test_composition_roundtrip(parts):
    comp = Composition(parts)
    assert Composition.parse(str(comp)) == comp


# --------------------------------------------------------------------------
# product formula and enumeration


def test_product_formula_ewens():
    assert composition_probability(EWENS1, (1, 2)) == F(1, 6)


def test_single_part_probability_is_diagonal():
    q = two_param_decrement(F(1, 3), F(2, 5), 8)
    for n in range(1, 9):
        assert composition_probability(q, (n,)) == q[n, n]


@pytest.mark.parametrize("alpha", [F(1, 2), F(1, 3), F(3, 4)])
def test_alpha_zero_product_formula(alpha):
    q = two_param_decrement(alpha, 0, 7)
    for n in range(1, 8):
        for comp in compositions(n):
            k = len(comp)
            expected = comp[-1] * alpha ** (k - 1)
            for part in comp:
                expected *= rising(1 - alpha, part - 1) / math.factorial(part)
            assert composition_probability(q, comp) == expected


def test_enumerate_ewens_three():
    law = enumerate_law(EWENS1, 3)
    assert dict(law.items()) == {(3,): F(1, 3), (2, 1): F(1, 3), (1, 2): F(1, 6), (1, 1, 1): F(1, 6)}


def test_enumerate_half_half_two():
    law = enumerate_law(two_param_decrement(F(1, 2), F(1, 2), 2), 2)
    assert law[(2,)] == F(1, 3) and law[(1, 1)] == F(2, 3)


def test_enumerate_pure_singletons():
    law = enumerate_law(degenerate_decrement("singletons", 8), 8)
    assert law[(1,) * 8] == 1 and law.total_mass() == 1


def test_enumeration_cap():
    q = two_param_decrement(0, 1, 18)
    with pytest.raises(CapExceeded, match="16"):
        enumerate_law(q, 17)
    assert enumerate_law(q, 17, cap=17).total_mass() == 1


def test_size_beyond_matrix_rejected():
    with pytest.raises(ValueError):
        enumerate_law(two_param_decrement(0, 1, 3), 4)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_laws_sum_to_one(name):
    q = decrement_from_family(PRESETS[name], 12)
    for n in range(1, 13):
        assert enumerate_law(q, n).total_mass() == 1


def test_float_law_sums_close_to_one():
    q = two_param_decrement(0.5, 0.5, 10, backend=FLOAT)
    assert enumerate_law(q, 10).total_mass() == pytest.approx(1.0, abs=1e-12)


# --------------------------------------------------------------------------
# sampling consistency


def test_extension_coefficients():
    ext = dict(sampling_extensions((1, 2)))
    assert ext == {
        (2, 2): F(2, 4),
        (1, 3): F(3, 4),
        (1, 1, 2): F(2, 4),
        (1, 2, 1): F(1, 4),
    }


@pytest.mark.parametrize("comp", [(1,), (2,), (1, 1), (3, 1, 1, 2), (1, 1, 1)])
def test_extension_coefficients_match_deletion(comp):
    # kappa(lambda, mu) is the chance that deleting a uniform ball of mu gives lambda
    n1 = sum(comp) + 1
    for mu, kappa in sampling_extensions(comp):
        hits = sum(1 for b in range(n1) if delete_ball(mu, b) == Composition(comp))
        assert kappa == F(hits, n1)


def test_consistency_ewens_and_half_half():
    for q, levels in ((EWENS1, (3, 4)), (two_param_decrement(F(1, 2), F(1, 2), 6), (4, 5))):
        a, b = levels
        assert check_sampling_consistency(enumerate_law(q, a), enumerate_law(q, b)).ok


def test_consistency_detects_perturbation():
    law4 = enumerate_law(EWENS1, 4)
    probs = dict(law4.items())
    probs[Composition((4,))] += F(1, 100)
    probs[Composition((1, 1, 1, 1))] -= F(1, 100)
    report = check_sampling_consistency(enumerate_law(EWENS1, 3), CompositionLaw(4, probs))
    assert not report.ok
    assert report.composition is not None and report.residual != 0


def test_consistency_needs_consecutive_levels():
    with pytest.raises(ValueError):
        check_sampling_consistency(enumerate_law(EWENS1, 3), enumerate_law(EWENS1, 5))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_consistency_all_presets_against_deletion_oracle(name):
    q = decrement_from_family(PRESETS[name], 10)
    laws = [enumerate_law(q, n) for n in range(1, 11)]
    for lo, hi in zip(laws, laws[1:]):
        assert check_sampling_consistency(lo, hi).ok
        pushed = {c: p for c, p in deletion_pushforward(hi).items() if p}
        assert pushed == {c: p for c, p in lo.items() if p}


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.fractions(min_value=0, max_value=F(11, 12), max_denominator=12),
    theta=st.fractions(min_value=0, max_value=3, max_denominator=7),
)
def test_consistency_random_two_param(alpha, theta):
    q = two_param_decrement(alpha, theta, 6)
    for n in range(1, 6):
        assert check_sampling_consistency(enumerate_law(q, n), enumerate_law(q, n + 1)).ok


# --------------------------------------------------------------------------
# EPPF


def test_eppf_single_block_of_two():
    q = two_param_decrement(0, 1, 2)
    assert eppf(q, (2,)) == F(1, 2) == two_param_eppf(0, 1, (2,))


def test_eppf_single_block_is_diagonal():
    q = two_param_decrement(F(1, 3), F(2, 5), 8)
    for n in range(1, 9):
        assert eppf(q, (n,)) == q[n, n]


@pytest.mark.parametrize("alpha,theta", [(0, 1), (F(1, 2), F(1, 2)), (F(1, 3), F(2, 5)), (F(1, 2), 0)])
def test_eppf_matches_closed_form_and_oracle(alpha, theta):
    q = two_param_decrement(alpha, theta, 8)
    assert eppf(q, (2, 1)) == two_param_eppf(alpha, theta, (2, 1))
    for n in range(1, 8):
        law = enumerate_law(q, n)
        for sizes in integer_partitions(n):
            value = eppf(q, sizes)
            assert value == two_param_eppf(alpha, theta, sizes)
            assert value == eppf_from_law(law, sizes)


def test_eppf_cap():
    q = two_param_decrement(0, 1, 10)
    with pytest.raises(CapExceeded, match="9"):
        eppf(q, (1,) * 10)


def test_eppf_order_irrelevant():
    q = two_param_decrement(F(1, 3), F(2, 5), 8)
    assert eppf(q, (3, 1, 2, 2)) == eppf(q, (2, 3, 2, 1))


# --------------------------------------------------------------------------
# ordering factors


def test_ordering_sum_worked_case():
    assert ordering_factor_sum(F(1, 2), F(1, 4), (3, 1, 2, 2)) == 1
    assert ordering_factor_sum_all_orders(F(1, 2), F(1, 4), (3, 1, 2, 2)) == 1


def test_ordering_sum_small_k():
    assert ordering_factor_sum(F(1, 3), 2, (5,)) == 1
    assert ordering_factor_sum(F(1, 3), 2, (5, 2)) == 1


def test_ordering_sum_theta_zero():
    assert ordering_factor_sum(F(1, 2), 0, (2, 1, 3)) == 1


def test_ordering_sum_rejects_degenerate():
    with pytest.raises(ZeroDivisionError):
        ordering_factor_sum(0, 0, (1, 2))


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.fractions(min_value=0, max_value=F(11, 12), max_denominator=12),
    theta=st.fractions(min_value=0, max_value=4, max_denominator=9),
    sizes=st.lists(st.integers(1, 6), min_size=1, max_size=5),
)
def test_ordering_sum_is_one(alpha, theta, sizes):
    if alpha == 0 and theta == 0:
        return
    assert ordering_factor_sum(alpha, theta, sizes) == 1


# --------------------------------------------------------------------------
# Green matrix and last part


def test_green_ewens_values():
    g = green_matrix(EWENS1)
    assert (g[3, 1], g[3, 2], g[3, 3]) == (F(1, 2), F(1, 3), 1)


@pytest.mark.parametrize("theta", [F(1), F(2), F(1, 2)])
def test_green_ewens_closed_form(theta):
    g = green_matrix(two_param_decrement(0, theta, 12))
    for n in range(2, 13):
        for j in range(1, n):
            assert g[n, j] == theta / (j + theta)


@pytest.mark.parametrize("alpha", [F(1, 2), F(1, 3)])
def test_green_alpha_zero_closed_form(alpha):
    g = green_matrix(two_param_decrement(alpha, 0, 12))
    for n in range(1, 13):
        for j in range(1, n + 1):
            assert g[n, j] == rising(alpha, n - j) / math.factorial(n - j)
    if alpha == F(1, 2):
        assert g[5, 3] == F(3, 8)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_green_dp_formula_and_visit_oracle(name):
    spec = PRESETS[name]
    q = decrement_from_family(spec, 20)
    assert green_matrix(q) == green_matrix_formula(build_phi_table(spec, 20))
    g = green_matrix(q)
    for n in range(1, 9):
        law = enumerate_law(q, n)
        for j in range(1, n + 1):
            assert g[n, j] == visit_probability(law, j)
    assert all(g[n, n] == 1 for n in range(1, 21))
    assert all(0 <= v <= 1 for row in g.rows for v in row)


def test_last_part_ewens_three():
    table = build_phi_table(TwoParam(0, 1), 3)
    assert last_part_law(table, green_matrix(EWENS1.truncated(3)), 3) == (F(1, 2), F(1, 6), F(1, 3))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_last_part_against_enumeration(name):
    spec = PRESETS[name]
    table = build_phi_table(spec, 10)
    q = decrement_from_phi(table)
    g = green_matrix(q)
    for n in range(1, 11):
        law = enumerate_law(q, n)
        dist = last_part_law(table, g, n)
        assert dist == last_part_marginal(law)
        assert sum(dist) == 1
        assert dist[0] == last_part_one_probability(table, n)
        assert first_part_law(q, n) == tuple(law.marginal(lambda c: c[0]).get(m, 0) for m in range(1, n + 1))


def test_first_and_last_agree_at_two():
    for spec in PRESETS.values():
        table = build_phi_table(spec, 2)
        q = decrement_from_phi(table)
        assert first_part_law(q, 2)[0] == last_part_law(table, green_matrix(q), 2)[0]


def test_one_part_last_part():
    q = degenerate_decrement("one_part", 6)
    table = build_phi_table(DiscreteMeasure(atoms=((1, 1),)), 6)
    assert last_part_law(table, green_matrix(q), 6)[-1] == 1


def test_green_formula_float_agrees_for_small_n():
    table = build_phi_table(TwoParam(0.5, 0.5), 12, backend=FLOAT)
    exact = green_matrix(two_param_decrement(F(1, 2), F(1, 2), 12))
    approx = green_matrix_formula(table)
    for n in range(1, 13):
        assert approx.rows[n - 1] == pytest.approx([float(v) for v in exact.rows[n - 1]], abs=1e-9)


# --------------------------------------------------------------------------
# symmetric laws


@pytest.mark.parametrize("alpha", [F(1, 4), F(1, 2), F(3, 4)])
def test_alpha_alpha_permutation_invariant_and_renewal(alpha):
    q = two_param_decrement(alpha, alpha, 8)
    f = lambda m: alpha * rising(1 - alpha, m - 1) / math.factorial(m)  # noqa: E731
    r = lambda n: rising(alpha, n) / math.factorial(n)  # noqa: E731
    for n in range(1, 9):
        for m in range(1, n + 1):
            assert q[n, m] == f(m) * r(n - m) / r(n)
        law = enumerate_law(q, n)
        for comp, prob in law.items():
            k = len(comp)
            expected = math.factorial(n) / rising(alpha, n) * alpha**k
            for part in comp:
                expected *= rising(1 - alpha, part - 1) / math.factorial(part)
            assert prob == expected
            assert all(law[Composition(p)] == prob for p in set(itertools.permutations(comp)))


@pytest.mark.parametrize("alpha,theta", [(0, 1), (F(1, 2), 0), (F(1, 3), F(2, 5))])
def test_alpha_theta_not_permutation_invariant(alpha, theta):
    law = enumerate_law(two_param_decrement(alpha, theta, 6), 6)
    assert any(
        law[Composition(p)] != prob for comp, prob in law.items() for p in itertools.permutations(comp)
    )


# --------------------------------------------------------------------------
# interval partition moments


def test_tripartite_ewens_mean_gap():
    table = build_phi_table(TwoParam(0, 1), 4)
    assert tripartite_moment(table, 1, 1, 0) == F(1, 4)
    assert 1 - tripartite_moment(table, 1, 1, 0) == table.phi(1) / table.phi(2) == F(3, 4)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_tripartite_specialisations(name):
    table = build_phi_table(PRESETS[name], 9)
    for n in range(1, 10):
        # E (1-G)^(n-1) from the binomial expansion over i
        expansion = sum(math.comb(n - 1, i) * (-1) ** i * tripartite_moment(table, i, 1, 0) for i in range(n))
        assert expansion == table.phi(1) / table.phi(n)
        assert tripartite_moment(table, 0, 1, n - 1) == table.binom(n, 1) / (n * table.phi(n))
        assert tripartite_moment(table, 0, n, 0) == table.binom(n, n) / table.phi(n)


def test_tripartite_drift_only_block_has_no_mass():
    table = build_phi_table(DiscreteMeasure(drift=1), 8)
    for n in range(2, 9):
        for i in range(n):
            for k in range(n - i):
                j = n - i - k
                if j >= 2:
                    assert tripartite_moment(table, i, j, k) == 0


@pytest.mark.parametrize("family", [TwoParam(0, 1), TwoParam(F(1, 2), F(1, 2)), PRESETS["geometric_half"]])
def test_tripartite_size_biased_oracle(family):
    table = build_phi_table(family, 7)
    q = decrement_from_phi(table)
    for n in range(1, 8):
        law = enumerate_law(q, n)
        for i in range(n):
            for k in range(n - i):
                j = n - i - k
                multinomial = math.factorial(n - 1) // (math.factorial(i) * math.factorial(j - 1) * math.factorial(k))
                assert multinomial * tripartite_moment(table, i, j, k) == size_biased_triple(law, i, j, k)


def test_tripartite_index_checks():
    table = build_phi_table(TwoParam(0, 1), 4)
    with pytest.raises(ValueError):
        tripartite_moment(table, 0, 0, 1)
    with pytest.raises(ValueError):
        tripartite_moment(table, 2, 2, 1)


def test_singleton_frequency_moments_myriads():
    table = build_phi_table(myriads(F(1, 2), 1), 4, normalization=RAW)
    assert table.phi_values[:2] == (F(3, 2), F(11, 4))
    assert all(table.phi(i) == i + 1 - F(1, 2**i) for i in range(1, 5))
    assert singleton_frequency_moment(table, 1, 1) == F(2, 3)
    assert singleton_frequency_moment(table, 1, 2) == F(16, 33)


def test_singleton_frequency_trivial_cases():
    drift = build_phi_table(DiscreteMeasure(drift=F(5, 2)), 6, normalization=RAW)
    assert all(singleton_frequency_moment(drift, F(5, 2), n) == 1 for n in range(1, 7))
    no_drift = build_phi_table(PRESETS["geometric_half"], 6, normalization=RAW)
    assert all(singleton_frequency_moment(no_drift, 0, n) == 0 for n in range(1, 7))
