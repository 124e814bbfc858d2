import math
from itertools import combinations

import pytest

from streamclip import ConfigError, Element, ObjectiveSpec, OracleRefusal
from streamclip.algorithms import greedy
from streamclip.constraints import KnapsackSpec, MatroidSpec
from streamclip.harness.io import gen_stream
from streamclip.oracle import (
    Cardinality,
    TableFunction,
    bijection_k_prime,
    compute_k_n,
    count_valid_bijections,
    exhaustive_max,
    extend_to_base,
    feature_set_function,
    property_check,
)

from conftest import small_instance

AB = MatroidSpec.partition({"a1": "A", "a2": "A", "b1": "B", "b2": "B"}, {"A": 1, "B": 1})


def test_modular_top_k():
    vals = {"p": 3.0, "q": 2.0, "r": 1.0, "s": 0.5}
    obj = ObjectiveSpec.modular(vals)
    res = exhaustive_max([Element(i) for i in vals], 2, obj)
    assert res.f_star == 5.0 and res.optimal_set == ("p", "q")


def test_lexicographic_tie():
    els = [Element("a", {"u1": 4.0}), Element("b", {"u1": 4.0}), Element("c", {"u2": 1.0})]
    res = exhaustive_max(els, Cardinality(2))
    assert res.f_star == pytest.approx(3.0)
    assert res.optimal_set == ("a", "c") and res.ties == 2


def test_knapsack_nothing_fits():
    els = [Element("a", {"u": 1.0}, cost=5.0), Element("b", {"v": 1.0}, cost=4.0)]
    res = exhaustive_max(els, KnapsackSpec(1.0))
    assert res.optimal_set == () and res.f_star == 0.0


def test_matroid_optimum_independent():
    els = [Element("a1", {"u": 4.0}), Element("a2", {"v": 9.0}), Element("b1", {"w": 1.0}), Element("b2", {"u": 1.0})]
    res = exhaustive_max(els, AB)
    assert res.optimal_set == ("a2", "b1") and res.f_star == pytest.approx(4.0) and res.ties == 2


def test_refusal():
    els = gen_stream(13, 5, 0.5, seed=0)
    with pytest.raises(OracleRefusal):
        exhaustive_max(els, 5)
    exhaustive_max(els, 3)
    with pytest.raises(OracleRefusal):
        exhaustive_max(gen_stream(21, 5, 0.5, seed=0), 2)
    with pytest.raises(OracleRefusal):
        exhaustive_max(els, KnapsackSpec(3.0))


def test_exhaustive_agrees_with_brute_sum():
    els = small_instance(3)
    fn = feature_set_function(els)
    best = max(fn(frozenset(c)) for r in range(4) for c in combinations([e.id for e in els], r))
    assert exhaustive_max(els, 3).f_star == pytest.approx(best, abs=1e-12)


def test_greedy_approximation_on_exhaustive_instances():
    for seed in range(50):
        els = small_instance(seed)
        f_star = exhaustive_max(els, 3).f_star
        assert greedy(els, 3).objective >= (1 - 1 / math.e) * f_star - 1e-9


def test_compute_k_n():
    assert compute_k_n({"a", "b", "c"}, {"a"}, {"b"}) == 1
    assert compute_k_n({"a", "b"}, {"a"}, {"b"}) == 0
    assert compute_k_n({"a", "b"}, set(), set()) == 2


def test_k_prime_identity():
    s = {"a1", "b1"}
    assert bijection_k_prime(s, s, s, set(), AB) == 0


def test_k_prime_definition_cases():
    # S_n={a2}: a2 is excluded from S - S_n, so nothing counts
    assert bijection_k_prime({"a1", "b1"}, {"a2", "b1"}, {"a2"}, {"a1"}, AB) == 0
    # S_n={b1}: phi^-1(a2) = a1 is in S* & B_n
    assert bijection_k_prime({"a1", "b1"}, {"a2", "b1"}, {"b1"}, {"a1", "a2"}, AB) == 1
    assert bijection_k_prime({"a1", "b1"}, {"a2", "b2"}, set(), {"a1", "b1"}, AB) == 2


def test_k_prime_errors():
    with pytest.raises(ConfigError):
        bijection_k_prime({"a1", "b1"}, {"a2"}, set(), set(), AB)
    # no single exchange between the two bases keeps independence
    table = MatroidSpec.table([(), ("w",), ("x",), ("y",), ("z",), ("w", "x"), ("y", "z")])
    with pytest.raises(ConfigError):
        bijection_k_prime({"w", "x"}, {"y", "z"}, set(), set(), table)
    big = {f"s{i}" for i in range(11)}
    free = MatroidSpec.partition({i: "A" for i in big | {f"t{i}" for i in range(11)}}, {"A": 22})
    with pytest.raises(OracleRefusal):
        bijection_k_prime(big, {f"t{i}" for i in range(11)}, set(), set(), free)


def test_count_and_extend():
    assert count_valid_bijections({"a1", "b1"}, {"a2", "b2"}, AB) == 1
    assert extend_to_base(["a2"], ["a1", "b1"], AB) == ["a2", "b1"]
    table = MatroidSpec.table([(), ("x",), ("y",), ("z",), ("y", "z")])
    with pytest.raises(ConfigError):
        extend_to_base(["x"], ["y", "z"], table)


def test_property_check_feature_based_clean():
    els = gen_stream(12, 6, 0.4, seed=1)
    rep = property_check(feature_set_function(els), [e.id for e in els], 10_000, seed=0)
    assert rep.clean and rep.trials == 10_000


def test_property_check_modular_exact():
    vals = {f"m{i}": float(i) for i in range(6)}
    obj = ObjectiveSpec.modular(vals)
    rep = property_check(feature_set_function([Element(i) for i in vals], obj), list(vals), 2000)
    assert rep.clean
    assert rep.worst_submodular_margin >= 0 and rep.worst_swap_margin >= 0


def test_property_check_flags_supermodular():
    ground = ["a", "b", "c", "d"]
    table = {frozenset(c): float(len(c) ** 2) for r in range(5) for c in combinations(ground, r)}
    fn = TableFunction(table)
    rep = property_check(fn, ground, 2000)
    assert rep.submodular_violations > 0 and not rep.clean
    with pytest.raises(ConfigError):
        TableFunction(table, must_be_submodular=True)


def test_table_function_validation():
    with pytest.raises(ConfigError):
        TableFunction({frozenset(): 1.0})
    sqrt_card = {frozenset(c): math.sqrt(len(c)) for r in range(4) for c in combinations("abc", r)}
    fn = TableFunction(sqrt_card, must_be_submodular=True)
    assert fn(frozenset("ab")) == pytest.approx(math.sqrt(2))
    with pytest.raises(ConfigError):
        property_check(fn, ["a", "b"], 10)
