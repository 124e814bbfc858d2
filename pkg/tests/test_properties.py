import math

from hypothesis import given, settings
from hypothesis import strategies as st

from streamclip import Element
from streamclip.algorithms import greedy, lazy_greedy, naive_stream_clipper, stream_clipper
from streamclip.bounds import BoundInputs, case_bound, classify, g_eval
from streamclip.harness.io import permutation
from streamclip.objective import FEATURE_OBJECTIVE, rebuild
from streamclip.oracle import feature_set_function

weights = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)
feature_maps = st.dictionaries(st.sampled_from([f"u{i}" for i in range(6)]), weights, min_size=1, max_size=4)


@st.composite
def streams(draw, min_size=0, max_size=30):
    maps = draw(st.lists(feature_maps, min_size=min_size, max_size=max_size))
    return [Element(f"x{i}", m) for i, m in enumerate(maps)]


@st.composite
def bound_inputs(draw):
    k = draw(st.integers(1, 40))
    tm = draw(st.floats(0, 5))
    return BoundInputs(
        f_star=draw(st.floats(0, 100)), k=k, k_n=draw(st.floats(0, k)), s_n=draw(st.integers(0, k)),
        tau_minus=tm, tau_plus=tm + draw(st.floats(0, 5)),
    )


@given(streams(min_size=1))
def test_incremental_value_matches_dense(stream):
    S = rebuild(stream)
    assert math.isclose(S.value, feature_set_function(stream)(frozenset(S.members)), rel_tol=1e-12, abs_tol=1e-9)


@given(streams(min_size=2))
def test_gains_nonnegative_and_diminishing(stream):
    *prefix, v = stream
    small, big = rebuild(prefix[: len(prefix) // 2]), rebuild(prefix)
    assert 0.0 <= big.gain(v) <= small.gain(v) + 1e-9


@given(bound_inputs())
def test_g_is_convex_combination(inp):
    lo, hi = sorted((inp.f_star - inp.k_n * inp.tau_minus, inp.s_n * inp.tau_plus))
    assert lo - 1e-9 <= g_eval(inp) <= hi + 1e-9


@given(bound_inputs())
def test_exactly_one_case(inp):
    low = inp.k_n * inp.tau_minus + inp.s_n * inp.tau_plus
    high = math.exp(1 - inp.s_n / inp.k) * inp.k * inp.tau_minus + inp.s_n * inp.tau_plus
    matches = [inp.f_star <= low, low < inp.f_star <= high, inp.f_star > high]
    # the first matching condition wins at boundaries
    assert classify(inp) == f"case{matches.index(True) + 1}"
    assert math.isfinite(case_bound(inp).bound)


@settings(max_examples=60, deadline=None)
@given(streams(max_size=60), st.integers(1, 6), st.integers(1, 8), st.sampled_from(["clamp", "safe"]))
def test_stream_clipper_state_invariants(stream, k, b, rule):
    r = stream_clipper(stream, k, b, swap_rule=rule, test_mode=True)
    tel = r.telemetry
    assert tel.extra["max_buffer_after_step"] < b
    assert tel.memory_units <= b + k
    assert len(r.solution_ids) <= k and len(set(r.solution_ids)) == len(r.solution_ids)
    trace = tel.extra["threshold_trace"]
    assert all(m <= p + 1e-12 for m, p in trace)
    assert all(m1 >= m0 and p1 >= p0 for (m0, p0), (m1, p1) in zip(trace, trace[1:]))
    chosen = [e for e in stream if e.id in set(r.solution_ids)]
    assert math.isclose(r.objective, FEATURE_OBJECTIVE.evaluate(chosen), abs_tol=1e-9)


@settings(deadline=None)
@given(streams(max_size=25), st.integers(1, 6))
def test_lazy_greedy_equals_greedy(stream, k):
    assert greedy(stream, k).solution_ids == lazy_greedy(stream, k).solution_ids


@given(streams(max_size=25), st.integers(1, 6), st.floats(0, 2), st.floats(0, 2))
def test_naive_partition_of_stream(stream, k, a, b):
    lo, hi = sorted((a, b))
    tel = naive_stream_clipper(stream, k, lo, hi).telemetry
    assert tel.s_n + tel.b_n + tel.rejections == len(stream)
    assert tel.s_n <= k


@given(st.integers(0, 300), st.integers(0, 2**32 - 1))
def test_permutation_is_bijection(n, seed):
    p = permutation(n, seed)
    assert sorted(p) == list(range(n)) and p == permutation(n, seed)
