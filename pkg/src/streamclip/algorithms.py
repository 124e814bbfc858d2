"""Streaming and offline maximizers for monotone submodular objectives.

All algorithms take elements as an iterable in arrival order and return a
:class:`RunResult`. Every argmax breaks ties by smallest arrival index (ids are
unique, so that is a total order).
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Sequence

from .errors import ConfigError, DuplicateElementError
from .objective import FEATURE_OBJECTIVE, Element, ObjectiveSpec, SolutionState

# Gains at or below this are treated as zero.
ZERO_GAIN = 1e-12

# How a swap reconciles tau- += f(u | S - u + v) with tau- <= tau+.
SWAP_CLAMP = "clamp"  # cap tau- at the new tau+
SWAP_SAFE = "safe"  # lift tau+ when f(S) allows it, else decline the swap
SWAP_RULES = (SWAP_CLAMP, SWAP_SAFE)


@dataclass
class Thresholds:
    tau_minus: float
    tau_plus: float
    delta_tau: float = 0.0

    @classmethod
    def from_fhat(cls, fhat: float, k: int) -> "Thresholds":
        delta = fhat / (20 * k)
        mid = fhat / (2 * k)
        return cls(mid - delta, mid + delta, delta)


@dataclass
class Rejection:
    id: str
    arrival: int
    gain: float
    tau_minus: float
    reason: str = "threshold"  # threshold | zero-gain | cleaning | forced | swapped-out


@dataclass
class Telemetry:
    k: int
    s_n: int = 0
    b_n: int = 0
    tau_minus: float | None = None
    tau_plus: float | None = None
    delta_tau: float | None = None
    fhat: float | None = None
    buffer_capacity: int | None = None
    evaluations: int = 0
    swaps: int = 0
    cleanings: int = 0
    rejections: int = 0
    forced_evictions: int = 0
    memory_units: int = 0
    wall_ms: float = 0.0
    s_n_ids: list[str] = field(default_factory=list)
    b_n_ids: list[str] = field(default_factory=list)
    rejected: list[Rejection] | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        d = asdict(self)
        if not timing:
            d["wall_ms"] = None
        if self.rejected is None:
            d.pop("rejected")
        return d


@dataclass
class RunResult:
    algorithm: str
    solution_ids: list[str]
    objective: float
    telemetry: Telemetry

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "solution_ids": list(self.solution_ids),
            "objective": self.objective,
            "telemetry": self.telemetry.to_dict(timing),
        }


@dataclass
class ClipperState:
    solution: SolutionState
    k: int
    thresholds: Thresholds | None
    b: int | None = None  # None: unbounded buffer (fixed thresholds)
    fhat: float | None = None
    buffer: list[tuple[int, Element]] = field(default_factory=list)
    arrivals: dict[str, int] = field(default_factory=dict)  # arrival index of members of S
    swaps: int = 0
    cleanings: int = 0
    rejections: int = 0
    forced_evictions: int = 0
    peak_stored: int = 0
    rejected_log: list[Rejection] | None = None
    threshold_trace: list[tuple[float, float]] | None = None
    max_buffer_after_step: int = 0
    swap_rule: str = SWAP_CLAMP

    def stored(self) -> int:
        return len(self.solution) + len(self.buffer)

    def note_peak(self) -> None:
        self.peak_stored = max(self.peak_stored, self.stored())

    def reject(self, idx: int, v: Element, g: float, reason: str = "threshold") -> None:
        self.rejections += 1
        if self.rejected_log is not None:
            tau = self.thresholds.tau_minus if self.thresholds else 0.0
            self.rejected_log.append(Rejection(v.id, idx, g, tau, reason))


def _check_k(k: int) -> None:
    if not isinstance(k, int) or k < 1:
        raise ConfigError(f"k must be an integer >= 1, got {k!r}")


def _unique(stream: Iterable[Element]) -> Iterable[tuple[int, Element]]:
    seen: set[str] = set()
    for i, v in enumerate(stream):
        if v.id in seen:
            raise DuplicateElementError(f"duplicate element id {v.id!r} at position {i}")
        seen.add(v.id)
        yield i, v


def _argmax(state: SolutionState, candidates: Sequence[tuple[int, Element]]) -> tuple[int, float]:
    """Position in ``candidates`` of the best gain (earliest arrival on ties)."""
    best_pos, best_gain, best_arrival = -1, -math.inf, math.inf
    for pos, (arrival, v) in enumerate(candidates):
        g = state.gain(v)
        if g > best_gain or (g == best_gain and arrival < best_arrival):
            best_pos, best_gain, best_arrival = pos, g, arrival
    return best_pos, best_gain


def final_greedy(state: ClipperState) -> None:
    """Top ``S`` up to ``k`` from the buffer, always with fresh gains."""
    while len(state.solution) < state.k and state.buffer:
        pos, _ = _argmax(state.solution, state.buffer)
        _, v = state.buffer.pop(pos)
        state.solution.commit(v)


def _finish(name: str, state: ClipperState, started: float) -> RunResult:
    s_n_ids = list(state.solution.members)
    b_n_ids = [v.id for _, v in state.buffer]
    s_n, b_n = len(s_n_ids), len(b_n_ids)
    final_greedy(state)
    th = state.thresholds
    tel = Telemetry(
        k=state.k,
        s_n=s_n,
        b_n=b_n,
        tau_minus=th.tau_minus if th else None,
        tau_plus=th.tau_plus if th else None,
        delta_tau=th.delta_tau if th else None,
        fhat=state.fhat,
        buffer_capacity=state.b,
        evaluations=state.solution.evals,
        swaps=state.swaps,
        cleanings=state.cleanings,
        rejections=state.rejections,
        forced_evictions=state.forced_evictions,
        memory_units=state.peak_stored,
        wall_ms=(time.perf_counter() - started) * 1e3,
        s_n_ids=s_n_ids,
        b_n_ids=b_n_ids,
        rejected=state.rejected_log,
    )
    if state.threshold_trace is not None:
        tel.extra["threshold_trace"] = state.threshold_trace
        tel.extra["max_buffer_after_step"] = state.max_buffer_after_step
    return RunResult(name, list(state.solution.members), state.solution.value, tel)


def naive_stream_clipper(
    stream: Iterable[Element],
    k: int,
    tau_minus: float,
    tau_plus: float,
    *,
    objective: ObjectiveSpec = FEATURE_OBJECTIVE,
    test_mode: bool = False,
) -> RunResult:
    """Two fixed thresholds: accept at ``gain >= tau_plus``, buffer above
    ``tau_minus``, reject otherwise; then greedy top-up from the buffer."""
    _check_k(k)
    if tau_minus > tau_plus:
        raise ConfigError(f"tau_minus ({tau_minus}) must not exceed tau_plus ({tau_plus})")
    started = time.perf_counter()
    state = ClipperState(
        objective.new_state(), k, Thresholds(tau_minus, tau_plus),
        rejected_log=[] if test_mode else None,
    )
    S = state.solution
    for i, v in _unique(stream):
        g = S.gain(v)
        if g <= ZERO_GAIN:
            state.reject(i, v, g, "zero-gain")
        elif g >= tau_plus and len(S) < k:
            S.commit(v)
        elif g > tau_minus:
            state.buffer.append((i, v))
        else:
            state.reject(i, v, g)
        state.note_peak()
    return _finish("naive-clipper", state, started)


def _try_swap(state: ClipperState, v: Element, g: float) -> bool:
    """Best single swap of ``v`` into ``S``; commits and moves thresholds if
    it raises ``f(S)``. Returns whether the swap happened."""
    S = state.solution
    th = state.thresholds
    if len(S) == 0:
        return False
    best_u, best_val, best_arrival = None, -math.inf, math.inf
    arrivals = state.arrivals
    for u in S.members:
        val = S.swap_value(v, u)
        a = arrivals[u]
        if val > best_val or (val == best_val and a < best_arrival):
            best_u, best_val, best_arrival = u, val, a
    rho = (best_val - S.value) / len(S)
    if rho <= 0:
        return False
    # f(u | S - u + v) = f(S + v) - f(S - u + v)
    u_gain = max(S.value + g - best_val, 0.0)
    new_minus = th.tau_minus + u_gain
    new_plus = th.tau_plus + rho
    if new_minus > new_plus:
        if state.swap_rule == SWAP_CLAMP:
            # tau- never passes tau+, as in buffer cleaning
            new_minus = new_plus
        elif best_val < len(S) * new_minus:
            # safe: lifting tau+ to tau- would break f(S) >= |S| tau+
            return False
        else:
            new_plus = new_minus
    th.tau_minus, th.tau_plus = new_minus, new_plus
    S.swap(v, best_u)
    state.swaps += 1
    if state.rejected_log is not None:
        # u leaves for good; the proof conditions must cover it like a rejection
        state.rejected_log.append(Rejection(best_u, arrivals[best_u], u_gain, new_minus, "swapped-out"))
    return True


def _clean_buffer(state: ClipperState) -> None:
    """Raise tau- and evict until ``|B| < b``."""
    S, th = state.solution, state.thresholds
    b = state.b
    while len(state.buffer) >= b:
        state.cleanings += 1
        if th.delta_tau > 0:
            th.tau_minus = min(th.tau_minus + th.delta_tau, th.tau_plus)
        else:
            th.tau_minus = th.tau_plus
        keep = []
        for arrival, w in state.buffer:
            gw = S.gain(w)
            if gw <= th.tau_minus:
                state.reject(arrival, w, gw, "cleaning")
            else:
                keep.append((arrival, w))
        state.buffer = keep
        if len(state.buffer) >= b and th.tau_minus >= th.tau_plus:
            _saturated_cleaning(state)


def _saturated_cleaning(state: ClipperState) -> None:
    """tau- has reached tau+ and the buffer is still full."""
    S, th, b = state.solution, state.thresholds, state.b
    # Remaining gains exceed tau- = tau+, so promotion obeys the accept rule.
    while len(S) < state.k and len(state.buffer) >= b:
        pos, g = _argmax(S, state.buffer)
        if g < th.tau_plus:
            break
        arrival, w = state.buffer.pop(pos)
        S.commit(w)
        state.arrivals[w.id] = arrival
        state.note_peak()
        keep = []
        for a, x in state.buffer:
            gx = S.gain(x)
            if gx <= th.tau_minus:
                state.reject(a, x, gx, "cleaning")
            else:
                keep.append((a, x))
        state.buffer = keep
    if len(state.buffer) < b:
        return
    if len(S) and S.value / len(S) > th.tau_plus:
        # f(S) >= |S| tau+ still holds after lifting tau+ to the average.
        th.tau_plus = S.value / len(S)
        return
    # Swapping a buffered element in moves both thresholds the regular way
    # and strictly raises f(S), so this cannot cycle.
    for pos in sorted(range(len(state.buffer)), key=lambda p: state.buffer[p][0]):
        arrival, x = state.buffer[pos]
        if _try_swap(state, x, S.gain(x)):
            del state.buffer[pos]
            state.arrivals[x.id] = arrival
            return
    scored = sorted(
        ((S.gain(x), -a, a, x) for a, x in state.buffer), key=lambda t: (t[0], t[1])
    )
    n_drop = len(state.buffer) - b + 1
    dropped = {x.id for _, _, _, x in scored[:n_drop]}
    for gx, _, a, x in scored[:n_drop]:
        state.forced_evictions += 1
        state.reject(a, x, gx, "forced")
    state.buffer = [(a, x) for a, x in state.buffer if x.id not in dropped]


def stream_clipper(
    stream: Iterable[Element],
    k: int,
    b: int,
    fhat: float | None = None,
    *,
    threshold_override: tuple[float, float, float] | None = None,
    swap_rule: str = SWAP_CLAMP,
    objective: ObjectiveSpec = FEATURE_OBJECTIVE,
    test_mode: bool = False,
) -> RunResult:
    """Stream clipper with swapping, threshold adaptation and buffer cleaning.

    ``fhat=None`` selects auto mode: thresholds are set from ``k * f(v)`` for
    the first element ``v`` with positive value. ``fhat`` is afterwards tracked
    as ``max(fhat, f(S))`` for reporting only.

    ``swap_rule="clamp"`` caps the swap update of tau- at tau+. Under
    ``"safe"`` a swap is declined instead whenever keeping tau- <= tau+ would
    break ``f(S) >= |S| tau+``; the post-hoc proof conditions then always
    hold, at a large cost in utility once ``S`` is full.
    """
    if swap_rule not in SWAP_RULES:
        raise ConfigError(f"swap_rule must be one of {SWAP_RULES}, got {swap_rule!r}")
    _check_k(k)
    if not isinstance(b, int) or b < 1:
        raise ConfigError(f"buffer capacity b must be an integer >= 1, got {b!r}")
    if fhat is not None and (not math.isfinite(fhat) or fhat < 0):
        raise ConfigError(f"fhat must be finite and >= 0, got {fhat!r}")
    th = None
    if threshold_override is not None:
        tm, tp, dt = map(float, threshold_override)
        if tm > tp or dt < 0:
            raise ConfigError("threshold override needs tau_minus <= tau_plus and delta_tau >= 0")
        th = Thresholds(tm, tp, dt)
    elif fhat is not None:
        th = Thresholds.from_fhat(fhat, k)
    started = time.perf_counter()
    state = ClipperState(
        objective.new_state(), k, th, b=b, fhat=fhat,
        rejected_log=[] if test_mode else None,
        threshold_trace=[] if test_mode else None, swap_rule=swap_rule,
    )
    S = state.solution
    for i, v in _unique(stream):
        g = S.gain(v)
        if g <= ZERO_GAIN:
            state.reject(i, v, g, "zero-gain")
        else:
            if state.thresholds is None:
                state.fhat = k * g  # S is empty here, so g = f(v)
                state.thresholds = Thresholds.from_fhat(state.fhat, k)
            th = state.thresholds
            if g >= th.tau_plus and len(S) < k:
                S.commit(v)
                state.arrivals[v.id] = i
            elif g > th.tau_minus:
                if _try_swap(state, v, g):
                    state.arrivals[v.id] = i
                else:
                    state.buffer.append((i, v))
                    state.note_peak()
                    _clean_buffer(state)
            else:
                state.reject(i, v, g)
        state.note_peak()
        if state.fhat is not None:
            state.fhat = max(state.fhat, S.value)
        if test_mode and state.thresholds is not None:
            state.threshold_trace.append((state.thresholds.tau_minus, state.thresholds.tau_plus))
            state.max_buffer_after_step = max(state.max_buffer_after_step, len(state.buffer))
    result = _finish("stream-clipper", state, started)
    result.telemetry.extra["swap_rule"] = swap_rule
    return result


def greedy(
    elements: Iterable[Element], k: int, *, objective: ObjectiveSpec = FEATURE_OBJECTIVE
) -> RunResult:
    """Offline greedy: ``k`` rounds of the best marginal gain."""
    _check_k(k)
    started = time.perf_counter()
    remaining = list(_unique(elements))
    S = objective.new_state()
    for _ in range(k):
        if not remaining:
            break
        pos, g = _argmax(S, remaining)
        if g <= ZERO_GAIN:
            break
        S.commit(remaining.pop(pos)[1])
    tel = Telemetry(k=k, s_n=len(S), evaluations=S.evals, memory_units=len(remaining) + len(S),
                    wall_ms=(time.perf_counter() - started) * 1e3)
    return RunResult("greedy", list(S.members), S.value, tel)


def lazy_greedy(
    elements: Iterable[Element], k: int, *, objective: ObjectiveSpec = FEATURE_OBJECTIVE
) -> RunResult:
    """Greedy with a priority queue of stale upper bounds; same output as :func:`greedy`."""
    _check_k(k)
    started = time.perf_counter()
    items = list(_unique(elements))
    n = len(items)
    S = objective.new_state()
    # (-gain, arrival, round in which the gain was computed)
    heap = [(-S.gain(v), i, 0) for i, v in items]
    heapq.heapify(heap)
    by_arrival = dict(items)
    rnd = 0
    while heap and len(S) < k:
        neg, i, stamp = heapq.heappop(heap)
        if stamp == rnd:
            if -neg <= ZERO_GAIN:
                break
            S.commit(by_arrival[i])
            rnd += 1
        else:
            heapq.heappush(heap, (-S.gain(by_arrival[i]), i, rnd))
    tel = Telemetry(k=k, s_n=len(S), evaluations=S.evals, memory_units=n,
                    wall_ms=(time.perf_counter() - started) * 1e3)
    return RunResult("lazy-greedy", list(S.members), S.value, tel)


def sieve_streaming(
    stream: Iterable[Element],
    k: int,
    epsilon: float = 0.1,
    *,
    fhat: float | None = None,
    max_instances: int = 256,
    objective: ObjectiveSpec = FEATURE_OBJECTIVE,
) -> RunResult:
    """Parallel single-threshold instances over the geometric grid
    ``{(1+eps)^i : m <= (1+eps)^i <= 2km}``, ``m`` the best singleton so far.

    With ``fhat`` given, runs the single thresholding instance for that
    estimate instead of the grid.
    """
    _check_k(k)
    if not (0 < epsilon < 1):
        raise ConfigError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if max_instances < 1:
        raise ConfigError("max_instances must be >= 1")
    started = time.perf_counter()
    base = math.log1p(epsilon)
    instances: dict[int, SolutionState] = {}
    evals = 0
    peak = 0
    m = 0.0
    if fhat is not None:
        instances[0] = objective.new_state()
        estimates = {0: float(fhat)}
    else:
        estimates = {}
    for _, v in _unique(stream):
        if fhat is None:
            single = objective.singleton(v)
            evals += 1
            if single > m:
                m = single
                lo = math.ceil(math.log(m) / base - 1e-9)
                hi = math.floor(math.log(2 * k * m) / base + 1e-9)
                for i in [i for i in instances if i < lo]:
                    evals += instances.pop(i).evals
                    del estimates[i]
                for i in range(max(lo, hi - max_instances + 1), hi + 1):
                    if i not in instances:
                        instances[i] = objective.new_state()
                        estimates[i] = (1 + epsilon) ** i
                while len(instances) > max_instances:
                    i = min(instances)
                    evals += instances.pop(i).evals
                    del estimates[i]
        for i in sorted(instances):
            st = instances[i]
            if len(st) >= k:
                continue
            g = st.gain(v)
            if g > ZERO_GAIN and g >= (estimates[i] / 2 - st.value) / (k - len(st)):
                st.commit(v)
        peak = max(peak, sum(len(st) for st in instances.values()))
    best = None
    for i in sorted(instances):
        if best is None or instances[i].value > best.value:
            best = instances[i]
    evals += sum(st.evals for st in instances.values())
    tel = Telemetry(k=k, evaluations=evals, memory_units=peak,
                    wall_ms=(time.perf_counter() - started) * 1e3)
    tel.extra["instances"] = len(instances)
    name = "sieve" if fhat is None else "threshold"
    if best is None:
        return RunResult(name, [], 0.0, tel)
    tel.s_n = len(best)
    return RunResult(name, list(best.members), best.value, tel)


def swap_streaming(
    stream: Iterable[Element], k: int, c: float = 1.0, *, objective: ObjectiveSpec = FEATURE_OBJECTIVE
) -> RunResult:
    """Fill ``S`` with the first ``k`` elements, then swap in ``v`` for the best
    ``u`` whenever ``f(S - u + v) >= (1 + c/k) f(S)``."""
    _check_k(k)
    if c < 0:
        raise ConfigError("c must be >= 0")
    started = time.perf_counter()
    S = objective.new_state()
    arrivals: dict[str, int] = {}
    swaps = 0
    for i, v in _unique(stream):
        if len(S) < k:
            S.commit(v)
            arrivals[v.id] = i
            continue
        best_u, best_val, best_a = None, -math.inf, math.inf
        for u in S.members:
            val = S.swap_value(v, u)
            if val > best_val or (val == best_val and arrivals[u] < best_a):
                best_u, best_val, best_a = u, val, arrivals[u]
        if best_val >= (1 + c / k) * S.value:
            S.swap(v, best_u)
            arrivals[v.id] = i
            swaps += 1
    tel = Telemetry(k=k, s_n=len(S), evaluations=S.evals, swaps=swaps, memory_units=len(S),
                    wall_ms=(time.perf_counter() - started) * 1e3)
    return RunResult("swap", list(S.members), S.value, tel)


def segment_sizes(n: int, k: int) -> list[int]:
    base, rem = divmod(n, k)
    return [base + 1 if j < rem else base for j in range(k)]


def minibatch_secretary(
    stream: Iterable[Element], k: int, n: int, *, objective: ObjectiveSpec = FEATURE_OBJECTIVE
) -> RunResult:
    """Split the stream into ``k`` contiguous segments and keep the best
    marginal gain of each. ``n`` must equal the stream length."""
    _check_k(k)
    if not isinstance(n, int) or n < 0:
        raise ConfigError(f"n must be a non-negative integer, got {n!r}")
    started = time.perf_counter()
    S = objective.new_state()
    if n <= k:
        count = 0
        for _, v in _unique(stream):
            count += 1
            if count > n:
                raise ConfigError(f"stream is longer than the declared n={n}")
            S.commit(v)
        if count != n:
            raise ConfigError(f"declared n={n} but the stream has {count} elements")
    else:
        bounds = []
        acc = 0
        for size in segment_sizes(n, k):
            acc += size
            bounds.append(acc)
        seg = 0
        best, best_gain = None, -math.inf
        count = 0
        for i, v in _unique(stream):
            count += 1
            if count > n:
                raise ConfigError(f"stream is longer than the declared n={n}")
            g = S.gain(v)
            if g > best_gain:
                best, best_gain = v, g
            if count == bounds[seg]:
                S.commit(best)
                best, best_gain = None, -math.inf
                seg += 1
        if count != n:
            raise ConfigError(f"declared n={n} but the stream has {count} elements")
    tel = Telemetry(k=k, s_n=len(S), evaluations=S.evals, memory_units=len(S) + 1,
                    wall_ms=(time.perf_counter() - started) * 1e3)
    return RunResult("minibatch", list(S.members), S.value, tel)


def proof_conditions(
    result: RunResult, elements: Iterable[Element], *, objective: ObjectiveSpec = FEATURE_OBJECTIVE,
    tol: float = 1e-9,
) -> dict[str, Any]:
    """Post-hoc check of the two conditions the bound needs after the pass:
    (a) every rejected ``v`` has ``f(v | S_n) <= tau_n-``;
    (b) ``f(S_n) >= |S_n| tau_n+``.

    Requires a run made with ``test_mode=True``.
    """
    tel = result.telemetry
    if tel.rejected is None:
        raise ConfigError("proof_conditions needs a run recorded with test_mode=True")
    by_id = {e.id: e for e in elements}
    S_n = objective.new_state()
    for i in tel.s_n_ids:
        S_n.commit(by_id[i])
    worst_a = -math.inf
    for r in tel.rejected:
        worst_a = max(worst_a, S_n.gain(by_id[r.id]) - tel.tau_minus)
    margin_b = S_n.value - tel.s_n * tel.tau_plus
    return {
        "rejected_ok": worst_a <= tol,
        "worst_rejected_excess": worst_a if tel.rejected else None,
        "solution_ok": margin_b >= -tol,
        "solution_margin": margin_b,
    }
