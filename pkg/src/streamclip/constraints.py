"""Knapsack- and matroid-constrained variants of the fixed-threshold clipper."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

from .algorithms import ZERO_GAIN, ClipperState, RunResult, Telemetry, Thresholds, _check_k, _unique
from .errors import ConfigError, IngestError
from .objective import FEATURE_OBJECTIVE, Element, ObjectiveSpec

PARTITION = "partition"
TABLE = "table"


@dataclass(frozen=True)
class KnapsackSpec:
    budget: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.budget) or self.budget <= 0:
            raise ConfigError(f"knapsack budget must be finite and > 0, got {self.budget!r}")


@dataclass
class MatroidSpec:
    """Partition matroid (per-category capacities) or an explicit table of
    independent sets for small test instances."""

    kind: str
    categories: dict[str, str] = field(default_factory=dict)
    capacities: dict[str, int] = field(default_factory=dict)
    independent: frozenset[frozenset[str]] | None = None
    ground: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if self.kind == PARTITION:
            for cat, cap in self.capacities.items():
                if int(cap) != cap or cap < 0:
                    raise ConfigError(f"capacity of category {cat!r} must be a non-negative integer")
            unknown = {c for c in self.categories.values() if c not in self.capacities}
            if unknown:
                raise ConfigError(f"categories without a capacity: {sorted(unknown)}")
        elif self.kind == TABLE:
            if self.independent is None:
                raise ConfigError("table matroid needs the family of independent sets")
            fam = frozenset(frozenset(s) for s in self.independent)
            if frozenset() not in fam:
                raise ConfigError("the empty set must be independent")
            for s in fam:
                for r in range(len(s)):
                    for sub in combinations(sorted(s), r):
                        if frozenset(sub) not in fam:
                            raise ConfigError(f"independence family is not downward closed at {sorted(s)}")
            self.independent = fam
            if self.ground is None:
                self.ground = frozenset().union(*fam)
        else:
            raise ConfigError(f"unknown matroid kind {self.kind!r}")

    @classmethod
    def partition(cls, categories: Mapping[str, str], capacities: Mapping[str, int]) -> "MatroidSpec":
        return cls(PARTITION, dict(categories), {c: int(v) for c, v in capacities.items()})

    @classmethod
    def table(cls, independent: Iterable[Iterable[str]], ground: Iterable[str] | None = None) -> "MatroidSpec":
        return cls(TABLE, independent=frozenset(frozenset(s) for s in independent),
                   ground=frozenset(ground) if ground is not None else None)

    @classmethod
    def from_json(cls, doc: str | Mapping) -> "MatroidSpec":
        """``{"capacities": {"A": 1, ...}, "categories": {"elementId": "A", ...}}``"""
        if isinstance(doc, str):
            doc = json.loads(doc)
        if "capacities" not in doc:
            raise ConfigError("matroid document needs a 'capacities' object")
        return cls.partition(doc.get("categories", {}), doc["capacities"])

    def with_elements(self, elements: Iterable[Element]) -> "MatroidSpec":
        """Fill missing partition categories from the elements' ``category``
        field and check that every element is known."""
        if self.kind == TABLE:
            for e in elements:
                if e.id not in self.ground:
                    raise IngestError(f"element {e.id!r} is not in the matroid ground set")
            return self
        cats = dict(self.categories)
        for e in elements:
            if e.id not in cats:
                if e.category is None:
                    raise IngestError(f"element {e.id!r} has no partition category")
                cats[e.id] = e.category
            if cats[e.id] not in self.capacities:
                raise IngestError(f"element {e.id!r} has unknown category {cats[e.id]!r}")
        return MatroidSpec.partition(cats, self.capacities)

    def rank_bound(self) -> int:
        if self.kind == PARTITION:
            return sum(self.capacities.values())
        return max(len(s) for s in self.independent)

    def is_independent(self, ids: Iterable[str]) -> bool:
        ids = list(ids)
        if self.kind == TABLE:
            for i in ids:
                if i not in self.ground:
                    raise KeyError(f"unknown element {i!r}")
            return frozenset(ids) in self.independent
        used: dict[str, int] = {}
        for i in ids:
            try:
                cat = self.categories[i]
            except KeyError:
                raise KeyError(f"unknown element {i!r}") from None
            used[cat] = used.get(cat, 0) + 1
            if used[cat] > self.capacities[cat]:
                return False
        return True


def is_independent(spec: MatroidSpec, ids: Iterable[str]) -> bool:
    return spec.is_independent(ids)


def knapsack_clipper(
    stream: Iterable[Element],
    spec: KnapsackSpec,
    tau_minus: float,
    tau_plus: float,
    *,
    objective: ObjectiveSpec = FEATURE_OBJECTIVE,
    test_mode: bool = False,
) -> RunResult:
    """Clipper on gain-to-cost ratios under ``sum c(v) <= budget``.

    The output is the better of the greedy-completed ``S`` and the best
    buffered singleton ``x*``. Telemetry ``extra`` carries what the
    alpha/beta bound needs: ``s_plus_ids`` (the first budget-violating greedy
    extension, or None), ``alpha``, ``cost_s_n``, ``x_star``.
    """
    if tau_minus > tau_plus:
        raise ConfigError(f"tau_minus ({tau_minus}) must not exceed tau_plus ({tau_plus})")
    budget = spec.budget
    started = time.perf_counter()
    state = ClipperState(objective.new_state(), k=0, thresholds=Thresholds(tau_minus, tau_plus),
                         rejected_log=[] if test_mode else None)
    S = state.solution
    spent = 0.0
    for i, v in _unique(stream):
        if v.cost > budget:
            # Cannot be part of any feasible set.
            state.reject(i, v, math.nan, "over-budget")
            continue
        g = S.gain(v)
        ratio = g / v.cost
        if g <= ZERO_GAIN:
            state.reject(i, v, g, "zero-gain")
        elif ratio >= tau_plus and spent + v.cost <= budget:
            S.commit(v)
            spent += v.cost
        elif ratio > tau_minus:
            state.buffer.append((i, v))
        else:
            state.reject(i, v, g)
        state.note_peak()

    s_n_ids = list(S.members)
    b_n = [v for _, v in state.buffer]
    cost_s_n = spent
    s_plus = None
    candidates = list(state.buffer)
    while candidates:
        best_pos, best_ratio, best_arrival = -1, -math.inf, math.inf
        for pos, (arrival, w) in enumerate(candidates):
            r = S.gain(w) / w.cost
            if r > best_ratio or (r == best_ratio and arrival < best_arrival):
                best_pos, best_ratio, best_arrival = pos, r, arrival
        _, w = candidates.pop(best_pos)
        if spent + w.cost > budget:
            if s_plus is None:
                s_plus = list(S.members) + [w.id]
            continue
        S.commit(w)
        spent += w.cost

    cost = {v.id: v.cost for v in b_n}
    if s_plus is not None:
        s_n_set = set(s_n_ids)
        alpha = budget - math.fsum(cost[i] for i in s_plus if i not in s_n_set)
    else:
        # No violation: every buffered element fit; alpha = c(S_n) keeps the
        # bound valid because f(S) >= f(S_n) >= c(S_n) tau+.
        alpha = cost_s_n

    x_star, x_val = None, -math.inf
    for _, w in state.buffer:
        val = objective.singleton(w)
        if val > x_val:
            x_star, x_val = w, val
    chosen = "S"
    solution, value = list(S.members), S.value
    if x_star is not None and x_val > value:
        chosen, solution, value = "x*", [x_star.id], x_val

    tel = Telemetry(
        k=0, s_n=len(s_n_ids), b_n=len(b_n), tau_minus=tau_minus, tau_plus=tau_plus,
        evaluations=S.evals, rejections=state.rejections, memory_units=state.peak_stored,
        wall_ms=(time.perf_counter() - started) * 1e3, s_n_ids=s_n_ids, b_n_ids=[v.id for v in b_n],
        rejected=state.rejected_log,
    )
    tel.extra.update(
        budget=budget, s_plus_ids=s_plus, alpha=alpha, cost_s_n=cost_s_n,
        x_star=x_star.id if x_star else None, chosen=chosen,
        cost=math.fsum(e.cost for e in (S.elements if chosen == "S" else [x_star])) if solution else 0.0,
    )
    return RunResult("knapsack-clipper", solution, value, tel)


def matroid_clipper(
    stream: Iterable[Element],
    spec: MatroidSpec,
    k: int | None,
    tau_minus: float,
    tau_plus: float,
    *,
    objective: ObjectiveSpec = FEATURE_OBJECTIVE,
    test_mode: bool = False,
) -> RunResult:
    """Clipper whose acceptance also requires ``S + v`` independent; the final
    greedy only considers buffered elements that keep ``S`` independent."""
    if k is None:
        k = spec.rank_bound()
    _check_k(k)
    if tau_minus > tau_plus:
        raise ConfigError(f"tau_minus ({tau_minus}) must not exceed tau_plus ({tau_plus})")
    started = time.perf_counter()
    state = ClipperState(objective.new_state(), k, Thresholds(tau_minus, tau_plus),
                         rejected_log=[] if test_mode else None)
    S = state.solution
    for i, v in _unique(stream):
        if spec.kind == PARTITION and v.id not in spec.categories:
            raise IngestError(f"element {v.id!r} has no partition category")
        g = S.gain(v)
        if g <= ZERO_GAIN:
            state.reject(i, v, g, "zero-gain")
        elif g >= tau_plus and len(S) < k and spec.is_independent(S.members + [v.id]):
            S.commit(v)
        elif g > tau_minus:
            state.buffer.append((i, v))
        else:
            state.reject(i, v, g)
        state.note_peak()

    s_n_ids = list(S.members)
    b_n_ids = [v.id for _, v in state.buffer]
    while len(S) < k:
        feasible = [(a, w) for a, w in state.buffer if spec.is_independent(S.members + [w.id])]
        if not feasible:
            break
        best_pos, best_gain, best_arrival = -1, -math.inf, math.inf
        for pos, (arrival, w) in enumerate(feasible):
            g = S.gain(w)
            if g > best_gain or (g == best_gain and arrival < best_arrival):
                best_pos, best_gain, best_arrival = pos, g, arrival
        pick = feasible[best_pos][1]
        state.buffer = [(a, w) for a, w in state.buffer if w.id != pick.id]
        S.commit(pick)

    tel = Telemetry(
        k=k, s_n=len(s_n_ids), b_n=len(b_n_ids), tau_minus=tau_minus, tau_plus=tau_plus,
        evaluations=S.evals, rejections=state.rejections, memory_units=state.peak_stored,
        wall_ms=(time.perf_counter() - started) * 1e3, s_n_ids=s_n_ids, b_n_ids=b_n_ids,
        rejected=state.rejected_log,
    )
    return RunResult("matroid-clipper", list(S.members), S.value, tel)
