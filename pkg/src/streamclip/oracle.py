"""Brute-force ground truth for small instances."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .constraints import KnapsackSpec, MatroidSpec
from .errors import ConfigError, OracleRefusal
from .objective import FEATURE_OBJECTIVE, MODULAR, Element, ObjectiveSpec

SetFunction = Callable[[frozenset], float]


@dataclass(frozen=True)
class Cardinality:
    k: int


@dataclass
class OracleResult:
    optimal_set: tuple[str, ...]
    f_star: float
    ties: int


class TableFunction:
    """Set function given by an explicit table ``frozenset -> value``."""

    def __init__(self, table: Mapping[Iterable[str], float], must_be_submodular: bool = False):
        self.table = {frozenset(s): float(v) for s, v in table.items()}
        self.ground = frozenset().union(*self.table)
        if self.table.get(frozenset(), None) != 0.0:
            raise ConfigError("table function must have f(empty) = 0")
        if len(self.ground) > 12:
            raise ConfigError("table functions are limited to ground sets of size <= 12")
        if must_be_submodular:
            self._verify()

    def __call__(self, s: frozenset) -> float:
        return self.table[frozenset(s)]

    def _verify(self) -> None:
        items = sorted(self.ground)
        subsets = [frozenset(c) for r in range(len(items) + 1) for c in combinations(items, r)]
        missing = [s for s in subsets if s not in self.table]
        if missing:
            raise ConfigError(f"table misses {len(missing)} subsets")
        for a in subsets:
            for v in self.ground - a:
                if self(a | {v}) - self(a) < -1e-12:
                    raise ConfigError(f"not monotone at {sorted(a)} + {v}")
                for w in self.ground - a - {v}:
                    # local form of diminishing returns: A vs A + w
                    lhs = self(a | {v}) - self(a)
                    rhs = self(a | {v, w}) - self(a | {w})
                    if lhs < rhs - 1e-12:
                        raise ConfigError(f"not submodular at {sorted(a)}, v={v}, w={w}")


def feature_set_function(elements: Sequence[Element], objective: ObjectiveSpec = FEATURE_OBJECTIVE) -> SetFunction:
    """Dense from-scratch evaluator ``frozenset(ids) -> f``; independent of
    the incremental accumulator code."""
    ids = [e.id for e in elements]
    index = {i: j for j, i in enumerate(ids)}
    if objective.kind == MODULAR:
        vals = np.array([objective.values[i] for i in ids])
        return lambda s: float(vals[[index[i] for i in s]].sum()) if s else 0.0
    feats = sorted({u for e in elements for u in e.features})
    col = {u: j for j, u in enumerate(feats)}
    W = np.zeros((len(elements), max(len(feats), 1)))
    for r, e in enumerate(elements):
        for u, w in e.features.items():
            W[r, col[u]] = w

    def f(s: frozenset) -> float:
        if not s:
            return 0.0
        return float(np.sqrt(W[[index[i] for i in s]].sum(axis=0)).sum())

    return f


def _guard(n: int, constraint) -> None:
    if isinstance(constraint, Cardinality):
        ok = n <= 12 or (n <= 20 and constraint.k <= 4)
    else:
        ok = n <= 12
    if not ok:
        raise OracleRefusal(
            f"exhaustive search refused: n={n}"
            + (f", k={constraint.k}" if isinstance(constraint, Cardinality) else "")
            + " (limits: n <= 20 with k <= 4, otherwise n <= 12)"
        )


def _feasible_subsets(elements: Sequence[Element], constraint) -> Iterator[tuple[str, ...]]:
    ids = sorted(e.id for e in elements)
    if isinstance(constraint, Cardinality):
        for r in range(min(constraint.k, len(ids)) + 1):
            yield from combinations(ids, r)
        return
    cost = {e.id: e.cost for e in elements}
    for r in range(len(ids) + 1):
        for c in combinations(ids, r):
            if isinstance(constraint, KnapsackSpec):
                if math.fsum(cost[i] for i in c) <= constraint.budget:
                    yield c
            elif isinstance(constraint, MatroidSpec):
                if constraint.is_independent(c):
                    yield c
            else:
                raise ConfigError(f"unsupported constraint {constraint!r}")


def exhaustive_max(
    elements: Sequence[Element],
    constraint,
    objective: ObjectiveSpec = FEATURE_OBJECTIVE,
    fn: SetFunction | None = None,
) -> OracleResult:
    """Enumerate every feasible subset; the lexicographically smallest optimum wins."""
    elements = list(elements)
    if isinstance(constraint, int):
        constraint = Cardinality(constraint)
    _guard(len(elements), constraint)
    fn = fn or feature_set_function(elements, objective)
    best, best_val, ties = (), 0.0, 0
    first = True
    for c in _feasible_subsets(elements, constraint):
        val = fn(frozenset(c))
        if first or val > best_val:
            best, best_val, ties, first = c, val, 1, False
        elif val == best_val:
            ties += 1
            if c < best:
                best = c
    return OracleResult(best, best_val, ties)


def compute_k_n(s_star: Iterable[str], s_n: Iterable[str], b_n: Iterable[str]) -> int:
    """Optimal elements rejected outright: ``|(S* - S_n) - B_n|``."""
    return len(set(s_star) - set(s_n) - set(b_n))


def valid_bijections(
    s_star: Iterable[str], s: Iterable[str], matroid: MatroidSpec
) -> Iterator[dict[str, str]]:
    """Bijections ``phi: S* -> S`` with ``S - phi(x) + x`` independent for each
    ``x``. Elements of ``S* & S`` are pinned to themselves."""
    s_star, s = set(s_star), set(s)
    if len(s_star) != len(s):
        raise ConfigError(f"|S|={len(s)} differs from |S*|={len(s_star)}; bijection needs equal sizes")
    if len(s_star) > 10:
        raise OracleRefusal("bijection search limited to sets of size <= 10")
    pinned = {x: x for x in s_star & s}
    left = sorted(s_star - s)
    right = sorted(s - s_star)
    for perm in permutations(right):
        phi = dict(pinned)
        phi.update(zip(left, perm))
        if all(matroid.is_independent((s - {phi[x]}) | {x}) for x in left):
            yield phi


def count_valid_bijections(s_star: Iterable[str], s: Iterable[str], matroid: MatroidSpec) -> int:
    return sum(1 for _ in valid_bijections(s_star, s, matroid))


def bijection_k_prime(
    s_star: Iterable[str], s: Iterable[str], s_n: Iterable[str], b_n: Iterable[str], matroid: MatroidSpec,
    *, counted: Iterable[str] | None = None,
) -> int:
    """``k' = |{v in S - S_n : phi^-1(v) in S* & B_n}|`` for the first valid ``phi``.

    ``counted`` restricts ``A`` to a subset of ``S``; used when ``S`` is a
    base extension of a smaller solution and padding must not count.
    """
    s_star, s, s_n, b_n = set(s_star), set(s), set(s_n), set(b_n)
    phi = next(valid_bijections(s_star, s, matroid), None)
    if phi is None:
        raise ConfigError("no bijection satisfies the exchange requirement")
    inverse = {v: x for x, v in phi.items()}
    pool = s if counted is None else s & set(counted)
    return sum(1 for v in pool - s_n if inverse[v] in s_star & b_n)


def extend_to_base(s: Sequence[str], s_star: Iterable[str], matroid: MatroidSpec) -> list[str]:
    """Augment independent ``s`` from ``s_star`` until the sizes match."""
    out = list(s)
    for x in sorted(set(s_star) - set(s)):
        if len(out) >= len(set(s_star)):
            break
        if matroid.is_independent(out + [x]):
            out.append(x)
    if len(out) != len(set(s_star)):
        raise ConfigError("cannot extend the solution to the size of S*; S* is not a base")
    return out


@dataclass
class PropertyReport:
    trials: int
    submodular_violations: int
    monotone_violations: int
    swap_violations: int
    worst_submodular_margin: float
    worst_monotone_margin: float
    worst_swap_margin: float

    @property
    def clean(self) -> bool:
        return not (self.submodular_violations or self.monotone_violations or self.swap_violations)


def property_check(fn: SetFunction, ground: Sequence[str], n_trials: int, seed: int = 0,
                   tol: float = 1e-9) -> PropertyReport:
    """Sample ``A <= B``, ``v`` outside ``B`` for diminishing returns and
    monotonicity, and ``(S, u, v, w)`` for the swap inequality
    ``f(w | S-u+v) <= f(w | S) + f(u | S-u+v)``. Margins are ``>= 0`` when the
    property holds."""
    rng = random.Random(seed)
    ground = sorted(ground)
    if len(ground) < 3:
        raise ConfigError("property_check needs a ground set of at least 3 elements")
    sub_v = mono_v = swap_v = 0
    worst_sub = worst_mono = worst_swap = math.inf
    for _ in range(n_trials):
        v = rng.choice(ground)
        rest = [x for x in ground if x != v]
        B = frozenset(x for x in rest if rng.random() < 0.5)
        A = frozenset(x for x in B if rng.random() < 0.5)
        fA, fB = fn(A), fn(B)
        gA = fn(A | {v}) - fA
        gB = fn(B | {v}) - fB
        worst_sub = min(worst_sub, gA - gB)
        worst_mono = min(worst_mono, gA, fB - fA)
        if gA - gB < -tol:
            sub_v += 1
        if gA < -tol or fB - fA < -tol:
            mono_v += 1

        u = rng.choice(ground)
        v, w = rng.sample([x for x in ground if x != u], 2)
        S = frozenset(x for x in ground if x not in (u, v, w) and rng.random() < 0.5) | {u}
        swapped = (S - {u}) | {v}
        lhs = fn(swapped | {w}) - fn(swapped)
        rhs = fn(S | {w}) - fn(S) + fn(swapped | {u}) - fn(swapped)
        worst_swap = min(worst_swap, rhs - lhs)
        if lhs > rhs + tol:
            swap_v += 1
    return PropertyReport(n_trials, sub_v, mono_v, swap_v, worst_sub, worst_mono, worst_swap)
