"""Submodular objectives with incremental evaluation.

Two kinds are supported:

* ``feature-based``: ``f(S) = sum_u sqrt(c_u(S))`` with ``c_u(S) = sum_{v in S} w_{v,u}``.
  A marginal-gain query touches only the features of the queried element.
* ``modular``: ``f(S) = sum_{v in S} value[v]``. Greedy is exact on it, which
  makes it a cheap analytic test objective.

A :class:`SolutionState` is the mutable evaluator for one growing set ``S``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import ConfigError, DuplicateElementError

FEATURE_BASED = "feature-based"
MODULAR = "modular"

# Full from-scratch rebuild of the accumulators after this many commits.
REFRESH_EVERY = 10_000


@dataclass(frozen=True)
class Element:
    """One stream item: sparse non-negative features, a positive cost."""

    id: str
    features: Mapping[str, float] = field(default_factory=dict)
    cost: float = 1.0
    category: str | None = None

    def __post_init__(self) -> None:
        clean = {}
        for key, weight in self.features.items():
            weight = float(weight)
            if not math.isfinite(weight) or weight < 0:
                raise ValueError(f"element {self.id!r}: feature {key!r} has invalid weight {weight!r}")
            if weight > 0:
                clean[str(key)] = weight
        cost = float(self.cost)
        if not math.isfinite(cost) or cost <= 0:
            raise ValueError(f"element {self.id!r}: cost must be finite and > 0, got {self.cost!r}")
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "features", MappingProxyType(clean))
        object.__setattr__(self, "cost", cost)

    def __hash__(self) -> int:
        return hash(self.id)


def _sqrt_step(c: float, w: float) -> float:
    # sqrt(c + w) - sqrt(c) without cancellation; never negative.
    return w / (math.sqrt(c + w) + math.sqrt(c))


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str = FEATURE_BASED
    values: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in (FEATURE_BASED, MODULAR):
            raise ConfigError(f"unknown objective kind {self.kind!r}")
        if self.kind == MODULAR:
            if self.values is None:
                raise ConfigError("modular objective needs a value map")
            vals = {str(k): float(v) for k, v in self.values.items()}
            bad = [k for k, v in vals.items() if not math.isfinite(v) or v < 0]
            if bad:
                raise ConfigError(f"modular values must be finite and >= 0: {bad[:5]}")
            object.__setattr__(self, "values", MappingProxyType(vals))

    @classmethod
    def modular(cls, values: Mapping[str, float]) -> "ObjectiveSpec":
        return cls(MODULAR, values)

    def new_state(self) -> "SolutionState":
        return SolutionState(self)

    def evaluate(self, elements: Iterable[Element]) -> float:
        """From-scratch ``f(S)``; never uses incremental state."""
        elements = list(elements)
        if self.kind == MODULAR:
            return math.fsum(self.values[e.id] for e in elements)
        acc: dict[str, float] = {}
        for e in elements:
            for u, w in e.features.items():
                acc[u] = acc.get(u, 0.0) + w
        return math.fsum(math.sqrt(c) for c in acc.values())

    def singleton(self, v: Element) -> float:
        if self.kind == MODULAR:
            return self.values[v.id]
        return math.fsum(math.sqrt(w) for w in v.features.values())


FEATURE_OBJECTIVE = ObjectiveSpec()


class SolutionState:
    """Incremental evaluator for a set ``S``.

    Keeps members in insertion order, the feature accumulators ``c_u(S)`` and
    the cached value ``f(S)``. ``evals`` counts gain and swap queries.
    Not thread-safe; one owner at a time.
    """

    __slots__ = ("objective", "members", "_elements", "acc", "_count", "value", "evals", "_commits")

    def __init__(self, objective: ObjectiveSpec = FEATURE_OBJECTIVE) -> None:
        self.objective = objective
        self.members: list[str] = []
        self._elements: dict[str, Element] = {}
        self.acc: dict[str, float] = {}
        self._count: dict[str, int] = {}
        self.value = 0.0
        self.evals = 0
        self._commits = 0

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, element_id: object) -> bool:
        return element_id in self._elements

    @property
    def elements(self) -> list[Element]:
        return [self._elements[i] for i in self.members]

    def element(self, element_id: str) -> Element:
        return self._elements[element_id]

    def evaluate(self) -> float:
        return self.value

    def gain(self, v: Element) -> float:
        """Marginal gain ``f(v | S)``."""
        if v.id in self._elements:
            raise DuplicateElementError(f"element {v.id!r} is already in the solution")
        self.evals += 1
        if self.objective.kind == MODULAR:
            return self.objective.values[v.id]
        acc = self.acc
        return math.fsum(_sqrt_step(acc.get(u, 0.0), w) for u, w in v.features.items())

    def commit(self, v: Element) -> "SolutionState":
        """``S <- S + v`` in place; returns self."""
        if v.id in self._elements:
            raise DuplicateElementError(f"element {v.id!r} is already in the solution")
        if self.objective.kind == MODULAR:
            self.value += self.objective.values[v.id]
        else:
            delta = 0.0
            for u, w in v.features.items():
                c = self.acc.get(u, 0.0)
                delta += _sqrt_step(c, w)
                self.acc[u] = c + w
                self._count[u] = self._count.get(u, 0) + 1
            self.value += delta
        self.members.append(v.id)
        self._elements[v.id] = v
        self._commits += 1
        if self._commits % REFRESH_EVERY == 0:
            self.refresh()
        return self

    def remove(self, element_id: str) -> Element:
        """``S <- S - u`` in place; returns the removed element."""
        if element_id not in self._elements:
            raise KeyError(f"element {element_id!r} is not in the solution")
        u = self._elements.pop(element_id)
        self.members.remove(element_id)
        if self.objective.kind == MODULAR:
            self.value -= self.objective.values[element_id]
            return u
        delta = 0.0
        for f, w in u.features.items():
            c = self.acc[f]
            left = self._count[f] - 1
            if left == 0:
                new = 0.0
                del self.acc[f]
                del self._count[f]
            else:
                new = max(c - w, 0.0)
                self.acc[f] = new
                self._count[f] = left
            delta += math.sqrt(new) - math.sqrt(c)
        self.value += delta
        return u

    def swap_value(self, v: Element, u_id: str) -> float:
        """``f(S - u + v)`` without modifying the state."""
        if u_id not in self._elements:
            raise KeyError(f"element {u_id!r} is not in the solution")
        if v.id in self._elements:
            raise DuplicateElementError(f"element {v.id!r} is already in the solution")
        self.evals += 1
        if self.objective.kind == MODULAR:
            vals = self.objective.values
            return self.value - vals[u_id] + vals[v.id]
        u = self._elements[u_id]
        touched: dict[str, float] = {}
        for f, w in u.features.items():
            touched[f] = touched.get(f, 0.0) - w
        for f, w in v.features.items():
            touched[f] = touched.get(f, 0.0) + w
        delta = 0.0
        for f, dw in touched.items():
            c = self.acc.get(f, 0.0)
            if f in u.features and self._count.get(f, 0) == 1:
                new = v.features.get(f, 0.0)
            else:
                new = max(c + dw, 0.0)
            delta += math.sqrt(new) - math.sqrt(c)
        return self.value + delta

    def swap(self, v: Element, u_id: str) -> None:
        """``S <- S - u + v``; ``v`` is appended at the tail."""
        if v.id in self._elements:
            raise DuplicateElementError(f"element {v.id!r} is already in the solution")
        self.remove(u_id)
        self.commit(v)

    def refresh(self) -> None:
        """Rebuild accumulators and cached value from scratch."""
        if self.objective.kind == MODULAR:
            self.value = self.objective.evaluate(self.elements)
            return
        acc: dict[str, float] = {}
        count: dict[str, int] = {}
        for e in self.elements:
            for u, w in e.features.items():
                acc[u] = acc.get(u, 0.0) + w
                count[u] = count.get(u, 0) + 1
        self.acc = acc
        self._count = count
        self.value = math.fsum(math.sqrt(c) for c in acc.values())

    def copy(self) -> "SolutionState":
        other = SolutionState(self.objective)
        other.members = list(self.members)
        other._elements = dict(self._elements)
        other.acc = dict(self.acc)
        other._count = dict(self._count)
        other.value = self.value
        other.evals = self.evals
        other._commits = self._commits
        return other


def rebuild(elements: Iterable[Element], objective: ObjectiveSpec = FEATURE_OBJECTIVE) -> SolutionState:
    """Fresh state holding ``elements``, built by sequential commits."""
    state = SolutionState(objective)
    for e in elements:
        state.commit(e)
    return state
