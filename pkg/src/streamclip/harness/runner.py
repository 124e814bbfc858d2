"""Dispatch one named algorithm over one stream."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .. import algorithms as alg
from ..constraints import KnapsackSpec, MatroidSpec, knapsack_clipper, matroid_clipper
from ..errors import ConfigError
from ..objective import FEATURE_OBJECTIVE, Element, ObjectiveSpec

ALGORITHMS = (
    "naive-clipper", "stream-clipper", "greedy", "lazy-greedy", "sieve", "swap",
    "minibatch", "knapsack-clipper", "matroid-clipper",
)


@dataclass(frozen=True)
class RunParams:
    k: int | None = None
    buffer: int | None = None
    fhat: float | None = None
    tau_minus: float | None = None
    tau_plus: float | None = None
    delta_tau: float | None = None
    epsilon: float = 0.1
    c: float = 1.0
    n: int | None = None
    budget: float | None = None
    matroid: MatroidSpec | None = None
    max_instances: int = 256
    swap_rule: str = "clamp"
    test_mode: bool = False

    def with_(self, **kw) -> "RunParams":
        return replace(self, **kw)


def _need(p: RunParams, algo: str, *names: str) -> None:
    missing = [n for n in names if getattr(p, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ConfigError(f"{algo} requires {flags}")


def run_algorithm(algo: str, elements: Sequence[Element], p: RunParams,
                  objective: ObjectiveSpec = FEATURE_OBJECTIVE) -> alg.RunResult:
    if algo not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    if algo != "matroid-clipper" and algo != "knapsack-clipper":
        _need(p, algo, "k")
    if algo == "naive-clipper":
        _need(p, algo, "tau_minus", "tau_plus")
        return alg.naive_stream_clipper(elements, p.k, p.tau_minus, p.tau_plus,
                                        objective=objective, test_mode=p.test_mode)
    if algo == "stream-clipper":
        _need(p, algo, "buffer")
        given = [x is not None for x in (p.tau_minus, p.tau_plus, p.delta_tau)]
        override = None
        if all(given):
            override = (p.tau_minus, p.tau_plus, p.delta_tau)
        elif any(given):
            raise ConfigError("stream-clipper threshold override needs all of --tau-minus, --tau-plus, --delta-tau")
        return alg.stream_clipper(elements, p.k, p.buffer, p.fhat, threshold_override=override,
                                  swap_rule=p.swap_rule, objective=objective, test_mode=p.test_mode)
    if algo == "greedy":
        return alg.greedy(elements, p.k, objective=objective)
    if algo == "lazy-greedy":
        return alg.lazy_greedy(elements, p.k, objective=objective)
    if algo == "sieve":
        return alg.sieve_streaming(elements, p.k, p.epsilon, fhat=p.fhat,
                                   max_instances=p.max_instances, objective=objective)
    if algo == "swap":
        return alg.swap_streaming(elements, p.k, p.c, objective=objective)
    if algo == "minibatch":
        _need(p, algo, "n")
        return alg.minibatch_secretary(elements, p.k, p.n, objective=objective)
    if algo == "knapsack-clipper":
        _need(p, algo, "budget", "tau_minus", "tau_plus")
        return knapsack_clipper(elements, KnapsackSpec(p.budget), p.tau_minus, p.tau_plus,
                                objective=objective, test_mode=p.test_mode)
    _need(p, algo, "matroid", "tau_minus", "tau_plus")
    spec = p.matroid.with_elements(elements)
    return matroid_clipper(elements, spec, p.k, p.tau_minus, p.tau_plus,
                           objective=objective, test_mode=p.test_mode)
