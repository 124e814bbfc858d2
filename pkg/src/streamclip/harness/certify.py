"""Run a clipper, solve the instance exactly and check the certified bound."""

from __future__ import annotations

import math
from typing import Any, Sequence

from ..algorithms import proof_conditions
from ..bounds import certify_run, knapsack_bound, matroid_bound
from ..constraints import KnapsackSpec
from ..errors import BoundDomainError, ConfigError
from ..objective import Element
from ..oracle import (Cardinality, bijection_k_prime, compute_k_n, count_valid_bijections,
                      exhaustive_max, extend_to_base)
from .runner import RunParams, run_algorithm

CERTIFIABLE = ("naive-clipper", "stream-clipper", "knapsack-clipper", "matroid-clipper")


def certify(algo: str, elements: Sequence[Element], p: RunParams, tol: float = 1e-9) -> dict[str, Any]:
    """Returns a JSON-ready report whose ``status`` is pass, fail or
    precondition-failed. Raises :class:`OracleRefusal` on oversized input."""
    if algo not in CERTIFIABLE:
        raise ConfigError(f"certify supports {', '.join(CERTIFIABLE)}, not {algo!r}")
    elements = list(elements)
    p = p.with_(test_mode=True)
    if algo == "knapsack-clipper":
        return _certify_knapsack(elements, p, tol)
    if algo == "matroid-clipper":
        return _certify_matroid(elements, p, tol)

    if p.k is None:
        raise ConfigError(f"{algo} requires --k")
    oracle = exhaustive_max(elements, Cardinality(p.k))
    result = run_algorithm(algo, elements, p)
    tel = result.telemetry
    k_n = compute_k_n(oracle.optimal_set, tel.s_n_ids, tel.b_n_ids)
    cond = proof_conditions(result, elements)
    proof_ok = cond["rejected_ok"] and cond["solution_ok"]
    report = certify_run(result, oracle.f_star, k_n, proof_ok=proof_ok, tol=tol)
    return {
        "algorithm": algo,
        "status": report.status,
        "report": report.to_dict(),
        "proof_conditions": cond,
        "f_star": oracle.f_star,
        "optimal_set": list(oracle.optimal_set),
        "solution_ids": result.solution_ids,
        "achieved": result.objective,
    }


def _certify_knapsack(elements: list[Element], p: RunParams, tol: float) -> dict[str, Any]:
    if p.budget is None:
        raise ConfigError("knapsack-clipper requires --budget")
    oracle = exhaustive_max(elements, KnapsackSpec(p.budget))
    result = run_algorithm("knapsack-clipper", elements, p)
    tel = result.telemetry
    cost = {e.id: e.cost for e in elements}
    kept = set(tel.s_n_ids) | set(tel.b_n_ids)
    beta = math.fsum(cost[i] for i in oracle.optimal_set if i not in kept)
    alpha = tel.extra["alpha"]
    out: dict[str, Any] = {
        "algorithm": "knapsack-clipper",
        "f_star": oracle.f_star,
        "optimal_set": list(oracle.optimal_set),
        "solution_ids": result.solution_ids,
        "achieved": result.objective,
        "feasible": tel.extra["cost"] <= p.budget + tol,
        "alpha": alpha,
        "beta": beta,
        "quarter_f_star": oracle.f_star / 4,
    }
    try:
        bound = knapsack_bound(oracle.f_star, p.budget, alpha, beta, p.tau_minus, p.tau_plus)
    except BoundDomainError as exc:
        bound = None
        out["notes"] = [str(exc)]
    out["knapsack_bound"] = bound
    ok = out["feasible"] and result.objective >= oracle.f_star / 4 - tol
    if bound is not None:
        ok = ok and result.objective >= bound - tol
    out["status"] = "pass" if ok else "fail"
    return out


def _certify_matroid(elements: list[Element], p: RunParams, tol: float) -> dict[str, Any]:
    if p.matroid is None:
        raise ConfigError("matroid-clipper requires --matroid")
    spec = p.matroid.with_elements(elements)
    oracle = exhaustive_max(elements, spec)
    result = run_algorithm("matroid-clipper", elements, p.with_(matroid=spec))
    tel = result.telemetry
    s_star = list(oracle.optimal_set)
    base = extend_to_base(result.solution_ids, s_star, spec)
    k_prime = bijection_k_prime(s_star, base, tel.s_n_ids, tel.b_n_ids, spec, counted=result.solution_ids)
    k = len(s_star)
    bound = matroid_bound(oracle.f_star, k, k_prime, tel.s_n, tel.tau_plus)
    independent = spec.is_independent(result.solution_ids)
    ok = independent and result.objective >= bound - tol
    return {
        "algorithm": "matroid-clipper",
        "status": "pass" if ok else "fail",
        "f_star": oracle.f_star,
        "optimal_set": s_star,
        "solution_ids": result.solution_ids,
        "achieved": result.objective,
        "independent": independent,
        "k_prime": k_prime,
        "valid_bijections": count_valid_bijections(s_star, base, spec),
        "matroid_bound": bound,
    }
