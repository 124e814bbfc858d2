"""Closed-form, data-dependent lower bounds for the clipper family.

``g(k_n)`` below is the bound as a function of ``k_n``, the number of optimal
elements rejected outright:

    g(k_n) = (1 - e^{-x}) (f* - k_n tau-) + e^{-x} s_n tau+,   x = (k - s_n)/(k - k_n)

with ``s_n = |S_n|``, the solution size after the streaming pass.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

from .errors import BoundDomainError, ConfigError

CASE1, CASE2, CASE3 = "case1", "case2", "case3"
HALF = "half"
ONE_MINUS_INV_E = "one-minus-1/e"


@dataclass(frozen=True)
class BoundInputs:
    f_star: float
    k: int
    k_n: float
    s_n: int
    tau_minus: float
    tau_plus: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.f_star) or self.f_star < 0:
            raise ConfigError(f"f_star must be finite and >= 0, got {self.f_star!r}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 0 <= self.k_n <= self.k:
            raise ConfigError(f"k_n must lie in [0, k], got {self.k_n!r}")
        if not 0 <= self.s_n <= self.k:
            raise ConfigError(f"s_n must lie in [0, k], got {self.s_n!r}")
        if self.tau_minus > self.tau_plus:
            raise ConfigError("tau_minus must not exceed tau_plus")

    def replace(self, **kw: Any) -> "BoundInputs":
        d = asdict(self)
        d.update(kw)
        return BoundInputs(**d)


@dataclass
class BoundReport:
    case: str
    bound: float
    inputs: BoundInputs
    guarantees: dict[str, float] = field(default_factory=dict)
    achieved: float | None = None
    status: str | None = None  # pass | fail | precondition-failed
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["inputs"] = asdict(self.inputs)
        return d


def g_eval(inp: BoundInputs) -> float:
    k, kn, s = inp.k, inp.k_n, inp.s_n
    if kn >= k:
        # limit of the exponential form as k_n -> k
        return inp.f_star - k * inp.tau_minus
    w = math.exp(-(k - s) / (k - kn))
    return (1 - w) * (inp.f_star - kn * inp.tau_minus) + w * s * inp.tau_plus


def g_derivatives(inp: BoundInputs) -> tuple[float, float]:
    """First and second derivative of ``g`` in ``k_n`` (treated as real)."""
    k, kn, s = inp.k, inp.k_n, inp.s_n
    if kn >= k:
        raise BoundDomainError("derivatives of g are singular at k_n = k")
    tm, tp, f = inp.tau_minus, inp.tau_plus, inp.f_star
    d = k - kn
    w = math.exp(-(k - s) / d)
    first = (w * (1 - kn * (k - s) / d**2) - 1) * tm + w * (k - s) / d**2 * (f - s * tp)
    second = w * (k - s) / d**4 * ((k - 2 * kn + s) * (f - s * tp) - (2 * k**2 - 3 * k * kn + s * kn) * tm)
    return first, second


def g_min(f_star: float, k: int, s_n: int, tau_minus: float, tau_plus: float) -> tuple[float, str, bool]:
    """``min(g(0), g(k))`` and which endpoint attains it.

    The third value says whether ``f* >= k_n tau- + s_n tau+`` holds for every
    ``k_n`` in ``[0, k]``; only then is the endpoint minimum the true minimum.
    """
    base = BoundInputs(f_star, k, 0, s_n, tau_minus, tau_plus)
    g0, gk = g_eval(base), g_eval(base.replace(k_n=k))
    uniform = f_star >= max(0.0, k * tau_minus) + s_n * tau_plus
    if gk < g0:
        return gk, "k", uniform
    return g0, "0", uniform


def classify(inp: BoundInputs) -> str:
    """Bound case 1-3; equality at a boundary goes to the lower case."""
    low = inp.k_n * inp.tau_minus + inp.s_n * inp.tau_plus
    high = math.exp(1 - inp.s_n / inp.k) * inp.k * inp.tau_minus + inp.s_n * inp.tau_plus
    if inp.f_star <= low:
        return CASE1
    if inp.f_star <= high:
        return CASE2
    return CASE3


def case_bound(inp: BoundInputs) -> BoundReport:
    case = classify(inp)
    if case == CASE1:
        bound = inp.s_n * inp.tau_plus
    elif case == CASE2:
        bound = inp.f_star - inp.k * inp.tau_minus
    else:
        w = math.exp(-1 + inp.s_n / inp.k)
        bound = (1 - w) * inp.f_star + w * inp.s_n * inp.tau_plus
    report = BoundReport(case, bound, inp)
    report.guarantees = corollary_check(inp, case)
    return report


def corollary_check(inp: BoundInputs, case: str | None = None) -> dict[str, float]:
    """Guarantee flags mapped to their certified floor on ``f(S_sc)``."""
    case = case or classify(inp)
    flags: dict[str, float] = {}
    if case == CASE1:
        ok_minus = inp.k_n == 0 or inp.tau_minus <= inp.f_star / (2 * inp.k_n)
        if ok_minus and inp.tau_plus >= inp.tau_minus:
            flags[HALF] = inp.f_star / 2
    elif inp.s_n == 0:
        flags[ONE_MINUS_INV_E] = (1 - math.exp(-1)) * inp.f_star
    return flags


@dataclass
class OrderConditionSets:
    alpha: float
    branch: str  # "m-star" for alpha <= 1/e, "m-sets" otherwise
    m_star: int | None
    m_prime: list[int]
    m1: list[int]
    m2: list[int]
    m: list[int]
    n: int

    @property
    def qualifying(self) -> list[int]:
        """Solution sizes ``|S_n|`` for which ``f(S_sc) >= (1 - alpha) f*`` follows."""
        if self.branch == "m-star":
            return [] if self.m_star is None else list(range(self.m_star, self.n + 1))
        return sorted((set(self.m1) & set(self.m2)) | set(self.m))


def order_condition_sets(
    alpha: float, tau_minus: float, tau_plus: float, f_star: float, k: int, n: int
) -> OrderConditionSets:
    """Scan ``m = 1..n`` for the conditions under which any order reaching
    ``|S_n| = m`` (or ``>= m*``) certifies the factor ``1 - alpha``."""
    if not 0 <= alpha <= 0.5:
        raise ConfigError(f"alpha must lie in [0, 1/2], got {alpha!r}")
    m_prime, m1, m2, m_set = [], [], [], []
    for m in range(1, n + 1):
        e = math.exp(1 - m / k)
        minus_cap = (f_star - m * tau_plus) / (e * k)
        if tau_plus >= (1 - e * alpha) * f_star / m and tau_minus <= minus_cap:
            m_prime.append(m)
        if (1 - alpha) * f_star / k <= tau_plus <= f_star / (m + k):
            m1.append(m)
        if tau_minus <= minus_cap:
            m2.append(m)
        lower = (f_star - e * k * tau_minus) / m
        upper = (f_star - k * tau_minus) / m
        if lower < tau_plus < upper and tau_minus <= alpha * f_star / k:
            m_set.append(m)
    branch = "m-star" if alpha <= math.exp(-1) else "m-sets"
    return OrderConditionSets(alpha, branch, min(m_prime) if m_prime else None, m_prime, m1, m2, m_set, n)


def certify_run(result, f_star: float, k_n: int, *, proof_ok: bool | None = None, tol: float = 1e-9) -> BoundReport:
    """Certificate for a clipper run from its final thresholds.

    ``proof_ok`` is the outcome of the post-hoc proof-condition check if the
    caller ran one; ``False`` marks the certificate as precondition-failed.
    """
    tel = result.telemetry
    missing = [name for name in ("tau_minus", "tau_plus") if getattr(tel, name, None) is None]
    if missing or not tel.k:
        raise ConfigError(f"run telemetry lacks {missing or ['k']}; certification needs a clipper run")
    tm, tp = tel.tau_minus, tel.tau_plus
    inp = BoundInputs(float(f_star), tel.k, k_n, tel.s_n, tm, tp)
    report = case_bound(inp)
    report.achieved = result.objective
    if proof_ok is False:
        report.status = "precondition-failed"
        report.notes.append("post-hoc proof conditions do not hold for this run")
    elif result.objective >= report.bound - tol:
        report.status = "pass"
    elif tel.s_n == 0 and tel.b_n == 0:
        # Everything was rejected, yet f* > k_n tau-: the rejection rule was
        # not what produced this run (e.g. forced evictions).
        report.status = "precondition-failed"
        report.notes.append("degenerate run: nothing selected or buffered")
    else:
        report.status = "fail"
    return report


def knapsack_bound(f_star: float, budget: float, alpha: float, beta: float,
                   tau_minus: float, tau_plus: float) -> float:
    if not beta < budget:
        raise BoundDomainError(f"beta ({beta}) must be < budget ({budget})")
    if alpha > budget:
        raise BoundDomainError(f"alpha ({alpha}) must be <= budget ({budget})")
    w = math.exp(-(budget - alpha) / (budget - beta))
    return 0.5 * ((1 - w) * (f_star - beta * tau_minus) + w * alpha * tau_plus)


def matroid_bound(f_star: float, k: int, k_prime: int, s_n: int, tau_plus: float) -> float:
    if k_prime < 0 or s_n < 0 or k_prime + s_n > k:
        raise BoundDomainError(f"need 0 <= k', s_n and k' + s_n <= k (got {k_prime}, {s_n}, {k})")
    return 0.5 * (f_star - (k - k_prime - s_n) * tau_plus)
