"""Experiment sweeps: one CSV row per (algorithm, value, repeat)."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from ..errors import ConfigError
from ..objective import Element
from .io import reorder
from .runner import ALGORITHMS, RunParams, run_algorithm

VARIABLES = ("n", "buffer_b", "fhat", "order-seed")
COLUMNS = ("algorithm", "variable", "value", "repeat", "seed", "objective", "relative_utility",
           "evals", "memory_units", "wall_ms")
REFERENCE = "lazy-greedy"


def relative_utility(f: float, f_greedy: float) -> float:
    """``f / f_greedy``; 1.0 when both are zero."""
    if f < 0 or f_greedy < 0:
        raise ConfigError("utilities must be >= 0")
    if f_greedy == 0:
        if f == 0:
            return 1.0
        raise ConfigError("reference utility is 0 while f > 0; the objective is not normalized monotone")
    return f / f_greedy


@dataclass
class SweepSpec:
    variable: str
    values: list[float]
    algorithms: list[str]
    repeats: int = 1
    params: RunParams = field(default_factory=RunParams)
    seed: int = 0
    # fhat values are multiples of the reference utility rather than absolute
    fhat_relative: bool = False

    def __post_init__(self) -> None:
        if self.variable not in VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.variable!r}; choose from {', '.join(VARIABLES)}")
        if not self.values or not self.algorithms:
            raise ConfigError("a sweep needs at least one value and one algorithm")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.variable in ("n", "buffer_b", "order-seed"):
            for v in self.values:
                if int(v) != v or v < (0 if self.variable == "order-seed" else 1):
                    raise ConfigError(f"{self.variable} values must be positive integers, got {v!r}")

    def cell_seed(self, value: float, repeat: int) -> int:
        base = int(value) if self.variable == "order-seed" else self.seed
        return base + repeat


_ELEMENTS: Sequence[Element] = ()


def _init(elements: Sequence[Element]) -> None:
    global _ELEMENTS
    _ELEMENTS = elements


def _stream(spec: SweepSpec, value: float, repeat: int) -> list[Element]:
    elements = _ELEMENTS
    if spec.variable == "n":
        if int(value) > len(elements):
            raise ConfigError(f"n={int(value)} exceeds the stream length {len(elements)}")
        elements = elements[: int(value)]
    return reorder(elements, spec.cell_seed(value, repeat))


def _params(spec: SweepSpec, algo: str, value: float, n: int, ref: float) -> RunParams:
    p = spec.params.with_(n=n)
    if spec.variable == "buffer_b":
        p = p.with_(buffer=int(value))
    elif spec.variable == "fhat" and algo in ("stream-clipper", "sieve"):
        p = p.with_(fhat=value * ref if spec.fhat_relative else float(value))
    return p


def _reference(args: tuple[SweepSpec, float, int]) -> float:
    spec, value, repeat = args
    stream = _stream(spec, value, repeat)
    return run_algorithm(REFERENCE, stream, spec.params.with_(n=len(stream))).objective


def _cell(args: tuple[SweepSpec, str, float, int, float]) -> dict:
    spec, algo, value, repeat, ref = args
    stream = _stream(spec, value, repeat)
    res = run_algorithm(algo, stream, _params(spec, algo, value, len(stream), ref))
    return {
        "algorithm": algo,
        "variable": spec.variable,
        "value": value,
        "repeat": repeat,
        "seed": spec.cell_seed(value, repeat),
        "objective": res.objective,
        "relative_utility": relative_utility(res.objective, ref),
        "evals": res.telemetry.evaluations,
        "memory_units": res.telemetry.memory_units,
        "wall_ms": res.telemetry.wall_ms,
    }


def _map(fn, items: list, elements: Sequence[Element], jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        _init(elements)
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init, initargs=(elements,)) as pool:
        # map() yields in submission order, whatever the completion order
        return list(pool.map(fn, items))


def run_sweep(spec: SweepSpec, elements: Sequence[Element], jobs: int = 1) -> list[dict]:
    """Rows in spec order: values, then repeats, then algorithms."""
    elements = list(elements)
    keys = [(v, r) for v in spec.values for r in range(spec.repeats)]
    # The reference only depends on the stream, which ``fhat`` and ``buffer_b`` do not change.
    shared = spec.variable in ("fhat", "buffer_b")
    ref_keys = [(spec.values[0], r) for r in range(spec.repeats)] if shared else keys
    refs = dict(zip(ref_keys, _map(_reference, [(spec, v, r) for v, r in ref_keys], elements, jobs)))
    cells = []
    for v, r in keys:
        ref = refs[(spec.values[0], r)] if shared else refs[(v, r)]
        cells.extend((spec, a, v, r, ref) for a in spec.algorithms)
    return _map(_cell, cells, elements, jobs)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".9g")
    return str(x)


def write_csv(rows: list[dict], out: TextIO, timing: bool = True) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) if (c != "wall_ms" or timing) else "" for c in COLUMNS])


def rows_to_csv(rows: list[dict], timing: bool = True) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, timing)
    return buf.getvalue()
