"""Element files (JSON Lines), synthetic streams and seeded orders."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from ..errors import ConfigError, IngestError
from ..objective import Element

# Recorded in outputs so orders can be regenerated elsewhere.
ORDER_GENERATOR = "numpy.PCG64/permutation"


def _parse(line: str, lineno: int) -> Element:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IngestError(f"line {lineno}: malformed JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise IngestError(f"line {lineno}: expected a JSON object")
    if "id" not in doc or not isinstance(doc["id"], str):
        raise IngestError(f"line {lineno}: missing string 'id'")
    feats = doc.get("features", {})
    if not isinstance(feats, dict):
        raise IngestError(f"line {lineno}: 'features' must be an object")
    for key, w in feats.items():
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise IngestError(f"line {lineno}: feature {key!r} is not a number")
        if w < 0:
            raise IngestError(f"line {lineno}: feature {key!r} has negative weight {w}")
    cost = doc.get("cost", 1.0)
    if isinstance(cost, bool) or not isinstance(cost, (int, float)) or not cost > 0 or not math.isfinite(cost):
        raise IngestError(f"line {lineno}: cost must be a number > 0, got {cost!r}")
    category = doc.get("category")
    if category is not None and not isinstance(category, str):
        raise IngestError(f"line {lineno}: 'category' must be a string")
    try:
        return Element(doc["id"], feats, cost, category)
    except ValueError as exc:
        raise IngestError(f"line {lineno}: {exc}") from None


def iter_elements(lines: Iterable[str]) -> Iterator[Element]:
    """Lazily parse element lines; blank lines are skipped."""
    seen: set[str] = set()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        e = _parse(line, lineno)
        if e.id in seen:
            raise IngestError(f"line {lineno}: duplicate id {e.id!r}")
        seen.add(e.id)
        yield e


def ingest(path: str | Path) -> list[Element]:
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"no such element file: {path}")
    with path.open(encoding="utf-8") as fh:
        return list(iter_elements(fh))


def element_to_json(e: Element) -> str:
    doc = {"id": e.id, "features": dict(e.features)}
    if e.cost != 1.0:
        doc["cost"] = e.cost
    if e.category is not None:
        doc["category"] = e.category
    return json.dumps(doc, separators=(",", ":"))


def write_jsonl(elements: Iterable[Element], out: str | Path | TextIO) -> None:
    if isinstance(out, (str, Path)):
        with Path(out).open("w", encoding="utf-8", newline="\n") as fh:
            write_jsonl(elements, fh)
        return
    for e in elements:
        out.write(element_to_json(e) + "\n")


def gen_stream(n: int, n_features: int, density: float, weight_scale: float = 1.0, seed: int = 0,
               n_categories: int = 0, cost_range: tuple[float, float] | None = None) -> list[Element]:
    """Seeded sparse elements.

    Each feature is present with probability ``density`` (at least one per
    element) and carries an exponential weight of mean ``weight_scale``.
    Optional categories ``c0..`` and uniform costs support the constrained
    variants.
    """
    if not isinstance(n, int) or n < 1 or not isinstance(n_features, int) or n_features < 1:
        raise ConfigError("n and n_features must be integers >= 1")
    if not 0 < density <= 1:
        raise ConfigError(f"density must lie in (0, 1], got {density!r}")
    if not weight_scale > 0:
        raise ConfigError("weight_scale must be > 0")
    rng = np.random.default_rng(seed)
    width = len(str(n - 1))
    fwidth = len(str(n_features - 1))
    out = []
    for i in range(n):
        mask = rng.random(n_features) < density
        if not mask.any():
            mask[rng.integers(n_features)] = True
        idx = np.flatnonzero(mask)
        weights = rng.exponential(weight_scale, size=idx.size)
        feats = {f"u{j:0{fwidth}d}": float(w) for j, w in zip(idx, weights) if w > 0}
        if not feats:
            feats = {f"u{idx[0]:0{fwidth}d}": float(weight_scale)}
        cost = 1.0
        if cost_range is not None:
            cost = float(rng.uniform(*cost_range))
        category = f"c{rng.integers(n_categories)}" if n_categories else None
        out.append(Element(f"e{i:0{width}d}", feats, cost, category))
    return out


def permutation(n: int, seed: int) -> list[int]:
    """Seeded random order of ``range(n)``."""
    return [int(i) for i in np.random.default_rng(seed).permutation(n)]


def reorder(elements: Sequence[Element], seed: int | None) -> list[Element]:
    if seed is None:
        return list(elements)
    return [elements[i] for i in permutation(len(elements), seed)]
