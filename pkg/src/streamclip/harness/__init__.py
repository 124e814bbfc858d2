"""CLI, element I/O, synthetic streams and experiment sweeps."""

from .io import gen_stream, ingest, permutation, reorder, write_jsonl
from .runner import ALGORITHMS, RunParams, run_algorithm
from .sweep import SweepSpec, relative_utility, run_sweep
