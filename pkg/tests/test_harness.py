import csv
import io
import json
from pathlib import Path

import pytest

from streamclip import ConfigError, IngestError
from streamclip.harness.cli import main
from streamclip.harness.io import gen_stream, ingest, iter_elements, permutation, reorder, write_jsonl
from streamclip.harness.runner import RunParams, run_algorithm
from streamclip.harness.sweep import COLUMNS, SweepSpec, relative_utility, rows_to_csv, run_sweep

DATA = Path(__file__).parent / "data"
FIXTURE4 = str(DATA / "fixture4.jsonl")
N200 = str(DATA / "stream_n200.jsonl")


def _cli(capsys, *argv):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


# -- ingestion / generation ----------------------------------------------------------

def test_ingest_default_cost():
    els = list(iter_elements(['{"id":"e1","features":{"u1":4.0}}']))
    assert els[0].id == "e1" and dict(els[0].features) == {"u1": 4.0} and els[0].cost == 1.0


def test_ingest_empty_file(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert ingest(p) == []


@pytest.mark.parametrize("line, fragment", [
    ('{"id":"e1","features":{"u1":1},"cost":-1}', "cost"),
    ('{"id":"e1","features":{"u1":-2}}', "negative"),
    ('{"features":{}}', "id"),
    ('{"id":"e1",', "malformed"),
    ('{"id":"e1","features":{"u1":"x"}}', "not a number"),
])
def test_ingest_errors_name_line(line, fragment):
    with pytest.raises(IngestError) as exc:
        list(iter_elements(['{"id":"ok","features":{}}', line]))
    assert "line 2" in str(exc.value) and fragment in str(exc.value)


def test_ingest_duplicate_and_missing(tmp_path):
    with pytest.raises(IngestError):
        list(iter_elements(['{"id":"a"}', '{"id":"a"}']))
    with pytest.raises(IngestError):
        ingest(tmp_path / "nope.jsonl")


def test_gen_deterministic_and_round_trip(tmp_path):
    a, b = io.StringIO(), io.StringIO()
    write_jsonl(gen_stream(50, 20, 0.1, seed=3, cost_range=(0.5, 2.0), n_categories=2), a)
    write_jsonl(gen_stream(50, 20, 0.1, seed=3, cost_range=(0.5, 2.0), n_categories=2), b)
    assert a.getvalue() == b.getvalue()
    p = tmp_path / "s.jsonl"
    p.write_text(a.getvalue())
    assert ingest(p) == gen_stream(50, 20, 0.1, seed=3, cost_range=(0.5, 2.0), n_categories=2)


def test_gen_density_one_and_errors():
    assert all(len(e.features) == 7 for e in gen_stream(10, 7, 1.0, seed=0))
    with pytest.raises(ConfigError):
        gen_stream(10, 7, 0.0)
    with pytest.raises(ConfigError):
        gen_stream(0, 7, 0.5)


def test_frozen_fixture_matches_generator():
    assert ingest(N200) == gen_stream(200, 100, 0.05, seed=7)


def test_permutation():
    p = permutation(50, 9)
    assert sorted(p) == list(range(50)) and p == permutation(50, 9) and p != permutation(50, 10)
    els = gen_stream(5, 3, 0.5)
    assert reorder(els, None) == els


# -- runner / sweep ---------------------------------------------------------------------

def test_run_algorithm_requirements():
    els = gen_stream(10, 5, 0.5)
    with pytest.raises(ConfigError):
        run_algorithm("minibatch", els, RunParams(k=2))
    with pytest.raises(ConfigError):
        run_algorithm("stream-clipper", els, RunParams(k=2, buffer=3, tau_minus=0.1))
    with pytest.raises(ConfigError):
        run_algorithm("nope", els, RunParams(k=2))


def test_relative_utility():
    assert relative_utility(3.0, 3.0) == 1.0
    assert relative_utility(0.0, 0.0) == 1.0
    assert relative_utility(2.85, 3.0) == pytest.approx(0.95)
    with pytest.raises(ConfigError):
        relative_utility(1.0, 0.0)


def test_order_seed_sweep_rows():
    els = ingest(N200)
    spec = SweepSpec("order-seed", [0], ["stream-clipper", "sieve", "lazy-greedy"], repeats=20,
                     params=RunParams(k=5, buffer=15))
    rows = run_sweep(spec, els)
    assert len(rows) == 60
    assert [r["seed"] for r in rows if r["algorithm"] == "lazy-greedy"] == list(range(20))
    assert all(r["relative_utility"] == 1.0 for r in rows if r["algorithm"] == "lazy-greedy")
    assert all(r["memory_units"] <= 20 for r in rows if r["algorithm"] == "stream-clipper")
    assert set(rows[0]) == set(COLUMNS)


def test_sweep_parallel_matches_serial():
    els = ingest(N200)
    spec = SweepSpec("buffer_b", [5, 10, 20], ["stream-clipper", "lazy-greedy"], repeats=2,
                     params=RunParams(k=5))
    serial = rows_to_csv(run_sweep(spec, els), timing=False)
    parallel = rows_to_csv(run_sweep(spec, els, jobs=2), timing=False)
    assert serial == parallel
    table = list(csv.DictReader(io.StringIO(serial)))
    assert len(table) == 12 and table[0]["wall_ms"] == ""


def test_sweep_fhat_and_n():
    els = ingest(N200)
    rows = run_sweep(SweepSpec("fhat", [0.5, 1.0, 2.0], ["stream-clipper"], params=RunParams(k=5, buffer=10),
                               fhat_relative=True), els)
    assert [r["value"] for r in rows] == [0.5, 1.0, 2.0]
    rows = run_sweep(SweepSpec("n", [50, 100], ["sieve"], params=RunParams(k=5)), els)
    assert len(rows) == 2
    with pytest.raises(ConfigError):
        run_sweep(SweepSpec("n", [500], ["sieve"], params=RunParams(k=5)), els)
    with pytest.raises(ConfigError):
        SweepSpec("bogus", [1], ["sieve"])


# -- CLI ------------------------------------------------------------------------------

def test_cli_run_golden(capsys):
    code, out, _ = _cli(capsys, "run", FIXTURE4, "--algo", "naive-clipper", "--k", 2,
                        "--tau-minus", 0.5, "--tau-plus", 2.0, "--no-timing")
    doc = json.loads(out)
    assert code == 0
    assert doc["solution_ids"] == ["e1", "e2"] and doc["objective"] == pytest.approx(3.0)
    assert doc["order"] == {"generator": "numpy.PCG64/permutation", "seed": None}


def test_cli_greedy_equals_lazy(capsys):
    _, a, _ = _cli(capsys, "run", N200, "--algo", "greedy", "--k", 8)
    _, b, _ = _cli(capsys, "run", N200, "--algo", "lazy-greedy", "--k", 8)
    assert json.loads(a)["solution_ids"] == json.loads(b)["solution_ids"]


def test_cli_exit_codes(capsys, tmp_path):
    assert _cli(capsys, "run", FIXTURE4, "--algo", "minibatch", "--k", 2)[0] == 1
    assert _cli(capsys, "run", FIXTURE4, "--algo", "warp", "--k", 2)[0] == 1
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id":"a","features":{"u":-1}}\n')
    code, _, err = _cli(capsys, "run", str(bad), "--k", 2, "--buffer", 3)
    assert code == 2 and "line 1" in err
    assert _cli(capsys, "certify", N200, "--algo", "stream-clipper", "--k", 3, "--buffer", 6)[0] == 4


def test_cli_certify_pass(capsys, tmp_path):
    p = tmp_path / "s.jsonl"
    _cli(capsys, "gen", "--n", 8, "--features", 6, "--density", 0.4, "--seed", 1, "--output", p)
    code, out, _ = _cli(capsys, "certify", p, "--algo", "stream-clipper", "--k", 3, "--buffer", 6,
                        "--swap-rule", "safe")
    assert code == 0
    last = out.strip().splitlines()[-1]
    assert last.startswith("PASS: achieved")
    doc = json.loads(out[: out.rindex("}") + 1])
    assert doc["report"]["achieved"] >= doc["report"]["bound"] - 1e-9


def test_cli_certify_knapsack(capsys, tmp_path):
    p = tmp_path / "s.jsonl"
    _cli(capsys, "gen", "--n", 8, "--features", 6, "--density", 0.4, "--seed", 2,
         "--cost-range", "0.5,2.0", "--output", p)
    code, out, _ = _cli(capsys, "certify", p, "--algo", "knapsack-clipper", "--budget", 3.0,
                        "--tau-minus", 0.3, "--tau-plus", 0.4)
    doc = json.loads(out[: out.rindex("}") + 1])
    for key in ("alpha", "beta", "knapsack_bound", "quarter_f_star"):
        assert key in doc
    assert code == (0 if doc["status"] == "pass" else 3)


def test_cli_matroid_json_flag(capsys, tmp_path):
    p = tmp_path / "s.jsonl"
    _cli(capsys, "gen", "--n", 10, "--features", 6, "--density", 0.4, "--categories", 2, "--output", p)
    m = json.dumps({"capacities": {"c0": 1, "c1": 2}})
    code, out, _ = _cli(capsys, "run", p, "--algo", "matroid-clipper", "--matroid", m,
                        "--tau-minus", 0.1, "--tau-plus", 1.0)
    assert code == 0 and len(json.loads(out)["solution_ids"]) <= 3
    assert _cli(capsys, "run", p, "--algo", "matroid-clipper", "--matroid", "{bad",
                "--tau-minus", 0.1, "--tau-plus", 1.0)[0] == 1


def test_cli_byte_determinism(capsys):
    args = ("run", N200, "--algo", "stream-clipper", "--k", 5, "--buffer", 10, "--seed", 3, "--no-timing",
            "--test-mode")
    _, a, _ = _cli(capsys, *args)
    _, b, _ = _cli(capsys, *args)
    assert a == b
    sweep = ("sweep", N200, "--variable", "order-seed", "--values", "0,1", "--k", 5, "--buffer", 10,
             "--no-timing", "--jobs", 2)
    _, a, _ = _cli(capsys, *sweep)
    _, b, _ = _cli(capsys, *sweep)
    assert a == b and a.startswith(",".join(COLUMNS))


def test_cli_check(capsys):
    code, out, _ = _cli(capsys, "check", FIXTURE4, "--trials", 500)
    assert code == 0 and json.loads(out)["submodular_violations"] == 0


def test_cli_csv_run(capsys):
    code, out, _ = _cli(capsys, "run", FIXTURE4, "--algo", "lazy-greedy", "--k", 2, "--format", "csv",
                        "--no-timing")
    header, row = out.strip().splitlines()
    assert header.startswith("algorithm,objective") and row.startswith("lazy-greedy,3.23606798,2,")
