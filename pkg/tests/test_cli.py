import io
import json
import subprocess
import sys

import jsonschema
import pytest

from hyperqr.cli import load_schema, run
from hyperqr.constructions import complete_bipartite_3graph, layered_random_complex
from hyperqr.hypergraph import UniformHypergraph

SCHEMA = load_schema()


def call(argv):
    buf = io.StringIO()
    code = run(argv, out=buf)
    return code, buf.getvalue()


def call_json(argv):
    code, text = call(argv)
    doc = json.loads(text)
    jsonschema.validate(doc, SCHEMA)
    assert set(doc["exactness"]) <= set(doc["results"])
    return code, doc


def strip_timing(obj):
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in ("wall_time", "runtime")}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


@pytest.fixture
def bipartite_file(tmp_path):
    G = UniformHypergraph(6, 2, [(a, b) for a in range(3) for b in range(3, 6)])
    p = tmp_path / "g.txt"
    p.write_text(G.to_text(parts=[3, 3]))
    return str(p)


@pytest.fixture
def files(tmp_path):
    h2 = tmp_path / "h2.txt"
    h2.write_text(complete_bipartite_3graph(8).to_text())
    edge = tmp_path / "edge.txt"
    edge.write_text(UniformHypergraph(3, 3, [(0, 1, 2)]).to_text(parts=[1, 1, 1]))
    C = layered_random_complex(3, 0.7, 0.7, seed=1)
    cx = tmp_path / "host.json"
    cx.write_text(C.to_json())
    bad = tmp_path / "bad.txt"
    bad.write_text("3 5 2\n0 1 2\n")
    return {"h2": str(h2), "edge": str(edge), "host": str(cx), "bad": str(bad)}


def test_pg_gen():
    code, doc = call_json(["pg", "gen", "--m", "2", "--q", "4"])
    assert code == 0 and doc["results"]["points"] == 21 and doc["results"]["lines"] == 21
    assert doc["exactness"]["points"] == {"kind": "exact"}


def test_pg_gen_writes_plane(tmp_path):
    out = tmp_path / "plane.txt"
    code, _ = call_json(["pg", "gen", "--q", "3", "--out", str(out)])
    assert code == 0 and out.read_text().startswith("4 13 13")


@pytest.mark.parametrize("action", ["diffset", "baer"])
def test_pg_other(action):
    code, doc = call_json(["pg", action, "--q", "4"])
    assert code == 0 and doc["status"] == "ok"


def test_pg_wedge_csv():
    code, text = call(["pg", "wedge", "--q", "4", "--choice", "0,1,2,3", "--format", "csv"])
    if code != 0:
        code, text = call(["pg", "wedge", "--q", "4", "--format", "csv"])
    assert code == 0 and text.splitlines()[0].count(",") >= 1


def test_blocking():
    code, doc = call_json(["blocking", "--q", "3"])
    assert code == 0
    hist = doc["results"]["histogram"]
    assert set(hist) == {"6", "7"}


def test_construct_and_certify(tmp_path):
    out = tmp_path / "h.txt"
    code, doc = call_json(["construct", "--name", "h2", "--n", "8", "--out", str(out)])
    assert code == 0 and out.exists()
    code, doc = call_json(["certify", "--construction", "oddly-bipartite", "--q", "3", "--n", "14"])
    assert code == 0 and doc["results"]["delta_3"] == 5 and doc["results"]["pg23_free"] is True


def test_qr_oct_complete(bipartite_file):
    code, doc = call_json(["qr", "oct", "--input", bipartite_file, "--index", "1,2"])
    assert code == 0 and doc["results"]["oct"] == {"num": "0", "den": "1"}


def test_qr_check_montecarlo(bipartite_file):
    code, doc = call_json(["qr", "check", "--input", bipartite_file, "--index", "1,2", "--mode", "montecarlo", "--samples", "1000"])
    assert code == 0 and doc["exactness"]["oct"]["kind"] == "estimate"


def test_count(files):
    code, doc = call_json(["count", "--pattern", "fano", "--host", files["h2"]])
    assert code == 0


def test_search_contains(files):
    code, doc = call_json(["search", "contains", "--pattern", "fano", "--host", files["h2"]])
    assert code == 0 and doc["results"]["certificate"]["verdict"] == "none"


def test_homcomplex(files):
    code, doc = call_json(["homcomplex", "--pattern", files["edge"], "--host", files["host"]])
    assert code == 0


def test_regularity_block():
    code, doc = call_json(["regularity", "decompose", "--block", "20", "--anchors", "60"])
    assert code == 0 and doc["results"]["status"] == "passed"


def test_budget_exit_code(files):
    code, doc = call_json(["search", "contains", "--pattern", "fano", "--host", files["h2"], "--budget", "2"])
    assert code == 2 and doc["status"] == "budget_exhausted"


def test_error_exit_codes(files):
    code, doc = call_json(["count", "--pattern", "fano", "--host", files["bad"]])
    assert code == 1 and doc["status"] == "error" and "error" in doc["results"]
    assert call(["nosuch"])[0] == 1
    assert call(["pg", "gen", "--q", "6"])[0] == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["regularity", "decompose", "--block", "20", "--anchors", "60"],
        ["search", "hillclimb", "--pattern", "fano", "--n", "7", "--steps", "200"],
        ["qr", "check", "--input", "{bip}", "--index", "1,2", "--mode", "montecarlo", "--samples", "2000"],
        ["certify", "--construction", "pg23-improved", "--n", "10"],
    ],
)
def test_thread_count_byte_identical(argv, bipartite_file):
    argv = [a.replace("{bip}", bipartite_file) for a in argv]
    payloads = set()
    for t in ("1", "4", "8"):
        code, doc = call_json(argv + ["--threads", t, "--seed", "3"])
        assert code == 0
        doc = strip_timing(doc)
        doc["config"].pop("threads")
        doc["command"] = [a for a in doc["command"] if a not in ("--threads", t)]
        payloads.add(json.dumps(doc, sort_keys=True))
    assert len(payloads) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "hyperqr", "pg", "gen", "--q", "2"], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["results"]["points"] == 7
