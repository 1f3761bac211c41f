import io
import json
import subprocess
import sys

import pytest

from kmnlie.classification import load_database
from kmnlie.cli import main, parse_f


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stream=buf)
    return code, buf.getvalue()


def test_classify_cubic_coefficient():
    code, out = run("classify", "--n", "1", "--m", "2", "--eps", "1", "--f", "t^3")
    assert code == 0
    first = json.loads(out)["matches"][0]
    assert first["caseId"] == "T2-7" and first["bindings"] == {"k": "3"}


def test_verify_case5():
    code, out = run("verify", "--case", "T1-5", "--m", "3", "--n", "2")
    assert code == 0
    rep = json.loads(out)
    assert rep["ok"] and len(rep["checks"]) == 3
    assert {c["status"] for c in rep["checks"]} == {"SymbolicZero"}


@pytest.mark.parametrize("case", [r.caseId for r in load_database(validate=False)])
def test_every_case_is_reachable(case):
    code, out = run("verify", "--case", case)
    assert code == 0 and json.loads(out)["ok"]


def test_commutators_power_family():
    code, out = run("commutators", "--k", "3")
    rep = json.loads(out)
    assert code == 0 and rep["closed"]
    assert rep["structure"]["[G1,G3]"] == ["4", "0", "0"]
    assert rep["structure"]["[G2,G3]"] == ["0", "1", "0"]
    assert rep["structure"]["[G1,G2]"] == ["0", "0", "0"]


def test_reduce_emits_odes():
    code, out = run("reduce", "--k", "2", "--sigma", "1", "--a", "1")
    fams = json.loads(out)["reductions"]
    assert code == 0 and [f["family"] for f in fams] == ["<G1>", "<G2+sigma*G1>", "<G3+a*G2>"]
    assert "trivial" in fams[0]
    assert fams[1]["ode"] == "2*omega*phi' + 2*phi + phi'"


def test_reduce_bvp_only():
    code, out = run("reduce", "--m", "2", "--n", "1", "--k", "1", "--gamma", "1")
    rep = json.loads(out)
    assert code == 0 and rep["reductions"] == [] and rep["bvp"]["q"] == "t^(-1/3)"


def test_bvp_pipeline_passes(tmp_path):
    code, out = run("bvp-pipeline", "--m", "2", "--n", "1", "--k", "1", "--gamma", "1",
                    "--eps", "1", "--grid-n", "200")
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and rep["linf_rel"] <= 1e-2


def test_solve_ode_writes_csv(tmp_path):
    path = tmp_path / "p.csv"
    code, out = run("solve-ode", "--m", "2", "--n", "1", "--k", "1", "--out", str(path))
    assert code == 0 and path.exists() and path.with_suffix(".json").exists()
    assert json.loads(out)["compacton_edge"] is None


def test_solve_pde_exact_data(tmp_path):
    path = tmp_path / "u.csv"
    code, _ = run("solve-pde", "--m", "2", "--n", "1", "--k", "1", "--sigma", "1",
                  "--grid-n", "20", "--t-span", "0.5,1", "--out", str(path))
    assert code == 0
    assert path.read_text().splitlines()[0] == "t,x,u"


def test_usage_errors_exit_2():
    assert run("classify", "--m", "2", "--n", "1", "--f", "t^+")[0] == 2
    assert run("classify", "--m", "1", "--n", "1")[0] == 2
    assert run("verify")[0] == 2
    assert run("verify", "--case", "T9-9")[0] == 2
    assert run("classify", "--m", "2", "--n", "1", "--eps", "2")[0] == 2
    assert run("reduce", "--k", "0")[0] == 2
    assert run("bvp-pipeline", "--m", "4/3", "--n", "2", "--k", "2")[0] == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"m": "2", "n": "1", "eps": 1, "f": "t^3"}))
    _, base = run("classify", "--config", str(cfg))
    assert json.loads(base)["matches"][0]["bindings"] == {"k": "3"}
    _, over = run("classify", "--config", str(cfg), "--f", "t^5")
    assert json.loads(over)["matches"][0]["bindings"] == {"k": "5"}


def test_parse_f_forms():
    assert parse_f("PowerShifted(k=2, beta=1)").kind == "PowerShifted"
    assert parse_f("any").is_opaque
    assert parse_f("exp(t)").kind == "Exp"


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run("verify", "--case", "T1-6a", "--seed", "5", "--out", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    for p in (a, b):
        run("bvp-pipeline", "--m", "2", "--n", "1", "--k", "1", "--grid-n", "100",
            "--out", str(p))
    assert a.read_bytes() == b.read_bytes()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kmnlie.cli", "classify", "--m", "5",
                           "--n", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["matches"][0]["caseId"] == "T1-1"
