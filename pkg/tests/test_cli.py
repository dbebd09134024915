import io
import json
import subprocess
import sys
from contextlib import redirect_stderr, redirect_stdout

import pytest

from qdarwin import channels as chm
from qdarwin.cli import main
from qdarwin.states import SeededRng

BROADCAST = {"model": "broadcast", "d_A": 2, "fragment_dims": [2, 2, 2, 2], "delta": 0.25, "k": 1, "seed": 7}


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_broadcast_report_and_determinism(tmp_path):
    cfg = write(tmp_path, BROADCAST)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["verify-t1", "--config", cfg, "--out", str(a)])[0] == 0
    assert run(["verify-t1", "--config", cfg, "--out", str(b)])[0] == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["average_dist"] <= 1e-7
    assert doc["seed"] == 7


def test_haar_config_chain_checks(tmp_path):
    cfg = write(tmp_path, {"model": "haar", "fragment_dims": [2] * 5, "k": 2, "seed": 5})
    code, out, _ = run(["verify-t1", "--config", cfg])
    doc = json.loads(out)
    assert code == 0
    assert doc["chain_holds"] and doc["theorem_bound_vacuous"]
    assert all(all(r["checks"].values()) for r in doc["per_fragment"])


def test_seed_flag_overrides_config(tmp_path):
    cfg = write(tmp_path, {"model": "haar", "fragment_dims": [2] * 3, "seed": 1})
    _, out1, _ = run(["verify-t1", "--config", cfg, "--seed", "9"])
    _, out2, _ = run(["verify-t1", "--config", write(tmp_path, {"model": "haar", "fragment_dims": [2] * 3, "seed": 9},
                                                     "c2.json")])
    assert out1 == out2


def test_csv_output(tmp_path):
    code, out, _ = run(["verify-t2", "--config", write(tmp_path, {**BROADCAST, "t": 2}), "--format", "csv"])
    assert code == 0
    assert out.splitlines()[0] == "index,diamond_dist,choi_dist,cmi_j,chain_bound_j,average_dist,theorem_bound,delta,good_set,markov_holds"
    assert len(out.splitlines()) == 7


@pytest.mark.parametrize("doc,field", [
    ({"delta": 0}, "delta"),
    ({"delta": 1.5}, "delta"),
    ({"model": "lattice"}, "model"),
    ({"colour": "red"}, "colour"),
    ({"fragment_dims": [2, 2, 2, 2, 2, 2]}, "fragment_dims"),
    ({"model": "custom_choi_file", "choi_file": "missing.json"}, "choi_file"),
    ({"tolerances": {"diamond_tol": -1}}, "tolerances.diamond_tol"),
    ({"k": "one"}, "k"),
    ({"t": 9}, "t"),
])
def test_invalid_fields_exit_2(tmp_path, doc, field):
    code, out, err = run(["verify-t1", "--config", write(tmp_path, {**BROADCAST, **doc})])
    assert code == 2
    assert f"'{field}'" in err
    assert out == ""


def test_csv_rejected_for_other_commands():
    assert run(["discord", "--format", "csv"])[0] == 2


def test_unknown_command_and_missing_config():
    assert run(["launch"])[0] == 2
    assert run(["verify-t1", "--config", "/nonexistent/cfg.json"])[0] == 2


def test_solver_failure_exit_3_with_partial_report(tmp_path):
    cfg = write(tmp_path, {"model": "haar", "fragment_dims": [2] * 3, "seed": 2, "tolerances": {"sdp_max_iter": 1}})
    out = tmp_path / "r.json"
    code, _, err = run(["verify-t1", "--config", cfg, "--out", str(out)])
    assert code == 3
    doc = json.loads(out.read_text())
    assert doc["failed"] is True
    assert any(r["error"] for r in doc["per_fragment"])
    assert "numerical failure" in err


def test_custom_choi_file(tmp_path):
    ch = chm.model_haar_env(2, (2, 2, 2), SeededRng(3))
    (tmp_path / "ch.json").write_text(chm.dumps_channel(ch))
    cfg = write(tmp_path, {"model": "custom_choi_file", "choi_file": "ch.json", "seed": 3})
    code, out, _ = run(["verify-t1", "--config", cfg])
    assert code == 0
    assert len(json.loads(out)["per_fragment"]) == 3


def test_other_subcommands(tmp_path):
    code, out, _ = run(["discord", "--seed", "1"])
    assert code == 0 and abs(json.loads(out)["discord"] - 1.0) <= 1e-5
    code, out, _ = run(["agreement", "--config", write(tmp_path, BROADCAST)])
    doc = json.loads(out)
    assert code == 0 and abs(doc["joint_agreement"] - 1.0) <= 1e-9
    code, out, _ = run(["broadcast", "--config", write(tmp_path, {"state": "classical", "n_values": [1, 2]}, "b.json"),
                        "--budget", "1"])
    doc = json.loads(out)
    assert code == 0 and all(abs(r["gap"]) <= 1e-6 for r in doc["runs"])
    code, out, _ = run(["models"])
    assert code == 0 and len(json.loads(out)["models"]) == 5


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qdarwin", "models"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["models"][0]["name"] == "broadcast"
