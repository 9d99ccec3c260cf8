import json
from pathlib import Path

import pytest

from pluripotential import ensembles
from pluripotential.cli import main
from pluripotential.modelio import dump_model, load_model, parse_model

MODELS = Path(__file__).resolve().parent.parent / "models"
G2 = str(MODELS / "g2.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_axioms_g2(capsys):
    code, out, _ = run(capsys, "verify-axioms", "--model", G2)
    assert code == 0
    assert json.loads(out)["violations"] == []


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"backend": "graph",\n "graph": {"vertices": 2}\n"x": 1}')
    code, _, err = run(capsys, "verify-axioms", "--model", str(bad))
    assert code == 2
    assert "line 3, column 1" in err


def test_disconnected_graph_is_construction_error(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"backend": "graph", "graph": {"vertices": 3, "edges": [[0, 1, "1"]]}}))
    assert run(capsys, "energy", "--model", str(path))[0] == 3


def test_usage_errors(capsys):
    assert run(capsys, "energy", "--model", G2, "--tol", "bogus=1")[0] == 2
    assert run(capsys, "energy")[0] == 2
    assert run(capsys, "no-such-command")[0] == 2
    assert run(capsys, "energy", "--model", G2, "--resolution", "8")[0] == 3
    assert run(capsys, "envelope", "--model", G2, "--format", "csv")[0] == 2


@pytest.mark.parametrize("argv", [
    ["energy", "--model", G2, "--seed", "3"],
    ["energy", "--model", G2, "--seed", "3", "--format", "csv"],
    ["metric", "--model", G2, "--seed", "1"],
    ["envelope", "--model", str(MODELS / "path4.json"), "--seed", "2"],
    ["twisted", "--model", G2, "--seed", "4", "--samples", "2"],
    ["threshold", "--model", G2, "--seed", "5", "--samples", "40"],
    ["threshold-scan", "--model", G2, "--seed", "6", "--samples", "30", "--format", "csv"],
], ids=["energy", "energy-csv", "metric", "envelope", "twisted", "threshold", "scan"])
def test_reruns_are_byte_identical(argv, capsys):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first[0] == 0
    assert first[1] == second[1]


def test_csv_columns(capsys):
    _, out, _ = run(capsys, "threshold-scan", "--model", G2, "--samples", "20", "--format", "csv")
    assert out.splitlines()[0] == "k,delta_T,sigma_hat,witness_id,skipped_inf_count,j_min,seed"
    _, out, _ = run(capsys, "energy", "--model", G2, "--samples", "2", "--format", "csv")
    assert out.splitlines()[0] == "backend,n,N,omega_id,mu_id,J,Jplus,d_omega,dd_omega,residual,iters"


@pytest.mark.parametrize("name", ["g2.json", "toric2.json", "path4.json"])
def test_model_round_trip(name):
    model = load_model(MODELS / name)
    again = parse_model(dump_model(model))
    assert again.content_hash() == model.content_hash()


def test_estimates_against_fixture(capsys):
    code, out, _ = run(capsys, "estimates", "--model", G2, "--inequality", "quasi_triangle",
                       "--samples", "10000", "--seed", "7")
    rep = json.loads(out)
    assert code == 0
    assert rep["worst_ratio"] <= rep["fixture_constant"]
    assert rep["fixture_constant"] == ensembles.constant("quasi_triangle", 1, "graph")


def test_fixture_override(tmp_path, monkeypatch, capsys):
    data = json.loads(ensembles.fixture_path().read_text())
    data["constants"]["quasi_triangle|1|graph"] = 0.5
    path = tmp_path / "fx.json"
    ensembles.write_fixtures(data, path)
    monkeypatch.setenv("PLURI_FIXTURES", str(path))
    code, out, _ = run(capsys, "estimates", "--model", G2, "--samples", "200", "--seed", "7")
    assert json.loads(out)["fixture_constant"] == 0.5
    assert code == 1


def test_toric_resolution(capsys):
    code, out, _ = run(capsys, "energy", "--model", str(MODELS / "toric2.json"), "--resolution", "4",
                       "--samples", "2", "--format", "csv")
    assert code == 0
    assert out.splitlines()[1].startswith("toric,2,4,")
