import json

import pytest

from pluripotential import ensembles
from pluripotential.ensembles import EnsembleSpec, calibrate, load_constants, reference_specs, run_spec

FIXTURE = json.loads(ensembles.fixture_path().read_text())
SPECS = {s.key: s for s in reference_specs()}


def test_fixture_covers_reference_specs():
    assert set(FIXTURE["constants"]) == set(SPECS)
    assert FIXTURE["seed"] == 7 and FIXTURE["headroom"] == 1.05


def test_n1_quasi_symmetry_constant():
    assert FIXTURE["constants"]["quasi_symmetry|1|graph"] == pytest.approx(1.05, abs=1e-9)
    assert FIXTURE["constants"]["quasi_symmetry|1|toric"] == pytest.approx(1.05, abs=1e-9)


def test_calibration_is_deterministic(tmp_path):
    specs = [EnsembleSpec("quasi_triangle", 1, "graph", 300, 7), EnsembleSpec("JMA2", 1, "toric", 20, 7)]
    paths = []
    for i in range(2):
        p = tmp_path / f"c{i}.json"
        ensembles.write_fixtures(calibrate(7, specs), p)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.mark.parametrize("key", ["quasi_triangle|1|graph", "hold2|1|toric", "Jqmetr_tri|1|graph",
                                 "distances|2|toric"])
def test_changed_seed_stays_within_factor_two(key):
    spec = SPECS[key]
    res = run_spec(spec, seed=8)
    worst_ref = FIXTURE["constants"][key] / FIXTURE["headroom"]
    assert 0.5 <= res.worst / worst_ref <= 2.0


@pytest.mark.parametrize("key", sorted(SPECS))
def test_reduced_ensemble_within_constant(key):
    spec = SPECS[key]
    samples = max(spec.samples // 25, 4)
    res = run_spec(spec, samples=samples)
    assert res.worst <= load_constants()[key]


def test_fixture_env_override(tmp_path, monkeypatch):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"constants": {"a|1|graph": 2.0}}))
    monkeypatch.setenv("PLURI_FIXTURES", str(p))
    assert ensembles.constant("a", 1, "graph") == 2.0
