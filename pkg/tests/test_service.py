import pytest
from fastapi.testclient import TestClient

from torpde.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_scenario_catalog(client):
    resp = client.get("/scenarios")
    assert resp.status_code == 200
    names = [item["name"] for item in resp.json()]
    assert "exact_mode" in names and "calculus_check" in names
    exact = next(item for item in resp.json() if item["name"] == "exact_mode")
    assert exact["validates"] == "Corollary, fractional wave"
    assert exact["csv_columns"][0] == "t"


def test_run_exact_mode(client):
    resp = client.post("/run", json={"scenario": "exact_mode", "points": 64, "cutoff": 31})
    assert resp.status_code == 200
    body = resp.json()
    assert body["passed"] is True
    assert "exact_mode.csv" in body["artifacts"]
    assert body["config"]["points"] == 64
    names = {v["name"] for v in body["verdicts"]}
    assert {"exact_mode_error", "energy_inequality", "conserved_energy"} <= names


def test_run_returns_failed_verdicts_not_error(client):
    resp = client.post(
        "/run",
        json={
            "scenario": "symmetrizer_check",
            "points": 64,
            "cutoff": 31,
            "negative_control": True,
        },
    )
    assert resp.status_code == 200
    assert resp.json()["passed"] is False


def test_malformed_config_422(client):
    assert client.post("/run", json={"scenario": "nope"}).status_code == 422
    assert (
        client.post("/run", json={"scenario": "exact_mode", "points": 64, "cutoff": 40}).status_code
        == 422
    )
    assert (
        client.post("/run", json={"scenario": "exact_mode", "bogus": 1}).status_code == 422
    )


def test_scenario_specific_config_error_400(client):
    resp = client.post(
        "/run",
        json={"scenario": "exact_mode", "points": 64, "cutoff": 31, "operator": "variable"},
    )
    assert resp.status_code == 400
    assert "fractional multiplier" in resp.json()["detail"]


def test_report_round_trips_through_json(client):
    resp = client.post("/run", json={"scenario": "exact_mode", "points": 64, "cutoff": 31})
    from torpde.schemas import RunReport

    report = RunReport.model_validate(resp.json())
    assert report.scenario == "exact_mode"
    assert report.passed
