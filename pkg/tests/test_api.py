import pytest
from fastapi.testclient import TestClient

from hedger.database import record_run
from hedger.main import app


@pytest.fixture
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_price(client):
    response = client.post("/price", json={"tree_steps": 200})
    assert response.status_code == 200
    body = response.json()
    assert body["european"] == pytest.approx(5.5735, abs=1e-4)
    assert body["binomial"] > body["european"]


def test_price_validation(client):
    assert client.post("/price", json={"sigma": -0.2}).status_code == 422


def test_boundary(client):
    response = client.post(
        "/boundary", json={"tree_steps": 200, "steps": 10, "n_s": 12, "mc_per_node": 200}
    )
    assert response.status_code == 200
    body = response.json()
    assert len(body["rows"]) == 11
    assert body["max_gap"] >= 0.0


def test_boundary_empty_window_is_a_bad_request(client):
    response = client.post(
        "/boundary?lo=0.95&hi=0.96", json={"tree_steps": 200, "steps": 10, "n_s": 12, "mc_per_node": 200}
    )
    assert response.status_code == 400


def test_runs(client):
    record_run("price", "abc", "runs/x", {"binomial": 6.0})
    runs = client.get("/runs").json()
    assert runs[0]["command"] == "price"
    assert client.get("/runs?limit=0").status_code == 400
