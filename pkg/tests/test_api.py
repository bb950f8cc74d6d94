import json

import pytest
from fastapi.testclient import TestClient

from marginalflow import __version__
from marginalflow.config import settings
from marginalflow.core.constraints import borland_dennis_set, pauli_set, write_constraint_file
from marginalflow.main import app


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "upload_dir", str(tmp_path / "uploads"))
    monkeypatch.setattr(settings, "output_dir", str(tmp_path / "outputs"))
    (tmp_path / "outputs").mkdir()
    return TestClient(app)


def upload(client, path, name=None):
    with open(path, "rb") as handle:
        return client.post("/api/v1/constraints/upload",
                           files={"file": (name or path.name, handle, "application/json")})


def test_health_and_root(client):
    assert client.get("/health").json() == {"status": "healthy", "version": __version__}
    root = client.get("/").json()
    assert root["docs"] == "/docs"
    assert root["experiments"] == ["sample", "bd", "variational"]
    assert root["endpoints"]["start"] == "/api/v1/experiments/{kind}"


def test_upload_constraint_file(client, tmp_path):
    path = write_constraint_file(borland_dennis_set(), tmp_path / "bd.json")
    response = upload(client, path)
    assert response.status_code == 200
    body = response.json()
    assert body["constraint_set"] == "borland-dennis"
    assert body["constraints"] == len(borland_dennis_set().constraints)
    assert (tmp_path / "uploads" / f"{body['file_id']}.json").exists()


def test_upload_rejects_other_extensions(client, tmp_path):
    path = tmp_path / "notes.txt"
    path.write_text("1,1,1,0,0,0")
    assert upload(client, path).status_code == 400


def test_upload_rejects_malformed_constraints(client, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"name": "x", "N": 2, "d": 4, "constraints": [{"kappa0": 0.5, "kappa": [1, 0, 0, 0]}]}))
    response = upload(client, path)
    assert response.status_code == 400
    assert list((tmp_path / "uploads").iterdir()) == []


def test_bd_job_runs_to_completion(client):
    response = client.post("/api/v1/experiments/bd", json={"seed": 0, "samples": 2, "options": {"mode": "pinned"}})
    assert response.status_code == 200
    task_id = response.json()["task_id"]

    status = client.get(f"/api/v1/status/{task_id}").json()
    assert status["status"] == "completed"
    assert status["exit_code"] == 0

    download = client.get(f"/api/v1/download/{status['output_file']}")
    assert download.status_code == 200
    assert download.json()["samples"] == 2


def test_sample_job_with_uploaded_constraints(client, tmp_path):
    path = write_constraint_file(pauli_set(2, 4), tmp_path / "pauli.json")
    file_id = upload(client, path).json()["file_id"]
    response = client.post("/api/v1/experiments/sample", json={
        "setting": "2,4", "seed": 5, "samples": 0, "constraint_file_id": file_id, "constraint": "pauli_upper",
    })
    assert response.status_code == 200
    status = client.get(f"/api/v1/status/{response.json()['task_id']}").json()
    assert status["status"] == "completed"
    assert status["output_file"].endswith(".csv")


def test_bad_requests(client):
    assert client.post("/api/v1/experiments/sample", json={"setting": "3,x"}).status_code == 400
    assert client.post("/api/v1/experiments/bd", json={"options": {"samples_per_run": 1}}).status_code == 400
    assert client.post("/api/v1/experiments/sample",
                       json={"setting": "2,4", "constraint_file_id": "missing"}).status_code == 404
    assert client.post("/api/v1/experiments/flow", json={}).status_code == 422


def test_unknown_task_and_file(client):
    assert client.get("/api/v1/status/nope").status_code == 404
    assert client.get("/api/v1/download/nope.csv").status_code == 404
