"""HTTP service: batch endpoints and tracker sessions."""

import pytest
from fastapi.testclient import TestClient

from zoneloc.service.app import create_app

SMALL_ENV = """\
floor 10 10
zone 0 0 0 5 10 left
zone 1 5 0 10 10 right
edge 0 1
stay_default 0.8
anchor 0 5
anchor 10 5
anchor 5 0
pathloss -40 2.2 4.0
wall_default 4
mf_base 20 0 -40
mf_offset 0 8 0 3
mf_offset 1 -8 2 -3
mf_gradient 0 0 0 0 0 0
mf_noise 2
"""


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def sim(client):
    resp = client.post("/simulate", json={
        "seed": 9, "environment": SMALL_ENV, "min_per_zone": 60,
    })
    assert resp.status_code == 200, resp.text
    return resp.json()


@pytest.fixture(scope="module")
def trained(client, sim):
    resp = client.post("/train", json={
        "training_csv": sim["training"]["csv"],
        "floor_plan": sim["floor_plan"],
        "seed": 9,
    })
    assert resp.status_code == 200, resp.text
    return resp.json()


class TestHealth:
    def test_health_reports_version(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["version"]


class TestSimulate:
    def test_returns_training_and_three_trajectories(self, sim):
        assert len(sim["trajectories"]) == 3
        assert sim["training"]["csv"].startswith("timestamp_ms,zone_id")
        assert all(c >= 60 for c in sim["training"]["zone_counts"].values())

    def test_same_seed_gives_identical_payload(self, client, sim):
        again = client.post("/simulate", json={
            "seed": 9, "environment": SMALL_ENV, "min_per_zone": 60,
        }).json()
        assert again == sim

    def test_malformed_environment_is_400(self, client):
        resp = client.post("/simulate", json={"seed": 1, "environment": "floor 1\n"})
        assert resp.status_code == 400
        assert "line 1" in resp.json()["detail"]


class TestTrain:
    def test_returns_bundle_and_summary(self, trained):
        assert trained["bundle"]["format"] == "zoneloc-bundle"
        assert set(trained["summary"]["chosen"]) == {"knn", "tree", "mlp"}

    def test_bad_csv_is_400(self, client):
        resp = client.post("/train", json={"training_csv": "not,a,valid,header\n"})
        assert resp.status_code == 400


class TestEvaluate:
    def test_reports_five_predictors(self, client, sim, trained):
        resp = client.post("/evaluate", json={
            "bundle": trained["bundle"],
            "trajectories": [
                {"name": "t1", "csv": sim["trajectories"][0]["csv"]},
                {"name": "t2", "csv": sim["trajectories"][1]["csv"]},
            ],
        })
        assert resp.status_code == 200, resp.text
        body = resp.json()
        assert len(body["reports"]) == 2
        names = [p["name"] for p in body["reports"][0]["predictors"]]
        assert names == ["knn", "tree", "mlp", "voting", "hmm_d"]
        for p in body["reports"][0]["predictors"]:
            assert 0.0 <= p["accuracy"] <= 1.0
            assert len(p["zone_metrics"]) == 2
        assert body["long_csv"].startswith("predictor,trajectory,zone,metric,value")

    def test_training_data_as_evaluation_is_rejected(self, client, sim, trained):
        resp = client.post("/evaluate", json={
            "bundle": trained["bundle"],
            "trajectories": [{"name": "t", "csv": sim["training"]["csv"]}],
        })
        assert resp.status_code == 400
        assert "overlap" in resp.json()["detail"]


class TestTrack:
    def test_rows_and_summary(self, client, sim, trained):
        resp = client.post("/track", json={
            "bundle": trained["bundle"],
            "trajectory_csv": sim["trajectories"][0]["csv"],
        })
        assert resp.status_code == 200, resp.text
        body = resp.json()
        n_rows = sim["trajectories"][0]["csv"].count("\n") - 1
        assert len(body["rows"]) == n_rows
        assert set(body["summary"]) == {"hmm_d", "voting", "knn", "tree", "mlp"}


class TestSessions:
    def test_online_session_matches_batch_track(self, client, sim, trained):
        start = client.post("/sessions", json={"bundle": trained["bundle"]})
        assert start.status_code == 200, start.text
        sid = start.json()["session_id"]
        assert start.json()["zone_labels"] == ["left", "right"]

        batch = client.post("/track", json={
            "bundle": trained["bundle"],
            "trajectory_csv": sim["trajectories"][0]["csv"],
        }).json()

        lines = sim["trajectories"][0]["csv"].splitlines()[1:]
        for i, line in enumerate(lines[:40]):
            parts = line.split(",")
            ts = int(parts[0])
            rssi = [float(v) for v in parts[2:5]]
            mf = [float(v) for v in parts[5:8]]
            resp = client.post(f"/sessions/{sid}/observe", json={
                "timestamp_ms": ts,
                "wifi_scan": {str(a): v for a, v in enumerate(rssi)},
                "mf_window": [mf],
            })
            assert resp.status_code == 200, resp.text
            body = resp.json()
            assert body["step"] == i + 1
            assert body["zones"] == batch["rows"][i]["zones"]

        info = client.get(f"/sessions/{sid}").json()
        assert info["steps"] == 40
        assert info["last_zones"] == batch["rows"][39]["zones"]

        assert client.delete(f"/sessions/{sid}").status_code == 200
        assert client.get(f"/sessions/{sid}").status_code == 404

    def test_unknown_session_is_404(self, client):
        assert client.get("/sessions/deadbeef").status_code == 404
        resp = client.post("/sessions/deadbeef/observe", json={
            "timestamp_ms": 0, "wifi_scan": {}, "mf_window": [[1.0, 0.0, 0.0]],
        })
        assert resp.status_code == 404

    def test_empty_mf_window_is_400(self, client, trained):
        sid = client.post("/sessions", json={"bundle": trained["bundle"]}).json()["session_id"]
        resp = client.post(f"/sessions/{sid}/observe", json={
            "timestamp_ms": 0, "wifi_scan": {"0": -50.0}, "mf_window": [],
        })
        assert resp.status_code == 400
        assert "magnetometer" in resp.json()["detail"]

    def test_bad_bundle_is_400(self, client):
        resp = client.post("/sessions", json={"bundle": {"format": "nope"}})
        assert resp.status_code == 400
