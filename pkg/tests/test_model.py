"""Domain types: fingerprint construction and floor-plan validation."""

import math

import numpy as np
import pytest

from zoneloc.model import (
    RSSI_SENTINEL,
    Fingerprint,
    LabeledDataset,
    build_fingerprint,
    make_floor_plan,
    validate_floor_plan,
)

EIGHT_ZONE_EDGES = [(0, 1), (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (3, 7)]


class TestBuildFingerprint:
    def test_sentinel_fill_and_345_magnitude(self):
        fp = build_fingerprint({0: -40.0}, 2, [(30.0, 0.0, 40.0)], timestamp_ms=5)
        assert fp.rssi == (-40.0, -100.0)
        assert fp.mf == (30.0, 0.0, 40.0, 50.0)
        assert fp.timestamp_ms == 5

    def test_mean_of_two_readings(self):
        fp = build_fingerprint({}, 1, [(0.0, 0.0, 0.0), (2.0, 0.0, 0.0)], timestamp_ms=0)
        assert fp.rssi == (-100.0,)
        assert fp.mf == (1.0, 0.0, 0.0, 1.0)

    def test_five_reading_window_matches_hand_average(self):
        # expected values recomputed with an independent one-off script
        readings = [
            (31.2, -4.5, 40.1), (30.8, -4.9, 39.7), (31.5, -4.2, 40.4),
            (30.9, -4.7, 39.9), (31.1, -4.4, 40.2),
        ]
        fp = build_fingerprint({0: -55.5, 1: -71.2}, 2, readings, timestamp_ms=1)
        assert fp.rssi == (-55.5, -71.2)
        assert fp.mf[0] == pytest.approx(31.1, abs=1e-12)
        assert fp.mf[1] == pytest.approx(-4.540000000000001, abs=1e-12)
        assert fp.mf[2] == pytest.approx(40.06, abs=1e-12)
        assert fp.mf[3] == pytest.approx(50.917827919109044, abs=1e-12)

    def test_empty_window_rejected(self):
        with pytest.raises(ValueError, match="no magnetometer data"):
            build_fingerprint({0: -40.0}, 1, [], timestamp_ms=0)

    def test_unknown_anchor_rejected(self):
        with pytest.raises(ValueError, match="anchor id"):
            build_fingerprint({3: -40.0}, 2, [(1.0, 0.0, 0.0)], timestamp_ms=0)

    def test_permutation_invariant_in_window_order(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            window = [tuple(rng.normal(20, 10, size=3)) for _ in range(9)]
            ref = build_fingerprint({0: -50.0}, 1, window, timestamp_ms=0)
            perm = [window[i] for i in rng.permutation(len(window))]
            assert build_fingerprint({0: -50.0}, 1, perm, timestamp_ms=0).mf == ref.mf

    def test_sentinel_count_matches_unheard_anchors(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            anchor_count = int(rng.integers(1, 10))
            heard = rng.permutation(anchor_count)[: int(rng.integers(0, anchor_count + 1))]
            scan = {int(a): float(rng.uniform(-99, -30)) for a in heard}
            fp = build_fingerprint(scan, anchor_count, [(1.0, 2.0, 2.0)], timestamp_ms=0)
            sentinels = sum(1 for v in fp.rssi if v == RSSI_SENTINEL)
            assert sentinels == anchor_count - len(scan)


class TestFingerprintInvariants:
    def test_rssi_outside_range_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            Fingerprint(0, (-101.0,), (0.0, 0.0, 0.0, 0.0))
        with pytest.raises(ValueError, match="outside"):
            Fingerprint(0, (1.0,), (0.0, 0.0, 0.0, 0.0))

    def test_inconsistent_magnitude_rejected(self):
        with pytest.raises(ValueError, match="magnitude"):
            Fingerprint(0, (-50.0,), (3.0, 4.0, 0.0, 6.0))

    def test_features_layout(self):
        fp = Fingerprint(0, (-50.0, -60.0), (3.0, 4.0, 0.0, 5.0))
        assert fp.features().tolist() == [-50.0, -60.0, 3.0, 4.0, 0.0, 5.0]


class TestValidateFloorPlan:
    def test_eight_zone_plan_is_valid(self):
        plan = make_floor_plan(8, EIGHT_ZONE_EDGES, stay=0.6)
        assert validate_floor_plan(plan) == []

    def test_edge_endpoint_out_of_range(self):
        plan = make_floor_plan(8, [(0, 9)], stay=0.6)
        violations = validate_floor_plan(plan)
        assert len(violations) == 1
        assert "out of range" in violations[0]

    def test_stay_prob_zero_rejected(self):
        plan = make_floor_plan(2, [(0, 1)], stay=0.0)
        violations = validate_floor_plan(plan)
        assert any("stay_prob out of range" in v for v in violations)

    def test_self_loop_rejected(self):
        plan = make_floor_plan(3, [(1, 1)], stay=0.5)
        assert any("self-loop" in v for v in validate_floor_plan(plan))

    def test_disconnected_plan_warns_but_passes(self, caplog):
        plan = make_floor_plan(4, [(0, 1)], stay=0.5)
        with caplog.at_level("WARNING"):
            assert validate_floor_plan(plan) == []
        assert any("not connected" in m for m in caplog.messages)

    def test_non_stochastic_explicit_matrix_flagged(self):
        plan = make_floor_plan(2, [(0, 1)], stay=0.5,
                               explicit_transitions=[[0.5, 0.4], [0.5, 0.5]])
        violations = validate_floor_plan(plan)
        assert any("row 0" in v for v in violations)


class TestLabeledDataset:
    def _plan(self):
        return make_floor_plan(2, [(0, 1)], stay=0.5)

    def test_label_out_of_range_rejected(self):
        fp = Fingerprint(0, (-50.0,), (0.0, 0.0, 1.0, 1.0), label=5)
        with pytest.raises(ValueError, match="valid zone id"):
            LabeledDataset(1, (fp,), self._plan())

    def test_rssi_length_must_match_anchor_count(self):
        fp = Fingerprint(0, (-50.0, -60.0), (0.0, 0.0, 1.0, 1.0), label=0)
        with pytest.raises(ValueError, match="rssi entries"):
            LabeledDataset(1, (fp,), self._plan())

    def test_class_counts(self):
        fps = [
            Fingerprint(i, (-50.0,), (0.0, 0.0, 1.0, 1.0), label=i % 2)
            for i in range(5)
        ]
        ds = LabeledDataset(1, tuple(fps), self._plan())
        assert ds.class_counts() == {0: 3, 1: 2}
