"""HMM core: transition construction, emissions, Viterbi vs brute force, tracker."""

import itertools
import math

import numpy as np
import pytest

from zoneloc.hmm import (
    HmmModel,
    TransitionMatrix,
    decode_logs,
    emission_log_likelihood,
    emission_log_matrix,
    initial_distribution,
    model_text_dump,
    tracker_init,
    tracker_path,
    tracker_step,
    transitions_from_floor_plan,
    viterbi,
)
from zoneloc.model import make_floor_plan

EIGHT_ZONE_EDGES = [(0, 1), (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (3, 7)]

# Hand-specified transition table for the canonical office layout: stay 0.6
# everywhere except the hub (zone 1) at 0.4, remainder split over neighbors.
OFFICE_8ZONE_TRANSITIONS = [
    [0.6, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.1, 0.4, 0.1, 0.1, 0.1, 0.1, 0.1, 0.0],
    [0.0, 0.4, 0.6, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.2, 0.0, 0.6, 0.0, 0.0, 0.0, 0.2],
    [0.0, 0.4, 0.0, 0.0, 0.6, 0.0, 0.0, 0.0],
    [0.0, 0.4, 0.0, 0.0, 0.0, 0.6, 0.0, 0.0],
    [0.0, 0.4, 0.0, 0.0, 0.0, 0.0, 0.6, 0.0],
    [0.0, 0.0, 0.0, 0.4, 0.0, 0.0, 0.0, 0.6],
]


def random_stochastic(rng, rows, cols):
    m = rng.random((rows, cols)) + 0.05
    return m / m.sum(axis=1, keepdims=True)


def random_model(rng, n=None, m=None):
    n = n or int(rng.integers(2, 6))
    m = m or int(rng.integers(1, 4))
    pi = rng.random(n) + 0.05
    pi /= pi.sum()
    a = TransitionMatrix(random_stochastic(rng, n, n))
    emitters = tuple(random_stochastic(rng, n, n) for _ in range(m))
    return HmmModel(pi=pi, a=a, emitters=emitters)


def brute_force_paths(log_pi, log_a, log_e):
    """Score every possible state sequence by full enumeration."""
    t_len, n = log_e.shape
    paths = np.array(list(itertools.product(range(n), repeat=t_len)))
    scores = log_pi[paths[:, 0]] + log_e[0, paths[:, 0]]
    for t in range(1, t_len):
        scores = scores + log_a[paths[:, t - 1], paths[:, t]] + log_e[t, paths[:, t]]
    return paths, scores


class TestTransitionsFromFloorPlan:
    def test_single_neighbor_row(self):
        plan = make_floor_plan(8, EIGHT_ZONE_EDGES, stay=0.6)
        a = transitions_from_floor_plan(plan).a
        assert a[0].tolist() == [0.6, 0.4, 0, 0, 0, 0, 0, 0]

    def test_two_neighbor_row_splits_evenly(self):
        plan = make_floor_plan(8, EIGHT_ZONE_EDGES, stay=0.6)
        a = transitions_from_floor_plan(plan).a
        assert a[3].tolist() == pytest.approx([0, 0.2, 0, 0.6, 0, 0, 0, 0.2])

    def test_hub_stay_override_reproduces_office_matrix(self):
        plan = make_floor_plan(8, EIGHT_ZONE_EDGES, stay=0.6, stay_overrides={1: 0.4})
        a = transitions_from_floor_plan(plan).a
        assert a == pytest.approx(np.array(OFFICE_8ZONE_TRANSITIONS), abs=1e-12)

    def test_isolated_zone_gets_identity_row(self):
        plan = make_floor_plan(3, [(0, 1)], stay=0.7)
        a = transitions_from_floor_plan(plan).a
        assert a[2].tolist() == [0.0, 0.0, 1.0]

    def test_explicit_override_returned_verbatim(self):
        plan = make_floor_plan(8, EIGHT_ZONE_EDGES, stay=0.6,
                               explicit_transitions=OFFICE_8ZONE_TRANSITIONS)
        a = transitions_from_floor_plan(plan).a
        assert a.tolist() == OFFICE_8ZONE_TRANSITIONS

    def test_explicit_non_stochastic_row_rejected(self):
        plan = make_floor_plan(2, [(0, 1)], stay=0.5,
                               explicit_transitions=[[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises(ValueError, match="row 0"):
            transitions_from_floor_plan(plan)

    def test_explicit_entry_without_edge_warns(self):
        plan = make_floor_plan(3, [(0, 1)], stay=0.5,
                               explicit_transitions=[
                                   [0.5, 0.3, 0.2], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
        with pytest.warns(UserWarning, match="no edge"):
            transitions_from_floor_plan(plan)

    def test_rows_sum_to_one_for_random_plans(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            possible = list(itertools.combinations(range(n), 2))
            take = rng.permutation(len(possible))[: int(rng.integers(0, len(possible) + 1))]
            edges = [possible[i] for i in take]
            stay = {i: float(rng.uniform(0.1, 1.0)) for i in range(n)}
            plan = make_floor_plan(n, edges, stay=0.5, stay_overrides=stay)
            a = transitions_from_floor_plan(plan).a
            assert np.abs(a.sum(axis=1) - 1.0).max() < 1e-9


class TestInitialDistribution:
    def test_uniform_by_default(self):
        plan = make_floor_plan(8, EIGHT_ZONE_EDGES)
        assert initial_distribution(plan).tolist() == [1 / 8] * 8

    def test_start_zone_concentrates_mass(self):
        plan = make_floor_plan(4, [(0, 1), (1, 2), (2, 3)], start_zone=2)
        pi = initial_distribution(plan)
        assert pi.argmax() == 2
        assert pi[2] == pytest.approx(0.9)
        assert pi.sum() == pytest.approx(1.0)
        assert (pi > 0).all()


class TestEmission:
    def test_perfect_classifier_gives_log_one(self):
        ident = np.eye(3)
        model = HmmModel(pi=np.full(3, 1 / 3), a=TransitionMatrix(np.full((3, 3), 1 / 3)),
                         emitters=(ident,))
        assert emission_log_likelihood(model, (2,), 2) == 0.0

    def test_two_point_eight_sensitivities_multiply(self):
        e = np.full((2, 2), 0.2)
        np.fill_diagonal(e, 0.8)
        model = HmmModel(pi=np.array([0.5, 0.5]), a=TransitionMatrix(np.full((2, 2), 0.5)),
                         emitters=(e, e))
        assert emission_log_likelihood(model, (0, 0), 0) == pytest.approx(math.log(0.64))

    def test_arity_mismatch_rejected(self):
        model = random_model(np.random.default_rng(0), n=3, m=2)
        with pytest.raises(ValueError, match="2 classifiers"):
            emission_log_likelihood(model, (0,), 0)

    def test_tuple_probabilities_sum_to_one_per_zone(self):
        # brute-force normalization over all m-tuples, for random models
        rng = np.random.default_rng(5)
        for _ in range(20):
            model = random_model(rng, n=3, m=2)
            for zone in range(3):
                total = sum(
                    math.exp(emission_log_likelihood(model, obs, zone))
                    for obs in itertools.product(range(3), repeat=2)
                )
                assert total == pytest.approx(1.0, abs=1e-12)


class TestViterbi:
    def test_single_state_path(self):
        model = HmmModel(pi=np.ones(1), a=TransitionMatrix(np.ones((1, 1))),
                         emitters=(np.ones((1, 1)),))
        assert viterbi(model, [(0,)] * 5) == [0] * 5

    def test_uniform_transitions_reduce_to_emission_argmax(self):
        rng = np.random.default_rng(17)
        n = 4
        model = HmmModel(pi=np.full(n, 1 / n), a=TransitionMatrix(np.full((n, n), 1 / n)),
                         emitters=tuple(random_stochastic(rng, n, n) for _ in range(2)))
        obs = [tuple(int(v) for v in rng.integers(0, n, size=2)) for _ in range(6)]
        log_e = emission_log_matrix(model, obs)
        assert viterbi(model, obs) == [int(row.argmax()) for row in log_e]

    def test_empty_sequence_rejected(self):
        model = random_model(np.random.default_rng(1))
        with pytest.raises(ValueError, match="empty"):
            viterbi(model, [])

    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(23)
        for _ in range(80):
            model = random_model(rng)
            n, m = model.n_zones, model.n_classifiers
            t_len = int(rng.integers(2, 9))
            obs = [tuple(int(v) for v in rng.integers(0, n, size=m)) for _ in range(t_len)]
            log_e = emission_log_matrix(model, obs)
            path, log_prob = decode_logs(np.log(model.pi), np.log(model.a.a), log_e)
            paths, scores = brute_force_paths(np.log(model.pi), np.log(model.a.a), log_e)
            best = scores.max()
            assert log_prob == pytest.approx(best, abs=1e-9)
            mine = scores[int(np.flatnonzero((paths == path).all(axis=1))[0])]
            assert mine == pytest.approx(best, abs=1e-9)
            winners = paths[scores >= best - 1e-9]
            if len(winners) == 1:
                assert path == winners[0].tolist()

    def test_all_uniform_ties_break_to_lowest_ids(self):
        n = 3
        model = HmmModel(pi=np.full(n, 1 / n), a=TransitionMatrix(np.full((n, n), 1 / n)),
                         emitters=(np.full((n, n), 1 / n),))
        assert viterbi(model, [(0,)] * 4) == [0, 0, 0, 0]

    def test_emission_scaling_leaves_path_unchanged(self):
        rng = np.random.default_rng(29)
        for _ in range(25):
            model = random_model(rng)
            n, m = model.n_zones, model.n_classifiers
            t_len = int(rng.integers(2, 7))
            obs = [tuple(int(v) for v in rng.integers(0, n, size=m)) for _ in range(t_len)]
            log_e = emission_log_matrix(model, obs)
            path, _ = decode_logs(np.log(model.pi), np.log(model.a.a), log_e)
            scaled = log_e.copy()
            t_scale = int(rng.integers(0, t_len))
            scaled[t_scale] += math.log(float(rng.uniform(0.1, 10.0)))
            path_scaled, _ = decode_logs(np.log(model.pi), np.log(model.a.a), scaled)
            assert path == path_scaled

    def test_zero_transitions_never_traversed(self):
        # chain graph: moves only between consecutive zones
        rng = np.random.default_rng(31)
        plan = make_floor_plan(4, [(0, 1), (1, 2), (2, 3)], stay=0.5)
        a = transitions_from_floor_plan(plan)
        for _ in range(30):
            emitters = tuple(random_stochastic(rng, 4, 4) for _ in range(2))
            model = HmmModel(pi=np.full(4, 0.25), a=a, emitters=emitters)
            obs = [tuple(int(v) for v in rng.integers(0, 4, size=2)) for _ in range(8)]
            path = viterbi(model, obs)
            for prev, cur in zip(path[:-1], path[1:]):
                assert a.a[prev, cur] > 0.0

    def test_deterministic(self):
        rng = np.random.default_rng(37)
        model = random_model(rng, n=4, m=2)
        obs = [tuple(int(v) for v in rng.integers(0, 4, size=2)) for _ in range(10)]
        assert viterbi(model, obs) == viterbi(model, obs)


class TestTracker:
    def test_init_scores_are_log_pi(self):
        plan = make_floor_plan(8, EIGHT_ZONE_EDGES)
        model = HmmModel(pi=initial_distribution(plan),
                         a=transitions_from_floor_plan(plan),
                         emitters=(random_stochastic(np.random.default_rng(0), 8, 8),))
        state = tracker_init(model)
        assert state.steps == 0
        assert state.scores.tolist() == pytest.approx([math.log(1 / 8)] * 8)
        assert int(state.scores.argmax()) == int(model.pi.argmax())

    def test_start_zone_scores_finite(self):
        plan = make_floor_plan(4, [(0, 1), (1, 2), (2, 3)], start_zone=0)
        model = HmmModel(pi=initial_distribution(plan),
                         a=transitions_from_floor_plan(plan),
                         emitters=(random_stochastic(np.random.default_rng(1), 4, 4),))
        state = tracker_init(model)
        assert np.isfinite(state.scores).all()

    def test_first_step_is_emission_weighted_prior(self):
        rng = np.random.default_rng(41)
        model = random_model(rng, n=4, m=2)
        uniform = HmmModel(pi=np.full(4, 0.25), a=model.a, emitters=model.emitters)
        obs = (1, 2)
        state, zone = tracker_step(tracker_init(uniform), uniform, obs)
        log_e = emission_log_matrix(uniform, [obs])[0]
        assert zone == int(log_e.argmax())
        assert state.steps == 1

    def test_online_final_state_matches_offline_viterbi(self):
        rng = np.random.default_rng(43)
        for _ in range(40):
            model = random_model(rng)
            n, m = model.n_zones, model.n_classifiers
            t_len = int(rng.integers(1, 9))
            obs = [tuple(int(v) for v in rng.integers(0, n, size=m)) for _ in range(t_len)]
            state = tracker_init(model)
            emitted = None
            for o in obs:
                state, emitted = tracker_step(state, model, o)
            offline = viterbi(model, obs)
            assert emitted == offline[-1]
            assert tracker_path(state) == offline

    def test_repeated_observation_converges_and_stays(self):
        e = np.full((3, 3), 0.05)
        np.fill_diagonal(e, 0.9)
        plan = make_floor_plan(3, [(0, 1), (1, 2)], stay=0.8)
        model = HmmModel(pi=np.full(3, 1 / 3), a=transitions_from_floor_plan(plan),
                         emitters=(e, e))
        state = tracker_init(model)
        emitted = []
        for _ in range(20):
            state, zone = tracker_step(state, model, (2, 2))
            emitted.append(zone)
        assert emitted[-1] == 2
        first_hit = emitted.index(2)
        assert all(z == 2 for z in emitted[first_hit:])

    def test_arity_mismatch_rejected(self):
        model = random_model(np.random.default_rng(2), n=3, m=2)
        with pytest.raises(ValueError, match="classifiers"):
            tracker_step(tracker_init(model), model, (0,))


class TestModelTextDump:
    def test_sections_present_and_full_precision(self):
        rng = np.random.default_rng(3)
        model = random_model(rng, n=2, m=2)
        text = model_text_dump(model)
        assert text.startswith("pi\n")
        assert "transitions\n" in text
        assert "emitter 0\n" in text and "emitter 1\n" in text
        first_pi = float(text.splitlines()[1].split()[0])
        assert first_pi == model.pi[0]
