"""Zone-transition HMM: matrix construction, factored emissions, Viterbi
decoding, and an online tracker.

Emission probabilities are kept factored as one row-stochastic likelihood
matrix per base classifier; the joint likelihood of a prediction tuple is the
product of the per-classifier terms (conditional independence).  All scoring
runs in the log domain.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import FloorPlan, validate_floor_plan

ObservationTuple = tuple[int, ...]

_ROW_SUM_TOL = 1e-9


def _log(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic zone-to-zone movement probabilities."""

    a: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {a.shape}")
        if (a < 0).any():
            raise ValueError("transition matrix has negative entries")
        for i, s in enumerate(a.sum(axis=1)):
            if abs(s - 1.0) > _ROW_SUM_TOL:
                raise ValueError(f"transition row {i} sums to {s}, not 1")
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return self.a.shape[0]


def transitions_from_floor_plan(plan: FloorPlan) -> TransitionMatrix:
    """Build the transition matrix from adjacency and stay probabilities.

    Row i keeps ``stay[i]`` on the diagonal and spreads the rest uniformly
    over the zone's neighbors; an isolated zone becomes an identity row.
    An explicit override on the plan is validated and returned verbatim.
    """
    violations = validate_floor_plan(plan)
    if violations:
        raise ValueError("invalid floor plan: " + "; ".join(violations))
    n = plan.n_zones
    if plan.explicit_transitions is not None:
        a = np.asarray(plan.explicit_transitions, dtype=np.float64)
        for i in range(n):
            for j in range(n):
                if i != j and a[i, j] > 0.0 and not plan.adjacent(i, j):
                    warnings.warn(
                        f"explicit transition {i}->{j} is positive but the plan has no edge ({i}, {j})",
                        stacklevel=2,
                    )
        return TransitionMatrix(a)
    a = np.zeros((n, n))
    for i in range(n):
        nbs = plan.neighbors(i)
        if not nbs:
            a[i, i] = 1.0
            continue
        a[i, i] = plan.stay[i]
        share = (1.0 - plan.stay[i]) / len(nbs)
        for j in nbs:
            a[i, j] = share
    return TransitionMatrix(a)


def initial_distribution(plan: FloorPlan, start_mass: float = 0.9) -> np.ndarray:
    """Uniform over zones, or concentrated on the plan's start zone."""
    n = plan.n_zones
    if plan.start_zone is None:
        return np.full(n, 1.0 / n)
    pi = np.full(n, (1.0 - start_mass) / (n - 1)) if n > 1 else np.ones(1)
    pi[plan.start_zone] = start_mass if n > 1 else 1.0
    return pi / pi.sum()


@dataclass(frozen=True)
class HmmModel:
    """pi, transition matrix, and one likelihood matrix per base classifier."""

    pi: np.ndarray
    a: TransitionMatrix
    emitters: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        pi = np.asarray(self.pi, dtype=np.float64)
        n = self.a.n
        if pi.shape != (n,):
            raise ValueError(f"pi has shape {pi.shape}, expected ({n},)")
        if (pi < 0).any() or abs(pi.sum() - 1.0) > _ROW_SUM_TOL:
            raise ValueError(f"pi must be a distribution, sums to {pi.sum()}")
        if len(self.emitters) < 1:
            raise ValueError("at least one emitter matrix is required")
        emitters = []
        for m, e in enumerate(self.emitters):
            e = np.asarray(e, dtype=np.float64)
            if e.shape != (n, n):
                raise ValueError(f"emitter {m} has shape {e.shape}, expected ({n}, {n})")
            if (e < 0).any():
                raise ValueError(f"emitter {m} has negative entries")
            for i, s in enumerate(e.sum(axis=1)):
                if abs(s - 1.0) > _ROW_SUM_TOL:
                    raise ValueError(f"emitter {m} row {i} sums to {s}, not 1")
            emitters.append(e)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "emitters", tuple(emitters))

    @property
    def n_zones(self) -> int:
        return self.a.n

    @property
    def n_classifiers(self) -> int:
        return len(self.emitters)


def emission_log_likelihood(model: HmmModel, obs: ObservationTuple, zone: int) -> float:
    """log P(obs | zone): sum of per-classifier log likelihoods."""
    if len(obs) != model.n_classifiers:
        raise ValueError(f"observation has {len(obs)} entries, model has {model.n_classifiers} classifiers")
    total = 0.0
    for e, o in zip(model.emitters, obs):
        p = float(e[zone, o])
        total += math.log(p) if p > 0.0 else float("-inf")
    return total


def emission_log_matrix(model: HmmModel, observations: Sequence[ObservationTuple]) -> np.ndarray:
    """T x n matrix of log emission likelihoods for an observation sequence."""
    t_len = len(observations)
    out = np.zeros((t_len, model.n_zones))
    for t, obs in enumerate(observations):
        if len(obs) != model.n_classifiers:
            raise ValueError(
                f"observation {t} has {len(obs)} entries, model has {model.n_classifiers} classifiers"
            )
        for e, o in zip(model.emitters, obs):
            out[t] += _log(e[:, o])
    return out


def _viterbi_step(scores: np.ndarray, log_a: np.ndarray, log_emis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One recursion step; backpointer ties go to the lowest predecessor id."""
    cand = scores[:, None] + log_a
    back = cand.argmax(axis=0)
    return cand.max(axis=0) + log_emis, back


def decode_logs(log_pi: np.ndarray, log_a: np.ndarray, log_emissions: np.ndarray) -> tuple[list[int], float]:
    """Viterbi over precomputed log emissions; returns (path, path log-prob).

    Per-cell ties break toward the lower predecessor id and the final state
    ties toward the lower zone id.
    """
    t_len = len(log_emissions)
    if t_len == 0:
        raise ValueError("observation sequence is empty")
    scores = log_pi + log_emissions[0]
    backs = []
    for t in range(1, t_len):
        scores, back = _viterbi_step(scores, log_a, log_emissions[t])
        backs.append(back)
    last = int(scores.argmax())
    path = [last]
    for back in reversed(backs):
        last = int(back[last])
        path.append(last)
    path.reverse()
    return path, float(scores.max())


def viterbi(model: HmmModel, observations: Sequence[ObservationTuple]) -> list[int]:
    """Most probable zone sequence for a sequence of prediction tuples."""
    if not observations:
        raise ValueError("observation sequence is empty")
    log_e = emission_log_matrix(model, observations)
    path, _ = decode_logs(_log(model.pi), _log(model.a.a), log_e)
    return path


@dataclass
class TrackerState:
    """Running Viterbi scores for online tracking; one per pedestrian session."""

    scores: np.ndarray
    backpointers: list[np.ndarray]
    steps: int


def tracker_init(model: HmmModel) -> TrackerState:
    return TrackerState(scores=_log(model.pi.copy()), backpointers=[], steps=0)


def tracker_step(state: TrackerState, model: HmmModel, obs: ObservationTuple) -> tuple[TrackerState, int]:
    """Advance one observation; returns the new state and the current best zone.

    The emitted zone is the terminal state of the best path so far, so after T
    steps it equals the last element of offline Viterbi on the same sequence.
    """
    if len(obs) != model.n_classifiers:
        raise ValueError(f"observation has {len(obs)} entries, model has {model.n_classifiers} classifiers")
    log_e = emission_log_matrix(model, [obs])[0]
    if state.steps == 0:
        new_scores = state.scores + log_e
        new_backs = list(state.backpointers)
    else:
        new_scores, back = _viterbi_step(state.scores, _log(model.a.a), log_e)
        new_backs = state.backpointers + [back]
    new_state = TrackerState(scores=new_scores, backpointers=new_backs, steps=state.steps + 1)
    return new_state, int(new_scores.argmax())


def tracker_path(state: TrackerState) -> list[int]:
    """Full best path through the current step (offline-Viterbi equivalent)."""
    if state.steps == 0:
        return []
    last = int(state.scores.argmax())
    path = [last]
    for back in reversed(state.backpointers):
        last = int(back[last])
        path.append(last)
    path.reverse()
    return path


def model_text_dump(model: HmmModel) -> str:
    """Human-inspectable dump: one matrix per section, row-major, full precision."""
    buf = io.StringIO()
    buf.write("pi\n")
    buf.write(" ".join(repr(float(v)) for v in model.pi) + "\n")
    buf.write("transitions\n")
    for row in model.a.a:
        buf.write(" ".join(repr(float(v)) for v in row) + "\n")
    for m, e in enumerate(model.emitters):
        buf.write(f"emitter {m}\n")
        for row in e:
            buf.write(" ".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()
