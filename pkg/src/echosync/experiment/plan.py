"""Experiment construction: stimulus pairs and per-participant sessions.

Threshold experiment: each stimulus shows one correctly synchronised
side and one side with an injected error; error 0 yields identical
sides whose right answer is "no perceived difference". Offsets here are
desynchronisation errors applied to already-synchronised utterances.

Preference experiment: each test stimulus plays the model-predicted
offset against the hardware offset, both applied to the same raw
recording; control stimuli inject a clearly detectable error on one
side of a correctly synchronised utterance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import CapacityError, ValidationError
from ..evaluate import HARD, score
from ..stats import CONTROL, MODEL_VS_HARDWARE, THRESHOLD_ERROR

DEFAULT_THRESHOLD_ERRORS = (
    -305.0,
    -245.0,
    -185.0,
    -125.0,
    -95.0,
    0.0,
    22.5,
    45.0,
    90.0,
    135.0,
    180.0,
)
HALF_QUOTA_ERRORS = (-95.0, 22.5)
PLAY_SPEEDS = (1.0, 0.5, 0.25)
MAX_PLAYS_PER_SIDE = 6


def default_quotas() -> dict:
    return {e: (25 if e in HALF_QUOTA_ERRORS else 50) for e in DEFAULT_THRESHOLD_ERRORS}


@dataclass(frozen=True)
class StimulusPair:
    """Two renderings of one utterance differing only in applied offset."""

    stimulus_id: str
    utterance_id: str
    side_a_offset: float
    side_b_offset: float
    correct_side: str
    provenance: str
    error_ms: float | None = None
    model_side: str = "none"

    def __post_init__(self):
        if self.correct_side not in ("A", "B", "none"):
            raise ValidationError(f"correct_side must be A, B or none, got {self.correct_side!r}")
        if self.provenance not in (THRESHOLD_ERROR, MODEL_VS_HARDWARE, CONTROL):
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        if self.correct_side != "none" and self.side_a_offset == self.side_b_offset:
            raise ValidationError("a stimulus with a correct side must have differing offsets")

    def side_offset(self, side: str) -> float:
        if side == "A":
            return self.side_a_offset
        if side == "B":
            return self.side_b_offset
        raise ValidationError(f"side must be A or B, got {side!r}")


@dataclass
class SessionSpec:
    participant_id: str
    stimulus_ids: list


@dataclass
class Experiment:
    experiment_id: str
    kind: str
    stimuli: dict = field(default_factory=dict)
    sessions: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("threshold", "preference"):
            raise ValidationError(f"kind must be threshold or preference, got {self.kind!r}")

    @property
    def choices(self) -> tuple:
        """A/B/C for threshold; preference forces an A/B choice."""
        return ("A", "B", "C") if self.kind == "threshold" else ("A", "B")


@dataclass
class ThresholdPlan:
    errors: tuple = DEFAULT_THRESHOLD_ERRORS
    quotas: dict = field(default_factory=default_quotas)
    participants: int = 10
    shared_size: int = 20
    seed: int = 0

    def __post_init__(self):
        self.errors = tuple(float(e) for e in self.errors)
        self.quotas = {float(e): int(q) for e, q in self.quotas.items()}
        if set(self.quotas) != set(self.errors):
            raise ValidationError("quotas must cover exactly the error set")
        if any(q <= 0 for q in self.quotas.values()):
            raise ValidationError("quotas must be positive")
        if self.participants < 2 or self.participants % 2:
            raise ValidationError("participants must be an even count of at least 2")
        total = sum(self.quotas.values())
        pairs = self.participants // 2
        for e in self.errors:
            shared = self.shared_size * self.quotas[e]
            if shared % total:
                raise ValidationError(
                    f"shared subset size {self.shared_size} does not divide evenly "
                    f"over error {e:g} (quota {self.quotas[e]} of {total})"
                )
            s_e = shared // total
            remainder = self.quotas[e] - s_e * pairs
            if remainder < 0 or remainder % self.participants:
                raise ValidationError(
                    f"error {e:g}: quota {self.quotas[e]} cannot be split into "
                    f"{pairs} shared x {s_e} plus equal unique shares for "
                    f"{self.participants} participants"
                )

    def shared_per_pair(self, error: float) -> int:
        return self.shared_size * self.quotas[error] // sum(self.quotas.values())

    def unique_per_participant(self, error: float) -> int:
        pairs = self.participants // 2
        return (self.quotas[error] - self.shared_per_pair(error) * pairs) // self.participants


@dataclass
class PreferencePlan:
    participants: int = 6
    tests_per_participant: int = 50
    controls_per_participant: int = 10
    control_errors: tuple = (-305.0, 180.0)
    seed: int = 0

    def __post_init__(self):
        if self.participants < 1:
            raise ValidationError("participants must be positive")
        if self.tests_per_participant < 1:
            raise ValidationError("tests_per_participant must be positive")
        if self.controls_per_participant < 0 or self.controls_per_participant % 2:
            raise ValidationError("controls_per_participant must be even (half per error)")
        if len(self.control_errors) != 2:
            raise ValidationError("exactly two control error values required")


def _participant_ids(count: int) -> list:
    return [f"p{i + 1:02d}" for i in range(count)]


def build_threshold_experiment(
    utterance_pool: list, plan: ThresholdPlan, experiment_id: str = "threshold"
) -> Experiment:
    """Assign errors to distinct utterances and schedule sessions.

    Every stimulus uses a different utterance. Each participant judges
    an equal count per error: their unique share plus the subset shared
    with their partner. Deterministic for a given plan seed.
    """
    pool = list(utterance_pool)
    if len(set(pool)) != len(pool):
        raise ValidationError("utterance pool contains duplicates")
    need = sum(plan.quotas.values())
    if len(pool) < need:
        remaining = len(pool)
        shortfall = {}
        for e in plan.errors:
            take = min(plan.quotas[e], remaining)
            remaining -= take
            if take < plan.quotas[e]:
                shortfall[f"{e:g}"] = plan.quotas[e] - take
        raise CapacityError(
            f"pool of {len(pool)} cannot fill {need} stimuli; per-error shortfall: {shortfall}"
        )

    rng = np.random.default_rng(plan.seed)
    order = rng.permutation(len(pool))
    cursor = 0
    participants = _participant_ids(plan.participants)
    pairs = [(participants[i], participants[i + 1]) for i in range(0, len(participants), 2)]
    assigned: dict[str, list] = {p: [] for p in participants}
    stimuli: dict[str, StimulusPair] = {}
    counter = 0

    for e in plan.errors:
        per_error = []
        for _ in range(plan.quotas[e]):
            utterance_id = pool[order[cursor]]
            cursor += 1
            if e == 0.0:
                correct, a_off, b_off = "none", 0.0, 0.0
            else:
                correct = "A" if rng.integers(0, 2) == 0 else "B"
                a_off, b_off = (0.0, e) if correct == "A" else (e, 0.0)
            sid = f"s{counter:04d}"
            counter += 1
            stimuli[sid] = StimulusPair(
                stimulus_id=sid,
                utterance_id=utterance_id,
                side_a_offset=a_off,
                side_b_offset=b_off,
                correct_side=correct,
                provenance=THRESHOLD_ERROR,
                error_ms=e,
            )
            per_error.append(sid)
        s_e = plan.shared_per_pair(e)
        u_e = plan.unique_per_participant(e)
        at = 0
        for p1, p2 in pairs:
            shared = per_error[at : at + s_e]
            at += s_e
            assigned[p1].extend(shared)
            assigned[p2].extend(shared)
        for p in participants:
            assigned[p].extend(per_error[at : at + u_e])
            at += u_e

    sessions = {}
    for p in participants:
        ids = list(assigned[p])
        order_p = rng.permutation(len(ids))
        sessions[p] = SessionSpec(participant_id=p, stimulus_ids=[ids[i] for i in order_p])
    return Experiment(
        experiment_id=experiment_id,
        kind="threshold",
        stimuli=stimuli,
        sessions=sessions,
        seed=plan.seed,
    )


def build_preference_experiment(
    predictions: dict,
    hardware_offsets: dict,
    control_pool: list,
    plan: PreferencePlan,
    experiment_id: str = "preference",
) -> Experiment:
    """Model offset vs hardware offset, plus detectable-error controls.

    Utterances whose model-hardware difference lies inside the
    undetectable range are excluded: their two renderings would be
    perceptually identical. All participants evaluate the same test and
    control stimuli in individually shuffled order.
    """
    if set(predictions) != set(hardware_offsets):
        only_p = sorted(set(predictions) - set(hardware_offsets))[:5]
        only_h = sorted(set(hardware_offsets) - set(predictions))[:5]
        raise ValidationError(
            f"predictions and hardware offsets cover different utterances "
            f"(only predicted {only_p}, only hardware {only_h})"
        )
    eligible = [
        u
        for u in sorted(predictions)
        if not score(predictions[u] - hardware_offsets[u], HARD)
    ]
    if len(eligible) < plan.tests_per_participant:
        raise CapacityError(
            f"only {len(eligible)} utterance pairs differ detectably; "
            f"{plan.tests_per_participant} needed"
        )
    rng = np.random.default_rng(plan.seed)
    pick = rng.permutation(len(eligible))[: plan.tests_per_participant]
    test_utterances = [eligible[i] for i in pick]

    stimuli: dict[str, StimulusPair] = {}
    counter = 0
    ordered_ids = []
    for u in test_utterances:
        model_side = "A" if rng.integers(0, 2) == 0 else "B"
        model_off, hw_off = predictions[u], hardware_offsets[u]
        a_off, b_off = (model_off, hw_off) if model_side == "A" else (hw_off, model_off)
        sid = f"s{counter:04d}"
        counter += 1
        stimuli[sid] = StimulusPair(
            stimulus_id=sid,
            utterance_id=u,
            side_a_offset=a_off,
            side_b_offset=b_off,
            correct_side="none",
            provenance=MODEL_VS_HARDWARE,
            model_side=model_side,
        )
        ordered_ids.append(sid)

    candidates = [u for u in control_pool if u not in set(test_utterances)]
    if len(set(candidates)) != len(candidates):
        raise ValidationError("control pool contains duplicates")
    if len(candidates) < plan.controls_per_participant:
        raise CapacityError(
            f"control pool offers {len(candidates)} unused utterances; "
            f"{plan.controls_per_participant} needed"
        )
    pick = rng.permutation(len(candidates))[: plan.controls_per_participant]
    half = plan.controls_per_participant // 2
    for j, idx in enumerate(pick):
        u = candidates[idx]
        error = plan.control_errors[0] if j < half else plan.control_errors[1]
        correct = "A" if rng.integers(0, 2) == 0 else "B"
        a_off, b_off = (0.0, error) if correct == "A" else (error, 0.0)
        sid = f"s{counter:04d}"
        counter += 1
        stimuli[sid] = StimulusPair(
            stimulus_id=sid,
            utterance_id=u,
            side_a_offset=a_off,
            side_b_offset=b_off,
            correct_side=correct,
            provenance=CONTROL,
            error_ms=error,
        )
        ordered_ids.append(sid)

    sessions = {}
    for p in _participant_ids(plan.participants):
        order_p = rng.permutation(len(ordered_ids))
        sessions[p] = SessionSpec(
            participant_id=p, stimulus_ids=[ordered_ids[i] for i in order_p]
        )
    return Experiment(
        experiment_id=experiment_id,
        kind="preference",
        stimuli=stimuli,
        sessions=sessions,
        seed=plan.seed,
    )


def save_experiment(experiment: Experiment, path):
    doc = {
        "experiment_id": experiment.experiment_id,
        "kind": experiment.kind,
        "seed": experiment.seed,
        "stimuli": [
            {
                "stimulus_id": s.stimulus_id,
                "utterance_id": s.utterance_id,
                "side_a_offset": s.side_a_offset,
                "side_b_offset": s.side_b_offset,
                "correct_side": s.correct_side,
                "provenance": s.provenance,
                "error_ms": s.error_ms,
                "model_side": s.model_side,
            }
            for s in experiment.stimuli.values()
        ],
        "sessions": [
            {"participant_id": sess.participant_id, "stimulus_ids": sess.stimulus_ids}
            for sess in experiment.sessions.values()
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_experiment(path) -> Experiment:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    stimuli = {
        s["stimulus_id"]: StimulusPair(
            stimulus_id=s["stimulus_id"],
            utterance_id=s["utterance_id"],
            side_a_offset=s["side_a_offset"],
            side_b_offset=s["side_b_offset"],
            correct_side=s["correct_side"],
            provenance=s["provenance"],
            error_ms=s["error_ms"],
            model_side=s.get("model_side", "none"),
        )
        for s in doc["stimuli"]
    }
    sessions = {
        sess["participant_id"]: SessionSpec(
            participant_id=sess["participant_id"], stimulus_ids=list(sess["stimulus_ids"])
        )
        for sess in doc["sessions"]
    }
    return Experiment(
        experiment_id=doc["experiment_id"],
        kind=doc["kind"],
        stimuli=stimuli,
        sessions=sessions,
        seed=doc.get("seed", 0),
    )
