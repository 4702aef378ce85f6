"""Experiment analysis: accuracies, intervals, preference tests, agreement.

Threshold results report accuracy with Wald intervals per error, per
participant and overall, plus pairwise agreement over each participant
pair's shared stimuli. Preference results report how often the model
offset was chosen over the hardware offset (with an exact binomial test
against chance), control accuracy, and per-participant/type breakdowns.
"""

from __future__ import annotations

from ..errors import EmptyDataError, PreconditionError
from ..stats import (
    CONTROL,
    MODEL_VS_HARDWARE,
    THRESHOLD_ERROR,
    JudgmentRecord,
    exact_binomial_test,
    pairwise_agreement,
    wald_ci,
)
from .plan import Experiment
from .store import EventStore


def _judgment_records(experiment: Experiment, store: EventStore) -> list:
    records = []
    for participant_id, stimulus_id, choice in store.judged_events():
        stim = experiment.stimuli[stimulus_id]
        records.append(
            JudgmentRecord(
                participant_id=participant_id,
                stimulus_id=stimulus_id,
                choice=choice,
                correct_side=stim.correct_side,
                error_ms=stim.error_ms,
                provenance=stim.provenance,
            )
        )
    return records


def _accuracy_entry(records: list) -> dict:
    n = len(records)
    correct = sum(1 for r in records if r.outcome)
    p_hat = correct / n
    low, high = wald_ci(p_hat, n)
    return {"n": n, "correct": correct, "accuracy": p_hat, "ci_low": low, "ci_high": high}


def _grouped_accuracy(records: list, key) -> dict:
    groups: dict = {}
    for r in records:
        groups.setdefault(key(r), []).append(r)
    return {k: _accuracy_entry(groups[k]) for k in sorted(groups)}


def _pair_agreements(experiment: Experiment, records: list) -> list:
    by_participant: dict[str, dict] = {}
    for r in records:
        by_participant.setdefault(r.participant_id, {})[r.stimulus_id] = r
    participants = sorted(experiment.sessions)
    out = []
    for i in range(0, len(participants) - 1, 2):
        a, b = participants[i], participants[i + 1]
        shared = sorted(
            set(by_participant.get(a, {})) & set(by_participant.get(b, {}))
        )
        if not shared:
            continue
        choice, outcome, truth = pairwise_agreement(
            [by_participant[a][s] for s in shared],
            [by_participant[b][s] for s in shared],
        )
        out.append(
            {
                "participants": [a, b],
                "shared": len(shared),
                "choice": choice,
                "outcome": outcome,
                "truth": truth,
            }
        )
    return out


def experiment_results(
    experiment: Experiment,
    store: EventStore,
    utterance_types: dict | None = None,
    allow_partial: bool = False,
) -> dict:
    """Compose the analysis bundle for a (complete) experiment store."""
    if not allow_partial and not store.all_complete():
        incomplete = [
            sid for sid in store.session_ids() if not store.state(sid).completed
        ]
        raise PreconditionError(
            f"sessions {incomplete} are incomplete; pass allow_partial to analyse anyway"
        )
    records = _judgment_records(experiment, store)
    if not records:
        raise EmptyDataError("no judgments recorded")

    results: dict = {
        "experiment_id": experiment.experiment_id,
        "kind": experiment.kind,
        "judgments": len(records),
        "complete": store.all_complete(),
    }
    if experiment.kind == "threshold":
        results["overall"] = _accuracy_entry(records)
        results["per_error"] = {
            f"{k:g}": v
            for k, v in _grouped_accuracy(records, lambda r: float(r.error_ms)).items()
        }
        results["per_participant"] = _grouped_accuracy(records, lambda r: r.participant_id)
        results["agreement"] = _pair_agreements(experiment, records)
        return results

    tests = [r for r in records if r.provenance == MODEL_VS_HARDWARE]
    controls = [r for r in records if r.provenance == CONTROL]
    if tests:
        preferred = sum(
            1
            for r in tests
            if r.choice == experiment.stimuli[r.stimulus_id].model_side
        )
        n = len(tests)
        p_hat = preferred / n
        low, high = wald_ci(p_hat, n)
        results["preference"] = {
            "n": n,
            "preferred_model": preferred,
            "proportion": p_hat,
            "ci_low": low,
            "ci_high": high,
            "binomial_p": exact_binomial_test(preferred, n, 0.5),
        }
        per_participant = {}
        for pid in sorted({r.participant_id for r in tests}):
            mine = [r for r in tests if r.participant_id == pid]
            k = sum(
                1
                for r in mine
                if r.choice == experiment.stimuli[r.stimulus_id].model_side
            )
            low, high = wald_ci(k / len(mine), len(mine))
            per_participant[pid] = {
                "n": len(mine),
                "preferred_model": k,
                "proportion": k / len(mine),
                "ci_low": low,
                "ci_high": high,
            }
        results["preference_per_participant"] = per_participant
        if utterance_types:
            per_type: dict = {}
            for r in tests:
                stim = experiment.stimuli[r.stimulus_id]
                t = utterance_types.get(stim.utterance_id, "unknown")
                per_type.setdefault(t, [0, 0])
                per_type[t][1] += 1
                per_type[t][0] += int(r.choice == stim.model_side)
            results["preference_per_type"] = {
                t: {"n": n, "preferred_model": k, "proportion": k / n}
                for t, (k, n) in sorted(per_type.items())
            }
    if controls:
        results["controls"] = _accuracy_entry(controls)
        results["controls_per_participant"] = _grouped_accuracy(
            controls, lambda r: r.participant_id
        )
        results["agreement"] = _pair_agreements(experiment, controls)
    return results
