"""Perceptual experiment machinery.

Builds the two experiment designs (detection-threshold A/B/C and
model-vs-hardware preference A/B), renders stimulus media, persists
judgments in an append-only event store, serves participant sessions
over HTTP, and composes the statistical results.
"""

from .plan import (
    Experiment,
    PreferencePlan,
    SessionSpec,
    StimulusPair,
    ThresholdPlan,
    build_preference_experiment,
    build_threshold_experiment,
    load_experiment,
    save_experiment,
)
from .store import EventStore, SessionState
from .media import render_experiment_media, render_stimulus_media
from .results import experiment_results
from .service import create_app

__all__ = [
    "Experiment",
    "EventStore",
    "PreferencePlan",
    "SessionSpec",
    "SessionState",
    "StimulusPair",
    "ThresholdPlan",
    "build_preference_experiment",
    "build_threshold_experiment",
    "create_app",
    "experiment_results",
    "load_experiment",
    "render_experiment_media",
    "render_stimulus_media",
    "save_experiment",
]
