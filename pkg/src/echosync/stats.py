"""Analysis toolbox for perceptual-judgment data.

Provides Wald binomial confidence intervals, an exact two-sided
binomial test computed in log space, the three pairwise-agreement
scores (choice, outcome, truth), phone feature vectors with fractional
counts over alternative pronunciations, L2-regularised logistic
regression fitted by Newton iterations, and McFadden's pseudo-R².
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ValidationError

CHOICES = ("A", "B", "C")
SIDES = ("A", "B", "none")

# Stimulus provenance tags.
THRESHOLD_ERROR = "threshold-error"
MODEL_VS_HARDWARE = "model-vs-hardware"
CONTROL = "control"


@dataclass(frozen=True)
class JudgmentRecord:
    """One participant judgment with enough context to score it.

    `outcome` is True/False for judgments with a defined right answer:
    a stimulus with correct_side A or B is answered correctly by
    choosing that side; an identical-sides stimulus (error 0,
    correct_side none, threshold provenance) is answered correctly by
    choosing C. Model-vs-hardware preference judgments have no right
    answer and their outcome is None.
    """

    participant_id: str
    stimulus_id: str
    choice: str
    correct_side: str
    error_ms: float | None = None
    provenance: str = THRESHOLD_ERROR

    def __post_init__(self):
        if self.choice not in CHOICES:
            raise ValidationError(f"choice must be one of {CHOICES}, got {self.choice!r}")
        if self.correct_side not in SIDES:
            raise ValidationError(f"correct_side must be one of {SIDES}")

    @property
    def outcome(self) -> bool | None:
        if self.correct_side in ("A", "B"):
            return self.choice == self.correct_side
        if self.provenance == MODEL_VS_HARDWARE:
            return None
        return self.choice == "C"


def wald_ci(p_hat: float, n: int, z: float = 1.96) -> tuple:
    """Normal-approximation binomial interval, clipped to [0, 1]."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    if not 0 <= p_hat <= 1:
        raise ValidationError(f"p_hat must lie in [0, 1], got {p_hat}")
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / n)
    return max(0.0, p_hat - half), min(1.0, p_hat + half)


def _log_pmf(i: np.ndarray, n: int, p0: float) -> np.ndarray:
    i = np.asarray(i, dtype=np.float64)
    return (
        gammaln(n + 1)
        - gammaln(i + 1)
        - gammaln(n - i + 1)
        + i * math.log(p0)
        + (n - i) * math.log1p(-p0)
    )


def exact_binomial_test(k: int, n: int, p0: float = 0.5) -> float:
    """Two-sided exact test: total mass of outcomes no likelier than k.

    All outcomes i with pmf(i) <= pmf(k) are summed (the small-p-value
    convention), in log space for stability at extreme counts.
    """
    if not 0 <= k <= n:
        raise ValidationError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0 < p0 < 1:
        raise ValidationError(f"p0 must lie in (0, 1), got {p0}")
    log_pmf = _log_pmf(np.arange(n + 1), n, p0)
    # Absolute log tolerance absorbs rounding in the gammaln terms.
    include = log_pmf <= log_pmf[k] + 1e-9
    return float(min(1.0, math.exp(logsumexp(log_pmf[include]))))


def pairwise_agreement(a: list, b: list) -> tuple:
    """(choice, outcome, truth) agreement over a shared stimulus set.

    Judgments are matched by stimulus_id; the two lists must cover the
    identical set. Every matched judgment must carry a defined outcome.
    """
    map_a = {r.stimulus_id: r for r in a}
    map_b = {r.stimulus_id: r for r in b}
    if len(map_a) != len(a) or len(map_b) != len(b):
        raise ValidationError("duplicate stimulus in a judgment list")
    only_a = sorted(set(map_a) - set(map_b))
    only_b = sorted(set(map_b) - set(map_a))
    if only_a or only_b:
        raise ValidationError(
            f"stimulus sets differ: only in a {only_a[:5]}, only in b {only_b[:5]}"
        )
    if not map_a:
        raise ValidationError("cannot compute agreement over an empty stimulus set")
    same_choice = same_outcome = both_correct = 0
    for sid in map_a:
        ra, rb = map_a[sid], map_b[sid]
        if ra.outcome is None or rb.outcome is None:
            raise ValidationError(f"stimulus {sid!r} has no defined outcome")
        same_choice += ra.choice == rb.choice
        same_outcome += ra.outcome == rb.outcome
        both_correct += ra.outcome and rb.outcome
    n = len(map_a)
    return same_choice / n, same_outcome / n, both_correct / n


@dataclass
class PhoneFeatureVector:
    counts: dict = field(default_factory=dict)

    def as_array(self, phone_order: list) -> np.ndarray:
        return np.array([self.counts.get(p, 0.0) for p in phone_order], dtype=np.float64)


def parse_pronunciation_dict(path) -> dict:
    """word<TAB>phone phone ...; repeated words are alternatives."""
    entries: dict[str, list] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "\t" not in line:
                raise ValidationError(f"line {lineno}: expected word<TAB>phones")
            word, phones = line.split("\t", 1)
            entries.setdefault(word.lower(), []).append(phones.split())
    return entries


def phone_features(prompt: str, pronunciations: dict) -> PhoneFeatureVector:
    """Fractional phone counts: each of a word's P pronunciations adds 1/P."""
    counts: dict[str, float] = {}
    words = prompt.lower().split()
    missing = sorted({w for w in words if w not in pronunciations})
    if missing:
        raise ValidationError(f"words missing from the pronunciation dictionary: {missing}")
    for word in words:
        variants = pronunciations[word]
        weight = 1.0 / len(variants)
        for phones in variants:
            for phone in phones:
                counts[phone] = counts.get(phone, 0.0) + weight
    return PhoneFeatureVector(counts=counts)


@dataclass
class LogisticModel:
    weights: np.ndarray
    l2_strength: float
    converged: bool
    log_loss: float

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        z = np.asarray(features, dtype=np.float64) @ self.weights
        return 1.0 / (1.0 + np.exp(-z))


def _mean_log_loss(p: np.ndarray, y: np.ndarray) -> float:
    eps = 1e-12
    p = np.clip(p, eps, 1 - eps)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def fit_logistic(
    features: np.ndarray,
    outcomes: np.ndarray,
    l2_strength: float = 1.0,
    max_iterations: int = 200,
    tolerance: float = 1e-6,
) -> LogisticModel:
    """Minimise mean log loss + l2/2 * ||w||^2 by damped Newton steps.

    The objective is strictly convex for l2 > 0, so the zero-initialised
    fit is the unique optimum regardless of starting point. Convergence
    is declared at gradient norm <= tolerance.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(outcomes, dtype=np.float64)
    if x.ndim != 2 or len(x) != len(y):
        raise ValidationError("features must be (observations, columns) matching outcomes")
    if len(x) == 0:
        raise ValidationError("cannot fit on an empty observation set")
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("outcomes must be binary")
    if l2_strength < 0:
        raise ValidationError("l2_strength must be nonnegative")
    n, m = x.shape
    w = np.zeros(m)
    converged = False
    for _ in range(max_iterations):
        p = 1.0 / (1.0 + np.exp(-(x @ w)))
        grad = x.T @ (p - y) / n + l2_strength * w
        if np.linalg.norm(grad) <= tolerance:
            converged = True
            break
        r = p * (1.0 - p)
        hess = (x.T * r) @ x / n + l2_strength * np.eye(m)
        # Levenberg damping keeps the step defined when l2 = 0 and the
        # Hessian is singular.
        step = np.linalg.solve(hess + 1e-10 * np.eye(m), grad)
        loss = _mean_log_loss(p, y) + 0.5 * l2_strength * float(w @ w)
        scale = 1.0
        while scale > 1e-8:
            w_new = w - scale * step
            p_new = 1.0 / (1.0 + np.exp(-(x @ w_new)))
            new_loss = _mean_log_loss(p_new, y) + 0.5 * l2_strength * float(w_new @ w_new)
            if new_loss <= loss + 1e-15:
                break
            scale *= 0.5
        w = w - scale * step
    p = 1.0 / (1.0 + np.exp(-(x @ w)))
    return LogisticModel(
        weights=w,
        l2_strength=l2_strength,
        converged=converged,
        log_loss=_mean_log_loss(p, y),
    )


def build_design_matrix(
    judgments: list,
    prompts: dict,
    pronunciations: dict,
) -> tuple:
    """Design matrix for outcome regression: errors, participants, phones.

    One column per distinct error value (one-hot), one per participant
    (one-hot), one per phone (fractional counts from the prompt of the
    judged stimulus). Returns (matrix, outcomes, column_names); rows
    follow the judgment list order. Judgments without a defined outcome
    are rejected.
    """
    if not judgments:
        raise ValidationError("no judgments to build a design matrix from")
    for rec in judgments:
        if rec.outcome is None:
            raise ValidationError(f"judgment on {rec.stimulus_id!r} has no defined outcome")
        if rec.stimulus_id not in prompts:
            raise ValidationError(f"no prompt recorded for stimulus {rec.stimulus_id!r}")
    errors = sorted({float(rec.error_ms) for rec in judgments})
    participants = sorted({rec.participant_id for rec in judgments})
    vectors = [phone_features(prompts[rec.stimulus_id], pronunciations) for rec in judgments]
    phones = sorted({p for vec in vectors for p in vec.counts})
    columns = (
        [f"error:{e:g}" for e in errors]
        + [f"participant:{p}" for p in participants]
        + [f"phone:{p}" for p in phones]
    )
    x = np.zeros((len(judgments), len(columns)))
    y = np.zeros(len(judgments))
    for i, (rec, vec) in enumerate(zip(judgments, vectors)):
        x[i, errors.index(float(rec.error_ms))] = 1.0
        x[i, len(errors) + participants.index(rec.participant_id)] = 1.0
        x[i, len(errors) + len(participants) :] = vec.as_array(phones)
        y[i] = 1.0 if rec.outcome else 0.0
    return x, y, columns


def null_log_likelihood(outcomes: np.ndarray) -> float:
    """Log likelihood of the best constant-probability model."""
    y = np.asarray(outcomes, dtype=np.float64)
    if len(y) == 0:
        raise ValidationError("empty outcome set")
    p = float(np.mean(y))
    if p in (0.0, 1.0):
        return 0.0
    return float(np.sum(y * math.log(p) + (1 - y) * math.log(1 - p)))


def mcfadden_r2(model_log_likelihood: float, null_log_likelihood: float) -> float:
    if model_log_likelihood > 0 or null_log_likelihood > 0:
        raise ValidationError("log likelihoods must be nonpositive")
    if null_log_likelihood == 0:
        raise ValidationError("null log likelihood of 0 leaves the ratio undefined")
    return 1.0 - model_log_likelihood / null_log_likelihood
