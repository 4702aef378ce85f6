"""Plain-text tables, delimited records and matplotlib figures.

Report spreads are population standard deviations (noted in headers).
Figures are rendered with the Agg backend so reports work headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import HARD, SOFT, EvalRow, GroupStats


def format_eval_table(groups: list, group_key: str) -> str:
    """Aligned accuracy table with an 'All' row last."""
    header = [group_key.capitalize(), "N", "Hard %", "Soft %", "Mean (ms)", "SD (ms)"]
    rows = [
        [
            g.name or "(none)",
            str(g.n),
            f"{g.hard_pct:.1f}",
            f"{g.soft_pct:.1f}",
            f"{g.mean_ms:.1f}",
            f"{g.std_ms:.1f}",
        ]
        for g in groups
    ]
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(r[i].ljust(widths[i]) for i in range(len(header))) for r in rows]
    lines.append("")
    lines.append("SD is the population standard deviation of the discrepancy.")
    return "\n".join(lines) + "\n"


def write_groups_tsv(groups: list, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("group\tn\thard_pct\tsoft_pct\tmean_ms\tsd_ms\n")
        for g in groups:
            fh.write(
                f"{g.name}\t{g.n}\t{g.hard_pct:.6f}\t{g.soft_pct:.6f}\t"
                f"{g.mean_ms:.6f}\t{g.std_ms:.6f}\n"
            )


def write_rows_tsv(rows: list, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("utterance_id\tdataset\ttype\tspeaker\tprediction_ms\ttruth_ms\tdisc_ms\n")
        for r in rows:
            fh.write(
                f"{r.utterance_id}\t{r.dataset}\t{r.type_code}\t{r.speaker}\t"
                f"{r.prediction:g}\t{r.truth:g}\t{r.disc:g}\n"
            )


def fig_discrepancy_histogram(rows: list, path):
    discs = [r.disc for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(discs, bins=30, color="#4878a8", edgecolor="black")
    for bound, style in ((HARD, "-"), (SOFT, "--")):
        for x in (bound.lower, bound.upper):
            ax.axvline(x, color="firebrick", linestyle=style, linewidth=1)
    ax.set_xlabel("discrepancy (ms)")
    ax.set_ylabel("utterances")
    ax.set_title("Prediction discrepancy (solid: hard bounds, dashed: soft)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def fig_accuracy_by_group(groups: list, path):
    named = [g for g in groups if g.name != "All"] or groups
    x = np.arange(len(named))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(x - 0.2, [g.hard_pct for g in named], width=0.4, label="hard", color="#4878a8")
    ax.bar(x + 0.2, [g.soft_pct for g in named], width=0.4, label="soft", color="#a8c878")
    ax.set_xticks(x)
    ax.set_xticklabels([g.name or "(none)" for g in named], rotation=30, ha="right")
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 105)
    ax.legend()
    ax.set_title("Synchronisation accuracy by group")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def fig_loss_curves(report, path):
    epochs = np.arange(1, len(report.train_losses) + 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(epochs, report.train_losses, marker="o", label="train")
    ax.plot(epochs, report.val_losses, marker="s", label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("contrastive loss")
    ax2 = ax.twinx()
    ax2.plot(epochs, report.learning_rates, color="gray", linestyle=":", label="lr")
    ax2.set_ylabel("learning rate")
    ax2.set_yscale("log")
    ax.legend(loc="upper right")
    ax.set_title("Training curves")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def fig_accuracy_by_error(per_error: dict, path):
    """Accuracy with Wald CI whiskers per injected error."""
    errors = sorted(per_error, key=float)
    acc = np.array([per_error[e]["accuracy"] for e in errors])
    low = np.array([per_error[e]["ci_low"] for e in errors])
    high = np.array([per_error[e]["ci_high"] for e in errors])
    x = np.arange(len(errors))
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.errorbar(
        x, 100 * acc, yerr=[100 * (acc - low), 100 * (high - acc)],
        fmt="o-", capsize=4, color="#4878a8",
    )
    ax.set_xticks(x)
    ax.set_xticklabels(errors, rotation=30, ha="right")
    ax.set_xlabel("injected error (ms)")
    ax.set_ylabel("detection accuracy (%)")
    ax.set_ylim(-5, 105)
    ax.axhline(50, color="gray", linestyle=":", linewidth=1)
    ax.set_title("Detection accuracy per error (95% Wald CI)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def fig_preference_by_participant(per_participant: dict, path):
    names = sorted(per_participant)
    props = np.array([per_participant[p]["proportion"] for p in names])
    low = np.array([per_participant[p]["ci_low"] for p in names])
    high = np.array([per_participant[p]["ci_high"] for p in names])
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.errorbar(
        x, 100 * props, yerr=[100 * (props - low), 100 * (high - props)],
        fmt="o", capsize=4, color="#4878a8",
    )
    ax.axhline(50, color="gray", linestyle=":", linewidth=1)
    ax.set_xticks(x)
    ax.set_xticklabels(names)
    ax.set_ylabel("model preferred (%)")
    ax.set_ylim(-5, 105)
    ax.set_title("Model-over-hardware preference per participant (95% Wald CI)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
