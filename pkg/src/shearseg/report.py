"""Figure rendering for command-line reports.

Uses the Agg backend so figures render to files on headless machines.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["save_convergence_figure", "save_rates_figure"]


def save_convergence_figure(record, path, title="ADMM convergence"):
    """Plot the split gap (log scale) and the energy over iterations."""
    fig, ax_gap = plt.subplots(figsize=(7.0, 4.2))
    it = record.iterations
    ax_gap.semilogy(it, record.gaps, color="tab:blue", label="max |u - w|")
    ax_gap.set_xlabel("iteration")
    ax_gap.set_ylabel("split gap", color="tab:blue")
    ax_gap.tick_params(axis="y", labelcolor="tab:blue")
    ax_energy = ax_gap.twinx()
    ax_energy.plot(it, record.energies, color="tab:orange", label="energy")
    ax_energy.set_ylabel("objective value", color="tab:orange")
    ax_energy.tick_params(axis="y", labelcolor="tab:orange")
    ax_gap.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_rates_figure(names, rates, path, title="Mislabel rates"):
    """Bar chart of per-method mislabel rates, annotated in percent."""
    fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(names) + 1.5), 4.2))
    bars = ax.bar(range(len(names)), [100.0 * r for r in rates], color="tab:blue")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("mislabel rate [%]")
    ax.set_title(title)
    for bar, r in zip(bars, rates):
        ax.annotate(
            f"{100.0 * r:.3f}%",
            (bar.get_x() + bar.get_width() / 2.0, bar.get_height()),
            ha="center",
            va="bottom",
            fontsize=9,
        )
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
