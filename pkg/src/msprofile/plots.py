"""Static renderings of matrix results (Agg backend, no display needed)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .costs import CostKind  # noqa: E402

# fixed metadata keeps the PNG bytes identical across reruns
_PNG_META = {"Software": None}
_MARKERS = {CostKind.MINIMUM_TIME: "s", CostKind.JERK_COST: "v", CostKind.ACCELERATION_COST: "^",
            CostKind.MS_COST: "o", CostKind.ADAPTIVE_MS_COST: "D"}


def _kind(outcome):
    return outcome.result.cost.kind


def plot_pareto(outcomes, path) -> None:
    """Max MSI against travel time, one panel per metric, one marker per cost kind."""
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    for ax, attr, title in ((axes[0], "msi_max_unipg", "conflict model"),
                            (axes[1], "msi_max_iso", "frequency-weighted dose")):
        for kind in CostKind:
            group = [o for o in outcomes if _kind(o) == kind]
            if not group:
                continue
            ax.plot([o.travel_time for o in group], [getattr(o, attr) for o in group],
                    _MARKERS[kind], label=kind.label, linestyle="none")
        ax.set_xlabel("travel time [s]")
        ax.set_ylabel("max MSI [%]")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


def plot_msi_histories(outcomes, path) -> None:
    """MSI over time for every run, plus the speed profiles."""
    fig, (ax_msi, ax_v) = plt.subplots(2, 1, figsize=(10, 7), sharex=True)
    for o in outcomes:
        tr = o.result.sickness
        ax_msi.plot(tr.t, tr.msi_unipg, lw=0.9, label=o.label)
        traj = o.result.trajectory
        ax_v.plot(traj.t, traj.v * 3.6, lw=0.9)
    ax_msi.set_ylabel("MSI [%]")
    ax_msi.legend(fontsize=6, ncol=3)
    ax_msi.grid(True, alpha=0.3)
    ax_v.set_ylabel("speed [km/h]")
    ax_v.set_xlabel("time [s]")
    ax_v.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
