"""Figure rendering for experiment output.

One figure per signal, two stacked panels: the mixed input on top, the
separation below (ground truth, pursuit output, and the full-dictionary
baseline when its Gram solve went through).  Figures land next to the
delimited curve files.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .io import write_matrix  # noqa: E402

plt.rcParams.update({
    "font.size": 9,
    "figure.figsize": (6.4, 4.8),
    "axes.grid": True,
    "grid.alpha": 0.3,
})


def save_separation_figure(path, x, curves, title=""):
    """Render the two-panel separation figure to `path`."""
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True)
    top.plot(x, curves["mixed"], color="0.2", lw=0.9)
    top.set_ylabel("signal + background")
    if title:
        top.set_title(title)

    bottom.plot(x, curves["truth"], color="0.6", lw=2.2, label="ground truth")
    bottom.plot(x, curves["recovered"], color="tab:blue", lw=0.9,
                label="pursuit output")
    if curves.get("baseline") is not None:
        bottom.plot(x, curves["baseline"], color="tab:red", lw=0.9, ls="--",
                    label="full-dictionary projection")
    else:
        bottom.plot([], [], color="tab:red", ls="--",
                    label="full-dictionary projection (singular Gram)")
    bottom.set_ylabel("separated component")
    bottom.set_xlabel("x")
    bottom.legend(loc="best", fontsize=7)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_signal_outputs(plot_dir, test_id, index, grid, curves, record):
    """Write the delimited curves and the rendered figure for one signal."""
    plot_dir = Path(plot_dir)
    plot_dir.mkdir(parents=True, exist_ok=True)
    x = grid.points()
    stem = f"test{test_id}_signal{index:03d}"

    baseline = curves["baseline"]
    if baseline is None:
        baseline = np.full_like(x, np.nan)
    matrix = np.column_stack([curves["mixed"], curves["truth"],
                              curves["recovered"], baseline])
    write_matrix(
        plot_dir / f"{stem}.csv",
        matrix,
        ["mixed", "truth", "recovered", "baseline"],
        meta={
            "test_id": test_id,
            "signal_index": index,
            "rel_error": record["rel_error"],
            "n_selected": record["n_selected"],
            "stop_reason": record["stop_reason"],
        },
        x=x,
    )
    save_separation_figure(
        plot_dir / f"{stem}.png", x, curves,
        title=f"test {test_id}, signal {index}: "
              f"rel err {record['rel_error']:.2e}, "
              f"{record['n_selected']} atoms")
