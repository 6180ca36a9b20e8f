"""Optional PNG rendering of scenario time series (Agg backend, no display)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def render(columns, plot, path, title=""):
    """Plot ``plot["y"]`` columns against ``plot["x"]`` and save to ``path``."""
    x = columns[plot["x"]]
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in plot["y"]:
        ax.plot(x, columns[name], label=name)
    ax.set_xlabel(plot["x"])
    ax.legend(loc="best")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
