"""Figure rendering for the report command: PNG via matplotlib and a gnuplot script."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "savefig.dpi": 150,
    "figure.figsize": (4.5, 3.2),
}

# name -> (x label, y label, title)
FIGURES = {
    "fig3": ("information state s", "load reduction (MWh)", "Spot-market load reduction"),
    "fig4": ("information state s", "contingent price ($/MWh)", "Spot-market contingent price"),
    "fig5": ("strike price ($/MWh)", "option price ($/MWh)", "Option price"),
    "fig6": ("strike price ($/MWh)", "options traded (MWh)", "Option volume"),
    "fig7": ("strike price ($/MWh)", "day-ahead purchase (MWh)", "Day-ahead purchase"),
    "fig8": ("information state s", "load reduction (MWh)", "Exercise at the optimal strike"),
    "fig9": ("information state s", "density / CDF", "Information-state distribution"),
    "fig10": ("strike price ($/MWh)", "expected system cost ($)", "System cost"),
}


def render(name: str, header: list[str], rows: list[tuple], out_dir: Path) -> Path:
    """Plot every column after the first against the first."""
    xlabel, ylabel, title = FIGURES[name]
    xs = [r[0] for r in rows]
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for j, col in enumerate(header[1:], start=1):
            ax.plot(xs, [r[j] for r in rows], label=col)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        if len(header) > 2:
            ax.legend(frameon=False)
        fig.tight_layout()
        path = out_dir / f"{name}.png"
        fig.savefig(path)
        plt.close(fig)
    return path


def gnuplot_script(columns: dict[str, list[str]]) -> str:
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             "set terminal pngcairo size 900,640", "set grid", ""]
    for name, header in columns.items():
        xlabel, ylabel, title = FIGURES[name]
        lines += [f"set output '{name}_gp.png'", f"set title '{title}'",
                  f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
        plots = [f"'{name}.csv' using 1:{j} with lines" for j in range(2, len(header) + 1)]
        lines += ["plot " + ", \\\n     ".join(plots), ""]
    return "\n".join(lines)
