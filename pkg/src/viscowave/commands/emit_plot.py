import argparse
import csv
import os
from argparse import _SubParsersAction
from pathlib import Path
from string import Template

from viscowave.fields import SpaceTimeField
from viscowave.picard import CONTRACTION_SLACK, SolveReport
from viscowave.utils import echo, output_dir

PREAMBLE = """\
# Generated by viscowave emit-plot; paths are relative to this script.
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent
plt.rcParams["font.size"] = 9
plt.rcParams["figure.figsize"] = [6.0, 3.7]
"""

LOAD_FIELD = """\
data = np.genfromtxt(HERE / "$field", delimiter=",", names=True)
x = np.unique(data["x"])
t = np.unique(data["t"])
u = np.empty((t.size, x.size))
u[np.searchsorted(t, data["t"]), np.searchsorted(x, data["x"])] = data["u"]
"""

HEATMAP = Template(
    PREAMBLE
    + LOAD_FIELD
    + """
fig, ax = plt.subplots()
mesh = ax.pcolormesh(x, t, u, shading="auto", cmap="viridis")
fig.colorbar(mesh, ax=ax, label="u")
ax.set_xlabel("x")
ax.set_ylabel("t")
ax.set_title("u(x, t)")
fig.tight_layout()
fig.savefig(HERE / "heatmap.pdf")
"""
)

SLICES = Template(
    PREAMBLE
    + LOAD_FIELD
    + """
fig, ax = plt.subplots()
for level in np.unique(np.linspace(0, t.size - 1, $count).astype(int)):
    ax.plot(x, u[level], label=f"t = {t[level]:.3g}")
ax.set_xlabel("x")
ax.set_ylabel("u")
ax.legend(frameon=False)
ax.spines["right"].set_visible(False)
ax.spines["top"].set_visible(False)
fig.tight_layout()
fig.savefig(HERE / "slices.pdf")
"""
)

CONTRACTION = Template(
    PREAMBLE
    + """
data = np.genfromtxt(HERE / "$table", delimiter=",", names=True)

fig, ax = plt.subplots()
for window in np.unique(data["window"]).astype(int):
    rows = data[data["window"] == window]
    ax.plot(rows["iteration"], rows["ratio"], marker="o", label=f"window {window}")
ax.axhline($theta, color="grey", linestyle="--", label="theta")
ax.set_xlabel("iteration")
ax.set_ylabel("|v_{k+1} - v_k| / |v_k - v_{k-1}|")
ax.legend(frameon=False, fontsize=7)
fig.tight_layout()
fig.savefig(HERE / "contraction.pdf")
"""
)


def register(subparsers: _SubParsersAction):
    parser: argparse.ArgumentParser = subparsers.add_parser(
        "emit-plot",
        help="Write matplotlib scripts for a solved field",
    )
    parser.add_argument(
        "--field",
        type=Path,
        required=True,
        help="Field CSV written by solve or solve-linear",
    )
    parser.add_argument(
        "--report",
        type=Path,
        help="Solve report JSON; enables the contraction table and plot",
    )
    parser.add_argument(
        "--slices",
        type=int,
        default=5,
        help="Number of time slices to draw (default: 5)",
    )
    return parser


def _relative(path: Path, start: Path) -> str:
    return Path(os.path.relpath(path.resolve(), start.resolve())).as_posix()


def write_contraction(report: SolveReport, path: Path) -> None:
    """One row per iteration; the ratio is blank where the previous step is noise."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["window", "iteration", "difference", "ratio"])
        for window in report.windows:
            previous = None
            for k, difference in enumerate(window.differences, start=1):
                ratio = ""
                if previous is not None and previous > CONTRACTION_SLACK:
                    ratio = repr(difference / previous)
                writer.writerow([window.index, k, repr(difference), ratio])
                previous = difference


def execute(args: argparse.Namespace):
    # fail early on a malformed field file
    SpaceTimeField.from_csv(args.field)
    target = output_dir(args)
    field = _relative(args.field, target)
    scripts = {
        "plot_heatmap.py": HEATMAP.substitute(field=field),
        "plot_slices.py": SLICES.substitute(field=field, count=max(1, args.slices)),
    }
    written = []
    if args.report is not None:
        if not args.report.exists():
            raise FileNotFoundError(f"Report '{args.report}' does not exist.")
        report = SolveReport.from_json(args.report)
        write_contraction(report, target / "contraction.csv")
        written.append("contraction.csv")
        scripts["plot_contraction.py"] = CONTRACTION.substitute(
            table="contraction.csv", theta=repr(report.theta)
        )
    for name, text in scripts.items():
        (target / name).write_text(text, encoding="utf-8")
    echo(args, f"Wrote {', '.join([*scripts, *written])} to '{target}'")
