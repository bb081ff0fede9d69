"""Diagnostic curves (CSV and SVG) for every bundled dataset and plot type.

    python scripts/diagnostic_plots.py --out-dir results/diagnostics
"""

import argparse
from dataclasses import dataclass
from pathlib import Path

from sadsac.cli import PLOTS, main as cli_main
from sadsac.data import DATASET_NAMES


@dataclass
class PlotConfig:
    out_dir: Path = Path("results/diagnostics")
    points: int = 200


def run(cfg):
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for name in DATASET_NAMES:
        for plot in PLOTS:
            stem = cfg.out_dir / f"{name}_{plot}"
            code = cli_main(["diagnose", "--fof", name, "--plot", plot, "--points", str(cfg.points),
                             "--csv", f"{stem}.csv", "--svg", f"{stem}.svg"])
            if code:
                print(f"{name} {plot}: exit {code}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", type=Path, default=PlotConfig.out_dir)
    p.add_argument("--points", type=int, default=PlotConfig.points)
    a = p.parse_args()
    run(PlotConfig(a.out_dir, a.points))


if __name__ == "__main__":
    main()
