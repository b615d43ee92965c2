"""Write plot-ready CSV grids of the e, g and h kernels around their critical parameters."""
import argparse
import subprocess
import sys
from pathlib import Path

from multisd.kernels import T0_CLOSED_FORM

RUNS = [
    ("e_kernel", {"t": 0.5}),
    ("g_kernel", {"alpha": 0.6, "t": 0.5}),
    ("g_kernel", {"alpha": 0.6, "t": 0.45}),
    ("g_kernel", {"alpha": 0.6, "t": T0_CLOSED_FORM}),
    ("g_kernel", {"alpha": 0.6, "t": T0_CLOSED_FORM - 0.02}),
    ("h_kernel", {"alpha": 0.6, "t": 0.2}),
    ("h_kernel", {"alpha": 0.6, "t": 0.1}),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("outdir", type=Path)
    ap.add_argument("--grid-points", type=int, default=2048)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name, params in RUNS:
        tag = "_".join(f"{k}{v:.4g}" for k, v in params.items())
        out = args.outdir / f"{name}_{tag}.csv"
        argv = [sys.executable, "-m", "multisd", "eval", name, "--format", "csv", "--output", str(out),
                "--grid-points", str(args.grid_points)]
        for k, v in params.items():
            argv += [f"--{k}", repr(v)]
        subprocess.run(argv, check=True)
        print(out)


if __name__ == "__main__":
    main()
