"""Locate t1 = max of t_plus_Q on (x0, 60) and compare with both reference values.

A brute-force dense grid is evaluated next to the golden-section result so the
two approaches can be compared directly.
"""
import argparse

import numpy as np

from multisd.kernels import (T1_CAP, T1_REFERENCE_HATS, T1_REFERENCE_MAJ, critical_t1, critical_x0,
                             t1_argmax, t_plus_Q)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=2_000_000)
    args = ap.parse_args()
    x0 = critical_x0()
    x = np.linspace(x0 * (1 + 1e-12), T1_CAP, args.points)
    v = t_plus_Q(x)
    i = int(np.argmax(v))
    t1 = critical_t1()
    print(f"golden section : t1 = {t1:.15f} at x = {t1_argmax():.12f}")
    print(f"dense grid     : t1 = {v[i]:.15f} at x = {x[i]:.12f} ({args.points} points)")
    for ref in (T1_REFERENCE_MAJ, T1_REFERENCE_HATS):
        print(f"reference {ref:.12f}: |diff| = {abs(t1 - ref):.3e}")


if __name__ == "__main__":
    main()
