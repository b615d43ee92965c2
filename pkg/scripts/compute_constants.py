"""Print the critical constants t0, x0, t1 with their reference deviations."""
from multisd.kernels import constants_report


def main():
    for name, rep in constants_report().items():
        extra = "" if rep.achieving_x is None else f"  at x = {rep.achieving_x:.12f}"
        diffs = ", ".join(f"{d:.3e}" for d in rep.abs_diffs)
        print(f"{name:>3} = {rep.value:.15f}{extra}  |diff to references| = [{diffs}]")


if __name__ == "__main__":
    main()
