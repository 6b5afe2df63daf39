"""Windowed maximum of |E(1 + iT, j)| on the Picard side and its growth exponent."""

import argparse
import math

from critline import sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", default=",".join(str(100 * 2 ** k) for k in range(7)))
    ap.add_argument("--width", type=float, default=10.0)
    args = ap.parse_args()

    T_list = [float(x) for x in args.T.split(",")]
    fit = sweep.pointwise_picard_growth(T_list, args.width)
    print("T,W")
    for logT, logW in fit.points:
        print(f"{math.exp(logT):.6g},{math.exp(logW):.10g}")
    print(f"# fitted slope {fit.slope:.4f}")


if __name__ == "__main__":
    main()
