"""Mean square of Z_Q(1/2 + it) over [T, 2T] on a dyadic ladder, with the fitted exponent."""

import argparse
import math

from critline import sweep
from critline.forms import parse_inline


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gram", default="1,0;0,1", help="binary Gram matrix, rows separated by ';'")
    ap.add_argument("--T", default=",".join(map(str, sweep.T_LADDER)), help="comma-separated heights")
    ap.add_argument("--step", type=float, default=sweep.DEFAULT_STEP)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--cache-dir", default=None)
    args = ap.parse_args()

    Q = parse_inline(args.gram, "positive_definite")
    T_list = [float(x) for x in args.T.split(",")]
    v, dv = sweep.epstein_values(Q, 2 * max(T_list), args.cache_dir)
    print("T,M,M/(T log^2 T)")
    M = []
    for T in T_list:
        rep = sweep.mean_square_epstein(Q, T, args.step, v, dv, args.threads)
        M.append(rep.integral)
        print(f"{T:g},{rep.integral:.10g},{rep.integral / (T * math.log(T) ** 2):.6f}")
    print(f"# fitted slope {sweep.fit_exponent(zip(T_list, M)).slope:.4f}")


if __name__ == "__main__":
    main()
