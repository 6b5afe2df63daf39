"""Eisenstein mean square 2 * int_0^T |E(1/2 + it, z)|^2 dt on a grid of the modular fundamental domain."""

import argparse
import math

from critline import sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=3)
    ap.add_argument("--ny", type=int, default=3)
    ap.add_argument("--T", default=",".join(map(str, sweep.T_LADDER)), help="comma-separated heights")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    T_list = [float(x) for x in args.T.split(",")]
    print("x,y,slope,max_ratio_to_first")
    for z in sweep.fundamental_grid(args.nx, args.ny):
        reps = sweep.eisenstein_ladder(z, T_list, threads=args.threads)
        slope = sweep.fit_exponent((r.T, r.integral) for r in reps).slope
        norm = [r.integral / (r.T * math.log(r.T) ** 4) for r in reps]
        print(f"{z.x1:g},{z.y:g},{slope:.4f},{max(norm) / norm[0]:.4f}")


if __name__ == "__main__":
    main()
