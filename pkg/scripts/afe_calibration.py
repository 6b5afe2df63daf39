"""Calibrate the AFE error constant on [10, 30] and check it at large heights for the identity."""

import argparse
import math

import numpy as np

from critline import epstein, specialfns, sweep
from critline.forms import GramForm


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--heights", default="100,1000,5000")
    args = ap.parse_args()

    Q = GramForm.identity(2)
    heights = [float(x) for x in args.heights.split(",")]
    v, dv = sweep.epstein_values(Q, max(heights + [30.0]))
    cal = max(abs(epstein.eval_afe(Q, t, v, dv) - epstein.eval_theta(Q, complex(0.5, t))) / math.log(t)
              for t in np.arange(10.0, 30.0 + 1e-9, 0.5))
    print(f"C_cal {cal:.16g}")
    for t in heights:
        s = complex(0.5, t)
        ref = 4 * specialfns.riemann_zeta(s) * specialfns.dirichlet_L_chi4(s)
        err = abs(epstein.eval_afe(Q, t, v, dv) - ref) / math.log(t)
        print(f"t {t:g}: |afe - 4 zeta L| / log t = {err:.4f} (bound {2 * cal:.4f})")


if __name__ == "__main__":
    main()
