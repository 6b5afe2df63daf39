"""Dyadic table of indefinite-form counts with the count / (B A^(n-2) log A) spread."""

import argparse

from critline import counting
from critline.forms import GramForm, difference_form, parse_inline


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gram", default="1,0;0,1")
    ap.add_argument("--difference", action="store_true", help="count the difference form Q(u) - Q(v)")
    ap.add_argument("--A", default="20,40,80,160")
    ap.add_argument("--B", default="1,2,4")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    Q = parse_inline(args.gram)
    if args.difference:
        Q = difference_form(GramForm.positive(Q.gram))
    reps = counting.dyadic_table(Q, [float(a) for a in args.A.split(",")],
                                 [float(b) for b in args.B.split(",")], args.threads)
    print(counting.reports_to_csv(reps), end="")
    logs = [r.normalized_log for r in reps]
    print(f"# spread {max(logs) / min(logs):.4f}")


if __name__ == "__main__":
    main()
