"""Run every inequality suite over the standard corpus and print one line per (suite, d)."""
import argparse
import time

from entstab import inequalities as ineq


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", default="1,2,3")
    ap.add_argument("--n", type=int, default=2048)
    args = ap.parse_args()
    dims = [int(x) for x in args.d.split(",")]
    for suite in ineq.SUITES:
        for d in dims:
            t0 = time.perf_counter()
            recs = ineq.run_suite(suite, d, args.n)
            fails = sorted({r.verdict.inequality_id for r in recs if not r.verdict.passed})
            worst = min(recs, key=lambda r: r.verdict.margin)
            print(f"{suite:10s} d={d} checks={len(recs):4d} fail={len(fails)} "
                  f"worst={worst.verdict.margin:+.2e} ({worst.verdict.inequality_id}) "
                  f"{time.perf_counter() - t0:.2f}s" + (f"  failing: {', '.join(fails)}" if fails else ""))


if __name__ == "__main__":
    main()
