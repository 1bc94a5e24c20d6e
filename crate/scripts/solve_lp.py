#!/usr/bin/env python3
"""Solve emitted model files with HiGHS and compare objective values.

    python3 scripts/solve_lp.py out/model_full.lp out/model_snac.lp
    python3 scripts/solve_lp.py --rtol 1e-6 --repeat 5 --json a.lp b.lp

Prints one line per file (status, objective, solve seconds; the median over
`--repeat` solves). With two or more files, exits 3 when any objective
differs from the first by more than the relative tolerance. Requires the
`highspy` package.
"""

import argparse
import json
import statistics
import sys
import time


def solve(path, time_limit):
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("threads", 1)
    if time_limit:
        h.setOptionValue("time_limit", float(time_limit))
    status = h.readModel(path)
    if status != highspy.HighsStatus.kOk and status != highspy.HighsStatus.kWarning:
        return {"file": path, "status": "read-error", "objective": None, "seconds": 0.0}
    start = time.perf_counter()
    h.run()
    seconds = time.perf_counter() - start
    model_status = h.getModelStatus()
    objective = h.getInfo().objective_function_value
    return {
        "file": path,
        "status": h.modelStatusToString(model_status),
        "objective": objective if model_status == highspy.HighsModelStatus.kOptimal else None,
        "seconds": seconds,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("files", nargs="+")
    ap.add_argument("--rtol", type=float, default=1e-6)
    ap.add_argument("--repeat", type=int, default=1, help="solves per file; the median time is reported")
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--json", action="store_true", help="print one JSON object per file")
    args = ap.parse_args()

    try:
        import highspy  # noqa: F401
    except ImportError:
        print("highspy is not installed (pip install highspy)", file=sys.stderr)
        return 4

    results = []
    for f in args.files:
        runs = [solve(f, args.time_limit) for _ in range(args.repeat)]
        best = runs[0]
        best["seconds"] = statistics.median(r["seconds"] for r in runs)
        results.append(best)
    for r in results:
        if args.json:
            print(json.dumps(r))
        else:
            obj = "-" if r["objective"] is None else f"{r['objective']:.10g}"
            print(f"{r['file']}: {r['status']}, objective {obj}, {r['seconds']:.3f} s")

    if any(r["objective"] is None for r in results):
        return 2
    base = results[0]["objective"]
    for r in results[1:]:
        diff = abs(r["objective"] - base)
        if diff > args.rtol * max(1.0, abs(base)):
            print(f"objective mismatch: {r['file']} differs from {results[0]['file']} by {diff:.3g}", file=sys.stderr)
            return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
