"""Sweep the inverse temperature and tabulate the finiteness integral for a
few spectral-band profiles, then do the same for rotor-style partition sums.

Writes a CSV next to nothing in particular; by default it just prints.

    python scripts/type_survey.py --betas 0.5 1 2 4 --csv /tmp/survey.csv
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

from qrflab import (
    CONDITION_FAILS,
    FINITE,
    INFINITE,
    SpectralMultiplicity,
    evaluate_condition,
    indicator,
    so3_partition_multiplicity,
)

# Band profiles worth comparing: a half line (reduces), the full line (does
# not), a bounded window, a staircase with growing weights, and an infinite
# sheet that can never pass the sufficient condition.
PROFILES = {
    "halfline": indicator([(0.0, math.inf)]),
    "fullline": indicator([(-math.inf, math.inf)]),
    "window": indicator([(0.0, 2.0)]),
    "staircase": SpectralMultiplicity([(1, 0.0, 1.0), (4, 1.0, 2.0), (9, 2.0, 3.0), (16, 3.0, math.inf)]),
    "sheet": SpectralMultiplicity([(INFINITE, 0.0, 1.0)]),
}


def rotor_levels(l: int) -> float:
    return float(l * (l + 1))


def survey(betas: list[float]) -> list[dict[str, object]]:
    rows: list[dict[str, object]] = []
    for name, profile in PROFILES.items():
        for beta in betas:
            verdict = evaluate_condition(profile, beta)
            rows.append(
                {
                    "profile": name,
                    "beta": beta,
                    "status": verdict.status,
                    "integral": verdict.integral,
                    "detail": verdict.detail,
                }
            )
    # Rotor partition sums converge fast for beta of order one; far below
    # beta ~ 0.01 the early terms grow for so long that the truncation
    # heuristic gives up, so the sweep stays in the safe regime.
    for beta in betas:
        if beta < 0.5:
            continue
        res = so3_partition_multiplicity(rotor_levels, beta, target=1e-9)
        rows.append(
            {
                "profile": "rotor-partition",
                "beta": beta,
                "status": res.verdict.status,
                "integral": res.value,
                "detail": f"{res.terms_used} levels, remainder <= {res.verdict.remainder_bound:.2e}",
            }
        )
    return rows


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--betas", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0])
    parser.add_argument("--csv", type=str, default=None, help="optional output path")
    args = parser.parse_args(argv)

    if any(b <= 0 for b in args.betas):
        parser.error("betas must be positive")

    rows = survey(sorted(args.betas))

    widths = (16, 8, 16, 22)
    header = ("profile", "beta", "status", "integral")
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        integral = row["integral"]
        shown = f"{integral:.12g}" if isinstance(integral, float) and math.isfinite(integral) else str(integral)
        line = (
            str(row["profile"]).ljust(widths[0]),
            f"{row['beta']:g}".ljust(widths[1]),
            str(row["status"]).ljust(widths[2]),
            shown.ljust(widths[3]),
        )
        print("  ".join(line) + (f"  {row['detail']}" if row["detail"] else ""))

    n_finite = sum(1 for r in rows if r["status"] == FINITE)
    n_fail = sum(1 for r in rows if r["status"] == CONDITION_FAILS)
    print(f"\n{len(rows)} evaluations: {n_finite} finite, {n_fail} inconclusive or failing")

    if args.csv:
        with open(args.csv, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=["profile", "beta", "status", "integral", "detail"])
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
