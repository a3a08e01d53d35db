#!/usr/bin/env python3
"""Fetch the benchmark datasets into data/.

Diabetes is exported from scikit-learn in the raw (unscaled) representation
the loader expects:

    AGE SEX BMI BP S1 S2 S3 S4 S5 S6 Y
    (whitespace separated, 442 rows, SEX in {1, 2}, Y the raw progression score)

German Credit is downloaded from the UCI repository when the network allows
it; the loader expects the original space-separated german.data layout
(1000 rows, 20 attributes plus the 1/2 target).
"""

import argparse
import sys
import urllib.request
from pathlib import Path

CREDIT_URLS = [
    "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/german/german.data",
    "https://archive.ics.uci.edu/static/public/144/data.csv",
]


def export_diabetes(out_path: Path) -> None:
    from sklearn.datasets import load_diabetes

    bunch = load_diabetes(scaled=False)
    names = [n.upper() for n in bunch.feature_names]
    with out_path.open("w") as f:
        f.write(" ".join(names + ["Y"]) + "\n")
        for row, y in zip(bunch.data, bunch.target):
            f.write(" ".join(format(v, "g") for v in row) + f" {y:g}\n")
    print(f"wrote {out_path} ({len(bunch.target)} rows)")


def fetch_credit(out_path: Path) -> bool:
    for url in CREDIT_URLS:
        try:
            with urllib.request.urlopen(url, timeout=30) as resp:
                body = resp.read()
        except OSError as e:
            print(f"  {url}: {e}")
            continue
        lines = [ln for ln in body.decode().splitlines() if ln.strip()]
        if len(lines) != 1000:
            print(f"  {url}: unexpected row count {len(lines)}, skipped")
            continue
        out_path.write_bytes(body)
        print(f"wrote {out_path} (1000 rows)")
        return True
    return False


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data", type=Path)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    export_diabetes(args.out_dir / "diabetes.tab")

    credit_path = args.out_dir / "german.data"
    if credit_path.exists():
        print(f"{credit_path} already present, skipped")
    elif not fetch_credit(credit_path):
        print(
            "could not download german.data; place the UCI file at "
            f"{credit_path} manually (credit experiments are skipped without it)"
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
