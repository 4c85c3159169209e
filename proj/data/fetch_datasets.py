#!/usr/bin/env python3
"""Fetch and normalize the two UCI datasets used by the experiment harness.

Produces:
  data/heart_cleveland.csv   - UCI Heart Disease (Cleveland), canonical numeric
                               coding (age,sex,cp,...,thal,num), '?' = missing.
  data/breast_ljubljana.csv  - UCI Breast Cancer (Ljubljana), original string
                               categories, '?' = missing.

Sources are GitHub mirrors of the verbatim UCI files (the UCI archive itself
has no stable raw URLs):
  - biolab/orange3 Orange/datasets/heart_disease.tab  (Cleveland, 303 rows)
  - jbrownlee/Datasets breast-cancer.csv              (Ljubljana, 286 rows)

Pass --mirror to prefix every URL host, e.g. a corporate artifact proxy:
  python3 fetch_datasets.py --mirror https://proxy.example.com/artifactory/github
"""

import argparse
import csv
import io
import sys
import urllib.request
from collections import Counter
from pathlib import Path

HEART_PATH = "biolab/orange3/raw/master/Orange/datasets/heart_disease.tab"
BREAST_PATH = "jbrownlee/Datasets/raw/master/breast-cancer.csv"

GENDER = {"male": "1", "female": "0"}
CHEST_PAIN = {"typical ang": "1", "atypical ang": "2", "non-anginal": "3", "asymptomatic": "4"}
REST_ECG = {"normal": "0", "ST-T abnormal": "1", "left vent hypertrophy": "2"}
SLOPE = {"upsloping": "1", "flat": "2", "downsloping": "3"}
THAL = {"normal": "3", "fixed defect": "6", "reversable defect": "7"}

HEART_HEADER = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg",
                "thalach", "exang", "oldpeak", "slope", "ca", "thal", "num"]
BREAST_HEADER = ["age", "menopause", "tumor-size", "inv-nodes", "node-caps",
                 "deg-malig", "breast", "breast-quad", "irradiat", "class"]


def fetch(url: str) -> str:
    with urllib.request.urlopen(url, timeout=120) as resp:
        return resp.read().decode("utf-8")


def as_number(value: str) -> str:
    if value == "?":
        return "?"
    f = float(value)
    return str(int(f)) if f == int(f) else str(f)


def convert_heart(tab_text: str) -> list:
    lines = [l.rstrip("\n") for l in tab_text.splitlines()]
    rows = []
    for line in lines[3:]:  # 3 header lines: names, types, flags
        if not line.strip():
            continue
        f = line.split("\t")
        rows.append([
            as_number(f[0]),
            GENDER[f[1]] if f[1] != "?" else "?",
            CHEST_PAIN[f[2]] if f[2] != "?" else "?",
            as_number(f[3]),
            as_number(f[4]),
            as_number(f[5]),
            REST_ECG[f[6]] if f[6] != "?" else "?",
            as_number(f[7]),
            as_number(f[8]),
            f[9] if f[9] != "?" else "?",
            SLOPE[f[10]] if f[10] != "?" else "?",
            as_number(f[11]),
            THAL[f[12]] if f[12] != "?" else "?",
            as_number(f[13]),
        ])
    return rows


def convert_breast(csv_text: str) -> list:
    rows = []
    for rec in csv.reader(io.StringIO(csv_text), quotechar="'"):
        if not rec:
            continue
        rec = [("?" if v.strip() in ("nan", "?") else v.strip()) for v in rec]
        # source order: 9 attributes then class; keep that order
        rows.append(rec)
    return rows


def check(cond: bool, msg: str) -> None:
    if not cond:
        sys.exit(f"sanity check failed: {msg}")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--mirror", default="https://github.com",
                    help="URL prefix replacing https://github.com")
    ap.add_argument("--out-dir", default=str(Path(__file__).parent))
    args = ap.parse_args()
    out = Path(args.out_dir)

    heart = convert_heart(fetch(f"{args.mirror}/{HEART_PATH}"))
    check(len(heart) == 303, f"heart rows {len(heart)} != 303")
    labels = Counter(r[-1] for r in heart)
    check(labels == Counter({"0": 164, "1": 139}), f"heart labels {labels}")
    check(sum("?" in r for r in heart) == 6, "heart incomplete-row count != 6")
    check(heart[0] == ["63", "1", "1", "145", "233", "1", "2", "150", "0",
                       "2.3", "3", "0", "6", "0"], f"heart row 0 {heart[0]}")
    with open(out / "heart_cleveland.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEART_HEADER)
        w.writerows(heart)

    breast = convert_breast(fetch(f"{args.mirror}/{BREAST_PATH}"))
    check(len(breast) == 286, f"breast rows {len(breast)} != 286")
    labels = Counter(r[-1] for r in breast)
    check(labels == Counter({"no-recurrence-events": 201, "recurrence-events": 85}),
          f"breast labels {labels}")
    check(sum("?" in r for r in breast) == 9, "breast missing-row count != 9")
    with open(out / "breast_ljubljana.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BREAST_HEADER)
        w.writerows(breast)

    print("wrote", out / "heart_cleveland.csv", "and", out / "breast_ljubljana.csv")


if __name__ == "__main__":
    main()
