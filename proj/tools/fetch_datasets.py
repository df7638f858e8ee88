#!/usr/bin/env python3
"""Fetch the Adult and COMPAS CSVs into data/.

Writes:
  data/adult.csv                      UCI adult.data + adult.test with a header row
  data/compas-scores-two-years.csv    ProPublica file, unchanged

Sources are tried in order: the upstream URLs, then the copies bundled in the
`responsibly` wheel on PyPI (fetched with `pip download`).
"""

import argparse
import glob
import io
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases/adult/"
PROPUBLICA = ("https://raw.githubusercontent.com/propublica/compas-analysis/"
              "master/compas-scores-two-years.csv")


def _download(url):
    with urllib.request.urlopen(url, timeout=30) as r:
        return r.read().decode("utf-8")


def _from_wheel():
    tmp = tempfile.mkdtemp()
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps",
                    "--timeout", "120", "responsibly==0.1.2", "-d", tmp],
                   check=True, stdout=subprocess.DEVNULL)
    whl = zipfile.ZipFile(glob.glob(os.path.join(tmp, "*.whl"))[0])
    base = "responsibly/dataset/"
    read = lambda name: whl.read(base + name).decode("utf-8")
    return (read("adult/adult.data"), read("adult/adult.test"),
            read("compas/compas-scores-two-years.csv"))


def _adult_rows(text):
    for line in io.StringIO(text):
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(ADULT_COLUMNS):
            continue
        fields[-1] = fields[-1].rstrip(".")
        yield ",".join(fields)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "data"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    try:
        train = _download(UCI + "adult.data")
        test = _download(UCI + "adult.test")
        compas = _download(PROPUBLICA)
    except Exception as exc:  # noqa: BLE001
        print(f"upstream download failed ({exc}); using PyPI wheel copy",
              file=sys.stderr)
        train, test, compas = _from_wheel()

    with open(os.path.join(args.out, "adult.csv"), "w", newline="\n") as f:
        f.write(",".join(ADULT_COLUMNS) + "\n")
        for row in _adult_rows(train):
            f.write(row + "\n")
        for row in _adult_rows(test):
            f.write(row + "\n")
    with open(os.path.join(args.out, "compas-scores-two-years.csv"), "w",
              newline="\n") as f:
        f.write(compas)
    print(f"wrote datasets to {os.path.abspath(args.out)}")


if __name__ == "__main__":
    main()
