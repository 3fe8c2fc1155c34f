"""Write the Iris, Wine and Breast Cancer tables bundled with scikit-learn as
plain CSV files (numeric features + integer `label` column)."""
import csv
import re
import sys
from pathlib import Path

from sklearn.datasets import load_breast_cancer, load_iris, load_wine


def slug(name):
    name = re.sub(r"\(.*?\)", "", name).strip().lower()
    return re.sub(r"[^a-z0-9]+", "_", name).strip("_")


def export(bunch, path):
    names = [slug(n) for n in bunch.feature_names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["label"])
        for row, y in zip(bunch.data, bunch.target):
            w.writerow([repr(float(v)) for v in row] + [int(y)])


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    export(load_iris(), out / "iris.csv")
    export(load_wine(), out / "wine.csv")
    export(load_breast_cancer(), out / "breast_cancer.csv")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")
