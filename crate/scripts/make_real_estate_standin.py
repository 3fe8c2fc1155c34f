"""Generate a synthetic stand-in for the UCI Real Estate Valuation table.

The real file could not be bundled here. This script produces a table with the
same schema (414 rows, six numeric features, `target` = price per unit area)
and roughly the same marginal ranges: transaction date in monthly steps over
2012.667..2013.583, house age 0..44 years, a right-skewed distance to the
nearest metro station, a store count that falls with that distance, and a
latitude/longitude cloud around a city centre. Prices follow a hedonic model
with Gaussian noise. Replace `data/real_estate.csv` with the original file to
run against real data; the column layout is identical.
"""
import csv
import sys

import numpy as np

HEADER = [
    "transaction_date",
    "house_age",
    "distance_to_mrt",
    "convenience_stores",
    "latitude",
    "longitude",
    "target",
]


def generate(n=414, seed=477):
    rng = np.random.default_rng(seed)
    date = 2012.667 + rng.integers(0, 12, size=n) / 12.0
    age = np.clip(rng.gamma(2.4, 7.4, size=n), 0.0, 43.8)
    log_dist = np.clip(rng.normal(6.4, 1.05, size=n), np.log(23.4), np.log(6488.0))
    dist = np.exp(log_dist)
    stores = np.clip(np.round(10.5 - 1.25 * (log_dist - 3.2) + rng.normal(0, 1.3, size=n)), 0, 10)
    angle = rng.uniform(0, 2 * np.pi, size=n)
    radius = dist / 111_000.0 * 2.5 + np.abs(rng.normal(0, 0.006, size=n))
    lat = np.clip(24.968 + radius * np.sin(angle), 24.932, 25.015)
    lon = np.clip(121.535 + radius * np.cos(angle) * 1.1, 121.473, 121.566)
    price = (
        84.0
        - 7.2 * log_dist
        - 0.24 * age
        + 0.9 * stores
        + 6.0 * (date - 2013.0)
        + rng.normal(0, 6.5, size=n)
    )
    outliers = rng.random(n) < 0.01
    price[outliers] += rng.uniform(25, 60, size=outliers.sum())
    price = np.clip(price, 7.6, 117.5)
    return np.column_stack([date, age, dist, stores, lat, lon, price])


def main(path):
    rows = generate()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in rows:
            w.writerow(
                [f"{r[0]:.3f}", f"{r[1]:.1f}", f"{r[2]:.5f}", f"{int(r[3])}",
                 f"{r[4]:.5f}", f"{r[5]:.5f}", f"{r[6]:.1f}"]
            )


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/real_estate.csv")
