"""Regenerates the *.expected.csv side files by exhaustive scan.

For every fixture, every itemset contained in at least one row is counted
by checking each row directly. The empty itemset is listed with count N.
"""
import csv
import itertools
import pathlib

HERE = pathlib.Path(__file__).parent


def rows_of(path):
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        return [[f"{h}={v}" for h, v in zip(header, row)] for row in r]


def main():
    for path in sorted(HERE.glob("*.csv")):
        if path.name.endswith(".expected.csv"):
            continue
        rows = rows_of(path)
        sets = set()
        for row in rows:
            for k in range(len(row) + 1):
                for combo in itertools.combinations(sorted(row), k):
                    sets.add(combo)
        out = HERE / (path.stem + ".expected.csv")
        with open(out, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["itemset", "count"])
            for s in sorted(sets, key=lambda s: (len(s), s)):
                n = sum(1 for row in rows if all(i in row for i in s))
                w.writerow([" & ".join(s), n])


if __name__ == "__main__":
    main()
