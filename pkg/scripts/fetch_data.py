"""Build ``tokyo_rain.csv`` from NOAA GHCN-Daily records for Tokyo.

Station JA000047662 (Tokyo), element PRCP in tenths of a millimetre. A day
counts as rainy when PRCP > 1 mm. Indicators for 1951-1989 are summed by
day of a 366-day calendar (29 February is day 60), giving ``y`` rainy years
out of ``m`` recorded years per day (39, or 10 for 29 February when every
record is present).

    python scripts/fetch_data.py --out data
    SPMRF_DATA_DIR=data spmrf fit --dataset tokyo --obs binomial --order 2 ...

A local copy of the station file (``.csv`` or ``.csv.gz``) can be given with
``--source`` instead of downloading.
"""
import argparse
import csv
import datetime as dt
import gzip
import io
import os
import sys
import urllib.request

URL = "https://www.ncei.noaa.gov/pub/data/ghcn/daily/by_station/JA000047662.csv.gz"
FIRST, LAST = 1951, 1989
THRESHOLD_TENTHS_MM = 10


def day_index(date: dt.date) -> int:
    """1-based day in a leap-year calendar, so 29 February is always day 60."""
    return dt.date(2000, date.month, date.day).timetuple().tm_yday


def read_records(raw: bytes):
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    for row in csv.reader(io.StringIO(raw.decode("ascii"))):
        if len(row) < 4 or row[2] != "PRCP":
            continue
        if len(row) > 5 and row[5].strip():
            continue  # failed a quality check
        date = dt.datetime.strptime(row[1], "%Y%m%d").date()
        if FIRST <= date.year <= LAST:
            yield date, int(row[3])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data")
    ap.add_argument("--source", help="local station file instead of downloading")
    args = ap.parse_args()
    if args.source:
        with open(args.source, "rb") as fh:
            raw = fh.read()
    else:
        with urllib.request.urlopen(URL, timeout=120) as resp:
            raw = resp.read()
    y, m = [0] * 366, [0] * 366
    for date, tenths in read_records(raw):
        i = day_index(date) - 1
        m[i] += 1
        y[i] += tenths > THRESHOLD_TENTHS_MM
    expected = [39] * 366
    expected[59] = 10
    if m != expected:
        short = sum(a < b for a, b in zip(m, expected))
        print(f"warning: {short} days have fewer records than expected", file=sys.stderr)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "tokyo_rain.csv")
    with open(path, "w") as fh:
        fh.write("x,y,m\n")
        for i in range(366):
            if m[i]:
                fh.write(f"{i + 1},{y[i]},{m[i]}\n")
    print(f"wrote {path}: {sum(y)} rainy day-years over {sum(m)} records")


if __name__ == "__main__":
    main()
