"""Bundled example data and CSV ingestion.

Coal-mining disasters: 191 accident dates (decimal years, accidents with 10 or
more deaths, 15 March 1851 to 22 March 1962) as distributed with R's ``boot``
package (``coal``), after Jarrett (1979). ``coal_yearly.csv`` holds the counts
per calendar year 1851-1962, binned by ``floor(date)``.

Tokyo rainfall: daily indicators of rainfall above 1 mm, 1951-1989, summed by
day of year. Not redistributed here; ``scripts/fetch_data.py`` builds
``tokyo_rain.csv`` from NOAA GHCN-Daily records.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

DATA_ENV = "SPMRF_DATA_DIR"


@dataclass(frozen=True)
class Series:
    """Locations ``x``, observations ``y`` and optional binomial trials ``m``."""

    x: np.ndarray
    y: np.ndarray
    m: np.ndarray | None = None
    source: str = ""


def _data_path(name: str) -> str:
    return str(resources.files("spmrf").joinpath("data", name))


def coal_events() -> np.ndarray:
    return np.loadtxt(_data_path("coal_events.csv"), delimiter=",", skiprows=1)


def bin_by_year(dates, first: int, last: int) -> tuple[np.ndarray, np.ndarray]:
    """Counts of events per calendar year ``first..last``."""
    years = np.arange(first, last + 1)
    idx = np.floor(np.asarray(dates, dtype=float)).astype(int) - first
    if np.any(idx < 0) or np.any(idx >= years.size):
        raise ValueError("event dates fall outside the requested year range")
    return years, np.bincount(idx, minlength=years.size).astype(float)


def load_coal() -> Series:
    return read_series(_data_path("coal_yearly.csv"), source="coal")


def load_tokyo() -> Series:
    """Tokyo rainfall counts, if ``tokyo_rain.csv`` is found in ``$SPMRF_DATA_DIR``
    or the package data directory."""
    candidates = [_data_path("tokyo_rain.csv")]
    if os.environ.get(DATA_ENV):
        candidates.insert(0, os.path.join(os.environ[DATA_ENV], "tokyo_rain.csv"))
    for path in candidates:
        if os.path.exists(path):
            return read_series(path, m_col="m", source="tokyo")
    raise FileNotFoundError(
        "tokyo_rain.csv not found; run scripts/fetch_data.py and point "
        f"{DATA_ENV} at its output directory")


DATASETS = {"coal": load_coal, "tokyo": load_tokyo}


def load_dataset(name: str) -> Series:
    try:
        loader = DATASETS[name]
    except KeyError:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(DATASETS)}") from None
    return loader()


def read_series(path, x_col="x", y_col="y", m_col=None, source=None) -> Series:
    """Read a headered CSV with location, observation and optional trials columns.

    Rows are sorted by location. Raises ``OSError`` if unreadable and
    ``ValueError`` for missing columns or non-numeric / non-finite values.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        cols = [x_col, y_col] + ([m_col] if m_col else [])
        missing = [c for c in cols if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: missing column(s) {missing}; found {reader.fieldnames}")
        rows = [[r[c] for c in cols] for r in reader]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    try:
        arr = np.array(rows, dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric value ({exc})") from None
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path}: non-finite values")
    order = np.argsort(arr[:, 0], kind="stable")
    arr = arr[order]
    m = arr[:, 2] if m_col else None
    return Series(x=arr[:, 0], y=arr[:, 1], m=m, source=source or str(path))
