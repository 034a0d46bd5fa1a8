"""Loader for Bollen's Political Democracy indicators.

The data (75 countries, 11 columns) is not vendored; supply a CSV with the
standard column names y1..y8, x1..x3 (any order, extra columns allowed).
It ships with the R package `lavaan` as `PoliticalDemocracy` and with the
Python package `semopy`; `fetch_political_democracy` pulls it through
statsmodels' Rdatasets bridge when network access and statsmodels exist.

The 1960/1965 case study uses the six-column subset

    x1  GNP per capita 1960            (industrialization)
    x2  energy consumption per capita  (industrialization)
    y3  fairness of elections 1960     (democracy 1960)
    y4  effectiveness of legislature 1960
    y5  press freedom 1965             (democracy 1965)
    y6  freedom of opposition 1965

whose accepted structural model is the latent triangle
ind60 -> dem60 -> dem65 plus ind60 -> dem65, with two indicators each.
"""

from __future__ import annotations

import os

from .builtin import get_skeleton
from .errors import InputError
from .model import SampleMatrix

COLUMNS = ("y1", "y2", "y3", "y4", "y5", "y6", "y7", "y8", "x1", "x2", "x3")
SUBSET = ("x1", "x2", "y3", "y4", "y5", "y6")
DEFAULT_PATH = os.path.join("data", "political_democracy.csv")

# latent triangle with three two-indicator clusters, in SUBSET column order
TRUE_SUBSET_CLUSTERS = (("x1", "x2"), ("y3", "y4"), ("y5", "y6"))
TRUE_SUBSET_EDGES = (("ind60", "dem60"), ("dem60", "dem65"), ("ind60", "dem65"))


def political_democracy_skeleton():
    """Ground-truth graph of the six-variable case study (latent triangle)."""
    return get_skeleton("poldem")


def load_political_democracy(path: str | None = None) -> SampleMatrix:
    path = path or DEFAULT_PATH
    if not os.path.exists(path):
        raise InputError(
            f"{path} not found. Export the PoliticalDemocracy data from R's "
            "lavaan (write.csv(PoliticalDemocracy, ...)) or from semopy, or "
            "run lvcd.datasets.fetch_political_democracy() with network access.")
    data = SampleMatrix.load_csv(path)
    lowered = tuple(name.lower() for name in data.names)
    missing = [c for c in COLUMNS if c not in lowered]
    if missing:
        raise InputError(f"{path}: missing columns {missing}")
    data = SampleMatrix(lowered, data.values)
    return data.select(list(COLUMNS))


def democracy_subset(data: SampleMatrix) -> SampleMatrix:
    """The six indicators of the 1960/1965 case study."""
    return data.select(list(SUBSET))


def fetch_political_democracy(dest: str = DEFAULT_PATH) -> str:
    """Best-effort download via statsmodels' Rdatasets bridge."""
    try:
        import statsmodels.api as sm
    except ImportError as exc:
        raise InputError("fetching needs the optional statsmodels package") from exc
    try:
        frame = sm.datasets.get_rdataset("PoliticalDemocracy", "lavaan").data
    except Exception as exc:
        raise InputError(f"could not fetch PoliticalDemocracy: {exc}") from exc
    os.makedirs(os.path.dirname(dest) or ".", exist_ok=True)
    names = tuple(str(c).lower() for c in frame.columns)
    SampleMatrix(names, frame.to_numpy(dtype=float)).save_csv(dest)
    return dest
