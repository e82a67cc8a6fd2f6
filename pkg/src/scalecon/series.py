"""Annual input series: CSV ingestion, range checks and the bundled synthetic path."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import MalformedInputError, SeriesError

SERIES_COLUMNS = ("year", "nu", "mu", "n_over_l", "overhead_share", "tfp_data_index")
OPTIONAL_COLUMNS = SERIES_COLUMNS[1:]
SYNTHETIC_RESOURCE = "synthetic_series.csv"


def _range_problem(name: str, value: float) -> str | None:
    if name == "nu" and not value > 0:
        return "nu must be > 0"
    if name == "mu" and not value >= 1:
        return "mu must be >= 1"
    if name == "overhead_share" and not 0 < value < 1:
        return "overhead_share must lie in (0, 1)"
    if name in ("n_over_l", "tfp_data_index") and not value > 0:
        return f"{name} must be > 0"
    return None


@dataclass
class AnnualSeries:
    """Validated annual table, sorted by year. Absent entries are NaN."""

    years: np.ndarray
    data: dict[str, np.ndarray] = field(default_factory=dict)
    source: str = "<series>"

    def __len__(self) -> int:
        return len(self.years)

    def has(self, name: str) -> bool:
        """True when the column exists and every year has a value."""
        col = self.data.get(name)
        return col is not None and bool(np.all(np.isfinite(col)))

    def column(self, name: str) -> np.ndarray:
        if name not in self.data:
            raise SeriesError(f"{self.source}: column {name!r} is absent")
        return self.data[name]

    def require(self, names, purpose: str = "") -> None:
        for name in names:
            if name not in self.data:
                raise SeriesError(f"{self.source}: column {name!r} is required{purpose}")
            missing = self.years[~np.isfinite(self.data[name])]
            if missing.size:
                listed = ", ".join(str(y) for y in missing)
                raise SeriesError(f"{self.source}: column {name!r} missing in year(s) {listed}{purpose}")

    def index_of(self, year: int) -> int:
        hits = np.flatnonzero(self.years == year)
        if hits.size == 0:
            raise SeriesError(f"{self.source}: year {year} not in series")
        return int(hits[0])

    def value(self, name: str, year: int) -> float:
        return float(self.column(name)[self.index_of(year)])

    def to_csv(self) -> str:
        cols = [c for c in OPTIONAL_COLUMNS if c in self.data]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("year", *cols))
        for i, year in enumerate(self.years):
            cells = []
            for c in cols:
                v = self.data[c][i]
                cells.append(format(float(v), ".17g") if math.isfinite(v) else "")
            writer.writerow([str(int(year)), *cells])
        return buf.getvalue()


def parse_series(text: str, source: str = "<series>") -> AnnualSeries:
    """Parse CSV text with a header row; lines starting with '#' are comments.

    ``year`` is required; the other known columns are optional and an empty
    cell marks a missing value. Rows are sorted by year, so input order does
    not matter, but a repeated year is an error.
    """
    lines = [(n, line) for n, line in enumerate(text.splitlines(), start=1)
             if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise MalformedInputError(f"{source}: no header row")
    reader = csv.reader([line for _, line in lines])
    header = [h.strip() for h in next(reader)]
    header_line = lines[0][0]
    if "year" not in header:
        raise MalformedInputError(f"{source}:{header_line}: header has no 'year' column")
    unknown = [h for h in header if h not in SERIES_COLUMNS]
    if unknown:
        raise MalformedInputError(f"{source}:{header_line}: unknown column(s) {', '.join(unknown)}")
    if len(set(header)) != len(header):
        raise MalformedInputError(f"{source}:{header_line}: repeated column name in header")

    years: list[int] = []
    cols: dict[str, list[float]] = {h: [] for h in header if h != "year"}
    seen: dict[int, int] = {}
    problems: list[str] = []
    for (lineno, _), cells in zip(lines[1:], reader):
        if len(cells) != len(header):
            raise MalformedInputError(
                f"{source}:{lineno}: expected {len(header)} fields, found {len(cells)}")
        row = dict(zip(header, (c.strip() for c in cells)))
        try:
            year = int(row["year"])
        except ValueError:
            raise MalformedInputError(f"{source}:{lineno}: year {row['year']!r} is not an integer") from None
        if year in seen:
            raise SeriesError(f"{source}:{lineno}: duplicate year {year} (first on line {seen[year]})")
        seen[year] = lineno
        years.append(year)
        for name in cols:
            cell = row[name]
            if cell == "":
                cols[name].append(float("nan"))
                continue
            try:
                value = float(cell)
            except ValueError:
                raise MalformedInputError(f"{source}:{lineno}: {name} = {cell!r} is not a number") from None
            if not math.isfinite(value):
                raise MalformedInputError(f"{source}:{lineno}: {name} = {cell!r} is not finite")
            issue = _range_problem(name, value)
            if issue:
                problems.append(f"line {lineno} (year {year}): {issue}, got {value!r}")
            cols[name].append(value)
    if not years:
        raise MalformedInputError(f"{source}: header but no data rows")
    if problems:
        raise SeriesError(f"{source}: out-of-range values: " + "; ".join(problems))
    order = np.argsort(years, kind="stable")
    return AnnualSeries(
        years=np.asarray(years, dtype=int)[order],
        data={k: np.asarray(v, dtype=float)[order] for k, v in cols.items()},
        source=source,
    )


def ingest_series(path: str | Path) -> AnnualSeries:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedInputError(f"{path}: not valid UTF-8 ({exc})") from None
    return parse_series(text, source=str(path))


def synthetic_series() -> AnnualSeries:
    """Bundled synthetic 2001-2014 path; linear between assumed endpoints, not observed data."""
    text = resources.files("scalecon.data").joinpath(SYNTHETIC_RESOURCE).read_text(encoding="utf-8")
    return parse_series(text, source=f"<bundled {SYNTHETIC_RESOURCE}>")


def linear_series(first: int, last: int, **endpoints: tuple[float, float]) -> AnnualSeries:
    """Series with each named column linear between the given (first, last) values."""
    years = np.arange(first, last + 1)
    data = {}
    for name, (a, b) in endpoints.items():
        if name not in OPTIONAL_COLUMNS:
            raise ValueError(f"unknown series column {name!r}")
        data[name] = np.linspace(a, b, years.size)
    return AnnualSeries(years=years, data=data, source="<linear>")
