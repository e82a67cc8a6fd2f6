import math

import numpy as np
import pytest

from scalecon.errors import MalformedInputError, SeriesError
from scalecon.series import SERIES_COLUMNS, ingest_series, linear_series, parse_series, synthetic_series

HEADER = "year,nu,mu,n_over_l,overhead_share\n"


def _rows(n=14):
    out = []
    for k in range(n):
        f = k / max(n - 1, 1)
        out.append(f"{2001 + k},{0.99 + 0.06 * f},{1.21 + 0.07 * f},{0.126 + 0.044 * f},{0.08 + 0.08 * f}\n")
    return out


def test_well_formed_file(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text(HEADER + "".join(_rows()), encoding="utf-8")
    s = ingest_series(path)
    assert len(s) == 14
    assert s.years.dtype.kind == "i"
    assert s.has("nu") and not s.has("tfp_data_index")
    assert s.value("mu", 2014) == pytest.approx(1.28)
    with pytest.raises(SeriesError, match="tfp_data_index"):
        s.require(["nu", "tfp_data_index"])


def test_duplicate_year_names_the_year():
    rows = _rows(3)
    with pytest.raises(SeriesError, match="duplicate year 2002"):
        parse_series(HEADER + rows[0] + rows[1] + rows[1].replace("0.99", "1.0"))


def test_markup_below_one_is_a_range_error():
    text = HEADER + "2001,1.0,0.9,0.1,0.1\n2002,1.0,1.2,0.1,1.5\n"
    with pytest.raises(SeriesError) as info:
        parse_series(text)
    msg = str(info.value)
    assert "year 2001" in msg and "year 2002" in msg  # every offender listed


@pytest.mark.parametrize("bad,line", [
    ("2001,1.0,1.2\n", 3),
    ("200x,1.0,1.2,0.1,0.1\n", 3),
    ("2001,1.0,abc,0.1,0.1\n", 3),
])
def test_malformed_rows_report_line_numbers(bad, line):
    text = HEADER + _rows(1)[0].replace("2001", "2000") + bad
    with pytest.raises(MalformedInputError, match=f":{line}:"):
        parse_series(text)


def test_header_problems():
    with pytest.raises(MalformedInputError):
        parse_series("nu,mu\n1.0,1.2\n")
    with pytest.raises(MalformedInputError, match="unknown column"):
        parse_series("year,nu,gdp\n2001,1.0,3\n")
    with pytest.raises(MalformedInputError):
        parse_series("# only a comment\n")
    with pytest.raises(MalformedInputError):
        parse_series("year,nu\n")


def test_missing_cells_and_order():
    s = parse_series("year,nu,mu\n2003,1.0,\n2001,1.01,1.2\n")
    assert list(s.years) == [2001, 2003]
    assert math.isnan(s.value("mu", 2003))


def test_synthetic_series_is_labelled_and_linear():
    s = synthetic_series()
    assert list(s.years) == list(range(2001, 2015))
    assert (s.column("nu")[0], s.column("nu")[-1]) == (0.99, 1.05)
    assert (s.column("mu")[0], s.column("mu")[-1]) == (1.21, 1.28)
    np.testing.assert_allclose(np.diff(s.column("nu"), 2), 0.0, atol=1e-9)
    assert "synthetic" in s.source


def test_round_trip_and_linear_builder():
    s = linear_series(2001, 2005, nu=(1.0, 1.04), mu=(1.2, 1.3))
    back = parse_series(s.to_csv())
    np.testing.assert_array_equal(back.column("nu"), s.column("nu"))
    assert back.to_csv().splitlines()[0].split(",")[0] == SERIES_COLUMNS[0]
    with pytest.raises(ValueError):
        linear_series(2001, 2002, gdp=(1, 2))
