import json
import math

import numpy as np
import pytest

from ezbranch.errors import NotNormalized, OutOfRange, PmfFormatError
from ezbranch.interfaces import (
    BATCH_HEADER,
    decode_csv,
    decode_paired_pmf,
    decode_pmf,
    encode_csv,
    encode_json,
    encode_paired_pmf,
    encode_pmf,
    encode_trajectory,
    format_value,
    read_paired_pmf,
    read_pmf,
    write_pmf,
)

TWO_POINT_TEXT = """\
# two-point law
2 0.6

0 0.4   # extinction mass
"""


def test_decode_pmf_ignores_comments_and_order():
    d = decode_pmf(TWO_POINT_TEXT)
    assert d.table() == pytest.approx({0: 0.4, 2: 0.6})


def test_pmf_text_is_stable(two_point):
    text = encode_pmf(two_point)
    assert text == "0 0.4\n2 0.6\n"
    assert encode_pmf(decode_pmf(text)) == text


@pytest.mark.parametrize(
    "text, error",
    [
        ("0 0.4 1\n2 0.6\n", PmfFormatError),
        ("zero 0.4\n2 0.6\n", PmfFormatError),
        ("0 0.4\n2 0.5\n", NotNormalized),
        ("0 0.4\n0 0.6\n", PmfFormatError),
    ],
)
def test_decode_pmf_errors(text, error):
    with pytest.raises(error):
        decode_pmf(text)


def test_pmf_files(tmp_path, two_point):
    path = tmp_path / "two_point.pmf"
    write_pmf(two_point, path)
    assert read_pmf(path).table() == two_point.table()


def test_paired_pmf(tmp_path):
    text = "# x x' p\n0 1 0.4\n2 0 0.6\n"
    law = decode_paired_pmf(text)
    assert law.table() == pytest.approx({(0, 1): 0.4, (2, 0): 0.6})
    assert law.marginal_x.table() == pytest.approx({0: 0.4, 2: 0.6})
    assert encode_paired_pmf(law) == "0 1 0.4\n2 0 0.6\n"

    path = tmp_path / "pair.pmf"
    path.write_text("0 0 1.0\n")
    with pytest.raises(OutOfRange):
        read_paired_pmf(path)


def test_format_value():
    assert format_value(1.0 / 3.0) == "0.333333333"
    assert format_value(6.25) == "6.25"
    assert format_value(125.09090909090909) == "125.090909"
    assert format_value(math.inf) == "inf"
    assert format_value(None) == ""
    assert format_value(True) == "1"
    assert format_value(np.int64(7)) == "7"


def test_csv_round_trip():
    text = encode_csv(
        BATCH_HEADER,
        [[2, 100, 6.1, 0.95, 5.2, 0.9, 5.0, 0.8, 0.17], [3, 100, math.pi, None, 1.0, 2.0, 3.0, 4.0, 0.5]],
    )
    assert text.splitlines()[0] == "n,runs,mean_u,ci_u,mean_v,ci_v,mean_t,ci_t,p_hat"
    assert "3.14159265" in text
    header, rows = decode_csv(text)
    assert tuple(header) == BATCH_HEADER
    assert encode_csv(header, rows) == text


def test_json_rounding():
    text = encode_json({"q": 1.0 / 9.0, "ci": math.inf, "values": [1.0 / 3.0, 2], "ok": True})
    obj = json.loads(text)
    assert obj == {"q": 0.111111111, "ci": None, "values": [0.333333333, 2], "ok": True}
    assert list(obj) == ["q", "ci", "values", "ok"]


def test_trajectory_dump():
    text = encode_trajectory(np.asarray([0, 1, 1]), np.asarray([3, 2, 0]))
    assert text == "k,max_y,frontier_count\n0,0,3\n1,1,2\n2,1,0\n"
