import csv
import io
import json
import math
from collections.abc import Iterable, Sequence
from typing import Any

SIGNIFICANT_DIGITS = 9

BATCH_HEADER = ("n", "runs", "mean_u", "ci_u", "mean_v", "ci_v", "mean_t", "ci_t", "p_hat")
KS_HEADER = ("n", "runs", "ks_d", "ks_p")
CHAIN_HEADER = (
    "n",
    "q",
    "q_n",
    "expected_u",
    "expected_v",
    "ratio_mean",
    "ratio_qn",
    "ks_to_exp",
    "ks_uncertainty",
)
SPEED_HEADER = ("n", "k", "v_hat", "v_err", "bracket_low", "bracket_high")
TRAJECTORY_HEADER = ("k", "max_y", "frontier_count")
TH1_HEADER = ("n", "q_pow_n", "ratio_mean", "ratio_qn", "ks_to_exp")
TH2_HEADER = ("n", "one_minus_v", "ratio", "bracket_low", "bracket_high", "v_err")


def format_value(x: Any) -> str:
    r"""Render one CSV cell; floats use 9 significant digits, ``None`` is empty."""

    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.{SIGNIFICANT_DIGITS}g}"
    return str(x)


def encode_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    r"""Serialize a table to CSV text with ``\n`` line endings.

    Cells that are already strings pass through unchanged, so decoding and
    re-encoding a table reproduces it byte for byte.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(x) for x in row])
    return buf.getvalue()


def decode_csv(text: str) -> tuple[list[str], list[list[str]]]:
    r"""Parse CSV text produced by ``encode_csv`` into header and string rows."""

    header, *rows = list(csv.reader(io.StringIO(text)))
    return header, rows


def _round(x: Any) -> Any:
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, list | tuple):
        return [_round(v) for v in x]
    return x


def encode_json(obj: Any) -> str:
    r"""Serialize to JSON with floats rounded to 9 significant digits.

    Non-finite floats become ``null``. Keys keep their insertion order.
    """
    return json.dumps(_round(obj), indent=2, allow_nan=False) + "\n"


def encode_trajectory(max_y, frontier) -> str:
    r"""Trajectory dump ``k,max_y,frontier_count`` of a selection run."""

    return encode_csv(
        TRAJECTORY_HEADER,
        ((k, int(m), int(f)) for k, (m, f) in enumerate(zip(max_y, frontier))),
    )
