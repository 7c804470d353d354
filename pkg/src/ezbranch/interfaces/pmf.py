import pathlib

from ezbranch.distributions import OffspringDistribution, PairedOffspring, from_pmf, paired_from_pmf
from ezbranch.errors import PmfFormatError


def _data_lines(text: str, width: int):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != width:
            raise PmfFormatError(
                f"Line {lineno}: expected {width} fields, got {len(fields)}: {raw!r}."
            )
        try:
            *ints, p = fields
            yield [int(v) for v in ints], float(p)
        except ValueError as e:
            raise PmfFormatError(f"Line {lineno}: cannot parse {raw!r}.") from e


def decode_pmf(text: str) -> OffspringDistribution:
    r"""Parse a pmf text table into an offspring distribution.

    One ``k p_k`` pair per line, values in any order; ``#`` starts a comment.
    Validation follows ``from_pmf``.

    Parameters
    ----------
    text : str
        Content of the pmf file.

    Returns
    -------
    OffspringDistribution
    """
    return from_pmf([(k, p) for (k,), p in _data_lines(text, 2)])


def encode_pmf(d: OffspringDistribution) -> str:
    r"""Serialize a distribution to the pmf text format, one atom per line."""

    return "".join(f"{k} {p!r}\n" for k, p in d.table().items())


def decode_paired_pmf(text: str) -> PairedOffspring:
    r"""Parse a joint law, one ``x x' p`` triple per line.

    Validation follows ``paired_from_pmf``.
    """
    return paired_from_pmf([((x, y), p) for (x, y), p in _data_lines(text, 3)])


def encode_paired_pmf(law: PairedOffspring) -> str:
    return "".join(f"{x} {y} {p!r}\n" for (x, y), p in law.table().items())


def read_pmf(path: str | pathlib.Path) -> OffspringDistribution:
    return decode_pmf(pathlib.Path(path).read_text())


def write_pmf(d: OffspringDistribution, path: str | pathlib.Path) -> None:
    pathlib.Path(path).write_text(encode_pmf(d))


def read_paired_pmf(path: str | pathlib.Path) -> PairedOffspring:
    return decode_paired_pmf(pathlib.Path(path).read_text())
