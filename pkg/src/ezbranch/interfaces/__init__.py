from .pmf import (
    decode_paired_pmf,
    decode_pmf,
    encode_paired_pmf,
    encode_pmf,
    read_paired_pmf,
    read_pmf,
    write_pmf,
)
from .table import (
    BATCH_HEADER,
    CHAIN_HEADER,
    KS_HEADER,
    SPEED_HEADER,
    TH1_HEADER,
    TH2_HEADER,
    TRAJECTORY_HEADER,
    decode_csv,
    encode_csv,
    encode_json,
    encode_trajectory,
    format_value,
)

__all__ = [
    "BATCH_HEADER",
    "CHAIN_HEADER",
    "KS_HEADER",
    "SPEED_HEADER",
    "TH1_HEADER",
    "TH2_HEADER",
    "TRAJECTORY_HEADER",
    "decode_csv",
    "decode_paired_pmf",
    "decode_pmf",
    "encode_csv",
    "encode_json",
    "encode_paired_pmf",
    "encode_pmf",
    "encode_trajectory",
    "format_value",
    "read_paired_pmf",
    "read_pmf",
    "write_pmf",
]
