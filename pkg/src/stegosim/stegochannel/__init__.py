"""Per-image steganographic channel: measured tables and executable codec."""

from .codec import (
    ber,
    capacity_bits,
    channel_ber,
    embed,
    extract,
    keyed_permutation,
    majority_vote,
    quant_matrix,
    quantize_blocks,
    recompress_channel,
    reconstruct,
    usable_positions,
)
from .image import GrayImage, read_pgm, synthetic_image, write_pgm
from .selfcorr import DEFAULT_BAD_THRESHOLD, SelfCorrScore, mean_filter, self_corr
from .tables import (
    DEFAULT_CHANNEL_QUALITY,
    ChannelProfile,
    Q_GRID,
    Q_REDUNDANCY_GRID,
    ber_table,
    best_Q_for_channel,
    capacity_table,
    profile_from_tables,
    table_checksum,
)

__all__ = [
    "ChannelProfile",
    "DEFAULT_BAD_THRESHOLD",
    "DEFAULT_CHANNEL_QUALITY",
    "GrayImage",
    "Q_GRID",
    "Q_REDUNDANCY_GRID",
    "SelfCorrScore",
    "ber",
    "ber_table",
    "best_Q_for_channel",
    "capacity_bits",
    "capacity_table",
    "channel_ber",
    "embed",
    "extract",
    "keyed_permutation",
    "majority_vote",
    "mean_filter",
    "profile_from_tables",
    "quant_matrix",
    "quantize_blocks",
    "read_pgm",
    "recompress_channel",
    "reconstruct",
    "self_corr",
    "synthetic_image",
    "table_checksum",
    "usable_positions",
    "write_pgm",
]
