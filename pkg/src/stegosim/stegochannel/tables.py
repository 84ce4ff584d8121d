"""Table-backed steganographic channel profiles.

The package ships reference measurements of a repetition-coded image stego
channel as a CSV resource: average bit error rate with and without bad-image
filtering, and embeddable data bits per image, on a grid of embedder quality
factors Q and redundancy factors q.  Lookups are exact; there is no
interpolation between grid points.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from importlib import resources

from ..errors import RangeError, ValidationError

Q_GRID = (65, 70, 75, 80, 85, 90)
Q_REDUNDANCY_GRID = (2, 4, 6, 8, 10, 12, 14, 16, 18, 20)

DEFAULT_CHANNEL_QUALITY = 75


@dataclass(frozen=True)
class ChannelProfile:
    """Per-image stego channel operating point.

    Q is the embedder JPEG quality factor, q the number of times each
    payload bit is repeated inside an image, Q_f the quality factor the
    hosting service recompresses uploads at.  ``capacity_bits`` is the
    number of data bits one image carries at this (Q, q);  ``ber`` the
    expected bit error rate after the recompression channel.
    """

    Q: int
    q: int
    Q_f: int
    capacity_bits: int
    ber: float
    bad_image_filtered: bool

    def __post_init__(self):
        if not 0 <= self.Q <= 100:
            raise ValidationError(f"Q must be in [0, 100], got {self.Q}")
        if self.q < 2 or self.q % 2:
            raise ValidationError(f"q must be a positive even integer, got {self.q}")
        if not 0 <= self.Q_f <= 100:
            raise ValidationError(f"Q_f must be in [0, 100], got {self.Q_f}")
        if self.capacity_bits <= 0:
            raise ValidationError("capacity_bits must be positive")
        if not 0.0 <= self.ber <= 0.5:
            raise ValidationError(f"ber must be in [0, 0.5], got {self.ber}")


def _resource_bytes() -> bytes:
    return resources.files("stegosim").joinpath("data/channel_tables.csv").read_bytes()


def table_checksum() -> str:
    """SHA-256 hex digest of the embedded table resource."""
    return hashlib.sha256(_resource_bytes()).hexdigest()


def _parse_tables():
    ber_raw: dict[tuple[int, int], float] = {}
    ber_filtered: dict[tuple[int, int], float] = {}
    capacity: dict[int, int] = {}
    text = _resource_bytes().decode("ascii").splitlines()
    reader = csv.reader(text)
    header = next(reader)
    qs = [int(h[1:]) for h in header[2:]]
    if tuple(qs) != Q_REDUNDANCY_GRID:
        raise ValidationError("embedded table header does not match the q grid")
    for row in reader:
        name = row[0]
        if name == "capacity_bits":
            for q, cell in zip(qs, row[2:]):
                capacity[q] = int(cell)
        else:
            target = ber_raw if name == "ber_raw" else ber_filtered
            big_q = int(row[1])
            for q, cell in zip(qs, row[2:]):
                target[(big_q, q)] = float(cell)
    return ber_raw, ber_filtered, capacity


_BER_RAW, _BER_FILTERED, _CAPACITY = _parse_tables()


def ber_table(filtered: bool) -> dict[tuple[int, int], float]:
    """The (Q, q) -> BER lookup, with or without bad-image filtering."""
    return dict(_BER_FILTERED if filtered else _BER_RAW)


def capacity_table() -> dict[int, int]:
    """The q -> data bits per image lookup."""
    return dict(_CAPACITY)


def profile_from_tables(
    Q: int,
    q: int,
    filtered: bool = False,
    Q_f: int = DEFAULT_CHANNEL_QUALITY,
) -> ChannelProfile:
    """Build a ChannelProfile from the embedded measurement tables.

    Raises RangeError for (Q, q) outside the measured grid; values are
    never interpolated.
    """
    if Q not in Q_GRID:
        raise RangeError(f"Q={Q} not in table grid {Q_GRID}")
    if q not in Q_REDUNDANCY_GRID:
        raise RangeError(f"q={q} not in table grid {Q_REDUNDANCY_GRID}")
    table = _BER_FILTERED if filtered else _BER_RAW
    return ChannelProfile(
        Q=Q,
        q=q,
        Q_f=Q_f,
        capacity_bits=_CAPACITY[q],
        ber=table[(Q, q)],
        bad_image_filtered=filtered,
    )


def best_Q_for_channel(q: int, filtered: bool = False) -> int:
    """The table Q minimizing BER at redundancy q; ties break toward smaller Q."""
    if q not in Q_REDUNDANCY_GRID:
        raise RangeError(f"q={q} not in table grid {Q_REDUNDANCY_GRID}")
    table = _BER_FILTERED if filtered else _BER_RAW
    return min(Q_GRID, key=lambda big_q: (table[(big_q, q)], big_q))
