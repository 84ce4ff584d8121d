"""Table-backed channel profile lookups."""

import pytest

from stegosim.errors import RangeError, ValidationError
from stegosim.stegochannel import (
    ChannelProfile,
    Q_GRID,
    Q_REDUNDANCY_GRID,
    ber_table,
    best_Q_for_channel,
    capacity_table,
    profile_from_tables,
    table_checksum,
)

# Frozen digest of the embedded CSV resource; the fidelity suite depends on
# these constants never drifting.
TABLE_SHA256 = "4ebd0e7686683defb09da06b31e0463f67346f2bbd43ef7e1548494d6397bb7c"


def test_resource_checksum():
    assert table_checksum() == TABLE_SHA256


def test_profile_example_75_8():
    p = profile_from_tables(75, 8, filtered=False)
    assert p.capacity_bits == 10070
    assert p.ber == 0.0283


def test_profile_example_filtered_75_12():
    assert profile_from_tables(75, 12, filtered=True).ber == 0.0001


def test_profile_example_90_20():
    assert profile_from_tables(90, 20, filtered=False).ber == 0.1262


def test_tables_full_grid():
    raw = ber_table(filtered=False)
    filt = ber_table(filtered=True)
    caps = capacity_table()
    assert len(raw) == 60 and len(filt) == 60 and len(caps) == 10
    for Q in Q_GRID:
        for q in Q_REDUNDANCY_GRID:
            p = profile_from_tables(Q, q, filtered=False)
            assert p.ber == raw[(Q, q)]
            assert p.capacity_bits == caps[q]
            assert profile_from_tables(Q, q, filtered=True).ber == filt[(Q, q)]


def test_out_of_grid_is_range_error():
    with pytest.raises(RangeError):
        profile_from_tables(72, 8)
    with pytest.raises(RangeError):
        profile_from_tables(75, 7)
    with pytest.raises(RangeError):
        best_Q_for_channel(3)


def test_best_q_examples():
    assert best_Q_for_channel(2, filtered=False) == 70
    assert best_Q_for_channel(20, filtered=False) == 75  # 75/80 tie -> smaller
    assert best_Q_for_channel(8, filtered=True) == 65


def test_capacity_strictly_decreasing_in_q():
    caps = capacity_table()
    values = [caps[q] for q in Q_REDUNDANCY_GRID]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_capacity_law_floor_80560_except_q12():
    # One table column deviates from floor(80560 / q); it is shipped
    # verbatim and excluded here.
    caps = capacity_table()
    for q in Q_REDUNDANCY_GRID:
        if q == 12:
            assert caps[q] == 6173
            continue
        assert caps[q] == 80560 // q


def test_profile_validation():
    with pytest.raises(ValidationError):
        ChannelProfile(Q=75, q=8, Q_f=75, capacity_bits=100, ber=0.9,
                       bad_image_filtered=False)
    with pytest.raises(ValidationError):
        ChannelProfile(Q=75, q=3, Q_f=75, capacity_bits=100, ber=0.1,
                       bad_image_filtered=False)
