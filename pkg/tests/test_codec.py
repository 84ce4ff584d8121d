"""DCT-LSB codec: round trips, capacity, channel laws, path stability."""

import numpy as np
import pytest

from stegosim.errors import CapacityError, ValidationError
from stegosim.stegochannel import (
    GrayImage,
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
    synthetic_image,
    usable_positions,
)


def test_quant_matrix_quality_scaling():
    q50 = quant_matrix(50)
    assert q50[0, 0] == 16  # scale 100 reproduces the base table
    assert np.all(quant_matrix(100) == 1.0)
    assert np.all(quant_matrix(10) >= quant_matrix(50))
    with pytest.raises(ValidationError):
        quant_matrix(0)


def test_empty_payload_equals_requantization():
    img = synthetic_image(64, 64, seed=1)
    stego = embed(img, [], 75, 4, key=99)
    assert stego == recompress_channel(img, 75)


@pytest.mark.parametrize("Q", [65, 75, 85])
@pytest.mark.parametrize("q", [2, 4, 8])
def test_clean_round_trip_exact(Q, q):
    rng = np.random.default_rng(Q * 100 + q)
    for trial in range(5):
        img = synthetic_image(64, 64, rng=rng)
        cap = capacity_bits(img, Q, q)
        payload = rng.integers(0, 2, size=cap)
        key = int(rng.integers(2**32))
        stego = embed(img, payload, Q, q, key)
        assert ber(payload, extract(stego, cap, Q, q, key)) == 0.0


def test_capacity_error_reports_max():
    img = synthetic_image(64, 64, seed=5)
    q = 4
    usable = usable_positions(quantize_blocks(img, 75)).size
    cap = usable // q
    assert capacity_bits(img, 75, q) == cap
    with pytest.raises(CapacityError) as err:
        embed(img, np.zeros(cap + 1, dtype=int), 75, q, key=1)
    assert err.value.max_payload_bits == cap


def test_majority_vote():
    assert majority_vote([1, 1, 0]) == 1
    assert majority_vote([0, 0, 1]) == 0
    assert majority_vote([1, 0, 1, 0]) == 0  # even tie decodes to 0
    assert majority_vote([1, 1, 1, 0]) == 1


def test_ber_definition():
    assert ber([0, 1, 1], [0, 1, 1]) == 0.0
    assert ber([0, 1], [1, 0]) == 1.0
    sent = np.zeros(1000, dtype=int)
    recv = sent.copy()
    recv[:283] = 1
    assert ber(sent, recv) == 0.283
    with pytest.raises(ValidationError):
        ber([0, 1], [0])
    with pytest.raises(ValidationError):
        ber([], [])


def test_ber_symmetric_and_permutation_invariant():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 2, 500)
    b = rng.integers(0, 2, 500)
    assert ber(a, b) == ber(b, a)
    perm = rng.permutation(500)
    assert ber(a, b) == ber(a[perm], b[perm])


def test_keyed_permutation_is_frozen():
    # Pinned output guards path reproducibility across releases: stego
    # images embedded with one version must decode with another.
    assert keyed_permutation(8, 1234).tolist() == [7, 3, 0, 1, 4, 2, 5, 6]
    assert keyed_permutation(8, 1235).tolist() == [3, 6, 0, 4, 7, 1, 5, 2]
    p = keyed_permutation(5000, 42)
    assert sorted(p.tolist()) == list(range(5000))


def test_usable_census_stable_under_embedding():
    rng = np.random.default_rng(11)
    img = synthetic_image(64, 64, rng=rng)
    cap = capacity_bits(img, 75, 2)
    payload = rng.integers(0, 2, size=cap)
    stego = embed(img, payload, 75, 2, key=7)
    before = usable_positions(quantize_blocks(img, 75))
    after = usable_positions(quantize_blocks(stego, 75))
    assert np.array_equal(before, after)


def test_recompress_identity_at_q100():
    img = synthetic_image(64, 64, seed=2)
    once = recompress_channel(img, 100)
    twice = recompress_channel(once, 100)
    delta = np.abs(once.pixels.astype(int) - twice.pixels.astype(int))
    assert delta.max() <= 1


def test_recompress_idempotent_within_rounding():
    rng = np.random.default_rng(4)
    worst = 0
    for _ in range(20):
        img = synthetic_image(64, 64, rng=rng)
        once = recompress_channel(img, 75)
        twice = recompress_channel(once, 75)
        delta = np.abs(once.pixels.astype(int) - twice.pixels.astype(int))
        worst = max(worst, int(delta.max()))
    assert worst <= 1


def test_redundancy_reduces_channel_ber():
    rng = np.random.default_rng(21)
    images = [synthetic_image(128, 128, rng=rng) for _ in range(8)]
    means = []
    for q in (4, 12):
        bers = []
        for i, img in enumerate(images):
            payload = rng.integers(0, 2, size=100)
            bers.append(channel_ber(img, payload, 85, q, 75, key=50 + i))
        means.append(np.mean(bers))
    assert means[1] < means[0]


def test_overcompression_hurts():
    # Embedding above the channel's recompression quality loses bits;
    # embedding at the channel quality is nearly transparent.
    rng = np.random.default_rng(22)
    img = synthetic_image(128, 128, rng=rng)
    payload = rng.integers(0, 2, size=120)
    high = channel_ber(img, payload, 90, 8, 75, key=1)
    matched = channel_ber(img, payload, 75, 8, 75, key=1)
    assert high > matched


def test_gray_image_validation():
    with pytest.raises(ValidationError):
        GrayImage(np.zeros((10, 16), dtype=np.uint8))  # not multiple of 8
    with pytest.raises(ValidationError):
        GrayImage(np.full((16, 16), 300))
