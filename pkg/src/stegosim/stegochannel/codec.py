"""Executable DCT-LSB stego codec with repetition coding.

The codec embeds payload bits into the least significant bits of quantized
block-DCT AC coefficients, each bit repeated q times along a keyed
pseudo-random path, and models the hosting service's recompression as a
quantize/dequantize round trip at quality Q_f.  It exists to verify the
qualitative laws of the channel (clean round trip, redundancy monotonicity,
embed-quality vs channel-quality interaction), not to reproduce the shipped
tables' absolute numbers.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as spfft

from ..errors import CapacityError, ValidationError
from .image import GrayImage

# Standard luminance quantization base table.
BASE_QUANT = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


def quant_matrix(quality: int) -> np.ndarray:
    """Quality-scaled luminance quantizer (IJG convention)."""
    if not 1 <= quality <= 100:
        raise ValidationError(f"quality factor must be in [1, 100], got {quality}")
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    return np.clip(np.floor((BASE_QUANT * scale + 50.0) / 100.0), 1.0, 255.0)


def _to_blocks(pixels: np.ndarray) -> np.ndarray:
    h, w = pixels.shape
    return pixels.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)


def _from_blocks(blocks: np.ndarray) -> np.ndarray:
    nby, nbx = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(nby * 8, nbx * 8)


def quantize_blocks(image: GrayImage, quality: int) -> np.ndarray:
    """Quantized DCT coefficients, shape (H/8, W/8, 8, 8), integer valued."""
    blocks = _to_blocks(image.pixels.astype(np.float64) - 128.0)
    coeffs = spfft.dctn(blocks, axes=(-2, -1), norm="ortho")
    return np.rint(coeffs / quant_matrix(quality)).astype(np.int32)


def reconstruct(coeffs: np.ndarray, quality: int) -> GrayImage:
    """Spatial image from quantized coefficient blocks."""
    blocks = spfft.idctn(coeffs * quant_matrix(quality), axes=(-2, -1), norm="ortho")
    pixels = np.clip(np.rint(_from_blocks(blocks)) + 128.0, 0.0, 255.0)
    return GrayImage(pixels.astype(np.uint8))


def recompress_channel(image: GrayImage, Q_f: int) -> GrayImage:
    """Model host-side recompression: DCT-quantize-dequantize at quality Q_f."""
    return reconstruct(quantize_blocks(image, Q_f), Q_f)


def usable_positions(coeffs: np.ndarray) -> np.ndarray:
    """Flat indices (canonical order) of AC coefficients outside {0, +1, -1}.

    The set is invariant under LSB embedding: magnitudes >= 2 stay >= 2.
    """
    ac_mask = np.ones((8, 8), dtype=bool)
    ac_mask[0, 0] = False
    usable = (np.abs(coeffs) >= 2) & np.broadcast_to(ac_mask, coeffs.shape)
    return np.flatnonzero(usable)


def capacity_bits(image: GrayImage, Q: int, q: int) -> int:
    """Payload bits the codec can embed in this image at (Q, q)."""
    return int(usable_positions(quantize_blocks(image, Q)).size) // q


def keyed_permutation(n: int, key: int) -> np.ndarray:
    """Deterministic permutation of range(n) from a keyed counter-based stream.

    Positions are ordered by the first n outputs of the Philox-4x64-10
    keystream for ``key``; the raw keystream is stable across library
    versions, so stego images are reproducible.
    """
    words = np.array(
        [key & 0xFFFFFFFFFFFFFFFF, (key >> 64) & 0xFFFFFFFFFFFFFFFF],
        dtype=np.uint64,
    )
    stream = np.random.Philox(key=words).random_raw(n)
    return np.argsort(stream, kind="stable")


def _check_capacity(n_usable: int, payload_len: int, q: int) -> None:
    if q < 1:
        raise ValidationError(f"q must be >= 1, got {q}")
    if payload_len * q > n_usable:
        raise CapacityError(
            f"payload of {payload_len} bits needs {payload_len * q} usable "
            f"coefficients, image has {n_usable}",
            max_payload_bits=n_usable // q,
        )


def embed(image: GrayImage, payload, Q: int, q: int, key: int) -> GrayImage:
    """Embed payload bits, each repeated q times, at embed quality Q.

    Each chosen coefficient's magnitude parity is forced to the payload bit;
    sign is preserved and usable coefficients stay usable, so the extractor
    can re-derive the same path from the stego image alone.
    """
    payload = np.asarray(payload, dtype=np.int64)
    if payload.size and not np.all((payload == 0) | (payload == 1)):
        raise ValidationError("payload must consist of 0/1 bits")
    coeffs = quantize_blocks(image, Q)
    positions = usable_positions(coeffs)
    _check_capacity(positions.size, payload.size, q)
    if payload.size:
        path = positions[keyed_permutation(positions.size, key)]
        targets = path[: payload.size * q]
        bits = np.repeat(payload, q)
        flat = coeffs.reshape(-1)
        vals = flat[targets]
        mags = np.abs(vals)
        new_mags = (mags & ~1) | bits
        flat[targets] = np.sign(vals) * new_mags
    return reconstruct(coeffs, Q)


def majority_vote(bits) -> int:
    """Majority of a 0/1 sequence; exact ties decode to 0."""
    bits = np.asarray(bits)
    return int(np.count_nonzero(bits) * 2 > bits.size)


def extract(image: GrayImage, payload_len: int, Q: int, q: int, key: int,
            positions: np.ndarray | None = None) -> np.ndarray:
    """Decode payload_len bits by majority vote over q repetitions per bit.

    By default the usable-coefficient census is recomputed from the given
    image, which recovers the embedder's path exactly on a clean channel.
    Noisy-channel experiments may pass the embed-side census explicitly to
    keep the path synchronized (path robustness under recompression is the
    job of heavier embedding schemes and out of the codec's scope).
    """
    coeffs = quantize_blocks(image, Q)
    if positions is None:
        positions = usable_positions(coeffs)
    _check_capacity(positions.size, payload_len, q)
    if payload_len == 0:
        return np.zeros(0, dtype=np.int64)
    path = positions[keyed_permutation(positions.size, key)]
    targets = path[: payload_len * q]
    parities = (np.abs(coeffs.reshape(-1)[targets]) & 1).reshape(payload_len, q)
    votes = parities.sum(axis=1)
    return (votes * 2 > q).astype(np.int64)


def ber(sent, received) -> float:
    """Bit error rate: Hamming distance over sequence length."""
    sent = np.asarray(sent)
    received = np.asarray(received)
    if sent.shape != received.shape:
        raise ValidationError(
            f"sequence lengths differ: {sent.shape} vs {received.shape}"
        )
    if sent.size == 0:
        raise ValidationError("BER is undefined for empty sequences")
    return float(np.count_nonzero(sent != received)) / sent.size


def channel_ber(image: GrayImage, payload, Q: int, q: int, Q_f: int, key: int) -> float:
    """Measured BER of embed -> recompress at Q_f -> extract for one image.

    Uses the embed-side census for path synchronization (see ``extract``).
    """
    payload = np.asarray(payload, dtype=np.int64)
    stego = embed(image, payload, Q, q, key)
    received = recompress_channel(stego, Q_f)
    sync = usable_positions(quantize_blocks(stego, Q))
    decoded = extract(received, payload.size, Q, q, key, positions=sync)
    return ber(payload, decoded)
