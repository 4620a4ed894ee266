"""Numba kernels for the byte-renormalizing range coder and the bypass bits.

The coder keeps a 32-bit range with 16-bit probability precision and a
64-bit low accumulator with carry propagation through a pending-byte
cache.  Escaped symbols emit an order-0 exponential-Golomb magnitude plus
a sign bit into a separate bit section, read back in symbol order.

Kernel status codes: 0 ok, 1 payload truncated/corrupt, 2 bypass
truncated/corrupt.
"""

import numpy as np
from numba import njit

RC_TOP = 1 << 24
PROB_BITS = 16
PROB_TOTAL = 1 << PROB_BITS


@njit(cache=True)
def _put_bit(buf, pos, bit):
    if bit:
        buf[pos >> 3] |= np.uint8(128 >> (pos & 7))
    return pos + 1


@njit(cache=True)
def _get_bit(buf, pos):
    return (buf[pos >> 3] >> (7 - (pos & 7))) & 1


@njit(cache=True)
def _put_exp_golomb(buf, pos, value):
    n = value + 1
    nbits = 0
    t = n
    while t > 1:
        t >>= 1
        nbits += 1
    for _ in range(nbits):
        pos = _put_bit(buf, pos, 0)
    for i in range(nbits, -1, -1):
        pos = _put_bit(buf, pos, (n >> i) & 1)
    return pos


@njit(cache=True)
def exp_golomb_bits(value):
    n = value + 1
    nbits = 0
    t = n
    while t > 1:
        t >>= 1
        nbits += 1
    return 2 * nbits + 1


@njit(cache=True)
def encode_kernel(symbols, tids, cum_flat, starts, nbins, offsets, payload, bypass):
    """Range-code ``symbols`` against per-symbol tables; returns (payload_len, bypass_bits)."""
    low = np.int64(0)
    rng = np.int64(0xFFFFFFFF)
    cache = np.int64(0)
    cache_size = np.int64(1)
    pos = 0
    bitpos = 0
    for i in range(symbols.shape[0]):
        t = tids[i]
        s = symbols[i]
        nb = nbins[t]
        off = offsets[t]
        b = s - off
        if 0 <= b < nb - 1:
            bin_idx = b
        else:
            bin_idx = nb - 1
            hi = off + nb - 2
            if s > hi:
                bitpos = _put_exp_golomb(bypass, bitpos, s - hi - 1)
                bitpos = _put_bit(bypass, bitpos, 0)
            else:
                bitpos = _put_exp_golomb(bypass, bitpos, off - 1 - s)
                bitpos = _put_bit(bypass, bitpos, 1)
        st = starts[t]
        clo = np.int64(cum_flat[st + bin_idx])
        chi = np.int64(cum_flat[st + bin_idx + 1])
        r = rng >> PROB_BITS
        low += r * clo
        rng = r * (chi - clo)
        while rng < RC_TOP:
            if low < 0xFF000000 or low > 0xFFFFFFFF:
                carry = low >> 32
                payload[pos] = (cache + carry) & 0xFF
                pos += 1
                for _ in range(cache_size - 1):
                    payload[pos] = (0xFF + carry) & 0xFF
                    pos += 1
                cache = (low >> 24) & 0xFF
                cache_size = 0
            cache_size += 1
            low = (low & 0x00FFFFFF) << 8
            rng <<= 8
    for _ in range(5):
        if low < 0xFF000000 or low > 0xFFFFFFFF:
            carry = low >> 32
            payload[pos] = (cache + carry) & 0xFF
            pos += 1
            for _ in range(cache_size - 1):
                payload[pos] = (0xFF + carry) & 0xFF
                pos += 1
            cache = (low >> 24) & 0xFF
            cache_size = 0
        cache_size += 1
        low = (low & 0x00FFFFFF) << 8
    return pos, bitpos


@njit(cache=True)
def decode_kernel(payload, bypass, tids, cum_flat, starts, nbins, offsets, out):
    """Inverse of ``encode_kernel``; fills ``out`` and returns a status code."""
    plen = payload.shape[0]
    if plen < 5 or payload[0] != 0:
        return 1
    code = np.int64(0)
    for j in range(1, 5):
        code = (code << 8) | np.int64(payload[j])
    ptr = 5
    rng = np.int64(0xFFFFFFFF)
    bitpos = 0
    bitlen = bypass.shape[0] * 8
    for i in range(out.shape[0]):
        t = tids[i]
        st = starts[t]
        nb = nbins[t]
        r = rng >> PROB_BITS
        val = code // r
        if val > 0xFFFF:
            val = np.int64(0xFFFF)
        lo_i = 0
        hi_i = nb
        while hi_i - lo_i > 1:
            mid = (lo_i + hi_i) >> 1
            if np.int64(cum_flat[st + mid]) <= val:
                lo_i = mid
            else:
                hi_i = mid
        bin_idx = lo_i
        clo = np.int64(cum_flat[st + bin_idx])
        chi = np.int64(cum_flat[st + bin_idx + 1])
        code -= r * clo
        rng = r * (chi - clo)
        while rng < RC_TOP:
            if ptr >= plen:
                return 1
            code = (code << 8) | np.int64(payload[ptr])
            ptr += 1
            rng <<= 8
        if bin_idx == nb - 1:
            nz = 0
            while True:
                if bitpos >= bitlen:
                    return 2
                bit = _get_bit(bypass, bitpos)
                bitpos += 1
                if bit:
                    break
                nz += 1
            v = np.int64(1)
            for _ in range(nz):
                if bitpos >= bitlen:
                    return 2
                v = (v << 1) | _get_bit(bypass, bitpos)
                bitpos += 1
            if bitpos >= bitlen:
                return 2
            side = _get_bit(bypass, bitpos)
            bitpos += 1
            excess = v - 1
            if side == 0:
                out[i] = offsets[t] + nb - 1 + excess
            else:
                out[i] = offsets[t] - 1 - excess
        else:
            out[i] = offsets[t] + bin_idx
    return 0
