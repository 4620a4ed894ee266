"""Precomputed CDF tables and lossless range coding of integer residuals.

A coding grid samples the shape linearly and the scale log-linearly, holds
one 16-bit cumulative-frequency table per sample pair, and is shared
verbatim between encoder and decoder.  Per-symbol model parameters are
quantized to the nearest grid sample; symbols outside a table's support go
through a reserved escape slot plus an exponential-Golomb bypass code.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sp

from . import _coder
from .bounds import BoundTable
from .errors import CorruptionError, DomainError
from .model import BETA_MAX, BETA_MIN, GgmParams, _std_interval_vec

PROB_TOTAL = _coder.PROB_TOTAL
MAX_TABLE_BINS = 256  # includes the escape slot
TABLE_TAIL = 2.0**-17

DEFAULT_BETA_RANGE = (0.5, 3.0)
DEFAULT_ALPHA_RANGE = (0.01, 60.0)
GM_ALPHA_RANGE = (0.11, 60.0)

_GRID_MAGIC = b"GGLT"
_BITS_MAGIC = b"GGM1"
_FORMAT_VERSION = 1

_BITS_HEADER = struct.Struct("<4sBQLQQL")  # magic, version, count, grid_crc,
# payload bytes, bypass bits, section crc


@dataclass(frozen=True)
class CdfTable:
    """Cumulative counts of one quantized PMF; the last bin is the escape slot."""

    offset: int  # symbol coded by the first bin
    cum: np.ndarray  # uint32, length nbins + 1, cum[0] = 0, cum[-1] = 65536

    def __post_init__(self):
        cum = np.asarray(self.cum, dtype=np.uint32)
        if cum.ndim != 1 or cum.size < 3:
            raise DomainError("cum must be 1-d with at least two bins")
        if cum[0] != 0 or cum[-1] != PROB_TOTAL:
            raise DomainError("cum must run from 0 to 65536")
        if not np.all(np.diff(cum.astype(np.int64)) > 0):
            raise DomainError("cum must be strictly increasing")
        if cum.size - 1 > MAX_TABLE_BINS:
            raise DomainError(f"table exceeds {MAX_TABLE_BINS} bins")
        object.__setattr__(self, "cum", cum)

    @property
    def nbins(self) -> int:
        return self.cum.size - 1

    @property
    def support_lo(self) -> int:
        return self.offset

    @property
    def support_hi(self) -> int:
        return self.offset + self.nbins - 2


def _quantize_pmf(probs: np.ndarray) -> np.ndarray:
    """Scale a PMF to integer counts summing to 65536, each bin at least 1.

    Floor-then-largest-remainder keeps the rounding deterministic; ties
    between equal remainders go to the lower bin index.
    """
    raw = probs * float(PROB_TOTAL)
    counts = np.floor(raw).astype(np.int64)
    remainders = raw - counts
    counts = np.maximum(counts, 1)
    need = PROB_TOTAL - int(counts.sum())
    if need > 0:
        order = np.lexsort((np.arange(counts.size), -remainders))
        i = 0
        while need > 0:
            counts[order[i % counts.size]] += 1
            need -= 1
            i += 1
    elif need < 0:
        order = np.lexsort((np.arange(counts.size), -counts))
        i = 0
        while need < 0:
            j = order[i % counts.size]
            if counts[j] > 1:
                counts[j] -= 1
                need += 1
            i += 1
    return counts


def build_cdf_table(beta: float, alpha: float) -> CdfTable:
    """Quantize the zero-centered PMF of one (shape, scale) pair into counts.

    The symmetric support grows until the residual tail drops below 2^-17
    or the table hits its size cap; whatever mass is left outside feeds
    the escape slot.
    """
    r = 1.0 / beta
    zstar = float(_sp.gammainccinv(r, TABLE_TAIL))
    radius = math.ceil(alpha * zstar ** (1.0 / beta) - 0.5)
    radius = int(min(max(radius, 0), (MAX_TABLE_BINS - 2) // 2))
    ks = np.arange(-radius, radius + 1, dtype=np.float64)
    probs = _std_interval_vec(beta, (ks - 0.5) / alpha, (ks + 0.5) / alpha)
    with np.errstate(over="ignore"):
        tail = float(_sp.gammaincc(r, ((radius + 0.5) / alpha) ** beta))
    counts = _quantize_pmf(np.append(probs, max(tail, 0.0)))
    cum = np.zeros(counts.size + 1, dtype=np.uint32)
    cum[1:] = np.cumsum(counts)
    return CdfTable(offset=-radius, cum=cum)


def sample_alpha_log(count: int, lo: float, hi: float) -> np.ndarray:
    """``count`` log-linearly spaced scale samples with exact endpoints."""
    if count < 2:
        raise DomainError(f"need at least 2 scale samples, got {count!r}")
    if not 0.0 < lo < hi:
        raise DomainError(f"need 0 < lo < hi, got lo={lo!r}, hi={hi!r}")
    step = (math.log(hi) - math.log(lo)) / (count - 1)
    vals = np.exp(math.log(lo) + step * np.arange(count))
    vals[0] = lo
    vals[-1] = hi
    return vals


@dataclass(eq=False)
class LutGrid:
    """All CDF tables of one (shape, scale) sample lattice, row-major by shape."""

    beta_samples: np.ndarray
    alpha_samples: np.ndarray
    beta_range: tuple[float, float]
    alpha_range: tuple[float, float]
    tables: list[CdfTable]
    _packed: tuple | None = field(default=None, repr=False, compare=False)
    _blob: bytes | None = field(default=None, repr=False, compare=False)

    @property
    def n_beta(self) -> int:
        return self.beta_samples.size

    @property
    def n_alpha(self) -> int:
        return self.alpha_samples.size

    def table_at(self, beta_index: int, alpha_index: int) -> CdfTable:
        return self.tables[beta_index * self.n_alpha + alpha_index]

    def packed(self):
        """Flat (cum, starts, nbins, offsets) arrays for the coding kernels."""
        if self._packed is None:
            sizes = np.array([t.cum.size for t in self.tables], dtype=np.int64)
            starts = np.zeros(sizes.size, dtype=np.int64)
            starts[1:] = np.cumsum(sizes)[:-1]
            cum_flat = np.concatenate([t.cum for t in self.tables]).astype(np.uint32)
            nbins = np.array([t.nbins for t in self.tables], dtype=np.int64)
            offsets = np.array([t.offset for t in self.tables], dtype=np.int64)
            self._packed = (cum_flat, starts, nbins, offsets)
        return self._packed

    def to_bytes(self) -> bytes:
        """Little-endian serialization, bit-exact across platforms."""
        if self._blob is None:
            parts = [
                _GRID_MAGIC,
                struct.pack(
                    "<BHHdddd",
                    _FORMAT_VERSION,
                    self.n_beta,
                    self.n_alpha,
                    self.beta_range[0],
                    self.beta_range[1],
                    self.alpha_range[0],
                    self.alpha_range[1],
                ),
            ]
            for t in self.tables:
                parts.append(struct.pack("<hH", t.offset, t.nbins))
                # interior boundaries plus the final 65536 stored modulo 2^16
                parts.append(
                    (t.cum[1:] & np.uint32(0xFFFF)).astype("<u2").tobytes()
                )
            self._blob = b"".join(parts)
        return self._blob

    @property
    def fingerprint(self) -> int:
        return zlib.crc32(self.to_bytes())

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LutGrid":
        if blob[:4] != _GRID_MAGIC:
            raise CorruptionError("bad grid magic")
        try:
            version, n_beta, n_alpha, b_lo, b_hi, a_lo, a_hi = struct.unpack_from(
                "<BHHdddd", blob, 4
            )
            if version != _FORMAT_VERSION:
                raise CorruptionError(f"unsupported grid version {version}")
            pos = 4 + struct.calcsize("<BHHdddd")
            tables = []
            for _ in range(n_beta * n_alpha):
                offset, nbins = struct.unpack_from("<hH", blob, pos)
                pos += 4
                entries = np.frombuffer(blob, dtype="<u2", count=nbins, offset=pos)
                pos += 2 * nbins
                cum = np.zeros(nbins + 1, dtype=np.uint32)
                cum[1:] = entries
                cum[-1] = PROB_TOTAL
                tables.append(CdfTable(offset=offset, cum=cum))
        except (struct.error, ValueError, DomainError) as exc:
            raise CorruptionError(f"grid deserialization failed: {exc}") from exc
        if pos != len(blob):
            raise CorruptionError("trailing bytes after grid tables")
        betas = _beta_samples(n_beta, (b_lo, b_hi))
        alphas = sample_alpha_log(n_alpha, a_lo, a_hi)
        return cls(
            beta_samples=betas,
            alpha_samples=alphas,
            beta_range=(b_lo, b_hi),
            alpha_range=(a_lo, a_hi),
            tables=tables,
        )


def _beta_samples(count: int, beta_range: tuple[float, float]) -> np.ndarray:
    if count == 1:
        return np.array([beta_range[0]], dtype=np.float64)
    return np.linspace(beta_range[0], beta_range[1], count)


def build_lut(
    beta_count: int,
    alpha_count: int,
    bound_table: BoundTable | None = None,
    beta_range: tuple[float, float] = DEFAULT_BETA_RANGE,
    alpha_range: tuple[float, float] = DEFAULT_ALPHA_RANGE,
) -> LutGrid:
    """Tables for every pair of sampled shape and scale values.

    With a ``bound_table`` the scale used for each table is clamped upward
    to the bound of its shape, mirroring the clamping a trained model
    applies; by default tables follow the raw samples.
    """
    if beta_count < 1:
        raise DomainError(f"need at least 1 shape sample, got {beta_count!r}")
    lo, hi = beta_range
    if not BETA_MIN <= lo <= hi <= BETA_MAX:
        raise DomainError(f"shape range {beta_range!r} outside [{BETA_MIN}, {BETA_MAX}]")
    betas = _beta_samples(beta_count, beta_range)
    alphas = sample_alpha_log(alpha_count, *alpha_range)
    tables = []
    for b in betas:
        floor_alpha = bound_table.interpolate(float(b)) if bound_table else 0.0
        for a in alphas:
            tables.append(build_cdf_table(float(b), max(float(a), floor_alpha)))
    return LutGrid(
        beta_samples=betas,
        alpha_samples=alphas,
        beta_range=beta_range,
        alpha_range=alpha_range,
        tables=tables,
    )


def _nearest_index(sorted_vals: np.ndarray, value) -> np.ndarray:
    """Nearest sample index with ties (to 1e-12 of the spacing) toward the smaller."""
    vals = np.atleast_1d(np.asarray(value, dtype=np.float64))
    idx = np.searchsorted(sorted_vals, vals)
    idx = np.clip(idx, 1, sorted_vals.size - 1) if sorted_vals.size > 1 else np.zeros_like(idx)
    if sorted_vals.size == 1:
        return np.zeros(vals.shape, dtype=np.int64)
    lo = sorted_vals[idx - 1]
    hi = sorted_vals[idx]
    tol = 1e-12 * (hi - lo)
    take_hi = (vals - lo) > (hi - vals) + tol
    out = np.where(take_hi, idx, idx - 1).astype(np.int64)
    out[vals <= sorted_vals[0]] = 0
    out[vals >= sorted_vals[-1]] = sorted_vals.size - 1
    return out


def quantize_params(params: GgmParams, grid: LutGrid) -> tuple[int, int]:
    """Indices of the nearest shape (linear) and scale (log-domain) samples."""
    bi = int(_nearest_index(grid.beta_samples, params.beta)[0])
    ai = int(
        _nearest_index(np.log(grid.alpha_samples), math.log(params.alpha))[0]
    )
    return bi, ai


@dataclass(frozen=True)
class ParamStream:
    """Per-symbol grid indices plus the full-precision mean carried alongside.

    Models the side information both ends already share; the mean never
    enters the coded payload because zero-centered residuals are mean-free.
    """

    beta_idx: np.ndarray
    alpha_idx: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        bi = np.asarray(self.beta_idx, dtype=np.int64).ravel()
        ai = np.asarray(self.alpha_idx, dtype=np.int64).ravel()
        mu = np.asarray(self.mu, dtype=np.float64).ravel()
        if not bi.size == ai.size == mu.size:
            raise DomainError("beta_idx, alpha_idx and mu must have equal length")
        if not np.all(np.isfinite(mu)):
            raise DomainError("mu values must be finite")
        object.__setattr__(self, "beta_idx", bi)
        object.__setattr__(self, "alpha_idx", ai)
        object.__setattr__(self, "mu", mu)

    def __len__(self) -> int:
        return self.beta_idx.size

    @classmethod
    def from_params(cls, grid: LutGrid, betas, alphas, mus) -> "ParamStream":
        betas = np.asarray(betas, dtype=np.float64).ravel()
        alphas = np.asarray(alphas, dtype=np.float64).ravel()
        if np.any(alphas <= 0):
            raise DomainError("scale values must be positive")
        bi = _nearest_index(grid.beta_samples, betas)
        ai = _nearest_index(np.log(grid.alpha_samples), np.log(alphas))
        return cls(beta_idx=bi, alpha_idx=ai, mu=np.asarray(mus, dtype=np.float64))

    def table_ids(self, grid: LutGrid) -> np.ndarray:
        if self.beta_idx.size and (
            self.beta_idx.max(initial=0) >= grid.n_beta
            or self.alpha_idx.max(initial=0) >= grid.n_alpha
            or self.beta_idx.min(initial=0) < 0
            or self.alpha_idx.min(initial=0) < 0
        ):
            raise DomainError("parameter stream indices out of range for grid")
        return self.beta_idx * grid.n_alpha + self.alpha_idx


@dataclass(frozen=True)
class Bitstream:
    """Container for one coded symbol stream."""

    symbol_count: int
    grid_crc: int
    payload: bytes
    bypass: bytes
    bypass_bits: int

    def to_bytes(self) -> bytes:
        crc = zlib.crc32(self.payload + self.bypass)
        header = _BITS_HEADER.pack(
            _BITS_MAGIC,
            _FORMAT_VERSION,
            self.symbol_count,
            self.grid_crc,
            len(self.payload),
            self.bypass_bits,
            crc,
        )
        return header + self.payload + self.bypass

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Bitstream":
        if len(blob) < _BITS_HEADER.size:
            raise CorruptionError("bitstream shorter than its header")
        magic, version, count, grid_crc, plen, bypass_bits, crc = _BITS_HEADER.unpack_from(
            blob
        )
        if magic != _BITS_MAGIC:
            raise CorruptionError("bad bitstream magic")
        if version != _FORMAT_VERSION:
            raise CorruptionError(f"unsupported bitstream version {version}")
        body = blob[_BITS_HEADER.size :]
        blen = (bypass_bits + 7) // 8
        if len(body) != plen + blen:
            raise CorruptionError("bitstream length does not match header")
        payload, bypass = body[:plen], body[plen:]
        if zlib.crc32(payload + bypass) != crc:
            raise CorruptionError("bitstream checksum mismatch")
        return cls(
            symbol_count=count,
            grid_crc=grid_crc,
            payload=payload,
            bypass=bypass,
            bypass_bits=bypass_bits,
        )


def _escape_layout(symbols: np.ndarray, tids: np.ndarray, grid: LutGrid):
    cum_flat, starts, nbins, offsets = grid.packed()
    off = offsets[tids]
    nb = nbins[tids]
    rel = symbols - off
    in_support = (rel >= 0) & (rel < nb - 1)
    bin_idx = np.where(in_support, rel, nb - 1)
    counts = (
        cum_flat[starts[tids] + bin_idx + 1].astype(np.int64)
        - cum_flat[starts[tids] + bin_idx].astype(np.int64)
    )
    hi = off + nb - 2
    excess = np.where(symbols > hi, symbols - hi - 1, off - 1 - symbols)
    return in_support, counts, np.where(in_support, 0, excess)


def encode(symbols, pstream: ParamStream, grid: LutGrid) -> Bitstream:
    """Range-code a symbol stream; exact inverse is ``decode`` with the same inputs."""
    symbols = np.asarray(symbols, dtype=np.int64).ravel()
    if symbols.size != len(pstream):
        raise DomainError(
            f"{symbols.size} symbols but {len(pstream)} parameter records"
        )
    tids = pstream.table_ids(grid)
    cum_flat, starts, nbins, offsets = grid.packed()
    in_support, _, excess = _escape_layout(symbols, tids, grid)
    eg_bits = 0
    if not in_support.all():
        esc = excess[~in_support]
        eg_bits = int((2 * np.floor(np.log2(esc + 1)).astype(np.int64) + 2).sum())
    payload_buf = np.zeros(3 * symbols.size + 64, dtype=np.uint8)
    bypass_buf = np.zeros((eg_bits + 7) // 8, dtype=np.uint8)
    plen, bbits = _coder.encode_kernel(
        symbols, tids, cum_flat, starts, nbins, offsets, payload_buf, bypass_buf
    )
    return Bitstream(
        symbol_count=symbols.size,
        grid_crc=grid.fingerprint,
        payload=payload_buf[:plen].tobytes(),
        bypass=bypass_buf.tobytes(),
        bypass_bits=int(bbits),
    )


def decode(bits: Bitstream, pstream: ParamStream, grid: LutGrid) -> np.ndarray:
    """Reconstruct the exact symbol stream coded by ``encode``."""
    if bits.symbol_count != len(pstream):
        raise CorruptionError(
            f"bitstream carries {bits.symbol_count} symbols but the parameter "
            f"stream has {len(pstream)}"
        )
    if bits.grid_crc != grid.fingerprint:
        raise CorruptionError("bitstream was coded against a different grid")
    tids = pstream.table_ids(grid)
    cum_flat, starts, nbins, offsets = grid.packed()
    out = np.zeros(bits.symbol_count, dtype=np.int64)
    status = _coder.decode_kernel(
        np.frombuffer(bits.payload, dtype=np.uint8),
        np.frombuffer(bits.bypass, dtype=np.uint8),
        tids,
        cum_flat,
        starts,
        nbins,
        offsets,
        out,
    )
    if status != 0:
        section = "payload" if status == 1 else "bypass section"
        raise CorruptionError(f"range decoder ran out of {section}")
    return out


def stream_estimated_bits(symbols, pstream: ParamStream, grid: LutGrid) -> float:
    """Model cost in bits implied by the quantized tables, escapes included."""
    symbols = np.asarray(symbols, dtype=np.int64).ravel()
    if symbols.size != len(pstream):
        raise DomainError(
            f"{symbols.size} symbols but {len(pstream)} parameter records"
        )
    tids = pstream.table_ids(grid)
    in_support, counts, excess = _escape_layout(symbols, tids, grid)
    bits = float(-np.log2(counts / float(PROB_TOTAL)).sum())
    if not in_support.all():
        esc = excess[~in_support]
        bits += float((2 * np.floor(np.log2(esc + 1)).astype(np.int64) + 2).sum())
    return bits
