"""Bit-accurate functional simulation of ReRAM crossbar arithmetic.

Signed weights are stored as differential column pairs (positive and
negative parts, each sliced into cell-width digit planes). Signed inputs
are serialized as unsigned digit slices of their two's-complement form
plus one sign-mask slice carrying negative place weight; this keeps every
DAC drive and every analog column sum nonnegative while reconstructing the
exact signed product for any DAC width. Every analog sum passes through an
ideal saturating ADC; clipping is reported, never hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class OutOfRange(ValueError):
    """A value does not fit the declared bit-width."""


class ShapeMismatch(ValueError):
    """Input vector length does not match the programmed array."""


class CapacityExceeded(ValueError):
    """More vectors (or longer vectors) than a single array can hold."""


@dataclass(frozen=True)
class CrossbarSpec:
    rows: int
    cols: int
    cell_bits: int

    def __post_init__(self):
        if self.rows != self.cols or self.rows < 1:
            raise ValueError("crossbar arrays are square and nonempty")
        if self.cell_bits not in (1, 2):
            raise ValueError("cell_bits must be 1 or 2")


@dataclass(frozen=True)
class ConverterSpec:
    dac_bits: int
    adc_bits: int
    adcs_per_xbar: int = 1  # column multiplexing share; cost/latency only

    def __post_init__(self):
        if self.dac_bits not in (1, 2):
            raise ValueError("dac_bits must be 1 or 2")
        if self.adc_bits not in (4, 6, 8):
            raise ValueError("adc_bits must be 4, 6 or 8")


@dataclass
class SaturationLog:
    clip_count: int = 0     # ADC reads that saturated
    max_overflow: int = 0   # largest pre-clip excess over the ADC ceiling

    @property
    def clean(self) -> bool:
        return self.clip_count == 0

    def merge(self, other: "SaturationLog") -> None:
        self.clip_count += other.clip_count
        self.max_overflow = max(self.max_overflow, other.max_overflow)


@dataclass
class TileMeta:
    """Packing of a logical signed matrix onto physical tiles.

    The logical matrix has shape (in_dim, out_dim): entry [i, j] multiplies
    input i into output j. Each output column occupies ``planes * 2``
    physical columns (digit planes x differential sign), laid out LSB plane
    first, positive before negative.
    """

    in_dim: int
    out_dim: int
    w_bits: int
    cell_bits: int
    planes: int
    xbar_size: int
    row_tiles: int
    col_tiles: int
    # Per virtual column: which logical output it feeds and with what
    # signed plane weight (+/- 2^(plane * cell_bits)).
    out_index: np.ndarray = field(repr=False, default=None)
    col_weight: np.ndarray = field(repr=False, default=None)

    @property
    def virtual_cols(self) -> int:
        return self.out_dim * self.planes * 2


@dataclass
class ProgrammedCrossbar:
    """One physical array: unsigned cells plus its position in the tile grid."""

    spec: CrossbarSpec
    cells: np.ndarray  # (rows, cols) unsigned ints < 2^cell_bits
    orientation: str = "normal"  # or "transposed-write"
    row_tile: int = 0
    col_tile: int = 0


@dataclass
class ProgrammedTiles:
    """Tile grid realizing one logical matrix, ready for bit-serial reads."""

    tiles: list[ProgrammedCrossbar]
    meta: TileMeta
    orientation: str = "normal"

    def tile(self, rt: int, ct: int) -> ProgrammedCrossbar:
        return self.tiles[rt * self.meta.col_tiles + ct]


def adc_quantize(analog_sum: int, adc_bits: int) -> tuple[int, bool]:
    """Ideal saturating reader: clamp to the ADC ceiling, report truncation."""
    if analog_sum < 0:
        raise OutOfRange("analog sums are nonnegative by construction")
    limit = (1 << adc_bits) - 1
    if analog_sum > limit:
        return limit, True
    return analog_sum, False


def program_signed(
    matrix,
    w_bits: int,
    spec: CrossbarSpec,
    orientation: str = "normal",
) -> ProgrammedTiles:
    """Decompose a signed integer matrix onto differential bit-plane tiles.

    ``matrix[i, j]`` multiplies word-line input i into output column j.
    The decomposition satisfies, per entry,
    ``sum_k 2^(k*cell_bits) * (plane_pos_k - plane_neg_k) == matrix`` exactly.
    """
    if w_bits not in (4, 8):
        raise OutOfRange(f"w_bits must be 4 or 8, got {w_bits}")
    m = np.asarray(matrix, dtype=np.int64)
    if m.ndim != 2:
        raise ShapeMismatch("matrix must be 2-D")
    if np.any(np.abs(m) >= 1 << (w_bits - 1)):
        raise OutOfRange(f"entries exceed signed {w_bits}-bit range")

    in_dim, out_dim = m.shape
    cb = spec.cell_bits
    planes = math.ceil(w_bits / cb)
    vcols = out_dim * planes * 2
    row_tiles = math.ceil(in_dim / spec.rows)
    col_tiles = math.ceil(vcols / spec.cols)

    pos = np.maximum(m, 0)
    neg = np.maximum(-m, 0)
    virtual = np.zeros((in_dim, vcols), dtype=np.int64)
    out_index = np.zeros(vcols, dtype=np.int64)
    col_weight = np.zeros(vcols, dtype=np.int64)
    mask = (1 << cb) - 1
    for j in range(out_dim):
        for k in range(planes):
            base = j * planes * 2 + k * 2
            virtual[:, base] = (pos[:, j] >> (k * cb)) & mask
            virtual[:, base + 1] = (neg[:, j] >> (k * cb)) & mask
            out_index[base] = out_index[base + 1] = j
            col_weight[base] = 1 << (k * cb)
            col_weight[base + 1] = -(1 << (k * cb))

    tiles = []
    for rt in range(row_tiles):
        r0 = rt * spec.rows
        chunk_r = virtual[r0 : r0 + spec.rows, :]
        for ct in range(col_tiles):
            c0 = ct * spec.cols
            chunk = chunk_r[:, c0 : c0 + spec.cols]
            cells = np.zeros((spec.rows, spec.cols), dtype=np.int64)
            cells[: chunk.shape[0], : chunk.shape[1]] = chunk
            tiles.append(
                ProgrammedCrossbar(
                    spec=spec,
                    cells=cells,
                    orientation=orientation,
                    row_tile=rt,
                    col_tile=ct,
                )
            )

    meta = TileMeta(
        in_dim=in_dim,
        out_dim=out_dim,
        w_bits=w_bits,
        cell_bits=cb,
        planes=planes,
        xbar_size=spec.rows,
        row_tiles=row_tiles,
        col_tiles=col_tiles,
        out_index=out_index,
        col_weight=col_weight,
    )
    return ProgrammedTiles(tiles=tiles, meta=meta, orientation=orientation)


def _input_slices(x: np.ndarray, a_bits: int, dac_bits: int):
    """Unsigned digit slices of the two's-complement form plus the sign mask.

    Reconstruction: x = sum_k digit_k * 2^(k*dac_bits) - 2^a_bits * [x < 0].
    """
    n_slices = math.ceil(a_bits / dac_bits)
    u = x & ((1 << a_bits) - 1)
    digit_mask = (1 << dac_bits) - 1
    slices = [(u >> (k * dac_bits)) & digit_mask for k in range(n_slices)]
    weights = [1 << (k * dac_bits) for k in range(n_slices)]
    slices.append((x < 0).astype(np.int64))
    weights.append(-(1 << a_bits))
    return slices, weights


def mvm(
    pt: ProgrammedTiles,
    x,
    a_bits: int,
    conv: ConverterSpec,
) -> tuple[np.ndarray, SaturationLog]:
    """Bit-serial matrix-vector product through the programmed tiles.

    Every (slice, plane, column) analog sum passes ``adc_quantize``; results
    recombine by digital shift-and-add and differential subtraction. When
    the returned log is clean the result equals the exact integer product.

    ``x`` may also be a matrix whose columns are independent drive vectors
    (repeated MVM sharing one saturation log), returning one output column
    per drive.
    """
    meta = pt.meta
    x = np.asarray(x, dtype=np.int64)
    batched = x.ndim == 2
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != meta.in_dim:
        raise ShapeMismatch(f"expected {meta.in_dim} input rows, got {x.shape}")
    if np.any(np.abs(x) >= 1 << (a_bits - 1)):
        raise OutOfRange(f"inputs exceed signed {a_bits}-bit range")

    limit = (1 << conv.adc_bits) - 1
    log = SaturationLog()
    n = x.shape[1]
    acc = np.zeros((meta.virtual_cols, n), dtype=np.int64)

    for rt in range(meta.row_tiles):
        r0 = rt * meta.xbar_size
        chunk = x[r0 : r0 + meta.xbar_size, :]
        slices, weights = _input_slices(chunk, a_bits, conv.dac_bits)
        drives = []
        for drive, w in zip(slices, weights):
            if not drive.any():
                continue  # zero drive: zero sums, no clips, no contribution
            padded = np.zeros((meta.xbar_size, n), dtype=np.int64)
            padded[: drive.shape[0], :] = drive
            drives.append((padded, w))
        for ct in range(meta.col_tiles):
            tile = pt.tile(rt, ct)
            c0 = ct * meta.xbar_size
            c1 = min(c0 + meta.xbar_size, meta.virtual_cols)
            width = c1 - c0
            for padded, w in drives:
                sums = padded.T @ tile.cells[:, :width]  # (n, width)
                over = sums > limit
                if over.any():
                    log.clip_count += int(over.sum())
                    log.max_overflow = max(log.max_overflow, int((sums - limit).max()))
                    sums = np.minimum(sums, limit)
                acc[c0:c1, :] += w * sums.T

    out = np.zeros((meta.out_dim, n), dtype=np.int64)
    np.add.at(out, meta.out_index, meta.col_weight[:, None] * acc)
    return (out if batched else out[:, 0]), log


def transposed_program(
    vectors,
    spec: CrossbarSpec,
    v_bits: int = 8,
) -> ProgrammedTiles:
    """Program producer vectors column-wise into one transposed-write array.

    Vector j occupies (logical) column j; a word-line read with input u
    returns the per-row combination sum_j u_j * v_j, so the all-ones read
    yields per-coordinate sums across the programmed vectors.
    """
    vecs = [np.asarray(v, dtype=np.int64) for v in vectors]
    if not vecs:
        raise CapacityExceeded("no vectors to program")
    length = vecs[0].shape[0]
    if any(v.ndim != 1 or v.shape[0] != length for v in vecs):
        raise ShapeMismatch("vectors must share one length")
    if length > spec.rows:
        raise CapacityExceeded(f"vector length {length} exceeds {spec.rows} rows")
    if len(vecs) > spec.cols:
        raise CapacityExceeded(f"{len(vecs)} vectors exceed {spec.cols} columns")
    # Logical read direction: inputs indexed by vector, outputs by coordinate.
    m = np.stack(vecs, axis=0)  # (n_vectors, length): matrix[j, r] = v_j[r]
    return program_signed(m, v_bits, spec, orientation="transposed-write")


def mbsa_square(v, v_bits: int) -> np.ndarray:
    """Exact elementwise squares via bit-serial AND / shift-accumulate."""
    v = np.asarray(v, dtype=np.int64)
    if np.any(v < 0) or np.any(v >= 1 << v_bits):
        raise OutOfRange(f"values exceed unsigned {v_bits}-bit range")
    acc = np.zeros_like(v)
    for t in range(v_bits):
        bit = (v >> t) & 1
        acc += (bit * v) << t  # partial product of bit t, shifted into place
    return acc


def tiles_to_json(pt: ProgrammedTiles) -> dict:
    """Debug dump of a programmed tile grid (cells as plain integer lists)."""
    meta = pt.meta
    return {
        "orientation": pt.orientation,
        "in_dim": meta.in_dim,
        "out_dim": meta.out_dim,
        "w_bits": meta.w_bits,
        "cell_bits": meta.cell_bits,
        "planes": meta.planes,
        "xbar_size": meta.xbar_size,
        "row_tiles": meta.row_tiles,
        "col_tiles": meta.col_tiles,
        "tiles": [
            {
                "row_tile": t.row_tile,
                "col_tile": t.col_tile,
                "cells": t.cells.tolist(),
            }
            for t in pt.tiles
        ],
    }
