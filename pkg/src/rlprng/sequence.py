"""Bit and signed-decimal sequence representations.

Bit sequences are 1-D ``numpy.uint8`` arrays holding only 0 and 1.  Decimal
sequences are 1-D integer arrays whose values fit an ``m``-bit two's
complement word; the binary image of a value is written most significant
bit first.
"""
from __future__ import annotations

import csv
import os
from typing import Iterable, Sequence

import numpy as np

DEFAULT_WIDTH = 8


class SequenceError(ValueError):
    """Raised for malformed sequences and sequence files."""


def as_bits(bits) -> np.ndarray:
    """Coerce ``bits`` to a validated ``uint8`` bit array."""
    if isinstance(bits, str):
        if bits.strip("01"):
            raise SequenceError(f"not a bit string: {bits!r}")
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise SequenceError(f"bit sequence must be 1-D, got shape {arr.shape}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise SequenceError("bit sequence contains values other than 0 and 1")
    return arr.astype(np.uint8, copy=False)


def value_range(m: int = DEFAULT_WIDTH) -> tuple[int, int]:
    """Inclusive range of an ``m``-bit signed word."""
    if m < 1:
        raise SequenceError(f"bit width must be >= 1, got {m}")
    return -(1 << (m - 1)), (1 << (m - 1)) - 1


def to_bits(values: Sequence[int], m: int = DEFAULT_WIDTH) -> np.ndarray:
    """Encode signed integers as concatenated ``m``-bit two's complement words.

    Raises
    ------
    SequenceError
        If a value lies outside the ``m``-bit signed range; the message names
        the first offending index.
    """
    vals = np.asarray(values, dtype=np.int64).reshape(-1)
    lo, hi = value_range(m)
    bad = np.flatnonzero((vals < lo) | (vals > hi))
    if bad.size:
        i = int(bad[0])
        raise SequenceError(
            f"value {int(vals[i])} at index {i} outside [{lo}, {hi}] for m={m}")
    unsigned = vals & ((1 << m) - 1)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((unsigned[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def to_decimal(bits, m: int = DEFAULT_WIDTH) -> np.ndarray:
    """Inverse of :func:`to_bits`."""
    arr = as_bits(bits)
    if arr.size % m:
        raise SequenceError(
            f"bit length {arr.size} is not divisible by width {m}")
    words = arr.reshape(-1, m).astype(np.int64)
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    unsigned = words @ weights
    return np.where(unsigned >= 1 << (m - 1), unsigned - (1 << m), unsigned)


def concat(periods: Iterable) -> np.ndarray:
    parts = [as_bits(p) for p in periods]
    if not parts:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate(parts)


def bits_to_str(bits) -> str:
    return (as_bits(bits) + ord("0")).tobytes().decode("ascii")


def read_sequences(path: str | os.PathLike) -> list[np.ndarray]:
    """Read a bit-sequence text file: one sequence of '0'/'1' per line."""
    with open(path, "rb") as fh:
        data = fh.read()
    text = data.decode("utf-8")
    out = []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, line in enumerate(lines, start=1):
        bad = line.strip("01")
        if bad:
            raise SequenceError(
                f"{os.fspath(path)}:{lineno}: unexpected character {bad[0]!r}")
        out.append(as_bits(line))
    return out


def write_sequences(path: str | os.PathLike, sequences: Iterable) -> None:
    with open(path, "wb") as fh:
        for seq in sequences:
            fh.write(bits_to_str(seq).encode("ascii") + b"\n")


def read_decimal_csv(path: str | os.PathLike) -> list[np.ndarray]:
    with open(path, newline="") as fh:
        return [np.array([int(v) for v in row], dtype=np.int64)
                for row in csv.reader(fh) if row]


def write_decimal_csv(path: str | os.PathLike, rows: Iterable) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([int(v) for v in row])
