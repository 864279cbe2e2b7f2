"""Bitstring <-> integer conversions.

Site 0 is the leftmost character of a bitstring and the most significant bit
of its integer code, so integer order equals lexicographic string order.
A ``1`` marks the Z eigenstate with eigenvalue -1.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

MAX_BITS = 62


def to_int(bitstring: str) -> int:
    return int(bitstring, 2)


def to_str(value: int, n_sites: int) -> str:
    return format(value, f"0{n_sites}b")


def strings_to_ints(bitstrings: Iterable[str]) -> np.ndarray:
    return np.fromiter((int(s, 2) for s in bitstrings), dtype=np.int64)


def ints_to_strings(values: Iterable[int], n_sites: int) -> list[str]:
    fmt = f"0{n_sites}b"
    return [format(int(v), fmt) for v in values]


def site_shift(site: int, n_sites: int) -> int:
    """Bit position in the integer code that holds ``site``."""
    return n_sites - 1 - site


def full_mask(n_sites: int) -> int:
    return (1 << n_sites) - 1


def popcount(states: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(states, dtype=np.int64)).astype(np.int64)


def complement(states: np.ndarray, n_sites: int) -> np.ndarray:
    return np.asarray(states, dtype=np.int64) ^ full_mask(n_sites)


def bit_matrix(states: np.ndarray, n_sites: int) -> np.ndarray:
    """Return an ``(len(states), n_sites)`` uint8 array; column ``i`` is site ``i``."""
    shifts = np.arange(n_sites - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(states, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.uint8)


def from_bit_matrix(bits: np.ndarray) -> np.ndarray:
    n_sites = bits.shape[1]
    weights = np.left_shift(np.int64(1), np.arange(n_sites - 1, -1, -1, dtype=np.int64))
    return bits.astype(np.int64) @ weights


def check_bitstring(bitstring: str, n_sites: int) -> None:
    if len(bitstring) != n_sites:
        raise ValueError(f"bitstring {bitstring!r} has length {len(bitstring)}, expected {n_sites}")
    if bitstring.strip("01"):
        raise ValueError(f"bitstring {bitstring!r} contains characters other than 0/1")
