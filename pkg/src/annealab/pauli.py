"""N-site Pauli strings, dense operators built from them, and the
orthonormal-Pauli expansion of Hermitian matrices.

A Pauli string is encoded by two bit masks: bit ``i`` of ``x_mask`` is set
where X or Y acts on site ``i``, bit ``i`` of ``z_mask`` where Z or Y acts.
Y carries the phase convention Y = iXZ, so every string is Hermitian. The
size of a string is the Hamming weight of ``x_mask | z_mask``.

Basis convention for dense matrices: site 0 is the most significant bit of
the computational-basis index, matching the leftmost character of the
``IXYZ`` label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapacityError

# Dense 2^N x 2^N storage is the backbone of everything downstream; beyond
# 16 sites it stops fitting in ordinary memory.
MAX_DENSE_SITES = 16

_AXES = ("x", "y", "z")


def _check_capacity(n_sites: int) -> None:
    if not 1 <= n_sites <= MAX_DENSE_SITES:
        raise CapacityError(
            f"n_sites={n_sites} outside supported range [1, {MAX_DENSE_SITES}] "
            "for dense operators"
        )


def _reverse_bits(mask: int, n_bits: int) -> int:
    out = 0
    for i in range(n_bits):
        if (mask >> i) & 1:
            out |= 1 << (n_bits - 1 - i)
    return out


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-site Paulis in the two-mask encoding."""

    n_sites: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        top = 1 << self.n_sites
        if not (0 <= self.x_mask < top and 0 <= self.z_mask < top):
            raise ValueError("mask has bits set at positions >= n_sites")

    @property
    def size(self) -> int:
        """Number of non-identity sites (Hamming weight of the support)."""
        return int(self.x_mask | self.z_mask).bit_count()

    @property
    def label(self) -> str:
        chars = []
        for i in range(self.n_sites):
            x = (self.x_mask >> i) & 1
            z = (self.z_mask >> i) & 1
            chars.append("IXZY"[x + 2 * z])
        return "".join(chars)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        x_mask = z_mask = 0
        cleaned = label.replace(" ", "")
        for i, c in enumerate(cleaned.upper()):
            if c in ("X", "Y"):
                x_mask |= 1 << i
            if c in ("Z", "Y"):
                z_mask |= 1 << i
            if c not in "IXYZ":
                raise ValueError(f"invalid Pauli character {c!r}")
        return cls(n_sites=len(cleaned), x_mask=x_mask, z_mask=z_mask)

    @classmethod
    def identity(cls, n_sites: int) -> "PauliString":
        return cls(n_sites=n_sites, x_mask=0, z_mask=0)

    @classmethod
    def single_site(cls, axis: str, site: int, n_sites: int) -> "PauliString":
        if axis not in _AXES:
            raise ValueError(f"axis must be one of {_AXES}")
        if not 0 <= site < n_sites:
            raise ValueError("site out of range")
        bit = 1 << site
        x = bit if axis in ("x", "y") else 0
        z = bit if axis in ("z", "y") else 0
        return cls(n_sites=n_sites, x_mask=x, z_mask=z)

    def __str__(self) -> str:
        return self.label


def all_pauli_strings(n_sites: int) -> Iterator[PauliString]:
    """Iterate the full 4^N basis in (x_mask, z_mask) lexicographic order."""
    top = 1 << n_sites
    for x in range(top):
        for z in range(top):
            yield PauliString(n_sites=n_sites, x_mask=x, z_mask=z)


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Dense 2^N x 2^N matrix of a Pauli string.

    Entries are in {0, +-1, +-i}; the matrix is Hermitian and squares to
    the identity.
    """
    _check_capacity(p.n_sites)
    n = p.n_sites
    dim = 1 << n
    # masks live in site order (bit i = site i); the basis index keeps
    # site 0 in the most significant bit.
    bx = _reverse_bits(p.x_mask, n)
    bz = _reverse_bits(p.z_mask, n)
    cols = np.arange(dim)
    phase = 1j ** int(p.x_mask & p.z_mask).bit_count()
    signs = 1.0 - 2.0 * (np.bitwise_count(cols & bz) & 1)
    m = np.zeros((dim, dim), dtype=complex)
    m[cols ^ bx, cols] = phase * signs
    return m


def collective_spin(axis: str, n_sites: int) -> np.ndarray:
    """S_alpha = sum_i sigma_i^alpha / 2, as a dense matrix."""
    _check_capacity(n_sites)
    dim = 1 << n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for site in range(n_sites):
        out += pauli_matrix(PauliString.single_site(axis, site, n_sites))
    return out / 2.0


def pauli_coefficient(a: np.ndarray, p: PauliString) -> complex:
    """Coefficient tr(Q A) / 2^N of a Pauli string in the expansion of A."""
    dim = 1 << p.n_sites
    if a.shape != (dim, dim):
        raise ValueError(
            f"operator shape {a.shape} does not match 2^{p.n_sites}"
        )
    n = p.n_sites
    bx = _reverse_bits(p.x_mask, n)
    bz = _reverse_bits(p.z_mask, n)
    cols = np.arange(dim)
    signs = 1.0 - 2.0 * (np.bitwise_count(cols & bz) & 1)
    phase = 1j ** int(p.x_mask & p.z_mask).bit_count()
    # tr(Q A) = sum_b Q[b^x, b] A[b, b^x]
    return complex(phase * np.sum(signs * a[cols, cols ^ bx]) / dim)
