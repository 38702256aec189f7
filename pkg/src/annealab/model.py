"""Interpolated annealing Hamiltonian H(s) = (1-s) H_M + s H_P and its
reflection-parity sectors.

H_M = sum_i sigma_i^x is the transverse mixer; H_P is the classical Ising
cost operator sum_ij chi_ij Z_i Z_j + sum_i lambda_i Z_i, diagonal in the
computational basis. The default instance is the open nearest-neighbor
chain with chi = 1 and homogeneous field lambda = 1.

Sign conventions, pinned once and tested: computational bit value 0 on
site i means z_i = +1; site 0 occupies the most significant bit of the
basis index. With these choices s = 0 gives H_M and s = 1 gives H_P, so a
forward ramp anneals from the transverse mixer into the classical cost
operator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, SymmetryError
from .pauli import MAX_DENSE_SITES

REFLECTION_COMMUTATOR_TOL = 1e-10


def _default_couplings(n_sites: int) -> dict:
    return {(i, i + 1): 1.0 for i in range(n_sites - 1)}


@dataclass(frozen=True)
class HamiltonianSpec:
    """Model instance: couplings chi_ij, fields lambda_i, system size."""

    n_sites: int
    couplings: Optional[Mapping] = None
    fields: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        if self.n_sites > MAX_DENSE_SITES:
            raise CapacityError(
                f"n_sites={self.n_sites} exceeds dense capacity {MAX_DENSE_SITES}"
            )
        if self.couplings is None:
            couplings = _default_couplings(self.n_sites)
        else:
            couplings = {}
            for (i, j), v in dict(self.couplings).items():
                if i == j:
                    raise ValueError(f"coupling ({i},{j}) on the diagonal")
                if not (0 <= i < self.n_sites and 0 <= j < self.n_sites):
                    raise ValueError(f"coupling ({i},{j}) out of range")
                key = (min(i, j), max(i, j))
                couplings[key] = couplings.get(key, 0.0) + float(v)
        object.__setattr__(self, "couplings", couplings)
        if self.fields is None:
            fields = np.ones(self.n_sites)
        else:
            fields = np.asarray(self.fields, dtype=float)
            if fields.shape != (self.n_sites,):
                raise ValueError("fields must have length n_sites")
        object.__setattr__(self, "fields", fields)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def to_json_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "couplings": [[i, j, v] for (i, j), v in sorted(self.couplings.items())],
            "fields": [float(x) for x in self.fields],
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "HamiltonianSpec":
        n = int(doc["n_sites"])
        couplings = None
        if "couplings" in doc and doc["couplings"] is not None:
            couplings = {(int(i), int(j)): float(v) for i, j, v in doc["couplings"]}
        fields = None
        if "fields" in doc and doc["fields"] is not None:
            fields = np.asarray(doc["fields"], dtype=float)
        return cls(n_sites=n, couplings=couplings, fields=fields)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "HamiltonianSpec":
        return cls.from_json_dict(json.loads(text))


def _site_bit(site: int, n_sites: int) -> int:
    # site 0 is the most significant basis bit
    return 1 << (n_sites - 1 - site)


def z_values(spec: HamiltonianSpec) -> np.ndarray:
    """z_i = +-1 per basis state and site; shape (2^N, N). Bit 0 -> z=+1."""
    idx = np.arange(spec.dim)
    cols = [(1 - 2 * ((idx >> (spec.n_sites - 1 - i)) & 1)) for i in range(spec.n_sites)]
    return np.stack(cols, axis=1).astype(float)


def problem_diagonal(spec: HamiltonianSpec) -> np.ndarray:
    """Diagonal of H_P in the computational basis."""
    z = z_values(spec)
    vals = z @ spec.fields
    for (i, j), chi in spec.couplings.items():
        vals += chi * z[:, i] * z[:, j]
    return vals


def mixer_hamiltonian_sparse(spec: HamiltonianSpec) -> sp.csr_matrix:
    idx = np.arange(spec.dim)
    rows = []
    for i in range(spec.n_sites):
        rows.append(idx ^ _site_bit(i, spec.n_sites))
    row = np.concatenate(rows)
    col = np.tile(idx, spec.n_sites)
    data = np.ones(len(row))
    return sp.csr_matrix((data, (row, col)), shape=(spec.dim, spec.dim))


def mixer_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    """H_M = sum_i sigma_i^x; integer spectrum -N, -N+2, ..., N."""
    return mixer_hamiltonian_sparse(spec).toarray()


def problem_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    """H_P, diagonal in the computational basis."""
    return np.diag(problem_diagonal(spec))


def interpolated_hamiltonian(spec: HamiltonianSpec, s: float) -> np.ndarray:
    """H(s) = (1-s) H_M + s H_P; H(0) is the mixer, H(1) the cost operator."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    return (1.0 - s) * mixer_hamiltonian(spec) + s * problem_hamiltonian(spec)


# ---------------------------------------------------------------------------
# reflection symmetry and parity sectors
# ---------------------------------------------------------------------------

def reflection_permutation(n_sites: int) -> np.ndarray:
    """Basis permutation induced by reversing the chain (site i -> N-1-i)."""
    dim = 1 << n_sites
    idx = np.arange(dim)
    out = np.zeros(dim, dtype=np.int64)
    for i in range(n_sites):
        bit = (idx >> (n_sites - 1 - i)) & 1
        out |= bit << i
    return out


def reflection_operator(n_sites: int) -> np.ndarray:
    dim = 1 << n_sites
    r = np.zeros((dim, dim))
    r[reflection_permutation(n_sites), np.arange(dim)] = 1.0
    return r


def is_reflection_symmetric(spec: HamiltonianSpec) -> bool:
    n = spec.n_sites
    if not np.allclose(spec.fields, spec.fields[::-1]):
        return False
    reflected = {}
    for (i, j), v in spec.couplings.items():
        a, b = n - 1 - j, n - 1 - i
        reflected[(min(a, b), max(a, b))] = v
    keys = set(spec.couplings) | set(reflected)
    return all(
        np.isclose(spec.couplings.get(k, 0.0), reflected.get(k, 0.0)) for k in keys
    )


@dataclass(frozen=True)
class ParitySector:
    """Orthonormal basis of one reflection-parity eigenspace.

    ``basis`` is the 2^N x dim isometry B whose columns are the
    symmetrized (or antisymmetrized) basis vectors; restriction of an
    operator is B^T O B and embedding of a sector state is B v.
    """

    sign: int
    n_sites: int
    dim: int
    basis: sp.csr_matrix = field(repr=False)
    pairs: tuple = field(repr=False)

    def embed(self, vec: np.ndarray) -> np.ndarray:
        """Expand sector coordinates into the full 2^N space."""
        return np.asarray(self.basis @ vec)

    def project(self, vec: np.ndarray) -> np.ndarray:
        """Sector coordinates of a full-space vector (B^T v)."""
        return np.asarray(self.basis.T @ vec)


def positive_sector_dimension(n_sites: int) -> int:
    """(2^N + 2^ceil(N/2)) / 2, counted from the palindromic basis states."""
    return (2**n_sites + 2 ** ((n_sites + 1) // 2)) // 2


def parity_sector(spec: HamiltonianSpec, sign: int = +1) -> ParitySector:
    """Build the reflection-parity sector basis for a symmetric instance."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if not is_reflection_symmetric(spec):
        raise SymmetryError("model instance is not reflection symmetric")
    n = spec.n_sites
    perm = reflection_permutation(n)
    rows, cols, vals, pairs = [], [], [], []
    c = 0
    sqrt_half = 2**-0.5
    for x in range(spec.dim):
        rx = int(perm[x])
        if x == rx:
            if sign == +1:
                rows.append(x)
                cols.append(c)
                vals.append(1.0)
                pairs.append((x, x))
                c += 1
        elif x < rx:
            rows += [x, rx]
            cols += [c, c]
            vals += [sqrt_half, sign * sqrt_half]
            pairs.append((x, rx))
            c += 1
    basis = sp.csr_matrix((vals, (rows, cols)), shape=(spec.dim, c))
    return ParitySector(sign=sign, n_sites=n, dim=c, basis=basis, pairs=tuple(pairs))


def restrict(op: np.ndarray, sector: ParitySector) -> np.ndarray:
    """Project an operator onto the sector: B^T O B.

    The operator must commute with the reflection; Hermiticity and
    unitarity survive the restriction.
    """
    perm = reflection_permutation(sector.n_sites)
    scale = max(np.abs(op).max(), 1.0)
    if np.abs(op[np.ix_(perm, perm)] - op).max() > REFLECTION_COMMUTATOR_TOL * scale:
        raise SymmetryError("operator does not commute with the reflection")
    b = sector.basis
    return np.asarray((b.T @ op) @ b)


def restrict_sparse(op: sp.spmatrix, sector: ParitySector) -> sp.csr_matrix:
    """Sector restriction staying in sparse format (no symmetry check)."""
    return (sector.basis.T @ op @ sector.basis).tocsr()
