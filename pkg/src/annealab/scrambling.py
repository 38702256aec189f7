"""Operator size distributions and mean operator size along annealing
ramps, with the exact finite-size Haar baseline.

The distribution weights come from the orthonormal-Pauli expansion: the
weight at size k collects |tr(Q A)/2^N|^2 over all strings Q of Hamming
weight k. The sum over every string equals tr(A^2)/2^N and is conserved
under unitary conjugation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import hadamard

from .errors import CapacityError
from .evolution import RampParams, evolve_ramp, heisenberg_conjugate
from .model import HamiltonianSpec
from .pauli import PauliString, collective_spin, pauli_matrix

# full 4^N Pauli projections; beyond 7 sites the 16^N trace work explodes
MAX_PROJECTION_SITES = 7

TRACELESS_TOL = 1e-12
NORM_TOL = 1e-10

OPERATOR_LABELS = ("sx_i0", "sy_i0", "sz_i0", "Sx", "Sy", "Sz")


@lru_cache(maxsize=8)
def _size_table(n_sites: int) -> np.ndarray:
    """r(Q) = popcount(x | z) for every (x, z) mask pair, as a 2^N x 2^N grid."""
    idx = np.arange(1 << n_sites, dtype=np.uint32)
    return np.bitwise_count(idx[:, None] | idx[None, :]).astype(np.int64)


def pauli_weight_by_size(a: np.ndarray, n_sites: int) -> np.ndarray:
    """W_k = sum_{r(Q)=k} |tr(Q A)|^2 / 4^N for k = 0..N.

    Evaluated without building any Pauli matrix: for each x-mask the
    generalized diagonal A[b, b^x] is gathered once, and the sum over
    z-masks is a Walsh-Hadamard transform. The Y phases are unimodular and
    drop out of the squared modulus.
    """
    if n_sites > MAX_PROJECTION_SITES:
        raise CapacityError(
            f"n_sites={n_sites} exceeds projection capacity {MAX_PROJECTION_SITES}"
        )
    dim = 1 << n_sites
    if a.shape != (dim, dim):
        raise ValueError(f"operator shape {a.shape} does not match 2^{n_sites}")
    idx = np.arange(dim)
    diagonals = np.empty((dim, dim), dtype=complex)
    for x in range(dim):
        diagonals[x] = a[idx, idx ^ x]
    transforms = diagonals @ hadamard(dim)
    weights = np.abs(transforms) ** 2 / dim**2
    return np.bincount(
        _size_table(n_sites).ravel(), weights=weights.ravel(), minlength=n_sites + 1
    )


@dataclass(frozen=True)
class SizeDistribution:
    """P_k over operator sizes k = 0..N with mean mu = sum k P_k."""

    probabilities: np.ndarray
    mean: float
    t: float = 0.0
    label: str = ""

    @property
    def n_sites(self) -> int:
        return len(self.probabilities) - 1


def operator_size_distribution(
    a: np.ndarray, t: float = 0.0, label: str = ""
) -> SizeDistribution:
    """Size distribution of a Hermitian operator.

    For traceless operators the identity component vanishes and P_0 = 0;
    otherwise P_0 is reported and included in the normalization.
    """
    n_sites = a.shape[0].bit_length() - 1
    weights = pauli_weight_by_size(a, n_sites)
    total = weights.sum()
    if total < TRACELESS_TOL**2:
        raise ValueError("zero operator has no size distribution")
    scale = np.abs(a).max() * a.shape[0]
    traceless = abs(np.trace(a)) < TRACELESS_TOL * max(scale, 1.0)
    probabilities = np.array(weights)
    if traceless:
        probabilities[0] = 0.0
    probabilities /= probabilities.sum()
    mean = float(np.arange(n_sites + 1) @ probabilities)
    return SizeDistribution(probabilities=probabilities, mean=mean, t=t, label=label)


def haar_mean_size(n_sites: int) -> float:
    """Mean size under the uniform distribution on non-identity strings.

    sum_k k 3^k C(N,k) / (4^N - 1), which approaches 3N/4 from above.
    """
    if n_sites < 1:
        raise ValueError("n_sites must be positive")
    total = sum(k * 3**k * comb(n_sites, k) for k in range(1, n_sites + 1))
    return total / (4**n_sites - 1)


def initial_operator(label: str, n_sites: int) -> np.ndarray:
    """One of the six probe operators: a middle-site Pauli or S_x/y/z."""
    if label not in OPERATOR_LABELS:
        raise ValueError(f"label must be one of {OPERATOR_LABELS}")
    if label.startswith("s"):
        axis = label[1]
        site = n_sites // 2
        return pauli_matrix(PauliString.single_site(axis, site, n_sites))
    return collective_spin(label[1].lower(), n_sites)


def mean_size_trace(
    spec: HamiltonianSpec,
    params: RampParams,
    a0_label: str,
    samples_per_leg: int = 50,
) -> list:
    """Size distributions of a Heisenberg-evolved operator along a ramp.

    The operator is conjugated through checkpointed unitaries of the
    full-space evolution (Pauli strings mix the parity sectors, so no
    sector restriction applies). The t = 0 distribution is included.
    """
    if spec.n_sites > MAX_PROJECTION_SITES:
        raise CapacityError(
            f"n_sites={spec.n_sites} exceeds projection capacity "
            f"{MAX_PROJECTION_SITES}"
        )
    a0 = initial_operator(a0_label, spec.n_sites)
    series = [operator_size_distribution(a0, t=0.0, label=a0_label)]

    def hook(t: float, s: float, u: np.ndarray) -> None:
        a_t = heisenberg_conjugate(a0, u)
        series.append(operator_size_distribution(a_t, t=t, label=a0_label))

    stride = max(params.steps_forward // samples_per_leg, 1)
    evolve_ramp(spec, params, checkpoint_stride=stride, checkpoint_hook=hook)
    return series
