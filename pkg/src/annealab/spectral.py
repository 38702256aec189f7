"""Level-spacing statistics for Hermitian and unitary spectra, gap
profiles along the interpolation, and the adiabatic-time bound.

Spacing ratios are stored in the min/max convention, r in [0, 1], whose
reference means are about 0.535 for GOE spectra, 0.529 for COE
eigenphases and 2 ln 2 - 1 = 0.386 for uncorrelated (Poisson) levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyStatisticsError
from .model import (
    HamiltonianSpec,
    interpolated_hamiltonian,
    mixer_hamiltonian,
    parity_sector,
    problem_hamiltonian,
    restrict,
)

GOE_MLSR = 0.535
COE_MLSR = 0.529
POISSON_MLSR = 2 * np.log(2) - 1

# gaps below this fraction of the spectral width count as degenerate
DEGENERACY_TOL_FACTOR = 1e-10

MIN_RETAINED_LEVELS = 10


def level_spacings(values: np.ndarray) -> np.ndarray:
    """Consecutive differences of a sorted spectrum."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("need at least two levels")
    if np.any(np.diff(values) < 0):
        raise ValueError("values must be sorted ascending")
    return np.diff(values)


def spacing_ratios(
    gaps: np.ndarray,
    degeneracy_tol: float = 0.0,
    cyclic: bool = False,
    return_skipped: bool = False,
):
    """min/max ratio of adjacent gap pairs, skipping degenerate pairs.

    With ``cyclic`` the last gap is also paired with the first, which makes
    the ratio multiset invariant under rigid rotations of eigenphases.
    """
    gaps = np.asarray(gaps, dtype=float)
    if gaps.size < 2:
        raise ValueError("need at least two gaps")
    left = gaps
    right = np.roll(gaps, -1)
    if not cyclic:
        left, right = gaps[:-1], gaps[1:]
    keep = (left > degeneracy_tol) & (right > degeneracy_tol)
    skipped = int(np.size(keep) - np.count_nonzero(keep))
    if not np.any(keep):
        raise EmptyStatisticsError("every spacing pair is degenerate")
    ratios = np.minimum(left[keep], right[keep]) / np.maximum(left[keep], right[keep])
    if return_skipped:
        return ratios, skipped
    return ratios


@dataclass(frozen=True)
class SpectrumResult:
    values: np.ndarray
    gaps: np.ndarray
    ratios: np.ndarray
    mlsr: float
    degenerate_fraction: float = 0.0


def spectrum_result(values: np.ndarray) -> SpectrumResult:
    """Package a sorted spectrum with its gaps, ratios and MLSR."""
    values = np.sort(np.asarray(values, dtype=float))
    gaps = level_spacings(values)
    tol = DEGENERACY_TOL_FACTOR * (values[-1] - values[0])
    ratios, skipped = spacing_ratios(gaps, degeneracy_tol=tol, return_skipped=True)
    return SpectrumResult(
        values=values,
        gaps=gaps,
        ratios=ratios,
        mlsr=float(ratios.mean()),
        degenerate_fraction=skipped / max(len(gaps) - 1, 1),
    )


def mlsr_hermitian(h: np.ndarray, bulk_trim: float = 0.05) -> float:
    """Bulk mean level spacing ratio of a Hermitian matrix.

    The lowest and highest ``bulk_trim`` fraction of levels are dropped
    before ratios are formed.
    """
    values = np.linalg.eigvalsh(h)
    drop = int(len(values) * bulk_trim)
    kept = values[drop: len(values) - drop] if drop else values
    if len(kept) < MIN_RETAINED_LEVELS:
        raise ValueError(f"only {len(kept)} levels retained after trimming")
    tol = DEGENERACY_TOL_FACTOR * (kept[-1] - kept[0])
    ratios = spacing_ratios(level_spacings(kept), degeneracy_tol=tol)
    return float(ratios.mean())


def unitary_eigenphases(u: np.ndarray) -> np.ndarray:
    """Sorted eigenphases mu in [0, 2 pi), with U |mu> = e^{-i mu} |mu>."""
    w = np.linalg.eigvals(u)
    return np.sort(np.mod(-np.angle(w), 2 * np.pi))


def mlsr_unitary(u: np.ndarray, check: bool = True) -> float:
    """Mean spacing ratio over all eigenphases, wraparound gap included."""
    if check:
        dim = u.shape[0]
        probe = u.conj().T @ u
        if np.abs(probe - np.eye(dim)).max() > 1e-8:
            raise ValueError("matrix is not unitary")
    phases = unitary_eigenphases(u)
    gaps = np.append(np.diff(phases), 2 * np.pi - phases[-1] + phases[0])
    ratios = spacing_ratios(
        gaps, degeneracy_tol=DEGENERACY_TOL_FACTOR * 2 * np.pi, cyclic=True
    )
    return float(ratios.mean())


def gap_profile(
    spec: HamiltonianSpec, s_grid: Sequence[float], sector_sign: int = +1
) -> dict:
    """Ground gap Delta_0(s) and mean gap over the sector spectrum.

    Returns arrays keyed ``s``, ``delta0`` and ``delta_avg``; the mean gap
    equals the spectral width divided by the level count minus one.
    """
    sector = parity_sector(spec, sector_sign)
    s_grid = np.asarray(s_grid, dtype=float)
    delta0 = np.empty_like(s_grid)
    delta_avg = np.empty_like(s_grid)
    for i, s in enumerate(s_grid):
        h = restrict(interpolated_hamiltonian(spec, s), sector)
        values = np.linalg.eigvalsh(h)
        gaps = np.diff(values)
        delta0[i] = gaps[0]
        delta_avg[i] = gaps.mean()
    return {"s": s_grid, "delta0": delta0, "delta_avg": delta_avg}


def adiabatic_time_bound(
    spec: HamiltonianSpec,
    s_grid: Sequence[float],
    level: int = 0,
    sector_sign: int = +1,
    gap_mode: str = "adjacent",
    degeneracy_tol: float = 1e-8,
) -> float:
    """max over the grid of |<k| dH/ds |n>| / gap(n, k)^2.

    With the linear interpolation dH/ds = H_P - H_M is constant. The gap
    entering the bound couples level n to its neighbors k = n +- 1
    (``adjacent``), or to every other level (``all``).
    """
    if gap_mode not in ("adjacent", "all"):
        raise ValueError("gap_mode must be 'adjacent' or 'all'")
    sector = parity_sector(spec, sector_sign)
    dh = restrict(problem_hamiltonian(spec) - mixer_hamiltonian(spec), sector)
    bound = 0.0
    for s in np.asarray(s_grid, dtype=float):
        h = restrict(interpolated_hamiltonian(spec, s), sector)
        values, vectors = np.linalg.eigh(h)
        neighbors = np.abs(values - values[level])
        neighbors[level] = np.inf
        if neighbors.min() < degeneracy_tol:
            raise ValueError(f"level {level} degenerate at s={s}")
        coupling = vectors.conj().T @ (dh @ vectors[:, level])
        if gap_mode == "adjacent":
            candidates = [k for k in (level - 1, level + 1) if 0 <= k < len(values)]
        else:
            candidates = [k for k in range(len(values)) if k != level]
        for k in candidates:
            gap = values[k] - values[level]
            bound = max(bound, abs(coupling[k]) / gap**2)
    return float(bound)


# ---------------------------------------------------------------------------
# seeded reference ensembles
# ---------------------------------------------------------------------------

def sample_goe(dim: int, seed: int) -> np.ndarray:
    """Real symmetric matrix with GOE statistics."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim))
    return (a + a.T) / 2.0


def sample_haar_unitary(dim: int, rng) -> np.ndarray:
    """Haar unitary via QR of a complex Gaussian matrix with phase fix."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def sample_coe(dim: int, seed: int) -> np.ndarray:
    """Symmetric unitary W^T W with W Haar; eigenphases follow the COE."""
    w = sample_haar_unitary(dim, np.random.default_rng(seed))
    return w.T @ w


def sample_poisson_diagonal(dim: int, seed: int) -> np.ndarray:
    """Diagonal matrix with i.i.d. uniform entries (uncorrelated levels)."""
    rng = np.random.default_rng(seed)
    return np.diag(rng.uniform(0.0, 1.0, size=dim))
