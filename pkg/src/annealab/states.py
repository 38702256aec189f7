"""Initial-state families, fidelities, reduced density matrices and
half-chain entanglement entropy, plus the ramp sweeps built from them.

All entropies are in natural-log units, so a Haar-random pure state of N
qubits sits at the Page value (N/2) ln 2 - 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence

import numpy as np

from .evolution import RampParams, apply_schedule_to_states, evolve_states, schedule_samples
from .model import HamiltonianSpec, ParitySector, is_reflection_symmetric, parity_sector

TRACE_TOL = 1e-8
EIGENVALUE_FLOOR = 1e-14


def spin_coherent_state(theta: float, phi: float, n_sites: int) -> np.ndarray:
    """Product state with every spin along the Bloch direction (theta, phi).

    The single-site spinor is cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>,
    so <H_M> = N sin(theta) cos(phi); phi = 0 gives |+>^N and phi = pi
    gives |->^N, the extremal eigenstates of the mixer.
    """
    if not 0.0 <= theta <= np.pi:
        raise ValueError("theta must lie in [0, pi]")
    spinor = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    out = np.array([1.0 + 0.0j])
    for _ in range(n_sites):
        out = np.kron(out, spinor)
    return out


def dicke_state(k: int, n_sites: int) -> np.ndarray:
    """Uniform superposition of all products with k spins |+> and N-k |->.

    Eigenstate of H_M with eigenvalue 2k - N; k = 0 is |->^N and k = N is
    |+>^N. Amplitudes depend on the computational weight w only, through
    the Krawtchouk sum K_k(w) = sum_j (-1)^j C(w,j) C(N-w, k-j).
    """
    if not 0 <= k <= n_sites:
        raise ValueError(f"k={k} outside [0, {n_sites}]")
    n = n_sites
    # <b|state> ~ (-1)^{w(b)} sum over the C(N,k) site subsets; |-> on a
    # site contributes a (-1) per set bit outside the subset.
    amp_by_weight = np.zeros(n + 1)
    for w in range(n + 1):
        amp_by_weight[w] = (-1) ** w * sum(
            (-1) ** j * comb(w, j) * comb(n - w, k - j)
            for j in range(max(0, k - (n - w)), min(w, k) + 1)
        )
    idx = np.arange(1 << n)
    vec = amp_by_weight[np.bitwise_count(idx)].astype(complex)
    return vec / np.linalg.norm(vec)


def fidelity(psi: np.ndarray, chi: np.ndarray) -> float:
    """Squared overlap |<psi|chi>|^2."""
    if psi.shape != chi.shape:
        raise ValueError("states have different dimensions")
    return float(np.abs(np.vdot(psi, chi)) ** 2)


def reduced_density_matrix(psi: np.ndarray, cut: int) -> np.ndarray:
    """Trace out everything right of ``cut``; returns a 2^cut density matrix."""
    dim = psi.shape[0]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ValueError("state length is not a power of two")
    if not 1 <= cut <= n - 1:
        raise ValueError(f"cut={cut} outside [1, {n - 1}]")
    m = psi.reshape(1 << cut, 1 << (n - cut))
    return m @ m.conj().T


def entanglement_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy -tr(rho ln rho) of a density matrix."""
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"trace {tr} deviates from 1 beyond {TRACE_TOL}")
    if np.abs(rho - rho.conj().T).max() > TRACE_TOL:
        raise ValueError("density matrix is not Hermitian")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -TRACE_TOL:
        raise ValueError(f"negative eigenvalue {evals.min()}")
    p = evals[evals > EIGENVALUE_FLOOR]
    return float(-(p * np.log(p)).sum())


def half_chain_entropy(psi: np.ndarray, cut: Optional[int] = None) -> float:
    """Entanglement entropy of a pure state across ``cut`` (default N//2).

    Schmidt route: squared singular values of the reshaped amplitude
    matrix; identical to the eigenvalues of the reduced density matrix.
    """
    dim = psi.shape[0]
    n = dim.bit_length() - 1
    if cut is None:
        cut = n // 2
    m = psi.reshape(1 << cut, 1 << (n - cut))
    p = np.linalg.svd(m, compute_uv=False) ** 2
    p = p[p > EIGENVALUE_FLOOR]
    return float(-(p * np.log(p)).sum())


def page_value(n_sites: int) -> float:
    """Expected half-chain entropy of a Haar-random pure state."""
    return (n_sites / 2) * np.log(2) - 0.5


def ground_subspace_overlap(
    h: np.ndarray, psi: np.ndarray, degeneracy_tol: float = 1e-8
) -> float:
    """Total weight of a state on the (possibly degenerate) ground space."""
    h = np.asarray(h)
    if h.ndim == 1:
        values = h
        e0 = values.min()
        sel = values < e0 + degeneracy_tol
        return float(np.sum(np.abs(psi[sel]) ** 2))
    w, v = np.linalg.eigh(h)
    sel = w < w[0] + degeneracy_tol
    amps = v[:, sel].conj().T @ psi
    return float(np.sum(np.abs(amps) ** 2))


# ---------------------------------------------------------------------------
# ramp sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EntropyRecord:
    label: float
    energy_density: float
    entropy: float
    n_sites: int
    fidelity: Optional[float] = None


def _sector_or_none(spec: HamiltonianSpec, use_sector: bool) -> Optional[ParitySector]:
    if use_sector and is_reflection_symmetric(spec):
        return parity_sector(spec, +1)
    return None


def scs_sweep(
    spec: HamiltonianSpec,
    params: RampParams,
    phi_grid: Sequence[float],
    use_sector: bool = True,
) -> list:
    """Evolve the spin-coherent family |pi/2, phi> through the ramp.

    Returns one record per phi with the initial energy density
    <H_M>/N = cos(phi), the final half-chain entropy, and, for cyclic
    ramps, the return fidelity |<psi(2T)|psi(0)>|^2.
    """
    phi_grid = np.asarray(phi_grid, dtype=float)
    sector = _sector_or_none(spec, use_sector)
    full0 = np.stack(
        [spin_coherent_state(np.pi / 2, phi, spec.n_sites) for phi in phi_grid],
        axis=1,
    )
    block0 = sector.project(full0) if sector is not None else full0
    block_t = evolve_states(spec, params, block0, sector=sector)
    full_t = sector.embed(block_t) if sector is not None else block_t
    records = []
    for i, phi in enumerate(phi_grid):
        fid = None
        if params.kind == "cyclic":
            fid = float(np.abs(np.vdot(block0[:, i], block_t[:, i])) ** 2)
        records.append(
            EntropyRecord(
                label=float(phi),
                energy_density=float(np.cos(phi)),
                entropy=half_chain_entropy(full_t[:, i]),
                n_sites=spec.n_sites,
                fidelity=fid,
            )
        )
    return records


@dataclass(frozen=True)
class DickeRecord:
    k: int
    energy_density: float
    entropy_forward: float
    entropy_cyclic: float
    fidelity_cyclic: float
    n_sites: int


def dicke_sweep(spec: HamiltonianSpec, params: RampParams, use_sector: bool = True) -> list:
    """Evolve every Dicke state through the forward and cyclic ramps.

    One pass: the forward leg yields S_A(T), continuing through the
    backward leg yields S_A(2T) and the return fidelity.
    """
    n = spec.n_sites
    sector = _sector_or_none(spec, use_sector)
    forward = RampParams(kind="forward", T=params.T, dt=params.dt)
    full0 = np.stack([dicke_state(k, n) for k in range(n + 1)], axis=1)
    block0 = sector.project(full0) if sector is not None else full0
    block_T = evolve_states(spec, forward, block0, sector=sector)
    cyclic = RampParams(kind="cyclic", T=params.T, dt=params.dt)
    backward_s = schedule_samples(cyclic)[forward.steps_forward:]
    block_2T = apply_schedule_to_states(spec, backward_s, params.dt, block_T, sector=sector)
    full_T = sector.embed(block_T) if sector is not None else block_T
    full_2T = sector.embed(block_2T) if sector is not None else block_2T
    records = []
    for k in range(n + 1):
        records.append(
            DickeRecord(
                k=k,
                energy_density=float((2 * k - n) / n),
                entropy_forward=half_chain_entropy(full_T[:, k]),
                entropy_cyclic=half_chain_entropy(full_2T[:, k]),
                fidelity_cyclic=float(
                    np.abs(np.vdot(block0[:, k], block_2T[:, k])) ** 2
                ),
                n_sites=n,
            )
        )
    return records
