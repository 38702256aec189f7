"""Discretized annealing evolution: schedules, step propagators, ramp
unitaries, Heisenberg conjugation and checkpoint persistence.

The ramp unitary is the ordered product U = prod_m exp(-i dt H(s_m)) with
s sampled at the left edge of each step, s_m = s(m dt). A cyclic ramp is
assembled as U(2T) = U_BW @ U_FW from the two legs, so the composition
identity holds bitwise. State blocks can be pushed through the same
schedule without materializing any propagator via a Chebyshev expansion
of each step exponential.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from .model import (
    HamiltonianSpec,
    ParitySector,
    mixer_hamiltonian_sparse,
    problem_diagonal,
    restrict_sparse,
)

UNITARITY_TOL = 1e-10

# Dense propagators at sector dimension d cost 16 d^2 bytes each; the cache
# stops storing once this budget is reached and later steps recompute.
DEFAULT_CACHE_BYTES = 1_500_000_000


@dataclass(frozen=True)
class RampParams:
    """Schedule kind, one-way time T, step dt; q = T_tot/dt steps total."""

    kind: str
    T: float
    dt: float

    def __post_init__(self):
        if self.kind not in ("forward", "cyclic"):
            raise ValueError("kind must be 'forward' or 'cyclic'")
        if self.T <= 0 or self.dt <= 0:
            raise ValueError("T and dt must be positive")
        if self.dt >= 1:
            raise ValueError("dt must be smaller than 1")
        ratio = self.T / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("T/dt must be an integer")

    @property
    def steps_forward(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def total_time(self) -> float:
        return self.T if self.kind == "forward" else 2 * self.T

    @property
    def q(self) -> int:
        """Total number of discretization steps."""
        return self.steps_forward * (1 if self.kind == "forward" else 2)


def schedule_value(t: float, params: RampParams) -> float:
    """s(t): t/T on the way up, (2T-t)/T on the way back."""
    if t < -1e-12 or t > params.total_time + 1e-12:
        raise ValueError(f"t={t} outside [0, {params.total_time}]")
    if t <= params.T:
        return t / params.T
    return (2 * params.T - t) / params.T


def schedule_samples(params: RampParams) -> np.ndarray:
    """Left-edge schedule values s(m dt) for m = 0..q-1."""
    qf = params.steps_forward
    fw = np.arange(qf) / qf
    if params.kind == "forward":
        return fw
    bw = (2 * qf - np.arange(qf, 2 * qf)) / qf
    return np.concatenate([fw, bw])


def step_propagator(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i dt H) through the eigendecomposition H = V E V^dag."""
    h = np.asarray(h)
    if np.iscomplexobj(h):
        w, v = np.linalg.eigh(h)
        return (v * np.exp(-1j * dt * w)) @ v.conj().T
    w, v = np.linalg.eigh(h)  # real symmetric: orthogonal V, cheaper solve
    return (v * np.exp(-1j * dt * w)) @ v.T


class PropagatorCache:
    """Step propagators keyed by schedule value, with a byte budget.

    The cyclic backward leg revisits the forward grid, so hits there halve
    the eigendecomposition count whenever the budget allows.
    """

    def __init__(self, max_bytes: int = DEFAULT_CACHE_BYTES):
        self.max_bytes = max_bytes
        self._store: dict = {}
        self._bytes = 0
        self.hits = 0
        self.misses = 0

    def get(self, s: float):
        p = self._store.get(round(s, 12))
        if p is None:
            self.misses += 1
        else:
            self.hits += 1
        return p

    def put(self, s: float, propagator: np.ndarray) -> None:
        if self._bytes + propagator.nbytes > self.max_bytes:
            return
        self._store[round(s, 12)] = propagator
        self._bytes += propagator.nbytes


@dataclass(frozen=True)
class Checkpoint:
    t: float
    s: float
    unitary: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class RampResult:
    unitary: np.ndarray = field(repr=False)
    schedule_trace: np.ndarray = field(repr=False)
    checkpoints: tuple = ()


class _HamiltonianGrid:
    """Dense H(s) on demand from two fixed endpoint matrices."""

    def __init__(self, spec: HamiltonianSpec, sector: Optional[ParitySector]):
        hm = mixer_hamiltonian_sparse(spec)
        hp = sp.diags(problem_diagonal(spec)).tocsr()
        if sector is not None:
            hm = restrict_sparse(hm, sector)
            hp = restrict_sparse(hp, sector)
        self.hm = hm.toarray()
        self.hp = hp.toarray()
        self.hm_sparse = hm.tocsr().astype(np.complex128)
        self.hp_sparse = hp.tocsr().astype(np.complex128)
        self.dim = self.hm.shape[0]
        # uniform spectral-radius bound over s in [0, 1]
        self.radius = 1.01 * max(
            float(np.abs(hm).sum(axis=1).max()),
            float(np.abs(hp).sum(axis=1).max()),
        )

    def dense(self, s: float) -> np.ndarray:
        return (1.0 - s) * self.hm + s * self.hp

    def sparse(self, s: float) -> sp.csr_matrix:
        return ((1.0 - s) * self.hm_sparse + s * self.hp_sparse).tocsr()


def _accumulate(
    grid: _HamiltonianGrid,
    s_values: np.ndarray,
    dt: float,
    cache: Optional[PropagatorCache],
    on_step: Optional[Callable[[int, np.ndarray], None]] = None,
) -> np.ndarray:
    u = np.eye(grid.dim, dtype=complex)
    for m, s in enumerate(s_values):
        p = cache.get(s) if cache is not None else None
        if p is None:
            p = step_propagator(grid.dense(s), dt)
            if cache is not None:
                cache.put(s, p)
        u = p @ u
        if on_step is not None:
            on_step(m, u)
    return u


def evolve_ramp(
    spec: HamiltonianSpec,
    params: RampParams,
    sector: Optional[ParitySector] = None,
    checkpoint_stride: Optional[int] = None,
    checkpoint_hook: Optional[Callable[[float, float, np.ndarray], None]] = None,
    cache: Optional[PropagatorCache] = None,
) -> RampResult:
    """Accumulate the full ramp unitary U <- exp(-i dt H(s_m)) U.

    Snapshots are taken every ``checkpoint_stride`` steps and at the end of
    each leg; they are stored on the result, or handed to
    ``checkpoint_hook(t, s, U)`` instead when a hook is given. For a cyclic
    ramp the two legs are accumulated separately and composed at the end,
    U(2T) = U_BW @ U_FW.
    """
    if cache is None:
        cache = PropagatorCache()
    grid = _HamiltonianGrid(spec, sector)
    s_all = schedule_samples(params)
    qf = params.steps_forward
    checkpoints: list = []

    def emit(step_index: int, u: np.ndarray) -> None:
        t = (step_index + 1) * params.dt
        s_here = schedule_value(min(t, params.total_time), params)
        if checkpoint_hook is not None:
            checkpoint_hook(t, s_here, u)
        else:
            checkpoints.append(Checkpoint(t=t, s=s_here, unitary=u.copy()))

    want = checkpoint_stride is not None or checkpoint_hook is not None

    def fw_step(m: int, u: np.ndarray) -> None:
        if not want:
            return
        stride = checkpoint_stride or qf
        if (m + 1) % stride == 0 or m + 1 == qf:
            emit(m, u)

    u_fw = _accumulate(grid, s_all[:qf], params.dt, cache, fw_step)
    if params.kind == "forward":
        return RampResult(
            unitary=u_fw, schedule_trace=s_all, checkpoints=tuple(checkpoints)
        )

    def bw_step(m: int, u_bw_partial: np.ndarray) -> None:
        if not want:
            return
        stride = checkpoint_stride or qf
        if (m + 1) % stride == 0 or m + 1 == qf:
            emit(qf + m, u_bw_partial @ u_fw)

    u_bw = _accumulate(grid, s_all[qf:], params.dt, cache, bw_step)
    return RampResult(
        unitary=u_bw @ u_fw, schedule_trace=s_all, checkpoints=tuple(checkpoints)
    )


def evolve_schedule(
    spec: HamiltonianSpec,
    s_values: Sequence[float],
    dt: float,
    sector: Optional[ParitySector] = None,
    cache: Optional[PropagatorCache] = None,
) -> np.ndarray:
    """Ordered product of step propagators over an explicit s sequence."""
    grid = _HamiltonianGrid(spec, sector)
    return _accumulate(grid, np.asarray(s_values, dtype=float), dt, cache)


# ---------------------------------------------------------------------------
# state-block evolution without dense propagators
# ---------------------------------------------------------------------------

def _chebyshev_coefficients(theta: float, tol: float = 1e-16) -> np.ndarray:
    k_max = int(theta) + 60
    ks = np.arange(k_max + 1)
    bess = jv(ks, theta)
    keep = np.nonzero(np.abs(bess) > tol)[0]
    n_terms = max(int(keep.max()) + 1 if keep.size else 1, 2)
    coef = bess[:n_terms] * (2.0 * (-1j) ** ks[:n_terms])
    coef[0] /= 2.0
    return coef


def _chebyshev_apply(
    h: sp.csr_matrix, block: np.ndarray, scale: float, coef: np.ndarray
) -> np.ndarray:
    """coef-weighted Chebyshev sum approximating exp(-i dt H) on a block."""
    t_prev = block
    t_cur = (h @ block) / scale
    out = coef[0] * t_prev + coef[1] * t_cur
    for k in range(2, len(coef)):
        t_next = 2.0 * (h @ t_cur) / scale - t_prev
        out += coef[k] * t_next
        t_prev, t_cur = t_cur, t_next
    return out


def apply_schedule_to_states(
    spec: HamiltonianSpec,
    s_values: Sequence[float],
    dt: float,
    states: np.ndarray,
    sector: Optional[ParitySector] = None,
) -> np.ndarray:
    """Apply the step exponentials of an explicit s sequence to a block."""
    grid = _HamiltonianGrid(spec, sector)
    block = np.asarray(states, dtype=complex)
    squeeze = block.ndim == 1
    if squeeze:
        block = block[:, None]
    if block.shape[0] != grid.dim:
        raise ValueError(
            f"state dimension {block.shape[0]} does not match {grid.dim}"
        )
    coef = _chebyshev_coefficients(dt * grid.radius)
    for s in s_values:
        block = _chebyshev_apply(grid.sparse(s), block, grid.radius, coef)
    return block[:, 0] if squeeze else block


def evolve_states(
    spec: HamiltonianSpec,
    params: RampParams,
    states: np.ndarray,
    sector: Optional[ParitySector] = None,
) -> np.ndarray:
    """Push a block of state columns through the ramp.

    Equivalent to evolve_ramp(...).unitary @ states, but each step applies
    a converged Chebyshev expansion of exp(-i dt H(s_m)) with sparse
    matrix-vector products, so large sweeps stay cheap.
    """
    return apply_schedule_to_states(
        spec, schedule_samples(params), params.dt, states, sector=sector
    )


def heisenberg_conjugate(a: np.ndarray, u: np.ndarray) -> np.ndarray:
    """A(t) = U^dag A U; preserves Hermiticity, trace and tr(A^2)."""
    if a.shape != u.shape:
        raise ValueError(f"operator shape {a.shape} != unitary shape {u.shape}")
    return u.conj().T @ a @ u


# ---------------------------------------------------------------------------
# checkpoint persistence
# ---------------------------------------------------------------------------

def ramp_hash(spec: HamiltonianSpec, params: RampParams) -> str:
    doc = {
        "spec": spec.to_json_dict(),
        "kind": params.kind,
        "T": params.T,
        "dt": params.dt,
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def save_checkpoints(
    result: RampResult,
    directory,
    spec: HamiltonianSpec,
    params: RampParams,
) -> Path:
    """Write checkpoint unitaries as .npy plus a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, cp in enumerate(result.checkpoints):
        name = f"checkpoint_{k:05d}.npy"
        np.save(directory / name, cp.unitary)
        entries.append({"file": name, "t": cp.t, "s": cp.s})
    manifest = {
        "dims": list(result.unitary.shape),
        "params_hash": ramp_hash(spec, params),
        "checkpoints": entries,
    }
    path = directory / "checkpoints.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def load_checkpoints(directory) -> list:
    directory = Path(directory)
    manifest = json.loads((directory / "checkpoints.json").read_text())
    out = []
    for entry in manifest["checkpoints"]:
        u = np.load(directory / entry["file"])
        out.append(Checkpoint(t=entry["t"], s=entry["s"], unitary=u))
    return out
