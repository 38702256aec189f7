"""Eigenvector structure of ramp unitaries: entanglement vs mean energy,
the chaos-onset time along a forward ramp, and the system-size scaling
regression of window-averaged entropies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .evolution import RampParams, evolve_ramp
from .model import HamiltonianSpec, ParitySector
from .spectral import COE_MLSR, mlsr_unitary
from .states import half_chain_entropy

DEGENERATE_PHASE_TOL = 1e-10


@dataclass(frozen=True)
class EigenProfile:
    """Per-eigenvector records of a unitary, sorted by eigenphase."""

    eigenphases: np.ndarray
    mean_energies: np.ndarray
    entropies: np.ndarray
    degenerate: np.ndarray
    reference: str
    n_sites: int

    def __len__(self) -> int:
        return len(self.eigenphases)

    @property
    def energy_densities(self) -> np.ndarray:
        return self.mean_energies / self.n_sites


def eigenprofile(
    u: np.ndarray,
    h_ref: np.ndarray,
    sector: Optional[ParitySector] = None,
    reference: str = "",
) -> EigenProfile:
    """Diagonalize a unitary and profile its eigenvectors.

    Uses the complex Schur form, whose columns are orthonormal even inside
    near-degenerate phase clusters. Each eigenvector contributes its mean
    energy w.r.t. ``h_ref`` (given in the same sector as U) and its
    half-chain entropy after embedding into the full chain.

    Eigenvectors whose phase separation from a neighbor falls below
    1e-10 are flagged; their entanglement is basis-dependent.
    """
    if u.shape != h_ref.shape:
        raise ValueError("unitary and reference Hamiltonian dims differ")
    t, q = sla.schur(u, output="complex")
    phases = np.mod(-np.angle(np.diag(t)), 2 * np.pi)
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    q = q[:, order]
    mean_energies = np.real(np.einsum("ij,jk,ki->i", q.conj().T, h_ref, q))
    entropies = np.empty(len(phases))
    for i in range(len(phases)):
        vec = q[:, i]
        if sector is not None:
            vec = sector.embed(vec)
        entropies[i] = half_chain_entropy(vec)
    spacing = np.diff(phases)
    wrap = 2 * np.pi - phases[-1] + phases[0] if len(phases) > 1 else np.inf
    near = np.append(spacing, wrap) < DEGENERATE_PHASE_TOL
    degenerate = near | np.roll(near, 1)
    if sector is not None:
        n_sites = sector.n_sites
    else:
        n_sites = u.shape[0].bit_length() - 1
    return EigenProfile(
        eigenphases=phases,
        mean_energies=mean_energies,
        entropies=entropies,
        degenerate=degenerate,
        reference=reference,
        n_sites=n_sites,
    )


@dataclass(frozen=True)
class OnsetResult:
    found: bool
    t_star: Optional[float]
    s_star: Optional[float]
    trace: tuple = field(repr=False, default=())


def chaos_onset(
    spec: HamiltonianSpec,
    params: RampParams,
    sector: Optional[ParitySector] = None,
    band_halfwidth: float = 0.01,
    checkpoint_stride: Optional[int] = None,
    stay: int = 3,
) -> OnsetResult:
    """First checkpoint where the ramp unitary's MLSR sits in the COE band.

    The eigenphase MLSR is evaluated at every checkpoint of the forward
    ramp (default stride q/100); the onset is the earliest checkpoint that
    lands inside [COE - delta, COE + delta] and stays inside for the next
    ``stay`` checkpoints. When the trajectory never satisfies that, the
    result carries found=False and the full (t, s, mlsr) trace.
    """
    if params.kind != "forward":
        raise ValueError("chaos onset is defined along a forward ramp")
    if checkpoint_stride is None:
        checkpoint_stride = max(params.q // 100, 1)
    trace: list = []

    def hook(t: float, s: float, u: np.ndarray) -> None:
        trace.append((t, s, mlsr_unitary(u, check=False)))

    evolve_ramp(
        spec,
        params,
        sector=sector,
        checkpoint_stride=checkpoint_stride,
        checkpoint_hook=hook,
    )
    lo, hi = COE_MLSR - band_halfwidth, COE_MLSR + band_halfwidth
    inside = [lo <= r <= hi for _, _, r in trace]
    for i in range(len(trace) - stay):
        if all(inside[i: i + stay + 1]):
            t_star, s_star, _ = trace[i]
            return OnsetResult(True, t_star, s_star, tuple(trace))
    return OnsetResult(False, None, None, tuple(trace))


@dataclass(frozen=True)
class ScalingFit:
    """Linear fits S(N) = a N + b of window-averaged entropies."""

    centers: np.ndarray
    window_width: float
    slopes: np.ndarray
    intercepts: np.ndarray
    residuals: np.ndarray
    counts: dict


def scaling_regression(
    profiles: Mapping[int, EigenProfile],
    bin_width_init: float = 0.05,
) -> ScalingFit:
    """Regress window-averaged eigenvector entropies against system size.

    Windows are centered on a fixed grid over the energy-density axis
    [-1, 1] with spacing ``bin_width_init``; the window width starts at the
    same value and doubles until every window holds at least one
    eigenvector for every size. Degenerate-flagged eigenvectors are
    excluded.
    """
    if len(profiles) < 3:
        raise ValueError("need at least three system sizes")
    data = {}
    for n, prof in profiles.items():
        keep = ~prof.degenerate
        data[n] = (prof.energy_densities[keep], prof.entropies[keep])
    centers = np.round(np.arange(-1.0, 1.0 + 1e-9, bin_width_init), 12)
    width = bin_width_init
    while True:
        means = {}
        counts = {}
        complete = True
        for n, (ed, ent) in data.items():
            m = np.empty(len(centers))
            c = np.empty(len(centers), dtype=int)
            for i, center in enumerate(centers):
                sel = np.abs(ed - center) <= width / 2 + 1e-12
                c[i] = int(sel.sum())
                if c[i] == 0:
                    complete = False
                    break
                m[i] = ent[sel].mean()
            if not complete:
                break
            means[n] = m
            counts[n] = c
        if complete:
            break
        width *= 2
        if width > 4.0:
            raise RuntimeError("window adaptation failed to populate all bins")
    sizes = np.array(sorted(data))
    design = np.vstack([sizes, np.ones_like(sizes)]).T.astype(float)
    slopes = np.empty(len(centers))
    intercepts = np.empty(len(centers))
    residuals = np.empty(len(centers))
    for i in range(len(centers)):
        y = np.array([means[n][i] for n in sizes])
        coef, res, *_ = np.linalg.lstsq(design, y, rcond=None)
        slopes[i], intercepts[i] = coef
        residuals[i] = float(res[0]) if res.size else 0.0
    return ScalingFit(
        centers=centers,
        window_width=width,
        slopes=slopes,
        intercepts=intercepts,
        residuals=residuals,
        counts=counts,
    )
