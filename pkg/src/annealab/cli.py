"""Reproducible experiment driver.

``annealab run config.json --out DIR`` executes one named experiment and
writes figure-ready CSV files plus a JSON run manifest;
``annealab estimate config.json`` prints the predicted matrix dimensions,
step counts and memory without running anything. Exit codes: 0 success,
2 malformed configuration, 3 capacity violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .eigenstates import chaos_onset, eigenprofile, scaling_regression
from .errors import CapacityError, ConfigError
from .evolution import RampParams, evolve_ramp
from .model import (
    HamiltonianSpec,
    mixer_hamiltonian,
    parity_sector,
    positive_sector_dimension,
    problem_hamiltonian,
    restrict,
)
from .pauli import MAX_DENSE_SITES
from .scrambling import MAX_PROJECTION_SITES, OPERATOR_LABELS, mean_size_trace
from .spectral import gap_profile, mlsr_hermitian, mlsr_unitary
from .states import dicke_sweep, scs_sweep

EXPERIMENTS = (
    "spectrum",
    "gaps",
    "scs-sweep",
    "dicke-sweep",
    "ramp-unitary-mlsr",
    "eigenstates",
    "scramble",
)

# dt presets: fine steps for state-level runs, coarse for unitary spectra
STATE_DT = 0.05
UNITARY_DT = 0.5

_STATE_EXPERIMENTS = ("scs-sweep", "dicke-sweep", "scramble")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    sizes: tuple
    model: Optional[dict] = None
    ramp_kind: str = "forward"
    T: Optional[float] = None
    dt: Optional[float] = None
    grid: tuple = (0.01, 0.99, 50)
    phi_points: int = 21
    ref: str = "HP"
    op: str = "sy_i0"
    sector: str = "+"
    seed: int = 0
    checkpoint_stride: Optional[int] = None
    samples_per_leg: int = 50
    bulk_trim: float = 0.05

    def spec_for(self, n: int) -> HamiltonianSpec:
        if self.model is None:
            return HamiltonianSpec(n_sites=n)
        doc = dict(self.model)
        doc["n_sites"] = n
        return HamiltonianSpec.from_json_dict(doc)

    def ramp_for(self, n: int) -> RampParams:
        t_total = self.T if self.T is not None else 3.0 * n * n
        if self.dt is not None:
            dt = self.dt
        else:
            dt = STATE_DT if self.experiment in _STATE_EXPERIMENTS else UNITARY_DT
        return RampParams(kind=self.ramp_kind, T=t_total, dt=dt)

    def canonical(self) -> dict:
        doc = asdict(self)
        doc["sizes"] = list(self.sizes)
        doc["grid"] = list(self.grid)
        return doc


def config_hash(config: ExperimentConfig) -> str:
    text = json.dumps(config.canonical(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a JSON document; errors carry the offending field path."""
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    experiment = doc.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {EXPERIMENTS}, got {experiment!r}")
    known = {
        "experiment", "sizes", "N", "model", "ramp", "grid", "phi_points",
        "ref", "op", "sector", "seed", "checkpoint_stride", "samples_per_leg",
        "bulk_trim",
    }
    for key in doc:
        if key not in known:
            raise ConfigError(f"{key}: unknown field")
    sizes = doc.get("sizes")
    if sizes is None:
        if "N" in doc:
            sizes = [doc["N"]]
        else:
            raise ConfigError("sizes: required (or give N)")
    if not isinstance(sizes, (list, tuple)) or not sizes:
        raise ConfigError("sizes: must be a non-empty list of integers")
    for n in sizes:
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"sizes: invalid entry {n!r}")
    ramp = doc.get("ramp", {})
    if not isinstance(ramp, dict):
        raise ConfigError("ramp: expected an object")
    kind = ramp.get("kind", "cyclic" if experiment == "scramble" else "forward")
    if kind not in ("forward", "cyclic"):
        raise ConfigError(f"ramp.kind: must be 'forward' or 'cyclic', got {kind!r}")
    for field_name in ("T", "dt"):
        if field_name in ramp and ramp[field_name] is not None:
            if not isinstance(ramp[field_name], (int, float)) or ramp[field_name] <= 0:
                raise ConfigError(f"ramp.{field_name}: must be a positive number")
    grid = doc.get("grid", {"start": 0.01, "stop": 0.99, "num": 50})
    if not isinstance(grid, dict):
        raise ConfigError("grid: expected an object with start/stop/num")
    try:
        grid_t = (float(grid["start"]), float(grid["stop"]), int(grid["num"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from None
    if not (0 <= grid_t[0] <= grid_t[1] <= 1) or grid_t[2] < 1:
        raise ConfigError("grid: need 0 <= start <= stop <= 1 and num >= 1")
    ref = doc.get("ref", "HP")
    if ref not in ("HM", "HP"):
        raise ConfigError(f"ref: must be 'HM' or 'HP', got {ref!r}")
    op = doc.get("op", "sy_i0")
    if op not in OPERATOR_LABELS:
        raise ConfigError(f"op: must be one of {OPERATOR_LABELS}, got {op!r}")
    sector = doc.get("sector", "+")
    if sector not in ("+", "-", "full"):
        raise ConfigError(f"sector: must be '+', '-' or 'full', got {sector!r}")
    phi_points = doc.get("phi_points", 21)
    if not isinstance(phi_points, int) or phi_points < 2:
        raise ConfigError("phi_points: must be an integer >= 2")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed: must be an integer")
    stride = doc.get("checkpoint_stride")
    if stride is not None and (not isinstance(stride, int) or stride < 1):
        raise ConfigError("checkpoint_stride: must be a positive integer")
    samples = doc.get("samples_per_leg", 50)
    if not isinstance(samples, int) or samples < 1:
        raise ConfigError("samples_per_leg: must be a positive integer")
    trim = doc.get("bulk_trim", 0.05)
    if not isinstance(trim, (int, float)) or not 0 <= trim < 0.5:
        raise ConfigError("bulk_trim: must lie in [0, 0.5)")
    model = doc.get("model")
    if model is not None:
        if not isinstance(model, dict):
            raise ConfigError("model: expected an object")
        try:
            HamiltonianSpec.from_json_dict({**model, "n_sites": sizes[0]})
        except CapacityError:
            raise
        except Exception as exc:
            raise ConfigError(f"model: {exc}") from None
    return ExperimentConfig(
        experiment=experiment,
        sizes=tuple(int(n) for n in sizes),
        model=model,
        ramp_kind=kind,
        T=ramp.get("T"),
        dt=ramp.get("dt"),
        grid=grid_t,
        phi_points=phi_points,
        ref=ref,
        op=op,
        sector=sector,
        seed=seed,
        checkpoint_stride=stride,
        samples_per_leg=samples,
        bulk_trim=float(trim),
    )


def check_capacity(config: ExperimentConfig) -> None:
    """Surface capacity violations before any compute starts."""
    for n in config.sizes:
        if n > MAX_DENSE_SITES:
            raise CapacityError(
                f"N={n} exceeds dense-operator capacity {MAX_DENSE_SITES}"
            )
        if config.experiment == "scramble" and n > MAX_PROJECTION_SITES:
            raise CapacityError(
                f"N={n} exceeds Pauli-projection capacity {MAX_PROJECTION_SITES}"
            )


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# experiment bodies: each returns a list of (filename, header, rows)
# ---------------------------------------------------------------------------

def _sector_for(config: ExperimentConfig, spec: HamiltonianSpec):
    if config.sector == "full":
        return None
    return parity_sector(spec, +1 if config.sector == "+" else -1)


def _grid_array(config: ExperimentConfig) -> np.ndarray:
    start, stop, num = config.grid
    return np.linspace(start, stop, num)


def _run_spectrum(config: ExperimentConfig, n: int):
    spec = config.spec_for(n)
    sector = _sector_for(config, spec)
    rows = []
    for s in _grid_array(config):
        from .model import interpolated_hamiltonian

        h = interpolated_hamiltonian(spec, s)
        if sector is not None:
            h = restrict(h, sector)
        rows.append((float(s), mlsr_hermitian(h, bulk_trim=config.bulk_trim)))
    return [(f"mlsr_N{n:02d}.csv", ["s", "mlsr"], rows)]


def _run_gaps(config: ExperimentConfig, n: int):
    spec = config.spec_for(n)
    prof = gap_profile(spec, _grid_array(config))
    rows = list(zip(prof["s"], prof["delta0"], prof["delta_avg"]))
    return [(f"gaps_N{n:02d}.csv", ["s", "delta0", "delta_avg"], rows)]


def _run_scs(config: ExperimentConfig, n: int):
    spec = config.spec_for(n)
    params = config.ramp_for(n)
    phis = np.linspace(0.0, np.pi, config.phi_points)
    records = scs_sweep(spec, params, phis, use_sector=config.sector != "full")
    header = ["phi", "energy_density", "entropy_final"]
    if params.kind == "cyclic":
        header.append("fidelity")
        rows = [(r.label, r.energy_density, r.entropy, r.fidelity) for r in records]
    else:
        rows = [(r.label, r.energy_density, r.entropy) for r in records]
    return [(f"scs_{params.kind}_N{n:02d}.csv", header, rows)]


def _run_dicke(config: ExperimentConfig, n: int):
    spec = config.spec_for(n)
    params = config.ramp_for(n)
    records = dicke_sweep(spec, params, use_sector=config.sector != "full")
    rows = [
        (r.k, r.energy_density, r.entropy_forward, r.entropy_cyclic, r.fidelity_cyclic)
        for r in records
    ]
    header = ["k", "energy_density", "entropy_forward", "entropy_cyclic", "fidelity_cyclic"]
    return [(f"dicke_N{n:02d}.csv", header, rows)]


def _run_ramp_mlsr(config: ExperimentConfig, n: int):
    spec = config.spec_for(n)
    params = config.ramp_for(n)
    sector = _sector_for(config, spec)
    stride = config.checkpoint_stride or max(params.q // 100, 1)
    rows = []

    def hook(t, s, u):
        rows.append((t, s, mlsr_unitary(u, check=False)))

    evolve_ramp(spec, params, sector=sector, checkpoint_stride=stride,
                checkpoint_hook=hook)
    files = [(f"ramp_mlsr_{params.kind}_N{n:02d}.csv", ["t", "s", "mlsr"], rows)]
    if params.kind == "forward":
        onset = chaos_onset(spec, params, sector=sector, checkpoint_stride=stride)
        files.append(
            (
                f"chaos_onset_N{n:02d}.csv",
                ["found", "t_star", "s_star"],
                [(int(onset.found), onset.t_star or -1.0, onset.s_star or -1.0)],
            )
        )
    return files


def _run_eigenstates(config: ExperimentConfig, sizes):
    files = []
    profiles = {}
    for n in sizes:
        spec = config.spec_for(n)
        params = config.ramp_for(n)
        sector = _sector_for(config, spec)
        result = evolve_ramp(spec, params, sector=sector)
        h_ref = problem_hamiltonian(spec) if config.ref == "HP" else mixer_hamiltonian(spec)
        if sector is not None:
            h_ref = restrict(h_ref, sector)
        prof = eigenprofile(result.unitary, h_ref, sector=sector, reference=config.ref)
        profiles[n] = prof
        rows = list(zip(prof.eigenphases, prof.mean_energies, prof.entropies))
        files.append(
            (
                f"eigenprofile_{params.kind}_{config.ref}_N{n:02d}.csv",
                ["eigenphase", "mean_energy", "entropy"],
                rows,
            )
        )
    if len(profiles) >= 3:
        fit = scaling_regression(profiles)
        total_counts = [
            sum(int(fit.counts[n][i]) for n in profiles)
            for i in range(len(fit.centers))
        ]
        rows = list(zip(fit.centers, fit.slopes, fit.intercepts, total_counts))
        files.append(("scaling_fit.csv", ["E_d", "a", "b", "n_points"], rows))
    return files


def _run_scramble(config: ExperimentConfig, n: int):
    spec = config.spec_for(n)
    params = config.ramp_for(n)
    series = mean_size_trace(
        spec, params, config.op, samples_per_leg=config.samples_per_leg
    )
    long_rows = []
    mean_rows = []
    for dist in series:
        t_over = dist.t / params.T
        mean_rows.append((t_over, dist.mean / n))
        for k, p in enumerate(dist.probabilities):
            long_rows.append((t_over, k, p))
    return [
        (f"osd_{config.op}_N{n:02d}.csv", ["t_over_T", "k", "P_k"], long_rows),
        (f"mean_size_{config.op}_N{n:02d}.csv", ["t_over_T", "mu_over_N"], mean_rows),
    ]


_PER_SIZE = {
    "spectrum": _run_spectrum,
    "gaps": _run_gaps,
    "scs-sweep": _run_scs,
    "dicke-sweep": _run_dicke,
    "ramp-unitary-mlsr": _run_ramp_mlsr,
    "scramble": _run_scramble,
}


def run(config: ExperimentConfig, out_dir, threads: int = 1) -> dict:
    """Execute one experiment; returns the manifest dictionary."""
    check_capacity(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    tasks = []
    if config.experiment == "eigenstates":
        file_groups = [_run_eigenstates(config, config.sizes)]
        tasks.append({"name": "eigenstates", "status": "ok"})
    else:
        body = _PER_SIZE[config.experiment]
        if threads > 1 and len(config.sizes) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                file_groups = list(pool.map(lambda n: body(config, n), config.sizes))
        else:
            file_groups = [body(config, n) for n in config.sizes]
        tasks.extend({"name": f"N={n}", "status": "ok"} for n in config.sizes)
    written = []
    for group in file_groups:
        for name, header, rows in group:
            write_csv(out / name, header, rows)
            written.append(name)
    manifest = {
        "config": config.canonical(),
        "config_hash": config_hash(config),
        "tool_version": __version__,
        "wall_time_seconds": time.time() - started,
        "tasks": tasks,
        "output_files": sorted(written),
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def estimate(config: ExperimentConfig) -> dict:
    """Cost report: dimensions, step counts, eigensolves, memory. Never refuses."""
    report = {"experiment": config.experiment, "sizes": []}
    for n in config.sizes:
        dim_full = 2**n
        dim_sector = positive_sector_dimension(n)
        entry = {
            "N": n,
            "dim_full": dim_full,
            "dim_sector_positive": dim_sector,
        }
        if config.experiment in ("spectrum", "gaps"):
            entry["grid_points"] = config.grid[2]
            entry["eigendecompositions"] = config.grid[2]
        elif config.experiment == "scramble":
            params = config.ramp_for(n)
            entry["steps"] = params.q
            entry["eigendecompositions"] = params.q
            entry["pauli_projections_per_sample"] = 4**n
            entry["samples"] = config.samples_per_leg * (
                2 if params.kind == "cyclic" else 1
            )
        else:
            params = config.ramp_for(n)
            dim = dim_sector if config.sector != "full" else dim_full
            entry["steps"] = params.q
            entry["eigendecompositions"] = params.q
            entry["unitary_memory_bytes"] = 16 * dim * dim
            if dim >= 4096:
                entry["warning"] = f"dense dimension {dim} is large"
        report["sizes"].append(entry)
    return report


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _load_config(path: str, overrides: dict) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    ramp = dict(doc.get("ramp", {}))
    if overrides.get("ramp") is not None:
        ramp["kind"] = overrides["ramp"]
    if overrides.get("T") is not None:
        ramp["T"] = overrides["T"]
    if overrides.get("dt") is not None:
        ramp["dt"] = overrides["dt"]
    if ramp:
        doc["ramp"] = ramp
    if overrides.get("N") is not None:
        doc["sizes"] = [overrides["N"]]
        doc.pop("N", None)
    if overrides.get("sector") is not None:
        doc["sector"] = overrides["sector"]
    if overrides.get("checkpoint_stride") is not None:
        doc["checkpoint_stride"] = overrides["checkpoint_stride"]
    return parse_config(doc)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="annealab",
        description="Exact-diagonalization experiments for annealing dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config", help="path to a JSON experiment config")
    run_p.add_argument("--out", default="runs", help="output directory")
    run_p.add_argument("--threads", type=int, default=1)
    run_p.add_argument("--ramp", choices=["forward", "cyclic"], default=None)
    run_p.add_argument("--T", type=float, default=None)
    run_p.add_argument("--dt", type=float, default=None)
    run_p.add_argument("--N", type=int, default=None)
    run_p.add_argument("--sector", choices=["+", "-", "full"], default=None)
    run_p.add_argument("--checkpoint-stride", type=int, default=None)
    est_p = sub.add_parser("estimate", help="report predicted cost of a config")
    est_p.add_argument("config")
    args = parser.parse_args(argv)
    overrides = {
        key: getattr(args, key, None)
        for key in ("ramp", "T", "dt", "N", "sector", "checkpoint_stride")
    }
    try:
        config = _load_config(args.config, overrides)
        if args.command == "estimate":
            print(json.dumps(estimate(config), indent=2))
            return 0
        check_capacity(config)
        manifest = run(config, args.out, threads=args.threads)
        print(f"wrote {len(manifest['output_files'])} files to {args.out}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
