"""Command-line front end.

Verbs: `simulate`, `ulam`, `edmd`, `graph-cluster`, `spectrum`, and
`reproduce {fig4,fig6,fig7}` for the three built-in quadruple-well
experiment presets.  Every command with a fixed seed is bit-reproducible
including its output files; wall-clock timing therefore goes to stderr
while report.json carries deterministic work counters.

Exit codes: 0 on success, 2 on precondition errors, 3 on numerical
failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy.optimize

from . import __version__
from .basis import Box, BoxPartition, GaussianBasis, IndicatorBasis
from .clustering import kmeans, metastability_bounds, metastability_score, projection_mass, save_partition, seba
from .dynamics import (
    DEFAULT_DOMAIN,
    PairDataset,
    QuadrupleWellParams,
    gibbs_sampler,
    load_pairs,
    quadruple_well_model,
    sample_pairs,
    sample_trajectory_checkpoints,
    save_pairs,
    uniform_sampler,
)
from .errors import NumericalError, PreconditionError
from .estimators import covariances, edmd, save_bundle, ulam
from .graph import (
    Graph,
    LayeredGraph,
    invariant_density,
    layered_forward_backward,
    read_edge_list,
    read_layered_edge_list,
    supra_laplacian,
    transition_matrix,
    write_edge_list,
    write_layered_edge_list,
)
from .operators import Density, operator_bundle
from .spectral import general_eigs, selfadjoint_eigs, spectral_gap

WELLS = ((-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0))


@dataclass
class ExperimentConfig:
    """Parameters of one experiment run; flags mirror these fields."""

    experiment: str
    beta: float = 3.0
    c: float = 0.0
    tilt_max: float = 0.0
    tilt_horizon: float = 3.0
    tilt_kind: str = "linear"
    boxes: tuple = (16, 16)
    lag: float = 0.1
    lag_sweep: tuple = ()
    samples: int = 100_000
    seed: int = 7
    step: float = 1e-3
    burn_in: int = 10_000
    k: int | None = None
    omega: float = 1.0
    operator: str = "koopman"
    min_count: int = 1
    out_dir: Path = Path("transferops-out")

    def echo(self) -> dict:
        # the output path is deliberately omitted so reruns into different
        # directories stay byte-identical
        obj = dataclasses.asdict(self)
        del obj["out_dir"]
        obj["boxes"] = list(self.boxes)
        obj["lag_sweep"] = list(self.lag_sweep)
        return obj


# Built-in experiment presets.  fig4/fig6 are the reversible and
# non-reversible quadruple-well studies; fig7 is the time-dependent one
# with the vanishing shallowest well (well-bump perturbation at a lower
# temperature so three coherent sets survive the full interval).
PRESETS = {
    "fig4": dict(experiment="reversible", beta=3.0, c=0.0, tilt_max=0.0,
                 lag=0.1, boxes=(16, 16), samples=100_000, step=1e-3,
                 min_count=10),
    "fig6": dict(experiment="nonreversible", beta=3.0, c=2.0, tilt_max=0.0,
                 lag=0.1, boxes=(16, 16), samples=100_000, step=1e-3,
                 min_count=10),
    "fig7": dict(experiment="time-dependent", beta=4.5, c=0.0, tilt_max=2.0,
                 tilt_horizon=3.0, tilt_kind="well-bump", lag=3.0,
                 lag_sweep=(0.5, 1.0, 2.0, 3.0), boxes=(16, 16),
                 samples=100_000, step=1e-3, min_count=10),
}


def _versions() -> dict:
    out = {"transferops": __version__}
    for pkg in ("numpy", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def _write_report(outdir: Path, report: dict) -> None:
    (outdir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_eigenvalues(path: Path, values, lag=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if lag is not None:
            f.write("lag,index,eigenvalue\n")
            for tau, vals in zip(lag, values):
                for i, v in enumerate(vals, start=1):
                    f.write(f"{tau!r},{i},{float(v)!r}\n")
            return
        values = np.asarray(values)
        if np.iscomplexobj(values):
            f.write("index,real,imag\n")
            for i, v in enumerate(values, start=1):
                f.write(f"{i},{v.real!r},{v.imag!r}\n")
        else:
            f.write("index,eigenvalue\n")
            for i, v in enumerate(values, start=1):
                f.write(f"{i},{float(v)!r}\n")


def _quadrant_labels(centers: np.ndarray) -> np.ndarray:
    return (centers[:, 0] > 0).astype(np.int64) + 2 * (centers[:, 1] > 0).astype(np.int64)


def _best_agreement(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """Best label-permutation agreement between two hard labelings."""
    ka = int(labels_a.max()) + 1
    kb = int(labels_b.max()) + 1
    k = max(ka, kb)
    conf = np.zeros((k, k))
    for a, b in zip(labels_a, labels_b):
        conf[a, b] += 1
    rows, cols = scipy.optimize.linear_sum_assignment(-conf)
    return float(conf[rows, cols].sum() / labels_a.size)


def _well_cluster_labels(part: BoxPartition, retained: np.ndarray, labels: np.ndarray):
    """Cluster label of the box containing each well center, None if dropped."""
    out = []
    for well in WELLS:
        cell = part.index(np.asarray(well))
        pos = np.flatnonzero(retained == cell)
        out.append(int(labels[pos[0]]) if pos.size else None)
    return out


def _log_timing(name: str, start: float) -> None:
    print(f"[transferops] {name} finished in {time.perf_counter() - start:.1f}s",
          file=sys.stderr)


# ---------------------------------------------------------------------------
# experiment pipelines


def run_reversible(cfg: ExperimentConfig) -> dict:
    """Metastable sets of the reversible quadruple well via Ulam's method."""
    start = time.perf_counter()
    params = QuadrupleWellParams(beta=cfg.beta, c=cfg.c, tilt_max=0.0)
    model = quadruple_well_model(params)
    data = sample_pairs(model, uniform_sampler(model.domain), cfg.lag, cfg.step,
                        cfg.samples, cfg.seed, mode="long-trajectory",
                        burn_in=cfg.burn_in)
    part = BoxPartition(model.domain, cfg.boxes)
    # A reversible chain has symmetric expected counts; enforcing the
    # symmetry keeps the estimate self-adjoint under its empirical mass.
    result = ulam(data, part, symmetrize=True, min_count=cfg.min_count)
    bundle = result.bundle
    n_ret = result.retained.size
    kmax = min(8, n_ret)
    full = selfadjoint_eigs(bundle.K, bundle.mu)
    spec_vals = full.eigenvalues[:kmax]
    k = cfg.k if cfg.k else spectral_gap(spec_vals)
    partition = kmeans(full.eigenvectors[:, :k], k, seed=cfg.seed)
    score = metastability_score(bundle.K, bundle.mu, partition)
    deltas = [projection_mass(full.eigenvectors[:, j], partition, bundle.mu)
              for j in range(1, k)]
    lower, upper, holds = metastability_bounds(full.eigenvalues, deltas, score)
    centers = part.centers()[result.retained]
    oracle = _quadrant_labels(centers)
    agreement = _best_agreement(partition.labels, oracle)

    outdir = cfg.out_dir
    outdir.mkdir(parents=True, exist_ok=True)
    _write_eigenvalues(outdir / "eigenvalues.csv", spec_vals)
    save_partition(partition, outdir / "partition.csv")
    write_edge_list(result.induced_graph(), outdir / "graph.edges",
                    comment="induced graph on retained cells (symmetrized counts)")
    report = {
        "experiment": "reversible",
        "config": cfg.echo(),
        "versions": _versions(),
        "seed": cfg.seed,
        "work": {
            "pairs_retained": data.m,
            "pairs_discarded": data.discarded,
            "integrator_steps": cfg.burn_in + cfg.samples * round(cfg.lag / cfg.step),
            "cells_retained": int(n_ret),
            "ulam_dropped_pairs": result.dropped_pairs,
        },
        "eigenvalues": [float(v) for v in spec_vals],
        "gap_k": int(k),
        "cluster_sizes": partition.sizes().tolist(),
        "metastability": {"score": score, "lower": lower, "upper": upper, "holds": holds},
        "quadrant_agreement": agreement,
        "well_clusters": _well_cluster_labels(part, result.retained, partition.labels),
        "retained_cells": result.retained.tolist(),
        "residuals": _chain_residuals(bundle),
    }
    _write_report(outdir, report)
    _log_timing("reproduce fig4" if cfg.experiment == "reversible" else cfg.experiment, start)
    return report


def run_nonreversible(cfg: ExperimentConfig) -> dict:
    """Coherent sets of the non-reversible well via the forward-backward operator."""
    start = time.perf_counter()
    params = QuadrupleWellParams(beta=cfg.beta, c=cfg.c, tilt_max=0.0)
    model = quadruple_well_model(params)
    data = sample_pairs(model, uniform_sampler(model.domain), cfg.lag, cfg.step,
                        cfg.samples, cfg.seed, mode="long-trajectory",
                        burn_in=cfg.burn_in)
    part = BoxPartition(model.domain, cfg.boxes)
    result = ulam(data, part, symmetrize=False, min_count=cfg.min_count)
    bundle = result.bundle
    n_ret = result.retained.size
    kmax = min(8, n_ret)
    kspec = general_eigs(bundle.K)
    kvals = kspec.eigenvalues[:kmax]
    # coherent sets of the induced graph: forward-backward operator with
    # uniform reference density on the retained cells
    mu_u = Density.uniform(n_ret).values
    fb = operator_bundle(bundle.K, mu_u)
    spec = selfadjoint_eigs(fb.F, mu_u, k=kmax)
    k = cfg.k if cfg.k else spectral_gap(spec.eigenvalues)
    partition = kmeans(spec.eigenvectors[:, :k], k, seed=cfg.seed)
    centers = part.centers()[result.retained]
    agreement = _best_agreement(partition.labels, _quadrant_labels(centers))

    outdir = cfg.out_dir
    outdir.mkdir(parents=True, exist_ok=True)
    _write_eigenvalues(outdir / "eigenvalues.csv", spec.eigenvalues)
    _write_eigenvalues(outdir / "koopman_spectrum.csv", kvals)
    save_partition(partition, outdir / "partition.csv")
    write_edge_list(result.induced_graph(), outdir / "graph.edges",
                    comment="induced graph on retained cells (raw counts)")
    report = {
        "experiment": "nonreversible",
        "config": cfg.echo(),
        "versions": _versions(),
        "seed": cfg.seed,
        "work": {
            "pairs_retained": data.m,
            "pairs_discarded": data.discarded,
            "integrator_steps": cfg.burn_in + cfg.samples * round(cfg.lag / cfg.step),
            "cells_retained": int(n_ret),
            "ulam_dropped_pairs": result.dropped_pairs,
        },
        "eigenvalues": [float(v) for v in spec.eigenvalues],
        "koopman_spectrum": [[float(v.real), float(v.imag)] for v in kvals],
        "max_koopman_imag": float(np.abs(kspec.eigenvalues.imag).max()),
        "gap_k": int(k),
        "cluster_sizes": partition.sizes().tolist(),
        "quadrant_agreement": agreement,
        "well_clusters": _well_cluster_labels(part, result.retained, partition.labels),
        "retained_cells": result.retained.tolist(),
        "residuals": _chain_residuals(bundle),
    }
    _write_report(outdir, report)
    _log_timing("reproduce fig6", start)
    return report


def _layered_counts(part: BoxPartition, checkpoints: np.ndarray):
    """Per-interval transition counts on a common retained cell set.

    checkpoints has shape (L+1, m, d); bursts leaving the domain at any
    recorded time are excluded so every layer sees the same trajectories.
    """
    box = part.domain
    ok = np.ones(checkpoints.shape[1], dtype=bool)
    for states in checkpoints:
        ok &= box.contains(states)
    idx = np.stack([part.indices(states[ok]) for states in checkpoints])
    n = part.n
    L = checkpoints.shape[0] - 1
    retained = np.arange(n)
    while True:
        layer_counts = []
        for ell in range(L):
            counts = np.bincount(idx[ell] * n + idx[ell + 1], minlength=n * n)
            layer_counts.append(counts.reshape(n, n).astype(float)[np.ix_(retained, retained)])
        alive = np.ones(retained.size, dtype=bool)
        for C in layer_counts:
            alive &= (C.sum(axis=1) > 0) & (C.sum(axis=0) > 0)
        if alive.all():
            break
        retained = retained[alive]
        if retained.size == 0:
            raise PreconditionError("no cells survive the common-support restriction")
        keep = np.isin(idx, retained).all(axis=0)
        idx = idx[:, keep]
    mu0 = np.bincount(idx[0], minlength=n)[retained].astype(float)
    mu0 /= mu0.sum()
    return layer_counts, retained, mu0, int(idx.shape[1])


def run_time_dependent(cfg: ExperimentConfig) -> dict:
    """Coherent sets of the time-dependent well across a lag sweep."""
    start = time.perf_counter()
    params = QuadrupleWellParams(beta=cfg.beta, c=cfg.c, tilt_max=cfg.tilt_max,
                                 tilt_horizon=cfg.tilt_horizon, tilt_kind=cfg.tilt_kind)
    model = quadruple_well_model(params)
    init = gibbs_sampler(params, model.domain)
    sweep = tuple(cfg.lag_sweep) if cfg.lag_sweep else (cfg.lag,)
    every = min(min(sweep), 1.0)
    for tau in (*sweep, cfg.lag, 1.0):
        if abs(round(tau / every) * every - tau) > 1e-9:
            raise PreconditionError(f"checkpoint interval {every} must divide lag {tau}")
    times, states = sample_trajectory_checkpoints(
        model, init, lag=cfg.lag, every=every, h=cfg.step, m=cfg.samples, seed=cfg.seed)
    part = BoxPartition(model.domain, cfg.boxes)
    box = model.domain

    sweep_rows = []
    final = None
    for tau in sweep:
        xs, ys = states[0], states[round(tau / every)]
        inside = box.contains(xs) & box.contains(ys)
        data = PairDataset(xs=xs[inside], ys=ys[inside], lag=tau, seed=cfg.seed,
                           discarded=int(cfg.samples - inside.sum()))
        result = ulam(data, part, symmetrize=False, min_count=cfg.min_count)
        spec = selfadjoint_eigs(result.bundle.F, result.bundle.mu,
                                k=min(8, result.retained.size))
        count = int(np.sum(spec.eigenvalues >= 0.8))
        sweep_rows.append({"lag": tau, "eigenvalues": [float(v) for v in spec.eigenvalues],
                           "count_above_0.8": count})
        if tau == sweep[-1]:
            final = result

    result = final
    n_seba = min(3, result.retained.size)
    sub = selfadjoint_eigs(result.bundle.F, result.bundle.mu, k=n_seba)
    memberships, seba_part = seba(sub.eigenvectors, weight=result.bundle.mu)

    # layered comparison on unit intervals
    layer_idx = [round(t / every) for t in np.arange(0.0, cfg.lag + 1e-9, 1.0)]
    layer_counts, lay_retained, mu0, lay_bursts = _layered_counts(part, states[layer_idx])
    layers = [Graph.from_matrix(C, directed=True) for C in layer_counts]
    lg = LayeredGraph(tuple(layers), tuple(float(t) for t in times[layer_idx][:-1]))
    fb = layered_forward_backward(lg, mu0)
    lay_spec = selfadjoint_eigs(fb.F, fb.mu, k=min(8, lay_retained.size))
    supra = supra_laplacian(lg, cfg.omega, "random-walk")
    supra_vals = np.sort(general_eigs(supra).eigenvalues.real)[:8]

    outdir = cfg.out_dir
    outdir.mkdir(parents=True, exist_ok=True)
    _write_eigenvalues(outdir / "eigenvalues.csv",
                       [row["eigenvalues"] for row in sweep_rows],
                       lag=[row["lag"] for row in sweep_rows])
    save_partition(seba_part, outdir / "partition.csv")
    with open(outdir / "memberships.csv", "w", encoding="utf-8", newline="\n") as f:
        f.write("vertex," + ",".join(f"m{j+1}" for j in range(memberships.shape[1])) + "\n")
        for v, row in enumerate(memberships):
            f.write(f"{v}," + ",".join(repr(float(x)) for x in row) + "\n")
    write_edge_list(result.induced_graph(), outdir / "graph.edges",
                    comment=f"induced graph on retained cells, lag {sweep[-1]}")
    write_layered_edge_list(lg, outdir / "layered.edges",
                            comment="per-interval induced graphs on common retained cells")
    report = {
        "experiment": "time-dependent",
        "config": cfg.echo(),
        "versions": _versions(),
        "seed": cfg.seed,
        "work": {
            "bursts": cfg.samples,
            "integrator_steps": cfg.samples * round(cfg.lag / cfg.step),
            "cells_retained": int(result.retained.size),
            "layered_bursts_retained": lay_bursts,
        },
        "sweep": sweep_rows,
        "counts_above_0.8": [row["count_above_0.8"] for row in sweep_rows],
        "seba": {
            "cluster_sizes": seba_part.sizes().tolist(),
            "unassigned": int(np.sum(seba_part.labels == -1)),
        },
        "layered": {"eigenvalues": [float(v) for v in lay_spec.eigenvalues],
                    "cells_retained": int(lay_retained.size)},
        "supra": {"omega": cfg.omega,
                  "smallest_eigenvalues": [float(v) for v in supra_vals]},
        "retained_cells": result.retained.tolist(),
        "residuals": _chain_residuals(result.bundle),
    }
    _write_report(outdir, report)
    _log_timing("reproduce fig7", start)
    return report


def _chain_residuals(bundle) -> dict:
    row_dev = float(np.abs(bundle.K.sum(axis=1) - 1.0).max())
    s = np.sqrt(bundle.mu)
    M = bundle.F * s[:, None] / s[None, :]
    sym = float(np.abs(M - M.T).max())
    return {"koopman_row_sum_dev": row_dev, "fb_symmetry_defect": sym}


# ---------------------------------------------------------------------------
# graph commands


def run_graph_cluster(cfg: ExperimentConfig, path: Path, undirected: bool,
                      layered: bool, cluster: bool = True) -> dict:
    start = time.perf_counter()
    warnings = []
    supra_vals = None
    if layered:
        lg = read_layered_edge_list(path, directed=not undirected)
        mu0 = Density.uniform(lg.n).values
        fb = layered_forward_backward(lg, mu0)
        kmax = min(8, lg.n)
        spec = selfadjoint_eigs(fb.F, fb.mu, k=kmax)
        eigenvalues = spec.eigenvalues
        gap_values = spec.eigenvalues
        embedding = spec.eigenvectors
        supra = supra_laplacian(lg, cfg.omega, "random-walk")
        supra_vals = np.sort(general_eigs(supra).eigenvalues.real)[:min(8, supra.shape[0])]
        n = lg.n
    else:
        g = read_edge_list(path, directed=not undirected)
        n = g.n
        S = transition_matrix(g)
        kmax = min(8, n)
        if cfg.operator == "koopman":
            if not g.directed:
                pi = invariant_density(g, "degree-formula")
                spec = selfadjoint_eigs(S, pi, k=kmax)
                eigenvalues = spec.eigenvalues
                gap_values = spec.eigenvalues
                embedding = spec.eigenvectors
            else:
                gen = general_eigs(S)
                eigenvalues = gen.eigenvalues[:kmax]
                gap_values = np.abs(eigenvalues)
                embedding = gen.eigenvectors[:, :kmax].real
                if np.abs(gen.eigenvalues.imag).max() > 1e-9:
                    warnings.append(
                        "koopman spectrum of this directed graph is complex; "
                        "consider --operator forward-backward for coherent sets")
        else:
            mu = Density.uniform(n).values
            bundle = operator_bundle(S, mu)
            spec = selfadjoint_eigs(bundle.F, mu, k=kmax)
            eigenvalues = spec.eigenvalues
            gap_values = spec.eigenvalues
            embedding = spec.eigenvectors

    k = cfg.k if cfg.k else spectral_gap(np.sort(np.asarray(gap_values, float))[::-1])
    report = {
        "experiment": "graph-cluster" if cluster else "spectrum",
        "config": cfg.echo(),
        "versions": _versions(),
        "seed": cfg.seed,
        "input": str(path),
        "n": int(n),
        "eigenvalues": [[float(np.real(v)), float(np.imag(v))] for v in np.asarray(eigenvalues)],
        "gap_k": int(k),
        "warnings": warnings,
    }
    if supra_vals is not None:
        report["supra"] = {"omega": cfg.omega,
                           "smallest_eigenvalues": [float(v) for v in supra_vals]}
    outdir = cfg.out_dir
    outdir.mkdir(parents=True, exist_ok=True)
    _write_eigenvalues(outdir / "eigenvalues.csv", np.asarray(eigenvalues))
    if cluster:
        partition = kmeans(np.asarray(embedding)[:, :k], k, seed=cfg.seed)
        save_partition(partition, outdir / "partition.csv")
        report["cluster_sizes"] = partition.sizes().tolist()
    for warning in warnings:
        print(f"[transferops] warning: {warning}", file=sys.stderr)
    _write_report(outdir, report)
    _log_timing(report["experiment"], start)
    return report


# ---------------------------------------------------------------------------
# data commands


def run_simulate(cfg: ExperimentConfig, mode: str, init_kind: str) -> dict:
    start = time.perf_counter()
    params = QuadrupleWellParams(beta=cfg.beta, c=cfg.c, tilt_max=cfg.tilt_max,
                                 tilt_horizon=cfg.tilt_horizon, tilt_kind=cfg.tilt_kind)
    model = quadruple_well_model(params)
    init = gibbs_sampler(params, model.domain) if init_kind == "gibbs" \
        else uniform_sampler(model.domain)
    data = sample_pairs(model, init, cfg.lag, cfg.step, cfg.samples, cfg.seed,
                        mode=mode, burn_in=cfg.burn_in)
    outdir = cfg.out_dir
    outdir.mkdir(parents=True, exist_ok=True)
    save_pairs(data, outdir / "pairs.csv")
    report = {
        "experiment": "simulate",
        "config": cfg.echo(),
        "versions": _versions(),
        "seed": cfg.seed,
        "mode": mode,
        "init": init_kind,
        "work": {"pairs_retained": data.m, "pairs_discarded": data.discarded},
    }
    _write_report(outdir, report)
    _log_timing("simulate", start)
    return report


def run_ulam_cmd(cfg: ExperimentConfig, pairs: Path, domain, symmetrize: bool) -> dict:
    start = time.perf_counter()
    data = load_pairs(pairs)
    box = Box(tuple(domain[0::2]), tuple(domain[1::2])) if domain else DEFAULT_DOMAIN
    part = BoxPartition(box, cfg.boxes)
    result = ulam(data, part, symmetrize=symmetrize, min_count=cfg.min_count)
    outdir = cfg.out_dir
    outdir.mkdir(parents=True, exist_ok=True)
    save_bundle(result.bundle, outdir / "bundle")
    write_edge_list(result.induced_graph(), outdir / "graph.edges",
                    comment="induced graph on retained cells")
    spec = selfadjoint_eigs(result.bundle.F, result.bundle.mu,
                            k=min(8, result.retained.size))
    _write_eigenvalues(outdir / "eigenvalues.csv", spec.eigenvalues)
    report = {
        "experiment": "ulam",
        "config": cfg.echo(),
        "versions": _versions(),
        "seed": cfg.seed,
        "partition": json.loads(part.to_json()),
        "work": {"pairs": data.m, "cells_retained": int(result.retained.size),
                 "ulam_dropped_pairs": result.dropped_pairs},
        "fb_eigenvalues": [float(v) for v in spec.eigenvalues],
        "retained_cells": result.retained.tolist(),
    }
    _write_report(outdir, report)
    _log_timing("ulam", start)
    return report


def run_edmd_cmd(cfg: ExperimentConfig, pairs: Path, basis_kind: str, domain,
                 bandwidth: float | None, ridge: float) -> dict:
    start = time.perf_counter()
    data = load_pairs(pairs)
    box = Box(tuple(domain[0::2]), tuple(domain[1::2])) if domain else DEFAULT_DOMAIN
    part = BoxPartition(box, cfg.boxes)
    if basis_kind == "indicator":
        basis = IndicatorBasis(part)
    else:
        if bandwidth is None:
            raise PreconditionError("gaussian basis requires --bandwidth")
        basis = GaussianBasis(part.centers(), bandwidth)
    cov = covariances(basis.evaluate(data.xs), basis.evaluate(data.ys))
    bundle = edmd(cov, ridge=ridge, indicator=basis_kind == "indicator")
    outdir = cfg.out_dir
    outdir.mkdir(parents=True, exist_ok=True)
    save_bundle(bundle, outdir / "bundle")
    kvals = general_eigs(bundle.K).eigenvalues[:min(8, bundle.n)]
    _write_eigenvalues(outdir / "eigenvalues.csv", kvals)
    report = {
        "experiment": "edmd",
        "config": cfg.echo(),
        "versions": _versions(),
        "seed": cfg.seed,
        "basis": basis_kind,
        "ridge": ridge,
        "work": {"pairs": data.m, "dictionary_size": bundle.n},
        "koopman_spectrum": [[float(v.real), float(v.imag)] for v in kvals],
    }
    _write_report(outdir, report)
    _log_timing("edmd", start)
    return report


# ---------------------------------------------------------------------------
# argument parsing


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta", type=float, help="inverse temperature")
    p.add_argument("--c", type=float, help="non-reversibility strength")
    p.add_argument("--tilt-max", type=float, dest="tilt_max")
    p.add_argument("--tilt-horizon", type=float, dest="tilt_horizon")
    p.add_argument("--tilt-kind", choices=("linear", "well-bump"), dest="tilt_kind")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lag", type=float, help="lag time tau")
    p.add_argument("--boxes", type=int, nargs=2, metavar=("NX", "NY"))
    p.add_argument("--samples", type=int, help="number of training pairs")
    p.add_argument("--seed", type=int)
    p.add_argument("--step", type=float, help="integrator step size h")
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--k", type=int, help="cluster count (default: spectral gap)")
    p.add_argument("--omega", type=float, help="inter-layer coupling weight")
    p.add_argument("--min-count", type=int, dest="min_count",
                   help="drop cells with fewer start samples")
    p.add_argument("--out", type=Path, help="output directory")


def _config_from_args(args, base: dict) -> ExperimentConfig:
    cfg = ExperimentConfig(**base)
    for field in ("beta", "c", "tilt_max", "tilt_horizon", "tilt_kind", "lag",
                  "samples", "seed", "step", "burn_in", "k", "omega", "min_count"):
        value = getattr(args, field, None)
        if value is not None:
            setattr(cfg, field, value)
    if getattr(args, "boxes", None) is not None:
        cfg.boxes = tuple(args.boxes)
    if getattr(args, "operator", None) is not None:
        cfg.operator = args.operator
    if getattr(args, "out", None) is not None:
        cfg.out_dir = args.out
    else:
        cfg.out_dir = Path(f"transferops-{cfg.experiment}")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transferops",
        description="Transfer-operator spectra and spectral clustering for "
                    "stochastic dynamics and weighted graphs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample lag-tau training pairs")
    _add_model_flags(p)
    _add_common_flags(p)
    p.add_argument("--mode", choices=("long-trajectory", "bursts"),
                   default="long-trajectory")
    p.add_argument("--init", choices=("uniform", "gibbs"), default="uniform")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ulam", help="estimate operators on a box partition")
    _add_common_flags(p)
    p.add_argument("--pairs", type=Path, required=True, help="pairs CSV from `simulate`")
    p.add_argument("--domain", type=float, nargs="+",
                   help="domain box as lo hi per axis (lo1 hi1 lo2 hi2 ...)")
    p.add_argument("--symmetrize", action="store_true")
    p.set_defaults(func=_cmd_ulam)

    p = sub.add_parser("edmd", help="estimate operators on a smooth dictionary")
    _add_common_flags(p)
    p.add_argument("--pairs", type=Path, required=True)
    p.add_argument("--basis", choices=("indicator", "gaussian"), default="gaussian")
    p.add_argument("--domain", type=float, nargs="+")
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--ridge", type=float, default=1e-10)
    p.set_defaults(func=_cmd_edmd)

    p = sub.add_parser("graph-cluster", help="spectral clustering of an edge list")
    _add_common_flags(p)
    p.add_argument("edges", type=Path)
    p.add_argument("--operator", choices=("koopman", "forward-backward"),
                   default="koopman")
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--layered", action="store_true")
    p.set_defaults(func=_cmd_graph_cluster)

    p = sub.add_parser("spectrum", help="operator spectrum of an edge list")
    _add_common_flags(p)
    p.add_argument("edges", type=Path)
    p.add_argument("--operator", choices=("koopman", "forward-backward"),
                   default="koopman")
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--layered", action="store_true")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("reproduce", help="run a built-in experiment preset")
    p.add_argument("preset", choices=sorted(PRESETS))
    _add_model_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_reproduce)

    return parser


def _cmd_simulate(args) -> dict:
    cfg = _config_from_args(args, {"experiment": "simulate"})
    return run_simulate(cfg, args.mode, args.init)


def _cmd_ulam(args) -> dict:
    cfg = _config_from_args(args, {"experiment": "ulam"})
    return run_ulam_cmd(cfg, args.pairs, args.domain, args.symmetrize)


def _cmd_edmd(args) -> dict:
    cfg = _config_from_args(args, {"experiment": "edmd"})
    return run_edmd_cmd(cfg, args.pairs, args.basis, args.domain,
                        args.bandwidth, args.ridge)


def _cmd_graph_cluster(args) -> dict:
    cfg = _config_from_args(args, {"experiment": "graph-cluster"})
    return run_graph_cluster(cfg, args.edges, args.undirected, args.layered,
                             cluster=True)


def _cmd_spectrum(args) -> dict:
    cfg = _config_from_args(args, {"experiment": "spectrum"})
    return run_graph_cluster(cfg, args.edges, args.undirected, args.layered,
                             cluster=False)


def _cmd_reproduce(args) -> dict:
    cfg = _config_from_args(args, dict(PRESETS[args.preset]))
    if getattr(args, "out", None) is None:
        cfg.out_dir = Path(f"transferops-{args.preset}")
    runner = {
        "reversible": run_reversible,
        "nonreversible": run_nonreversible,
        "time-dependent": run_time_dependent,
    }[cfg.experiment]
    return runner(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (PreconditionError, OSError) as exc:
        print(f"[transferops] precondition error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"[transferops] numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


def console_main() -> None:
    raise SystemExit(main())
