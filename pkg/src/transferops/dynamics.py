"""SDE models and lag-tau pair sampling.

Implements the quadruple-well Langevin family (reversible, non-reversible
via an antisymmetric circulation, and time-dependent via a ramped
perturbation of the potential), an Euler-Maruyama integrator, and the
samplers that turn trajectories into (x, y) training pairs.

All sampling is a pure function of its arguments: streams are derived
from the seed via :mod:`transferops._streams`, and bursts consume
per-burst streams keyed by (seed, burst index), so batched, serial, and
checkpointed executions agree bit-exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ._streams import stream
from .basis import Box
from .errors import (
    NumericalError,
    PreconditionError,
    SamplingFailureError,
    UnsupportedConfigurationError,
)

DEFAULT_DOMAIN = Box((-1.75, -1.75), (1.75, 1.75))

# Localized variant of the time-dependent perturbation: a Gaussian hill
# centered on the shallowest well, so only that well is removed.
BUMP_CENTER = (1.0, 1.0)
BUMP_WIDTH = 0.4

_TILT_KINDS = ("linear", "well-bump")


@dataclass(frozen=True)
class QuadrupleWellParams:
    """Parameters of the built-in quadruple-well family.

    beta         : inverse temperature (math.inf gives the zero-noise limit).
    c            : strength of the antisymmetric circulation term.
    tilt_max     : ceiling of the time-dependent perturbation ramp; 0 turns
                   the time dependence off entirely.
    tilt_horizon : time at which the ramp reaches tilt_max.
    tilt_kind    : "linear" adds gamma(t) * (x1 + x2); "well-bump" grows a
                   Gaussian hill of height gamma(t) on the shallowest well.
    """

    beta: float = 3.0
    c: float = 0.0
    tilt_max: float = 2.0
    tilt_horizon: float = 3.0
    tilt_kind: str = "linear"

    def __post_init__(self):
        if not self.beta > 0:
            raise PreconditionError("beta must be positive")
        if not self.tilt_horizon > 0:
            raise PreconditionError("tilt_horizon must be positive")
        if self.tilt_kind not in _TILT_KINDS:
            raise PreconditionError(f"tilt_kind must be one of {_TILT_KINDS}")


def _gamma(p: QuadrupleWellParams, t: float) -> float:
    """Ramp factor of the time-dependent perturbation at time t."""
    if p.tilt_max == 0.0:
        return 0.0
    return p.tilt_max * min(t, p.tilt_horizon) / p.tilt_horizon


def potential_eval(p: QuadrupleWellParams, x, t: float = 0.0):
    """Quadruple-well potential, optionally perturbed by the ramped tilt.

    Accepts a single 2-vector or an (..., 2) array of points; returns a
    scalar or an (...,) array accordingly.
    """
    X = np.asarray(x, float)
    x1, x2 = X[..., 0], X[..., 1]
    v = (x1**4 - x1**3 / 16 - 2 * x1**2 + 3 * x1 / 16 + 9 / 8
         + x2**4 - x2**3 / 8 - 2 * x2**2 + 3 * x2 / 8 + 5 / 4)
    g = _gamma(p, t)
    if g != 0.0:
        if p.tilt_kind == "linear":
            v = v + g * (x1 + x2)
        else:
            u1, u2 = x1 - BUMP_CENTER[0], x2 - BUMP_CENTER[1]
            v = v + g * np.exp(-(u1**2 + u2**2) / (2 * BUMP_WIDTH**2))
    return v if v.ndim else float(v)


def _potential_gradient(p: QuadrupleWellParams, x, t: float):
    X = np.asarray(x, float)
    x1, x2 = X[..., 0], X[..., 1]
    d1 = (x1**2 - 1) * (4 * x1 - 3 / 16)
    d2 = (x2**2 - 1) * (4 * x2 - 3 / 8)
    g = _gamma(p, t)
    if g != 0.0:
        if p.tilt_kind == "linear":
            d1 = d1 + g
            d2 = d2 + g
        else:
            u1, u2 = x1 - BUMP_CENTER[0], x2 - BUMP_CENTER[1]
            e = np.exp(-(u1**2 + u2**2) / (2 * BUMP_WIDTH**2))
            d1 = d1 - g * e * u1 / BUMP_WIDTH**2
            d2 = d2 - g * e * u2 / BUMP_WIDTH**2
    return d1, d2


def drift_eval(p: QuadrupleWellParams, x, t: float = 0.0):
    """Drift (M - I) grad V_t with the antisymmetric M = [[0, c], [-c, 0]].

    Reduces to plain gradient descent -grad V for c = 0 and tilt_max = 0.
    Broadcasts like :func:`potential_eval`.
    """
    d1, d2 = _potential_gradient(p, x, t)
    return np.stack([-d1 + p.c * d2, -d2 - p.c * d1], axis=-1)


def stationary_flux(p: QuadrupleWellParams, x):
    """Stationary probability flux M grad V * exp(-beta V), up to 1/Z.

    Only defined for the autonomous family (tilt_max = 0); identically zero
    when c = 0, which is the reversibility criterion.
    """
    if p.tilt_max != 0.0:
        raise UnsupportedConfigurationError(
            "stationary flux requires the autonomous model (tilt_max = 0)")
    if not math.isfinite(p.beta):
        raise UnsupportedConfigurationError("stationary flux requires finite beta")
    d1, d2 = _potential_gradient(p, x, 0.0)
    weight = np.exp(-p.beta * potential_eval(p, x, 0.0))
    return np.stack([p.c * d2 * weight, -p.c * d1 * weight], axis=-1)


@dataclass(frozen=True)
class SdeModel:
    """A stochastic differential equation dX = b(X, t) dt + sigma(X, t) dW.

    drift maps (state, time) to a d-vector and diffusion to a d x d matrix;
    both must stay finite on the domain box for all sampled times.
    """

    dimension: int
    domain: Box
    drift: Callable[[np.ndarray, float], np.ndarray]
    diffusion: Callable[[np.ndarray, float], np.ndarray]
    quadwell: QuadrupleWellParams | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.dimension != self.domain.dimension:
            raise PreconditionError("model dimension must match the domain box")


def quadruple_well_model(params: QuadrupleWellParams | None = None,
                         domain: Box = DEFAULT_DOMAIN) -> SdeModel:
    """Overdamped Langevin model on the quadruple-well landscape."""
    p = params if params is not None else QuadrupleWellParams()
    sigma = math.sqrt(2.0 / p.beta)
    eye = np.eye(2)

    def drift(x, t):
        return drift_eval(p, x, t)

    def diffusion(x, t):
        return sigma * eye

    return SdeModel(dimension=2, domain=domain, drift=drift,
                    diffusion=diffusion, quadwell=p)


def euler_maruyama_step(model: SdeModel, x, t: float, h: float, xi) -> np.ndarray:
    """One Euler-Maruyama step x + b h + sigma sqrt(h) xi."""
    if not h > 0:
        raise PreconditionError("step size h must be positive")
    x = np.asarray(x, float)
    xi = np.asarray(xi, float)
    out = x + np.asarray(model.drift(x, t), float) * h \
        + np.asarray(model.diffusion(x, t), float) @ xi * math.sqrt(h)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"non-finite state after step from x={x.tolist()} at t={t}")
    return out


# ---------------------------------------------------------------------------
# initial-density samplers


def uniform_sampler(box: Box = DEFAULT_DOMAIN):
    """Sampler drawing uniformly from the given box."""

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        return box.sample(rng, size)

    return draw


def point_sampler(x0):
    """Sampler returning copies of a single start point."""
    x0 = np.asarray(x0, float)

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.tile(x0, (size, 1))

    return draw


def gibbs_sampler(p: QuadrupleWellParams, box: Box = DEFAULT_DOMAIN):
    """Rejection sampler for exp(-beta V) of the t = 0 potential.

    The quartic potential is nonnegative with minimum 0, so the uniform
    envelope accepts with probability exp(-beta V) directly.
    """
    if not math.isfinite(p.beta):
        raise UnsupportedConfigurationError("Gibbs sampling requires finite beta")

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty((size, 2))
        have = 0
        while have < size:
            n_prop = min(max(16 * (size - have), 64), 2_000_000)
            X = box.sample(rng, n_prop)
            accept = rng.random(n_prop) < np.exp(-p.beta * potential_eval(p, X, 0.0))
            take = X[accept][: size - have]
            out[have:have + take.shape[0]] = take
            have += take.shape[0]
        return out

    return draw


# ---------------------------------------------------------------------------
# integration backends


def _advance(model: SdeModel, x: np.ndarray, t0: float, h: float,
             noise: np.ndarray, stride: int) -> np.ndarray:
    """Advance batch x through the given noise, recording every `stride` steps.

    Returns an array of shape (B, S // stride + 1, d) whose first slice is
    the start state; x is updated in place to the final states.
    """
    B, S, d = noise.shape
    out = np.empty((B, S // stride + 1, d))
    p = model.quadwell
    if p is not None and d == 2:
        from . import _kernels

        kind = _kernels.TILT_LINEAR if p.tilt_kind == "linear" else _kernels.TILT_WELL_BUMP
        sigma = math.sqrt(2.0 / p.beta)
        _kernels.advance_quadwell(x, t0, h, sigma, p.c, kind, p.tilt_max,
                                  p.tilt_horizon, BUMP_WIDTH, noise, stride, out)
        if not np.all(np.isfinite(out)):
            raise NumericalError("integration produced non-finite states")
    else:
        for b in range(B):
            xb = x[b].copy()
            out[b, 0] = xb
            r = 1
            for s in range(S):
                xb = euler_maruyama_step(model, xb, t0 + s * h, h, noise[b, s])
                if (s + 1) % stride == 0:
                    out[b, r] = xb
                    r += 1
            x[b] = xb
    return out


def _lag_steps(lag: float, h: float) -> int:
    if lag < 0:
        raise PreconditionError("lag must be nonnegative")
    k = round(lag / h)
    if abs(k * h - lag) > 1e-12 * max(abs(lag), h):
        raise PreconditionError(f"lag {lag} is not an integer multiple of the step size {h}")
    return int(k)


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class PairDataset:
    """Paired samples (x, y) a lag tau apart, plus sampling metadata."""

    xs: np.ndarray
    ys: np.ndarray
    lag: float
    seed: int
    discarded: int

    def __post_init__(self):
        xs = np.atleast_2d(np.asarray(self.xs, float))
        ys = np.atleast_2d(np.asarray(self.ys, float))
        if xs.shape != ys.shape:
            raise PreconditionError("xs and ys must have identical shape")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def m(self) -> int:
        return self.xs.shape[0]

    @property
    def dimension(self) -> int:
        return self.xs.shape[1]


def sample_pairs(model: SdeModel, init, lag: float, h: float, m: int, seed: int,
                 mode: str = "long-trajectory", burn_in: int = 10_000,
                 t0: float = 0.0, batch_size: int = 2048) -> PairDataset:
    """Generate m training pairs (x, y) a lag tau apart.

    Parameters
    ----------
    model : SdeModel
    init : callable(rng, size) -> (size, d) array
        Initial-density sampler (see :func:`uniform_sampler` and friends).
    lag, h : float
        Lag time and integrator step; lag must be an integer multiple of h
        (relative tolerance 1e-12).
    m : int
        Number of pairs before domain filtering.
    seed : int
        All randomness derives from this seed; identical arguments produce
        bit-identical datasets.
    mode : str
        "long-trajectory": one trajectory is simulated after `burn_in`
        steps and consecutive states tau apart form the pairs.
        "bursts": m independent starts from `init`, each integrated for
        time tau; burst b consumes the stream keyed (seed, 1, b), so the
        result is independent of batching.

    Pairs whose start or end point leaves the model domain are discarded
    and counted; fewer than m/2 survivors raise SamplingFailureError.
    """
    if m < 1:
        raise PreconditionError("at least one pair required")
    if mode not in ("long-trajectory", "bursts"):
        raise PreconditionError(f"unknown mode {mode!r}")
    stride = _lag_steps(lag, h)
    d = model.dimension
    init_rng = stream(seed, 0)

    if mode == "long-trajectory":
        x = np.asarray(init(init_rng, 1), float).reshape(1, d)
        t = float(t0)
        traj_rng = stream(seed, 1, 0)
        if burn_in > 0:
            _advance(model, x, t, h, traj_rng.standard_normal((1, burn_in, d)), burn_in)
            t += burn_in * h
        eff_stride = max(stride, 1)
        n_states = m + 1 if stride > 0 else m
        states = np.empty((n_states, d))
        states[0] = x[0]
        total = (n_states - 1) * eff_stride
        chunk = max((2_000_000 // eff_stride) * eff_stride, eff_stride)
        filled = 0
        while filled * eff_stride < total:
            s_chunk = min(chunk, total - filled * eff_stride)
            noise = traj_rng.standard_normal((1, s_chunk, d))
            out = _advance(model, x, t, h, noise, eff_stride)
            r = s_chunk // eff_stride
            states[filled + 1: filled + 1 + r] = out[0, 1:]
            filled += r
            t += s_chunk * h
        if stride > 0:
            xs, ys = states[:-1], states[1:]
        else:
            xs, ys = states, states.copy()
    else:
        xs = np.asarray(init(init_rng, m), float).reshape(m, d)
        if stride == 0:
            ys = xs.copy()
        else:
            ys = np.empty_like(xs)
            for start in range(0, m, batch_size):
                stop = min(start + batch_size, m)
                nb = stop - start
                noise = np.empty((nb, stride, d))
                for j in range(nb):
                    noise[j] = stream(seed, 1, start + j).standard_normal((stride, d))
                xb = xs[start:stop].copy()
                out = _advance(model, xb, t0, h, noise, stride)
                ys[start:stop] = out[:, -1]

    inside = model.domain.contains(xs) & model.domain.contains(ys)
    discarded = int(m - inside.sum())
    if m - discarded < m / 2:
        raise SamplingFailureError(
            f"only {m - discarded} of {m} pairs stayed inside the domain")
    return PairDataset(xs=xs[inside], ys=ys[inside], lag=float(lag),
                       seed=int(seed), discarded=discarded)


def sample_trajectory_checkpoints(model: SdeModel, init, lag: float, every: float,
                                  h: float, m: int, seed: int, t0: float = 0.0,
                                  batch_size: int = 2048):
    """Bursts from `init`, recording the state every `every` time units.

    Returns (times, states) with times of length R + 1 = lag / every + 1 and
    states of shape (R + 1, m, d).  Burst b consumes the stream keyed
    (seed, 1, b) exactly as in :func:`sample_pairs`, so states[0] / states[k]
    reproduce the bursts-mode pairs for lag k * every bit-exactly.
    """
    stride = _lag_steps(every, h)
    total = _lag_steps(lag, h)
    if stride == 0 or total % stride != 0:
        raise PreconditionError("checkpoint interval must divide the lag")
    d = model.dimension
    init_rng = stream(seed, 0)
    x0 = np.asarray(init(init_rng, m), float).reshape(m, d)
    n_rec = total // stride
    states = np.empty((n_rec + 1, m, d))
    for start in range(0, m, batch_size):
        stop = min(start + batch_size, m)
        nb = stop - start
        noise = np.empty((nb, total, d))
        for j in range(nb):
            noise[j] = stream(seed, 1, start + j).standard_normal((total, d))
        xb = x0[start:stop].copy()
        out = _advance(model, xb, t0, h, noise, stride)
        states[:, start:stop] = np.swapaxes(out, 0, 1)
    times = t0 + every * np.arange(n_rec + 1)
    return times, states


# ---------------------------------------------------------------------------
# serialization


def save_pairs(data: PairDataset, path) -> None:
    """Write pairs as CSV (header x1..xd,y1..yd) plus a .meta.json sidecar."""
    path = Path(path)
    d = data.dimension
    header = ",".join([f"x{i+1}" for i in range(d)] + [f"y{i+1}" for i in range(d)])
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for xrow, yrow in zip(data.xs, data.ys):
            f.write(",".join(repr(float(v)) for v in (*xrow, *yrow)) + "\n")
    meta = {"lag": data.lag, "seed": data.seed, "discarded": data.discarded}
    path.with_suffix(".meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")


def load_pairs(path) -> PairDataset:
    """Read a dataset written by :func:`save_pairs`."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        rows = np.loadtxt(f, delimiter=",", ndmin=2)
    d = sum(1 for name in header if name.startswith("x"))
    meta = json.loads(path.with_suffix(".meta.json").read_text(encoding="utf-8"))
    return PairDataset(xs=rows[:, :d], ys=rows[:, d:],
                       lag=float(meta["lag"]), seed=int(meta["seed"]),
                       discarded=int(meta["discarded"]))
