"""Inertia-weight particle swarm optimization (maximization), and its use
for tuning the SVM penalty and kernel width on a verification split.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BadConfig, ObjectiveFailure
from .svm import ConvergenceWarning, train_multiclass

LOG_C_BOUNDS = (-2.0, 3.0)
LOG_SIGMA_BOUNDS = (-2.0, 2.0)


@dataclass(frozen=True)
class SwarmConfig:
    n_particles: int = 30
    bounds: tuple = (LOG_C_BOUNDS, LOG_SIGMA_BOUNDS)
    inertia: tuple = (0.9, 0.4)
    c1: float = 2.0
    c2: float = 2.0
    v_max_fraction: float = 0.5
    max_iters: int = 100
    stall_iters: int = 15
    target_fitness: float | None = None
    seed: int = 0
    strict: bool = True  # enforce 20..50 particles, lo < hi, max_iters >= 1

    def validate(self):
        if self.n_particles < 1:
            raise BadConfig("need at least one particle")
        if self.strict and not 20 <= self.n_particles <= 50:
            raise BadConfig(f"n_particles must be in 20..50, got {self.n_particles}")
        if len(self.bounds) < 1:
            raise BadConfig("bounds must have at least one dimension")
        for lo, hi in self.bounds:
            if lo > hi or (self.strict and lo == hi):
                raise BadConfig(f"invalid bounds ({lo}, {hi})")
        if self.max_iters < (1 if self.strict else 0):
            raise BadConfig(f"max_iters too small: {self.max_iters}")
        if self.stall_iters < 1:
            raise BadConfig("stall_iters must be >= 1")
        if self.v_max_fraction <= 0:
            raise BadConfig("v_max_fraction must be > 0")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "bounds" in d:
            d["bounds"] = tuple(tuple(b) for b in d["bounds"])
        if "inertia" in d:
            d["inertia"] = tuple(d["inertia"])
        return cls(**d)

    def to_dict(self):
        return {
            "n_particles": self.n_particles,
            "bounds": [list(b) for b in self.bounds],
            "inertia": list(self.inertia),
            "c1": self.c1,
            "c2": self.c2,
            "v_max_fraction": self.v_max_fraction,
            "max_iters": self.max_iters,
            "stall_iters": self.stall_iters,
            "target_fitness": self.target_fitness,
            "seed": self.seed,
            "strict": self.strict,
        }


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_fitness: float


@dataclass
class SwarmState:
    particles: list
    global_best_position: np.ndarray
    global_best_fitness: float
    iteration: int
    rng: np.random.Generator = field(repr=False)


def _limits(config):
    b = np.asarray(config.bounds, dtype=np.float64)
    lo, hi = b[:, 0], b[:, 1]
    return lo, hi, config.v_max_fraction * (hi - lo)


def _evaluate(objective, positions, map_fn):
    def call(item):
        i, x = item
        try:
            value = float(objective(x))
        except Exception as exc:
            raise ObjectiveFailure(i, exc) from exc
        if math.isnan(value):
            raise ObjectiveFailure(i, ValueError("objective returned NaN"))
        return value

    return list(map_fn(call, list(enumerate(positions))))


def init_swarm(config, objective, initial_positions=(), map_fn=map):
    """Random swarm; ``initial_positions`` (clamped) replace the first particles.

    ``map_fn`` may be an ordered parallel map (e.g. ``executor.map``); all
    random draws happen before any evaluation so the result does not depend
    on it.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    lo, hi, vmax = _limits(config)
    positions, velocities = [], []
    for _ in range(config.n_particles):
        positions.append(lo + (hi - lo) * rng.random(len(lo)))
        velocities.append(vmax * (2.0 * rng.random(len(lo)) - 1.0))
    for i, p in enumerate(list(initial_positions)[: config.n_particles]):
        positions[i] = np.clip(np.asarray(p, dtype=np.float64), lo, hi)
    fitness = _evaluate(objective, positions, map_fn)
    particles = [
        Particle(x, v, x.copy(), f) for x, v, f in zip(positions, velocities, fitness)
    ]
    g = int(np.argmax(fitness))  # first maximum wins
    return SwarmState(particles, positions[g].copy(), fitness[g], 0, rng)


def inertia_at(config, iteration):
    w0, w1 = config.inertia
    span = max(config.max_iters - 1, 1)
    return w0 + (w1 - w0) * min(iteration, span) / span


def step(state, objective, config, map_fn=map):
    """One velocity/position update followed by best-position bookkeeping."""
    lo, hi, vmax = _limits(config)
    w = inertia_at(config, state.iteration)
    rng = state.rng
    moved = []
    for p in state.particles:
        r1 = rng.random(len(lo))
        r2 = rng.random(len(lo))
        v = (w * p.velocity
             + config.c1 * r1 * (p.best_position - p.position)
             + config.c2 * r2 * (state.global_best_position - p.position))
        p.velocity = np.clip(v, -vmax, vmax)
        p.position = np.clip(p.position + p.velocity, lo, hi)
        moved.append(p.position)
    fitness = _evaluate(objective, moved, map_fn)
    for p, f in zip(state.particles, fitness):
        if f > p.best_fitness:
            p.best_fitness = f
            p.best_position = p.position.copy()
        if f > state.global_best_fitness:
            state.global_best_fitness = f
            state.global_best_position = p.position.copy()
    state.iteration += 1
    return state


@dataclass
class OptimizeResult:
    best_position: np.ndarray
    best_fitness: float
    trace: list  # (iteration, global best fitness, global best position)
    stop_reason: str

    def __iter__(self):
        return iter((self.best_position, self.best_fitness, self.trace))


def optimize(objective, config, initial_positions=(), map_fn=map):
    """Run until ``max_iters``, ``stall_iters`` without improvement of the
    global best, or ``target_fitness`` reached."""
    state = init_swarm(config, objective, initial_positions, map_fn)
    trace = [(0, state.global_best_fitness, state.global_best_position.copy())]
    stall = 0
    reason = "max_iters"
    while True:
        if config.target_fitness is not None and state.global_best_fitness >= config.target_fitness:
            reason = "target"
            break
        if state.iteration >= config.max_iters:
            break
        if stall >= config.stall_iters:
            reason = "stall"
            break
        before = state.global_best_fitness
        step(state, objective, config, map_fn)
        stall = 0 if state.global_best_fitness > before else stall + 1
        trace.append((state.iteration, state.global_best_fitness,
                      state.global_best_position.copy()))
    return OptimizeResult(state.global_best_position.copy(), state.global_best_fitness,
                          trace, reason)


def trace_to_csv(trace):
    """``iteration,best_fitness,c,sigma`` rows for a (log10 c, log10 sigma) trace."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "best_fitness", "c", "sigma"])
    for it, fit, pos in trace:
        c, sigma = 10.0 ** np.asarray(pos, dtype=np.float64)
        w.writerow([it, repr(float(fit)), repr(float(c)), repr(float(sigma))])
    return buf.getvalue()


@dataclass(frozen=True)
class SvmParams:
    c: float = 1.0  # empirical values; tune_svm can seed them into the swarm
    sigma: float = 1.0
    tol: float = 1e-3
    max_passes: int = 200

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def to_dict(self):
        return {"c": self.c, "sigma": self.sigma, "tol": self.tol, "max_passes": self.max_passes}


@dataclass
class TuneResult:
    c: float
    sigma: float
    fitness: float
    trace: list
    stop_reason: str


def tune_svm(X_train, y_train, X_verify, y_verify, swarm_config=SwarmConfig(),
             svm_params=SvmParams(), map_fn=map, include_empirical=False):
    """Search (log10 c, log10 sigma) for the best verification accuracy.

    The inputs must already be restricted to the selected feature columns.
    The swarm starts uniformly at random; with ``include_empirical`` the
    (c, sigma) of ``svm_params`` replaces the first particle instead.
    """
    y_verify = np.asarray(y_verify)
    classes = sorted(set(np.asarray(y_train).tolist()))

    def fitness(pos):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            model = train_multiclass(
                X_train, y_train, c=10.0 ** pos[0], sigma=10.0 ** pos[1],
                tol=svm_params.tol, max_passes=svm_params.max_passes, classes=classes,
            )
        pred = np.asarray(model.predict(X_verify))
        return float(np.mean(pred == y_verify))

    start = []
    if include_empirical:
        start.append((math.log10(svm_params.c), math.log10(svm_params.sigma)))
    res = optimize(fitness, swarm_config, initial_positions=start, map_fn=map_fn)
    c, sigma = (float(v) for v in 10.0 ** res.best_position)
    return TuneResult(c, sigma, res.best_fitness, res.trace, res.stop_reason)

