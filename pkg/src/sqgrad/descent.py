"""Stochastic quantized descent driven by single-sample gradient estimates.

Each step draws one estimator realisation at the current state, moves
against (or along) the estimated gradient with a scheduled step size,
and clamps the state away from the boundary:

    state <- clamp(state -+ eta_t * G_t)

For probability-space estimators the state is x itself and the clamp
keeps x in [delta, 1 - delta]^d.  For the encoded estimator the same
update runs on e with the clamp mapped through the encoding, and states
are decoded back to probabilities for reporting.  With the long-jump
tuple the encoding is linear, so the two loops coincide step for step.

Trajectories record the raw oracle response at every query together
with the running best, which is what the benchmark harness aggregates.
Randomness is derived from integer seeds through ``SeedSequence`` so
that every trial is replayable in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError, ScheduleError
from .estimators import Estimator, make_estimator
from .oracles import Oracle, ProblemSpec

__all__ = [
    "Schedule",
    "DescentConfig",
    "Trajectory",
    "sqd",
    "encoded_sqd",
    "run_repeated",
    "derive_rng",
    "derive_seed",
]

_SCHEDULE_KINDS = ("constant", "inverse_sqrt", "inverse_t")


def derive_rng(*key: int) -> np.random.Generator:
    """Deterministic generator for a tuple of nonnegative integers."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def derive_seed(*key: int) -> int:
    """Deterministic child seed for a tuple of nonnegative integers."""
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1)[0])


@dataclass(frozen=True)
class Schedule:
    """Step-size schedule eta_t for t = 1, 2, ...

    ``constant``: eta; ``inverse_sqrt``: eta / sqrt(t); ``inverse_t``:
    eta / t.
    """

    kind: str
    eta: float

    def __post_init__(self):
        if self.kind not in _SCHEDULE_KINDS:
            raise ScheduleError(
                f"unknown schedule {self.kind!r}; known: {', '.join(_SCHEDULE_KINDS)}"
            )
        if not self.eta > 0.0:
            raise ScheduleError("step size must be positive")

    def rate(self, t: int) -> float:
        if t < 1:
            raise ScheduleError("steps are counted from 1")
        if self.kind == "constant":
            return self.eta
        if self.kind == "inverse_sqrt":
            return self.eta / np.sqrt(t)
        return self.eta / t


@dataclass(frozen=True)
class DescentConfig:
    """Everything one descent run needs besides the oracle."""

    estimator: str
    steps: int
    schedule: Schedule
    direction: str = "minimize"
    x0: float | tuple = 0.5  # scalar broadcasts over coordinates
    clamp: float = 1e-4
    seed: int = 0
    snapshot_every: int | None = None  # default: max(1, steps // 1000)

    def __post_init__(self):
        if int(self.steps) < 1:
            raise ConfigError("steps must be at least 1")
        if self.direction not in ("minimize", "maximize"):
            raise ConfigError(f"unknown direction {self.direction!r}")
        if not 0.0 < self.clamp < 0.5:
            raise ConfigError("clamp must lie in (0, 1/2)")
        if int(self.seed) < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.snapshot_every is not None and int(self.snapshot_every) < 1:
            raise ConfigError("snapshot_every must be positive")


@dataclass
class Trajectory:
    """Per-query record of one descent run.

    ``calls``, ``raw`` and ``best`` are aligned per oracle response;
    two-call estimators therefore contribute two entries per step.
    Snapshots hold decoded probability vectors at step 0 and every
    snapshot stride.
    """

    estimator: str
    direction: str
    calls: np.ndarray
    raw: np.ndarray
    best: np.ndarray
    snapshot_steps: np.ndarray
    snapshots: np.ndarray
    final_x: np.ndarray
    seed: int = 0


def _initial_states(
    est: Estimator, configs: list[DescentConfig], d: int
) -> tuple[np.ndarray, float, float]:
    lo, hi = est.state_bounds(configs[0].clamp)
    rows = []
    for cfg in configs:
        x0 = np.asarray(cfg.x0, dtype=float)
        x0 = np.broadcast_to(x0, (d,)).astype(float)
        if np.any(x0 <= 0.0) or np.any(x0 >= 1.0):
            raise DomainError("x0 must lie strictly inside (0, 1)^d")
        rows.append(np.clip(est.encode(x0), lo, hi))
    return np.array(rows), lo, hi


def _run_group(configs: list[DescentConfig], oracles: list[Oracle]) -> list[Trajectory]:
    """Run one trial per config in lockstep.

    All configs must agree on everything but the seed.  Each trial
    consumes only its own derived stream, so the trajectories are
    identical to running the trials one at a time.
    """
    head = configs[0]
    for cfg in configs[1:]:
        if replace(cfg, seed=head.seed) != head:
            raise ConfigError("grouped trials must share one configuration")
    if len(oracles) != len(configs):
        raise ConfigError("need one oracle per trial")

    est = make_estimator(head.estimator)
    d = oracles[0].d
    if any(o.d != d for o in oracles):
        raise ConfigError("grouped oracles must share one dimension")

    m = len(configs)
    steps = int(head.steps)
    qps = est.queries_per_sample
    stride = int(head.snapshot_every or max(1, steps // 1000))
    sign = 1.0 if head.direction == "maximize" else -1.0
    shared = all(o is oracles[0] for o in oracles)

    states, lo, hi = _initial_states(est, configs, d)
    rngs = [derive_rng(cfg.seed) for cfg in configs]

    raw = np.empty((m, steps * qps))
    snap_steps = [0]
    snaps = [np.array([est.decode(row) for row in states])]

    for t in range(1, steps + 1):
        eta = head.schedule.rate(t)
        noise = np.stack([est.draw_noise(rng, d) for rng in rngs])
        batch = est.evaluate(states, noise, oracles[0] if shared else oracles)
        states = np.clip(states + sign * eta * batch.grads, lo, hi)
        raw[:, (t - 1) * qps : t * qps] = batch.raw
        if t % stride == 0:
            snap_steps.append(t)
            snaps.append(np.array([est.decode(row) for row in states]))

    calls = np.arange(1, steps * qps + 1, dtype=np.int64)
    running = np.maximum.accumulate if sign > 0 else np.minimum.accumulate
    best = running(raw, axis=1)
    snap_steps_arr = np.asarray(snap_steps, dtype=np.int64)
    snaps_arr = np.stack(snaps, axis=1)  # (m, n_snaps, d)

    out = []
    for i, cfg in enumerate(configs):
        out.append(
            Trajectory(
                estimator=est.spec,
                direction=head.direction,
                calls=calls.copy(),
                raw=raw[i].copy(),
                best=best[i].copy(),
                snapshot_steps=snap_steps_arr.copy(),
                snapshots=snaps_arr[i].copy(),
                final_x=np.asarray(est.decode(states[i]), dtype=float),
                seed=cfg.seed,
            )
        )
    return out


def sqd(config: DescentConfig, oracle: Oracle) -> tuple[Trajectory, np.ndarray]:
    """One descent run in probability space; returns (trajectory, final x)."""
    if make_estimator(config.estimator).encoded:
        raise ConfigError("encoded estimators run through encoded_sqd")
    traj = _run_group([config], [oracle])[0]
    return traj, traj.final_x


def encoded_sqd(config: DescentConfig, oracle: Oracle) -> tuple[Trajectory, np.ndarray]:
    """One descent run in the encoding domain; reports decoded states."""
    if not make_estimator(config.estimator).encoded:
        raise ConfigError("encoded_sqd needs an encoded_esg estimator")
    traj = _run_group([config], [oracle])[0]
    return traj, traj.final_x


def run_repeated(
    config: DescentConfig,
    problem: ProblemSpec,
    n_trials: int,
    base_seed: int,
) -> list[Trajectory]:
    """Independent trials with derived seeds; trial i uses
    seed = derive_seed(base_seed, i), and randomized problem families
    get a fresh instance per trial from the matching derivation."""
    if int(n_trials) < 1:
        raise ConfigError("n_trials must be at least 1")
    configs = [
        replace(config, seed=derive_seed(base_seed, i)) for i in range(int(n_trials))
    ]
    if problem.randomized:
        oracles = [problem.make(derive_rng(base_seed, i, 1)) for i in range(int(n_trials))]
    else:
        shared = problem.make(derive_rng(base_seed, 0, 1))
        oracles = [shared] * int(n_trials)
    return _run_group(configs, oracles)
