"""Repeated-game loop: adversaries, regret accounting, slope fitting.

The environment owns the loss vectors; learners only ever receive the
scalar loss of the action they played. Loss vectors are normalized into
the regime the learner was built for, so every realized loss lies in
[-1, 1] by construction.
"""

from __future__ import annotations

import dataclasses
import math
import time
import warnings
from typing import Callable, Protocol

import numpy as np

from . import banditrank, osmd_rank, perm_core

ALGORITHMS = ("banditrank", "osmdrank", "uniform")
ADVERSARIES = ("fixed", "noisy-fixed", "switch", "seasonal")
DEFAULT_SEASON = 500
_NORM_FLOOR = 1e-15


class Learner(Protocol):
    clip_events: int

    def propose(self, rng: np.random.Generator) -> np.ndarray: ...

    def observe(self, loss: float) -> None: ...


@dataclasses.dataclass(frozen=True)
class GameConfig:
    """One fully specified run: sizes, algorithm, adversary, seed, knobs.

    gamma/eta override the horizon-tuned defaults directly; c_gamma/c_eta
    rescale the formulas that produce them. regime defaults to the one the
    algorithm's guarantee is stated for (dual for banditrank, l1 for
    osmdrank) and only needs setting for the uniform baseline player.
    """

    n: int
    t_horizon: int
    algo: str
    adversary: str
    seed: int
    gamma: float | None = None
    eta: float | None = None
    c_gamma: float | None = None
    c_eta: float | None = None
    regime: str | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need at least two items, got n={self.n}")
        if self.t_horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.t_horizon}")
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 bits")
        if self.regime is not None and self.regime not in (perm_core.DUAL, perm_core.L1):
            raise ValueError(f"unknown regime {self.regime!r}")


def resolve_regime(algo: str, regime: str | None) -> str:
    if regime is not None:
        return regime
    return perm_core.L1 if algo == "osmdrank" else perm_core.DUAL


@dataclasses.dataclass
class RegretTrace:
    """Per-step loss bookkeeping plus the backfilled static comparator.

    cum_opt holds the running loss of the single best action chosen in
    hindsight from the whole run, so regret[-1] is the quantity the
    guarantees speak about; intermediate regret entries may be negative.
    step_seconds is wall-clock per round and is excluded from any
    byte-identity comparison.
    """

    loss: np.ndarray
    cum_loss: np.ndarray
    cum_opt: np.ndarray
    regret: np.ndarray
    step_seconds: np.ndarray
    clip_events: int
    steps: int

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1]) if self.steps > 0 else 0.0

    def timing_summary(self) -> dict[str, float]:
        if self.steps == 0:
            return {"median_s": 0.0, "p95_s": 0.0, "total_s": 0.0, "steps_per_second": 0.0}
        ts = self.step_seconds[: self.steps]
        total = float(ts.sum())
        return {
            "median_s": float(np.median(ts)),
            "p95_s": float(np.quantile(ts, 0.95)),
            "total_s": total,
            "steps_per_second": float(self.steps / total) if total > 0 else 0.0,
        }


class LearnerFailure(RuntimeError):
    """A learner raised mid-run; carries the 1-based step and partial trace."""

    def __init__(self, step: int, trace: RegretTrace, cause: BaseException) -> None:
        super().__init__(f"learner failed at step {step}: {cause}")
        self.step = step
        self.trace = trace


def normalize_loss(s: np.ndarray, regime: str) -> np.ndarray:
    """Rescale s so every action loss in the regime's action set is in [-1, 1]."""
    s = np.asarray(s, dtype=np.float64)
    norm = perm_core.dual_norm(s) if regime == perm_core.DUAL else float(np.abs(s).sum())
    if not (norm > _NORM_FLOOR):
        raise ValueError(f"loss vector has {regime} norm {norm:.3e}, cannot normalize")
    return s / norm


def base_profile(n: int) -> np.ndarray:
    """Default item losses: linear from +1 (item 0) down to -1 (item n-1)."""
    return 1.0 - 2.0 * np.arange(n) / (n - 1.0)


class FixedAdversary:
    def __init__(self, s: np.ndarray, regime: str) -> None:
        self.s = normalize_loss(s, regime)

    def __call__(self, t: int) -> np.ndarray:
        return self.s


class NoisyFixedAdversary:
    """Base profile plus independent uniform(-1/2, 1/2) noise per step."""

    def __init__(self, s: np.ndarray, regime: str, rng: np.random.Generator) -> None:
        self.base = np.asarray(s, dtype=np.float64)
        self.regime = regime
        self.rng = rng
        normalize_loss(self.base, regime)  # reject degenerate base up front

    def __call__(self, t: int) -> np.ndarray:
        noisy = self.base + self.rng.uniform(-0.5, 0.5, self.base.shape[0])
        return normalize_loss(noisy, self.regime)


class SwitchAdversary:
    """Base profile for the first half of the run, its negation after."""

    def __init__(self, s: np.ndarray, regime: str, t_horizon: int) -> None:
        self.first = normalize_loss(s, regime)
        self.second = -self.first
        self.flip_after = t_horizon // 2

    def __call__(self, t: int) -> np.ndarray:
        return self.second if t > self.flip_after else self.first


class SeasonalAdversary:
    """Rotating favorite: one item is cheap for `period` steps, then the next."""

    def __init__(self, n: int, period: int, regime: str) -> None:
        if period < 1:
            raise ValueError(f"season period must be at least 1, got {period}")
        self.n = n
        self.period = period
        profiles = []
        for f in range(n):
            s = np.full(n, 1.0 / (n - 1.0))
            s[f] = -1.0
            profiles.append(normalize_loss(s, regime))
        self.profiles = profiles

    def __call__(self, t: int) -> np.ndarray:
        return self.profiles[((t - 1) // self.period) % self.n]


def make_adversary(
    spec: str, n: int, t_horizon: int, regime: str, rng: np.random.Generator
) -> Callable[[int], np.ndarray]:
    """Build the loss generator for one run.

    Specs: `fixed` (optionally `fixed:v1,v2,...` for an explicit vector),
    `noisy-fixed`, `switch`, `seasonal` (optionally `seasonal:PERIOD`).
    Generators are oblivious: they see the step index and their own rng,
    never the player's actions.  Call with t = 1..T in order; noisy
    generators consume rng state per call.
    """
    name, _, arg = spec.partition(":")
    if name == "fixed":
        s = _parse_vector(arg, n) if arg else base_profile(n)
        return FixedAdversary(s, regime)
    if name == "noisy-fixed":
        if arg:
            raise ValueError(f"noisy-fixed takes no argument, got {spec!r}")
        return NoisyFixedAdversary(base_profile(n), regime, rng)
    if name == "switch":
        s = _parse_vector(arg, n) if arg else base_profile(n)
        return SwitchAdversary(s, regime, t_horizon)
    if name == "seasonal":
        period = int(arg) if arg else DEFAULT_SEASON
        return SeasonalAdversary(n, period, regime)
    raise ValueError(f"unknown adversary spec {spec!r}")


def _parse_vector(arg: str, n: int) -> np.ndarray:
    try:
        s = np.array([float(x) for x in arg.split(",")], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"bad loss vector {arg!r}") from exc
    if s.shape[0] != n:
        raise ValueError(f"loss vector has {s.shape[0]} entries, expected {n}")
    return s


class UniformLearner:
    """Baseline that ignores feedback and plays uniformly at random."""

    def __init__(self, n: int, regime: str) -> None:
        self.n = n
        self.regime = regime
        self.clip_events = 0

    def propose(self, rng: np.random.Generator) -> np.ndarray:
        c = perm_core.center(perm_core.random_permutation(self.n, rng))
        return perm_core.scale_to_q(c) if self.regime == perm_core.L1 else c

    def observe(self, loss: float) -> None:
        pass


def resolve_params(cfg: GameConfig) -> dict[str, float]:
    """Materialize the gamma/eta actually used, for manifests and learners."""
    if cfg.algo == "uniform":
        return {}
    mod = banditrank if cfg.algo == "banditrank" else osmd_rank
    kwargs = {}
    if cfg.c_eta is not None:
        kwargs["c_eta"] = cfg.c_eta
    if cfg.c_gamma is not None:
        kwargs["c_gamma"] = cfg.c_gamma
    params = mod.default_params(cfg.n, cfg.t_horizon, **kwargs)
    gamma = cfg.gamma if cfg.gamma is not None else params.gamma
    eta = cfg.eta if cfg.eta is not None else params.eta
    return {"gamma": float(gamma), "eta": float(eta)}


def make_learner(cfg: GameConfig) -> Learner:
    regime = resolve_regime(cfg.algo, cfg.regime)
    if cfg.algo == "uniform":
        return UniformLearner(cfg.n, regime)
    resolved = resolve_params(cfg)
    if cfg.algo == "banditrank":
        return banditrank.BanditRankLearner(
            cfg.n, banditrank.BanditRankParams(eta=resolved["eta"], gamma=resolved["gamma"])
        )
    return osmd_rank.OsmdRankLearner(
        cfg.n, osmd_rank.OsmdParams(eta=resolved["eta"], gamma=resolved["gamma"])
    )


def _comparator_action(total: np.ndarray, regime: str) -> np.ndarray:
    """Loss-minimizing static action for accumulated losses, in regime coords."""
    c = perm_core.center(perm_core.best_static(total))
    return perm_core.scale_to_q(c) if regime == perm_core.L1 else c


def run_game(cfg: GameConfig, _learner: Learner | None = None) -> RegretTrace:
    """Play the full repeated game and account regret.

    The learner and the adversary draw from independent streams spawned
    from the config seed, so identical configs replay bit-identically.
    The comparator column is backfilled after the loop: the best static
    action is computed from the summed loss vectors and its running loss
    fills cum_opt.  A learner exception aborts with LearnerFailure
    carrying the partial trace through the last completed step.

    _learner is a test hook; passing it bypasses algorithm construction
    but keeps the rng layout, adversary, and accounting identical.
    """
    regime = resolve_regime(cfg.algo, cfg.regime)
    learner = _learner if _learner is not None else make_learner(cfg)
    rng_learner = np.random.default_rng([int(cfg.seed), 0])
    rng_adv = np.random.default_rng([int(cfg.seed), 1])
    adversary = make_adversary(cfg.adversary, cfg.n, cfg.t_horizon, regime, rng_adv)

    T = cfg.t_horizon
    loss = np.zeros(T)
    step_seconds = np.zeros(T)
    svecs = np.zeros((T, cfg.n))
    done = 0
    failure: BaseException | None = None
    for t in range(1, T + 1):
        t0 = time.perf_counter()
        s = adversary(t)
        svecs[t - 1] = s
        try:
            action = learner.propose(rng_learner)
            step_loss = float(s @ action)
            # bandit feedback: the scalar is all the learner ever sees
            learner.observe(step_loss)
        except Exception as exc:  # noqa: BLE001 - converted to LearnerFailure
            failure = exc
            break
        loss[t - 1] = step_loss
        step_seconds[t - 1] = time.perf_counter() - t0
        done = t

    trace = _build_trace(cfg, regime, loss, step_seconds, svecs, done, learner)
    if failure is not None:
        raise LearnerFailure(done + 1, trace, failure) from failure
    return trace


def _build_trace(
    cfg: GameConfig,
    regime: str,
    loss: np.ndarray,
    step_seconds: np.ndarray,
    svecs: np.ndarray,
    done: int,
    learner: Learner,
) -> RegretTrace:
    loss = loss[:done].copy()
    cum_loss = np.cumsum(loss)
    if done > 0:
        star = _comparator_action(svecs[:done].sum(axis=0), regime)
        cum_opt = np.cumsum(svecs[:done] @ star)
    else:
        cum_opt = np.zeros(0)
    return RegretTrace(
        loss=loss,
        cum_loss=cum_loss,
        cum_opt=cum_opt,
        regret=cum_loss - cum_opt,
        step_seconds=step_seconds[:done].copy(),
        clip_events=int(getattr(learner, "clip_events", 0)),
        steps=done,
    )


def regret_slope(horizons: object, mean_regrets: object) -> float:
    """Least-squares slope of log mean regret against log horizon.

    Callers are expected to feed means over at least 10 seeds per horizon.
    Nonpositive means cannot enter the log fit; they are dropped with a
    warning, and at least three points must survive.
    """
    h = np.asarray(horizons, dtype=np.float64)
    r = np.asarray(mean_regrets, dtype=np.float64)
    if h.shape != r.shape or h.ndim != 1:
        raise ValueError("horizons and mean_regrets must be equal-length vectors")
    keep = r > 0
    if not np.all(keep):
        warnings.warn(
            f"dropping {int((~keep).sum())} nonpositive regret point(s) from slope fit",
            RuntimeWarning,
            stacklevel=2,
        )
    h, r = h[keep], r[keep]
    if h.shape[0] < 3:
        raise ValueError("need at least three positive points for a slope fit")
    return float(np.polyfit(np.log(h), np.log(r), 1)[0])
