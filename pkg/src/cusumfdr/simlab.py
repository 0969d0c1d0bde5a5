"""Regime-switching simulation lab and false-discovery accounting.

Streams flip between an in-control and an out-of-control state under a
two-state Markov chain, emit Gaussian chart increments accordingly, and are
monitored with the exact-null step-up pipeline. The accounting layer scores
every rejection against three progressively weaker notions of a stream being
"truly null" at time t:

* ``since_start`` -- in control at every time up to and including t;
* ``since_zero``  -- in control ever since some time tau <= t at which the
  stream's chart sat at 0 (tau = t itself qualifies whenever the chart is at
  0, regardless of the regime at t);
* ``instant``     -- in control at time t.

The monitored FDR is guaranteed for the first two definitions; the third is
reported for comparison but carries no control guarantee.

Reproducibility: replication r draws its regimes and observations from
counter-based substreams keyed (phase, r, purpose) off the master seed, so
any single replication can be regenerated in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fdr
from .chart import ChartConfig, IncrementModel
from .monitor import MonitorDecision
from .nulldist import InControlModel, NullDistribution, build_transition, distributions_up_to

NULL_SINCE_START = "since_start"
NULL_SINCE_ZERO = "since_zero"
NULL_INSTANT = "instant"
NULL_DEFS = (NULL_SINCE_START, NULL_SINCE_ZERO, NULL_INSTANT)

_PHASE_FDR = 0
_PHASE_STOCH = 1
_PURPOSE_REGIMES = 0
_PURPOSE_OBSERVATIONS = 1


class IntegrityError(ValueError):
    """Decisions and ground truth disagree on their (stream, time) indexing."""


class InsufficientSamplesError(RuntimeError):
    """Too few conditioned samples to test a stochastic ordering."""

    def __init__(self, t: int, count: int, required: int):
        super().__init__(
            f"only {count} conditioned samples at t={t}, need at least {required}")
        self.t = t
        self.count = count
        self.required = required


@dataclass(frozen=True)
class RegimeConfig:
    """Two-state regime chain: ``beta`` = P(in -> out), ``alpha`` = P(out -> in)."""

    alpha: float = 0.01
    beta: float = 0.07
    delta: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in [0, 1]")
        if self.delta < 0.0:
            raise ValueError("delta must be >= 0")


@dataclass(frozen=True)
class Scenario:
    """Full simulation scenario; the defaults match the reference study."""

    n_streams: int = 100
    horizon: int = 100
    regime: RegimeConfig = field(default_factory=RegimeConfig)
    h: float = 10.0
    n_states: int = 100
    q_star: float = 0.05

    def __post_init__(self):
        if self.n_streams < 1 or self.horizon < 0:
            raise ValueError("need n_streams >= 1 and horizon >= 0")
        if not (0.0 < self.q_star < 1.0):
            raise ValueError(f"q_star must lie in (0, 1), got {self.q_star}")

    def chart_config(self) -> ChartConfig:
        return ChartConfig.bounded(h=self.h, n_states=self.n_states,
                                   increment=IncrementModel.identity())

    def in_control_model(self) -> InControlModel:
        return InControlModel.gaussian(mean=-self.regime.delta / 2.0, sd=1.0)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator derived from a master seed and an integer key."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def simulate_regimes(n_streams: int, horizon: int, config: RegimeConfig,
                     seed) -> np.ndarray:
    """Boolean out-of-control matrix of shape (n_streams, horizon).

    Column j is the regime at time t = j+1. All streams start in control at
    time 0; each step flips in -> out with probability beta and out -> in with
    probability alpha, independently across streams.
    """
    if n_streams < 1 or horizon < 0:
        raise ValueError("need n_streams >= 1 and horizon >= 0")
    rng = np.random.default_rng(seed)
    u = rng.random((n_streams, horizon))
    out = np.zeros((n_streams, horizon), dtype=bool)
    prev = np.zeros(n_streams, dtype=bool)
    for t in range(horizon):
        prev = np.where(prev, u[:, t] >= config.alpha, u[:, t] < config.beta)
        out[:, t] = prev
    return out


def generate_observations(regimes: np.ndarray, delta: float, seed) -> np.ndarray:
    """Chart increments: N(-delta/2, 1) in control, N(+delta/2, 1) out of control."""
    regimes = np.asarray(regimes, dtype=bool)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(regimes.shape)
    return noise + np.where(regimes, delta / 2.0, -delta / 2.0)


def chart_index_paths(z: np.ndarray, config: ChartConfig) -> np.ndarray:
    """Grid-state index paths of shape (N, T+1) for an N x T increment matrix.

    Column 0 is the starting state (index 0); column t holds the state index
    after absorbing z[:, t-1].
    """
    if not config.has_grid:
        raise ValueError("index paths need a discretized chart config")
    z = np.asarray(z, dtype=float)
    n, horizon = z.shape
    grid, cuts, h = config.grid, config.cuts, config.h
    paths = np.zeros((n, horizon + 1), dtype=np.int64)
    k = np.zeros(n, dtype=np.int64)
    for t in range(horizon):
        x = np.clip(grid[k] + z[:, t], 0.0, h)
        k = np.searchsorted(cuts, x, side="right")
        paths[:, t + 1] = k
    return paths


@dataclass(frozen=True)
class GroundTruthLog:
    """Regime truth plus chart-zero times, with the three per-(i, t) null flags."""

    out_of_control: np.ndarray  # (N, T) bool, column j = time j+1
    chart_zero: np.ndarray      # (N, T+1) bool, column t = chart at 0 at time t
    since_start: np.ndarray     # (N, T) bool
    since_zero: np.ndarray      # (N, T) bool
    instant: np.ndarray         # (N, T) bool

    @classmethod
    def from_paths(cls, out_of_control: np.ndarray, chart_zero: np.ndarray) -> "GroundTruthLog":
        out = np.asarray(out_of_control, dtype=bool)
        zero = np.asarray(chart_zero, dtype=bool)
        n, horizon = out.shape
        if zero.shape != (n, horizon + 1):
            raise IntegrityError(
                f"chart_zero shape {zero.shape} does not match regimes {(n, horizon)}")
        if not zero[:, 0].all():
            raise IntegrityError("every chart starts at 0, so chart_zero[:, 0] must be all True")
        since_start = ~np.maximum.accumulate(out, axis=1)
        since_zero = np.empty((n, horizon), dtype=bool)
        last_out = np.zeros(n, dtype=np.int64)
        last_zero = np.zeros(n, dtype=np.int64)
        for t in range(1, horizon + 1):
            last_out = np.where(out[:, t - 1], t, last_out)
            last_zero = np.where(zero[:, t], t, last_zero)
            since_zero[:, t - 1] = last_zero >= last_out
        return cls(out_of_control=out, chart_zero=zero, since_start=since_start,
                   since_zero=since_zero, instant=~out)

    def flags(self, null_def: str) -> np.ndarray:
        if null_def == NULL_SINCE_START:
            return self.since_start
        if null_def == NULL_SINCE_ZERO:
            return self.since_zero
        if null_def == NULL_INSTANT:
            return self.instant
        raise ValueError(f"unknown null definition {null_def!r}; expected one of {NULL_DEFS}")

    def m0(self, null_def: str) -> np.ndarray:
        """Number of true nulls at each time, as a length-T vector."""
        return self.flags(null_def).sum(axis=0)


@dataclass(frozen=True)
class FalseDiscoveryAccount:
    """Per-time false-discovery counts under each null definition.

    ``v[j, d]`` counts rejections at time j+1 whose d-th null flag was true,
    ``r[j]`` all rejections, ``q = v / r`` with the 0/0 = 0 convention.
    """

    t: np.ndarray          # (T,)
    null_defs: tuple[str, ...]
    r: np.ndarray          # (T,)
    v: np.ndarray          # (T, len(null_defs))
    q: np.ndarray          # (T, len(null_defs))


def rejection_mask(decisions: Sequence[MonitorDecision], n_streams: int,
                   horizon: int) -> np.ndarray:
    """(N, T) boolean rejection matrix from a monitor decision sequence.

    Stream ids must be integers indexing 0..N-1 and every time 1..T must be
    covered exactly once; anything else raises :class:`IntegrityError`.
    """
    mask = np.zeros((n_streams, horizon), dtype=bool)
    seen = set()
    for d in decisions:
        if not (1 <= d.t <= horizon):
            raise IntegrityError(f"decision time {d.t} outside 1..{horizon}")
        if d.t in seen:
            raise IntegrityError(f"duplicate decision for time {d.t}")
        seen.add(d.t)
        for rec in d.records:
            i = rec.stream_id
            if not isinstance(i, (int, np.integer)) or not (0 <= i < n_streams):
                raise IntegrityError(f"stream id {rec.stream_id!r} does not index 0..{n_streams - 1}")
            mask[i, d.t - 1] = rec.rejected
    if len(seen) != horizon:
        raise IntegrityError(f"decisions cover {len(seen)} of {horizon} time steps")
    return mask


def account_masks(rejected: np.ndarray, truth: GroundTruthLog) -> FalseDiscoveryAccount:
    """Score an (N, T) rejection matrix against the ground truth."""
    rejected = np.asarray(rejected, dtype=bool)
    n, horizon = truth.out_of_control.shape
    if rejected.shape != (n, horizon):
        raise IntegrityError(
            f"rejection matrix shape {rejected.shape} does not match truth {(n, horizon)}")
    r = rejected.sum(axis=0)
    v = np.stack([(rejected & truth.flags(d)).sum(axis=0) for d in NULL_DEFS], axis=1)
    q = np.where(r[:, None] > 0, v / np.maximum(r[:, None], 1), 0.0)
    return FalseDiscoveryAccount(t=np.arange(1, horizon + 1), null_defs=NULL_DEFS,
                                 r=r, v=v, q=q)


def account(decisions: Sequence[MonitorDecision], truth: GroundTruthLog) -> FalseDiscoveryAccount:
    """Score a monitor decision sequence against the ground truth."""
    n, horizon = truth.out_of_control.shape
    return account_masks(rejection_mask(decisions, n, horizon), truth)


# ---------------------------------------------------------------------------
# Monte-Carlo FDR estimation
# ---------------------------------------------------------------------------

M0_QUANTILE_LABELS = ("q50", "q25", "q75", "q025", "q975")
_M0_QUANTILES = (0.5, 0.25, 0.75, 0.025, 0.975)
M0_NULL_DEFS = (NULL_SINCE_START, NULL_SINCE_ZERO)


@dataclass(frozen=True)
class FdrEstimate:
    """Monte-Carlo FDR estimates per (time, procedure, null definition).

    ``fdr[j, p, d]`` is the mean over replications of Q = V/R; ``m0_quantiles``
    holds, for the two guaranteed null definitions, the pointwise central
    quantiles listed in :data:`M0_QUANTILE_LABELS`.
    """

    scenario: Scenario
    procedures: tuple[str, ...]
    null_defs: tuple[str, ...]
    reps: int
    seed: int
    t: np.ndarray             # (T,)
    fdr: np.ndarray           # (T, P, D)
    v_mean: np.ndarray        # (T, P, D)
    r_mean: np.ndarray        # (T, P)
    m0_null_defs: tuple[str, ...]
    m0_mean: np.ndarray       # (T, 2)
    m0_se: np.ndarray         # (T, 2)
    m0_quantiles: np.ndarray  # (T, 2, 5)


def _simulate_replication(scenario: Scenario, seed: int, phase: int, rep: int):
    """One replication: regimes, increments, chart index paths, ground truth."""
    reg = scenario.regime
    out = simulate_regimes(scenario.n_streams, scenario.horizon, reg,
                           substream(seed, phase, rep, _PURPOSE_REGIMES))
    z = generate_observations(out, reg.delta,
                              substream(seed, phase, rep, _PURPOSE_OBSERVATIONS))
    paths = chart_index_paths(z, scenario.chart_config())
    truth = GroundTruthLog.from_paths(out, paths == 0)
    return z, paths, truth


def _null_tails(scenario: Scenario) -> np.ndarray:
    """Stacked tail functions, shape (T+1, n_states); row t serves time t."""
    transition = build_transition(scenario.chart_config(), scenario.in_control_model())
    dists = distributions_up_to(transition, scenario.horizon)
    return np.stack([d.tail_values for d in dists])


def _p_value_rows(paths: np.ndarray, tails: np.ndarray) -> np.ndarray:
    """(T, N) p-value matrix: row t-1 holds P(S*_t >= S_{i,t}) for all streams."""
    horizon = paths.shape[1] - 1
    t_idx = np.arange(1, horizon + 1)
    return tails[t_idx[:, None], paths[:, 1:].T]


def estimate_fdr(scenario: Scenario, procedures: Sequence[str] = fdr.PROCEDURES,
                 reps: int = 1000, seed: int = 0) -> FdrEstimate:
    """Replicate the full simulate -> monitor -> account pipeline.

    Every replication feeds the same simulated data to each procedure, so the
    procedure curves are directly comparable. Estimates are deterministic
    given (scenario, procedures, reps, seed).
    """
    procedures = fdr.validate_procedures(procedures)
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    horizon, n_proc, n_def = scenario.horizon, len(procedures), len(NULL_DEFS)
    tails = _null_tails(scenario)

    q_sum = np.zeros((horizon, n_proc, n_def))
    v_sum = np.zeros((horizon, n_proc, n_def))
    r_sum = np.zeros((horizon, n_proc))
    m0_samples = np.empty((reps, horizon, len(M0_NULL_DEFS)), dtype=np.int64)

    for rep in range(reps):
        _, paths, truth = _simulate_replication(scenario, seed, _PHASE_FDR, rep)
        p_rows = _p_value_rows(paths, tails)
        for j, name in enumerate(procedures):
            _, _, mask = fdr.apply_procedure(name, p_rows, scenario.q_star)
            acct = account_masks(mask.T, truth)
            q_sum[:, j, :] += acct.q
            v_sum[:, j, :] += acct.v
            r_sum[:, j] += acct.r
        for d, name in enumerate(M0_NULL_DEFS):
            m0_samples[rep, :, d] = truth.m0(name)

    quantiles = np.quantile(m0_samples, _M0_QUANTILES, axis=0)  # (5, T, 2)
    m0_se = m0_samples.std(axis=0, ddof=1) / np.sqrt(reps) if reps > 1 \
        else np.zeros((horizon, len(M0_NULL_DEFS)))
    return FdrEstimate(
        scenario=scenario, procedures=procedures, null_defs=NULL_DEFS,
        reps=reps, seed=seed, t=np.arange(1, horizon + 1),
        fdr=q_sum / reps, v_mean=v_sum / reps, r_mean=r_sum / reps,
        m0_null_defs=M0_NULL_DEFS, m0_mean=m0_samples.mean(axis=0),
        m0_se=m0_se, m0_quantiles=np.moveaxis(quantiles, 0, 2),
    )


# ---------------------------------------------------------------------------
# Stochastic-ordering validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StochOrderCheck:
    """Conditioned-chart distribution versus the exact null at one time point.

    ``dominance_gap`` is max over grid values of (null CDF - conditioned
    empirical CDF); stochastic dominance of the conditioned chart by the null
    chart means the gap should not exceed the DKW band. ``max_p_excess`` is
    the largest violation of Prob(p-value <= x) <= x over the atoms x of the
    null p-value distribution.
    """

    t: int
    n_samples: int
    dkw_epsilon: float
    dominance_gap: float
    max_p_excess: float
    grid: np.ndarray
    null_cdf: np.ndarray
    emp_cdf: np.ndarray
    atoms: np.ndarray
    atom_emp_prob: np.ndarray


@dataclass(frozen=True)
class StochOrderReport:
    scenario: Scenario
    reps: int
    seed: int
    checks: tuple[StochOrderCheck, ...]


def _dkw_epsilon(n: int, confidence: float = 0.99) -> float:
    return float(np.sqrt(np.log(2.0 / (1.0 - confidence)) / (2.0 * n)))


def check_stoch_order(scenario: Scenario, t_values: Sequence[int] = (25, 50, 75),
                      reps: int = 10000, seed: int = 0,
                      min_samples: int = 100000) -> StochOrderReport:
    """Empirically test that conditioning on the since-zero null keeps the chart
    stochastically below the in-control chart.

    Chart values at each requested time are collected from replications by
    rejection sampling: only (stream, replication) pairs whose since-zero flag
    holds at that time are kept. Raises :class:`InsufficientSamplesError` when
    a time point ends up with fewer than ``min_samples`` conditioned values.
    """
    t_values = tuple(int(t) for t in t_values)
    if any(t < 1 or t > scenario.horizon for t in t_values):
        raise ValueError(f"t values must lie in 1..{scenario.horizon}, got {t_values}")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")

    transition = build_transition(scenario.chart_config(), scenario.in_control_model())
    dists = distributions_up_to(transition, max(t_values))
    collected: dict[int, list[np.ndarray]] = {t: [] for t in t_values}
    for rep in range(reps):
        _, paths, truth = _simulate_replication(scenario, seed, _PHASE_STOCH, rep)
        for t in t_values:
            keep = truth.since_zero[:, t - 1]
            collected[t].append(paths[keep, t])

    checks = []
    for t in t_values:
        samples = np.concatenate(collected[t]) if collected[t] else np.empty(0, dtype=np.int64)
        n = samples.size
        if n < min_samples:
            raise InsufficientSamplesError(t=t, count=n, required=min_samples)
        checks.append(_build_check(t, samples, dists[t]))
    return StochOrderReport(scenario=scenario, reps=reps, seed=seed, checks=tuple(checks))


def _build_check(t: int, samples: np.ndarray, dist: NullDistribution) -> StochOrderCheck:
    n = samples.size
    n_states = dist.grid.size
    counts = np.bincount(samples, minlength=n_states)
    emp_cdf = np.cumsum(counts) / n
    null_cdf = np.cumsum(dist.probs)
    atoms = dist.tail_values
    # Prob(p-value <= atom) sums the mass of every state whose tail is <= the atom.
    le = atoms[None, :] <= atoms[:, None]  # le[k, j]: tail[j] <= tail[k]
    atom_emp_prob = (le @ counts) / n
    return StochOrderCheck(
        t=t, n_samples=int(n), dkw_epsilon=_dkw_epsilon(n),
        dominance_gap=float(np.max(null_cdf - emp_cdf)),
        max_p_excess=float(np.max(atom_emp_prob - atoms)),
        grid=dist.grid, null_cdf=null_cdf, emp_cdf=emp_cdf,
        atoms=atoms, atom_emp_prob=atom_emp_prob,
    )
