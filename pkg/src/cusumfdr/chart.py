"""Non-restarting CUSUM charts with an optional upper boundary.

The chart statistic follows the recursion

    S_t = phi[ min( max(S_{t-1} + Z_t, 0), h ) ],    S_0 = 0,

where ``Z_t`` is the increment derived from the raw observation, ``h`` is an
upper boundary that stops the chart climbing arbitrarily high, and ``phi``
optionally rounds the statistic onto a finite grid so that its in-control
distribution can be computed exactly (see :mod:`cusumfdr.nulldist`).

Three variants are supported:

* ``"bounded"``      -- non-restarting, clamped at ``h``, optionally
                        discretized onto ``n_states`` grid values.
* ``"unbounded"``    -- non-restarting, no upper clamp, continuous.
* ``"restarting"``   -- classic behaviour: resets to 0 whenever the statistic
                        reaches the reset threshold ``zeta``, emitting a point
                        signal event at the reset time.

Non-restarting charts signal *periods*: maximal runs of time during which the
statistic sits at or above a threshold. The restarting chart signals isolated
reset times only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

VARIANT_BOUNDED = "bounded"
VARIANT_UNBOUNDED = "unbounded"
VARIANT_RESTARTING = "restarting"

_VARIANTS = (VARIANT_BOUNDED, VARIANT_UNBOUNDED, VARIANT_RESTARTING)


@dataclass(frozen=True)
class IncrementModel:
    """Maps a raw observation ``x`` to the chart increment ``z``.

    Kinds:

    * ``"identity"``:   z = x (observations already are increments).
    * ``"mean-shift"``: z = x - delta/2, the classic chart for detecting a
      mean shift of size ``delta`` in unit-variance data.
    * ``"loglik"``:     z = log f1(x) - log f0(x) for densities ``f0`` (in
      control) and ``f1`` (out of control).
    """

    kind: str
    delta: float | None = None
    f0: Callable[[np.ndarray], np.ndarray] | None = None
    f1: Callable[[np.ndarray], np.ndarray] | None = None

    @classmethod
    def identity(cls) -> "IncrementModel":
        return cls(kind="identity")

    @classmethod
    def mean_shift(cls, delta: float) -> "IncrementModel":
        if not delta > 0:
            raise ValueError(f"mean-shift delta must be > 0, got {delta}")
        return cls(kind="mean-shift", delta=float(delta))

    @classmethod
    def loglikelihood(cls, f0: Callable, f1: Callable) -> "IncrementModel":
        return cls(kind="loglik", f0=f0, f1=f1)

    def apply(self, x):
        """Return the increment for observation(s) ``x`` (scalar or array)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            z = x
        elif self.kind == "mean-shift":
            z = x - self.delta / 2.0
        elif self.kind == "loglik":
            d0 = np.asarray(self.f0(x), dtype=float)
            d1 = np.asarray(self.f1(x), dtype=float)
            if np.any(d0 <= 0.0) or np.any(d1 <= 0.0):
                raise ValueError("loglikelihood increment needs strictly positive densities")
            z = np.log(d1) - np.log(d0)
        else:
            raise ValueError(f"unknown increment kind {self.kind!r}")
        return float(z) if z.ndim == 0 else z


@dataclass(frozen=True)
class ChartConfig:
    """Parameters of a single CUSUM chart.

    ``n_states`` switches on the grid discretization: the statistic is rounded
    onto the ``n_states`` values ``v_k = k * h / M`` with ``M = n_states - 1``.
    Leave it ``None`` for a continuous-valued chart (no exact null
    distribution is then available).
    """

    h: float
    n_states: int | None = None
    variant: str = VARIANT_BOUNDED
    increment: IncrementModel = field(default_factory=IncrementModel.identity)
    zeta: float | None = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")
        if self.variant != VARIANT_UNBOUNDED:
            if not self.h > 0:
                raise ValueError(f"upper boundary h must be > 0, got {self.h}")
            if self.variant == VARIANT_BOUNDED and not np.isfinite(self.h):
                raise ValueError("bounded variant needs a finite h")
        if self.n_states is not None and self.n_states < 2:
            raise ValueError(f"n_states must be >= 2 (one grid interval), got {self.n_states}")
        if self.variant == VARIANT_RESTARTING:
            if self.zeta is None or not self.zeta > 0:
                raise ValueError("restarting variant needs a reset threshold zeta > 0")

    @classmethod
    def bounded(cls, h: float, n_states: int | None = None,
                increment: IncrementModel | None = None) -> "ChartConfig":
        return cls(h=h, n_states=n_states, variant=VARIANT_BOUNDED,
                   increment=increment or IncrementModel.identity())

    @classmethod
    def unbounded(cls, increment: IncrementModel | None = None) -> "ChartConfig":
        return cls(h=np.inf, variant=VARIANT_UNBOUNDED,
                   increment=increment or IncrementModel.identity())

    @classmethod
    def restarting(cls, zeta: float, increment: IncrementModel | None = None) -> "ChartConfig":
        return cls(h=np.inf, variant=VARIANT_RESTARTING, zeta=zeta,
                   increment=increment or IncrementModel.identity())

    @property
    def has_grid(self) -> bool:
        return self.n_states is not None

    @property
    def M(self) -> int:
        """Number of grid intervals; the grid has M + 1 values."""
        if self.n_states is None:
            raise ValueError("chart config has no grid (n_states is None)")
        return self.n_states - 1

    @cached_property
    def grid(self) -> np.ndarray:
        """Grid values v_k = k*h/M, k = 0..M, with v_M pinned to exactly h."""
        m = self.M
        v = np.arange(m + 1) * (self.h / m)
        v[-1] = self.h
        v.flags.writeable = False
        return v

    @cached_property
    def cuts(self) -> np.ndarray:
        """Cut points w_j = (h/M)(j - 1/2), j = 1..M, strictly inside (0, h)."""
        m = self.M
        w = (self.h / m) * (np.arange(1, m + 1) - 0.5)
        w.flags.writeable = False
        return w


@dataclass(frozen=True)
class ChartState:
    """Chart value at time ``t`` plus bookkeeping.

    ``signalling`` is only meaningful in fixed-threshold mode (standalone runs
    and the restarting variant); under FDR monitoring the rejection decision
    lives in the monitor's output instead. ``last_zero`` is the most recent
    time the statistic sat exactly at 0 (time 0 qualifies since S_0 = 0).
    """

    value: float = 0.0
    t: int = 0
    signalling: bool = False
    last_zero: int = 0


def discretize(x: float, config: ChartConfig) -> float:
    """Round ``x`` in [0, h] onto the chart grid.

    Returns 0 below the first cut, h at or above the last cut, and the grid
    value v_j for x in [w_j, w_{j+1}). Ties at a cut point round up.
    """
    if not config.has_grid:
        raise ValueError("discretize needs a grid; set n_states on the config")
    if not (0.0 <= x <= config.h):
        raise ValueError(f"x={x} outside [0, {config.h}]")
    k = int(np.searchsorted(config.cuts, x, side="right"))
    return float(config.grid[k])


def increment(x: float, model: IncrementModel) -> float:
    """Chart increment for a single raw observation."""
    return model.apply(x)


def update(state: ChartState, z: float, config: ChartConfig) -> ChartState:
    """Advance the chart one step with increment ``z``.

    Pure function: returns a new state. Restarting charts flag ``signalling``
    at the step where the raw statistic reaches ``zeta`` and reset to 0; the
    other variants never signal here (their signal periods are derived from
    the path, see :func:`run_standalone`).
    """
    t = state.t + 1
    raw = max(state.value + z, 0.0)
    signalling = False
    if config.variant == VARIANT_BOUNDED:
        clamped = min(raw, config.h)
        value = discretize(clamped, config) if config.has_grid else clamped
    elif config.variant == VARIANT_UNBOUNDED:
        value = raw
    else:  # restarting
        if raw >= config.zeta:
            signalling = True
            value = 0.0
        else:
            value = raw
    last_zero = t if value == 0.0 else state.last_zero
    return ChartState(value=value, t=t, signalling=signalling, last_zero=last_zero)


@dataclass(frozen=True)
class ChartRun:
    """Full path of a standalone chart run.

    ``states`` holds times 0..T inclusive. ``signal_intervals`` are the
    maximal runs [start, end] (inclusive, in time steps) with value >= zeta
    for the non-restarting variants; ``signal_times`` are the reset times for
    the restarting variant. Exactly one of the two is populated.
    """

    config: ChartConfig
    states: tuple[ChartState, ...]
    signal_intervals: tuple[tuple[int, int], ...]
    signal_times: tuple[int, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.states])


def run_standalone(observations: Sequence[float], config: ChartConfig,
                   zeta: float | None = None) -> ChartRun:
    """Run one chart over a whole observation sequence.

    ``zeta`` sets the signalling threshold for the non-restarting variants
    (defaults to the config's ``zeta`` when present). The restarting variant
    always uses its configured reset threshold.
    """
    obs = np.asarray(observations, dtype=float)
    if obs.size == 0:
        raise ValueError("empty observation sequence")
    if config.variant != VARIANT_RESTARTING:
        if zeta is None:
            zeta = config.zeta
        if zeta is None or not zeta > 0:
            raise ValueError("non-restarting runs need a signalling threshold zeta > 0")

    state = ChartState()
    states = [state]
    for x in obs:
        z = config.increment.apply(float(x))
        state = update(state, z, config)
        states.append(state)

    if config.variant == VARIANT_RESTARTING:
        times = tuple(s.t for s in states if s.signalling)
        return ChartRun(config=config, states=tuple(states),
                        signal_intervals=(), signal_times=times)

    states = [states[0]] + [replace(s, signalling=s.value >= zeta) for s in states[1:]]
    intervals = []
    start = None
    for s in states[1:]:
        if s.signalling:
            if start is None:
                start = s.t
        elif start is not None:
            intervals.append((start, s.t - 1))
            start = None
    if start is not None:
        intervals.append((start, states[-1].t))
    return ChartRun(config=config, states=tuple(states),
                    signal_intervals=tuple(intervals), signal_times=())
