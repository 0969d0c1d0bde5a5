"""Multi-stream monitoring: charts -> p-values -> step-up rejection.

Each time step advances every stream's chart, converts the new chart values
to p-values through the exact in-control tail function for that stream, and
hands the p-values to a step-up procedure. Rejected streams are signalled
out-of-control at that time point; the false-discovery rate of those signals
is controlled pointwise in time at the chosen level.

Null distributions depend only on the time index, never on the data, so they
are precomputed up to the monitoring horizon once per distinct
(chart config, in-control model) pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import fdr
from .chart import ChartConfig, ChartState, update
from .nulldist import InControlModel, NullDistribution, NullDistributionCache


@dataclass(frozen=True)
class StreamSpec:
    """One monitored stream: identifier, chart parameters, in-control model."""

    id: object
    config: ChartConfig
    model: InControlModel


@dataclass(frozen=True)
class StreamRecord:
    stream_id: object
    chart_value: float
    p_value: float
    rejected: bool


@dataclass(frozen=True)
class MonitorDecision:
    """Per-time-step monitoring outcome for all streams present at that step."""

    t: int
    records: tuple[StreamRecord, ...]
    procedure: str
    q_star: float

    @property
    def rejected_ids(self) -> frozenset:
        return frozenset(r.stream_id for r in self.records if r.rejected)


class NullTable:
    """Precomputed null tails for every stream group up to a horizon."""

    def __init__(self, specs: Sequence[StreamSpec], horizon: int):
        if horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {horizon}")
        _check_unique_ids(specs)
        self.horizon = horizon
        cache = NullDistributionCache()
        self._dists: dict = {}
        self._key_of: dict = {}
        for spec in specs:
            key = (spec.config, spec.model)
            if key not in self._dists:
                self._dists[key] = cache.distributions(spec.config, spec.model, horizon)
            self._key_of[spec.id] = key

    def distribution(self, stream_id, t: int) -> NullDistribution:
        if not (0 <= t <= self.horizon):
            raise ValueError(f"t={t} outside precomputed horizon 0..{self.horizon}")
        return self._dists[self._key_of[stream_id]][t]

    def p_value(self, stream_id, t: int, value: float) -> float:
        return self.distribution(stream_id, t).p_value(value)


def _check_unique_ids(specs: Sequence[StreamSpec]):
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        raise ValueError("stream ids must be unique")


def _is_absent(x) -> bool:
    return x is None or (isinstance(x, float) and np.isnan(x)) or \
        (np.isscalar(x) and np.isnan(float(x)))


def step(specs: Sequence[StreamSpec], states: Sequence[ChartState],
         observations: Sequence, t: int, procedure: str, q_star: float,
         nulls: NullTable) -> tuple[list[ChartState], MonitorDecision]:
    """Advance all charts one step and test them jointly.

    ``observations`` holds one raw value per stream; ``None``/NaN marks a
    stream absent at this step: its chart is left untouched and it is
    excluded from the test set (shrinking N for the step-up rule).
    """
    if not (len(specs) == len(states) == len(observations)):
        raise ValueError("specs, states and observations must have equal length")
    fdr.validate_procedures([procedure])

    new_states: list[ChartState] = []
    present: list[int] = []
    p_values: list[float] = []
    for i, (spec, state, obs) in enumerate(zip(specs, states, observations)):
        if _is_absent(obs):
            new_states.append(state)
            continue
        z = spec.config.increment.apply(float(obs))
        new_state = update(state, z, spec.config)
        new_states.append(new_state)
        present.append(i)
        p_values.append(nulls.p_value(spec.id, t, new_state.value))

    if present:
        _, _, mask = fdr.apply_procedure(procedure, np.array(p_values), q_star)
    else:
        mask = np.zeros(0, dtype=bool)
    records = tuple(
        StreamRecord(stream_id=specs[i].id,
                     chart_value=new_states[i].value,
                     p_value=p_values[j],
                     rejected=bool(mask[j]))
        for j, i in enumerate(present)
    )
    decision = MonitorDecision(t=t, records=records, procedure=procedure, q_star=q_star)
    return new_states, decision


def run(specs: Sequence[StreamSpec], observations: np.ndarray, procedure: str,
        q_star: float) -> list[MonitorDecision]:
    """Monitor a rectangular N x T observation matrix over t = 1..T.

    NaN entries mark absent observations. Null distributions for every stream
    group are computed once for the whole horizon before the loop starts.
    """
    obs = np.asarray(observations, dtype=float)
    if obs.ndim != 2:
        raise ValueError(f"observations must be a 2-D N x T matrix, got shape {obs.shape}")
    if obs.shape[0] != len(specs):
        raise ValueError(f"{obs.shape[0]} observation rows for {len(specs)} streams")
    horizon = obs.shape[1]
    nulls = NullTable(specs, horizon)
    states = [ChartState() for _ in specs]
    decisions: list[MonitorDecision] = []
    for t in range(1, horizon + 1):
        states, decision = step(specs, states, obs[:, t - 1], t, procedure, q_star, nulls)
        decisions.append(decision)
    return decisions


def signal_periods(decisions: Sequence[MonitorDecision], stream_id) -> list[tuple[int, int]]:
    """Maximal runs of consecutive rejections for one stream, as [start, end]."""
    intervals: list[tuple[int, int]] = []
    start = None
    prev_t = None
    for d in decisions:
        rejected = any(r.stream_id == stream_id and r.rejected for r in d.records)
        if rejected:
            if start is None or (prev_t is not None and d.t != prev_t + 1):
                if start is not None:
                    intervals.append((start, prev_t))
                start = d.t
            prev_t = d.t
        elif start is not None:
            intervals.append((start, prev_t))
            start = None
    if start is not None:
        intervals.append((start, prev_t))
    return intervals
