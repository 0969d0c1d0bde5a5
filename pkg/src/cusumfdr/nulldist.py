"""Exact in-control distribution of the discretized chart.

A bounded chart rounded onto ``n_states`` grid values is a finite-state
Markov chain under the in-control increment distribution, so its law at any
time ``t`` can be computed exactly from the one-step transition kernel
(Brook-Evans construction). The tail function

    P(s) = Prob(S*_t >= s)

is the p-value map used by the monitor: small tails mean the observed chart
value would be unusually high for a stream that has been in control.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm

from .chart import VARIANT_BOUNDED, ChartConfig

_ROW_SUM_TOL = 1e-12
_PROB_SUM_TOL = 1e-10


@dataclass(frozen=True)
class InControlModel:
    """In-control distribution of the chart increment, given by its CDF.

    Two models compare equal iff their ``name`` and ``params`` match; this is
    what keys the per-(config, model) caching for heterogeneous streams, so
    custom models should carry a distinguishing name.
    """

    name: str
    params: tuple[float, ...]
    cdf_fn: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False)

    @classmethod
    def gaussian(cls, mean: float = -0.5, sd: float = 1.0) -> "InControlModel":
        if not sd > 0:
            raise ValueError(f"sd must be > 0, got {sd}")
        return cls(name="gaussian", params=(float(mean), float(sd)),
                   cdf_fn=norm(loc=mean, scale=sd).cdf)

    @classmethod
    def point_mass(cls, at: float) -> "InControlModel":
        a = float(at)
        return cls(name="point_mass", params=(a,),
                   cdf_fn=lambda x: (np.asarray(x, dtype=float) >= a).astype(float))

    @classmethod
    def from_cdf(cls, cdf: Callable, name: str,
                 params: tuple[float, ...] = ()) -> "InControlModel":
        return cls(name=name, params=tuple(float(p) for p in params), cdf_fn=cdf)

    def cdf(self, x) -> np.ndarray:
        return np.asarray(self.cdf_fn(x), dtype=float)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic in-control kernel over the chart grid."""

    probs: np.ndarray  # (M+1, M+1), probs[i, k] = P(v_i -> v_k)
    grid: np.ndarray   # the M+1 grid values

    @property
    def n_states(self) -> int:
        return self.grid.size


def build_transition(config: ChartConfig, model: InControlModel) -> TransitionMatrix:
    """Brook-Evans one-step kernel of the discretized bounded chart.

    From grid value v_i the next state is 0 when the increment lands below
    w_1 - v_i, the top state when it lands at or above w_M - v_i, and the
    interior value v_k for increments in [w_k - v_i, w_{k+1} - v_i).
    """
    if config.variant != VARIANT_BOUNDED:
        raise ValueError("exact null distribution needs the bounded variant")
    if not config.has_grid:
        raise ValueError("exact null distribution needs a discretized chart (set n_states)")
    v = config.grid
    w = config.cuts
    F = model.cdf(w[None, :] - v[:, None])  # (M+1, M)
    n = v.size
    p = np.empty((n, n))
    p[:, 0] = F[:, 0]
    p[:, 1:-1] = np.diff(F, axis=1)
    p[:, -1] = 1.0 - F[:, -1]
    if np.any(p < 0.0):
        raise ValueError("transition kernel has a negative entry; in-control CDF is not non-decreasing")
    if np.any(p > 1.0):
        raise ValueError("transition kernel has an entry above 1; invalid in-control CDF")
    row_err = np.max(np.abs(p.sum(axis=1) - 1.0))
    if row_err > _ROW_SUM_TOL:
        raise ValueError(f"transition rows deviate from 1 by {row_err:.3e} (> {_ROW_SUM_TOL})")
    p.flags.writeable = False
    return TransitionMatrix(probs=p, grid=v)


@dataclass(frozen=True)
class NullDistribution:
    """Distribution of the in-control chart value at a fixed time ``t``.

    ``tail_values[k] = Prob(S*_t >= v_k)`` so ``tail_values[0] == 1`` up to
    float summation error and the sequence is non-increasing.
    """

    t: int
    grid: np.ndarray
    probs: np.ndarray
    tail_values: np.ndarray

    def p_value(self, s: float) -> float:
        """Prob(S*_t >= s), i.e. total mass on grid values >= s."""
        if not (0.0 <= s <= self.grid[-1]):
            raise ValueError(f"s={s} outside [0, {self.grid[-1]}]")
        k = int(np.searchsorted(self.grid, s, side="left"))
        return float(self.tail_values[k]) if k < self.grid.size else 0.0


def _make_distribution(t: int, grid: np.ndarray, probs: np.ndarray) -> NullDistribution:
    total = probs.sum()
    if abs(total - 1.0) > _PROB_SUM_TOL:
        raise ValueError(f"null distribution at t={t} sums to {total!r} (off by > {_PROB_SUM_TOL})")
    tail = np.cumsum(probs[::-1])[::-1]
    probs = probs.copy()
    probs.flags.writeable = False
    tail.flags.writeable = False
    return NullDistribution(t=t, grid=grid, probs=probs, tail_values=tail)


def distribution_at(transition: TransitionMatrix, t: int) -> NullDistribution:
    """Law of S*_t starting from the point mass at 0, by t vector-matrix products."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    v = np.zeros(transition.n_states)
    v[0] = 1.0
    for _ in range(t):
        v = v @ transition.probs
    return _make_distribution(t, transition.grid, v)


def distributions_up_to(transition: TransitionMatrix, t_max: int) -> list[NullDistribution]:
    """All null distributions for t = 0..t_max in one O(t_max * M^2) sweep."""
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    v = np.zeros(transition.n_states)
    v[0] = 1.0
    out = [_make_distribution(0, transition.grid, v)]
    for t in range(1, t_max + 1):
        v = v @ transition.probs
        out.append(_make_distribution(t, transition.grid, v))
    return out


def tail(dist: NullDistribution, s: float) -> float:
    """Tail probability Prob(S*_t >= s) of a null distribution."""
    return dist.p_value(s)


class NullDistributionCache:
    """Caches null distributions per distinct (config, model) pair.

    Homogeneous streams that share one config/model hit a single cache entry;
    heterogeneous streams each get their own chain.
    """

    def __init__(self):
        self._entries: dict[tuple[ChartConfig, InControlModel],
                            tuple[TransitionMatrix, list[NullDistribution]]] = {}

    def transition(self, config: ChartConfig, model: InControlModel) -> TransitionMatrix:
        return self._entry(config, model, 0)[0]

    def distribution(self, config: ChartConfig, model: InControlModel, t: int) -> NullDistribution:
        return self._entry(config, model, t)[1][t]

    def distributions(self, config: ChartConfig, model: InControlModel,
                      t_max: int) -> list[NullDistribution]:
        return self._entry(config, model, t_max)[1][:t_max + 1]

    def _entry(self, config, model, t_needed):
        key = (config, model)
        if key not in self._entries:
            transition = build_transition(config, model)
            self._entries[key] = (transition, distributions_up_to(transition, t_needed))
        transition, dists = self._entries[key]
        if len(dists) <= t_needed:
            v = dists[-1].probs
            for t in range(len(dists), t_needed + 1):
                v = v @ transition.probs
                dists.append(_make_distribution(t, transition.grid, v))
        return self._entries[key]
