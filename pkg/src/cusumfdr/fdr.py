"""Step-up multiple-testing procedures.

The linear step-up rule rejects the k hypotheses with the smallest p-values,
where k is the largest i such that the i-th smallest p-value is at most
(i/N) * level. ``two_step`` and ``adaptive_step_up`` first estimate the
number of true nulls and re-run the linear rule at an inflated level.

All procedures are pure functions. The array-level helpers at the bottom
operate row-wise on stacked p-value matrices and back both the object-level
API and the simulation lab's batch pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import Iterable

import numpy as np

PROCEDURES = ("bh", "two-step", "adaptive")

# Largest admissible step-up level; adaptive levels q*N/m0_hat are capped here.
_LEVEL_CAP = float(np.nextafter(1.0, 0.0))

_DEFAULT_PLUG_IN_LAMBDA = 0.5


@dataclass(frozen=True)
class PValueSet:
    """p-values for N streams, keyed by stream id."""

    ids: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("p-values must form a non-empty 1-D vector")
        if len(self.ids) != vals.size:
            raise ValueError(f"{len(self.ids)} ids for {vals.size} p-values")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("stream ids must be unique")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0.0) or np.any(vals > 1.0):
            raise ValueError("p-values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, values, ids=None) -> "PValueSet":
        vals = np.asarray(values, dtype=float)
        if ids is None:
            ids = tuple(range(vals.size))
        return cls(ids=tuple(ids), values=vals)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class RejectionSet:
    """Outcome of a step-up procedure.

    ``k`` is the step-up cut index (= number of rejections), ``level_used``
    the final linear step-up level after any adaptation.
    """

    rejected: frozenset
    k: int
    level_used: float


@dataclass(frozen=True)
class M0Estimator:
    """Estimator of the number of true null hypotheses.

    * ``oracle(m0)``: return the supplied count, clamped to [1, N].
    * ``two_step_stage1(q)``: N minus the rejections of a first-stage linear
      step-up at q/(1+q).
    * ``plug_in(lam)``: ceil((N + 1 - #{p_i <= lam}) / (1 - lam)), clamped.
    """

    kind: str
    m0: int | None = None
    q: float | None = None
    lam: float | None = None

    @classmethod
    def oracle(cls, m0: int) -> "M0Estimator":
        return cls(kind="oracle", m0=int(m0))

    @classmethod
    def two_step_stage1(cls, q: float) -> "M0Estimator":
        _validate_level(q)
        return cls(kind="two-step-stage1", q=float(q))

    @classmethod
    def plug_in(cls, lam: float = _DEFAULT_PLUG_IN_LAMBDA) -> "M0Estimator":
        if not (0.0 < lam < 1.0):
            raise ValueError(f"plug-in lambda must lie in (0, 1), got {lam}")
        return cls(kind="plug-in", lam=float(lam))


def _validate_level(q: float):
    if not (0.0 < q < 1.0):
        raise ValueError(f"FDR level must lie in (0, 1), got {q}")


def _as_pvalue_set(p) -> PValueSet:
    return p if isinstance(p, PValueSet) else PValueSet.from_values(p)


def _to_rejection_set(p: PValueSet, k: int, level: float, mask: np.ndarray) -> RejectionSet:
    ids = frozenset(sid for sid, hit in zip(p.ids, mask) if hit)
    return RejectionSet(rejected=ids, k=int(k), level_used=float(level))


def bh(p, q: float) -> RejectionSet:
    """Linear step-up procedure at level ``q``.

    Rejects the k smallest p-values where k is the largest i with
    P_(i) <= (i/N) q; no tie can straddle the cut, so the rejected set is
    exactly {i : p_i <= (k/N) q}.
    """
    _validate_level(q)
    p = _as_pvalue_set(p)
    k, level, mask = step_up_masks(p.values, q)
    return _to_rejection_set(p, k, level, mask)


def two_step(p, q: float) -> RejectionSet:
    """Two-stage procedure: estimate m0 from a first pass at q/(1+q).

    Stage 1 runs the linear step-up at q' = q/(1+q) giving r1 rejections.
    r1 = 0 rejects nothing, r1 = N rejects everything; otherwise stage 2
    reruns the step-up at level q' * N / (N - r1).
    """
    _validate_level(q)
    p = _as_pvalue_set(p)
    k, level, mask = two_step_masks(p.values, q)
    return _to_rejection_set(p, k, level, mask)


def adaptive_step_up(p, q: float, est: M0Estimator | None = None) -> RejectionSet:
    """Adaptive linear step-up: plain step-up at level q * N / m0_hat.

    Defaults to the plug-in estimator with lambda = 0.5. The adapted level is
    capped just below 1 so it stays a valid step-up level.
    """
    _validate_level(q)
    p = _as_pvalue_set(p)
    if est is None:
        est = M0Estimator.plug_in()
    m0_hat = estimate_m0(p, est)
    level = min(q * p.n / m0_hat, _LEVEL_CAP)
    k, level, mask = step_up_masks(p.values, level)
    return _to_rejection_set(p, k, level, mask)


def estimate_m0(p, est: M0Estimator) -> int:
    """Estimated number of true nulls, always in [1, N]."""
    p = _as_pvalue_set(p)
    n = p.n
    if est.kind == "oracle":
        return int(min(max(est.m0, 1), n))
    if est.kind == "two-step-stage1":
        if est.q is None:
            raise ValueError("two-step-stage1 estimator needs its target level q")
        q1 = est.q / (1.0 + est.q)
        r1, _, _ = step_up_masks(p.values, q1)
        return int(min(max(n - int(r1), 1), n))
    if est.kind == "plug-in":
        if est.lam is None or not (0.0 < est.lam < 1.0):
            raise ValueError("plug-in estimator needs lambda in (0, 1)")
        count = int(np.sum(p.values <= est.lam))
        m0_hat = ceil((n + 1 - count) / (1.0 - est.lam))
        return int(min(max(m0_hat, 1), n))
    raise ValueError(f"unknown m0 estimator kind {est.kind!r}")


# ---------------------------------------------------------------------------
# Array-level core: rows of p-values, possibly one level per row.
# ---------------------------------------------------------------------------

def _step_up_k(p: np.ndarray, levels) -> np.ndarray:
    """Step-up cut index per row of ``p`` (shape (R, N)); ``levels`` scalar or (R,)."""
    r, n = p.shape
    p_sorted = np.sort(p, axis=1)
    thresholds = np.multiply.outer(np.broadcast_to(np.asarray(levels, dtype=float), (r,)),
                                   np.arange(1, n + 1) / n)
    ok = p_sorted <= thresholds
    k = np.where(ok.any(axis=1), n - np.argmax(ok[:, ::-1], axis=1), 0)
    return k


def step_up_masks(p: np.ndarray, levels):
    """Row-wise linear step-up.

    Accepts a single p-value vector or an (R, N) stack, with a scalar level or
    one level per row. Returns ``(k, level, mask)`` with the leading axis
    dropped for 1-D input. Levels are not restricted to (0, 1) here; the
    public procedures validate their own q.
    """
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    p2 = np.atleast_2d(p)
    r, n = p2.shape
    levels = np.broadcast_to(np.asarray(levels, dtype=float), (r,))
    k = _step_up_k(p2, levels)
    cut = (k / n) * levels
    mask = p2 <= cut[:, None]
    if single:
        return int(k[0]), float(levels[0]), mask[0]
    return k, levels.copy(), mask


def two_step_masks(p: np.ndarray, q: float):
    """Row-wise two-stage procedure; same shapes as :func:`step_up_masks`."""
    _validate_level(q)
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    p2 = np.atleast_2d(p)
    r, n = p2.shape
    q1 = q / (1.0 + q)
    k1 = _step_up_k(p2, np.full(r, q1))
    middle = (k1 > 0) & (k1 < n)
    levels = np.full(r, q1)
    levels[middle] = q1 * n / (n - k1[middle])
    k = k1.copy()
    if middle.any():
        k[middle] = _step_up_k(p2[middle], levels[middle])
    cut = (k / n) * levels
    mask = p2 <= cut[:, None]
    if single:
        return int(k[0]), float(levels[0]), mask[0]
    return k, levels, mask


def adaptive_masks(p: np.ndarray, q: float, lam: float = _DEFAULT_PLUG_IN_LAMBDA):
    """Row-wise adaptive step-up with the plug-in m0 estimator."""
    _validate_level(q)
    if not (0.0 < lam < 1.0):
        raise ValueError(f"plug-in lambda must lie in (0, 1), got {lam}")
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    p2 = np.atleast_2d(p)
    r, n = p2.shape
    counts = np.sum(p2 <= lam, axis=1)
    m0_hat = np.ceil((n + 1 - counts) / (1.0 - lam))
    m0_hat = np.clip(m0_hat, 1, n)
    levels = np.minimum(q * n / m0_hat, _LEVEL_CAP)
    k = _step_up_k(p2, levels)
    cut = (k / n) * levels
    mask = p2 <= cut[:, None]
    if single:
        return int(k[0]), float(levels[0]), mask[0]
    return k, levels, mask


def apply_procedure(name: str, p: np.ndarray, q: float):
    """Dispatch a named procedure on stacked p-value rows.

    ``name`` is one of ``"bh"``, ``"two-step"``, ``"adaptive"`` (adaptive uses
    the default plug-in estimator). Returns ``(k, level, mask)``.
    """
    if name == "bh":
        _validate_level(q)
        return step_up_masks(p, q)
    if name == "two-step":
        return two_step_masks(p, q)
    if name == "adaptive":
        return adaptive_masks(p, q)
    raise ValueError(f"unknown procedure {name!r}; expected one of {PROCEDURES}")


def validate_procedures(names: Iterable[str]) -> tuple[str, ...]:
    names = tuple(names)
    if not names:
        raise ValueError("need at least one procedure")
    for name in names:
        if name not in PROCEDURES:
            raise ValueError(f"unknown procedure {name!r}; expected one of {PROCEDURES}")
    return names
