"""Command-line entry point.

Subcommands:

* ``figure1``  -- one stream, fixed out-of-control window, three chart
  variants side by side (plot-ready CSV).
* ``figure2``  -- the reference simulation study: FDR curves, m0 quantile
  bands and stochastic-ordering diagnostics (three CSV files).
* ``simulate`` -- same outputs as ``figure2`` with every scenario knob
  exposed.
* ``nulldist`` -- dump the exact in-control chart distribution per time step.
* ``monitor``  -- run the FDR monitor over an observations CSV.

All randomised subcommands are deterministic given ``--seed``; the
``CUSUMFDR_SEED`` environment variable supplies a default seed and explicit
flags take precedence. Numeric CSV fields use full round-trip decimal
formatting.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import fdr, simlab
from .chart import ChartConfig, IncrementModel, run_standalone
from .monitor import StreamSpec, run
from .nulldist import InControlModel, build_transition, distributions_up_to

SEED_ENV_VAR = "CUSUMFDR_SEED"
DEFAULT_SEED = 0

FIGURE1_HEADER = ["t", "obs", "bounded", "unbounded", "restarting_signal", "truth"]
FDR_HEADER = ["t", "procedure", "null_def", "fdr", "V_mean", "R_mean"]
M0_HEADER = ["t", "null_def", "q50", "q25", "q75", "q025", "q975"]
STOCH_HEADER = ["t", "check", "x", "observed", "expected", "dkw_epsilon", "n"]
NULLDIST_HEADER = ["t", "state", "prob", "tail"]
OBSERVATIONS_HEADER = ["stream_id", "t", "value"]
DECISIONS_HEADER = ["t", "stream_id", "chart_value", "p_value", "rejected"]


def _fmt(x) -> str:
    return repr(float(x))


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValueError(f"{SEED_ENV_VAR}={env!r} is not an integer") from exc
    return DEFAULT_SEED


def _open_writer(path: Path):
    handle = open(path, "w", newline="")
    return handle, csv.writer(handle, lineterminator="\n")


# ---------------------------------------------------------------------------
# figure1
# ---------------------------------------------------------------------------

FIGURE1_WINDOW = (20, 60)


def figure1_paths(seed: int, horizon: int = 100, h: float = 10.0,
                  zeta: float = 5.0, delta: float = 1.0) -> dict:
    """Simulate the three-variant chart comparison on one shared stream.

    Increments are N(-delta/2, 1) in control and N(+delta/2, 1) inside the
    fixed out-of-control window. The bounded and unbounded charts here are
    continuous-valued (no grid), matching the restarting chart exactly until
    the first threshold crossing.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(1, horizon + 1)
    truth = (t >= FIGURE1_WINDOW[0]) & (t <= FIGURE1_WINDOW[1])
    z = rng.standard_normal(horizon) + np.where(truth, delta / 2.0, -delta / 2.0)
    bounded = run_standalone(z, ChartConfig.bounded(h=h), zeta=zeta)
    unbounded = run_standalone(z, ChartConfig.unbounded(), zeta=zeta)
    restarting = run_standalone(z, ChartConfig.restarting(zeta=zeta))
    return {
        "t": t,
        "obs": z,
        "truth": truth,
        "bounded": bounded,
        "unbounded": unbounded,
        "restarting": restarting,
    }


def run_figure1(seed: int, out_path) -> None:
    data = figure1_paths(seed)
    restart_times = set(data["restarting"].signal_times)
    bounded_values = data["bounded"].values
    unbounded_values = data["unbounded"].values
    handle, writer = _open_writer(Path(out_path))
    with handle:
        writer.writerow(FIGURE1_HEADER)
        for i, t in enumerate(data["t"]):
            writer.writerow([
                int(t),
                _fmt(data["obs"][i]),
                _fmt(bounded_values[t]),
                _fmt(unbounded_values[t]),
                int(t in restart_times),
                int(data["truth"][i]),
            ])


# ---------------------------------------------------------------------------
# simulate / figure2
# ---------------------------------------------------------------------------

def _stoch_t_values(horizon: int) -> tuple[int, ...]:
    return tuple(sorted({max(1, (horizon * k) // 4) for k in (1, 2, 3)}))


def _write_fdr_csv(path: Path, est: simlab.FdrEstimate) -> None:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(FDR_HEADER)
        for j, t in enumerate(est.t):
            for p, proc in enumerate(est.procedures):
                for d, null_def in enumerate(est.null_defs):
                    writer.writerow([int(t), proc, null_def,
                                     _fmt(est.fdr[j, p, d]),
                                     _fmt(est.v_mean[j, p, d]),
                                     _fmt(est.r_mean[j, p])])


def _write_m0_csv(path: Path, est: simlab.FdrEstimate) -> None:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(M0_HEADER)
        for j, t in enumerate(est.t):
            for d, null_def in enumerate(est.m0_null_defs):
                writer.writerow([int(t), null_def] +
                                [_fmt(q) for q in est.m0_quantiles[j, d]])


def _write_stoch_csv(path: Path, report: simlab.StochOrderReport | None) -> None:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(STOCH_HEADER)
        if report is None:
            return
        for check in report.checks:
            for k in range(check.grid.size):
                writer.writerow([check.t, "cdf_dominance", _fmt(check.grid[k]),
                                 _fmt(check.emp_cdf[k]), _fmt(check.null_cdf[k]),
                                 _fmt(check.dkw_epsilon), check.n_samples])
            for k in range(check.atoms.size):
                writer.writerow([check.t, "p_superuniformity", _fmt(check.atoms[k]),
                                 _fmt(check.atom_emp_prob[k]), _fmt(check.atoms[k]),
                                 _fmt(check.dkw_epsilon), check.n_samples])


def _run_study(scenario: simlab.Scenario, procedures, reps: int, seed: int,
               out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    est = simlab.estimate_fdr(scenario, procedures=procedures, reps=reps, seed=seed)
    report = None
    if scenario.horizon >= 1:
        report = simlab.check_stoch_order(scenario, t_values=_stoch_t_values(scenario.horizon),
                                          reps=reps, seed=seed, min_samples=0)
    _write_fdr_csv(out / "fdr_by_time.csv", est)
    _write_m0_csv(out / "m0_quantiles.csv", est)
    _write_stoch_csv(out / "stoch_order.csv", report)


def _cmd_simulate(args) -> None:
    scenario = simlab.Scenario(
        n_streams=args.n_streams,
        horizon=args.horizon,
        regime=simlab.RegimeConfig(alpha=args.alpha, beta=args.beta, delta=args.delta),
        h=args.h,
        n_states=args.states,
        q_star=args.q_star,
    )
    _run_study(scenario, tuple(args.procedures), args.reps,
               _resolve_seed(args.seed), args.out_dir)


def _cmd_figure2(args) -> None:
    scenario = simlab.Scenario()
    _run_study(scenario, tuple(args.procedures), args.reps,
               _resolve_seed(args.seed), args.out_dir)


def _cmd_figure1(args) -> None:
    run_figure1(_resolve_seed(args.seed), args.out)


# ---------------------------------------------------------------------------
# nulldist
# ---------------------------------------------------------------------------

def _cmd_nulldist(args) -> None:
    config = ChartConfig.bounded(h=args.h, n_states=args.states)
    model = InControlModel.gaussian(mean=-args.delta / 2.0, sd=1.0)
    dists = distributions_up_to(build_transition(config, model), args.t_max)
    handle, writer = _open_writer(Path(args.out))
    with handle:
        writer.writerow(NULLDIST_HEADER)
        for dist in dists:
            for k in range(dist.grid.size):
                writer.writerow([dist.t, _fmt(dist.grid[k]),
                                 _fmt(dist.probs[k]), _fmt(dist.tail_values[k])])


# ---------------------------------------------------------------------------
# monitor
# ---------------------------------------------------------------------------

def read_observations_csv(path) -> tuple[list[str], np.ndarray]:
    """Parse a ``stream_id,t,value`` CSV into (stream ids, N x T matrix).

    Streams are ordered by first appearance; per stream, the time stamps must
    be exactly 1..T_i. Streams with shorter records are NaN-padded (absent).
    """
    per_stream: dict[str, dict[int, float]] = {}
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != OBSERVATIONS_HEADER:
            raise ValueError(f"expected header {','.join(OBSERVATIONS_HEADER)!r} in {path}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{line_no}: expected 3 fields, got {len(row)}")
            stream_id = row[0]
            try:
                t = int(row[1])
                value = float(row[2])
            except ValueError:
                raise ValueError(f"{path}:{line_no}: malformed row {row!r}") from None
            slot = per_stream.setdefault(stream_id, {})
            if t in slot:
                raise ValueError(f"{path}:{line_no}: duplicate time {t} for stream {stream_id!r}")
            slot[t] = value

    ids = list(per_stream)
    if not ids:
        return [], np.empty((0, 0))
    for stream_id, slot in per_stream.items():
        expected = set(range(1, len(slot) + 1))
        if set(slot) != expected:
            raise ValueError(
                f"stream {stream_id!r}: time stamps must be contiguous from 1, got {sorted(slot)}")
    horizon = max(len(slot) for slot in per_stream.values())
    matrix = np.full((len(ids), horizon), np.nan)
    for i, stream_id in enumerate(ids):
        slot = per_stream[stream_id]
        for t, value in slot.items():
            matrix[i, t - 1] = value
    return ids, matrix


def write_decisions_csv(path, decisions) -> None:
    handle, writer = _open_writer(Path(path))
    with handle:
        writer.writerow(DECISIONS_HEADER)
        for decision in decisions:
            for rec in decision.records:
                writer.writerow([decision.t, rec.stream_id, _fmt(rec.chart_value),
                                 _fmt(rec.p_value), int(rec.rejected)])


def monitor_csv(in_path, out_path, h: float = 10.0, states: int = 100,
                delta: float = 1.0, q_star: float = 0.05,
                procedure: str = "bh") -> None:
    """Monitor an observations CSV and write the per-step decisions.

    Input values are treated as chart increments; the in-control increment
    model is N(-delta/2, 1), shared by all streams.
    """
    ids, matrix = read_observations_csv(in_path)
    config = ChartConfig.bounded(h=h, n_states=states,
                                 increment=IncrementModel.identity())
    model = InControlModel.gaussian(mean=-delta / 2.0, sd=1.0)
    specs = [StreamSpec(id=stream_id, config=config, model=model) for stream_id in ids]
    decisions = run(specs, matrix, procedure, q_star) if ids else []
    write_decisions_csv(out_path, decisions)


def _cmd_monitor(args) -> None:
    monitor_csv(args.input, args.out, h=args.h, states=args.states,
                delta=args.delta, q_star=args.q_star, procedure=args.procedure)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_chart_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--h", type=float, default=10.0, help="chart upper boundary")
    parser.add_argument("--states", type=int, default=100,
                        help="number of grid states for the discretized chart")
    parser.add_argument("--delta", type=float, default=1.0,
                        help="out-of-control mean shift of the increments")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cusumfdr",
        description="Non-restarting CUSUM charts with pointwise FDR control.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("figure1", help="three chart variants on one stream")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="figure1.csv")
    p.set_defaults(func=_cmd_figure1)

    p = sub.add_parser("figure2", help="reference FDR simulation study")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--procedures", nargs="+", choices=fdr.PROCEDURES,
                   default=list(fdr.PROCEDURES))
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_figure2)

    p = sub.add_parser("simulate", help="FDR simulation with custom scenario")
    p.add_argument("--n-streams", type=int, default=100)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.01,
                   help="per-step probability of returning in control")
    p.add_argument("--beta", type=float, default=0.07,
                   help="per-step probability of going out of control")
    _add_chart_flags(p)
    p.add_argument("--q-star", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--procedures", nargs="+", choices=fdr.PROCEDURES,
                   default=list(fdr.PROCEDURES))
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("nulldist", help="dump exact in-control chart distributions")
    _add_chart_flags(p)
    p.add_argument("--t-max", type=int, default=100)
    p.add_argument("--out", default="nulldist.csv")
    p.set_defaults(func=_cmd_nulldist)

    p = sub.add_parser("monitor", help="monitor an observations CSV")
    p.add_argument("--input", required=True, help="CSV with header stream_id,t,value")
    p.add_argument("--out", default="decisions.csv")
    _add_chart_flags(p)
    p.add_argument("--q-star", type=float, default=0.05)
    p.add_argument("--procedure", choices=fdr.PROCEDURES, default="bh")
    p.set_defaults(func=_cmd_monitor)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
