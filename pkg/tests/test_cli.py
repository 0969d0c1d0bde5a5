import csv

import numpy as np

from cusumfdr import cli, simlab
from cusumfdr.chart import ChartConfig, IncrementModel
from cusumfdr.monitor import StreamSpec, run
from cusumfdr.nulldist import InControlModel


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


class TestFigure1:
    def test_csv_shape_and_truth_window(self, tmp_path):
        out = tmp_path / "fig1.csv"
        assert cli.main(["figure1", "--seed", "5", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert rows[0] == cli.FIGURE1_HEADER
        assert len(rows) == 101
        for row in rows[1:]:
            t = int(row[0])
            assert int(row[5]) == (1 if 20 <= t <= 60 else 0)
            assert row[4] in ("0", "1")
            float(row[1]), float(row[2]), float(row[3])

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["figure1", "--seed", "5", "--out", str(a)])
        cli.main(["figure1", "--seed", "5", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_bounded_matches_restarting_until_crossing(self):
        data = cli.figure1_paths(seed=17)
        restarting = data["restarting"]
        assert restarting.signal_times
        first = restarting.signal_times[0]
        for t in range(first):
            assert data["bounded"].states[t].value == restarting.states[t].value

    def test_median_signal_end_unbounded_exceeds_bounded(self):
        ends_bounded, ends_unbounded = [], []
        for seed in range(30):
            data = cli.figure1_paths(seed=seed)
            ends_bounded.append(data["bounded"].signal_intervals[-1][1])
            ends_unbounded.append(data["unbounded"].signal_intervals[-1][1])
        assert np.median(ends_unbounded) > np.median(ends_bounded)


class TestNulldist:
    def test_dump(self, tmp_path):
        out = tmp_path / "null.csv"
        assert cli.main(["nulldist", "--h", "10", "--states", "10",
                         "--delta", "1.0", "--t-max", "5", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert rows[0] == cli.NULLDIST_HEADER
        assert len(rows) == 1 + 6 * 10
        t0 = [r for r in rows[1:] if r[0] == "0"]
        assert float(t0[0][2]) == 1.0 and float(t0[0][3]) == 1.0
        assert all(float(r[2]) == 0.0 for r in t0[1:])
        for t in range(6):
            tails = [float(r[3]) for r in rows[1:] if int(r[0]) == t]
            assert all(a >= b for a, b in zip(tails, tails[1:]))


class TestMonitor:
    def write_obs(self, path, rows):
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(cli.OBSERVATIONS_HEADER)
            writer.writerows(rows)

    def test_empty_data_section(self, tmp_path):
        src, out = tmp_path / "obs.csv", tmp_path / "dec.csv"
        self.write_obs(src, [])
        assert cli.main(["monitor", "--input", str(src), "--out", str(out)]) == 0
        assert read_rows(out) == [cli.DECISIONS_HEADER]

    def test_single_quiet_stream(self, tmp_path):
        src, out = tmp_path / "obs.csv", tmp_path / "dec.csv"
        self.write_obs(src, [["s1", t, -10.0] for t in range(1, 11)])
        assert cli.main(["monitor", "--input", str(src), "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 11
        assert all(row[4] == "0" for row in rows[1:])
        assert all(float(row[2]) == 0.0 for row in rows[1:])

    def test_round_trip_matches_in_process(self, tmp_path):
        scenario = simlab.Scenario(n_streams=12, horizon=20)
        out_mat = simlab.simulate_regimes(12, 20, scenario.regime, simlab.substream(3, 0, 0, 0))
        z = simlab.generate_observations(out_mat, 1.0, simlab.substream(3, 0, 0, 1))
        src, out = tmp_path / "obs.csv", tmp_path / "dec.csv"
        self.write_obs(src, [[f"s{i}", t + 1, repr(float(z[i, t]))]
                             for i in range(12) for t in range(20)])
        assert cli.main(["monitor", "--input", str(src), "--out", str(out),
                         "--q-star", "0.05", "--procedure", "two-step"]) == 0

        config = ChartConfig.bounded(h=10.0, n_states=100,
                                     increment=IncrementModel.identity())
        model = InControlModel.gaussian(mean=-0.5)
        specs = [StreamSpec(id=f"s{i}", config=config, model=model) for i in range(12)]
        decisions = run(specs, z, "two-step", 0.05)
        expected = [[str(d.t), r.stream_id, repr(r.chart_value), repr(r.p_value),
                     str(int(r.rejected))] for d in decisions for r in d.records]
        assert read_rows(out)[1:] == expected

    def test_malformed_row_names_line(self, tmp_path, capsys):
        src = tmp_path / "obs.csv"
        self.write_obs(src, [["s1", 1, 0.5], ["s1", "two", 0.1]])
        assert cli.main(["monitor", "--input", str(src),
                         "--out", str(tmp_path / "d.csv")]) == 1
        err = capsys.readouterr().err
        assert ":3:" in err and err.startswith("error:")

    def test_non_contiguous_t(self, tmp_path, capsys):
        src = tmp_path / "obs.csv"
        self.write_obs(src, [["s1", 1, 0.5], ["s1", 3, 0.1]])
        assert cli.main(["monitor", "--input", str(src),
                         "--out", str(tmp_path / "d.csv")]) == 1
        assert "contiguous" in capsys.readouterr().err

    def test_duplicate_time(self, tmp_path, capsys):
        src = tmp_path / "obs.csv"
        self.write_obs(src, [["s1", 1, 0.5], ["s1", 1, 0.2]])
        assert cli.main(["monitor", "--input", str(src),
                         "--out", str(tmp_path / "d.csv")]) == 1
        assert "duplicate" in capsys.readouterr().err

    def test_bad_header(self, tmp_path, capsys):
        src = tmp_path / "obs.csv"
        with open(src, "w") as handle:
            handle.write("id,time,val\n")
        assert cli.main(["monitor", "--input", str(src),
                         "--out", str(tmp_path / "d.csv")]) == 1
        assert "header" in capsys.readouterr().err

    def test_ragged_streams_padded_as_absent(self, tmp_path):
        src, out = tmp_path / "obs.csv", tmp_path / "dec.csv"
        self.write_obs(src, [["a", 1, -1.0], ["a", 2, -1.0], ["b", 1, -1.0]])
        assert cli.main(["monitor", "--input", str(src), "--out", str(out)]) == 0
        rows = read_rows(out)[1:]
        at_t2 = [r for r in rows if r[0] == "2"]
        assert [r[1] for r in at_t2] == ["a"]


class TestSimulate:
    def test_smoke_headers_and_filter(self, tmp_path):
        out_dir = tmp_path / "study"
        assert cli.main(["simulate", "--n-streams", "10", "--horizon", "8",
                         "--reps", "2", "--seed", "1", "--procedures", "bh",
                         "--out-dir", str(out_dir)]) == 0
        fdr_rows = read_rows(out_dir / "fdr_by_time.csv")
        assert fdr_rows[0] == cli.FDR_HEADER
        assert {r[1] for r in fdr_rows[1:]} == {"bh"}
        assert {r[2] for r in fdr_rows[1:]} == set(simlab.NULL_DEFS)
        m0_rows = read_rows(out_dir / "m0_quantiles.csv")
        assert m0_rows[0] == cli.M0_HEADER
        assert {r[1] for r in m0_rows[1:]} == set(simlab.M0_NULL_DEFS)
        stoch_rows = read_rows(out_dir / "stoch_order.csv")
        assert stoch_rows[0] == cli.STOCH_HEADER
        assert {r[1] for r in stoch_rows[1:]} == {"cdf_dominance", "p_superuniformity"}

    def test_byte_identical_reruns(self, tmp_path):
        args = ["simulate", "--n-streams", "15", "--horizon", "12", "--reps", "5",
                "--seed", "9"]
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(args + ["--out-dir", str(dir_a)]) == 0
        assert cli.main(args + ["--out-dir", str(dir_b)]) == 0
        for name in ("fdr_by_time.csv", "m0_quantiles.csv", "stoch_order.csv"):
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()

    def test_figure2_smoke(self, tmp_path):
        out_dir = tmp_path / "fig2"
        assert cli.main(["figure2", "--reps", "1", "--seed", "0",
                         "--out-dir", str(out_dir)]) == 0
        rows = read_rows(out_dir / "fdr_by_time.csv")
        assert rows[0] == cli.FDR_HEADER
        assert len(rows) == 1 + 100 * 3 * 3

    def test_invalid_flags_fail_with_diagnostic(self, tmp_path, capsys):
        assert cli.main(["simulate", "--q-star", "1.5", "--reps", "1",
                         "--out-dir", str(tmp_path)]) == 1
        assert capsys.readouterr().err.startswith("error:")


class TestSeedResolution:
    def test_env_var_used_when_flag_absent(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV_VAR, "5")
        env_out = tmp_path / "env.csv"
        cli.main(["figure1", "--out", str(env_out)])
        flag_out = tmp_path / "flag.csv"
        monkeypatch.delenv(cli.SEED_ENV_VAR)
        cli.main(["figure1", "--seed", "5", "--out", str(flag_out)])
        assert env_out.read_bytes() == flag_out.read_bytes()

    def test_flag_takes_precedence(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV_VAR, "5")
        out_a = tmp_path / "a.csv"
        cli.main(["figure1", "--seed", "6", "--out", str(out_a)])
        out_b = tmp_path / "b.csv"
        monkeypatch.delenv(cli.SEED_ENV_VAR)
        cli.main(["figure1", "--seed", "6", "--out", str(out_b)])
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_bad_env_seed(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(cli.SEED_ENV_VAR, "not-a-number")
        assert cli.main(["figure1", "--out", str(tmp_path / "x.csv")]) == 1
        assert "CUSUMFDR_SEED" in capsys.readouterr().err
