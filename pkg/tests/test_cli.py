import numpy as np
import pytest

from bnposterior import (
    Dataset,
    random_network,
    read_feature_table,
    save_csv,
    save_network,
)
from bnposterior.cli import main


@pytest.fixture
def net_file(tmp_path):
    net = random_network(4, seed=3, max_parents=2)
    path = tmp_path / "net.txt"
    save_network(net, path)
    return path


@pytest.fixture
def data_file(tmp_path, rng):
    rows = rng.integers(0, 2, size=(60, 4))
    rows[:, 2] = rows[:, 0] ^ (rng.random(60) < 0.1)
    d = Dataset(names=("A", "B", "C", "D"), arities=[2] * 4, rows=rows)
    path = tmp_path / "data.csv"
    save_csv(d, path)
    return path


class TestGenData:
    def test_produces_requested_rows(self, tmp_path, net_file):
        out = tmp_path / "out.csv"
        assert main(["gen-data", "--net", str(net_file), "--rows", "25", "--seed", "1", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 26  # header + rows

    def test_missing_net_file(self, tmp_path, capsys):
        out = tmp_path / "out.csv"
        code = main(["gen-data", "--net", str(tmp_path / "nope.txt"), "--rows", "5", "--out", str(out)])
        assert code == 2
        assert capsys.readouterr().err.strip()

    def test_same_seed_byte_identical(self, tmp_path, net_file):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["gen-data", "--net", str(net_file), "--rows", "30", "--seed", "7", "--out", str(a)])
        main(["gen-data", "--net", str(net_file), "--rows", "30", "--seed", "7", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_refuses_overwrite_without_force(self, tmp_path, net_file, capsys):
        out = tmp_path / "out.csv"
        out.write_text("already here")
        code = main(["gen-data", "--net", str(net_file), "--rows", "5", "--out", str(out)])
        assert code == 1
        assert "force" in capsys.readouterr().err
        assert out.read_text() == "already here"
        assert main(["gen-data", "--net", str(net_file), "--rows", "5", "--out", str(out), "--force"]) == 0


FAST_CHAIN = ["--burnin", "50", "--thin", "5", "--samples", "10"]


class TestOrderMcmcCommand:
    def test_markov_row_count(self, tmp_path, data_file):
        out = tmp_path / "feat.csv"
        trace = tmp_path / "trace.tsv"
        code = main(
            ["order-mcmc", "--data", str(data_file), "--k", "2", "--seed", "1",
             "--features", "markov", "--trace", str(trace), "--out", str(out)] + FAST_CHAIN
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "kind,i,j,estimate"
        assert len(lines) - 1 == 6  # C(4,2) unordered pairs
        assert len(trace.read_text().splitlines()) == 50 + 5 * 10

    def test_trace_fields(self, tmp_path, data_file):
        trace = tmp_path / "trace.tsv"
        main(
            ["order-mcmc", "--data", str(data_file), "--k", "2", "--seed", "1",
             "--features", "edge", "--trace", str(trace), "--out", str(tmp_path / "f.csv")] + FAST_CHAIN
        )
        first = trace.read_text().splitlines()[0].split("\t")
        assert first[0] == "1"
        float(first[1])  # bits column parses
        assert first[2] in ("flip", "cut")
        assert first[3] in ("0", "1")

    def test_five_samples_still_valid(self, tmp_path, data_file):
        out = tmp_path / "feat.csv"
        code = main(
            ["order-mcmc", "--data", str(data_file), "--k", "2", "--seed", "2",
             "--burnin", "20", "--thin", "2", "--samples", "5",
             "--features", "markov", "--out", str(out)]
        )
        assert code == 0
        table = read_feature_table(out)
        assert np.all(table.estimates >= 0) and np.all(table.estimates <= 1)

    def test_seed_changes_trace_not_schema(self, tmp_path, data_file):
        t1, t2 = tmp_path / "t1.tsv", tmp_path / "t2.tsv"
        for seed, trace in (("1", t1), ("2", t2)):
            main(
                ["order-mcmc", "--data", str(data_file), "--k", "2", "--seed", seed,
                 "--features", "markov", "--trace", str(trace), "--out", str(tmp_path / f"f{seed}.csv")] + FAST_CHAIN
            )
        assert t1.read_bytes() != t2.read_bytes()
        assert len(t1.read_text().splitlines()) == len(t2.read_text().splitlines())

    def test_byte_identical_rerun(self, tmp_path, data_file):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.csv"
            main(
                ["order-mcmc", "--data", str(data_file), "--k", "2", "--seed", "5",
                 "--features", "path", "--dags-per-order", "3", "--out", str(out)] + FAST_CHAIN
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestStructureMcmcCommand:
    def test_schema_and_determinism(self, tmp_path, data_file):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.csv"
            code = main(
                ["structure-mcmc", "--data", str(data_file), "--k", "2", "--seed", "3",
                 "--features", "edge", "--out", str(out)] + FAST_CHAIN
            )
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        lines = outs[0].decode().splitlines()
        assert lines[0] == "kind,i,j,estimate"
        assert len(lines) - 1 == 12  # ordered pairs

    def test_greedy_init(self, tmp_path, data_file):
        out = tmp_path / "g.csv"
        code = main(
            ["structure-mcmc", "--data", str(data_file), "--k", "2", "--seed", "3",
             "--init", "greedy", "--features", "markov", "--out", str(out)] + FAST_CHAIN
        )
        assert code == 0


class TestExactCommand:
    def test_dags_mode(self, tmp_path, data_file):
        out = tmp_path / "exact.csv"
        code = main(["exact", "--data", str(data_file), "--k", "2", "--mode", "dags",
                     "--features", "markov", "--out", str(out)])
        assert code == 0
        table = read_feature_table(out)
        assert table.kind == "markov"

    def test_orders_mode_matches_library(self, tmp_path, data_file):
        from bnposterior import ScoreParams, exact_feature_tables_orders, load_csv

        out = tmp_path / "exact.csv"
        main(["exact", "--data", str(data_file), "--k", "2", "--mode", "orders",
              "--features", "edge", "--out", str(out)])
        d = load_csv(data_file)
        want = exact_feature_tables_orders(d, ScoreParams(ess=1.0, k=2, n=4), ("edge",))["edge"]
        table = read_feature_table(out)
        idx = [table.names.index(nm) for nm in d.names]
        assert np.allclose(table.estimates[np.ix_(idx, idx)], want, atol=1e-9)

    def test_cap_refusal_exit_code(self, tmp_path, rng):
        rows = rng.integers(0, 2, size=(10, 7))
        d = Dataset(names=tuple(f"v{i}" for i in range(7)), arities=[2] * 7, rows=rows)
        path = tmp_path / "wide.csv"
        save_csv(d, path)
        code = main(["exact", "--data", str(path), "--k", "2", "--mode", "dags",
                     "--features", "edge", "--out", str(tmp_path / "x.csv")])
        assert code == 3


class TestBootstrapCommand:
    def test_single_replicate_indicators(self, tmp_path, data_file):
        out = tmp_path / "boot.csv"
        code = main(["bootstrap", "--data", str(data_file), "--B", "1", "--k", "2",
                     "--seed", "4", "--features", "markov", "--out", str(out)])
        assert code == 0
        table = read_feature_table(out)
        assert set(np.unique(table.estimates)) <= {0.0, 1.0}


class TestEvalCommand:
    def test_perfect_estimates_reach_origin(self, tmp_path, net_file):
        from bnposterior import FeaturePosteriorTable, label_features, load_network, write_feature_table

        net = load_network(net_file)
        labels = label_features(net, "markov")
        table = FeaturePosteriorTable(
            kind="markov", names=net.names, estimates=labels.labels.astype(float)
        )
        est_path = tmp_path / "est.csv"
        write_feature_table(table, est_path)
        out = tmp_path / "curve.csv"
        code = main(["eval", "--estimates", str(est_path), "--truth-net", str(net_file), "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "threshold,false_positives,false_negatives"
        rows = [tuple(line.split(",")) for line in lines[1:]]
        assert any(fp == "0" and fn == "0" for _, fp, fn in rows)

    def test_mismatched_variables(self, tmp_path, net_file):
        from bnposterior import FeaturePosteriorTable, write_feature_table

        table = FeaturePosteriorTable(
            kind="markov", names=("P", "Q"), estimates=np.zeros((2, 2))
        )
        est_path = tmp_path / "est.csv"
        write_feature_table(table, est_path)
        code = main(["eval", "--estimates", str(est_path), "--truth-net", str(net_file), "--out", str(tmp_path / "c.csv")])
        assert code == 2


class TestUsageErrors:
    def test_unknown_command(self):
        assert main(["frobnicate"]) == 1

    def test_missing_required_flag(self):
        assert main(["gen-data", "--rows", "5", "--out", "x.csv"]) == 1

    def test_console_entry_point(self, tmp_path, net_file):
        import subprocess
        import sys

        out = tmp_path / "cli.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "bnposterior.cli", "gen-data", "--net", str(net_file),
             "--rows", "5", "--seed", "0", "--out", str(out)],
            capture_output=True,
        )
        assert proc.returncode == 0
        assert out.exists()
