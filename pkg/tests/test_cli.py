import csv
import io

import pytest

from netgroup.cli import fmt, main, parse_range


def rows(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_range():
    assert parse_range("10") == [10]
    assert parse_range("2..5") == [2, 3, 4, 5]
    assert parse_range("5,10,20") == [5, 10, 20]


def test_fmt_round_trip():
    for x in (0.1, 507.2504301540049, 1e-17, 150.95):
        assert float(fmt(x)) == x
    assert fmt(3) == "3"


class TestAnalytic:
    def test_reference_numbers(self, capsys):
        code, out, err = run(capsys, "analytic", "--N", "1000", "--v", "0.05", "--n", "10")
        assert code == 0
        table = {r["strategy"]: r for r in rows(out)}
        assert float(table["dorfman"]["value"]) == pytest.approx(507.25, abs=0.01)
        assert float(table["lower-bound"]["value"]) == pytest.approx(150.95)
        assert "151 (ceil)" in err
        assert out.startswith("# netgroup analytic\n")

    def test_no_prevalence(self, capsys):
        code, out, _ = run(capsys, "analytic", "--N", "100", "--v", "0", "--m", "20", "--p",
                           "0.3", "--q", "0.1", "--n", "10")
        assert code == 0
        assert {float(r["value"]) for r in rows(out)} == {20.0}

    def test_copenhagen_sweep(self, capsys, tmp_path):
        out_path = tmp_path / "fig.csv"
        code, stdout, _ = run(capsys, "analytic", "--N", "310", "--m", "28", "--p", "0.18",
                              "--q", "0.01", "--alpha", "0.95", "--n", "2..40",
                              "--out", str(out_path), "--gnuplot", str(tmp_path / "fig.gp"))
        assert code == 0
        table = rows(out_path.read_text())
        assert len(table) == 39 * 3
        ten = {r["strategy"]: float(r["value"]) for r in table if r["n"] == "10"}
        assert ten["network"] == pytest.approx(81.91384415638377, rel=1e-12)
        assert ten["lower-bound"] <= ten["network"] <= ten["dorfman"]
        assert "plot" in (tmp_path / "fig.gp").read_text()
        assert "lower-bound" in stdout

    def test_bad_params_exit_1(self, capsys):
        code, _, err = run(capsys, "analytic", "--N", "100", "--v", "0.01", "--m", "20",
                           "--p", "0.1", "--q", "0.3", "--n", "10")
        assert code == 1 and "q <= p" in err

    def test_bad_flag_exit_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["analytic", "--N", "x"])
        assert exc.value.code == 1


class TestSimulate:
    def test_alpha_zero_constant(self, capsys, tmp_path):
        rep = tmp_path / "rep.csv"
        code, out, err = run(capsys, "simulate", "--sbm", "100,10,0.3,0.02", "--alpha", "0",
                             "--reps", "100", "--n", "10", "--replicates-out", str(rep))
        assert code == 0
        assert "using seed 0" in err
        assert {r["tests"] for r in rows(rep.read_text())} == {"20"}
        assert {r["std_error"] for r in rows(out)} == {"0.0"}

    def test_byte_identical_reruns(self, tmp_path, capsys):
        outs = []
        for workers in ("1", "3"):
            path = tmp_path / f"s{workers}.csv"
            rep = tmp_path / f"r{workers}.csv"
            assert main(["simulate", "--standin", "--alpha", "0.95", "--n", "5,10", "--reps",
                         "50", "--seed", "4", "--workers", workers, "--out", str(path),
                         "--replicates-out", str(rep)]) == 0
            outs.append((path.read_bytes(), rep.read_bytes()))
        capsys.readouterr()
        assert outs[0] == outs[1]

    def test_ensemble_against_analytic(self, capsys):
        code, out, _ = run(capsys, "simulate", "--sbm", "100,10,0.3,0.02", "--ensemble", "--v",
                           "0.01", "--strategy", "network", "--n", "10", "--reps", "20000",
                           "--seed", "1")
        assert code == 0
        sim = rows(out)[0]
        code, out, _ = run(capsys, "analytic", "--N", "100", "--m", "10", "--p", "0.3", "--q",
                           "0.02", "--v", "0.01", "--n", "10", "--strategies", "network")
        value = float(rows(out)[0]["value"])
        assert abs(float(sim["mean"]) - value) <= 3 * float(sim["std_error"])

    def test_missing_file_exit_2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "simulate", "--edge-list", str(tmp_path / "nope.txt"),
                         "--alpha", "0.5", "--n", "10", "--seed", "1")
        assert code == 2

    def test_malformed_file_exit_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1 2\nonlyone\n")
        code, _, err = run(capsys, "simulate", "--edge-list", str(bad), "--alpha", "0.5",
                           "--n", "1", "--seed", "1")
        assert code == 2 and "line 2" in err


class TestCommunities:
    def test_two_cliques(self, capsys, tmp_path):
        f = tmp_path / "cliques.txt"
        f.write_text("".join(f"{a} {b}\n" for a in range(4) for b in range(a + 1, 4))
                     + "".join(f"{a} {b}\n" for a in range(4, 8) for b in range(a + 1, 8))
                     + "3 4\n")
        code, out, err = run(capsys, "communities", "--edge-list", str(f), "--seed", "0")
        assert code == 0
        assert "communities=2" in err
        assert len({r["community"] for r in rows(out)}) == 2

    def test_partition_passthrough(self, capsys, tmp_path):
        f = tmp_path / "e.txt"
        f.write_text("a b\nb c\nc d\n")
        part = tmp_path / "p.csv"
        part.write_text("node,community\na,0\nb,0\nc,1\nd,1\n")
        code, out, err = run(capsys, "communities", "--edge-list", str(f), "--partition",
                             str(part), "--seed", "0")
        assert code == 0
        assert "source=file" in err
        assert [r["community"] for r in rows(out)] == ["0", "0", "1", "1"]

    def test_standin(self, capsys):
        code, _, err = run(capsys, "communities", "--standin", "--seed", "0")
        assert code == 0 and "nodes=310" in err


class TestOptimize:
    def test_dorfman(self, capsys):
        code, out, _ = run(capsys, "optimize", "--N", "1000", "--v", "0.05", "--range", "2..50")
        assert code == 0
        assert rows(out)[0]["n_star"] == "5"

    def test_no_prevalence(self, capsys):
        code, out, _ = run(capsys, "optimize", "--N", "100", "--v", "0", "--range", "1..100")
        assert rows(out)[0]["n_star"] == "10"

    def test_network_q_zero(self, capsys):
        code, out, _ = run(capsys, "optimize", "--N", "1000", "--v", "0.002", "--m", "10",
                           "--p", "0.3", "--q", "0", "--strategy", "network", "--range", "2..50")
        assert code == 0
        r = rows(out)[0]
        n_star = int(r["n_star"])
        assert n_star >= 10
        assert float(r["expected_tests"]) == pytest.approx(1000 / n_star + n_star)


class TestVerify:
    def test_clean_grid(self, capsys, tmp_path):
        path = tmp_path / "v.csv"
        code, out, _ = run(capsys, "verify", "--points", "300", "--sweeps", "5", "--boundary",
                           "40", "--seed", "2", "--out", str(path))
        assert code == 0
        table = rows(path.read_text())
        statuses = {r["status"] for r in table}
        assert "equal-dorfman" in statuses and "equal-lower" in statuses
        assert not any(s.startswith("violation") for s in statuses)
        assert "monotonicity violations=0" in out
