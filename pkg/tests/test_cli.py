"""Command-line interface and file I/O."""

import json
import math

import numpy as np
import pytest

from dpitres import io as dio
from dpitres.cli import main
from dpitres.errors import ParseError
from dpitres.normal import inverse_normal_cdf
from dpitres.simlab import SCENARIOS

LOGIT = {0.5: 0.0, 0.2: math.log(0.25), 0.8: math.log(4.0)}


@pytest.fixture()
def golden_csv(tmp_path):
    p = tmp_path / "golden.csv"
    p.write_text("y,e\n0,{}\n1,{}\n0,{}\n".format(LOGIT[0.5], LOGIT[0.2], LOGIT[0.8]))
    return p


def write_counts(path, with_factor=False):
    rng = np.random.default_rng(3)
    n = 120
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    g = rng.choice(["C", "A", "B"], n)
    y = rng.poisson(np.exp(0.2 + 0.6 * x1 + 0.4 * x2 + 0.3 * (g == "B")))
    rows = [[str(a), repr(float(b)), repr(float(c))] + ([d] if with_factor else [])
            for a, b, c, d in zip(y, x1, x2, g)]
    header = "y,x1,x2,g" if with_factor else "y,x1,x2"
    path.write_text("\n".join([header] + [",".join(r) for r in rows]) + "\n")
    return path


@pytest.fixture()
def count_csv(tmp_path):
    return write_counts(tmp_path / "counts.csv")


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestIngest:
    def test_basic(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("y,x1\n1,0.5\n0,1.5\n3,-2\n")
        d = dio.ingest_csv(p)
        assert d.n == 3 and d.names == ["x1"]
        np.testing.assert_array_equal(d.y, [1, 0, 3])

    def test_non_integer_outcome(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("y,x1\n1,0.5\n2.5,1.5\n")
        with pytest.raises(ParseError, match="row 2, column y"):
            dio.ingest_csv(p)

    @pytest.mark.parametrize("body, where", [("-1,0.1", "row 1, column y"), ("1,abc", "row 1, column x1"),
                                             ("1,", "row 1, column x1"), ("1", "row 1")])
    def test_bad_cells(self, tmp_path, body, where):
        p = tmp_path / "d.csv"
        p.write_text(f"y,x1\n{body}\n")
        with pytest.raises(ParseError, match=where):
            dio.ingest_csv(p)

    def test_categorical(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("y,g\n1,B\n0,A\n2,C\n1,A\n")
        d = dio.ingest_csv(p, categorical=["g"])
        assert d.names == ["g[B]", "g[C]"]
        assert d.factors == {"g": ["g[B]", "g[C]"]}
        np.testing.assert_array_equal(d.X, [[1, 0], [0, 0], [0, 1], [0, 0]])

    def test_missing_outcome_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("count,x\n1,2\n")
        with pytest.raises(ParseError):
            dio.ingest_csv(p)

    def test_quoted_fields(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text('y,g\n1,"a,b"\n0,c\n')
        assert dio.ingest_csv(p, categorical=["g"]).names == ["g[c]"]


class TestFormatting:
    @pytest.mark.parametrize("v, s", [(0.1, "0.1"), (1 / 3, "0.3333333333333333"), (2, "2"),
                                      (float("inf"), "inf"), (-float("inf"), "-inf"), (True, "1"),
                                      (np.float64(1e-20), "1e-20")])
    def test_number(self, v, s):
        assert dio.format_number(v) == s

    def test_csv_round_trip(self, tmp_path, rng):
        cols = {"a": rng.normal(size=20), "b": list(range(20)), "flag": ["standard"] * 20}
        text = dio.table_text(cols, "csv", {"family": "poisson", "D": 0.123456789012345678})
        p = tmp_path / "t.csv"
        p.write_text(text)
        back, footer = dio.read_table(p)
        assert dio.table_text(back, "csv", footer) == text
        np.testing.assert_array_equal(back["a"], cols["a"])

    def test_json(self):
        doc = json.loads(dio.table_text({"u": [0.5, float("inf")]}, "json", {"n": 2}))
        assert doc["rows"] == [[0.5], ["inf"]] and doc["footer"] == {"n": 2}

    def test_fixed_params(self):
        out = dio.parse_fixed_params("coef=0,1; size=2.5; cutpoints=-1,1")
        np.testing.assert_array_equal(out["coef"], [0, 1])
        assert out["size"] == 2.5

    @pytest.mark.parametrize("bad", ["size=2", "coef=a", "beta=1", "coef"])
    def test_fixed_params_errors(self, bad):
        with pytest.raises(ParseError):
            dio.parse_fixed_params(bad)

    def test_config(self, tmp_path):
        p = tmp_path / "run.conf"
        p.write_text("# comment\nfamily = poisson\nzero-terms = x1\n")
        assert dio.read_config(p) == {"family": "poisson", "zero_terms": "x1"}


class TestResidualsCommand:
    def test_golden(self, golden_csv, capsys):
        for path in ("fast", "reference"):
            code, out, _ = run(["residuals", "--data", golden_csv, "--family", "bernoulli", "--terms", "e",
                                "--fixed-params", "coef=0,1", "--path", path], capsys)
            assert code == 0
            lines = out.splitlines()
            assert lines[0] == "index,y,fitted_mean,linear_predictor,uniform,normal,flag"
            rows = [ln.split(",") for ln in lines[1:4]]
            np.testing.assert_allclose([float(r[4]) for r in rows], [0.1, 1.0, 0.0], atol=1e-15)
            assert [r[6] for r in rows] == ["standard", "altered", "standard"]
            assert "# clamp=1" in lines

    def test_clamp_gives_finite_normal(self, golden_csv, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code, _, _ = run(["residuals", "--data", golden_csv, "--family", "bernoulli", "--terms", "e",
                          "--fixed-params", "coef=0,1", "--scale", "normal", "--clamp", "--out", out], capsys)
        assert code == 0
        cols, _ = dio.read_table(out)
        assert np.all(np.isfinite(np.array(cols["normal"], dtype=float)))

    def test_no_clamp_gives_infinities(self, golden_csv, capsys):
        _, out, _ = run(["residuals", "--data", golden_csv, "--family", "bernoulli", "--terms", "e",
                         "--fixed-params", "coef=0,1", "--no-clamp"], capsys)
        assert ",inf," in out and ",-inf," in out

    def test_uniform_scale_omits_normal(self, golden_csv, capsys):
        _, out, _ = run(["residuals", "--data", golden_csv, "--family", "bernoulli", "--terms", "e",
                         "--fixed-params", "coef=0,1", "--scale", "uniform"], capsys)
        assert "normal" not in out.splitlines()[0]

    def test_randomized_baseline_deterministic(self, count_csv, tmp_path, capsys):
        outs = []
        for k in range(2):
            p = tmp_path / f"r{k}.csv"
            assert run(["residuals", "--data", count_csv, "--family", "poisson", "--terms", "x1,x2",
                        "--baseline", "randomized-quantile", "--seed", 7, "--out", p], capsys)[0] == 0
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]

    def test_all_baselines(self, golden_csv, capsys):
        argv = ["residuals", "--data", golden_csv, "--family", "bernoulli", "--terms", "e",
                "--fixed-params", "coef=0,1", "--seed", 1]
        for b in ("cox-snell", "pearson", "deviance", "randomized-quantile", "li-shepherd", "liu-zhang"):
            argv += ["--baseline", b]
        code, out, _ = run(argv, capsys)
        assert code == 0
        assert out.splitlines()[0].endswith("cox-snell,pearson,deviance,randomized-quantile,li-shepherd,liu-zhang")

    def test_categorical_fit(self, tmp_path, capsys):
        data = write_counts(tmp_path / "factor.csv", with_factor=True)
        assert run(["residuals", "--data", data, "--family", "poisson"], capsys)[0] == 3
        code, out, _ = run(["residuals", "--data", data, "--family", "poisson", "--terms", "x1,x2,g",
                            "--categorical", "g", "--format", "json"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert len(doc["rows"]) == 120 and doc["footer"]["converged"] is True

    def test_round_trip(self, count_csv, tmp_path, capsys):
        p = tmp_path / "r.csv"
        # Poisson data: the size parameter runs to its cap
        with pytest.warns(RuntimeWarning, match="cap"):
            run(["residuals", "--data", count_csv, "--family", "negbin", "--terms", "x1,x2", "--out", p], capsys)
        cols, footer = dio.read_table(p)
        assert dio.table_text(cols, "csv", footer).encode() == p.read_bytes()

    def test_config_file(self, count_csv, tmp_path, capsys):
        conf = tmp_path / "run.conf"
        conf.write_text(f"data = {count_csv}\nfamily = poisson\nterms = x1, x2\nbaseline = pearson\n")
        code, out, _ = run(["residuals", "--config", conf], capsys)
        assert code == 0 and out.splitlines()[0].endswith("pearson")
        code_flag, out_flag, _ = run(["residuals", "--data", count_csv, "--family", "poisson", "--terms", "x1,x2",
                                      "--baseline", "pearson"], capsys)
        assert out == out_flag


class TestExitCodes:
    def test_usage_missing_data(self, capsys):
        assert run(["residuals", "--family", "poisson"], capsys)[0] == 2

    def test_usage_bad_flag(self, capsys):
        assert run(["residuals", "--nonsense"], capsys)[0] == 2

    def test_usage_seed_required(self, golden_csv, capsys):
        assert run(["residuals", "--data", golden_csv, "--family", "bernoulli", "--terms", "e",
                    "--baseline", "liu-zhang", "--fixed-params", "coef=0,1"], capsys)[0] == 2

    def test_parse_error(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("y,x1\n1,0.5\n2.5,1\n")
        code, _, err = run(["residuals", "--data", p, "--family", "poisson"], capsys)
        assert code == 3 and "row 2, column y" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run(["residuals", "--data", tmp_path / "none.csv", "--family", "poisson"], capsys)[0] == 3

    def test_fit_error(self, tmp_path, capsys):
        p = tmp_path / "sep.csv"
        p.write_text("y,x\n0,1\n1,2\n")
        assert run(["residuals", "--data", p, "--family", "bernoulli", "--terms", "x"], capsys)[0] == 4

    def test_domain_error(self, tmp_path, capsys):
        p = tmp_path / "d.csv"
        p.write_text("y,x\n0,1\n0,2\n")
        assert run(["ordered-curve", "--data", p, "--family", "poisson", "--terms", "x",
                    "--fixed-params", "coef=0,1"], capsys)[0] == 5

    def test_unknown_column(self, count_csv, capsys):
        assert run(["residuals", "--data", count_csv, "--family", "poisson", "--terms", "x9"], capsys)[0] == 5


class TestQq:
    @pytest.fixture()
    def resid_file(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("index,uniform\n1,0.4\n2,0.1\n3,0.3\n4,0.2\n")
        return p

    def test_uniform_positions(self, resid_file, capsys):
        _, out, _ = run(["qq", "--residuals", resid_file], capsys)
        cols = [ln.split(",") for ln in out.splitlines()[1:5]]
        np.testing.assert_allclose([float(c[1]) for c in cols], [0.125, 0.375, 0.625, 0.875])
        np.testing.assert_allclose([float(c[2]) for c in cols], [0.1, 0.2, 0.3, 0.4])

    def test_normal_positions(self, resid_file, capsys):
        _, out, _ = run(["qq", "--residuals", resid_file, "--scale", "normal"], capsys)
        first = float(out.splitlines()[1].split(",")[1])
        assert first == pytest.approx(-1.1503494, abs=1e-7)
        assert first == pytest.approx(inverse_normal_cdf(0.125), abs=1e-15)

    def test_svg_byte_identical(self, resid_file, tmp_path, capsys):
        data = []
        for k in range(2):
            p = tmp_path / f"q{k}.svg"
            assert run(["qq", "--residuals", resid_file, "--scale", "normal", "--format", "svg", "--out", p],
                       capsys)[0] == 0
            data.append(p.read_bytes())
        assert data[0] == data[1]
        assert data[0].startswith(b"<?xml") and b"stroke-dasharray" in data[0]

    def test_figure_from_model(self, count_csv, tmp_path, capsys):
        fig = tmp_path / "q.svg"
        code, _, _ = run(["qq", "--data", count_csv, "--family", "poisson", "--terms", "x1,x2",
                          "--scale", "normal", "--no-clamp", "--figure", fig], capsys)
        assert code == 0 and fig.read_bytes().rstrip().endswith(b"</svg>")


class TestOrderedCurve:
    def test_two_point_example(self, tmp_path, capsys):
        d = tmp_path / "d.csv"
        d.write_text("y,z\n0,1\n2,2\n")
        code, out, _ = run(["ordered-curve", "--data", d, "--family", "poisson", "--fixed-params", "coef=0",
                            "--threshold", "column:z"], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[1:3] == ["1,0.5,0.0", "2,1.0,1.0"]
        assert "# D=0.5" in lines

    def test_exact_fit_diagonal(self, tmp_path, capsys):
        d = tmp_path / "d.csv"
        d.write_text("y\n1\n1\n1\n")
        _, out, _ = run(["ordered-curve", "--data", d, "--family", "poisson"], capsys)
        assert "# D=0.0" in out.splitlines()

    def test_threshold_file(self, count_csv, tmp_path, capsys):
        z = tmp_path / "z.csv"
        z.write_text("z\n" + "\n".join(str(v) for v in range(120)) + "\n")
        code, out, _ = run(["ordered-curve", "--data", count_csv, "--family", "poisson", "--terms", "x1",
                            "--threshold", f"file:{z}"], capsys)
        assert code == 0 and "# threshold=z.csv" in out

    def test_omitted_covariate_detected(self, tmp_path, capsys):
        from dpitres.simlab import generate
        d = generate("binary-curve", 0)
        p = tmp_path / "b.csv"
        p.write_text("y,x1,x2\n" + "\n".join(f"{a},{float(b)!r},{float(c)!r}" for a, b, c in
                                             zip(d.y, d.column("x1"), d.column("x2"))) + "\n")
        dvals = {}
        for thr in ("fitted", "column:x2"):
            _, out, _ = run(["ordered-curve", "--data", p, "--family", "bernoulli", "--terms", "x1",
                             "--threshold", thr], capsys)
            dvals[thr] = float([ln for ln in out.splitlines() if ln.startswith("# D=")][0][4:])
        assert dvals["column:x2"] > dvals["fitted"]

    def test_svg_identical(self, count_csv, tmp_path, capsys):
        figs = []
        for k in range(2):
            f = tmp_path / f"c{k}.svg"
            run(["ordered-curve", "--data", count_csv, "--family", "poisson", "--terms", "x1", "--figure", f],
                capsys)
            figs.append(f.read_bytes())
        assert figs[0] == figs[1]


class TestSimulate:
    def test_list(self, capsys):
        code, out, _ = run(["simulate", "--scenario", "list"], capsys)
        assert code == 0
        assert [ln.split()[0] for ln in out.splitlines()] == list(SCENARIOS)

    def test_deterministic(self, tmp_path, capsys):
        outs = []
        for k in range(2):
            d = tmp_path / f"o{k}"
            assert run(["simulate", "--scenario", "nb-true", "--n", 50, "--reps", 5, "--seed", 1, "--out", d],
                       capsys)[0] == 0
            outs.append(((d / "replicates.csv").read_bytes(), (d / "summary.json").read_bytes()))
        assert outs[0] == outs[1]
        summary = json.loads(outs[0][1])
        assert summary["n"] == 50 and summary["reps"] == 5

    def test_config(self, tmp_path, capsys):
        conf = tmp_path / "s.conf"
        conf.write_text("[simulate]\nscenario = poisson-true\nn = 30\nreps = 2\nseed = 4\n")
        code, out, _ = run(["simulate", "--config", conf], capsys)
        assert code == 0 and json.loads(out)["n"] == 30

    def test_unknown_scenario(self, capsys):
        assert run(["simulate", "--scenario", "nope"], capsys)[0] == 5

    def test_bad_config_key(self, tmp_path, capsys):
        conf = tmp_path / "s.conf"
        conf.write_text("scenario = nb-true\ncolour = blue\n")
        assert run(["simulate", "--config", conf], capsys)[0] == 3
