import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpgorge import experiments as ex
from bpgorge.cli import main
from bpgorge.cost import hea_zz_cost
from bpgorge.landscapes import Kind


def cfg(experiment, **kw):
    return ex.make_config(experiment, {}, kw)


def rec(n, d, q, v=0.5):
    return ex.ScalingRecord(n, d, q, v, 0.01, 100, 7)


class TestConfig:
    def test_defaults(self):
        c = cfg("gradvar")
        assert c.n_list == (2, 4, 6, 8, 10, 12)
        assert c.depth_list == (5, 20, 60, 100)
        assert (c.ensemble_size, c.mode, c.format) == (2000, "random_pair", "csv")

    @pytest.mark.parametrize("text,want", [
        ("2,4", (2, 4)), ("2..5", (2, 3, 4, 5)), ("2..12:2", (2, 4, 6, 8, 10, 12)), ("1, 3..4", (1, 3, 4)),
    ])
    def test_int_lists(self, text, want):
        assert ex.parse_int_list(text) == want

    @pytest.mark.parametrize("text", ["", "a", "2..4:0", ","])
    def test_bad_int_lists(self, text):
        with pytest.raises(ValueError):
            ex.parse_int_list(text)

    def test_file_values_and_aliases(self):
        vals = ex.parse_config_text("# sweep\nn = 2..6:2\ndepth=5, 60  # two depths\nensemble = 300\nsection = yes\n")
        assert vals == {"n_list": (2, 4, 6), "depth_list": (5, 60), "ensemble_size": 300, "section": True}
        assert vals.origin["depth_list"] == "<config>:3"

    def test_flags_win(self):
        vals = ex.parse_config_text("seed = 4\nensemble = 300\n")
        c = ex.make_config("diffvar", vals, {"seed": 9, "ensemble_size": None})
        assert (c.seed, c.ensemble_size) == (9, 300)

    @pytest.mark.parametrize("text,fragment", [
        ("n = 2\nbogus = 1\n", "f.cfg:2: unknown key"),
        ("n 2\n", "f.cfg:1: expected"),
        ("seed = x\n", "f.cfg:1: bad value"),
        ("seed = 1\nseed = 2\n", "f.cfg:2: duplicate"),
    ])
    def test_parse_errors_name_line(self, text, fragment):
        with pytest.raises(ex.ConfigError, match=fragment):
            ex.parse_config_text(text, "f.cfg")

    def test_validation_error_points_at_file_line(self):
        vals = ex.parse_config_text("seed = 1\nmode = sideways\n", "f.cfg")
        with pytest.raises(ex.ConfigError, match="f.cfg:2: mode must be"):
            ex.make_config("diffvar", vals, {})

    def test_flag_error_not_attributed_to_file(self):
        vals = ex.parse_config_text("mode = random_pair\n", "f.cfg")
        with pytest.raises(ex.ConfigError) as info:
            ex.make_config("diffvar", vals, {"mode": "sideways"})
        assert "f.cfg" not in str(info.value)

    @pytest.mark.parametrize("kw,key", [
        ({"ensemble_size": 1}, "ensemble_size"),
        ({"n_list": (1,)}, "n_list"),
        ({"n_list": (30,)}, "n_list"),
        ({"depth_list": (0,)}, "depth_list"),
        ({"observable": "xx"}, "observable"),
        ({"selector": "first,5"}, "selector"),
        ({"format": "xml"}, "format"),
    ])
    def test_validation(self, kw, key):
        with pytest.raises(ex.ConfigError) as info:
            cfg("gradvar", **kw)
        assert info.value.key == key

    def test_expressibility_cap(self):
        with pytest.raises(ex.ConfigError):
            cfg("expressibility", n_list=(6,))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ex.ConfigError, match="cannot read"):
            ex.load_config(str(tmp_path / "nope.cfg"))


class TestSelectors:
    def test_forms(self):
        assert ex.parse_selector("all") == ("all", ())
        assert ex.parse_selector("first, last") == ("positions", ("first", "last"))
        assert ex.parse_selector("0,5") == ("indices", (0, 5))

    def test_resolve(self):
        spec = hea_zz_cost(2, 3)
        assert ex.resolve_selector(spec, "first,middle,last") == [("first", 0), ("middle", 6), ("last", 12)]
        assert len(ex.resolve_selector(spec, "all")) == 18
        with pytest.raises(ex.ConfigError):
            ex.resolve_selector(spec, "18")

    def test_single_layer_positions_coincide(self):
        spec = hea_zz_cost(2, 1)
        assert {j for _, j in ex.resolve_selector(spec, "first,middle,last")} == {0}


class TestEmit:
    def test_one_record(self):
        text = ex.render([rec(2, 5, "diff_var")], "csv")
        lines = text.splitlines()
        assert lines[0] == "n,D,quantity,value,std_error,ensemble_size,seed"
        assert len(lines) == 2

    def test_grid_order(self):
        rs = [rec(n, d, q) for n in (4, 2, 6) for d in (60, 5, 20) for q in ("b",)]
        rows = list(csv.DictReader(io.StringIO(ex.render(rs, "csv"))))
        assert len(rows) == 9
        assert [(int(r["n"]), int(r["D"])) for r in rows] == [(n, d) for n in (2, 4, 6) for d in (5, 20, 60)]

    def test_quantity_lexicographic(self):
        rs = [rec(2, 5, q) for q in ("grad_var[j=1]", "diff_var", "diff_mean")]
        assert [r.quantity for r in ex.sort_records(rs)] == ["diff_mean", "diff_var", "grad_var[j=1]"]

    @given(st.lists(st.tuples(st.integers(1, 20), st.integers(1, 200), st.text("abc_[]=", min_size=1, max_size=6),
                              st.floats(-1e6, 1e6)), min_size=1, max_size=12))
    def test_formats_field_identical(self, rows):
        rs = [ex.ScalingRecord(n, d, q, v, abs(v) / 10, 10, 3) for n, d, q, v in rows]
        from_csv = list(csv.DictReader(io.StringIO(ex.render(rs, "csv"))))
        from_json = json.loads(ex.render(rs, "json"))
        assert [list(r) for r in from_json] == [list(ex.FIELDS)] * len(rs)
        for c, j in zip(from_csv, from_json):
            assert int(c["n"]) == j["n"] and int(c["D"]) == j["D"] and c["quantity"] == j["quantity"]
            assert float(c["value"]) == j["value"] and float(c["std_error"]) == j["std_error"]

    def test_round_trip_through_file(self, tmp_path):
        rs = [rec(2, 5, "x", 0.1 + 0.2), rec(2, 5, "y", float("nan"))]
        for fmt in ("csv", "json"):
            path = tmp_path / f"out.{fmt}"
            ex.emit(rs, fmt, str(path))
            back = ex.read_records(str(path))
            assert back[0] == rs[0] and np.isnan(back[1].value)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ex.render([], "csv")

    def test_io_error_names_path(self, tmp_path):
        bad = tmp_path / "missing" / "out.csv"
        with pytest.raises(OSError, match=str(bad)):
            ex.emit([rec(2, 5, "x")], "csv", str(bad))


class TestRunners:
    def test_gradvar_rows(self):
        rows = ex.run_gradvar(cfg("gradvar", n_list=(2, 3), depth_list=(2,), ensemble_size=50, selector="0,1"))
        assert [(r.n, r.quantity) for r in rows] == [(2, "grad_var[j=0]"), (2, "grad_var[j=1]"),
                                                     (3, "grad_var[j=0]"), (3, "grad_var[j=1]")]
        assert all(r.value > 0 and r.std_error > 0 for r in rows)

    def test_identity_observable_has_no_variance(self):
        rows = ex.run_gradvar(cfg("gradvar", n_list=(2,), depth_list=(3,), ensemble_size=50, observable="identity"))
        assert rows[0].value == pytest.approx(0, abs=1e-28)

    def test_zero_offset_has_no_variance(self):
        rows = ex.run_diffvar(cfg("diffvar", n_list=(3,), depth_list=(2,), ensemble_size=50,
                                  mode="fixed_offset", offset_length=0.0))
        assert {r.quantity: r.value for r in rows} == {"diff_mean": 0.0, "diff_var": 0.0}

    def test_layerdep_single_layer(self):
        rows = ex.run_layerdep(cfg("layerdep", n_list=(2,), depth_list=(1,), ensemble_size=40))
        vals = {r.quantity: r.value for r in rows}
        assert set(vals) == {"grad_var[first]", "grad_var[middle]", "grad_var[last]"}

    def test_layerdep_seeded_rerun(self):
        c = cfg("layerdep", n_list=(2, 3), depth_list=(4,), ensemble_size=40, seed=3)
        assert ex.run_layerdep(c) == ex.run_layerdep(c)

    def test_worker_pool_gives_same_rows(self, monkeypatch):
        c = cfg("diffvar", n_list=(2, 3), depth_list=(1, 2), ensemble_size=40, seed=5)
        monkeypatch.setenv(ex.WORKERS_ENV, "1")
        serial = ex.run_diffvar(c)
        monkeypatch.setenv(ex.WORKERS_ENV, "2")
        assert ex.run_diffvar(c) == serial

    def test_bad_worker_env(self, monkeypatch):
        monkeypatch.setenv(ex.WORKERS_ENV, "many")
        with pytest.raises(ex.ConfigError):
            ex.worker_count()

    def test_psr_check(self):
        rows = ex.run_psr_check(cfg("psr-check", n_list=(3,), depth_list=(2,), ensemble_size=10))
        assert {r.quantity for r in rows} == {"psr_max_abs_error", "psr_mean_abs_error"}
        assert max(r.value for r in rows) < 1e-7

    def test_landscape_statistics(self):
        rows = ex.run_landscape(cfg("landscape", n_list=(2,), ensemble_size=20000, kinds=("global", "plateau_no_gorge")))
        vals = {r.quantity: r for r in rows}
        assert vals["global.mean_exact"].value == 0.75
        assert vals["global.grad_var_exact"].value == pytest.approx(3 / 64)
        assert abs(vals["global.mean"].value - 0.75) < 4 * vals["global.mean"].std_error
        assert vals["plateau_no_gorge.grad_var"].value == 0
        assert {r.D for r in rows} == {0}

    def test_landscape_section(self):
        rows = ex.run_landscape(cfg("landscape", n_list=(2,), kinds=("local",), section=True, section_points=5))
        assert len(rows) == 5
        assert rows[0].quantity == "local.section.0000@0.000000"
        assert [r.value for r in rows] == pytest.approx([0, 0.5, 1, 0.5, 0], abs=1e-12)

    def test_landscape_odd_step(self):
        with pytest.raises(ex.ConfigError):
            ex.run_landscape(cfg("landscape", n_list=(3,), kinds=("plateau_no_gorge",)))

    def test_expressibility_rows(self):
        rows = ex.run_expressibility(cfg("expressibility", n_list=(1,), depth_list=(2,), ensemble_size=300))
        vals = {r.quantity: r for r in rows}
        assert set(vals) == {"epsilon_O", "epsilon_rho", "haar_grad_var", "bound_rhs", "grad_var[j=0]"}
        assert vals["bound_rhs"].value >= vals["haar_grad_var"].value


class TestCompare:
    def test_small_grid_structure(self):
        report = ex.run_compare(cfg("compare", n_list=(2, 3, 4), depth_list=(3,), ensemble_size=200, seed=2))
        qs = {r.quantity for r in report.records if r.n == 2}
        assert qs == {"grad_var[j=0]", "grad_var_max", "diff_var", "diff_mean", "diff_bound_lhs", "diff_bound_rhs",
                      "shift_grad_var", "shift_diff_var_quarter"}
        assert len(report.inequalities) == 6 and all(r.holds for _, _, r in report.inequalities)
        assert len(report.comparisons) == 1

    def test_global_landscape_scaling(self):
        c = ex.compare_landscape(Kind.GLOBAL, (2, 4, 6, 8, 10), 10**5, 0)
        assert (c.gradient_class, c.difference_class) == ("exponential", "exponential")
        lo, hi = c.gradient_fit.base_ci
        assert lo <= 8 / 3 <= hi
        assert c.difference_fit.base == pytest.approx(8 / 3, rel=0.15)

    def test_local_landscape_not_exponential(self):
        c = ex.compare_landscape(Kind.LOCAL, (2, 4, 6, 8, 10), 20000, 0)
        assert c.classes_match and c.gradient_class == "non-exponential"


class TestCli:
    def run(self, capsys, *argv):
        code = main(list(argv))
        out = capsys.readouterr()
        return code, out.out, out.err

    def test_stdout_csv(self, capsys):
        code, out, _ = self.run(capsys, "gradvar", "--n", "2", "--depth", "1", "--ensemble", "20")
        assert code == 0 and out.startswith("n,D,quantity")

    def test_byte_identical_reruns(self, tmp_path, capsys):
        paths = []
        for k in range(2):
            p = tmp_path / f"r{k}.json"
            args = ["diffvar", "--n", "2,3", "--depth", "2", "--ensemble", "30", "--seed", "8",
                    "--format", "json", "--out", str(p)]
            assert main(args) == 0
            paths.append(p.read_bytes())
        assert paths[0] == paths[1]

    def test_config_file(self, tmp_path, capsys):
        conf = tmp_path / "run.cfg"
        conf.write_text("n = 2\ndepth = 1\nensemble = 20\nseed = 4\nformat = json\n")
        code, out, _ = self.run(capsys, "gradvar", "--config", str(conf), "--seed", "5")
        assert code == 0 and json.loads(out)[0]["seed"] == 5

    def test_config_error_exit(self, tmp_path, capsys):
        conf = tmp_path / "bad.cfg"
        conf.write_text("n = 2\nmode = sideways\n")
        code, _, err = self.run(capsys, "diffvar", "--config", str(conf))
        assert code == 2 and f"{conf}:2" in err

    def test_bad_flag_value_exit(self, capsys):
        code, _, err = self.run(capsys, "gradvar", "--n", "2,x")
        assert code == 2 and "--n" in err

    def test_compare_failure_exit(self, capsys):
        # a zero-length offset flattens the differences while gradients still decay
        code, _, err = self.run(capsys, "compare", "--n", "2,4,6", "--depth", "60", "--ensemble", "300",
                                "--mode", "fixed_offset", "--offset-length", "0", "--seed", "1")
        assert code == 3 and "match=NO" in err

    def test_compare_success_exit(self, capsys):
        code, out, err = self.run(capsys, "compare", "--n", "2,3", "--depth", "2", "--ensemble", "50")
        assert code == 0 and "violated: 0" in err

    def test_unwritable_output(self, tmp_path, capsys):
        code, _, err = self.run(capsys, "gradvar", "--n", "2", "--depth", "1", "--ensemble", "20",
                                "--out", str(tmp_path / "no" / "x.csv"))
        assert code == 1 and "cannot write" in err
