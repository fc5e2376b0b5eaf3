"""
Tests for the command line: exit codes, artifacts and summaries.
"""

import json

import pytest

from cli.commands import RunCommand
from utils.file_io import read_csv


def _load(path):
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture
def power4_run(write_experiment):
    return write_experiment({
        "objective": {"name": "power1d", "params": {"b": 4}},
        "methods": ["implicit"],
        "epsilon": "auto",
        "x0": [1.0],
        "stop": {"max_iters": 200},
    })


class TestArguments:
    """Argument parsing and configuration failures exit with 2."""

    def test_unknown_subcommand(self, run_cli):
        code, _ = run_cli("plot")
        assert code == 2

    def test_missing_config(self, run_cli):
        code, _ = run_cli("run")
        assert code == 2

    def test_missing_file(self, run_cli, tmp_path):
        code, out_dir = run_cli("run", "--config", str(tmp_path / "absent.json"))
        assert code == 2
        assert not out_dir.exists()

    def test_malformed_document(self, run_cli, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        code, _ = run_cli("run", "--config", str(path))
        assert code == 2

    def test_unexpected_error_exits_with_3(self, run_cli, power4_run, monkeypatch):
        def fail(self, args, collector):
            raise RuntimeError("unexpected")

        monkeypatch.setattr(RunCommand, "execute", fail)
        code, out_dir = run_cli("run", "--config", str(power4_run))
        assert code == 3
        assert not (out_dir / "summary.json").exists()

    def test_unknown_setting(self, run_cli, power4_run, tmp_path):
        settings = tmp_path / "settings.json"
        settings.write_text(json.dumps({"camera": {"FOV": 45}}), encoding="utf-8")
        code, _ = run_cli("run", "--config", str(power4_run), "--settings", str(settings))
        assert code == 2


class TestRunCommand:
    """Test `run`."""

    def test_empty_method_list(self, run_cli, write_experiment):
        path = write_experiment({"objective": "power1d", "methods": [], "x0": [1.0]})
        code, _ = run_cli("run", "--config", str(path))
        assert code == 2

    def test_implicit_auto_step(self, run_cli, power4_run):
        code, out_dir = run_cli("run", "--config", str(power4_run))
        assert code == 0

        summary = _load(out_dir / "summary.json")
        entry = summary["methods"]["implicit"]
        assert entry["h_monotone"]
        assert entry["iterations"] == 200
        assert entry["epsilon"] == pytest.approx(0.9 * 0.5 / 6.0)
        assert entry["certificate"]["beta_star"] == pytest.approx(0.25)
        assert entry["final_subopt"] < 0.25

        rows = read_csv(out_dir / "implicit.csv")
        assert len(rows) == 201
        assert list(rows[0])[:5] == ["iter", "t", "subopt", "H", "V"]
        assert float(rows[0]["subopt"]) == pytest.approx(0.25)
        assert all(row["V"] != "" for row in rows)

    def test_reruns_are_byte_identical(self, run_cli, power4_run):
        _, first = run_cli("run", "--config", str(power4_run), out="first")
        _, second = run_cli("run", "--config", str(power4_run), out="second")
        assert (first / "implicit.csv").read_bytes() == (second / "implicit.csv").read_bytes()

    def test_duplicate_methods_get_suffixes(self, run_cli, write_experiment):
        path = write_experiment({
            "objective": {"name": "power1d", "params": {"b": 2}},
            "methods": [{"method": "gradient_descent", "epsilon": 0.5},
                        {"method": "gradient_descent", "epsilon": 0.1}],
            "x0": [1.0],
            "stop": {"max_iters": 10},
        })
        code, out_dir = run_cli("run", "--config", str(path))
        assert code == 0
        assert set(_load(out_dir / "summary.json")["methods"]) == {"gradient_descent_0", "gradient_descent_1"}
        assert (out_dir / "gradient_descent_0.csv").exists()

    def test_stride_thins_rows(self, run_cli, write_experiment):
        path = write_experiment({
            "objective": {"name": "power1d", "params": {"b": 2}},
            "methods": [{"method": "gradient_descent", "epsilon": 0.5}],
            "x0": [1.0],
            "stop": {"max_iters": 25},
            "output": {"stride": 10},
        })
        code, out_dir = run_cli("run", "--config", str(path))
        assert code == 0
        assert [row["iter"] for row in read_csv(out_dir / "gradient_descent.csv")] == ["0", "10", "20", "25"]

    def test_seed_flag_overrides_random_start(self, run_cli, write_experiment):
        path = write_experiment({
            "objective": "quartic2d",
            "methods": [{"method": "gradient_descent", "epsilon": 1e-3}],
            "x0": "random",
            "stop": {"max_iters": 0},
        })
        _, first = run_cli("run", "--config", str(path), "--seed", "1", out="first")
        _, second = run_cli("run", "--config", str(path), "--seed", "1", out="second")
        _, other = run_cli("run", "--config", str(path), "--seed", "2", out="other")
        start = lambda out_dir: read_csv(out_dir / "gradient_descent.csv")[0]["x_0"]
        assert start(first) == start(second)
        assert start(first) != start(other)

    def test_subsolver_failure_exits_with_3(self, run_cli, power4_run, tmp_path):
        settings = tmp_path / "settings.json"
        settings.write_text(json.dumps({"integrator": {"SUBSOLVER_MAX_ITERS": 1, "SUBSOLVER_TOL": -1.0}}),
                            encoding="utf-8")
        code, _ = run_cli("run", "--config", str(power4_run), "--settings", str(settings))
        assert code == 3

    @pytest.mark.slow
    def test_quartic_ordering(self, run_cli, write_experiment):
        """Separable 4/3 kinetic beats classical momentum, which beats gradient descent."""
        path = write_experiment({
            "objective": "quartic2d",
            "methods": [
                {"method": "gradient_descent", "epsilon": "inverse_l0"},
                {"method": "classical_momentum", "epsilon": "inverse_l0"},
                {"method": "explicit1", "epsilon": 0.05, "kinetic": {"a": 4 / 3, "A": 4 / 3, "q": 4 / 3}},
            ],
            "x0": [1.0, 1.0],
            "stop": {"max_iters": 10000},
            "output": {"stride": 100},
        })
        code, out_dir = run_cli("run", "--config", str(path))
        assert code == 0

        methods = _load(out_dir / "summary.json")["methods"]
        assert methods["gradient_descent"]["epsilon"] == pytest.approx(1.0 / 96.0)
        final = {label: entry["final_subopt"] for label, entry in methods.items()}
        assert final["explicit1"] <= 1e-8
        assert final["explicit1"] < final["classical_momentum"] < final["gradient_descent"]
        for label in final:
            assert (out_dir / f"{label}.csv").exists()


class TestRatesCommand:
    """Test `rates`."""

    def test_power_objective(self, run_cli, write_experiment):
        path = write_experiment({
            "objective": {"name": "power1d", "params": {"b": 4}},
            "x0": [1.0],
            "stop": {"max_iters": 50},
        })
        code, out_dir = run_cli("rates", "--config", str(path))
        assert code == 0

        report = _load(out_dir / "rates.json")
        assert report["growth_check"]["passed"]
        implicit = report["methods"]["implicit"]
        assert implicit["available"]
        assert implicit["constants"]["C_fK"] == pytest.approx(3.0)
        assert implicit["certificate"]["epsilon_max"] == pytest.approx(0.5 / 6.0)
        assert implicit["envelope"]["available"]
        assert not report["methods"]["explicit2"]["available"]

        rows = read_csv(out_dir / "envelope_implicit.csv")
        assert len(rows) == 51
        assert float(rows[-1]["W"]) < float(rows[0]["W"])

    def test_relativistic_bundle(self, run_cli, write_experiment):
        path = write_experiment({
            "objective": {"name": "phiPower", "params": {"pairing": "relativistic"}},
            "methods": ["implicit"],
            "x0": [1.0],
            "stop": {"max_iters": 10},
        })
        code, out_dir = run_cli("rates", "--config", str(path))
        assert code == 0

        implicit = _load(out_dir / "rates.json")["methods"]["implicit"]
        assert implicit["kinetic"] == {"a": 2.0, "A": 1.0, "q": 2.0}
        constants = implicit["constants"]
        assert constants["C_K"] == 2.0
        assert constants["C_fK"] == pytest.approx(4.0)
        assert constants["D_fK"] == pytest.approx(21.0)
        assert constants["alpha_fn"]["decay"] == pytest.approx(1 / 7)

    def test_uncertified_objective(self, run_cli, write_experiment):
        path = write_experiment({"objective": {"name": "power1d", "params": {"b": 4, "certified": False}}})
        code, _ = run_cli("rates", "--config", str(path))
        assert code == 2


class TestOdeCommand:
    """Test `ode`."""

    def test_zero_horizon(self, run_cli, write_experiment):
        path = write_experiment({"objective": "quadratic", "x0": [1.0, 1.0], "ode": {"t_end": 0}})
        code, out_dir = run_cli("ode", "--config", str(path))
        assert code == 0
        assert len(read_csv(out_dir / "ode.csv")) == 1
        assert _load(out_dir / "summary.json")["samples"] == 1

    def test_damped_quadratic(self, run_cli, write_experiment):
        path = write_experiment({
            "objective": {"name": "power1d", "params": {"b": 2}},
            "x0": [1.0],
            "ode": {"t_end": 20, "samples": 200},
        })
        code, out_dir = run_cli("ode", "--config", str(path))
        assert code == 0

        H = [float(row["H"]) for row in read_csv(out_dir / "ode.csv")]
        assert len(H) == 200
        assert all(b <= a + 1e-8 for a, b in zip(H, H[1:]))
        summary = _load(out_dir / "summary.json")
        assert summary["status"] == "completed"
        assert summary["envelope"]["holds"]

    def test_negative_horizon(self, run_cli, write_experiment):
        path = write_experiment({"objective": "quadratic", "x0": [1.0, 1.0], "ode": {"t_end": -1}})
        code, _ = run_cli("ode", "--config", str(path))
        assert code == 2


class TestLowerCommand:
    """Test `lower`."""

    def test_linear_regime_rejected(self, run_cli):
        code, out_dir = run_cli("lower", "--a", "2", "--b", "2", "--mode", "generic")
        assert code == 2
        assert not (out_dir / "lower.json").exists()

    def test_invalid_power(self, run_cli):
        code, _ = run_cli("lower", "--a", "0.5")
        assert code == 2

    @pytest.mark.slow
    def test_generic_exponent(self, run_cli):
        code, out_dir = run_cli("lower", "--a", "2", "--b", "4", "--gamma", "1", "--mode", "generic")
        assert code == 0
        report = _load(out_dir / "lower.json")
        assert report["predicted_exponent"] == pytest.approx(0.5)
        assert report["exponent_error"] <= 0.05

    @pytest.mark.slow
    def test_exceptional_path(self, run_cli):
        code, out_dir = run_cli("lower", "--mode", "eta")
        assert code == 0
        report = _load(out_dir / "lower.json")
        assert report["eta"]["eta"] > 0.0
        assert 0.9 <= report["fit"]["rate"] / report["predicted_rate"] <= 1.05
        assert (out_dir / "eta_path.csv").exists()


class TestCompareCommand:
    """Test `compare`."""

    def test_dimension_sweep(self, run_cli, write_experiment):
        path = write_experiment({
            "objective": "normFour",
            "methods": ["implicit", "gradient_descent"],
            "x0": 2.0,
            "stop": {"max_iters": 300},
            "compare": {"dims": [2, 10], "tolerance": 1e-6},
        })
        code, out_dir = run_cli("compare", "--config", str(path))
        assert code == 0

        summary = _load(out_dir / "summary.json")
        assert summary["dims"] == [2, 10]
        assert set(summary["runs"]) == {"implicit_d2", "gradient_descent_d2", "implicit_d10", "gradient_descent_d10"}
        assert summary["runs"]["gradient_descent_d2"]["epsilon"] == pytest.approx(1.0 / 3.0)

        rows = read_csv(out_dir / "compare.csv")
        assert [(row["d"], row["method"]) for row in rows] == [
            ("2", "implicit"), ("2", "gradient_descent"), ("10", "implicit"), ("10", "gradient_descent")]
        assert all(row["converged"] in ("true", "false") for row in rows)

    def test_dimension_independence(self, run_cli, write_experiment):
        """Hamiltonian descent iterations stay flat in d while gradient descent at 1/3 slows down."""
        path = write_experiment({
            "objective": "normFour",
            "methods": ["implicit", "gradient_descent"],
            "x0": 2.0,
            "stop": {"max_iters": 1000},
            "compare": {"dims": [2, 10, 50], "tolerance": 1e-6},
        })
        code, out_dir = run_cli("compare", "--config", str(path))
        assert code == 0

        rows = read_csv(out_dir / "compare.csv")
        assert all(row["converged"] == "true" for row in rows)
        iterations = {method: [int(row["iterations"]) for row in rows if row["method"] == method]
                      for method in ("implicit", "gradient_descent")}
        hamiltonian = iterations["implicit"]
        assert max(hamiltonian) <= 1.2 * min(hamiltonian)
        gd = iterations["gradient_descent"]
        assert gd[0] < gd[1] < gd[2]

    def test_fixed_dimension_objective(self, run_cli, write_experiment):
        path = write_experiment({
            "objective": "power1d",
            "methods": ["implicit"],
            "x0": [1.0],
            "compare": {"dims": [2]},
        })
        code, _ = run_cli("compare", "--config", str(path))
        assert code == 2
