import json
import math
import os
import unittest
from fractions import Fraction
from pathlib import Path

from click.testing import CliRunner

from iterjulia.apps import ConfigError, load_config, main, run
from iterjulia.apps.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, figure_configs
from iterjulia.apps.report import (
    build_report,
    jsonable,
    payload_digest,
    read_report,
    read_trace_csv,
    write_trace_csv,
)
from iterjulia.polyseq import Bounds, Constant, PrefixThenTail, SeededPerturbation
from iterjulia.rays import trace_ray
from iterjulia.utils import RABBIT_C

from .util import SQUARE, tmp_dir


RENDER = """
[experiment]
task = render
out = out/square

[sequence]
rule = constant
polynomial = 0, 0, 1

[task]
pixels = 24, 16
width = 3
horizon = 32
png = no
"""

PERTURBED = """
[experiment]
task = rigidity
seed = 5

[sequence]
rule = perturbation
polynomial = -0.123+0.745j, 0, 1
radii = 0.06

[task]
seeds = 3
"""

CERTIFY = """
[experiment]
task = certify

[sequence]
rule = constant
polynomial = {c}, 0, 1

[task]
m_max = 2
n_max = 6
grid = {grid}
sample_horizon = {horizon}
"""


class TestConfig(unittest.TestCase):

    def test_defaults(self):
        config = load_config(RENDER)
        self.assertEqual(config.task, "render")
        self.assertEqual(config.out, Path("out/square"))
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.threads, 1)
        self.assertEqual(config.name, "experiment")
        self.assertEqual(config.params["pixels"], (24, 16))
        self.assertEqual(config.params["center"], 0j)
        self.assertEqual(config.params["angles"], [])
        self.assertFalse(config.params["png"])
        self.assertEqual(config.params["t_min"], 1e-5)
        self.assertIsNone(config.params["t_start"])
        self.assertEqual(config.spec(), SQUARE)

    def test_overrides(self):
        config = load_config(RENDER, seed=9, out="elsewhere", threads=3)
        self.assertEqual((config.seed, config.out, config.threads), (9, Path("elsewhere"), 3))

    def test_from_file(self):
        with tmp_dir() as d:
            path = os.path.join(d, "render.ini")
            with open(path, "w") as f:
                f.write(RENDER)
            self.assertEqual(load_config(path).params, load_config(RENDER).params)
            with open(path) as f:
                self.assertEqual(load_config(f).task, "render")

    def test_perturbation(self):
        config = load_config(PERTURBED)
        spec = config.spec()
        self.assertIsInstance(spec.rule, SeededPerturbation)
        self.assertEqual(spec.rule.seed, 5)
        self.assertAlmostEqual(spec.bounds.M, abs(RABBIT_C) + 0.06)
        self.assertEqual(config.spec(6).rule.seed, 6)
        self.assertEqual(config.seeds(), [5, 6, 7])
        self.assertEqual(config.params["t_min"], 1e-40)
        self.assertEqual(config.params["angles"],
                         [Fraction(1, 7), Fraction(2, 7), Fraction(4, 7)])
        self.assertIsInstance(config.base_spec().rule, Constant)

    def test_scaled(self):
        config = load_config(PERTURBED)
        self.assertEqual(config.scaled_spec(0.0125).rule.radii, (0.0125, 0.0, 0.0))
        with self.assertRaises(ConfigError):
            load_config(RENDER).scaled_spec(0.01)

    def test_periodic_bounds(self):
        config = load_config(RENDER.replace(
            "rule = constant\npolynomial = 0, 0, 1",
            "rule = periodic\npolynomials = 0, 0, 2; 0.1, 0, 0, 3"))
        self.assertEqual(config.spec().bounds, Bounds(3, 3.0, 0.1))

    def test_prefix(self):
        config = load_config(RENDER.replace(
            "rule = constant\npolynomial = 0, 0, 1",
            "rule = prefix\npolynomials = 0.5, 0, 1\n\n"
            "[sequence.tail]\nrule = constant\npolynomial = 0, 0, 1"))
        spec = config.spec()
        self.assertIsInstance(spec.rule, PrefixThenTail)
        self.assertEqual(spec.polynomial(1).coeffs[0], 0.5)
        self.assertEqual(spec.polynomial(2).coeffs[0], 0)
        self.assertEqual(spec.bounds.M, 0.5)

    def test_explicit_bounds_checked(self):
        with self.assertRaises(ConfigError) as cm:
            load_config(RENDER.replace("polynomial = 0, 0, 1",
                                       "polynomial = 0.5, 0, 1\nM = 0.1"))
        self.assertEqual(cm.exception.section, "sequence")

    def test_errors(self):
        cases = {
            "task = render": ("task = paint", "experiment", "task"),
            "pixels = 24, 16": ("pixels = 24, 16, 8", "task", "pixels"),
            "png = no": ("colour = red", "task", "colour"),
            "polynomial = 0, 0, 1": ("polynomial = 0, z, 1", "sequence", "polynomial"),
            "rule = constant": ("rule = random", "sequence", "rule"),
            "out = out/square": ("threads = 0", "experiment", "threads"),
        }
        for old, (new, section, key) in cases.items():
            with self.subTest(new=new):
                with self.assertRaises(ConfigError) as cm:
                    load_config(RENDER.replace(old, new))
                self.assertEqual((cm.exception.section, cm.exception.key), (section, key))

    def test_structure_errors(self):
        with self.assertRaises(ConfigError):
            load_config(RENDER + "\n[extra]\nkey = 1\n")
        with self.assertRaises(ConfigError):
            load_config("[task]\nm = 0\n")
        with self.assertRaises(ConfigError):
            load_config("not an ini file\n")
        with self.assertRaises(ConfigError):
            load_config(RENDER.replace("rule = constant", "rule = perturbation"))

    def test_config_error_is_value_error(self):
        error = ConfigError("task", "m", "bad value")
        self.assertIsInstance(error, ValueError)
        self.assertEqual(str(error), "[task] m: bad value")

    def test_write_round_trip(self):
        config = load_config(PERTURBED)
        with tmp_dir() as d:
            path = config.write(os.path.join(d, "resolved.ini"))
            again = load_config(path)
        self.assertEqual(again.resolved(), config.resolved())
        self.assertEqual(again.params, config.params)

    def test_with_task(self):
        config = load_config(PERTURBED).with_task("render", {"pixels": "8", "seeds": "4"})
        self.assertEqual(config.task, "render")
        self.assertEqual(config.params["pixels"], (8, 8))
        self.assertNotIn("seeds", config.task_options)
        with self.assertRaises(ConfigError):
            config.with_task("paint")


class TestReport(unittest.TestCase):

    def test_jsonable(self):
        self.assertEqual(jsonable({"z": 1 + 2j, "a": Fraction(1, 7), "x": math.inf}),
                         {"z": [1.0, 2.0], "a": "1/7", "x": "inf"})
        self.assertEqual(jsonable((1, [Path("a")])), [1, ["a"]])

    def test_digest_stable(self):
        config = load_config(RENDER).resolved()
        a = build_report("render", config, {"value": 1.5})
        b = build_report("render", config, {"value": 1.5})
        c = build_report("render", config, {"value": 2.5})
        self.assertEqual(a["digest"], b["digest"])
        self.assertNotEqual(a["digest"], c["digest"])
        self.assertEqual(payload_digest(a), a["digest"])

    def test_trace_csv(self):
        trace = trace_ray(SQUARE, 0, Fraction(1, 3), t_min=1e-3)
        with tmp_dir() as d:
            path = write_trace_csv(trace, os.path.join(d, "ray.csv"))
            rows = read_trace_csv(path)
        self.assertEqual(rows, [(p.potential, p.z) for p in trace.points])

    def test_trace_csv_header(self):
        with tmp_dir() as d:
            path = os.path.join(d, "bad.csv")
            with open(path, "w") as f:
                f.write("x,y\n1,2\n")
            with self.assertRaises(ValueError):
                read_trace_csv(path)


CANTOR_SEEDS = """
[experiment]
task = rigidity
seed = 3

[sequence]
rule = perturbation
polynomial = -3, 0, 1
radii = 0.01

[task]
seeds = 2
denominators = 7
m_max = 2
n_max = 6
grid = 65
sample_horizon = 64
"""

HAUSDORFF = """
[experiment]
task = hausdorff
seed = 7

[sequence]
rule = perturbation
polynomial = -0.123+0.745j, 0, 1
radii = 0.05

[task]
grid = {grid}
"""


class TestRun(unittest.TestCase):

    def test_render(self):
        with tmp_dir() as d:
            config = load_config(RENDER, out=d)
            self.assertEqual(run(config), EXIT_OK)
            report = read_report(os.path.join(d, "experiment_render.json"))
            self.assertTrue(os.path.exists(os.path.join(d, "experiment.ppm")))
            self.assertTrue(os.path.exists(os.path.join(d, "experiment.json")))
        self.assertEqual(report["status"], "ok")
        self.assertEqual(report["task"], "render")
        self.assertEqual(report["config"]["task"]["pixels"], "24, 16")
        self.assertGreater(report["result"]["bounded_pixels"], 0)
        self.assertEqual(report["digest"], payload_digest(report))

    def test_green(self):
        text = RENDER.replace("task = render", "task = green").replace(
            "[task]\npixels = 24, 16\nwidth = 3\nhorizon = 32\npng = no",
            "[task]\npoints = 3, 0\nhorizon = 64")
        with tmp_dir() as d:
            self.assertEqual(run(load_config(text, out=d)), EXIT_OK)
            report = read_report(os.path.join(d, "experiment_green.json"))
        first, second = report["result"]["points"]
        self.assertTrue(first["escaped"])
        self.assertAlmostEqual(first["value"], math.log(3))
        self.assertFalse(second["escaped"])

    def test_certify(self):
        with tmp_dir() as d:
            config = load_config(CERTIFY.format(c=0, grid=65, horizon=512), out=d)
            self.assertEqual(run(config), EXIT_OK)
            report = read_report(os.path.join(d, "experiment_certify.json"))
        cert = report["result"]["certificate"]
        self.assertEqual(cert["verdict"], "Pass")
        self.assertEqual(cert["N0"], 1)

    def test_numeric_failure(self):
        with tmp_dir() as d:
            config = load_config(CERTIFY.format(c=-3, grid=65, horizon=64), out=d)
            self.assertEqual(run(config), EXIT_NUMERIC)
            report = read_report(os.path.join(d, "error.json"))
        self.assertEqual(report["status"], "error")
        self.assertEqual(report["result"]["error"], "SamplingFailed")

    def test_failing_seeds_recorded(self):
        # Every seed leaves the connectedness locus, so sampling fails per seed
        with tmp_dir() as d:
            config = load_config(CANTOR_SEEDS, out=d)
            self.assertEqual(run(config), EXIT_OK)
            report = read_report(os.path.join(d, "experiment_rigidity.json"))
        result = report["result"]
        self.assertEqual(result["total"], 2)
        self.assertEqual(result["failed"], 2)
        self.assertEqual(result["certified"], 0)
        self.assertEqual([r["seed"] for r in result["runs"]], [3, 4])
        for entry in result["runs"]:
            self.assertEqual(entry["error"], "SamplingFailed")
            self.assertIn("grid points escaped", entry["message"])
            self.assertFalse(entry["co_land"])
            self.assertIsNone(entry["certificate"])

    def test_hausdorff(self):
        with tmp_dir() as d:
            config = load_config(HAUSDORFF.format(grid=129), out=d)
            self.assertEqual(run(config), EXIT_OK)
            report = read_report(os.path.join(d, "experiment_hausdorff.json"))
        result = report["result"]
        self.assertEqual([r["radius"] for r in result["distances"]], [0.05, 0.025, 0.0125])
        self.assertTrue(result["decreasing"])
        for row in result["distances"]:
            self.assertGreaterEqual(row["quality"], result["base_quality"])

    def test_hausdorff_default_resolution(self):
        self.assertEqual(load_config(HAUSDORFF.replace("grid = {grid}\n", "")).params["grid"],
                         1025)

    def test_rejected_input(self):
        text = RENDER.replace("task = render", "task = trace-ray").replace(
            "[task]\npixels = 24, 16\nwidth = 3\nhorizon = 32\npng = no",
            "[task]\nangles = 1/3\nt_start = 0.1")
        with tmp_dir() as d:
            self.assertEqual(run(load_config(text, out=d)), EXIT_CONFIG)
            report = read_report(os.path.join(d, "error.json"))
        self.assertEqual(report["result"]["error"], "ValueError")

    def test_trace_ray(self):
        text = RENDER.replace("task = render", "task = trace-ray").replace(
            "[task]\npixels = 24, 16\nwidth = 3\nhorizon = 32\npng = no",
            "[task]\nangles = 1/3, 0\nt_min = 1e-10")
        with tmp_dir() as d:
            self.assertEqual(run(load_config(text, out=d)), EXIT_OK)
            report = read_report(os.path.join(d, "experiment_trace-ray.json"))
            rays = report["result"]["rays"]
            self.assertEqual([r["angle"] for r in rays], ["1/3", "0"])
            self.assertEqual([r["status"] for r in rays], ["Landed", "Landed"])
            rows = read_trace_csv(os.path.join(d, rays[0]["csv"]))
        landing = complex(*rays[0]["landing"])
        self.assertLess(abs(landing - complex(-0.5, math.sqrt(3) / 2)), 1e-7)
        self.assertEqual(len(rows), rays[0]["points"])

    def test_conjugate_monic(self):
        text = RENDER.replace("task = render", "task = conjugate-monic").replace(
            "rule = constant\npolynomial = 0, 0, 1",
            "rule = periodic\npolynomials = 0, 0, 2; 0.1, 0, 0, 3").replace(
            "[task]\npixels = 24, 16\nwidth = 3\nhorizon = 32\npng = no",
            "[task]\nm_max = 4\nsamples = 20")
        with tmp_dir() as d:
            self.assertEqual(run(load_config(text, out=d)), EXIT_OK)
            report = read_report(os.path.join(d, "experiment_conjugate-monic.json"))
        result = report["result"]
        self.assertEqual(len(result["leads"]), 4)
        self.assertLess(result["max_lead_error"], 1e-10)
        self.assertLess(result["max_residual"], 1e-8)


class TestFigures(unittest.TestCase):

    def test_bundled(self):
        configs = figure_configs(out="somewhere")
        self.assertEqual(sorted(configs), ["figure1", "figure2"])
        first, second = configs["figure1"], configs["figure2"]
        self.assertEqual(first.task, "render")
        self.assertEqual(first.params["pixels"], (800, 800))
        self.assertEqual(first.out, Path("somewhere") / "figure1")
        self.assertEqual(second.task, "rigidity")
        self.assertEqual(second.seeds(), list(range(2024, 2034)))
        self.assertEqual(second.params["denominators"], [7, 63])

    def test_seed_override(self):
        self.assertEqual(figure_configs(seed=1)["figure2"].seed, 1)

    def test_bundled_seeds_run(self):
        figure = figure_configs()["figure2"]
        self.assertEqual(figure.spec().rule.radii, (0.02,))
        options = dict(figure.task_options, denominators="7", m_max="2", n_max="6",
                       grid="65", t_min="1e-12")
        with tmp_dir() as d:
            config = figure.with_task("rigidity", options).with_overrides(out=d)
            self.assertEqual(run(config), EXIT_OK)
            report = read_report(os.path.join(d, "figure2_rigidity.json"))
        result = report["result"]
        self.assertEqual(result["total"], 10)
        self.assertEqual([r["seed"] for r in result["runs"]], list(range(2024, 2034)))
        for entry in result["runs"]:
            with self.subTest(seed=entry["seed"]):
                if "error" in entry:
                    self.assertIn("message", entry)
                else:
                    self.assertIn(entry["certificate"]["verdict"],
                                  ("Pass", "Fail(postcritical)", "Fail(expansion)",
                                   "Fail(doubling)"))


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self.runner = CliRunner()

    def test_version(self):
        result = self.runner.invoke(main, ["--version"])
        self.assertEqual(result.exit_code, 0)
        self.assertIn("iterjulia, version", result.output)

    def test_run_command(self):
        with tmp_dir() as d:
            path = os.path.join(d, "render.ini")
            with open(path, "w") as f:
                f.write(RENDER)
            out = os.path.join(d, "out")
            result = self.runner.invoke(main, ["run", "--config", path, "--out", out])
            self.assertEqual(result.exit_code, 0, result.output)
            self.assertTrue(os.path.exists(os.path.join(out, "experiment_render.json")))

    def test_task_command(self):
        with tmp_dir() as d:
            path = os.path.join(d, "render.ini")
            with open(path, "w") as f:
                f.write(RENDER)
            out = os.path.join(d, "out")
            result = self.runner.invoke(main, ["green", "--config", path, "--out", out])
            self.assertEqual(result.exit_code, 0, result.output)
            with open(os.path.join(out, "experiment_green.json")) as f:
                self.assertEqual(json.load(f)["task"], "green")

    def test_invalid_config(self):
        with tmp_dir() as d:
            path = os.path.join(d, "bad.ini")
            with open(path, "w") as f:
                f.write(RENDER.replace("task = render", "task = paint"))
            out = os.path.join(d, "out")
            result = self.runner.invoke(main, ["run", "--config", path, "--out", out])
            self.assertEqual(result.exit_code, EXIT_CONFIG)
            self.assertTrue(os.path.exists(os.path.join(out, "error.json")))

    def test_numeric_exit(self):
        with tmp_dir() as d:
            path = os.path.join(d, "cantor.ini")
            with open(path, "w") as f:
                f.write(CERTIFY.format(c=-3, grid=65, horizon=64))
            result = self.runner.invoke(main, ["certify", "--config", path, "--out", d])
            self.assertEqual(result.exit_code, EXIT_NUMERIC)


if __name__ == "__main__":
    unittest.main()
