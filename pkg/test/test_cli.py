#!/usr/bin/env python3

"""
Test the command line interface end to end
"""

import csv
import json
import os
import tempfile
from unittest import TestCase, main

from click.testing import CliRunner

from codesign.cli import (
    bundles,
    cli,
    estimate,
    export,
    search,
    select,
    simulate,
    sweep,
)
from codesign.config import data_path, load_config, validate
from codesign.log import LOGGER
from codesign.util import load_jsonl, save_json


def fixture(name):
    return data_path("fixtures", name)


def read_bytes(path):
    with open(path, "rb") as fin:
        return fin.read()


class TestCli(TestCase):
    LOGGER.setLevel("DEBUG")
    data_dir = os.path.join(os.path.dirname(__file__), "data")

    def setUp(self):
        self.runner = CliRunner()
        self.tempdirobj = tempfile.TemporaryDirectory(prefix="tmpdir_test_cli_", dir=".")
        self.tempdir = self.tempdirobj.name

    def tearDown(self):
        self.tempdirobj.cleanup()

    def temp(self, *parts):
        return os.path.join(self.tempdir, *parts)

    def test_version(self):
        results = self.runner.invoke(cli, ["--version"])
        self.assertEqual(results.exit_code, 0)
        self.assertIn("codesign", results.output)

    def test_estimate(self):
        fps = {}
        for name in ("dnn_a", "dnn_b", "dnn_c"):
            results = self.runner.invoke(estimate, [fixture(name + ".json")])
            self.assertEqual(results.exit_code, 0, results.output)
            report = json.loads(results.stdout)
            validate(report, "qos")
            self.assertEqual(report["device"], "pynq-z1")
            fps[name] = report["fps"]
        self.assertGreater(fps["dnn_a"], fps["dnn_b"])
        self.assertGreater(fps["dnn_b"], fps["dnn_c"])

    def test_estimate_text(self):
        results = self.runner.invoke(estimate, ["--text", fixture("dnn_a.json")])
        self.assertEqual(results.exit_code, 0)
        self.assertRegex(results.stdout, "^dnn_a: feasible")
        self.assertRegex(results.stdout, "segment r1:")

    def test_estimate_separate_scheme(self):
        design = load_config(fixture("dnn_a.json"))
        net_file, scheme_file = self.temp("net.json"), self.temp("scheme.json")
        save_json(net_file, {"net": design["net"]})
        results = self.runner.invoke(estimate, [net_file])
        self.assertEqual(results.exit_code, 2)

        design["scheme"]["fm_bits"] = 16
        save_json(scheme_file, {"scheme": design["scheme"]})
        results = self.runner.invoke(estimate, [net_file, scheme_file])
        self.assertEqual(results.exit_code, 0)
        with_b = json.loads(results.stdout)
        b = json.loads(self.runner.invoke(estimate, [fixture("dnn_b.json")]).stdout)
        self.assertEqual(with_b["total_cycles"], b["total_cycles"])

    def test_malformed_input(self):
        broken = self.temp("broken.json")
        with open(broken, "w", encoding="utf-8") as fout:
            fout.write('{"net": {"input": [3, 8, 8],\n')
        results = self.runner.invoke(estimate, [broken])
        self.assertEqual(results.exit_code, 2)

    def test_bundles(self):
        out = self.temp("bundles.json")
        results = self.runner.invoke(bundles, ["-n", "3", "-s", "11", "-o", out])
        self.assertEqual(results.exit_code, 0, results.output)
        document = load_config(out, "bundles")
        self.assertEqual(len(document["bundles"]), 3)
        self.assertEqual(document["bundles"][0]["name"], "dw3-pw48")

    def test_bundles_limit(self):
        results = self.runner.invoke(bundles, ["--limit", "0"])
        self.assertEqual(results.exit_code, 2)
        self.assertIn("limit must be ≥ 1", results.output)

    def test_select(self):
        out = self.temp("selected.json")
        results = self.runner.invoke(
            select, ["-n", "4", "--n-reps", "2", "-k", "2", "--top-n", "1", "-o", out]
        )
        self.assertEqual(results.exit_code, 0, results.output)
        document = load_config(out)
        self.assertEqual(len(document["selected"]), 2)
        self.assertEqual(len(document["candidates"]), 4)
        self.assertTrue(document["synthetic"])

    def run_search(self, out_dir, *extra):
        return self.runner.invoke(
            search, [fixture("tiny_search.json"), "--out", out_dir] + list(extra)
        )

    def test_search(self):
        out_dir = self.temp("run")
        results = self.run_search(out_dir, "--seed", "3")
        self.assertEqual(results.exit_code, 0, results.output)

        best = load_config(os.path.join(out_dir, "best.json"), "design")
        self.assertTrue(best["feasible"])
        self.assertTrue(best["synthetic"])
        self.assertEqual(best["diagnosis"], [])

        manifest = load_config(os.path.join(out_dir, "manifest.json"), "manifest")
        self.assertEqual(manifest["seed"], 3)
        self.assertEqual(set(manifest["configs"]), {"search", "device", "seed_design"})
        self.assertIn("best.json", manifest["outputs"])

        for line in load_jsonl(os.path.join(out_dir, "audit.jsonl")):
            validate(line, "audit")

        with open(os.path.join(out_dir, "pareto.csv"), encoding="utf-8") as fin:
            rows = list(csv.reader(fin))
        self.assertEqual(rows[0], ["qor", "fps", "efficiency", "design_path"])
        self.assertGreater(len(rows), 1)
        for row in rows[1:]:
            design = load_config(os.path.join(out_dir, row[3]), "design")
            self.assertEqual(float(row[0]), design["qor"])

    def test_search_is_deterministic(self):
        first, second = self.temp("first"), self.temp("second")
        self.assertEqual(self.run_search(first, "--seed", "7").exit_code, 0)
        self.assertEqual(self.run_search(second, "--seed", "7").exit_code, 0)
        for name in ("best.json", "pareto.csv", "audit.jsonl"):
            self.assertEqual(
                read_bytes(os.path.join(first, name)),
                read_bytes(os.path.join(second, name)),
                name,
            )

    def test_search_without_feasible_design(self):
        out_dir = self.temp("run")
        results = self.run_search(out_dir, "--min-fps", "1e9")
        self.assertEqual(results.exit_code, 3)
        best = load_config(os.path.join(out_dir, "best.json"), "design")
        self.assertFalse(best["feasible"])
        self.assertTrue(best["diagnosis"])

    def test_search_with_endpoint(self):
        out_dir = self.temp("run")
        stub = os.path.join(self.data_dir, "oracle_stub.py")
        store = self.temp("responses.jsonl")
        results = self.run_search(out_dir, "--oracle", "exec:" + stub, "--cache", store)
        self.assertEqual(results.exit_code, 0, results.output)
        best = load_config(os.path.join(out_dir, "best.json"))
        self.assertFalse(best["synthetic"])
        self.assertEqual(best["metric"], "iou")
        # one endpoint call per distinct design
        self.assertLessEqual(len(load_jsonl(store)), 6)

    def test_search_unreachable_endpoint(self):
        with self.assertLogs(LOGGER, level="ERROR") as logs:
            results = self.run_search(self.temp("run"), "--oracle", "exec:/no/such/oracle")
        self.assertEqual(results.exit_code, 4)
        self.assertIn("Failing request", "\n".join(logs.output))

    def test_search_broken_endpoint(self):
        stub = os.path.join(self.data_dir, "oracle_broken.py")
        results = self.run_search(self.temp("run"), "--oracle", "exec:" + stub)
        self.assertEqual(results.exit_code, 4)

    def test_search_bad_arguments(self):
        results = self.run_search(self.temp("run"), "--oracle", "magic")
        self.assertEqual(results.exit_code, 2)
        results = self.runner.invoke(search, [fixture("tiny_search.json")])
        self.assertEqual(results.exit_code, 2)
        bad = self.temp("bad_search.json")
        save_json(bad, {"max_iters": 0})
        results = self.runner.invoke(search, [bad, "--out", self.temp("bad")])
        self.assertEqual(results.exit_code, 2)

    def test_export(self):
        out = self.temp("accelerator.json")
        results = self.runner.invoke(export, [fixture("dnn_a.json"), "-o", out])
        self.assertEqual(results.exit_code, 0, results.output)
        descriptor = load_config(out, "descriptor")
        self.assertEqual(descriptor["device"], "pynq-z1")

    def test_export_search_result(self):
        out_dir = self.temp("run")
        self.assertEqual(self.run_search(out_dir).exit_code, 0)
        results = self.runner.invoke(export, [os.path.join(out_dir, "best.json")])
        self.assertEqual(results.exit_code, 0, results.output)
        validate(json.loads(results.stdout), "descriptor")

    def test_export_infeasible(self):
        device = load_config(data_path("devices", "pynq_z1.json"))
        device["budget"]["bram18"] = 10
        device_file = self.temp("small.json")
        save_json(device_file, device)
        results = self.runner.invoke(
            export, [fixture("dnn_a.json"), "--device", device_file]
        )
        self.assertEqual(results.exit_code, 5)

    def test_simulate(self):
        plan_file = self.temp("plan.json")
        save_json(
            plan_file,
            {
                "name": "three-stages",
                "tiles": 6,
                "stages": [
                    {"name": "load", "per_tile_cycles": 4},
                    {"name": "conv", "per_tile_cycles": 9},
                    {"name": "store", "per_tile_cycles": 2},
                ],
            },
        )
        out = self.temp("sim.json")
        results = self.runner.invoke(simulate, [plan_file, "-o", out, "--trace"])
        self.assertEqual(results.exit_code, 0, results.output)
        report = load_config(out, "sim")
        self.assertEqual(report["total_cycles"], 15 + 5 * 9)
        self.assertEqual(report["deviation_vs_analytical"], 0.0)
        trace = load_jsonl(self.temp("sim.trace.jsonl"))
        self.assertEqual(len(trace), 2 * 3 * 6)

        jitter_file = self.temp("jitter.json")
        save_json(
            jitter_file,
            {"overrides": [[4] * 6, [9, 9, 20, 9, 9, 9], [2] * 6]},
        )
        results = self.runner.invoke(simulate, [plan_file, "--jitter", jitter_file])
        self.assertEqual(results.exit_code, 0, results.output)
        report = json.loads(results.stdout)
        validate(report, "sim")
        self.assertGreater(report["deviation_vs_analytical"], 0)

    def test_simulate_descriptor(self):
        out = self.temp("accelerator.json")
        self.assertEqual(self.runner.invoke(export, [fixture("dnn_a.json"), "-o", out]).exit_code, 0)
        results = self.runner.invoke(simulate, [out, "--segment", "r2", "--buffer-slots", "2"])
        self.assertEqual(results.exit_code, 0, results.output)
        report = json.loads(results.stdout)
        self.assertEqual(report["plan"], "r2")
        self.assertEqual(report["buffer_slots"], 2)
        results = self.runner.invoke(simulate, [out, "--segment", "r9"])
        self.assertEqual(results.exit_code, 2)

    def test_simulate_bad_jitter(self):
        plan_file = self.temp("plan.json")
        save_json(plan_file, {"tiles": 2, "stages": [{"per_tile_cycles": 1}]})
        jitter_file = self.temp("jitter.json")
        save_json(jitter_file, {"overrides": [[1, 1, 1]]})
        results = self.runner.invoke(simulate, [plan_file, "--jitter", jitter_file])
        self.assertEqual(results.exit_code, 2)

    def test_sweep(self):
        results = self.runner.invoke(sweep, [])
        self.assertEqual(results.exit_code, 0, results.output)
        document = json.loads(results.stdout)
        counts = {
            (c["fm_bits"], c["banks"]): [p["bram18"] for p in c["points"]]
            for c in document["curves"]
        }
        self.assertEqual(
            counts,
            {
                (16, 256): [256] * 7 + [512] * 3,
                (16, 128): [256] * 7 + [384] * 3,
                (8, 256): [256] * 10,
                (8, 128): [128] * 7 + [256] * 3,
            },
        )
        points = {p["resize"]: p["bram18"] for p in document["curves"][0]["points"]}
        self.assertLessEqual(points[0.89], 0.5 * points[1.0])
        self.assertEqual(points[0.9], 256)
        self.assertEqual(points[0.94], 512)


if __name__ == "__main__":
    main()
