import contextlib, io, json, math, os, tempfile, unittest
from pathlib import Path
from unittest import mock

from gtrfading import figures
from gtrfading.__main__ import apply_config, build_parser, main
from gtrfading.errors import DomainError
from gtrfading.output import sidecar_path, validate
from gtrfading.serialize import digest, hash_bytes, hash_file


class CliCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.log = self.dir / "telemetry" / "events.jsonl"
        patcher = mock.patch.dict(os.environ, {"GTR_TELEMETRY_LOG": str(self.log), "GTR_SOURCE_TYPE": "smoke"})
        patcher.start()
        self.addCleanup(patcher.stop)
        self.addCleanup(self.tmp.cleanup)

    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def events(self):
        return [json.loads(line) for line in self.log.read_text().splitlines()]

    def csv_rows(self, text):
        lines = text.splitlines()
        header = lines[0].split(",")
        return header, [dict(zip(header, line.split(","))) for line in lines[1:]]


class StatsTests(CliCase):
    def test_csv_to_stdout(self):
        code, out, err = self.run_cli("stats", "--quantity", "aof", "--K", "0", "--delta", "0")
        self.assertEqual(code, 0)
        header, rows = self.csv_rows(out)
        self.assertEqual(header, ["x", "value", "method", "error_estimate"])
        self.assertEqual(float(rows[0]["value"]), 1.0); self.assertEqual(rows[0]["method"], "closed-form")
        self.assertTrue(out.endswith("\n")); self.assertNotIn("\r", out)
        self.assertIn("[stats] aof: 1 rows -> stdout", err)
        event = self.events()[-1]
        self.assertEqual((event["layer"], event["source"], event["eventType"], event["ref"], event["sourceType"]), ("cli", "stats", "success", "-", "smoke"))

    def test_sweep_and_floats_read_back(self):
        code, out, _ = self.run_cli("stats", "--quantity", "cdf", "--K", "20", "--delta", "1", "--phase", "vm:eta=2", "--sweep", "r_norm:0.05:1.5:6:log")
        self.assertEqual(code, 0)
        _, rows = self.csv_rows(out)
        self.assertEqual(len(rows), 6)
        values = [float(r["value"]) for r in rows]
        self.assertTrue(all(b > a for a, b in zip(values, values[1:])))
        self.assertAlmostEqual(float(rows[0]["x"]), 0.05, places=15); self.assertAlmostEqual(float(rows[-1]["x"]), 1.5, places=14)
        self.assertTrue(all(r["method"] == "quadrature" for r in rows))

    def test_json_table_with_sidecar_free_digest(self):
        out_path = self.dir / "t.json"
        code, _, err = self.run_cli("stats", "--quantity", "mean-snr", "--phase", "trunc:p=0.2", "--K", "10", "--delta", "1", "--gamma-bar", "1", "--format", "json", "--out", str(out_path))
        self.assertEqual(code, 0)
        doc = json.loads(out_path.read_text())
        validate(doc, "table")
        self.assertEqual(doc["manifest"]["output_digest"], digest({"columns": doc["columns"], "rows": doc["rows"]}))
        expected = 1.0 - (10.0 / 11.0) * math.sin(0.2 * math.pi) / (0.2 * math.pi)
        self.assertAlmostEqual(doc["rows"][0]["value"], expected, places=14)
        self.assertEqual(doc["manifest"]["parameters"]["model"]["phase"], "trunc:p=0.2,phi=0")
        self.assertIn(str(out_path), err)

    def test_csv_file_gets_manifest_sidecar(self):
        out_path = self.dir / "sub" / "pdf.csv"
        code, out, _ = self.run_cli("stats", "--quantity", "pdf", "--sweep", "K_db:0:20:3", "--out", str(out_path))
        self.assertEqual((code, out), (0, ""))
        manifest = json.loads(sidecar_path(out_path).read_text())
        validate(manifest, "manifest")
        self.assertEqual(manifest["output_digest"], hash_file(out_path))
        self.assertEqual(manifest["command"], "stats"); self.assertIsNone(manifest["seed"])
        self.assertEqual(self.events()[-1]["ref"], str(out_path))

    def test_snr_pdf_sweeps_on_r_norm(self):
        code, out, _ = self.run_cli("stats", "--quantity", "snr-pdf", "--K", "0", "--delta", "0", "--gamma-bar", "2", "--sweep", "r_norm:0.5:1:2")
        self.assertEqual(code, 0)
        _, rows = self.csv_rows(out)
        # Rayleigh: f(γ) = e^{-γ/γ̄}/γ̄ at γ = r_norm² γ̄
        self.assertAlmostEqual(float(rows[0]["value"]), math.exp(-0.25) / 2.0, places=14)


class ErrorTests(CliCase):
    def test_domain_error_exits_2(self):
        code, out, err = self.run_cli("stats", "--quantity", "pdf", "--delta", "1.5")
        self.assertEqual((code, out), (2, ""))
        self.assertIn("gtrfading: delta_range:", err)
        event = self.events()[-1]
        self.assertEqual(event["eventType"], "failure"); self.assertTrue(event["reason"].startswith("delta_range"))

    def test_exclusive_flags(self):
        code, _, err = self.run_cli("sep", "--K", "3", "--K-db", "5")
        self.assertEqual(code, 2); self.assertIn("flag_conflict", err)
        code, _, err = self.run_cli("capacity", "--loss", "--asymptote", "gtr")
        self.assertEqual(code, 2); self.assertIn("flag_conflict", err)

    def test_sweep_variable_must_apply(self):
        code, _, err = self.run_cli("stats", "--quantity", "mgf", "--sweep", "r_norm:0.1:1:3")
        self.assertEqual(code, 2); self.assertIn("sweep_variable", err)
        code, _, err = self.run_cli("sep", "--sweep", "snr:0:1:2")
        self.assertEqual(code, 2); self.assertIn("sweep_syntax", err)

    def test_nonconvergence_exits_3(self):
        code, out, err = self.run_cli("stats", "--quantity", "pdf", "--phase", "trunc:p=0.5", "--rel-tol", "1e-300", "--abs-tol", "0")
        self.assertEqual((code, out), (3, ""))
        self.assertIn("quadrature_convergence", err)
        self.assertEqual(self.events()[-1]["eventType"], "nonconverged")

    def test_usage_error_is_recorded(self):
        with self.assertRaises(SystemExit) as ctx:
            self.run_cli("stats", "--quantity", "nope")
        self.assertEqual(ctx.exception.code, 2)
        event = self.events()[-1]
        self.assertEqual((event["eventType"], event["reason"], event["exit_code"]), ("failure", "usage", 2))

    def test_help_is_not_a_failure(self):
        with self.assertRaises(SystemExit) as ctx:
            self.run_cli("sep", "--help")
        self.assertEqual(ctx.exception.code, 0)
        self.assertFalse(self.log.exists())


class ConfigTests(CliCase):
    def write_config(self, text):
        path = self.dir / "run.conf"
        path.write_text(text)
        return str(path)

    def test_config_fills_flags_and_cli_wins(self):
        path = self.write_config("# aof run\n--K = 5\ndelta = 0.3\nquantity = aof\nformat = json\n")
        code, out, _ = self.run_cli("stats", "--config", path)
        self.assertEqual(code, 0)
        self.assertAlmostEqual(json.loads(out)["rows"][0]["value"], (2 + 20 + 25 * 0.09) / (2 * 36), places=15)
        code, out, _ = self.run_cli("stats", "--config", path, "--delta", "0.9")
        self.assertAlmostEqual(json.loads(out)["rows"][0]["value"], (2 + 20 + 25 * 0.81) / (2 * 36), places=15)

    def test_exclusive_partner_on_cli_drops_config_entry(self):
        path = self.write_config("K-db = 10\nloss = yes\n")
        _, subparsers = build_parser()
        argv = apply_config(["capacity", "--config", path, "--K", "3"], subparsers)
        self.assertEqual(argv, ["capacity", "--loss", "--config", path, "--K", "3"])
        code, _, _ = self.run_cli("capacity", "--config", path, "--K", "3", "--delta", "0.5")
        self.assertEqual(code, 0)

    def test_bad_config(self):
        code, _, err = self.run_cli("stats", "--config", self.write_config("colour = red\n"), "--quantity", "aof")
        self.assertEqual(code, 2); self.assertIn("config_key", err)
        code, _, err = self.run_cli("stats", "--config", self.write_config("just words\n"), "--quantity", "aof")
        self.assertEqual(code, 2); self.assertIn("config_syntax", err)
        code, _, err = self.run_cli("stats", "--config", str(self.dir / "missing.conf"), "--quantity", "aof")
        self.assertEqual(code, 2); self.assertIn("config_file", err)


class PerformanceCommandTests(CliCase):
    def test_sep_rayleigh_bpsk(self):
        code, out, _ = self.run_cli("sep", "--modulation", "bpsk", "--K", "0", "--delta", "0", "--gamma-bar", "10")
        self.assertEqual(code, 0)
        _, rows = self.csv_rows(out)
        self.assertAlmostEqual(float(rows[0]["x"]), 10.0, places=12)
        self.assertAlmostEqual(float(rows[0]["value"]), 0.5 * (1 - math.sqrt(10 / 11)), places=10)

    def test_capacity_loss_table(self):
        code, out, _ = self.run_cli("capacity", "--loss", "--K-db", "40", "--delta", "1", "--format", "json")
        self.assertEqual(code, 0)
        doc = json.loads(out)
        self.assertEqual(doc["columns"], ["x", "value", "method", "error_estimate", "approx", "limit"])
        row = doc["rows"][0]
        self.assertAlmostEqual(row["x"], 40.0, places=12)
        self.assertAlmostEqual(row["value"], 0.9885, delta=1e-4); self.assertEqual(row["limit"], 1.0)
        self.assertAlmostEqual(row["approx"], row["value"], delta=1e-4)

    def test_capacity_asymptote_column(self):
        code, out, _ = self.run_cli("capacity", "--K", "10", "--delta", "0.5", "--asymptote", "gtr", "--sweep", "snr_db:30:40:2")
        self.assertEqual(code, 0)
        header, rows = self.csv_rows(out)
        self.assertEqual(header[-1], "asymptote")
        self.assertAlmostEqual(float(rows[-1]["value"]), float(rows[-1]["asymptote"]), delta=0.02)
        code, _, err = self.run_cli("capacity", "--asymptote", "gtr", "--branches", "2")
        self.assertEqual(code, 2); self.assertIn("branch_count", err)


class MonteCarloCommandTests(CliCase):
    def test_report_is_reproducible(self):
        docs = []
        for name in ("a.json", "b.json"):
            path = self.dir / name
            code, _, _ = self.run_cli("mc", "sep", "--modulation", "bpsk", "--K", "5", "--delta", "0.9", "--samples", "20000", "--seed", "7", "--workers", "2", "--out", str(path))
            self.assertEqual(code, 0)
            docs.append(json.loads(path.read_text()))
        for doc in docs:
            validate(doc, "mc-report")
        self.assertEqual(docs[0]["digest"], docs[1]["digest"]); self.assertEqual(docs[0]["result"], docs[1]["result"])
        self.assertEqual(docs[0]["manifest"]["seed"], 7); self.assertEqual(docs[0]["result"]["workers"], 2)
        self.assertEqual(docs[0]["digest"], digest({"kind": "sep", "result": docs[0]["result"]}))
        self.assertEqual(self.events()[-1]["layer"], "mcsim")

    def test_envelope_report_and_seed_environment(self):
        with mock.patch.dict(os.environ, {"GTR_SEED": "99"}):
            code, out, _ = self.run_cli("mc", "envelope", "--K", "0", "--delta", "0", "--gamma-bar", "1", "--samples", "5000")
        self.assertEqual(code, 0)
        doc = json.loads(out)
        result = doc["result"]
        self.assertEqual(doc["manifest"]["seed"], 99); self.assertEqual(result["quantity"], "mean_power")
        self.assertAlmostEqual(result["analytic"], 1.0, places=15)
        self.assertLess(result["ks_distance"], 2.0 * result["ks_critical"])
        self.assertLess(abs(result["z_score"]), 5.0)

    def test_bad_seed(self):
        code, _, err = self.run_cli("mc", "capacity", "--samples", "10", "--seed", "-4")
        self.assertEqual(code, 2); self.assertIn("seed_range", err)


class FigureCommandTests(CliCase):
    def test_figure_files(self):
        out_dir = self.dir / "fig"
        code, _, err = self.run_cli("figure", "capacity-loss", "--out-dir", str(out_dir))
        self.assertEqual(code, 0)
        csv_path, gp_path, manifest_path = (out_dir / f"capacity-loss{s}" for s in (".csv", ".gp", ".manifest.json"))
        manifest = json.loads(manifest_path.read_text())
        validate(manifest, "manifest")
        self.assertEqual(manifest["output_digest"], hash_bytes(csv_path.read_bytes()))
        self.assertIn("plot for [i=2:13] 'capacity-loss.csv'", gp_path.read_text())
        self.assertEqual(csv_path.read_text().splitlines()[0].split(",")[0], "K_db")
        self.assertEqual(self.events()[-1]["layer"], "figures")
        self.assertIn(str(csv_path), err)

    def test_numbered_ids(self):
        out_dir = self.dir / "fig6"
        code, _, err = self.run_cli("figure", "6", "--out-dir", str(out_dir))
        self.assertEqual(code, 0)
        manifest = json.loads((out_dir / "capacity-low-snr.manifest.json").read_text())
        self.assertEqual(manifest["command"], "figure 6"); self.assertEqual(manifest["parameters"]["name"], "capacity-low-snr")
        self.assertIn("[figure] capacity-low-snr:", err)
        with self.assertRaises(SystemExit) as ctx:
            self.run_cli("figure", "2", "--out-dir", str(out_dir))
        self.assertEqual(ctx.exception.code, 2)
        with self.assertRaises(DomainError) as dctx:
            figures.build_figure("2")
        self.assertEqual(dctx.exception.invariant, "figure_name")
        self.assertEqual(set(figures.FIGURE_ALIASES.values()), set(figures.FIGURES))

    def test_cdf_figures_carry_reference_curves(self):
        opts = figures.FigureOptions(k_infinity=100.0)
        for alias, name, first in (("1a", "truncated-cdf", "p=1"), ("1", "vonmises-cdf", "eta=0")):
            fig = figures.build_figure(alias, opts)
            self.assertEqual(fig.name, name)
            self.assertEqual(fig.columns[:5], ["r_norm", "rayleigh", "rician", "two-ray", first])
            for row in fig.rows:
                self.assertAlmostEqual(row["two-ray"], row[first], delta=1e-10)
            deep = fig.rows[0]
            self.assertEqual(deep["r_norm"], 0.01)
            self.assertLess(deep["rician"], deep["rayleigh"]); self.assertLess(deep["rayleigh"], deep["two-ray"])


if __name__ == "__main__":
    unittest.main()
