"""End-to-end tests of the command-line front end."""
from __future__ import annotations

import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr
from pathlib import Path
from typing import Any

from ternalg.api.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main

DATA = Path(__file__).resolve().parent / "data"


def run_cli(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def load(path: Path) -> Any:
    return json.loads(path.read_text(encoding="utf-8"))


class TestAlgebraCommands(unittest.TestCase):
    """``algebra construct | check | reduce``."""

    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def test_cyclic_heap_matches_the_golden_file(self) -> None:
        """Constructing the order-two cyclic heap reproduces the checked-in artifact."""
        out: Path = self.tmp / "c2.json"
        code, stdout, _ = run_cli("algebra", "construct", "cyclic_heap", "--param", "k=2", "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(load(out), load(DATA / "c2_heap.json"))
        report: dict[str, Any] = json.loads(stdout)
        self.assertEqual(report["verdicts"]["para_associative"]["status"], "pass")
        self.assertEqual(report["data"]["output"], str(out))

    def test_heap_table_gives_the_same_algebra(self) -> None:
        """A heap table file linearizes to the same tensor and its digest is reported."""
        out: Path = self.tmp / "heap.json"
        code, stdout, _ = run_cli("algebra", "construct", "heap", str(DATA / "c2_heap_table.json"), "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(load(out)["C"], load(DATA / "c2_heap.json")["C"])
        self.assertEqual(len(json.loads(stdout)["inputs"][0]["sha256"]), 64)

    def test_check_reports_properties_and_biunits(self) -> None:
        """A passing check records residual, tolerance, property flags and biunits."""
        code, stdout, _ = run_cli("algebra", "check", str(DATA / "c2_heap.json"))
        self.assertEqual(code, EXIT_OK)
        report: dict[str, Any] = json.loads(stdout)
        self.assertEqual(report["kind"], "report")
        self.assertEqual(report["verdicts"]["para_associative"]["residual"], 0.0)
        self.assertEqual(report["verdicts"]["para_associative"]["tolerance"], 1e-9)
        self.assertTrue(report["data"]["properties"]["commutative"]["value"])
        self.assertTrue(report["data"]["properties"]["a_associative"]["value"])
        self.assertEqual(report["data"]["biunits"], [[1.0, 0.0], [0.0, 1.0]])

    def test_antisymmetric_form_fails_with_exit_one(self) -> None:
        """The omega algebra fails at construction and at check time."""
        out: Path = self.tmp / "omega_alg.json"
        code, _, _ = run_cli("algebra", "construct", "bilinear", str(DATA / "omega.json"), "--out", str(out))
        self.assertEqual(code, EXIT_FAIL)
        code, stdout, _ = run_cli("algebra", "check", str(out))
        self.assertEqual(code, EXIT_FAIL)
        verdict = json.loads(stdout)["verdicts"]["para_associative"]
        self.assertEqual(verdict["status"], "fail")
        self.assertEqual(verdict["residual"], 2.0)

    def test_eps_flag_overrides_the_tolerance(self) -> None:
        """--eps loosens the bound enough for omega to pass."""
        out: Path = self.tmp / "omega_alg.json"
        run_cli("algebra", "construct", "bilinear", str(DATA / "omega.json"), "--out", str(out))
        code, stdout, _ = run_cli("algebra", "check", str(out), "--eps", "3")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(stdout)["verdicts"]["para_associative"]["tolerance"], 3.0)

    def test_reduce(self) -> None:
        """Reducing the C2 heap at e2 gives a commutative algebra with unit e2."""
        out: Path = self.tmp / "binary.json"
        code, stdout, _ = run_cli("algebra", "reduce", str(DATA / "c2_heap.json"), "--e=0,1", "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        data = json.loads(stdout)["data"]
        self.assertEqual(data["unit"], [0.0, 1.0])
        self.assertTrue(data["commutative"])
        self.assertEqual(load(out)["kind"], "binary_algebra")

    def test_zero_algebra_has_no_biunits(self) -> None:
        """The zero algebra passes but lists no biunits."""
        out: Path = self.tmp / "zero.json"
        self.assertEqual(run_cli("algebra", "construct", "zero", "--param", "n=2", "--out", str(out))[0], EXIT_OK)
        code, stdout, _ = run_cli("algebra", "check", str(out))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(stdout)["data"]["biunits"], [])

    def test_direct_sum_of_golden_files(self) -> None:
        """direct_sum takes two input files and digests both."""
        out: Path = self.tmp / "sum.json"
        golden = str(DATA / "c2_heap.json")
        code, stdout, _ = run_cli("algebra", "construct", "direct_sum", golden, golden, "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(load(out)["dim"], 4)
        self.assertEqual(len(json.loads(stdout)["inputs"]), 2)

    def test_text_format(self) -> None:
        """Text output leads with the overall status line."""
        code, stdout, _ = run_cli("algebra", "check", str(DATA / "c2_heap.json"), "--format", "text")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(stdout.startswith("algebra check: PASS\n"))
        self.assertIn("para_associative: pass", stdout)


class TestInputErrors(unittest.TestCase):
    """Rejected input exits with code 2 and names the problem."""

    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def test_malformed_json(self) -> None:
        """Syntax errors exit 2 with the byte offset on stderr and nothing on stdout."""
        bad = self.tmp / "bad.json"
        bad.write_text('{"dim": 2, "C": [}', encoding="utf-8")
        code, stdout, stderr = run_cli("algebra", "check", str(bad))
        self.assertEqual(code, EXIT_INPUT)
        self.assertEqual(stdout, "")
        self.assertIn("at byte 17", stderr)

    def test_wrong_shape(self) -> None:
        """A tensor of the wrong shape is rejected with exit 2."""
        bad = self.tmp / "bad.json"
        bad.write_text(json.dumps({"dim": 2, "C": [[[[1.0]]]]}), encoding="utf-8")
        code, _, stderr = run_cli("algebra", "check", str(bad))
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("shape", stderr)

    def test_missing_parameter_and_file(self) -> None:
        """Missing --param values and missing files both exit 2."""
        code, _, stderr = run_cli("algebra", "construct", "cyclic_heap", "--out", str(self.tmp / "x.json"))
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("k=", stderr)
        code, _, _ = run_cli("algebra", "check", str(self.tmp / "missing.json"))
        self.assertEqual(code, EXIT_INPUT)

    def test_unknown_kind_is_a_usage_error(self) -> None:
        """argparse rejects unknown construct kinds."""
        with redirect_stderr(io.StringIO()), self.assertRaises(SystemExit) as ctx:
            run_cli("algebra", "construct", "octonions", "--out", "x.json")
        self.assertEqual(ctx.exception.code, 2)


class TestFieldPipeline(unittest.TestCase):
    """Metric -> connection -> curve -> transport, all through artifact files."""

    @classmethod
    def setUpClass(cls) -> None:
        cls._tmp = tempfile.TemporaryDirectory()
        cls.tmp = Path(cls._tmp.name)
        cls.metric = cls.tmp / "sphere.json"
        cls.connection = cls.tmp / "lc.json"
        cls.curve = cls.tmp / "loop.json"
        chart = ["--param", "lower=0.9,-0.2", "--param", "upper=1.2,6.5", "--param", "shape=31,68"]
        assert run_cli("algebra", "construct", "metric", "--param", "preset=sphere", *chart, "--out", str(cls.metric))[0] == 0
        code, stdout, _ = run_cli("algebra", "construct", "levi_civita", str(cls.metric), "--out", str(cls.connection))
        cls.levi_civita_code, cls.levi_civita_report = code, json.loads(stdout)
        run_cli("algebra", "construct", "latitude_curve", "--param", "theta0=1.0471975511965976", "--out", str(cls.curve))

    @classmethod
    def tearDownClass(cls) -> None:
        cls._tmp.cleanup()

    def test_synthesized_connection_is_compatible(self) -> None:
        """levi_civita writes a metric-compatible connection and the loop is closed."""
        self.assertEqual(self.levi_civita_code, EXIT_OK)
        self.assertEqual(self.levi_civita_report["verdicts"]["metric_compatible"]["status"], "pass")
        self.assertEqual(load(self.connection)["kind"], "connection")
        self.assertTrue(load(self.curve)["closed"])

    def test_metric_file_checks_as_its_algebroid(self) -> None:
        """field check accepts a metric file and checks every node."""
        code, stdout, _ = run_cli("field", "check", str(self.metric))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(stdout)["data"]["nodes"], 31 * 68)

    def test_connection_check(self) -> None:
        """Levi-Civita passes both verdicts on the latitude band."""
        code, stdout, _ = run_cli("connection", "check", str(self.metric), str(self.connection), "--margin", "2")
        self.assertEqual(code, EXIT_OK)
        verdicts = json.loads(stdout)["verdicts"]
        self.assertEqual(set(verdicts), {"differential", "metric_compatible"})
        self.assertEqual(json.loads(stdout)["data"]["curvature_derivation"]["status"], "pass")
        self.assertEqual(verdicts["differential"]["tolerance"], 1e-2)
        self.assertEqual(len(verdicts["differential"]["per_axis"]), 2)

    def test_transport_around_the_latitude(self) -> None:
        """Transport around the loop passes both transport verdicts."""
        code, stdout, _ = run_cli("transport", "run", str(self.metric), str(self.connection), str(self.curve))
        self.assertEqual(code, EXIT_OK)
        report: dict[str, Any] = json.loads(stdout)
        self.assertEqual(set(report["verdicts"]), {"isomorphism", "form_preserved"})
        transport = report["data"]["transport"]
        self.assertEqual(transport["steps"], 6284)
        self.assertAlmostEqual(transport["map"][0][0], -1.0, delta=1e-3)
        self.assertEqual(len(report["inputs"]), 3)


class TestSphereConnectionCheck(unittest.TestCase):
    """Levi-Civita on the sphere from 0.1 to pi - 0.1 at h = 1e-2."""

    @classmethod
    def setUpClass(cls) -> None:
        cls._tmp = tempfile.TemporaryDirectory()
        tmp = Path(cls._tmp.name)
        cls.metric = tmp / "sphere.json"
        cls.connection = tmp / "lc.json"
        chart = ["--param", "lower=0.1,0", "--param", "upper=3.04,0.04", "--param", "shape=295,5"]
        run_cli("algebra", "construct", "metric", "--param", "preset=sphere", *chart, "--out", str(cls.metric))
        run_cli("algebra", "construct", "levi_civita", str(cls.metric), "--out", str(cls.connection))

    @classmethod
    def tearDownClass(cls) -> None:
        cls._tmp.cleanup()

    def test_differential_connection_passes_without_margin(self) -> None:
        """The curvature law is reported in data and does not decide the exit code."""
        code, stdout, _ = run_cli("connection", "check", str(self.metric), str(self.connection))
        self.assertEqual(code, EXIT_OK)
        report: dict[str, Any] = json.loads(stdout)
        self.assertEqual(set(report["verdicts"]), {"differential", "metric_compatible"})
        self.assertLess(report["verdicts"]["differential"]["residual"], 1e-10)
        curvature_law: dict[str, Any] = report["data"]["curvature_derivation"]
        self.assertEqual(curvature_law["tolerance"], 1e-2)
        self.assertGreater(curvature_law["residual"], 0.0)


class TestNonDifferentialConnection(unittest.TestCase):
    """The scaled line bundle with the zero connection fails both checks."""

    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        form = self.tmp / "form.json"
        form.write_text(json.dumps({"kind": "form", "dim": 2, "B": [[1.0, 2.0], [2.0, -1.0]]}), encoding="utf-8")
        self.field = self.tmp / "line.json"
        self.connection = self.tmp / "zero_conn.json"
        self.curve = self.tmp / "segment.json"
        chart = ["--param", "lower=0", "--param", "upper=1", "--param", "shape=5"]
        run_cli("algebra", "construct", "scaled_line", str(form), *chart, "--out", str(self.field))
        run_cli("algebra", "construct", "trivial_connection", str(self.field), "--out", str(self.connection))
        run_cli("algebra", "construct", "line_curve", "--param", "start=0.25", "--param", "end=1", "--out", str(self.curve))

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def test_connection_check_fails(self) -> None:
        """The zero connection misses the Leibniz rule by the form's norm."""
        code, stdout, _ = run_cli("connection", "check", str(self.field), str(self.connection))
        self.assertEqual(code, EXIT_FAIL)
        verdicts = json.loads(stdout)["verdicts"]
        self.assertEqual(verdicts["differential"]["status"], "fail")
        self.assertAlmostEqual(verdicts["differential"]["residual"], 2.0, places=9)
        self.assertNotIn("metric_compatible", verdicts)

    def test_transport_is_not_an_isomorphism(self) -> None:
        """Transport still runs, warns and reports the failed isomorphism."""
        with self.assertLogs("ternalg.services.transport", level="WARNING"):
            code, stdout, _ = run_cli("transport", "run", str(self.field), str(self.connection), str(self.curve))
        self.assertEqual(code, EXIT_FAIL)
        transport = json.loads(stdout)["data"]["transport"]
        self.assertAlmostEqual(transport["iso_residual"], 1.5, places=9)
        self.assertEqual(transport["map"], [[1.0, 0.0], [0.0, 1.0]])


class TestReportDiff(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def _report(self, name: str, *argv: str) -> Path:
        _, stdout, _ = run_cli(*argv)
        path = self.tmp / name
        path.write_text(stdout, encoding="utf-8")
        return path

    def test_reruns_are_identical_apart_from_timing(self) -> None:
        """Two runs of the same command differ only in timing."""
        a = self._report("a.json", "algebra", "check", str(DATA / "c2_heap.json"))
        b = self._report("b.json", "algebra", "check", str(DATA / "c2_heap.json"))
        code, stdout, _ = run_cli("report", "diff", str(a), str(b))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(stdout)["data"]["differing"], [])

    def test_different_reports(self) -> None:
        """A changed tolerance shows up as a verdicts difference."""
        a = self._report("a.json", "algebra", "check", str(DATA / "c2_heap.json"))
        b = self._report("b.json", "algebra", "check", str(DATA / "c2_heap.json"), "--eps", "1e-6")
        code, stdout, _ = run_cli("report", "diff", str(a), str(b))
        self.assertEqual(code, EXIT_FAIL)
        self.assertEqual(json.loads(stdout)["data"]["differing"], ["verdicts"])


if __name__ == "__main__":
    unittest.main()
