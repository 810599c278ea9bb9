"""Tests for curves and parallel transport."""
from __future__ import annotations

import math
import unittest

import numpy as np

from ternalg.core.config import Settings
from ternalg.core.errors import CurveError, SingularTransportError
from ternalg.domain.algebra import BilinearForm, LinearMap
from ternalg.domain.fields import Chart, Curve, TransportResult
from ternalg.services.connections import frame_connection, levi_civita, trivial_connection, twisted_trivial_bundle
from ternalg.services.constructors import cyclic_heap_table, heap_algebra
from ternalg.services.fields import constant_field, metric_algebroid, round_sphere_metric, scaled_line_algebroid
from ternalg.services.transport import (
    concatenate_curves,
    form_preservation_residual,
    holonomy,
    latitude_curve,
    line_curve,
    reverse_curve,
    transport_iso_residual,
    transport_map,
    transport_vector,
)

from tests.test_connections import twisting_frame

THETA0 = math.pi / 3


def latitude_chart() -> Chart:
    h = 2.5e-3
    return Chart(2, (THETA0 - 10 * h, -0.2), (h, 0.1), (21, 67))


class TestCurves(unittest.TestCase):
    def test_line_curve(self) -> None:
        """Samples are evenly spaced in t and in space."""
        c: Curve = line_curve([0.0, 1.0], [1.0, 3.0], n_samples=5, t0=1.0, t1=2.0)
        np.testing.assert_allclose(c.params, [1.0, 1.25, 1.5, 1.75, 2.0])
        np.testing.assert_allclose(c.points[2], [0.5, 2.0])
        self.assertFalse(c.closed)

    def test_latitude_curve_is_closed_only_for_a_full_turn(self) -> None:
        """Only a full turn is flagged closed."""
        loop: Curve = latitude_curve(THETA0)
        self.assertTrue(loop.closed)
        np.testing.assert_allclose(loop.end - loop.start, [0.0, 2 * math.pi])
        self.assertFalse(latitude_curve(THETA0, phi1=1.0).closed)

    def test_reverse_keeps_the_parameter_interval(self) -> None:
        """Reversal runs the points backwards over the same interval."""
        c: Curve = line_curve([0.0], [2.0], n_samples=3, t0=1.0, t1=3.0)
        r = reverse_curve(c)
        np.testing.assert_allclose(r.params, c.params)
        np.testing.assert_allclose(r.points[:, 0], [2.0, 1.0, 0.0])

    def test_concatenation(self) -> None:
        """Concatenation joins parameters and points; a gap is rejected."""
        c: Curve = concatenate_curves(line_curve([0.0], [1.0], 3), line_curve([1.0], [3.0], 3))
        np.testing.assert_allclose(c.params, [0.0, 0.5, 1.0, 1.5, 2.0])
        np.testing.assert_allclose(c.points[:, 0], [0.0, 0.5, 1.0, 2.0, 3.0])
        with self.assertRaises(CurveError):
            concatenate_curves(line_curve([0.0], [1.0], 3), line_curve([1.5], [3.0], 3))

    def test_parameters_must_increase(self) -> None:
        """Curves need two or more samples with increasing parameters."""
        with self.assertRaises(CurveError):
            Curve(np.array([[0.0, 0.0], [0.0, 1.0]]))
        with self.assertRaises(CurveError):
            Curve(np.array([[0.0, 0.0]]))


class TestLatitudeHolonomy(unittest.TestCase):
    """Transport around a latitude of the unit sphere rotates by ``2 pi cos(theta0)``."""

    @classmethod
    def setUpClass(cls) -> None:
        cls.chart = latitude_chart()
        cls.g = round_sphere_metric(cls.chart)
        cls.G = levi_civita(cls.g)

    def test_holonomy_at_sixty_degrees_is_a_half_turn(self) -> None:
        """The 60 degree latitude gives a half turn and preserves g."""
        loop: Curve = latitude_curve(THETA0, n_samples=65)
        phi: LinearMap = holonomy(self.G, loop, dt=1e-3)
        E = np.diag([1.0, math.sin(THETA0)])
        np.testing.assert_allclose(E @ phi.entries @ np.linalg.inv(E), -np.eye(2), atol=1e-4)
        self.assertLessEqual(form_preservation_residual(self.g, loop, phi), 1e-6)

    def test_isomorphism_of_the_tangent_algebroid(self) -> None:
        """Transport maps the tangent algebroid fibre to itself."""
        result: TransportResult = transport_iso_residual(metric_algebroid(self.g), self.G, latitude_curve(THETA0), dt=1e-3)
        self.assertLessEqual(result.iso_residual, 1e-5)
        self.assertEqual(result.steps, 6284)
        self.assertLess(result.differential_max, 1e-2)

    def test_fourth_order_convergence(self) -> None:
        """Halving the step cuts the RK4 error by at least eight."""
        loop: Curve = latitude_curve(THETA0, n_samples=33)
        reference = transport_map(self.G, loop, dt=1e-3).entries
        errors = [np.abs(transport_map(self.G, loop, dt=dt).entries - reference).max() for dt in (0.1, 0.05)]
        self.assertGreaterEqual(errors[0] / errors[1], 8.0)

    def test_composition_and_reversal(self) -> None:
        """Transport along c1 then c2 is the composite map; the reversed curve inverts it."""
        c1: Curve = latitude_curve(THETA0, 33, 0.0, 1.0)
        c2: Curve = latitude_curve(THETA0, 33, 1.0, 2.5)
        phi1: LinearMap = transport_map(self.G, c1, dt=1e-3)
        phi2: LinearMap = transport_map(self.G, c2, dt=1e-3)
        phi: LinearMap = transport_map(self.G, concatenate_curves(c1, c2), dt=1e-3)
        np.testing.assert_allclose(phi.entries, phi2.compose(phi1).entries, atol=1e-9)
        back: LinearMap = transport_map(self.G, reverse_curve(c1), dt=1e-3)
        np.testing.assert_allclose(back.compose(phi1).entries, np.eye(2), atol=1e-9)

    def test_vector_transport_matches_the_map(self) -> None:
        """Transporting one vector agrees with applying the transport map to it."""
        c: Curve = latitude_curve(THETA0, 33, 0.0, 1.0)
        v = transport_vector(self.G, c, [0.0, 1.0], dt=1e-3)
        np.testing.assert_allclose(v, transport_map(self.G, c, dt=1e-3)([0.0, 1.0]), atol=1e-14)

    def test_open_curves_have_no_holonomy(self) -> None:
        """holonomy needs a closed curve."""
        with self.assertRaises(CurveError):
            holonomy(self.G, latitude_curve(THETA0, phi1=1.0))

    def test_curve_checks(self) -> None:
        """Curves leaving the chart or coarser than their steps are rejected."""
        with self.assertRaises(CurveError):
            transport_map(self.G, latitude_curve(THETA0 + 0.1, 33), dt=1e-3)
        with self.assertRaises(CurveError):
            transport_map(self.G, latitude_curve(THETA0, 33), dt=0.5)

    def test_singular_threshold(self) -> None:
        """A transport map below the determinant threshold raises."""
        with self.assertRaises(SingularTransportError):
            transport_map(self.G, latitude_curve(THETA0, 33, 0.0, 1.0), dt=1e-2, settings=Settings(transport_det_threshold=10.0))


class TestTransportOnBundles(unittest.TestCase):
    """Transport over a twisted trivial bundle and over a non-differential connection."""

    def test_frame_connection_transports_by_the_frame(self) -> None:
        """Transport along the twisted line is Q(1) Q(0)^-1."""
        chart: Chart = Chart.from_bounds([0.0], [1.0], [101])
        Q = twisting_frame(chart)
        F = twisted_trivial_bundle(heap_algebra(cyclic_heap_table(2)), Q)
        result: TransportResult = transport_iso_residual(F, frame_connection(Q), line_curve([0.0], [1.0], n_samples=101), dt=1e-3)
        np.testing.assert_allclose(result.map.entries, Q.values[-1] @ np.linalg.inv(Q.values[0]), atol=1e-3)
        self.assertLess(result.iso_residual, 1e-2)
        self.assertEqual(result.start, (0.0,))
        self.assertEqual(result.end, (1.0,))

    def test_trivial_bundle_with_zero_connection(self) -> None:
        """A constant algebra with the zero connection transports by the identity along any curve."""
        A = heap_algebra(cyclic_heap_table(2))
        square: Chart = Chart.from_bounds([0.0, 0.0], [1.0, 1.0], [5, 5])
        band: Chart = Chart(2, (0.9, -0.2), (0.1, 0.1), (5, 67))
        curves: dict[str, tuple[Chart, Curve]] = {
            "line": (square, line_curve([0.1, 0.2], [0.9, 0.7])),
            "latitude": (band, latitude_curve(THETA0)),
        }
        for name, (chart, curve) in curves.items():
            with self.subTest(curve=name):
                result = transport_iso_residual(constant_field(chart, A), trivial_connection(chart, 2), curve, dt=1e-2)
                np.testing.assert_array_equal(result.map.entries, np.eye(2))
                self.assertLessEqual(result.iso_residual, 1e-10)
                self.assertEqual(result.differential_max, 0.0)

    def test_non_differential_connection_is_flagged(self) -> None:
        """A non-differential connection warns and reports the failed isomorphism."""
        chart: Chart = Chart(1, (0.0,), (0.25,), (5,))
        F = scaled_line_algebroid(BilinearForm(2, np.array([[1.0, 2.0], [2.0, -1.0]])), chart)
        with self.assertLogs("ternalg.services.transport", level="WARNING"):
            result = transport_iso_residual(F, trivial_connection(chart, 2), line_curve([0.25], [1.0]), dt=1e-3)
        np.testing.assert_array_equal(result.map.entries, np.eye(2))
        self.assertAlmostEqual(result.iso_residual, 1.5, places=12)
        self.assertAlmostEqual(result.differential_max, 2.0, places=9)


if __name__ == "__main__":
    unittest.main()
