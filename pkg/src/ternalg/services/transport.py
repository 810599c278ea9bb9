"""Parallel transport along sampled curves.

Integrates ``nabla_{c'} u = 0`` with fixed-step classical RK4. The connection is
read along the curve by multilinear interpolation on the chart grid; the curve
position is piecewise-linear in its samples and its velocity comes from finite
differences of the samples (central inside, one-sided at the ends).
"""
from __future__ import annotations

import logging
import math
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ternalg.core.config import Settings, get_settings
from ternalg.core.errors import ChartMismatchError, CurveError, DimensionMismatchError, SingularTransportError, StencilError
from ternalg.domain.algebra import FibreVector, LinearMap, TernaryAlgebra, Tolerance, as_vector
from ternalg.domain.fields import Chart, ConnectionField, Curve, MetricField, StructureField, TransportResult
from ternalg.services.connections import differential_residual
from ternalg.services.fields import fibre_algebra_at, grid_interpolator
from ternalg.services.tern_core import hom_residual

logger = logging.getLogger(__name__)

# relative slack on dt against sample spacing; absolute tolerance where joined curves meet
_SPACING_SLACK: float = 1e-12
_JOIN_ATOL: float = 1e-9

MatrixFn = Callable[[float], NDArray[np.float64]]


# -- curves -------------------------------------------------------------------


def line_curve(
    start: ArrayLike,
    end: ArrayLike,
    n_samples: int = 33,
    t0: float = 0.0,
    t1: float = 1.0,
) -> Curve:
    """Straight segment from ``start`` to ``end`` with constant velocity in ``t``."""

    a: NDArray[np.float64] = np.atleast_1d(np.asarray(start, dtype=np.float64))
    b: NDArray[np.float64] = as_vector(end, a.shape[0], "end")
    if n_samples < 2:
        raise CurveError("a curve needs at least 2 samples")
    s: NDArray[np.float64] = np.linspace(0.0, 1.0, n_samples)
    t: NDArray[np.float64] = t0 + (t1 - t0) * s
    points: NDArray[np.float64] = a[None, :] + s[:, None] * (b - a)[None, :]
    return Curve(np.column_stack([t, points]), closed=False)


def latitude_curve(
    theta0: float,
    n_samples: int = 65,
    phi0: float = 0.0,
    phi1: float = 2.0 * math.pi,
) -> Curve:
    """Latitude ``theta = theta0`` in ``(theta, phi)`` coordinates, parametrized by ``phi``.

    Notes
    -----
    - ``phi`` is unwrapped: a full loop runs from ``phi0`` to ``phi0 + 2 pi`` and is
      flagged closed, so the chart must cover that whole range.
    """

    if n_samples < 2:
        raise CurveError("a curve needs at least 2 samples")
    phi: NDArray[np.float64] = np.linspace(phi0, phi1, n_samples)
    closed: bool = math.isclose(phi1 - phi0, 2.0 * math.pi, rel_tol=0.0, abs_tol=1e-12)
    return Curve(np.column_stack([phi, np.full_like(phi, theta0), phi]), closed=closed)


def reverse_curve(c: Curve) -> Curve:
    """Same trace run backwards over the same parameter interval."""

    t: NDArray[np.float64] = c.params
    samples: NDArray[np.float64] = np.column_stack([(t[0] + t[-1]) - t[::-1], c.points[::-1]])
    return Curve(samples, closed=c.closed)


def concatenate_curves(c1: Curve, c2: Curve) -> Curve:
    """``c1`` followed by ``c2``; ``c2``'s parameters are shifted to continue ``c1``'s.

    Raises
    ------
    CurveError
        If ``c2`` does not start where ``c1`` ends.
    """

    if c1.base_dim != c2.base_dim:
        raise DimensionMismatchError("curves live in charts of different dimension")
    if not np.allclose(c1.end, c2.start, rtol=0.0, atol=_JOIN_ATOL):
        raise CurveError(f"curves do not join: {tuple(c1.end)} != {tuple(c2.start)}")
    shifted: NDArray[np.float64] = c2.samples[1:].copy()
    shifted[:, 0] += c1.params[-1] - c2.params[0]
    return Curve(np.vstack([c1.samples, shifted]), closed=False)


# -- integration ----------------------------------------------------------------


def _rk4(rhs: MatrixFn, y0: NDArray[np.float64], t0: float, h: float, steps: int) -> NDArray[np.float64]:
    """Classical RK4 for the linear system ``y' = A(t) y`` (``y`` a vector or a matrix of columns)."""

    y: NDArray[np.float64] = y0.copy()
    t: float = t0
    for j in range(1, steps + 1):
        k1 = rhs(t) @ y
        a_mid = rhs(t + h / 2)
        k2 = a_mid @ (y + 0.5 * h * k1)
        k3 = a_mid @ (y + 0.5 * h * k2)
        k4 = rhs(t + h) @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + j * h
    return y


def _validate_curve(chart: Chart, c: Curve, dt: float) -> None:
    if dt <= 0.0:
        raise CurveError("dt must be > 0")
    if c.base_dim != chart.base_dim:
        raise DimensionMismatchError(f"curve has {c.base_dim} coordinates, chart has {chart.base_dim}")
    for k, x in enumerate(c.points):
        if not chart.contains(x):
            raise CurveError(f"curve sample {k} at {tuple(float(v) for v in x)} leaves the chart")
    min_spacing: float = float(np.diff(c.params).min())
    if dt > min_spacing * (1.0 + _SPACING_SLACK):
        raise CurveError(f"dt={dt:g} exceeds the curve sample spacing {min_spacing:g}")


def _system(G: ConnectionField, c: Curve) -> MatrixFn:
    """``A(t)[beta, alpha] = -xdot^a(t) Gamma^beta_{a alpha}(x(t))``."""

    gamma_at = grid_interpolator(G.chart, G.values)
    t_samples: NDArray[np.float64] = c.params
    x_samples: NDArray[np.float64] = c.points
    v_samples: NDArray[np.float64] = np.gradient(x_samples, t_samples, axis=0, edge_order=1)
    lower: NDArray[np.float64] = np.asarray(G.chart.origin)
    upper: NDArray[np.float64] = np.asarray(G.chart.upper)
    d: int = c.base_dim

    def rhs(t: float) -> NDArray[np.float64]:
        x = np.array([np.interp(t, t_samples, x_samples[:, a]) for a in range(d)])
        v = np.array([np.interp(t, t_samples, v_samples[:, a]) for a in range(d)])
        gamma = gamma_at(np.clip(x, lower, upper)[None, :])[0]
        return -np.einsum("a,aib->bi", v, gamma)

    return rhs


def _steps(c: Curve, dt: float) -> tuple[float, int]:
    span: float = float(c.params[-1] - c.params[0])
    steps: int = max(1, math.ceil(span / dt - _SPACING_SLACK))
    return span / steps, steps


def _integrate(G: ConnectionField, c: Curve, y0: NDArray[np.float64], dt: float) -> tuple[NDArray[np.float64], float, int]:
    _validate_curve(G.chart, c, dt)
    h, steps = _steps(c, dt)
    logger.debug("transport: %d RK4 steps of %.3e over %d samples", steps, h, c.samples.shape[0])
    return _rk4(_system(G, c), y0, float(c.params[0]), h, steps), h, steps


def transport_vector(G: ConnectionField, c: Curve, v0: ArrayLike, dt: Optional[float] = None) -> FibreVector:
    """Parallel-transport ``v0`` from the start of ``c`` to its end.

    Raises
    ------
    CurveError
        If the curve leaves the chart or ``dt`` exceeds its sample spacing.
    """

    step: float = get_settings().dt if dt is None else dt
    u0: FibreVector = as_vector(v0, G.fibre_dim, "v0")
    u, _, _ = _integrate(G, c, u0, step)
    return u


def _transport(G: ConnectionField, c: Curve, dt: float, settings: Settings) -> tuple[LinearMap, float, int]:
    Y, h, steps = _integrate(G, c, np.eye(G.fibre_dim), dt)
    det: float = float(np.linalg.det(Y))
    if abs(det) < settings.transport_det_threshold:
        raise SingularTransportError(f"transport map is singular (det={det:.3e})")
    return LinearMap(Y), h, steps


def transport_map(G: ConnectionField, c: Curve, dt: Optional[float] = None, settings: Optional[Settings] = None) -> LinearMap:
    """Transport operator ``Phi`` from the start fibre to the end fibre; column ``j`` transports ``s_j``.

    Returns
    -------
    LinearMap
        ``n x n`` matrix solving ``dPhi/dt = -xdot^a Gamma_a Phi`` with ``Phi(t0) = I``.

    Raises
    ------
    SingularTransportError
        If ``|det Phi|`` falls below ``transport_det_threshold``.
    """

    settings = settings or get_settings()
    phi, _, _ = _transport(G, c, settings.dt if dt is None else dt, settings)
    return phi


def holonomy(G: ConnectionField, c: Curve, dt: Optional[float] = None, settings: Optional[Settings] = None) -> LinearMap:
    """Transport around a closed curve, an endomorphism of the start fibre."""

    if not c.closed:
        raise CurveError("holonomy needs a closed curve")
    return transport_map(G, c, dt, settings)


def form_preservation_residual(g: MetricField, c: Curve, phi: LinearMap) -> float:
    """Max-norm of ``Phi^T g(end) Phi - g(start)``; zero when transport is an isometry."""

    if phi.rows != g.dim or phi.cols != g.dim:
        raise DimensionMismatchError(f"map is {phi.rows}x{phi.cols}, metric is {g.dim}x{g.dim}")
    g_at = grid_interpolator(g.chart, g.values)
    lower: NDArray[np.float64] = np.asarray(g.chart.origin)
    upper: NDArray[np.float64] = np.asarray(g.chart.upper)
    g_start: NDArray[np.float64] = g_at(np.clip(c.start, lower, upper)[None, :])[0]
    g_end: NDArray[np.float64] = g_start if c.closed else g_at(np.clip(c.end, lower, upper)[None, :])[0]
    P: NDArray[np.float64] = phi.entries
    return float(np.abs(P.T @ g_end @ P - g_start).max())


def transport_iso_residual(
    F: StructureField,
    G: ConnectionField,
    c: Curve,
    dt: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> TransportResult:
    """Transport along ``c`` and measure how far ``Phi`` is from an algebra isomorphism.

    Parameters
    ----------
    F: StructureField
        Algebra bundle whose fibres are compared.
    G: ConnectionField
        Connection on the same chart.
    c: Curve
        Curve inside the chart.
    dt: float | None
        Step bound; defaults to ``Settings.dt``.
    settings: Settings | None
        Supplies ``dt``, ``field_eps`` and the singularity threshold.

    Returns
    -------
    TransportResult
        The map with its homomorphism residual between the end fibres and the step used.

    Notes
    -----
    - Runs for any connection; a differential residual above ``field_eps`` is logged
      as a warning and recorded in the result.
    - For closed curves the end fibre is the start fibre.
    """

    settings = settings or get_settings()
    if not F.chart.matches(G.chart):
        raise ChartMismatchError("structure field and connection are sampled on different charts")
    if F.fibre_dim != G.fibre_dim:
        raise DimensionMismatchError(f"connection has fibre dimension {G.fibre_dim}, expected {F.fibre_dim}")

    differential_max: Optional[float] = None
    try:
        differential_max = differential_residual(F, G, Tolerance(settings.field_eps)).max_abs
    except StencilError as exc:
        logger.debug("differential residual skipped: %s", exc)
    if differential_max is not None and differential_max > settings.field_eps:
        logger.warning(
            "transporting over a connection with differential residual %.3e > %.1e",
            differential_max,
            settings.field_eps,
            extra={"residual": differential_max, "tolerance": settings.field_eps},
        )

    phi, h, steps = _transport(G, c, settings.dt if dt is None else dt, settings)
    start_algebra: TernaryAlgebra = fibre_algebra_at(F, c.start)
    end_algebra: TernaryAlgebra = start_algebra if c.closed else fibre_algebra_at(F, c.end)
    residual: float = hom_residual(start_algebra, end_algebra, phi)
    logger.info("transport iso residual %.3e after %d steps", residual, steps, extra={"step_size": h})
    return TransportResult(
        map=phi,
        step_size=h,
        steps=steps,
        iso_residual=residual,
        start=tuple(float(x) for x in c.start),
        end=tuple(float(x) for x in c.end),
        differential_max=differential_max,
    )
