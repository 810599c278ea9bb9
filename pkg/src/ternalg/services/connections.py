"""Linear connections on a sampled bundle.

Christoffel synthesis from metrics, the differential-connection residual,
metric compatibility, curvature and the curvature-derivation residual. The
coordinate derivative is always the second-order stencil of ``numpy.gradient``
(central in the interior, one-sided second order at the faces).

Connection layout: ``G[..., a, alpha, beta] = Gamma^beta_{a alpha}``, i.e.
``nabla_a s_alpha = Gamma^beta_{a alpha} s_beta``.
"""
from __future__ import annotations

import logging
from typing import Optional, Protocol

import numpy as np
from numpy.typing import NDArray

from ternalg.core.errors import DimensionMismatchError, StencilError
from ternalg.domain.algebra import TernaryAlgebra, Tolerance
from ternalg.domain.fields import Chart, ConnectionField, FrameField, MetricField, ResidualReport, StructureField
from ternalg.services.fields import inverse_metric
from ternalg.services.tern_core import DEFAULT_TOLERANCE

logger = logging.getLogger(__name__)


class Sampled(Protocol):
    chart: Chart
    values: NDArray[np.float64]


def _d(values: NDArray[np.float64], chart: Chart, axis: int) -> NDArray[np.float64]:
    if not 0 <= axis < chart.base_dim:
        raise DimensionMismatchError(f"axis {axis} out of range for a {chart.base_dim}-dimensional chart")
    if chart.shape[axis] < 3:
        raise StencilError(f"axis {axis} has {chart.shape[axis]} points; the stencil needs at least 3")
    return np.gradient(values, chart.spacing[axis], axis=axis, edge_order=2)


def _grad(values: NDArray[np.float64], chart: Chart) -> NDArray[np.float64]:
    """All partials stacked right after the grid axes: ``out[..., a, <tail>] = d_a values``."""

    return np.stack([_d(values, chart, a) for a in range(chart.base_dim)], axis=chart.base_dim)


def partial_derivative(F: Sampled, axis: int) -> NDArray[np.float64]:
    """Second-order finite-difference ``d_axis`` of any sampled field's values.

    Notes
    -----
    - Exact on fields affine (indeed quadratic) along ``axis``.

    Raises
    ------
    StencilError
        If the chart has fewer than 3 points along ``axis``.
    """

    return _d(F.values, F.chart, axis)


def trivial_connection(chart: Chart, n: int) -> ConnectionField:
    """The connection with ``nabla s_alpha = 0`` for the chart's global frame."""

    return ConnectionField(chart, n, np.zeros(chart.shape + (chart.base_dim, n, n)))


def levi_civita(g: MetricField, det_threshold: Optional[float] = None) -> ConnectionField:
    """Christoffel symbols ``Gamma^c_{ab} = 1/2 g^{cd} (d_a g_bd + d_b g_ad - d_d g_ab)``.

    Parameters
    ----------
    g: MetricField
        Non-degenerate metric on the chart.
    det_threshold: float | None
        Degeneracy bound on ``|det g|``; defaults to ``Settings.det_threshold``.

    Notes
    -----
    - Output is symmetric in the two lower indices at every node, exactly.
    - With the same stencil, the result is exactly metric compatible up to round-off.

    Raises
    ------
    DegenerateMetricError
        If ``|det g|`` falls below the threshold at any node.
    """

    ginv: NDArray[np.float64] = inverse_metric(g, det_threshold)
    dg: NDArray[np.float64] = _grad(g.values, g.chart)  # [..., a, b, c] = d_a g_bc
    low: NDArray[np.float64] = 0.5 * (
        np.einsum("...abd->...dab", dg) + np.einsum("...bad->...dab", dg) - dg
    )
    gamma: NDArray[np.float64] = np.einsum("...cd,...dab->...abc", ginv, low)
    gamma = 0.5 * (gamma + np.swapaxes(gamma, -3, -2))
    logger.debug("levi-civita synthesized on %d nodes", g.chart.n_nodes)
    return ConnectionField(g.chart, g.dim, gamma)


def _require_connection(chart: Chart, n: int, G: ConnectionField, what: str) -> None:
    chart.require_same(G.chart, what)
    if G.fibre_dim != n:
        raise DimensionMismatchError(f"connection has fibre dimension {G.fibre_dim}, expected {n}")


def metric_compat_residual(
    g: MetricField,
    G: ConnectionField,
    tol: Tolerance = DEFAULT_TOLERANCE,
    margin: int = 0,
) -> ResidualReport:
    """Max-norm of ``d_a g_bc - Gamma^e_{ab} g_ec - Gamma^e_{ac} g_be`` with per-axis breakdown."""

    _require_connection(g.chart, g.dim, G, "metric and connection")
    dg: NDArray[np.float64] = _grad(g.values, g.chart)
    residual: NDArray[np.float64] = (
        dg
        - np.einsum("...abe,...ec->...abc", G.values, g.values)
        - np.einsum("...ace,...be->...abc", G.values, g.values)
    )
    return ResidualReport.from_residual(g.chart, residual, tol.eps, margin=margin, base_axis=0)


def differential_residual(
    F: StructureField,
    G: ConnectionField,
    tol: Tolerance = DEFAULT_TOLERANCE,
    margin: int = 0,
) -> ResidualReport:
    """Residual of the ternary Leibniz rule in coordinates, at every node.

    Parameters
    ----------
    F: StructureField
        Structure constants sampled on the chart.
    G: ConnectionField
        Connection on the same chart and fibre dimension.
    tol: Tolerance
        Pass bound for the report.
    margin: int
        Boundary node layers left out of the maximum.

    Returns
    -------
    ResidualReport
        Worst node, its coordinates and the per-axis maxima.

    Notes
    -----
    - ``R^l_{a abc} = d_a C^l_{abc} + C^e_{abc} G^l_{ae} - G^e_{aa} C^l_{ebc} - G^e_{ab} C^l_{aec} - G^e_{ac} C^l_{abe}``
      (stored ``[..., a, l, alpha, beta, gamma]``); the connection is differential iff it vanishes.
    """

    _require_connection(F.chart, F.fibre_dim, G, "structure field and connection")
    C: NDArray[np.float64] = F.values
    Gv: NDArray[np.float64] = G.values
    dC: NDArray[np.float64] = _grad(C, F.chart)
    lhs: NDArray[np.float64] = dC + np.einsum("...eabc,...xel->...xlabc", C, Gv)
    rhs: NDArray[np.float64] = (
        np.einsum("...xae,...lebc->...xlabc", Gv, C)
        + np.einsum("...xbe,...laec->...xlabc", Gv, C)
        + np.einsum("...xce,...labe->...xlabc", Gv, C)
    )
    report: ResidualReport = ResidualReport.from_residual(F.chart, lhs - rhs, tol.eps, margin=margin, base_axis=0)
    logger.info("differential residual %.3e at node %s", report.max_abs, report.argmax)
    return report


def curvature(G: ConnectionField) -> NDArray[np.float64]:
    """Curvature ``R[..., a, b, alpha, beta] = R^beta_{ab alpha}``.

    Notes
    -----
    - ``R^b_{xy a} = d_x G^b_{ya} - d_y G^b_{xa} + G^e_{ya} G^b_{xe} - G^e_{xa} G^b_{ye}``.
    - Assembled from two exactly antisymmetric parts, so ``R[a, b] = -R[b, a]`` bitwise.
    """

    dG: NDArray[np.float64] = _grad(G.values, G.chart)  # [..., x, y, alpha, beta] = d_x G[y]
    d_part: NDArray[np.float64] = dG - np.swapaxes(dG, -4, -3)
    quad: NDArray[np.float64] = np.einsum("...xpe,...yeq->...xypq", G.values, G.values)
    return d_part + (np.swapaxes(quad, -4, -3) - quad)


def curvature_derivation_residual(
    F: StructureField,
    G: ConnectionField,
    tol: Tolerance = DEFAULT_TOLERANCE,
    margin: int = 0,
) -> ResidualReport:
    """Residual of ``R[u, v, w] = [Ru, v, w] + [u, Rv, w] + [u, v, Rw]`` on basis triples.

    Notes
    -----
    - Meaningful only when ``G`` is (close to) a differential connection for ``F``.
    - Nested stencils lose an order at the chart faces; use ``margin >= 2`` for
      interior-only convergence checks.
    """

    _require_connection(F.chart, F.fibre_dim, G, "structure field and connection")
    R: NDArray[np.float64] = curvature(G)
    C: NDArray[np.float64] = F.values
    lhs: NDArray[np.float64] = np.einsum("...epqr,...xyel->...xylpqr", C, R)
    rhs: NDArray[np.float64] = (
        np.einsum("...xype,...leqr->...xylpqr", R, C)
        + np.einsum("...xyqe,...lper->...xylpqr", R, C)
        + np.einsum("...xyre,...lpqe->...xylpqr", R, C)
    )
    return ResidualReport.from_residual(F.chart, lhs - rhs, tol.eps, margin=margin, base_axis=0)


# -- frame-twisted trivial bundles --------------------------------------------


def twisted_trivial_bundle(A: TernaryAlgebra, Q: FrameField) -> StructureField:
    """Bundle whose fibre at ``x`` is ``A`` transported by ``Q(x)``.

    Notes
    -----
    - ``C(x) = Q . C . (Q^-1 x Q^-1 x Q^-1)`` so that ``Q(x) : A -> E_x`` is an
      algebra isomorphism at every node: a locally trivial bundle written in a
      frame that is not adapted to the trivialization.
    """

    if Q.fibre_dim != A.dim:
        raise DimensionMismatchError(f"frame dimension {Q.fibre_dim} does not match algebra dimension {A.dim}")
    Qi: NDArray[np.float64] = np.linalg.inv(Q.values)
    C: NDArray[np.float64] = np.einsum("...lm,mijk,...ia,...jb,...kc->...labc", Q.values, A.C, Qi, Qi, Qi)
    return StructureField(Q.chart, A.dim, C)


def frame_connection(Q: FrameField) -> ConnectionField:
    """Connection whose parallel sections are ``Q(x) u0``: ``Gamma_a = (-d_a Q . Q^-1)^T``.

    Notes
    -----
    - Differential for ``twisted_trivial_bundle(A, Q)`` for every ``A``; the sampled
      residual is the O(h^2) stencil error on ``d_a Q``.
    """

    Qi: NDArray[np.float64] = np.linalg.inv(Q.values)
    dQ: NDArray[np.float64] = _grad(Q.values, Q.chart)  # [..., a, beta, alpha]
    mat: NDArray[np.float64] = -np.einsum("...abm,...mc->...abc", dQ, Qi)
    return ConnectionField(Q.chart, Q.fibre_dim, np.swapaxes(mat, -1, -2))
