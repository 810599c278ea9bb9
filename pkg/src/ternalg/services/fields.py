"""Algebroid-level structures on a sampled single-chart base.

Builds structure-function fields from metrics, bilinear forms and constant
algebras, extracts fibre algebras, and runs pointwise checks. Fields are
immutable after construction, so node-partitioned checks can share them
read-only across worker threads.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import RegularGridInterpolator

from ternalg.core.config import Settings, get_settings, resolve_workers
from ternalg.core.errors import DegenerateMetricError, DimensionMismatchError, InvalidInputError
from ternalg.domain.algebra import BilinearForm, FibreVector, TernaryAlgebra, Tolerance, as_vector
from ternalg.domain.fields import (
    BinaryField,
    Chart,
    MetricField,
    ResidualReport,
    SectionField,
    StructureField,
)
from ternalg.services.constructors import bilinear_algebra
from ternalg.services.tern_core import DEFAULT_TOLERANCE, para_defect_tensor

logger = logging.getLogger(__name__)

MetricFn = Callable[[NDArray[np.float64]], NDArray[np.float64]]


# -- metrics ------------------------------------------------------------------


def sample_metric(chart: Chart, fn: MetricFn) -> MetricField:
    """Sample ``fn`` (points ``[..., d]`` -> matrices ``[..., d, d]``) on every node.

    Notes
    -----
    - The result is symmetrized as ``(g + g^T) / 2``, which is exactly symmetric.
    """

    g: NDArray[np.float64] = np.asarray(fn(chart.points()), dtype=np.float64)
    return MetricField(chart, 0.5 * (g + np.swapaxes(g, -1, -2)))


def _diag_metric(chart: Chart, diag: Sequence[NDArray[np.float64]]) -> MetricField:
    d: int = chart.base_dim
    g: NDArray[np.float64] = np.zeros(chart.shape + (d, d))
    for a, entry in enumerate(diag):
        g[..., a, a] = entry
    return MetricField(chart, g)


def flat_metric(chart: Chart) -> MetricField:
    """Euclidean metric ``delta_ab`` on any chart."""

    return _diag_metric(chart, [np.ones(chart.shape)] * chart.base_dim)


def _sphere_metric_at(points: NDArray[np.float64]) -> NDArray[np.float64]:
    theta: NDArray[np.float64] = points[..., 0]
    g: NDArray[np.float64] = np.zeros(points.shape[:-1] + (2, 2))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = np.sin(theta) ** 2
    return g


def round_sphere_metric(chart: Chart) -> MetricField:
    """Unit-sphere metric ``diag(1, sin^2 theta)`` in coordinates ``(theta, phi)``."""

    if chart.base_dim != 2:
        raise DimensionMismatchError("round sphere metric needs a 2-dimensional chart")
    return sample_metric(chart, _sphere_metric_at)


def carroll_metric(chart: Chart) -> MetricField:
    """Degenerate metric ``diag(0, 1, ..., 1)``: the first axis is null."""

    d: int = chart.base_dim
    return _diag_metric(chart, [np.zeros(chart.shape)] + [np.ones(chart.shape)] * (d - 1))


def signature_change_metric(chart: Chart) -> MetricField:
    """Metric ``diag(x, 1, ..., 1)`` whose signature flips across ``x = 0``."""

    d: int = chart.base_dim
    x: NDArray[np.float64] = chart.points()[..., 0]
    return _diag_metric(chart, [x] + [np.ones(chart.shape)] * (d - 1))


def lorentz_metric(chart: Chart) -> MetricField:
    """Constant Minkowski metric ``diag(-1, 1, ..., 1)``."""

    d: int = chart.base_dim
    return _diag_metric(chart, [-np.ones(chart.shape)] + [np.ones(chart.shape)] * (d - 1))


METRIC_PRESETS: dict[str, Callable[[Chart], MetricField]] = {
    "flat": flat_metric,
    "sphere": round_sphere_metric,
    "carroll": carroll_metric,
    "signature_change": signature_change_metric,
    "lorentz": lorentz_metric,
}


def inverse_metric(g: MetricField, det_threshold: Optional[float] = None) -> NDArray[np.float64]:
    """Return ``g^{ab}`` at every node.

    Raises
    ------
    DegenerateMetricError
        At the first node (C order) where ``|det g| < det_threshold``.
    """

    threshold: float = get_settings().det_threshold if det_threshold is None else det_threshold
    det: NDArray[np.float64] = np.linalg.det(g.values)
    bad: NDArray[np.bool_] = np.abs(det) < threshold
    if np.any(bad):
        node: tuple[int, ...] = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DegenerateMetricError(node, g.chart.point(node), float(det[node]))
    return np.linalg.inv(g.values)


# -- structure fields -----------------------------------------------------------


def metric_algebroid(g: MetricField) -> StructureField:
    """Tangent algebroid ``[X, Y, Z] = g(X, Y) Z``: ``C^l_{abc}(x) = g_ab(x) delta^l_c``.

    Notes
    -----
    - No invertibility guard: degenerate and signature-changing metrics are valid input.
    """

    d: int = g.dim
    C: NDArray[np.float64] = np.einsum("...ab,lc->...labc", g.values, np.eye(d))
    return StructureField(g.chart, d, C)


def cotangent_algebroid(g: MetricField, det_threshold: Optional[float] = None) -> StructureField:
    """Cotangent algebroid ``[w, h, s] = g^{-1}(w, h) s``; needs ``g`` invertible everywhere."""

    d: int = g.dim
    C: NDArray[np.float64] = np.einsum("...ab,lc->...labc", inverse_metric(g, det_threshold), np.eye(d))
    return StructureField(g.chart, d, C)


def scaled_line_algebroid(B: BilinearForm, chart: Chart) -> StructureField:
    """Algebroid over an interval with ``[u, v, w] = t B(u, v) w``.

    Raises
    ------
    DimensionMismatchError
        If the chart is not one-dimensional.
    """

    if chart.base_dim != 1:
        raise DimensionMismatchError("scaled line algebroid needs a 1-dimensional chart")
    t: NDArray[np.float64] = chart.axes()[0]
    C: NDArray[np.float64] = np.einsum("t,labc->tlabc", t, bilinear_algebra(B).C)
    return StructureField(chart, B.dim, C)


def constant_field(chart: Chart, A: TernaryAlgebra) -> StructureField:
    """Trivial bundle ``chart x A``: the same structure tensor at every node."""

    C: NDArray[np.float64] = np.broadcast_to(A.C, chart.shape + A.C.shape).copy()
    return StructureField(chart, A.dim, C)


def zero_field(chart: Chart, n: int) -> StructureField:
    """Any vector bundle with the zero ternary product."""

    return StructureField(chart, n, np.zeros(chart.shape + (n, n, n, n)))


def fibre_algebra(F: StructureField, point_index: Sequence[int]) -> TernaryAlgebra:
    """The fibre algebra at a grid node.

    Raises
    ------
    InvalidInputError
        If the index is out of range.
    """

    idx: tuple[int, ...] = F.chart.check_index(point_index)
    return F.at(idx, label=f"fibre{idx}")


def grid_interpolator(chart: Chart, values: NDArray[np.float64]) -> RegularGridInterpolator:
    """Multilinear interpolator over the chart grid for per-node tensors of any tail shape."""

    if any(s < 2 for s in chart.shape):
        raise InvalidInputError("interpolation needs at least 2 nodes per axis")
    return RegularGridInterpolator(tuple(chart.axes()), values, method="linear", bounds_error=True)


def fibre_algebra_at(F: StructureField, x: ArrayLike) -> TernaryAlgebra:
    """Fibre algebra at chart coordinates ``x`` by multilinear interpolation (exact at nodes)."""

    point: NDArray[np.float64] = as_vector(x, F.chart.base_dim, "point")
    if not F.chart.contains(point):
        raise InvalidInputError(f"point {tuple(point)} lies outside the chart")
    clipped: NDArray[np.float64] = np.clip(point, F.chart.origin, F.chart.upper)
    C: NDArray[np.float64] = grid_interpolator(F.chart, F.values)(clipped[None, :])[0]
    return TernaryAlgebra(F.fibre_dim, C, f"fibre@{tuple(float(v) for v in point)}")


# -- pointwise checks -----------------------------------------------------------


# Scratch arrays of n^6 floats that para_defect_tensor holds at once per node.
_DEFECT_SCRATCH_ARRAYS: int = 5


def node_batch_size(fibre_dim: int, budget_bytes: int) -> int:
    """Number of nodes whose para-defect scratch fits in ``budget_bytes`` (at least 1).

    Parameters
    ----------
    fibre_dim: int
        Fibre dimension ``n``; one node needs ``5 * n^6`` float64 scratch entries.
    budget_bytes: int
        Memory budget for one batch.

    Returns
    -------
    int
        Nodes per batch.
    """

    per_node: int = _DEFECT_SCRATCH_ARRAYS * fibre_dim**6 * np.dtype(np.float64).itemsize
    return max(1, budget_bytes // per_node)


def field_para_check(
    F: StructureField,
    tol: Tolerance = DEFAULT_TOLERANCE,
    settings: Optional[Settings] = None,
) -> ResidualReport:
    """Run the para-associativity check at every node and report the worst one.

    Parameters
    ----------
    F: StructureField
        Field to check.
    tol: Tolerance
        Bound on the per-node defect.
    settings: Settings | None
        Supplies ``threads`` and ``batch_bytes``; defaults to ``get_settings()``.

    Returns
    -------
    ResidualReport
        Per-node defect maximum with its node and coordinates.

    Notes
    -----
    - Nodes go to a thread pool in batches of ``node_batch_size`` nodes, so each
      worker holds at most ``batch_bytes`` of scratch; numpy releases the GIL
      inside einsum.
    """

    settings = settings or get_settings()
    n: int = F.fibre_dim
    flat: NDArray[np.float64] = F.values.reshape(-1, n, n, n, n)
    batch: int = node_batch_size(n, settings.batch_bytes)
    batches: list[NDArray[np.float64]] = [flat[i : i + batch] for i in range(0, flat.shape[0], batch)]
    workers: int = min(resolve_workers(settings), len(batches))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts: list[NDArray[np.float64]] = list(pool.map(para_defect_tensor, batches))
    per_node: NDArray[np.float64] = np.concatenate(parts).reshape(F.chart.shape)
    report: ResidualReport = ResidualReport.from_residual(F.chart, per_node, tol.eps)
    logger.info(
        "field para check: max defect %.3e at node %s over %d nodes (%d batches, %d workers)",
        report.max_abs,
        report.argmax,
        F.chart.n_nodes,
        len(batches),
        workers,
    )
    return report


def _require_sections(F: StructureField, *sections: SectionField) -> None:
    for s in sections:
        F.chart.require_same(s.chart, "structure field and section")
        if s.fibre_dim != F.fibre_dim:
            raise DimensionMismatchError(f"section has fibre dimension {s.fibre_dim}, expected {F.fibre_dim}")


def evaluate_section_product(F: StructureField, u: SectionField, v: SectionField, w: SectionField) -> SectionField:
    """Pointwise ternary product of three sections.

    Raises
    ------
    ChartMismatchError
        If any section lives on a different chart.
    """

    _require_sections(F, u, v, w)
    values: NDArray[np.float64] = np.einsum("...labc,...a,...b,...c->...l", F.values, u.values, v.values, w.values)
    return SectionField(F.chart, values)


def scale_section(f: ArrayLike, u: SectionField) -> SectionField:
    """Multiply a section by a sampled scalar function ``f`` (shape ``chart.shape``)."""

    f_arr: NDArray[np.float64] = np.asarray(f, dtype=np.float64)
    if f_arr.shape != u.chart.shape:
        raise DimensionMismatchError(f"function has shape {f_arr.shape}, expected {u.chart.shape}")
    return SectionField(u.chart, f_arr[..., None] * u.values)


def constant_section(chart: Chart, v: FibreVector) -> SectionField:
    vec: NDArray[np.float64] = np.asarray(v, dtype=np.float64)
    return SectionField(chart, np.broadcast_to(vec, chart.shape + vec.shape).copy())


def star_reduce_field(F: StructureField, e: SectionField) -> BinaryField:
    """Pointwise binary reduction ``u *_e v = [u, e, v]`` along a chosen section ``e``."""

    _require_sections(F, e)
    M: NDArray[np.float64] = np.einsum("...lagb,...g->...lab", F.values, e.values)
    return BinaryField(F.chart, F.fibre_dim, M)


def binary_field_assoc_check(Bf: BinaryField, tol: Tolerance = DEFAULT_TOLERANCE) -> ResidualReport:
    """Associativity residual of a binary field at every node."""

    left: NDArray[np.float64] = np.einsum("...hab,...lhc->...labc", Bf.values, Bf.values)
    right: NDArray[np.float64] = np.einsum("...hbc,...lah->...labc", Bf.values, Bf.values)
    return ResidualReport.from_residual(Bf.chart, left - right, tol.eps)


def annihilator_residual(F: StructureField, z: ArrayLike) -> float:
    """Max over nodes and basis ``v, w`` of ``|[z, v, w]|`` and ``|[v, z, w]|``.

    Notes
    -----
    - Zero exactly when ``z`` is a left and central annihilator at every node.
    """

    z_: FibreVector = as_vector(z, F.fibre_dim, "z")
    left: NDArray[np.float64] = np.einsum("...labc,a->...lbc", F.values, z_)
    central: NDArray[np.float64] = np.einsum("...labc,b->...lac", F.values, z_)
    return float(max(np.abs(left).max(), np.abs(central).max()))
