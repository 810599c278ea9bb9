"""Domain models for sampled fields over a single-chart base.

A ``Chart`` is a rectangular grid over one coordinate patch. Every field stores
its per-node data in an array whose leading axes are ``chart.shape`` and whose
trailing axes are the tensor indices of the field, C row-major.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ternalg.core.errors import ChartMismatchError, CurveError, DimensionMismatchError, InvalidInputError
from ternalg.domain.algebra import LinearMap, TernaryAlgebra

_BOX_SLACK: float = 1e-9


def _readonly(values: ArrayLike, name: str) -> NDArray[np.float64]:
    arr: NDArray[np.float64] = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Chart:
    """Rectangular sampling of one coordinate patch.

    Notes
    -----
    - Node ``i`` along axis ``a`` sits at ``origin[a] + i * spacing[a]``.
    - Derivative stencils need at least 3 points on the axis they act on; that is
      checked where a stencil is applied, not here.
    """

    base_dim: int
    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self) -> None:
        d: int = self.base_dim
        if d < 1:
            raise InvalidInputError("base_dim must be >= 1")
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if not (len(self.origin) == len(self.spacing) == len(self.shape) == d):
            raise DimensionMismatchError(f"chart origin/spacing/shape must all have length {d}")
        if not all(np.isfinite(self.origin)) or not all(np.isfinite(self.spacing)):
            raise InvalidInputError("chart origin and spacing must be finite")
        if any(h <= 0.0 for h in self.spacing):
            raise InvalidInputError("chart spacings must be > 0")
        if any(s < 1 for s in self.shape):
            raise InvalidInputError("chart shape entries must be >= 1")

    @classmethod
    def from_bounds(cls, lower: Sequence[float], upper: Sequence[float], shape: Sequence[int]) -> "Chart":
        """Build a chart whose first and last nodes sit on ``lower`` and ``upper``."""

        shape_t: tuple[int, ...] = tuple(int(s) for s in shape)
        if any(s < 2 for s in shape_t):
            raise InvalidInputError("from_bounds needs at least 2 points per axis")
        spacing: tuple[float, ...] = tuple((float(hi) - float(lo)) / (s - 1) for lo, hi, s in zip(lower, upper, shape_t))
        return cls(len(shape_t), tuple(float(x) for x in lower), spacing, shape_t)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + h * (s - 1) for o, h, s in zip(self.origin, self.spacing, self.shape))

    def axes(self) -> list[NDArray[np.float64]]:
        """Return the node coordinates along each axis."""

        return [o + h * np.arange(s, dtype=np.float64) for o, h, s in zip(self.origin, self.spacing, self.shape)]

    def points(self) -> NDArray[np.float64]:
        """Return node coordinates as an array of shape ``shape + (base_dim,)``."""

        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def point(self, index: Sequence[int]) -> tuple[float, ...]:
        idx: tuple[int, ...] = self.check_index(index)
        return tuple(o + h * i for o, h, i in zip(self.origin, self.spacing, idx))

    def check_index(self, index: Sequence[int]) -> tuple[int, ...]:
        idx: tuple[int, ...] = tuple(int(i) for i in index)
        if len(idx) != self.base_dim or any(i < 0 or i >= s for i, s in zip(idx, self.shape)):
            raise InvalidInputError(f"grid index {idx} out of range for chart shape {self.shape}")
        return idx

    def contains(self, x: Sequence[float]) -> bool:
        """Whether ``x`` lies in the closed coordinate box spanned by the grid."""

        for xa, lo, hi, h in zip(x, self.origin, self.upper, self.spacing):
            slack: float = _BOX_SLACK * h
            if xa < lo - slack or xa > hi + slack:
                return False
        return True

    def matches(self, other: "Chart") -> bool:
        return (
            self.base_dim == other.base_dim
            and self.shape == other.shape
            and bool(np.allclose(self.origin, other.origin, rtol=0.0, atol=1e-12))
            and bool(np.allclose(self.spacing, other.spacing, rtol=1e-12, atol=0.0))
        )

    def require_same(self, other: "Chart", what: str = "fields") -> None:
        if not self.matches(other):
            raise ChartMismatchError(f"{what} are sampled on different charts")


def _check_tail(chart: Chart, values: NDArray[np.float64], tail: tuple[int, ...], name: str) -> None:
    expected: tuple[int, ...] = chart.shape + tail
    if values.shape != expected:
        raise DimensionMismatchError(f"{name} values have shape {values.shape}, expected {expected}")


@dataclass(frozen=True)
class StructureField:
    """Per-node structure tensors ``C[..., lam, alpha, beta, gamma]``."""

    chart: Chart
    fibre_dim: int
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values: NDArray[np.float64] = _readonly(self.values, "structure field")
        n: int = self.fibre_dim
        _check_tail(self.chart, values, (n, n, n, n), "structure field")
        object.__setattr__(self, "values", values)

    def at(self, index: Sequence[int], label: Optional[str] = None) -> TernaryAlgebra:
        idx: tuple[int, ...] = self.chart.check_index(index)
        return TernaryAlgebra(self.fibre_dim, self.values[idx], label)


@dataclass(frozen=True)
class MetricField:
    """Per-node symmetric matrices ``g[..., a, b]``; degeneracy is allowed."""

    chart: Chart
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values: NDArray[np.float64] = _readonly(self.values, "metric field")
        d: int = self.chart.base_dim
        _check_tail(self.chart, values, (d, d), "metric field")
        if not np.array_equal(values, np.swapaxes(values, -1, -2)):
            raise InvalidInputError("metric field is not symmetric at every node")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.chart.base_dim


@dataclass(frozen=True)
class SectionField:
    """Per-node fibre vectors ``u[..., alpha]``."""

    chart: Chart
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values: NDArray[np.float64] = _readonly(self.values, "section field")
        if values.ndim != self.chart.base_dim + 1 or values.shape[:-1] != self.chart.shape:
            raise DimensionMismatchError(
                f"section values have shape {values.shape}, expected {self.chart.shape} + (n,)"
            )
        object.__setattr__(self, "values", values)

    @property
    def fibre_dim(self) -> int:
        return int(self.values.shape[-1])


@dataclass(frozen=True)
class ConnectionField:
    """Per-node connection coefficients ``G[..., a, alpha, beta] = Gamma^beta_{a alpha}``."""

    chart: Chart
    fibre_dim: int
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values: NDArray[np.float64] = _readonly(self.values, "connection field")
        n: int = self.fibre_dim
        _check_tail(self.chart, values, (self.chart.base_dim, n, n), "connection field")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class FrameField:
    """Per-node invertible matrices ``Q[..., beta, alpha]`` identifying a model algebra with each fibre."""

    chart: Chart
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values: NDArray[np.float64] = _readonly(self.values, "frame field")
        if values.ndim != self.chart.base_dim + 2 or values.shape[:-2] != self.chart.shape:
            raise DimensionMismatchError("frame values must have shape chart.shape + (n, n)")
        if values.shape[-1] != values.shape[-2]:
            raise DimensionMismatchError("frame matrices must be square")
        object.__setattr__(self, "values", values)

    @property
    def fibre_dim(self) -> int:
        return int(self.values.shape[-1])


@dataclass(frozen=True)
class BinaryField:
    """Per-node binary structure tensors ``M[..., lam, alpha, beta]``."""

    chart: Chart
    fibre_dim: int
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values: NDArray[np.float64] = _readonly(self.values, "binary field")
        n: int = self.fibre_dim
        _check_tail(self.chart, values, (n, n, n), "binary field")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class Curve:
    """A sampled curve in chart coordinates.

    Notes
    -----
    - ``samples[k] = (t_k, x_k^1, ..., x_k^d)`` with strictly increasing ``t_k``.
    - A closed curve identifies its end fibre with its start fibre. Periodic
      coordinates are unwrapped: a latitude loop runs phi from 0 to 2*pi inside a
      chart that covers that whole range.
    """

    samples: NDArray[np.float64]
    closed: bool = False

    def __post_init__(self) -> None:
        samples: NDArray[np.float64] = _readonly(self.samples, "curve samples")
        if samples.ndim != 2 or samples.shape[0] < 2 or samples.shape[1] < 2:
            raise CurveError("curve needs at least two samples of the form (t, x1, ..., xd)")
        if not np.all(np.diff(samples[:, 0]) > 0.0):
            raise CurveError("curve parameters must be strictly increasing")
        object.__setattr__(self, "samples", samples)

    @property
    def params(self) -> NDArray[np.float64]:
        return self.samples[:, 0]

    @property
    def points(self) -> NDArray[np.float64]:
        return self.samples[:, 1:]

    @property
    def base_dim(self) -> int:
        return int(self.samples.shape[1] - 1)

    @property
    def start(self) -> NDArray[np.float64]:
        return self.samples[0, 1:]

    @property
    def end(self) -> NDArray[np.float64]:
        return self.samples[-1, 1:]


@dataclass(frozen=True)
class ResidualReport:
    """Max-norm summary of a residual field.

    Attributes
    ----------
    max_abs: float
        Largest absolute residual over the nodes considered.
    argmax: tuple[int, ...]
        Grid index where it occurs.
    point: tuple[float, ...]
        Chart coordinates of ``argmax``.
    per_axis: tuple[float, ...]
        Max residual per base axis ``a`` when the residual carries one; empty otherwise.
    per_node: NDArray
        Max absolute residual at every node (shape ``chart.shape``).
    tolerance: float
        Bound the verdict was taken against.
    margin: int
        Boundary node layers excluded from ``max_abs``.
    """

    max_abs: float
    argmax: tuple[int, ...]
    point: tuple[float, ...]
    per_axis: tuple[float, ...]
    per_node: NDArray[np.float64]
    tolerance: float
    margin: int = 0

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tolerance

    @classmethod
    def from_residual(
        cls,
        chart: Chart,
        residual: NDArray[np.float64],
        tolerance: float,
        margin: int = 0,
        base_axis: Optional[int] = None,
    ) -> "ResidualReport":
        """Summarize ``residual`` (shape ``chart.shape + tail``).

        Notes
        -----
        - ``base_axis`` is the position inside the tail of a base index ``a``; when
          given, ``per_axis`` holds the max over each value of that index.
        - Nodes within ``margin`` layers of any chart face are excluded from the max.
        """

        d: int = chart.base_dim
        tail_axes: tuple[int, ...] = tuple(range(d, residual.ndim))
        abs_res: NDArray[np.float64] = np.abs(residual)
        per_node: NDArray[np.float64] = abs_res.max(axis=tail_axes) if tail_axes else abs_res

        mask: NDArray[np.bool_] = np.ones(chart.shape, dtype=bool)
        if margin > 0:
            for a, s in enumerate(chart.shape):
                if 2 * margin >= s:
                    raise InvalidInputError(f"margin {margin} leaves no nodes on axis {a}")
                sl: list[slice] = [slice(None)] * d
                sl[a] = slice(0, margin)
                mask[tuple(sl)] = False
                sl[a] = slice(s - margin, s)
                mask[tuple(sl)] = False

        masked: NDArray[np.float64] = np.where(mask, per_node, -np.inf)
        flat: int = int(np.argmax(masked))
        argmax: tuple[int, ...] = tuple(int(i) for i in np.unravel_index(flat, chart.shape))

        per_axis: tuple[float, ...] = ()
        if base_axis is not None:
            moved: NDArray[np.float64] = np.moveaxis(abs_res, d + base_axis, d)
            inner: tuple[int, ...] = tuple(range(d + 1, moved.ndim))
            per_axis_node: NDArray[np.float64] = moved.max(axis=inner) if inner else moved
            per_axis = tuple(
                float(np.max(np.where(mask, per_axis_node[(Ellipsis, a)], -np.inf)))
                for a in range(per_axis_node.shape[-1])
            )

        return cls(
            max_abs=float(masked[argmax]),
            argmax=argmax,
            point=chart.point(argmax),
            per_axis=per_axis,
            per_node=per_node,
            tolerance=float(tolerance),
            margin=margin,
        )


@dataclass(frozen=True)
class TransportResult:
    """Outcome of transporting a fibre frame along a curve.

    Notes
    -----
    - ``iso_residual`` is recorded, not assumed small; it is the homomorphism
      residual of ``map`` between the start and end fibre algebras.
    """

    map: LinearMap
    step_size: float
    steps: int
    iso_residual: float
    start: tuple[float, ...]
    end: tuple[float, ...]
    differential_max: Optional[float] = None
