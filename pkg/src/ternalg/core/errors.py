"""Exception hierarchy.

All errors subclass ``ValueError`` so callers that only care about rejected
input can keep catching that; the CLI maps every ``TernalgError`` to exit code 2.
"""
from __future__ import annotations

from typing import Sequence


class TernalgError(ValueError):
    """Base class for rejected input and failed preconditions."""


class InvalidInputError(TernalgError):
    """Malformed value: wrong shape, non-finite entries, out-of-range table entry."""


class DimensionMismatchError(TernalgError):
    """Vector or map dimensions do not match the algebra they are used with."""


class PreconditionError(TernalgError):
    """An operation precondition does not hold (e.g. a non-biunit passed as biunit)."""


class NotScalingRelatedError(TernalgError):
    """Two structure tensors are not proportional, so no scaling isomorphism is sought."""


class ChartMismatchError(TernalgError):
    """Fields sampled on different charts were combined."""


class StencilError(TernalgError):
    """Too few grid points along an axis for the second-order stencil."""


class CurveError(TernalgError):
    """Curve leaves the chart, has non-increasing parameters, or is too finely sampled for dt."""


class SingularTransportError(TernalgError):
    """A transport operator came out (numerically) singular."""


class DegenerateMetricError(TernalgError):
    """A metric is degenerate at some node where an inverse is required.

    Attributes
    ----------
    node: tuple[int, ...]
        Grid multi-index of the first degenerate node.
    point: tuple[float, ...]
        Chart coordinates of that node.
    """

    def __init__(self, node: Sequence[int], point: Sequence[float], det: float) -> None:
        self.node: tuple[int, ...] = tuple(int(i) for i in node)
        self.point: tuple[float, ...] = tuple(float(x) for x in point)
        self.det: float = float(det)
        super().__init__(f"degenerate metric at node {self.node} (x={self.point}, det={self.det:.3e})")


class ArtifactError(TernalgError):
    """An artifact file failed to parse or validate.

    Attributes
    ----------
    offset: int | None
        Byte offset of a JSON syntax error, when known.
    """

    def __init__(self, path: str, message: str, offset: int | None = None) -> None:
        self.path: str = path
        self.offset: int | None = offset
        where: str = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{path}: {message}{where}")
