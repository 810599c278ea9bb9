"""Serializable artifact models.

Every JSON artifact is one pydantic model tagged by a ``kind`` literal. Small
algebraic objects keep their tensors as nested lists indexed like the arrays
(zero-based); sampled fields store ``values`` as one flat list in C row-major
order, point-major and then tensor indices.

``to_domain`` converts a document into the immutable numeric type used by the
services, ``from_domain`` goes the other way.
"""
from __future__ import annotations

from typing import Annotated, Any, Literal, Optional, Union

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

from ternalg.core.errors import DimensionMismatchError, InvalidInputError
from ternalg.domain.algebra import BilinearForm, BinaryAlgebra, HeapTable, TernaryAlgebra
from ternalg.domain.fields import (
    Chart,
    ConnectionField,
    Curve,
    MetricField,
    ResidualReport,
    SectionField,
    StructureField,
    TransportResult,
)

ROW_MAJOR: str = "C-row-major, point-major then tensor indices"


def _array(values: Any, name: str, dtype: type = np.float64) -> NDArray[Any]:
    try:
        return np.asarray(values, dtype=dtype)
    except (TypeError, ValueError) as ex:
        raise InvalidInputError(f"{name} is not a rectangular numeric array") from ex


def _reshape(values: list[float], shape: tuple[int, ...], name: str) -> NDArray[np.float64]:
    flat: NDArray[np.float64] = _array(values, name)
    expected: int = int(np.prod(shape))
    if flat.ndim != 1 or flat.size != expected:
        raise DimensionMismatchError(f"{name} has {flat.size} values, expected {expected} for shape {shape}")
    return flat.reshape(shape)


class _Artifact(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChartDoc(_Artifact):
    """Rectangular grid: node ``i`` on axis ``a`` sits at ``origin[a] + i * spacing[a]``."""

    base_dim: int = Field(ge=1)
    origin: list[float]
    spacing: list[float]
    shape: list[int]

    def to_domain(self) -> Chart:
        return Chart(self.base_dim, tuple(self.origin), tuple(self.spacing), tuple(self.shape))

    @classmethod
    def from_domain(cls, chart: Chart) -> "ChartDoc":
        return cls(
            base_dim=chart.base_dim,
            origin=list(chart.origin),
            spacing=list(chart.spacing),
            shape=list(chart.shape),
        )


# -- algebraic artifacts ----------------------------------------------------------


class AlgebraDoc(_Artifact):
    """Ternary algebra ``{"dim": n, "C": C[lambda][alpha][beta][gamma]}``."""

    kind: Literal["algebra"] = "algebra"
    dim: int = Field(ge=1)
    C: list[list[list[list[float]]]]
    label: Optional[str] = None

    def to_domain(self) -> TernaryAlgebra:
        return TernaryAlgebra(self.dim, _array(self.C, "C"), self.label)

    @classmethod
    def from_domain(cls, A: TernaryAlgebra) -> "AlgebraDoc":
        return cls(dim=A.dim, C=A.C.tolist(), label=A.label)


class BinaryAlgebraDoc(_Artifact):
    """Binary algebra ``M[lambda][alpha][beta]`` with an optional two-sided unit."""

    kind: Literal["binary_algebra"] = "binary_algebra"
    dim: int = Field(ge=1)
    M: list[list[list[float]]]
    unit: Optional[list[float]] = None
    label: Optional[str] = None

    def to_domain(self) -> BinaryAlgebra:
        unit = None if self.unit is None else _array(self.unit, "unit")
        return BinaryAlgebra(self.dim, _array(self.M, "M"), unit, self.label)

    @classmethod
    def from_domain(cls, Bn: BinaryAlgebra) -> "BinaryAlgebraDoc":
        unit = None if Bn.unit is None else Bn.unit.tolist()
        return cls(dim=Bn.dim, M=Bn.M.tolist(), unit=unit, label=Bn.label)


class HeapDoc(_Artifact):
    """Heap table ``{"order": k, "table": [[[...]]]}`` with 1-based entries."""

    kind: Literal["heap"] = "heap"
    order: int = Field(ge=1)
    table: list[list[list[int]]]

    def to_domain(self) -> HeapTable:
        return HeapTable(self.order, _array(self.table, "table", np.int64))

    @classmethod
    def from_domain(cls, H: HeapTable) -> "HeapDoc":
        return cls(order=H.order, table=H.table.tolist())


class FormDoc(_Artifact):
    """Bilinear form ``{"dim": n, "B": [[...]]}``."""

    kind: Literal["form"] = "form"
    dim: int = Field(ge=1)
    B: list[list[float]]

    def to_domain(self) -> BilinearForm:
        return BilinearForm(self.dim, _array(self.B, "B"))

    @classmethod
    def from_domain(cls, B: BilinearForm) -> "FormDoc":
        return cls(dim=B.dim, B=B.B.tolist())


# -- sampled fields ----------------------------------------------------------------


class _SampledDoc(_Artifact):
    chart: ChartDoc
    fibre_dim: int = Field(ge=1)
    values: list[float]
    order: str = ROW_MAJOR


class StructureDoc(_SampledDoc):
    kind: Literal["structure"] = "structure"

    def to_domain(self) -> StructureField:
        chart: Chart = self.chart.to_domain()
        n: int = self.fibre_dim
        return StructureField(chart, n, _reshape(self.values, chart.shape + (n, n, n, n), "structure values"))

    @classmethod
    def from_domain(cls, F: StructureField) -> "StructureDoc":
        return cls(chart=ChartDoc.from_domain(F.chart), fibre_dim=F.fibre_dim, values=F.values.ravel().tolist())


class MetricDoc(_SampledDoc):
    """Metric field; ``fibre_dim`` equals the chart dimension."""

    kind: Literal["metric"] = "metric"

    def to_domain(self) -> MetricField:
        chart: Chart = self.chart.to_domain()
        d: int = chart.base_dim
        if self.fibre_dim != d:
            raise DimensionMismatchError(f"metric fibre_dim {self.fibre_dim} must equal base_dim {d}")
        return MetricField(chart, _reshape(self.values, chart.shape + (d, d), "metric values"))

    @classmethod
    def from_domain(cls, g: MetricField) -> "MetricDoc":
        return cls(chart=ChartDoc.from_domain(g.chart), fibre_dim=g.dim, values=g.values.ravel().tolist())


class SectionDoc(_SampledDoc):
    kind: Literal["section"] = "section"

    def to_domain(self) -> SectionField:
        chart: Chart = self.chart.to_domain()
        return SectionField(chart, _reshape(self.values, chart.shape + (self.fibre_dim,), "section values"))

    @classmethod
    def from_domain(cls, s: SectionField) -> "SectionDoc":
        return cls(chart=ChartDoc.from_domain(s.chart), fibre_dim=s.fibre_dim, values=s.values.ravel().tolist())


class ConnectionDoc(_SampledDoc):
    """Connection ``values[point][a][alpha][beta] = Gamma^beta_{a alpha}``."""

    kind: Literal["connection"] = "connection"

    def to_domain(self) -> ConnectionField:
        chart: Chart = self.chart.to_domain()
        n: int = self.fibre_dim
        shape: tuple[int, ...] = chart.shape + (chart.base_dim, n, n)
        return ConnectionField(chart, n, _reshape(self.values, shape, "connection values"))

    @classmethod
    def from_domain(cls, G: ConnectionField) -> "ConnectionDoc":
        return cls(chart=ChartDoc.from_domain(G.chart), fibre_dim=G.fibre_dim, values=G.values.ravel().tolist())


class CurveDoc(_Artifact):
    """Curve ``{"closed": bool, "samples": [[t, x1, ..., xd], ...]}``; periodic coordinates unwrapped."""

    kind: Literal["curve"] = "curve"
    closed: bool = False
    samples: list[list[float]]

    def to_domain(self) -> Curve:
        return Curve(_array(self.samples, "curve samples"), closed=self.closed)

    @classmethod
    def from_domain(cls, c: Curve) -> "CurveDoc":
        return cls(closed=c.closed, samples=c.samples.tolist())


# -- reports ------------------------------------------------------------------------


class Verdict(BaseModel):
    """Outcome of one named check; always carries the tolerance it was judged against."""

    status: Literal["pass", "fail"]
    residual: float
    tolerance: float
    argmax: Optional[list[int]] = None
    point: Optional[list[float]] = None
    per_axis: Optional[list[float]] = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @classmethod
    def judge(cls, residual: float, tolerance: float) -> "Verdict":
        return cls(status="pass" if residual <= tolerance else "fail", residual=residual, tolerance=tolerance)

    @classmethod
    def from_report(cls, report: ResidualReport) -> "Verdict":
        return cls(
            status="pass" if report.passed else "fail",
            residual=report.max_abs,
            tolerance=report.tolerance,
            argmax=list(report.argmax),
            point=list(report.point),
            per_axis=list(report.per_axis) or None,
        )


class InputDigest(BaseModel):
    path: str
    sha256: str


class TransportDoc(BaseModel):
    """Serialized ``TransportResult``; ``map`` is row-major ``Phi[beta][alpha]``."""

    map: list[list[float]]
    step_size: float
    steps: int
    iso_residual: float
    start: list[float]
    end: list[float]
    differential_max: Optional[float] = None

    @classmethod
    def from_domain(cls, result: TransportResult) -> "TransportDoc":
        return cls(
            map=result.map.entries.tolist(),
            step_size=result.step_size,
            steps=result.steps,
            iso_residual=result.iso_residual,
            start=list(result.start),
            end=list(result.end),
            differential_max=result.differential_max,
        )


class RunReport(_Artifact):
    """Outcome of one CLI command.

    Notes
    -----
    - Exit code 0 iff every verdict passes.
    - ``timing`` is wall-clock seconds and is the only non-deterministic field.
    """

    kind: Literal["report"] = "report"
    command: str
    inputs: list[InputDigest] = Field(default_factory=list)
    verdicts: dict[str, Verdict] = Field(default_factory=dict)
    data: dict[str, Any] = Field(default_factory=dict)
    timing: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())


Artifact = Annotated[
    Union[
        AlgebraDoc,
        BinaryAlgebraDoc,
        HeapDoc,
        FormDoc,
        StructureDoc,
        MetricDoc,
        SectionDoc,
        ConnectionDoc,
        CurveDoc,
        RunReport,
    ],
    Field(discriminator="kind"),
]

ARTIFACT_ADAPTER: TypeAdapter[Any] = TypeAdapter(Artifact)
