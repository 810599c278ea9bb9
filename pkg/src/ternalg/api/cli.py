"""Command-line front end.

Every command reads JSON artifacts, runs one service pipeline and returns a
``RunReport``. Exit codes: 0 when every verdict passes, 1 when a verdict fails,
2 for rejected input (parse, validation or precondition errors).
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Optional, Sequence, TextIO

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ValidationError

from ternalg import __version__
from ternalg.core.config import Settings, get_settings
from ternalg.core.errors import InvalidInputError, TernalgError
from ternalg.domain.algebra import FibreVector, TernaryAlgebra, Tolerance, basis_vector
from ternalg.domain.documents import (
    AlgebraDoc,
    BinaryAlgebraDoc,
    ConnectionDoc,
    CurveDoc,
    FormDoc,
    HeapDoc,
    InputDigest,
    MetricDoc,
    RunReport,
    StructureDoc,
    TransportDoc,
    Verdict,
)
from ternalg.domain.fields import Chart, MetricField, StructureField
from ternalg.infra.fs import read_any, read_artifact, render, write_artifact
from ternalg.services.connections import (
    curvature_derivation_residual,
    differential_residual,
    levi_civita,
    metric_compat_residual,
    trivial_connection,
)
from ternalg.services.constructors import (
    bilinear_algebra,
    cyclic_heap_table,
    direct_sum,
    heap_algebra,
    star_reduce,
    tensor_product,
    zero_algebra,
)
from ternalg.services.fields import (
    METRIC_PRESETS,
    annihilator_residual,
    cotangent_algebroid,
    field_para_check,
    metric_algebroid,
    scaled_line_algebroid,
)
from ternalg.services.tern_core import (
    a_assoc_defect,
    binary_assoc_residual,
    biunit_search,
    commutativity_defect,
    is_binary_commutative,
    opposite,
    para_defect,
)
from ternalg.services.transport import form_preservation_residual, latitude_curve, line_curve, transport_iso_residual

logger = logging.getLogger(__name__)

EXIT_OK: int = 0
EXIT_FAIL: int = 1
EXIT_INPUT: int = 2

Params = dict[str, str]

CONSTRUCT_KINDS: tuple[str, ...] = (
    "bilinear",
    "heap",
    "cyclic_heap",
    "zero",
    "opposite",
    "direct_sum",
    "tensor_product",
    "metric",
    "metric_algebroid",
    "cotangent_algebroid",
    "scaled_line",
    "levi_civita",
    "trivial_connection",
    "latitude_curve",
    "line_curve",
)


# -- argument helpers ---------------------------------------------------------------


def parse_vector(text: str) -> NDArray[np.float64]:
    """Parse a comma-separated vector literal such as ``1,0`` or ``0.5,-2``."""

    try:
        values: list[float] = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as ex:
        raise InvalidInputError(f"not a vector literal: {text!r}") from ex
    if not values:
        raise InvalidInputError("empty vector literal")
    return np.asarray(values, dtype=np.float64)


def parse_params(items: Optional[Sequence[str]]) -> Params:
    params: Params = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InvalidInputError(f"parameter must look like key=value, got {item!r}")
        params[key.strip()] = value.strip()
    return params


def _require(params: Params, key: str, kind: str) -> str:
    if key not in params:
        raise InvalidInputError(f"construct {kind} needs --param {key}=...")
    return params[key]


def _int(params: Params, key: str, kind: str, default: Optional[int] = None) -> int:
    raw: Optional[str] = params.get(key) if default is not None else _require(params, key, kind)
    if raw is None:
        return int(default)  # type: ignore[arg-type]
    try:
        return int(raw)
    except ValueError as ex:
        raise InvalidInputError(f"--param {key} must be an integer, got {raw!r}") from ex


def _float(params: Params, key: str, kind: str, default: Optional[float] = None) -> float:
    raw: Optional[str] = params.get(key) if default is not None else _require(params, key, kind)
    if raw is None:
        return float(default)  # type: ignore[arg-type]
    try:
        return float(raw)
    except ValueError as ex:
        raise InvalidInputError(f"--param {key} must be a number, got {raw!r}") from ex


def _chart(params: Params, kind: str) -> Chart:
    lower: NDArray[np.float64] = parse_vector(_require(params, "lower", kind))
    upper: NDArray[np.float64] = parse_vector(_require(params, "upper", kind))
    shape: list[int] = [int(s) for s in parse_vector(_require(params, "shape", kind))]
    if not (len(lower) == len(upper) == len(shape)):
        raise InvalidInputError("lower, upper and shape must have the same length")
    return Chart.from_bounds(lower, upper, shape)


def _inputs(paths: Sequence[str], count: int, kind: str) -> list[str]:
    if len(paths) != count:
        raise InvalidInputError(f"construct {kind} takes {count} input file(s), got {len(paths)}")
    return list(paths)


def _read_structure(path: str) -> tuple[StructureField, InputDigest, Optional[MetricField]]:
    """Structure or metric file; a metric stands for its metric algebroid."""

    doc, digest = read_any(path)
    if isinstance(doc, StructureDoc):
        return doc.to_domain(), digest, None
    if isinstance(doc, MetricDoc):
        g: MetricField = doc.to_domain()
        return metric_algebroid(g), digest, g
    raise InvalidInputError(f"{path}: expected a structure or metric artifact, got kind {getattr(doc, 'kind', '?')!r}")


def _tol(eps: Optional[float], default: float) -> Tolerance:
    return Tolerance(default if eps is None else eps)


# -- commands -------------------------------------------------------------------------


def cmd_algebra_check(path: str, eps: Optional[float] = None, settings: Optional[Settings] = None) -> RunReport:
    """Para-associativity verdict plus commutativity, A-associativity and basis biunits.

    Notes
    -----
    - Only para-associativity decides the exit code; the other predicates are
      reported as properties with their residuals.
    """

    settings = settings or get_settings()
    tol: Tolerance = _tol(eps, settings.eps)
    doc, digest = read_artifact(path, AlgebraDoc)
    A: TernaryAlgebra = doc.to_domain()

    comm: float = commutativity_defect(A)
    a_assoc: float = a_assoc_defect(A)
    basis: list[FibreVector] = [basis_vector(A.dim, i) for i in range(A.dim)]
    biunits: list[FibreVector] = biunit_search(A, basis, tol)
    return RunReport(
        command="algebra check",
        inputs=[digest],
        verdicts={"para_associative": Verdict.judge(para_defect(A), tol.eps)},
        data={
            "dim": A.dim,
            "label": A.label,
            "properties": {
                "commutative": {"value": comm <= tol.eps, "residual": comm},
                "a_associative": {"value": a_assoc <= tol.eps, "residual": a_assoc},
            },
            "biunits": [e.tolist() for e in biunits],
        },
    )


def _algebra_output(A: TernaryAlgebra, tol: Tolerance) -> tuple[BaseModel, dict[str, Verdict]]:
    return AlgebraDoc.from_domain(A), {"para_associative": Verdict.judge(para_defect(A), tol.eps)}


def _structure_output(F: StructureField, tol: Tolerance, settings: Settings) -> tuple[BaseModel, dict[str, Verdict]]:
    return StructureDoc.from_domain(F), {"para_associative": Verdict.from_report(field_para_check(F, tol, settings))}


def cmd_construct(
    kind: str,
    inputs: Sequence[str],
    params: Params,
    out_path: str,
    eps: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> RunReport:
    """Build an artifact of ``kind`` and write it to ``out_path``; the report carries self-checks."""

    settings = settings or get_settings()
    tol: Tolerance = _tol(eps, settings.eps)
    digests: list[InputDigest] = []

    def load(model: type[Any], path: str) -> Any:
        doc, digest = read_artifact(path, model)
        digests.append(digest)
        return doc.to_domain()

    doc: BaseModel
    verdicts: dict[str, Verdict] = {}
    if kind == "bilinear":
        (form,) = _inputs(inputs, 1, kind)
        doc, verdicts = _algebra_output(bilinear_algebra(load(FormDoc, form), params.get("label")), tol)
    elif kind == "heap":
        (heap,) = _inputs(inputs, 1, kind)
        doc, verdicts = _algebra_output(heap_algebra(load(HeapDoc, heap), params.get("label")), tol)
    elif kind == "cyclic_heap":
        _inputs(inputs, 0, kind)
        k: int = _int(params, "k", kind)
        doc, verdicts = _algebra_output(heap_algebra(cyclic_heap_table(k), f"cyclic_heap({k})"), tol)
    elif kind == "zero":
        _inputs(inputs, 0, kind)
        doc, verdicts = _algebra_output(zero_algebra(_int(params, "n", kind)), tol)
    elif kind == "opposite":
        (alg,) = _inputs(inputs, 1, kind)
        doc, verdicts = _algebra_output(opposite(load(AlgebraDoc, alg)), tol)
    elif kind == "direct_sum":
        a1, a2 = _inputs(inputs, 2, kind)
        doc, verdicts = _algebra_output(direct_sum(load(AlgebraDoc, a1), load(AlgebraDoc, a2)), tol)
    elif kind == "tensor_product":
        a1, a2, a3 = _inputs(inputs, 3, kind)
        A: TernaryAlgebra = tensor_product(load(AlgebraDoc, a1), load(AlgebraDoc, a2), load(AlgebraDoc, a3))
        doc, verdicts = _algebra_output(A, tol)
    elif kind == "metric":
        _inputs(inputs, 0, kind)
        preset: str = _require(params, "preset", kind)
        if preset not in METRIC_PRESETS:
            raise InvalidInputError(f"unknown metric preset {preset!r}; choose from {sorted(METRIC_PRESETS)}")
        doc = MetricDoc.from_domain(METRIC_PRESETS[preset](_chart(params, kind)))
    elif kind == "metric_algebroid":
        (metric,) = _inputs(inputs, 1, kind)
        doc, verdicts = _structure_output(metric_algebroid(load(MetricDoc, metric)), tol, settings)
    elif kind == "cotangent_algebroid":
        (metric,) = _inputs(inputs, 1, kind)
        F: StructureField = cotangent_algebroid(load(MetricDoc, metric), settings.det_threshold)
        doc, verdicts = _structure_output(F, tol, settings)
    elif kind == "scaled_line":
        (form,) = _inputs(inputs, 1, kind)
        doc, verdicts = _structure_output(scaled_line_algebroid(load(FormDoc, form), _chart(params, kind)), tol, settings)
    elif kind == "levi_civita":
        (metric,) = _inputs(inputs, 1, kind)
        g: MetricField = load(MetricDoc, metric)
        G = levi_civita(g, settings.det_threshold)
        doc = ConnectionDoc.from_domain(G)
        verdicts = {"metric_compatible": Verdict.from_report(metric_compat_residual(g, G, tol))}
    elif kind == "trivial_connection":
        (field,) = _inputs(inputs, 1, kind)
        base, digest, _ = _read_structure(field)
        digests.append(digest)
        doc = ConnectionDoc.from_domain(trivial_connection(base.chart, base.fibre_dim))
    elif kind == "latitude_curve":
        _inputs(inputs, 0, kind)
        doc = CurveDoc.from_domain(
            latitude_curve(
                _float(params, "theta0", kind),
                n_samples=_int(params, "n_samples", kind, 65),
                phi0=_float(params, "phi0", kind, 0.0),
                phi1=_float(params, "phi1", kind, 2.0 * np.pi),
            )
        )
    elif kind == "line_curve":
        _inputs(inputs, 0, kind)
        doc = CurveDoc.from_domain(
            line_curve(
                parse_vector(_require(params, "start", kind)),
                parse_vector(_require(params, "end", kind)),
                n_samples=_int(params, "n_samples", kind, 33),
                t0=_float(params, "t0", kind, 0.0),
                t1=_float(params, "t1", kind, 1.0),
            )
        )
    else:
        raise InvalidInputError(f"unknown construct kind {kind!r}; choose from {', '.join(CONSTRUCT_KINDS)}")

    written: Path = write_artifact(doc, out_path)
    logger.info("constructed %s into %s", kind, written)
    return RunReport(
        command=f"algebra construct {kind}",
        inputs=digests,
        verdicts=verdicts,
        data={"kind": kind, "params": dict(sorted(params.items())), "output": out_path},
    )


def cmd_reduce(path: str, e: Sequence[float], out_path: Optional[str] = None, eps: Optional[float] = None, settings: Optional[Settings] = None) -> RunReport:
    """Binary reduction at ``e`` with associativity verdict and unit detection."""

    settings = settings or get_settings()
    tol: Tolerance = _tol(eps, settings.eps)
    doc, digest = read_artifact(path, AlgebraDoc)
    A: TernaryAlgebra = doc.to_domain()
    Bn = star_reduce(A, e, tol)
    out: BinaryAlgebraDoc = BinaryAlgebraDoc.from_domain(Bn)
    if out_path:
        write_artifact(out, out_path)
    return RunReport(
        command="algebra reduce",
        inputs=[digest],
        verdicts={"associative": Verdict.judge(binary_assoc_residual(Bn, tol), tol.eps)},
        data={
            "e": [float(x) for x in e],
            "unit": None if Bn.unit is None else Bn.unit.tolist(),
            "commutative": is_binary_commutative(Bn, tol),
            "M": Bn.M.tolist(),
            "output": out_path,
        },
    )


def cmd_field_check(
    path: str,
    eps: Optional[float] = None,
    annihilator: Optional[Sequence[float]] = None,
    settings: Optional[Settings] = None,
) -> RunReport:
    """Pointwise para-associativity over every node (metric files become metric algebroids)."""

    settings = settings or get_settings()
    tol: Tolerance = _tol(eps, settings.eps)
    F, digest, _ = _read_structure(path)
    verdicts: dict[str, Verdict] = {"para_associative": Verdict.from_report(field_para_check(F, tol, settings))}
    if annihilator is not None:
        verdicts["annihilator"] = Verdict.judge(annihilator_residual(F, annihilator), tol.eps)
    return RunReport(
        command="field check",
        inputs=[digest],
        verdicts=verdicts,
        data={"nodes": F.chart.n_nodes, "fibre_dim": F.fibre_dim},
    )


def cmd_connection_check(
    field_path: str,
    connection_path: str,
    metric_path: Optional[str] = None,
    eps: Optional[float] = None,
    margin: int = 0,
    settings: Optional[Settings] = None,
) -> RunReport:
    """Differential-connection verdict plus metric compatibility.

    Notes
    -----
    - The curvature derivation law holds only for differential connections and its
      nested stencils lose an order near the faces, so it is reported under
      ``data.curvature_derivation`` and does not decide the exit code.
    """

    settings = settings or get_settings()
    tol: Tolerance = _tol(eps, settings.field_eps)
    F, field_digest, implied_metric = _read_structure(field_path)
    conn_doc, conn_digest = read_artifact(connection_path, ConnectionDoc)
    G = conn_doc.to_domain()
    digests: list[InputDigest] = [field_digest, conn_digest]

    g: Optional[MetricField] = implied_metric
    if metric_path:
        metric_doc, metric_digest = read_artifact(metric_path, MetricDoc)
        g = metric_doc.to_domain()
        digests.append(metric_digest)

    verdicts: dict[str, Verdict] = {"differential": Verdict.from_report(differential_residual(F, G, tol, margin))}
    if g is not None:
        verdicts["metric_compatible"] = Verdict.from_report(metric_compat_residual(g, G, tol, margin))
    curvature_law: Verdict = Verdict.from_report(curvature_derivation_residual(F, G, tol, margin))
    return RunReport(
        command="connection check",
        inputs=digests,
        verdicts=verdicts,
        data={
            "margin": margin,
            "spacing": list(F.chart.spacing),
            "curvature_derivation": curvature_law.model_dump(mode="json"),
        },
    )


def cmd_transport(
    field_path: str,
    connection_path: str,
    curve_path: str,
    dt: Optional[float] = None,
    eps: Optional[float] = None,
    metric_path: Optional[str] = None,
    settings: Optional[Settings] = None,
) -> RunReport:
    """Transport along a curve and judge the transport map as an algebra isomorphism."""

    settings = settings or get_settings()
    tol: Tolerance = _tol(eps, settings.field_eps)
    F, field_digest, implied_metric = _read_structure(field_path)
    conn_doc, conn_digest = read_artifact(connection_path, ConnectionDoc)
    curve_doc, curve_digest = read_artifact(curve_path, CurveDoc)
    digests: list[InputDigest] = [field_digest, conn_digest, curve_digest]
    c = curve_doc.to_domain()

    result = transport_iso_residual(F, conn_doc.to_domain(), c, dt, settings)
    verdicts: dict[str, Verdict] = {"isomorphism": Verdict.judge(result.iso_residual, tol.eps)}

    g: Optional[MetricField] = implied_metric
    if metric_path:
        metric_doc, metric_digest = read_artifact(metric_path, MetricDoc)
        g = metric_doc.to_domain()
        digests.append(metric_digest)
    if g is not None:
        verdicts["form_preserved"] = Verdict.judge(form_preservation_residual(g, c, result.map), tol.eps)

    return RunReport(
        command="transport run",
        inputs=digests,
        verdicts=verdicts,
        data={"transport": TransportDoc.from_domain(result).model_dump(mode="json")},
    )


def cmd_report_diff(path_a: str, path_b: str) -> RunReport:
    """Compare two reports field by field, ignoring ``timing``."""

    a, digest_a = read_artifact(path_a, RunReport)
    b, digest_b = read_artifact(path_b, RunReport)
    dump_a: dict[str, Any] = a.model_dump(mode="json", exclude={"timing"})
    dump_b: dict[str, Any] = b.model_dump(mode="json", exclude={"timing"})
    differing: list[str] = sorted(k for k in dump_a.keys() | dump_b.keys() if dump_a.get(k) != dump_b.get(k))
    return RunReport(
        command="report diff",
        inputs=[digest_a, digest_b],
        verdicts={"identical": Verdict.judge(float(len(differing)), 0.0)},
        data={"differing": differing},
    )


# -- parser and dispatch ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    """Build the ``ternalg`` argument parser.

    Notes
    -----
    - Vector literals are comma separated; pass negative ones as ``--e=-1,0``.
    """

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=float, default=None, help="tolerance for every verdict of this run")
    common.add_argument("--format", choices=("json", "text"), default="json", help="report format on stdout")

    parser = argparse.ArgumentParser(prog="ternalg", description="Ternary para-associative algebras and algebroids")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)

    algebra = groups.add_parser("algebra", help="single algebras").add_subparsers(dest="verb", required=True)
    p = algebra.add_parser("check", parents=[common], help="check algebraic properties")
    p.add_argument("path")
    p.set_defaults(handler=lambda a: cmd_algebra_check(a.path, a.eps))

    p = algebra.add_parser("construct", parents=[common], help="build an artifact")
    p.add_argument("kind", choices=CONSTRUCT_KINDS)
    p.add_argument("inputs", nargs="*", help="input artifact files")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=lambda a: cmd_construct(a.kind, a.inputs, parse_params(a.param), a.out, a.eps))

    p = algebra.add_parser("reduce", parents=[common], help="binary reduction u *_e v = [u, e, v]")
    p.add_argument("path")
    p.add_argument("--e", required=True, help="comma-separated vector")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=lambda a: cmd_reduce(a.path, parse_vector(a.e).tolist(), a.out, a.eps))

    field = groups.add_parser("field", help="structure fields").add_subparsers(dest="verb", required=True)
    p = field.add_parser("check", parents=[common], help="pointwise para-associativity")
    p.add_argument("path")
    p.add_argument("--annihilator", default=None, help="vector checked as a left and central annihilator")
    p.set_defaults(
        handler=lambda a: cmd_field_check(
            a.path, a.eps, None if a.annihilator is None else parse_vector(a.annihilator).tolist()
        )
    )

    connection = groups.add_parser("connection", help="connections").add_subparsers(dest="verb", required=True)
    p = connection.add_parser("check", parents=[common], help="differential-connection residuals")
    p.add_argument("field")
    p.add_argument("connection")
    p.add_argument("--metric", default=None)
    p.add_argument("--margin", type=int, default=0, help="boundary node layers excluded from the max")
    p.set_defaults(handler=lambda a: cmd_connection_check(a.field, a.connection, a.metric, a.eps, a.margin))

    transport = groups.add_parser("transport", help="parallel transport").add_subparsers(dest="verb", required=True)
    p = transport.add_parser("run", parents=[common], help="transport along a curve")
    p.add_argument("field")
    p.add_argument("connection")
    p.add_argument("curve")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--metric", default=None)
    p.set_defaults(handler=lambda a: cmd_transport(a.field, a.connection, a.curve, a.dt, a.eps, a.metric))

    report = groups.add_parser("report", help="reports").add_subparsers(dest="verb", required=True)
    p = report.add_parser("diff", parents=[common], help="compare two reports ignoring timing")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(handler=lambda a: cmd_report_diff(a.a, a.b))
    return parser


def format_text(report: RunReport) -> str:
    lines: list[str] = [f"{report.command}: {'PASS' if report.passed else 'FAIL'}"]
    for name, v in sorted(report.verdicts.items()):
        where: str = f" at {tuple(v.argmax)}" if v.argmax is not None else ""
        lines.append(f"  {name}: {v.status} residual={v.residual:.3e} tol={v.tolerance:.1e}{where}")
    return "\n".join(lines) + "\n"


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    """Parse ``argv``, run one command, print its report and return the exit code."""

    out: TextIO = stdout or sys.stdout
    err: TextIO = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    handler: Callable[[argparse.Namespace], RunReport] = args.handler

    started: float = time.perf_counter()
    try:
        report: RunReport = handler(args)
    except (TernalgError, ValidationError) as ex:
        logger.debug("input rejected", exc_info=True)
        err.write(f"error: {ex}\n")
        return EXIT_INPUT
    report.timing = round(time.perf_counter() - started, 6)

    out.write(render(report) if args.format == "json" else format_text(report))
    return EXIT_OK if report.passed else EXIT_FAIL
