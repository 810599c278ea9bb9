"""Artifact file IO: strict parsing with byte offsets, digests and deterministic writes."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Optional, TypeVar, Union

from pydantic import BaseModel, ValidationError

from ternalg.core.errors import ArtifactError
from ternalg.domain.documents import ARTIFACT_ADAPTER, InputDigest

DocT = TypeVar("DocT", bound=BaseModel)
PathLike = Union[str, Path]


def _read(path: PathLike) -> tuple[bytes, InputDigest]:
    p: Path = Path(path)
    try:
        raw: bytes = p.read_bytes()
    except OSError as ex:
        raise ArtifactError(str(p), f"cannot read file ({ex.strerror})") from ex
    return raw, InputDigest(path=str(p), sha256=hashlib.sha256(raw).hexdigest())


def _parse_json(path: str, raw: bytes) -> Any:
    """Decode UTF-8 JSON; syntax errors report the byte offset of the failure."""

    try:
        text: str = raw.decode("utf-8")
    except UnicodeDecodeError as ex:
        raise ArtifactError(path, "file is not valid UTF-8", offset=ex.start) from ex
    try:
        return json.loads(text)
    except json.JSONDecodeError as ex:
        offset: int = len(text[: ex.pos].encode("utf-8"))
        raise ArtifactError(path, f"invalid JSON: {ex.msg}", offset=offset) from ex


def _validation_message(ex: ValidationError) -> str:
    first = ex.errors()[0]
    where: str = ".".join(str(part) for part in first.get("loc", ())) or "<root>"
    return f"{where}: {first.get('msg', 'invalid value')} ({ex.error_count()} error(s))"


def read_artifact(path: PathLike, model: type[DocT]) -> tuple[DocT, InputDigest]:
    """Read and validate an artifact of a known type.

    Notes
    -----
    - Files may omit ``kind``; when present it must match the model.

    Raises
    ------
    ArtifactError
        On unreadable files, malformed JSON (with byte offset) or schema violations.
    """

    raw, digest = _read(path)
    obj: Any = _parse_json(digest.path, raw)
    try:
        return model.model_validate(obj), digest
    except ValidationError as ex:
        raise ArtifactError(digest.path, _validation_message(ex)) from ex


def read_any(path: PathLike) -> tuple[BaseModel, InputDigest]:
    """Read an artifact whose type is given by its ``kind`` field."""

    raw, digest = _read(path)
    obj: Any = _parse_json(digest.path, raw)
    try:
        return ARTIFACT_ADAPTER.validate_python(obj), digest
    except ValidationError as ex:
        raise ArtifactError(digest.path, _validation_message(ex)) from ex


def render(doc: BaseModel, exclude: Optional[set[str]] = None) -> str:
    """Deterministic JSON text: sorted keys, 2-space indent, trailing newline."""

    return json.dumps(doc.model_dump(mode="json", exclude=exclude), sort_keys=True, indent=2) + "\n"


def write_artifact(doc: BaseModel, path: PathLike) -> Path:
    """Write ``doc`` to ``path`` (parents created); identical documents give identical bytes."""

    p: Path = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(render(doc), encoding="utf-8")
    return p
