"""JSON-lines logging for command-line runs.

Every record becomes one JSON object on stderr. Values passed through
``extra=`` (residuals, node indices, step counts) are copied into the object,
so a run's log can be filtered with ``jq`` next to its report on stdout.
"""
from __future__ import annotations

import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, TextIO

import numpy as np

# Attributes every LogRecord carries; anything else on a record came from ``extra=``.
_RECORD_ATTRS: frozenset[str] = frozenset(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}


def _plain(value: Any) -> Any:
    """JSON fallback for numpy scalars, arrays and tuples of them."""

    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


class JsonFormatter(logging.Formatter):
    """Render a record as one JSON line.

    Notes
    -----
    - ``time`` is UTC ISO-8601.
    - Structured fields from ``extra=`` go under ``context``.
    - ``exc`` holds the formatted traceback when ``exc_info`` is set.
    """

    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, Any] = {
            "level": record.levelname,
            "time": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "name": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        context: dict[str, Any] = {k: v for k, v in vars(record).items() if k not in _RECORD_ATTRS}
        if context:
            payload["context"] = context
        if record.exc_info:
            payload["exc"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False, default=_plain)


def setup_logging(debug: bool, stream: TextIO | None = None) -> None:
    """Send all logging to ``stream`` (stderr by default) as JSON lines.

    Calling it again replaces the handler instead of stacking a second one.
    """

    level: int = logging.DEBUG if debug else logging.INFO
    handler: logging.Handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JsonFormatter())

    root: logging.Logger = logging.getLogger()
    for h in list(root.handlers):
        root.removeHandler(h)
    root.addHandler(handler)
    root.setLevel(level)

    logging.getLogger("scipy").setLevel(level if debug else logging.WARNING)
