"""Unit tests for settings loading and JSON logging."""
from __future__ import annotations

import io
import json
import logging
import os
import sys
import unittest
from unittest import mock

import numpy as np
from pydantic import ValidationError

from ternalg.core.config import Settings, get_settings, resolve_workers
from ternalg.core.logging_cfg import JsonFormatter, setup_logging


class TestSettings(unittest.TestCase):
    """Environment-driven settings."""

    def tearDown(self) -> None:
        get_settings.cache_clear()

    def test_defaults(self) -> None:
        """Defaults apply when no environment is set."""
        with mock.patch.dict(os.environ, {}, clear=True):
            s: Settings = Settings(_env_file=None)
        self.assertEqual(s.eps, 1e-9)
        self.assertEqual(s.field_eps, 1e-2)
        self.assertEqual(s.dt, 1e-3)
        self.assertEqual(s.threads, 0)
        self.assertEqual(s.batch_bytes, 64 * 2**20)

    def test_prefixed_environment(self) -> None:
        """TERNALG_ variables override the defaults."""
        env: dict[str, str] = {"TERNALG_THREADS": "3", "TERNALG_EPS": "1e-6", "TERNALG_DEBUG": "1"}
        with mock.patch.dict(os.environ, env):
            get_settings.cache_clear()
            s: Settings = get_settings()
        self.assertEqual(s.threads, 3)
        self.assertEqual(s.eps, 1e-6)
        self.assertTrue(s.debug)
        self.assertEqual(resolve_workers(s), 3)

    def test_settings_are_cached(self) -> None:
        """get_settings returns one cached instance."""
        get_settings.cache_clear()
        self.assertIs(get_settings(), get_settings())

    def test_validation(self) -> None:
        """Out-of-range values are rejected."""
        with self.assertRaises(ValidationError):
            Settings(threads=-1)
        with self.assertRaises(ValidationError):
            Settings(dt=0.0)
        with self.assertRaises(ValidationError):
            Settings(field_eps=-1.0)
        with self.assertRaises(ValidationError):
            Settings(batch_bytes=0)

    def test_auto_workers(self) -> None:
        """threads=0 resolves to at least one worker."""
        self.assertGreaterEqual(resolve_workers(Settings(threads=0)), 1)


class TestLogging(unittest.TestCase):
    """JsonFormatter and setup_logging."""

    def setUp(self) -> None:
        root: logging.Logger = logging.getLogger()
        self._handlers: list[logging.Handler] = list(root.handlers)
        self._level: int = root.level

    def tearDown(self) -> None:
        root: logging.Logger = logging.getLogger()
        for h in list(root.handlers):
            root.removeHandler(h)
        for h in self._handlers:
            root.addHandler(h)
        root.setLevel(self._level)

    def test_formatter_payload(self) -> None:
        """The payload carries level, message, logger name, line and UTC time."""
        record: logging.LogRecord = logging.LogRecord(
            "ternalg.services.transport", logging.WARNING, __file__, 12, "residual %.1e", (0.5,), None
        )
        payload: dict[str, object] = json.loads(JsonFormatter().format(record))
        self.assertEqual(payload["level"], "WARNING")
        self.assertEqual(payload["message"], "residual 5.0e-01")
        self.assertEqual(payload["name"], "ternalg.services.transport")
        self.assertEqual(payload["line"], 12)
        self.assertTrue(str(payload["time"]).endswith("+00:00"))

    def test_extra_fields_land_in_context(self) -> None:
        """extra= values go under context with numpy values made plain."""
        record: logging.LogRecord = logging.LogRecord("x", logging.INFO, __file__, 1, "done", (), None)
        record.residual = np.float64(0.25)
        record.node = (1, 2)
        payload: dict[str, object] = json.loads(JsonFormatter().format(record))
        self.assertEqual(payload["context"], {"residual": 0.25, "node": [1, 2]})
        self.assertNotIn("context", json.loads(JsonFormatter().format(logging.makeLogRecord({"msg": "plain"}))))

    def test_exception_is_serialized(self) -> None:
        """exc_info is rendered into the exc field."""
        try:
            raise ValueError("boom")
        except ValueError:
            record = logging.LogRecord("x", logging.ERROR, __file__, 1, "failed", (), sys.exc_info())
        payload: dict[str, object] = json.loads(JsonFormatter().format(record))
        self.assertIn("ValueError: boom", str(payload["exc"]))

    def test_setup_logging_writes_json_lines(self) -> None:
        """Repeated setup keeps one handler and INFO hides debug records."""
        stream: io.StringIO = io.StringIO()
        setup_logging(debug=False, stream=stream)
        setup_logging(debug=False, stream=stream)
        logging.getLogger("ternalg.test").info("hello %s", "there")
        logging.getLogger("ternalg.test").debug("hidden")
        lines: list[str] = stream.getvalue().splitlines()
        self.assertEqual(len(lines), 1)
        self.assertEqual(json.loads(lines[0])["message"], "hello there")


if __name__ == "__main__":
    unittest.main()
