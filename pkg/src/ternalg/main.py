"""Command-line entrypoint for ternalg."""
from __future__ import annotations

from typing import Optional, Sequence

from ternalg.api.cli import main
from ternalg.core.config import Settings, get_settings
from ternalg.core.logging_cfg import setup_logging


def run(argv: Optional[Sequence[str]] = None) -> None:
    """Configure logging from settings, run one CLI command and exit with its code.

    Notes
    -----
    - Settings are loaded once; ``TERNALG_DEBUG=1`` switches logs to DEBUG.
    - Logs go to stderr as JSON lines; stdout carries only the report.
    """

    settings: Settings = get_settings()
    setup_logging(settings.debug)
    raise SystemExit(main(argv))


if __name__ == "__main__":
    run()
