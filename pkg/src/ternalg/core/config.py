"""Application configuration utilities.

This module defines the numerical defaults and worker limits loaded from
environment variables. CLI flags override them per invocation.
"""
from __future__ import annotations

import os
from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Typed application settings loaded from the environment.

    Notes
    -----
    - Environment variables are read with the ``TERNALG_`` prefix (e.g., ``TERNALG_THREADS``).
    - ``eps`` is the default absolute tolerance for algebraic identities on O(1) inputs;
      ``field_eps`` is the default for finite-difference checks on sampled fields.
    - ``threads = 0`` means "auto"; see ``resolve_workers``.
    """

    model_config = SettingsConfigDict(env_prefix="TERNALG_", env_file=".env", extra="ignore")

    debug: bool = Field(default=False, description="Enable debug logging")
    threads: int = Field(default=0, description="Worker cap for node-partitioned checks (0 = auto)")
    eps: float = Field(default=1e-9, description="Default tolerance for algebraic identities")
    field_eps: float = Field(default=1e-2, description="Default tolerance for sampled-field checks")
    dt: float = Field(default=1e-3, description="Default parallel-transport step")
    det_threshold: float = Field(
        default=1e-12,
        description="Metrics with |det g| below this at any node are treated as degenerate",
    )
    transport_det_threshold: float = Field(
        default=1e-8,
        description="Transport maps with |det| below this are reported as singular",
    )
    batch_bytes: int = Field(
        default=64 * 2**20,
        description="Scratch-memory budget per batch of nodes in pointwise algebra checks",
    )

    @field_validator("threads")
    @classmethod
    def _non_negative_threads(cls, value: int) -> int:
        if value < 0:
            raise ValueError("threads must be >= 0")
        return value

    @field_validator("eps", "field_eps", "det_threshold", "transport_det_threshold")
    @classmethod
    def _non_negative_tolerance(cls, value: float) -> float:
        if value < 0:
            raise ValueError("tolerances must be >= 0")
        return value

    @field_validator("batch_bytes")
    @classmethod
    def _positive_budget(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("batch_bytes must be > 0")
        return value

    @field_validator("dt")
    @classmethod
    def _positive_step(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("dt must be > 0")
        return value


def resolve_workers(settings: Settings) -> int:
    """Return the number of workers to use for node-partitioned work.

    Notes
    -----
    - ``threads = 0`` resolves to ``os.cpu_count()`` (at least 1).
    """

    if settings.threads > 0:
        return settings.threads
    return max(1, os.cpu_count() or 1)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Load and cache application settings.

    Notes
    -----
    - One instance per process; tests call ``get_settings.cache_clear()`` after changing the env.
    """

    return Settings()
