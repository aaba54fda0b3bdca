"""Run configuration shared by the library entry points and the CLI."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass
from pathlib import Path

from .groups import DEFAULT_ORDER_BUDGET

CACHE_ENV = "TRACELAB_CACHE"


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "tracelab"


@dataclass(frozen=True)
class Config:
    cache_dir: Path = None  # type: ignore[assignment]
    order_budget: int = DEFAULT_ORDER_BUDGET
    class_budget: int = 200
    orbit_budget: int = 200_000
    tol: float = 1e-9
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.cache_dir is None:
            object.__setattr__(self, "cache_dir", default_cache_dir())
        object.__setattr__(self, "cache_dir", Path(self.cache_dir))
        for name in ("order_budget", "class_budget", "orbit_budget", "workers"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.tol <= 1e-3:
            raise ValueError("tol must lie in (0, 1e-3]")

    def echo(self) -> dict:
        d = asdict(self)
        d["cache_dir"] = str(self.cache_dir)
        return d
