"""
Configuration for ustflow runs.

``Settings`` holds process-wide defaults read from the environment (and an optional
``.env`` file). ``RunConfig`` is one validated CLI invocation.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import InvalidParams, MissingInput, NonPositiveT
from .graph import DEFAULT_TIE_TOL
from .ust import UstParams

Command = Literal["dist", "gram", "bench", "validate", "build-graph", "oracle"]

# input files each command reads
REQUIRED_INPUTS = {
    "dist": ("graph_path", "measures_path"),
    "gram": ("graph_path", "measures_path"),
    "bench": ("graph_path", "measures_path"),
    "validate": ("graph_path",),
    "build-graph": ("points_path",),
    "oracle": ("graph_path", "measures_path"),
}


@dataclass
class Settings:
    """Defaults taken from ``USTFLOW_*`` environment variables."""

    log_level: str = "WARNING"
    workers: int = 1
    tie_tol: float = DEFAULT_TIE_TOL

    @classmethod
    def from_env(cls, env_file: Optional[str] = None) -> "Settings":
        if env_file:
            load_dotenv(env_file)
        else:
            load_dotenv()
        try:
            return cls(
                log_level=os.getenv("USTFLOW_LOG_LEVEL", "WARNING").upper(),
                workers=int(os.getenv("USTFLOW_WORKERS", "1")),
                tie_tol=float(os.getenv("USTFLOW_TIE_TOL", str(DEFAULT_TIE_TOL))),
            )
        except ValueError as exc:
            raise InvalidParams(f"bad USTFLOW_* environment value: {exc}") from None


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: Command
    graph_path: Optional[Path] = None
    measures_path: Optional[Path] = None
    points_path: Optional[Path] = None
    omega_path: Optional[Path] = None
    output_path: Optional[Path] = None
    output_format: Optional[Literal["csv", "json"]] = None

    params: UstParams = UstParams()
    root: int = 0
    slices: Optional[int] = None
    seed: int = 0
    t: float = 1.0
    allow_ties: bool = False
    tie_tol: float = DEFAULT_TIE_TOL
    perturb: Optional[float] = None
    workers: int = 1

    # build-graph
    m: Optional[int] = None
    density: Literal["log", "sqrt"] = "log"

    # oracle
    oracle_kind: Literal["et", "wasserstein"] = "et"
    weight_a1: Optional[float] = None
    order: float = 1.0

    # bench
    pairs: int = 100
    oracle_supports: Optional[int] = None

    @model_validator(mode="after")
    def _check(self):
        for name in REQUIRED_INPUTS[self.command]:
            path = getattr(self, name)
            flag = "--" + name[: -len("_path")]
            if path is None:
                raise MissingInput(f"{self.command} needs {flag}")
            if not path.is_file():
                raise MissingInput(f"{flag} {path} does not exist")
        if self.omega_path is not None and not self.omega_path.is_file():
            raise MissingInput(f"--omega {self.omega_path} does not exist")
        if self.slices is not None and self.slices < 1:
            raise InvalidParams(f"--slices must be >= 1, got {self.slices}")
        if not self.t > 0:
            raise NonPositiveT(f"--t must be > 0, got {self.t!r}")
        if self.tie_tol < 0:
            raise InvalidParams(f"--tie-tol must be >= 0, got {self.tie_tol!r}")
        if self.perturb is not None and self.perturb < 0:
            raise InvalidParams(f"--perturb must be >= 0, got {self.perturb!r}")
        if self.workers < 1:
            raise InvalidParams(f"--workers must be >= 1, got {self.workers}")
        if self.command == "build-graph" and (self.m is None or self.m < 1):
            raise InvalidParams("build-graph needs --m >= 1")
        if self.pairs < 1:
            raise InvalidParams(f"--pairs must be >= 1, got {self.pairs}")
        return self

    @property
    def fmt(self) -> str:
        """Output format; the oracle defaults to JSON, everything else to CSV."""
        if self.output_format is not None:
            return self.output_format
        return "json" if self.command == "oracle" else "csv"

    @property
    def a1(self) -> float:
        """Weight slope; defaults to ``b``."""
        return self.params.b if self.weight_a1 is None else self.weight_a1
