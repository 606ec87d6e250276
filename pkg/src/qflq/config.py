"""Declarative run configuration (JSON) and its validation."""

from __future__ import annotations

import json
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .fourier_op import QPOperator
from .lambda_model import DriveSpec, build_lambda
from .propagator import TimeGrid

TASKS = ("effective-hamiltonian", "evolve", "lambda-demo", "sambe-compare")
HERMITIAN_ATOL = 1e-12

Task = Literal["effective-hamiltonian", "evolve", "lambda-demo", "sambe-compare"]
Complex = tuple[float, float]


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FourierTerm(_Strict):
    index: list[int] = Field(min_length=1)
    matrix: list[list[Complex]]


class SystemSpec(_Strict):
    dim: int = Field(ge=1)
    omega: list[float] = Field(min_length=1)
    terms: list[FourierTerm]


class DriveTerm(_Strict):
    index: list[int] = Field(min_length=1)
    value: Complex


class LambdaDrive(_Strict):
    omega: list[float] = Field(min_length=1)
    coefficients: list[DriveTerm] = Field(min_length=1)


class GridSpec(_Strict):
    t0: float = 0.0
    t1: float
    steps: int = Field(ge=1)
    substeps: Optional[int] = Field(default=None, ge=1)


class RunConfig(_Strict):
    task: Optional[Task] = None
    system: Optional[SystemSpec] = None
    drive: Optional[LambdaDrive] = None
    order: int = Field(default=2, ge=1, le=12)
    cutoff: int = Field(default=8, ge=0)
    grid: Optional[GridSpec] = None
    resonance_threshold: Optional[float] = Field(default=None, gt=0)
    tolerance: float = Field(default=1e-8, gt=0)
    elements: Optional[list[tuple[int, int]]] = None
    output: Optional[str] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.system is None) == (self.drive is None):
            raise ValueError("exactly one of 'system' or 'drive' must be given")
        return self

    @property
    def omega(self) -> list[float]:
        return (self.system or self.drive).omega

    @property
    def d(self) -> int:
        return len(self.omega)

    def drive_spec(self) -> DriveSpec | None:
        if self.drive is None:
            return None
        return DriveSpec(
            self.drive.omega,
            {tuple(c.index): complex(*c.value) for c in self.drive.coefficients},
        )

    def hamiltonian(self) -> QPOperator:
        if self.drive is not None:
            return build_lambda(self.drive_spec())
        s = self.system
        terms = {}
        for term in s.terms:
            mat = np.array([[complex(re, im) for re, im in row] for row in term.matrix])
            key = tuple(term.index)
            terms[key] = terms.get(key, 0) + mat
        return QPOperator(s.dim, s.omega, terms)

    def time_grid(self) -> TimeGrid:
        g = self.grid
        return TimeGrid(g.t0, g.t1, g.steps)


def _loc(loc) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += ("." if out else "") + str(part)
    return out


def _check_frequencies(omega, path: str) -> None:
    for k, w in enumerate(omega):
        if not np.isfinite(w) or w <= 0:
            raise ConfigError(f"{path}[{k}]", f"frequency must be finite and > 0, got {w}")


def _check_system(cfg: RunConfig) -> None:
    s = cfg.system
    _check_frequencies(s.omega, "system.omega")
    d = len(s.omega)
    mats = {}
    for k, term in enumerate(s.terms):
        path = f"system.terms[{k}]"
        if len(term.index) != d:
            raise ConfigError(f"{path}.index", f"length {len(term.index)} does not match d={d}")
        if len(term.matrix) != s.dim or any(len(row) != s.dim for row in term.matrix):
            raise ConfigError(f"{path}.matrix", f"expected a {s.dim}x{s.dim} matrix")
        key = tuple(term.index)
        if key in mats:
            raise ConfigError(f"{path}.index", f"duplicate harmonic {list(key)}")
        mats[key] = (k, np.array([[complex(*z) for z in row] for row in term.matrix]))
    for key, (k, mat) in mats.items():
        neg = tuple(-i for i in key)
        partner = mats.get(neg, (None, np.zeros_like(mat)))[1]
        if np.linalg.norm(partner - mat.conj().T) > HERMITIAN_ATOL * max(1.0, np.linalg.norm(mat)):
            raise ConfigError(
                f"system.terms[{k}].matrix",
                f"harmonic {list(neg)} must be the conjugate transpose of harmonic {list(key)}",
            )


def _check_drive(cfg: RunConfig) -> None:
    dr = cfg.drive
    _check_frequencies(dr.omega, "drive.omega")
    seen = set()
    for k, c in enumerate(dr.coefficients):
        path = f"drive.coefficients[{k}].index"
        if len(c.index) != len(dr.omega):
            raise ConfigError(path, f"length {len(c.index)} does not match d={len(dr.omega)}")
        if all(i == 0 for i in c.index) and complex(*c.value) != 0:
            raise ConfigError(path, "the static drive component must vanish")
        if tuple(c.index) in seen:
            raise ConfigError(path, f"duplicate harmonic {c.index}")
        seen.add(tuple(c.index))


def _check_task(cfg: RunConfig, task: str) -> None:
    if task in ("evolve", "lambda-demo", "sambe-compare") and cfg.grid is None:
        raise ConfigError("grid", f"task {task!r} needs a time grid")
    if cfg.grid is not None and not cfg.grid.t1 > cfg.grid.t0:
        raise ConfigError("grid.t1", "must be greater than grid.t0")
    if task == "lambda-demo" and cfg.drive is None:
        raise ConfigError("drive", "task 'lambda-demo' needs a Lambda 'drive' section")
    if cfg.elements is not None:
        dim = 3 if cfg.drive is not None else cfg.system.dim
        for k, (i, j) in enumerate(cfg.elements):
            if not (0 <= i < dim and 0 <= j < dim):
                raise ConfigError(f"elements[{k}]", f"index ({i}, {j}) outside dimension {dim}")


def parse_config(text: bytes | str, task: str | None = None) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Args:
        text: UTF-8 JSON document.
        task: task requested on the command line; must agree with the
            document's ``task`` key when both are present.

    Raises:
        ConfigError: naming the offending key (or line/column for JSON syntax errors).
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError("", f"config is not valid UTF-8: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    if not isinstance(raw, dict):
        raise ConfigError("", "top level must be a JSON object")
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(_loc(err["loc"]) or "<root>", err["msg"]) from exc

    if task is not None:
        if task not in TASKS:
            raise ConfigError("task", f"unknown task {task!r}")
        if cfg.task is not None and cfg.task != task:
            raise ConfigError("task", f"config is for {cfg.task!r}, command line asked for {task!r}")
        cfg = cfg.model_copy(update={"task": task})
    if cfg.task is None:
        raise ConfigError("task", "no task given")

    if cfg.system is not None:
        _check_system(cfg)
    else:
        _check_drive(cfg)
    _check_task(cfg, cfg.task)
    return cfg
