"""Experiment configuration stored as a flat YAML document."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .analysis import JUMP_THRESHOLD, MAP_KINDS, TOL_P, TOL_Q
from .cascade import CASCADE_MODES
from .errors import InvalidParameterError
from .graphs import TOPOLOGIES

SCANS = ("p", "q", "r")


@dataclass(frozen=True)
class Bisection:
    """Bisection search: ``scan='p'`` finds ``p_c`` at each map value,
    ``'q'`` or ``'r'`` bisects the map parameter for the change of order."""

    scan: str = "p"
    tol_p: float = TOL_P
    tol_q: float = TOL_Q
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.scan not in SCANS:
            raise InvalidParameterError(f"bisection.scan must be one of {SCANS}, got {self.scan!r}")
        if not 0 < self.tol_p < 1 or not 0 < self.tol_q < 1:
            raise InvalidParameterError("bisection tolerances must lie in (0, 1)")


@dataclass(frozen=True)
class ApEnSettings:
    m: int = 2
    tolerance_factor: float = 0.2
    length: int = 10_000
    seeds: int = 20

    def __post_init__(self):
        if self.m < 1 or self.length < self.m + 2 or self.seeds < 1:
            raise InvalidParameterError("apen needs m >= 1, length >= m + 2 and seeds >= 1")
        if not self.tolerance_factor > 0:
            raise InvalidParameterError("apen.tolerance_factor must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment. ``q`` and ``r`` hold the map values scanned; exactly
    one of ``p_grid`` and ``bisection`` is set."""

    topology: str = "lattice"
    N: int | None = None
    L: int | None = None
    map_kind: str = "rewired"
    q: tuple = (0.0,)
    r: tuple = ()
    p_grid: tuple | None = None
    bisection: Bisection | None = None
    realizations: int = 10
    master_seed: int = 0
    output_path: str | None = None
    apen: ApEnSettings = field(default_factory=ApEnSettings)
    mean_degree: float = 4.0
    beta: float = 0.1
    exponent: float = 3.0
    jump_threshold: float = JUMP_THRESHOLD
    mode: str = "simultaneous"

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)
        if self.topology not in TOPOLOGIES:
            raise InvalidParameterError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.map_kind not in MAP_KINDS:
            raise InvalidParameterError(f"map_kind must be one of {MAP_KINDS}, got {self.map_kind!r}")
        if self.mode not in CASCADE_MODES:
            raise InvalidParameterError(f"mode must be one of {CASCADE_MODES}, got {self.mode!r}")
        if self.L is not None:
            if self.topology != "lattice":
                raise InvalidParameterError("L applies only to the lattice topology")
            if self.N is not None and self.N != self.L ** 2:
                raise InvalidParameterError(f"N={self.N} disagrees with L={self.L}")
            set_("N", self.L ** 2)
        if self.N is None or self.N < 1:
            raise InvalidParameterError("config needs a positive N (or L for a lattice)")
        if self.topology == "lattice" and self.L is None:
            L = math.isqrt(self.N)
            if L * L != self.N:
                raise InvalidParameterError(f"lattice needs a square N, got {self.N}")
            set_("L", L)
        set_("q", tuple(float(v) for v in _seq(self.q)))
        set_("r", tuple(int(v) for v in _seq(self.r)))
        if any(not 0.0 <= v <= 1.0 for v in self.q):
            raise InvalidParameterError(f"q values must lie in [0, 1], got {list(self.q)}")
        if self.map_kind in ("block_local", "linear", "linear_axis") and not self.r:
            raise InvalidParameterError(f"map_kind {self.map_kind!r} needs r values")
        if self.p_grid is not None:
            if self.bisection is not None:
                raise InvalidParameterError("give either p_grid or bisection, not both")
            grid = tuple(float(v) for v in _seq(self.p_grid))
            if not grid:
                raise InvalidParameterError("p_grid is empty")
            if any(not 0.0 <= v <= 1.0 for v in grid) or list(grid) != sorted(grid):
                raise InvalidParameterError("p_grid must be sorted inside [0, 1]")
            set_("p_grid", grid)
        elif self.bisection is None:
            set_("bisection", Bisection())
        elif isinstance(self.bisection, dict):
            set_("bisection", Bisection(**self.bisection))
        if isinstance(self.apen, dict):
            set_("apen", ApEnSettings(**self.apen))
        if self.realizations < 1:
            raise InvalidParameterError(f"realizations must be >= 1, got {self.realizations}")
        if self.master_seed < 0 or self.master_seed >= 2 ** 64:
            raise InvalidParameterError("master_seed must be an unsigned 64-bit integer")
        if not 0 < self.jump_threshold < 1:
            raise InvalidParameterError("jump_threshold must lie in (0, 1)")

    @property
    def map_values(self) -> tuple:
        """The scanned map parameters: ``q`` for rewired maps, ``r`` otherwise."""
        if self.map_kind == "rewired":
            return self.q
        if self.map_kind == "identity":
            return (0.0,)
        return self.r

    def to_dict(self) -> dict:
        d = asdict(self)
        d["q"], d["r"] = list(self.q), list(self.r)
        if self.p_grid is not None:
            d["p_grid"] = list(self.p_grid)
        return d

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise InvalidParameterError("config document must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidParameterError(str(exc)) from None

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            d = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise InvalidParameterError(f"malformed config: {exc}") from None
        return cls.from_dict(d or {})

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise InvalidParameterError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.loads(text)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.dump())
        return path

    def header(self) -> dict:
        """Settings written at the top of every output file."""
        from .analysis import survival_threshold
        return {
            "topology": self.topology, "N": self.N, "map_kind": self.map_kind,
            "realizations": self.realizations, "master_seed": self.master_seed,
            "mean_degree": self.mean_degree, "beta": self.beta, "exponent": self.exponent,
            "m": self.apen.m, "tolerance_factor": self.apen.tolerance_factor,
            "jump_threshold": self.jump_threshold, "eps_surv": survival_threshold(self.N),
            "mode": self.mode,
        }


def _seq(v):
    if v is None:
        return ()
    if isinstance(v, (list, tuple)):
        return v
    return (v,)
