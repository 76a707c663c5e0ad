"""Run configuration for peclet-lab experiments."""

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import toml

from peclet.core.discretize import OperatorKind
from peclet.core.grid import Domain
from peclet.core.profiles import BUILTIN_DOMAINS, ShearProfile, make_profile
from peclet.core.stochastic import NoiseSpectrum
from peclet.core.weights import LADDERS

EXPERIMENTS = (
    "sweep-decay",
    "pseudospec",
    "hypo-verify",
    "specgap",
    "mixing",
    "kuksin",
    "oracle-check",
)


@dataclass
class ProfileSpec:
    """Which shear to build: a built-in name or a generic series with coefficients."""

    name: str
    domain: Optional[str] = None
    coeffs: list[Any] = field(default_factory=list)

    @classmethod
    def parse(cls, value: Any) -> "ProfileSpec":
        if isinstance(value, str):
            return cls(name=value)
        return cls(
            name=value["name"],
            domain=value.get("domain"),
            coeffs=list(value.get("coeffs", [])),
        )

    @property
    def resolved_domain(self) -> Domain:
        if self.domain is not None:
            return Domain.parse(self.domain)
        return BUILTIN_DOMAINS.get(self.name, Domain.TORUS)

    def build(self, grid_n: int) -> ShearProfile:
        return make_profile(self.name, self.resolved_domain, grid_n, self.coeffs)


@dataclass
class GridSpec:
    n: int = 512
    auto_refine: bool = False


@dataclass
class HypoSpec:
    """ε-settings of the weight construction."""

    eps_tilde: float = 0.1
    eps_beta: Optional[list[float]] = None
    c0: float = 4.0
    kappa0: float = 1e-2
    ladder: str = "calibrated"
    kappa_cal: float = 1.5e-4
    t_final: float = 20.0
    states: int = 20
    lemmas: Optional[list[str]] = None

    # keys spelled as in the ledger notation
    ALIASES = {"C0": "c0", "kappa_0": "kappa0"}

    @classmethod
    def parse(cls, data: dict[str, Any]) -> "HypoSpec":
        values = {cls.ALIASES.get(key, key): value for key, value in data.items()}
        return cls(**values)


@dataclass
class NoiseSpec:
    K: int = 4
    J: int = 4
    kill_zero_mode: bool = False
    law: str = "rational"
    entries: list[list[float]] = field(default_factory=list)

    def spectrum(self) -> NoiseSpectrum:
        return NoiseSpectrum.from_config(asdict(self))


@dataclass
class TimeSpec:
    """Time grids and step controls shared by the propagating experiments."""

    dt: Optional[float] = None
    window: list[float] = field(default_factory=lambda: [1e-8, 1e-1])
    t_grid: Optional[list[float]] = None
    kt_grid: Optional[list[float]] = None
    budget: float = 1e6


@dataclass
class RunConfig:
    """A single experiment run; one JSON (or TOML) document."""

    profile: ProfileSpec
    experiment: Optional[str] = None
    kind: str = "elliptic"
    nu: list[float] = field(default_factory=lambda: [1e-3])
    k: list[float] = field(default_factory=lambda: [1.0])
    a: list[float] = field(default_factory=lambda: [0.9])
    sigma: list[float] = field(default_factory=lambda: [1e-2, 1e-4, 1e-6])
    orders: list[int] = field(default_factory=lambda: [1, 2, 3])
    grid: GridSpec = field(default_factory=GridSpec)
    hypo: HypoSpec = field(default_factory=HypoSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    time: TimeSpec = field(default_factory=TimeSpec)
    seed: int = 0
    workers: int = 1
    out: str = "results"
    timestamp: bool = False

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        config = cls(
            profile=ProfileSpec.parse(data["profile"]),
            experiment=data.get("experiment"),
            kind=data.get("kind", "elliptic"),
            nu=[float(v) for v in data.get("nu", [1e-3])],
            k=[float(v) for v in data.get("k", [1.0])],
            a=[float(v) for v in data.get("a", [0.9])],
            sigma=[float(v) for v in data.get("sigma", [1e-2, 1e-4, 1e-6])],
            orders=[int(v) for v in data.get("orders", [1, 2, 3])],
            grid=GridSpec(**data.get("grid", {})),
            hypo=HypoSpec.parse(data.get("hypo", {})),
            noise=NoiseSpec(**data.get("noise", {})),
            time=TimeSpec(**data.get("time", {})),
            seed=int(data.get("seed", 0)),
            workers=int(data.get("workers", 1)),
            out=str(data.get("out", "results")),
            timestamp=bool(data.get("timestamp", False)),
        )
        config.validate()
        return config

    @classmethod
    def from_file(cls, config_path: Path) -> "RunConfig":
        """Load a run configuration from a JSON or TOML file."""
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        try:
            with open(config_path) as f:
                if config_path.suffix == ".toml":
                    data = toml.load(f)
                else:
                    data = json.load(f)
            return cls.from_dict(data)
        except KeyError as e:
            raise ValueError(f"Missing required configuration key: {e}") from e
        except Exception as e:
            raise ValueError(f"Error parsing configuration file: {e}") from e

    def validate(self) -> None:
        if self.experiment is not None and self.experiment not in EXPERIMENTS:
            raise ValueError(f"Unknown experiment '{self.experiment}'")
        OperatorKind.parse(self.kind)
        for name in ("nu", "k", "a", "sigma", "orders"):
            if not getattr(self, name):
                raise ValueError(f"Parameter list '{name}' must not be empty")
        if any(nu < 0.0 for nu in self.nu):
            raise ValueError("Viscosities must be non-negative")
        if self.hypo.ladder not in LADDERS:
            raise ValueError(f"Unknown hypo.ladder '{self.hypo.ladder}'")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if len(self.time.window) != 2 or not 0.0 < self.time.window[0] < self.time.window[1]:
            raise ValueError("time.window must be [low, high] with 0 < low < high")

    def with_overrides(
        self,
        experiment: Optional[str] = None,
        nu: Optional[float] = None,
        k: Optional[float] = None,
        workers: Optional[int] = None,
        seed: Optional[int] = None,
        out: Optional[str] = None,
    ) -> "RunConfig":
        """Copy with scalar CLI overrides applied; lists collapse to the single value."""
        updated = replace(
            self,
            experiment=experiment or self.experiment,
            nu=[nu] if nu is not None else self.nu,
            k=[k] if k is not None else self.k,
            workers=workers if workers is not None else self.workers,
            seed=seed if seed is not None else self.seed,
            out=out if out is not None else self.out,
        )
        updated.validate()
        return updated

    def to_dict(self) -> dict[str, Any]:
        """Plain-data form; JSON-serializable and accepted by from_dict."""
        return asdict(self)

    def save_to_file(self, config_path: Path) -> None:
        config_path = Path(config_path)
        with open(config_path, "w") as f:
            if config_path.suffix == ".toml":
                toml.dump(_drop_none(self.to_dict()), f)
            else:
                json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def output_path(self) -> Path:
        return Path(self.out)

    @property
    def operator_kind(self) -> OperatorKind:
        return OperatorKind.parse(self.kind)


def _drop_none(data: Any) -> Any:
    # TOML has no null
    if isinstance(data, dict):
        return {key: _drop_none(value) for key, value in data.items() if value is not None}
    return data
