# lib/config.py
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import find_dotenv, load_dotenv

from lib.errors import ConfigError

_oracle_config = None

# RENYI_BET_* defaults from a .env in or above the working directory; the shell wins
_env_path = find_dotenv(usecwd=True)
load_dotenv(_env_path, override=False)

PROJECT_ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config" / "oracle.json"

DEFAULT_TOLERANCES: Dict[str, float] = {
    "identity": 1e-9,
    "inequality": 1e-9,
    "optimality": 1e-6,
    "oracle_recovery": 1e-4,
    "fixture": 1e-6,
    "monotone_grid": 1e-10,
    "kl_extrapolation": 1e-4,
    "mc_stderr_multiple": 4.0,
}


@dataclass(frozen=True)
class OracleConfig:
    """Seeds, sample counts and tolerances for every oracle and suite."""

    seed: int = 42
    grid_resolution: float = 1e-3
    # Upper bound on lattice points per simplex; larger simplices get a coarser grid.
    grid_budget: int = 20000
    dirichlet_samples: int = 20000
    refine_samples: int = 500
    refine_concentration: float = 200.0
    mc_samples: int = 1_000_000
    mc_batches: int = 50
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self) -> None:
        for name in ("grid_budget", "dirichlet_samples", "refine_samples", "mc_samples", "mc_batches"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"Oracle config '{name}' must be a positive count, got {getattr(self, name)!r}.")
        if not 0.0 < self.grid_resolution < 0.5:
            raise ConfigError(f"Oracle config 'grid_resolution' must lie in (0, 0.5), got {self.grid_resolution!r}.")
        if self.refine_concentration <= 0:
            raise ConfigError("Oracle config 'refine_concentration' must be positive.")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"Oracle config 'seed' must be a 64-bit unsigned integer, got {self.seed!r}.")
        if self.mc_samples < self.mc_batches:
            raise ConfigError("Oracle config 'mc_samples' must be at least 'mc_batches'.")

    def tolerance(self, check: str) -> float:
        try:
            return float(self.tolerances[check])
        except KeyError:
            raise ConfigError(f"No tolerance configured for check '{check}'.") from None

    def with_overrides(self, **overrides: Any) -> "OracleConfig":
        clean = {k: v for k, v in overrides.items() if v is not None}
        if "tolerances" in clean:
            clean["tolerances"] = {**self.tolerances, **clean["tolerances"]}
        return replace(self, **clean)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _env_int(name: str) -> Optional[int]:
    """Integer env var or None; raise a clear error if it is set but malformed."""
    raw = os.getenv(name, "").strip()
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        where = _env_path if _env_path else "(no .env found)"
        raise ConfigError(
            f"Environment variable '{name}' must be an integer, got {raw!r}. "
            f"Loaded .env from: {where}."
        ) from None


def _read_config_file(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(
            f"Oracle config file '{path}' does not exist. "
            f"Set RENYI_BET_ORACLE_CONFIG or restore config/oracle.json."
        )
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Oracle config file '{path}' is not valid JSON: {exc}") from exc
    known = set(OracleConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Oracle config file '{path}' has unknown fields {unknown}.")
    return data


def load_oracle_config(path: Optional[Path] = None, **overrides: Any) -> OracleConfig:
    """
    Build an OracleConfig from file, environment and explicit overrides.
    :param path: JSON config file; defaults to RENYI_BET_ORACLE_CONFIG or config/oracle.json.
    :param overrides: field values that win over everything else (None values are ignored).
    :return: a validated OracleConfig.
    """
    if path is None:
        env_path = os.getenv("RENYI_BET_ORACLE_CONFIG", "").strip()
        path = Path(env_path) if env_path else DEFAULT_CONFIG_PATH
    path = Path(path)
    # A missing default file falls back to built-in defaults; an explicit path must exist.
    data = {} if path == DEFAULT_CONFIG_PATH and not path.exists() else _read_config_file(path)
    if "tolerances" in data:
        data["tolerances"] = {**DEFAULT_TOLERANCES, **data["tolerances"]}

    env_seed = _env_int("RENYI_BET_SEED")
    if env_seed is not None:
        data["seed"] = env_seed
    env_mc = _env_int("RENYI_BET_MC_SAMPLES")
    if env_mc is not None:
        data["mc_samples"] = env_mc

    return OracleConfig(**data).with_overrides(**overrides)


def get_oracle_config() -> OracleConfig:
    global _oracle_config
    if _oracle_config is None:
        _oracle_config = load_oracle_config()
    return _oracle_config


def resolve_seed(cli_seed: Optional[int] = None, cfg: Optional[OracleConfig] = None) -> int:
    """CLI flag > RENYI_BET_SEED > seed of ``cfg`` (the shared config when omitted)."""
    if cli_seed is not None:
        return int(cli_seed)
    env_seed = _env_int("RENYI_BET_SEED")
    if env_seed is not None:
        return env_seed
    return (cfg if cfg is not None else get_oracle_config()).seed
