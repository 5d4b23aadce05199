"""Run configuration: a flat key = value text file with validation.

Unknown keys, malformed values and parameter-range violations are reported
with actionable messages; the CLI maps them to exit code 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .grid import Grid
from .solver import exponents


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    theta: float = 2.0
    kappa: float = 0.01
    kappa_prime: float = 0.025
    grid_n: int = 64
    dt: float = 1e-3
    t_final: float = 0.25
    t_burn: float = 10.0
    eps_list: list = field(default_factory=lambda: [0.8, 0.4, 0.2, 0.1])
    seeds: int = 16
    tol: float = 1e-8
    max_iter: int = 25
    out_dir: str = "out"
    chi_profile: str = "bump"
    regularity_eps: float = 0.005
    regularity_dt: float = 0.02
    chaos_seeds: int = 256
    chaos_burn: float = 1.0
    workers: int = 1

    def seed_values(self, master_seed: int) -> list[int]:
        """Per-run seeds, deterministic in (master_seed, index)."""
        return [master_seed * 1_000_003 + i for i in range(self.seeds)]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def validate(self) -> "RunConfig":
        try:
            Grid(self.grid_n)
        except ValueError as exc:
            raise ConfigError(f"grid_n: {exc}") from exc
        try:
            exponents(self.theta, self.kappa, self.kappa_prime)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.t_final <= 0:
            raise ConfigError("t_final must be positive")
        if abs(round(self.t_final / self.dt) * self.dt - self.t_final) > 1e-9:
            raise ConfigError("t_final must be an integer multiple of dt")
        if self.t_burn < 0:
            raise ConfigError("t_burn must be >= 0")
        if not self.eps_list:
            raise ConfigError("eps_list must not be empty")
        if any(e2 >= e1 for e1, e2 in zip(self.eps_list, self.eps_list[1:])):
            raise ConfigError("eps_list must be strictly decreasing")
        if any(not 0.0 < e <= 1.0 for e in self.eps_list):
            raise ConfigError("eps values must lie in (0, 1]")
        if not 0.0 < self.regularity_eps <= 1.0:
            raise ConfigError("regularity_eps must lie in (0, 1]")
        if self.regularity_dt <= 0:
            raise ConfigError("regularity_dt must be positive")
        if self.seeds < 1 or self.chaos_seeds < 1:
            raise ConfigError("seed counts must be >= 1")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.chi_profile not in ("bump", "cosine_taper"):
            raise ConfigError("chi_profile must be 'bump' or 'cosine_taper'")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self


_PARSERS = {
    "theta": float, "kappa": float, "kappa_prime": float, "grid_n": int,
    "dt": float, "t_final": float, "t_burn": float,
    "eps_list": lambda s: [float(x) for x in s.split(",") if x.strip()],
    "seeds": int, "tol": float, "max_iter": int, "out_dir": str,
    "chi_profile": str, "regularity_eps": float, "regularity_dt": float,
    "chaos_seeds": int,
    "chaos_burn": float, "workers": int,
}


def parse_config(path) -> RunConfig:
    cfg = RunConfig()
    text = Path(path).read_text()
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _PARSERS:
            known = ", ".join(sorted(_PARSERS))
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} (known: {known})")
        try:
            updates[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return replace(cfg, **updates).validate()
