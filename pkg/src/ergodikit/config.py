"""Run configuration: TOML file plus command-line overrides."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import tomli

from .errors import ValidationError
from .sampler import DirichletTensorPrior, OrderDistribution

DEFAULT_NMAX = 8
DEFAULT_GRID = (100, 1000, 10000, 50000)


class ConfigError(ValidationError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass(frozen=True)
class RunConfig:
    alphabet_size: int = 2
    nmax: int = DEFAULT_NMAX
    seed: int = 0
    beta: tuple[float, ...] | float = 1.0
    alpha: float = 1.0
    alpha_by_order: tuple[tuple[int, float], ...] = ()
    n: int = 1000
    order: int | None = None
    tensor: str | None = None
    grid: tuple[int, ...] = DEFAULT_GRID
    depth: int = 6
    out: str = "out"
    threads: int = 1

    def validate(self) -> "RunConfig":
        def need(cond, path, msg):
            if not cond:
                raise ConfigError(f"{path}: {msg}")

        need(isinstance(self.alphabet_size, int) and self.alphabet_size >= 2, "alphabet_size", "must be an integer >= 2")
        need(isinstance(self.nmax, int) and self.nmax >= 0, "nmax", "must be a nonnegative integer")
        need(isinstance(self.seed, int) and self.seed >= 0, "seed", "must be a nonnegative integer")
        if isinstance(self.beta, tuple):
            need(len(self.beta) == self.nmax + 1, "prior.beta", f"needs {self.nmax + 1} entries (orders 0..nmax)")
            for i, b in enumerate(self.beta):
                need(b >= 0, f"prior.beta[{i}]", "must be nonnegative")
            need(sum(self.beta) > 0, "prior.beta", "total mass must be positive")
        else:
            need(self.beta > 0, "prior.beta", "total mass must be positive")
        need(self.alpha > 0, "prior.alpha", "must be positive")
        for k, a in self.alpha_by_order:
            need(0 <= k <= self.nmax, f"prior.alpha_by_order.{k}", "order outside 0..nmax")
            need(a > 0, f"prior.alpha_by_order.{k}", "must be positive")
        need(isinstance(self.n, int) and self.n >= 1, "simulate.n", "must be a positive integer")
        if self.order is not None:
            need(isinstance(self.order, int) and self.order >= 0, "simulate.order", "must be a nonnegative integer")
        if self.tensor is not None:
            need(Path(self.tensor).is_file(), "simulate.tensor", f"file {self.tensor!r} not found")
        need(len(self.grid) > 0 and all(isinstance(m, int) and m >= 1 for m in self.grid),
             "sweep.grid", "must be a nonempty list of positive integers")
        need(list(self.grid) == sorted(set(self.grid)), "sweep.grid", "must be strictly increasing")
        need(isinstance(self.depth, int) and self.depth >= 0, "check.depth", "must be a nonnegative integer")
        need(isinstance(self.threads, int) and self.threads >= 1, "threads", "must be a positive integer")
        return self

    def order_prior(self) -> OrderDistribution:
        if isinstance(self.beta, tuple):
            return OrderDistribution(list(self.beta))
        return OrderDistribution.uniform(self.nmax, mass=self.beta)

    def alpha_for(self, order: int) -> float:
        return dict(self.alpha_by_order).get(order, self.alpha)

    def tensor_priors(self) -> list[DirichletTensorPrior]:
        return [DirichletTensorPrior.symmetric(N, self.alphabet_size, self.alpha_for(N)) for N in range(self.nmax + 1)]

    def digest(self) -> str:
        """Hash of every setting that can influence results (not output location)."""
        d = asdict(self)
        for key in ("out", "threads"):
            d.pop(key)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_SECTIONS = {
    "": {"alphabet_size", "nmax", "seed", "out", "threads"},
    "prior": {"beta", "alpha", "alpha_by_order"},
    "simulate": {"n", "order", "tensor"},
    "sweep": {"grid"},
    "check": {"depth"},
}


def config_from_mapping(doc: Mapping[str, Any], base_dir: Path | None = None) -> RunConfig:
    values: dict[str, Any] = {}
    for key, val in doc.items():
        if isinstance(val, Mapping):
            if key not in _SECTIONS or not key:
                raise ConfigError(f"{key}: unknown section")
            for sub, v in val.items():
                if sub not in _SECTIONS[key]:
                    raise ConfigError(f"{key}.{sub}: unknown key")
                values[sub] = v
        elif key in _SECTIONS[""]:
            values[key] = val
        else:
            raise ConfigError(f"{key}: unknown key")

    if "beta" in values:
        b = values["beta"]
        if isinstance(b, list):
            values["beta"] = tuple(float(v) for v in b)
        elif isinstance(b, (int, float)):
            values["beta"] = float(b)
        else:
            raise ConfigError("prior.beta: must be a number or a list of numbers")
    if "alpha_by_order" in values:
        try:
            values["alpha_by_order"] = tuple(sorted((int(k), float(v)) for k, v in values["alpha_by_order"].items()))
        except (AttributeError, ValueError):
            raise ConfigError("prior.alpha_by_order: must map order numbers to positive values") from None
    if "alpha" in values:
        values["alpha"] = float(values["alpha"])
    if "grid" in values:
        if not isinstance(values["grid"], list):
            raise ConfigError("sweep.grid: must be a list of integers")
        values["grid"] = tuple(values["grid"])
    if values.get("tensor") is not None and base_dir is not None:
        values["tensor"] = str((base_dir / values["tensor"]))
    return RunConfig(**values)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_mapping(doc, base_dir=path.parent)


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    changes = {k: v for k, v in overrides.items() if v is not None}
    if "grid" in changes and isinstance(changes["grid"], str):
        try:
            changes["grid"] = tuple(int(tok) for tok in changes["grid"].split(",") if tok.strip())
        except ValueError:
            raise ConfigError(f"--grid: cannot parse {changes['grid']!r}") from None
    if "threads" not in changes and os.environ.get("ERGODIKIT_THREADS"):
        try:
            changes["threads"] = int(os.environ["ERGODIKIT_THREADS"])
        except ValueError:
            raise ConfigError("ERGODIKIT_THREADS: must be an integer") from None
    return replace(cfg, **changes).validate()
