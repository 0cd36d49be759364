"""Flat key=value run configuration with documented defaults and overrides."""
from __future__ import annotations

from dataclasses import dataclass, field, fields

from .data import GenConfig
from .errors import ConfigError
from .model import ModelConfig, VARIANTS
from .retrieval import RetrievalConfig
from .training import TrainConfig


def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes"):
        return True
    if s.lower() in ("0", "false", "no"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _parse_int_list(s: str):
    return tuple(int(x) for x in str(s).split(",") if x != "")


def _parse_str_list(s: str):
    return tuple(x.strip() for x in str(s).split(",") if x.strip())


@dataclass
class RunConfig:
    # synthetic generator
    T: int = 3
    users: int = 300
    items_per_domain: int = 200
    overlap_fraction: float = 0.2
    interactions_per_user: int = 10
    latent_dim: int = 8
    domain_correlation: float = 0.8
    seed: int = 0
    # dataset preparation
    binarize_threshold: int = 4
    k_core: int = 5
    # model
    dims: tuple = (128, 64)
    heads: int = 4
    k: int = 20
    neighbors: int = 10
    temperature: float = 0.2
    d_max: int = 6
    variant: str = "ehi_plus"
    score: str = "inner"
    nonlinearity: str = "leaky_relu"
    retrieval_method: str = "embedding"
    time_window: int = 604800
    refresh_interval: int = 100
    similarity: str = "inner"
    # training
    batch_size: int = 512
    negatives: int = 64
    epochs: int = 30
    steps: int = 0  # 0 = use epochs
    checkpoint_every: int = 0
    log_every: int = 10
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # evaluation
    eval_ks: tuple = (20, 50)
    # ablation driver
    variants: tuple = ("vanilla", "hu_plus", "ehi_plus")
    seeds: tuple = (1, 2, 3)
    domain_sweep: bool = False
    # bookkeeping: which keys the user set explicitly (not a config key)
    explicit_keys: set = field(default_factory=set)

    def gen_config(self) -> GenConfig:
        return GenConfig(T=self.T, users=self.users,
                         items_per_domain=self.items_per_domain,
                         overlap_fraction=self.overlap_fraction,
                         interactions_per_user=self.interactions_per_user,
                         latent_dim=self.latent_dim,
                         domain_correlation=self.domain_correlation)

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            dims=tuple(self.dims), heads=self.heads, k=self.k,
            neighbors=self.neighbors, temperature=self.temperature,
            d_max=self.d_max, variant=self.variant, score=self.score,
            nonlinearity=self.nonlinearity,
            retrieval=RetrievalConfig(method=self.retrieval_method, k=self.k,
                                      time_window=self.time_window,
                                      refresh_interval=self.refresh_interval,
                                      similarity=self.similarity))

    def train_config(self) -> TrainConfig:
        return TrainConfig(batch_size=self.batch_size, negatives=self.negatives,
                           epochs=self.epochs,
                           steps=self.steps if self.steps > 0 else None,
                           checkpoint_every=self.checkpoint_every,
                           log_every=self.log_every, lr=self.lr,
                           beta1=self.beta1, beta2=self.beta2, eps=self.eps,
                           seed=self.seed)

    def validate(self) -> None:
        self.gen_config().validate()
        self.model_config().validate()
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r} in variants")

    def resolved_dump(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "explicit_keys":
                continue
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                val = ",".join(str(x) for x in val)
            lines.append(f"{f.name}={val}")
        return "\n".join(lines) + "\n"


_PARSERS = {
    int: int,
    float: float,
    str: str,
    bool: _parse_bool,
    tuple: None,  # handled per-field below
}

_TUPLE_FIELDS = {
    "dims": _parse_int_list,
    "eval_ks": _parse_int_list,
    "seeds": _parse_int_list,
    "variants": _parse_str_list,
}


def _coerce(name: str, raw: str, cfg: RunConfig):
    for f in fields(cfg):
        if f.name == "explicit_keys":
            continue
        if f.name == name:
            if name in _TUPLE_FIELDS:
                return _TUPLE_FIELDS[name](raw)
            typ = type(getattr(cfg, name))
            try:
                return _PARSERS[typ](raw)
            except (KeyError, ValueError) as e:
                raise ConfigError(f"bad value for {name}: {raw!r}") from e
    raise ConfigError(f"unknown config key {name!r}")


def load_run_config(path: str | None = None, overrides=()) -> RunConfig:
    """Config file lines are `key=value`; `#` comments and blanks ignored.
    Unknown keys are rejected. Overrides apply after the file."""
    cfg = RunConfig()
    pairs = []
    if path is not None:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, val = line.split("=", 1)
                pairs.append((key.strip(), val.strip()))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value: {item!r}")
        key, val = item.split("=", 1)
        pairs.append((key.strip(), val.strip()))
    explicit = set()
    for key, val in pairs:
        setattr(cfg, key, _coerce(key, val, cfg))
        explicit.add(key)
    cfg.explicit_keys = explicit
    return cfg


MODEL_KEYS = frozenset({
    "dims", "heads", "k", "neighbors", "temperature", "d_max", "variant",
    "score", "nonlinearity", "retrieval_method", "time_window",
    "refresh_interval", "similarity",
})
