"""Experiment configuration: one structured file drives every command.

TOML or JSON, chosen by file extension. Every run must state its master
seed explicitly; there is no wall-clock fallback, so rerunning a config
reproduces the experiment byte for byte. The master seed fans out to each
randomized stage through purpose-tagged derivation, which keeps unrelated
stages decorrelated even when new ones are added.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import nn, seeds
from .learning import CalibrationConfig
from .pipeline import (BackendBinding, EmbeddingTable, FeatureProjection,
                       StageContext, Vocabulary)
from .pretrain import DEFAULT_CLASSES, PretrainConfig


class ConfigError(ValueError):
    """The configuration file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    out_dir: str = "out"
    figures_path: str | None = None
    raster_width: int = 64
    raster_height: int = 64
    vocabulary: tuple[str, ...] = DEFAULT_CLASSES
    embedding_dim: int = 32
    alpha: float = 0.5
    describe_k: int = 3
    message_len: int = 3
    similarity_space: str = "probs"
    backends: dict = field(default_factory=dict)
    endpoint: str | None = None
    net_hidden: int = 64
    net_conv_widths: tuple[int, ...] = (8, 8, 16, 16)
    # light pretraining on purpose: heavily trained perceivers are already
    # aligned and stop gaining from success-filtered calibration
    pretrain_epochs: int = 2
    pretrain_lr: float = 0.08
    pretrain_batch: int = 32
    pretrain_val_fraction: float = 0.15
    samples_per_class: int = 100
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    trials: int = 10
    runs: int = 10
    oracle_receiver: bool = False

    def __post_init__(self):
        if self.raster_width < 16 or self.raster_height < 16:
            raise ConfigError("raster size must be at least 16x16")
        if self.embedding_dim < 2:
            raise ConfigError("embedding dim must be >= 2")
        if self.trials < 1 or self.runs < 1:
            raise ConfigError("trials and runs must be >= 1")
        if self.similarity_space not in ("probs", "features"):
            raise ConfigError(
                f"unknown similarity space {self.similarity_space!r}")
        for stage, sel in self.backends.items():
            if stage not in ("perceive", "imagine", "describe",
                             "interpret", "identify"):
                raise ConfigError(f"unknown stage {stage!r} in backends")
            if sel not in ("builtin", "mock", "remote"):
                raise ConfigError(f"unknown backend {sel!r} for {stage}")
        if "remote" in self.backends.values() and not self.endpoint:
            raise ConfigError("remote backend requires an endpoint")

    # ------------------------------------------------- derived objects

    def make_vocabulary(self) -> Vocabulary:
        return Vocabulary(tuple(self.vocabulary))

    def make_netspec(self) -> nn.NetSpec:
        return nn.default_netspec(
            num_classes=len(self.vocabulary), hidden=self.net_hidden,
            input_hw=(self.raster_height, self.raster_width),
            conv_widths=tuple(self.net_conv_widths))

    def make_bindings(self) -> BackendBinding:
        return BackendBinding(endpoint=self.endpoint, **self.backends)

    def make_context(self) -> StageContext:
        netspec = self.make_netspec()
        emb = EmbeddingTable.seeded(self.make_vocabulary(),
                                    self.embedding_dim, self.seed)
        proj = FeatureProjection.seeded(nn.feature_dim(netspec),
                                        self.embedding_dim, self.seed)
        return StageContext(netspec=netspec, emb=emb, projection=proj,
                            alpha=self.alpha, describe_k=self.describe_k,
                            message_len=self.message_len,
                            space=self.similarity_space)

    def make_pretrain_config(self, role: str) -> PretrainConfig:
        """Per-role hyperparameters; each agent trains from its own seed."""
        return PretrainConfig(
            epochs=self.pretrain_epochs, lr=self.pretrain_lr,
            batch=self.pretrain_batch,
            val_fraction=self.pretrain_val_fraction,
            seed=seeds.derive(self.seed, f"{role}-pretrain"))

    def corpus_seed(self, role: str) -> int:
        return seeds.derive(self.seed, f"{role}-corpus")

    def echo(self) -> dict:
        """JSON-ready snapshot of the experiment parameters, for provenance
        in reports.  Output location is deliberately excluded so the same
        experiment writes byte-identical artifacts anywhere."""
        return {
            "seed": self.seed,
            "figures_path": self.figures_path,
            "raster": {"width": self.raster_width,
                       "height": self.raster_height},
            "vocabulary": list(self.vocabulary),
            "embedding_dim": self.embedding_dim,
            "alpha": self.alpha, "describe_k": self.describe_k,
            "message_len": self.message_len,
            "similarity_space": self.similarity_space,
            "backends": dict(sorted(self.backends.items())),
            "endpoint": self.endpoint,
            "net": {"hidden": self.net_hidden,
                    "conv_widths": list(self.net_conv_widths)},
            "pretrain": {"epochs": self.pretrain_epochs,
                         "lr": self.pretrain_lr,
                         "batch": self.pretrain_batch,
                         "val_fraction": self.pretrain_val_fraction,
                         "samples_per_class": self.samples_per_class},
            "calibration": {
                "batch_size": self.calibration.batch_size,
                "epochs": self.calibration.epochs,
                "patience": self.calibration.patience,
                "lr": self.calibration.lr,
                "loss_kind": self.calibration.loss_kind,
                "max_passes": self.calibration.max_passes},
            "trials": self.trials, "runs": self.runs,
            "oracle_receiver": self.oracle_receiver,
        }


def _read_raw(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"bad TOML in {path}: {err}") from err
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"bad JSON in {path}: {err}") from err
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return raw
    raise ConfigError(f"unsupported config extension {path.suffix!r} "
                      f"(use .toml or .json)")


def _get(raw: dict, section: str, key: str, default, kinds):
    value = raw.get(section, {}).get(key, default)
    if value is default:
        return default
    if not isinstance(value, kinds) or isinstance(value, bool) != (kinds is bool):
        raise ConfigError(f"[{section}] {key}: wrong type {type(value).__name__}")
    return value


def load_config(path, seed_override: int | None = None,
                out_override: str | None = None,
                backend_override: str | None = None,
                endpoint_override: str | None = None) -> ExperimentConfig:
    """Read and validate a config file; overrides come from CLI flags."""
    p = Path(path)
    raw = _read_raw(p)

    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        raise ConfigError("seed is required (set it in the config file "
                          "or pass --seed)")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")

    vocabulary = DEFAULT_CLASSES
    vocab_section = raw.get("vocabulary", {})
    if "labels" in vocab_section:
        labels = vocab_section["labels"]
        if not isinstance(labels, list) or not all(
                isinstance(t, str) for t in labels):
            raise ConfigError("[vocabulary] labels must be a list of strings")
        vocabulary = tuple(labels)
    elif "path" in vocab_section:
        vp = Path(vocab_section["path"])
        if not vp.is_absolute():
            vp = p.parent / vp
        if not vp.exists():
            raise ConfigError(f"vocabulary file not found: {vp}")
        vocabulary = tuple(
            line.strip() for line in vp.read_text(encoding="utf-8").splitlines()
            if line.strip())

    figures_path = raw.get("figures_path")
    if figures_path is not None:
        fp = Path(figures_path)
        if not fp.is_absolute():
            fp = p.parent / fp
        if not fp.exists():
            raise ConfigError(f"figures file not found: {fp}")
        figures_path = str(fp)

    backends = dict(raw.get("backends", {}))
    endpoint = backends.pop("endpoint", None)
    if backend_override is not None:
        if backend_override == "remote":
            backends = {"imagine": "remote", "describe": "remote"}
        else:
            backends = {stage: backend_override for stage in
                        ("perceive", "imagine", "describe",
                         "interpret", "identify")}
    if endpoint_override is not None:
        endpoint = endpoint_override

    cal_raw = raw.get("calibration", {})
    try:
        calibration = CalibrationConfig(
            batch_size=_get(raw, "calibration", "batch_size", 1, int),
            epochs=_get(raw, "calibration", "epochs", 1, int),
            patience=_get(raw, "calibration", "patience", 10, int),
            lr=float(cal_raw.get("lr", 0.05)),
            loss_kind=_get(raw, "calibration", "loss_kind", "mse", str),
            max_passes=_get(raw, "calibration", "max_passes", 100, int))
    except ValueError as err:
        raise ConfigError(f"bad calibration settings: {err}") from err

    try:
        return ExperimentConfig(
            seed=seed,
            out_dir=out_override or raw.get("out_dir", "out"),
            figures_path=figures_path,
            raster_width=_get(raw, "raster", "width", 64, int),
            raster_height=_get(raw, "raster", "height", 64, int),
            vocabulary=vocabulary,
            embedding_dim=_get(raw, "embedding", "dim", 32, int),
            alpha=float(raw.get("pipeline", {}).get("alpha", 0.5)),
            describe_k=_get(raw, "pipeline", "describe_k", 3, int),
            message_len=_get(raw, "pipeline", "message_len", 3, int),
            similarity_space=_get(raw, "pipeline", "similarity_space",
                                  "probs", str),
            backends=backends,
            endpoint=endpoint,
            net_hidden=_get(raw, "net", "hidden", 64, int),
            net_conv_widths=tuple(raw.get("net", {}).get(
                "conv_widths", (8, 8, 16, 16))),
            pretrain_epochs=_get(raw, "pretrain", "epochs", 2, int),
            pretrain_lr=float(raw.get("pretrain", {}).get("lr", 0.08)),
            pretrain_batch=_get(raw, "pretrain", "batch", 32, int),
            pretrain_val_fraction=float(raw.get("pretrain", {}).get(
                "val_fraction", 0.15)),
            samples_per_class=_get(raw, "pretrain", "samples_per_class",
                                   100, int),
            calibration=calibration,
            trials=_get(raw, "experiment", "trials", 10, int),
            runs=_get(raw, "experiment", "runs", 10, int),
            oracle_receiver=bool(raw.get("experiment", {}).get(
                "oracle_receiver", False)))
    except (ValueError, TypeError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err)) from err
