"""Experiment configuration: INI-style ``key = value`` text with sections.

See docs/config.md for the schema.  Parsing rejects unknown sections and
keys; :func:`serialize_config` writes every field so that its output parses
back to an equal config.
"""

from __future__ import annotations

import configparser
import dataclasses
import enum
import math
from dataclasses import dataclass

from ampsim.amp import CorrectionMode, TauSource
from ampsim.denoise import BgMmse, SoftThreshold
from ampsim.errors import ConfigError, ParameterError
from ampsim.model import BernoulliGaussianPrior, MatrixEnsemble

DENOISER_KINDS = ("mmse", "soft")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 3000
    delta: float = 0.5
    ensemble: MatrixEnsemble = MatrixEnsemble.GAUSSIAN
    snr_db: float = 20.0
    sparsity_rate: float = 0.1
    active_variance: float = 1.0
    denoiser: str = "mmse"
    alpha: float = 1.14
    mode: CorrectionMode = CorrectionMode.ONSAGER
    tau_source: TauSource = TauSource.ESTIMATE
    num_iterations: int = 30
    trials: int = 200
    seed: int = 0
    record_input_error: tuple = ()
    quantile_count: int = 200
    sweep_n: tuple = ()
    scaling_iteration: int = 29
    output_dir: str = "out"

    def __post_init__(self):
        validate(self)

    @property
    def m(self) -> int:
        return self.measurements_for(self.n)

    def measurements_for(self, n: int) -> int:
        # round half up, not Python's banker's rounding
        return max(1, int(math.floor(self.delta * n + 0.5)))

    @property
    def prior(self) -> BernoulliGaussianPrior:
        return BernoulliGaussianPrior(self.sparsity_rate, self.active_variance)

    def make_denoiser(self):
        if self.denoiser == "mmse":
            return BgMmse(self.prior)
        return SoftThreshold(self.alpha)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# section -> (key, field) pairs, in serialization order
SCHEMA = {
    "problem": (("n", "n"), ("delta", "delta"), ("ensemble", "ensemble"), ("snr_db", "snr_db")),
    "prior": (("sparsity_rate", "sparsity_rate"), ("active_variance", "active_variance")),
    "denoiser": (("kind", "denoiser"), ("alpha", "alpha")),
    "algorithm": (("mode", "mode"), ("tau_source", "tau_source"), ("num_iterations", "num_iterations")),
    "experiment": (
        ("trials", "trials"),
        ("seed", "seed"),
        ("record_input_error", "record_input_error"),
        ("quantile_count", "quantile_count"),
        ("sweep_n", "sweep_n"),
        ("scaling_iteration", "scaling_iteration"),
        ("output_dir", "output_dir"),
    ),
}


def validate(cfg: ExperimentConfig) -> None:
    def fail(key, why):
        raise ConfigError(f"invalid {key}: {why}")

    if not isinstance(cfg.n, int) or cfg.n < 10:
        fail("n", f"must be an integer >= 10, got {cfg.n!r}")
    if not (cfg.delta > 0 and math.isfinite(cfg.delta)):
        fail("delta", f"must be positive, got {cfg.delta!r}")
    if not math.isfinite(cfg.snr_db):
        fail("snr_db", "must be finite")
    try:
        prior = BernoulliGaussianPrior(cfg.sparsity_rate, cfg.active_variance)
    except ParameterError as exc:
        key = "sparsity_rate" if "sparsity_rate" in str(exc) else "active_variance"
        fail(key, str(exc))
    if prior.sparsity_rate == 0.0:
        fail("sparsity_rate", "must be > 0 for the SNR to be defined")
    if cfg.denoiser not in DENOISER_KINDS:
        fail("kind", f"must be one of {DENOISER_KINDS}, got {cfg.denoiser!r}")
    if not (cfg.alpha > 0 and math.isfinite(cfg.alpha)):
        fail("alpha", f"must be positive, got {cfg.alpha!r}")
    if not isinstance(cfg.num_iterations, int) or cfg.num_iterations < 1:
        fail("num_iterations", f"must be >= 1, got {cfg.num_iterations!r}")
    if not isinstance(cfg.trials, int) or cfg.trials < 1:
        fail("trials", f"must be >= 1, got {cfg.trials!r}")
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        fail("seed", f"must be an unsigned 64-bit integer, got {cfg.seed!r}")
    for t in cfg.record_input_error:
        if not 0 <= t <= cfg.num_iterations:
            fail("record_input_error", f"iteration {t} outside 0..{cfg.num_iterations}")
    if not isinstance(cfg.quantile_count, int) or cfg.quantile_count < 2:
        fail("quantile_count", f"must be >= 2, got {cfg.quantile_count!r}")
    if cfg.record_input_error and cfg.quantile_count > cfg.n:
        fail("quantile_count", f"exceeds the sample length n={cfg.n}")
    for n in cfg.sweep_n:
        if n < 10:
            fail("sweep_n", f"every n must be >= 10, got {n}")
    # only meaningful for sweeps, so the default need not fit short runs
    if cfg.scaling_iteration < 0 or (cfg.sweep_n and cfg.scaling_iteration > cfg.num_iterations):
        fail("scaling_iteration", f"must lie in 0..{cfg.num_iterations}")
    if not cfg.output_dir:
        fail("output_dir", "must not be empty")


def _int_list(text):
    return tuple(int(part) for part in text.replace(",", " ").split())


_PARSERS = {
    "n": int,
    "delta": float,
    "ensemble": MatrixEnsemble,
    "snr_db": float,
    "sparsity_rate": float,
    "active_variance": float,
    "denoiser": str,
    "alpha": float,
    "mode": CorrectionMode,
    "tau_source": TauSource,
    "num_iterations": int,
    "trials": int,
    "seed": int,
    "record_input_error": _int_list,
    "quantile_count": int,
    "sweep_n": _int_list,
    "scaling_iteration": int,
    "output_dir": str,
}


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text, source="<config>")
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from None

    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        fields = dict(SCHEMA[section])
        for key, raw in parser.items(section):
            if key not in fields:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            name = fields[key]
            try:
                values[name] = _PARSERS[name](raw.strip())
            except ValueError:
                raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None
    return ExperimentConfig(**values)


def _format(value):
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, name in keys:
            lines.append(f"{key} = {_format(getattr(cfg, name))}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
