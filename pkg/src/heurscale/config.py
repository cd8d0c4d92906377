"""Run configuration: profiles, paper threshold presets, key=value config files."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from . import nn
from .criteria import EXACT_L0, THRESHOLD
from .domains import DOMAIN_NAMES
from .experiment import SweepConfig
from .losses import CROSS_ENTROPY, L_EPS, LOSS_KINDS, MSE, SCALED, TRUE_L

PROFILES = ("desk", "paper")

# thresholds per (preset, domain), as reported for the published scaling plots
PRESETS = {
    "fixed-depth-mse": {"arch": nn.FIXED_DEPTH, "loss": MSE, "thresholds": {"pancake": 0.2, "tsp": 0.35, "blocksworld": 0.2}},
    "fixed-width-mse": {"arch": nn.FIXED_WIDTH, "loss": MSE, "thresholds": {"pancake": 0.1, "tsp": 0.35, "blocksworld": 0.02}},
    "scaled": {"arch": nn.FIXED_DEPTH, "loss": SCALED, "thresholds": {"pancake": 0.001, "tsp": 0.001, "blocksworld": 0.001}},
    "cross-entropy": {"arch": nn.FIXED_DEPTH, "loss": CROSS_ENTROPY, "thresholds": {"pancake": 0.9, "tsp": 0.9, "blocksworld": 0.9}},
    "exact": {"arch": nn.FIXED_DEPTH, "loss": L_EPS, "c": 10.0, "criterion": EXACT_L0},
}


def profile_settings(profile: str, criterion: str) -> dict:
    """Dataset sizes, restarts, epoch cap and batch size for a profile and criterion kind."""
    strict = criterion == EXACT_L0
    if profile == "paper":
        train = 3000 if strict else 1_000_000
        return {
            "train_count": train,
            "test_count": 200_000,
            "restarts": 5,
            "epochs": 3000 if strict else 300,
            "batch_size": 64 if train <= 3000 else 256,
        }
    if profile == "desk":
        return {
            "train_count": 3000,
            "test_count": 10_000,
            "restarts": 3,
            "epochs": 1500 if strict else 150,
            "batch_size": 64,
        }
    raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")


def parse_sizes(text: str) -> tuple[int, ...]:
    """``"5-7"`` or ``"5,6,7"`` (mixable: ``"4,6-8"``)."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError(f"no sizes in {text!r}")
    return tuple(sorted(set(out)))


def parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in str(text).split(",") if t.strip())


@dataclass
class RunConfig:
    """Everything a command needs; flags, config files and profiles all resolve into this."""

    command: str = ""
    domain: str | None = None
    n: int | None = None
    count: int | None = None
    sizes: str | None = None
    arch: str | None = None
    loss: str | None = None
    c: float | None = None
    criterion: str | None = None
    thresholds: str | None = None
    preset: str | None = None
    train_count: int | None = None
    test_count: int | None = None
    restarts: int | None = None
    epochs: int | None = None
    batch_size: int | None = None
    lr: float | None = None
    max_walk: int | None = None
    cap: int | None = None
    workers: int | None = None
    seed: int = 0
    profile: str = "desk"
    out: str = "runs"
    results: str | None = None
    csv: bool = False
    instances: int | None = None

    def validate(self) -> None:
        if self.domain is not None and self.domain not in DOMAIN_NAMES:
            raise ValueError(f"unknown domain {self.domain!r}; choose from {DOMAIN_NAMES}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; choose from {PROFILES}")
        if self.arch is not None and self.arch not in (nn.FIXED_DEPTH, nn.FIXED_WIDTH):
            raise ValueError(f"unknown architecture {self.arch!r}")
        if self.loss is not None and (self.loss not in LOSS_KINDS or self.loss == TRUE_L):
            raise ValueError(f"unknown training loss {self.loss!r}")
        if self.criterion is not None and self.criterion not in (EXACT_L0, THRESHOLD):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for name in ("n", "count", "restarts", "epochs", "batch_size", "cap", "workers", "train_count", "test_count", "instances"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.sizes is not None:
            parse_sizes(self.sizes)
        if self.thresholds is not None and any(t <= 0 for t in parse_floats(self.thresholds)):
            raise ValueError("thresholds must be positive")

    def sweep_configs(self) -> tuple[SweepConfig, tuple[float, ...]]:
        """The base sweep configuration and the thresholds to run (empty for the exact criterion)."""
        if self.domain is None or self.sizes is None:
            raise ValueError("sweep needs --domain and --sizes")
        preset = PRESETS.get(self.preset or "", {})
        arch = self.arch or preset.get("arch", nn.FIXED_DEPTH)
        loss = self.loss or preset.get("loss", L_EPS)
        c = self.c if self.c is not None else preset.get("c", 10.0 if loss == L_EPS else 0.0)
        if self.criterion is not None:
            criterion = self.criterion
        elif "criterion" in preset:
            criterion = preset["criterion"]
        else:
            criterion = THRESHOLD if (self.thresholds or "thresholds" in preset) else EXACT_L0
        thresholds: tuple[float, ...] = ()
        if criterion == THRESHOLD:
            if self.thresholds:
                thresholds = parse_floats(self.thresholds)
            elif "thresholds" in preset:
                thresholds = (preset["thresholds"][self.domain],)
            else:
                raise ValueError("threshold criterion needs --thresholds or --preset")
        prof = profile_settings(self.profile, criterion)
        cfg = SweepConfig(
            domain=self.domain,
            sizes=parse_sizes(self.sizes),
            arch_kind=arch,
            loss_kind=loss,
            c=c,
            criterion_kind=criterion,
            threshold=thresholds[0] if thresholds else 0.0,
            max_epochs=self.epochs or prof["epochs"],
            train_count=self.train_count or prof["train_count"],
            test_count=self.test_count or prof["test_count"],
            restarts=self.restarts or prof["restarts"],
            batch_size=self.batch_size or prof["batch_size"],
            lr=self.lr if self.lr is not None else 1e-3,
            master_seed=self.seed,
            max_walk=self.max_walk,
            cap=self.cap,
            workers=self.workers or 1,
        )
        return cfg, thresholds


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def coerce(key: str, value: str):
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown config key {key!r}")
    typ = _FIELD_TYPES[key]
    if typ.startswith("int"):
        return int(value)
    if typ.startswith("float"):
        return float(value)
    if typ.startswith("bool"):
        if value.lower() not in ("1", "0", "true", "false", "yes", "no"):
            raise ValueError(f"{key}: expected a boolean, got {value!r}")
        return value.lower() in ("1", "true", "yes")
    return value


def read_config_file(path) -> dict:
    """UTF-8 ``key=value`` lines; ``#`` starts a comment. Dashes in keys map to underscores."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (t.strip() for t in line.split("=", 1))
            key = key.replace("-", "_")
            if key in ("command", "config"):
                raise ValueError(f"{path}:{lineno}: {key!r} cannot be set from a config file")
            values[key] = coerce(key, value)
    return values


def resolve(command: str, file_values: dict, flag_values: dict) -> RunConfig:
    """Flags override file values; the result is validated before it is returned."""
    cfg = replace(RunConfig(command=command), **file_values)
    cfg = replace(cfg, **{k: v for k, v in flag_values.items() if v is not None})
    cfg.validate()
    return cfg
