"""Minimal-size search: k-restart fitting, doubling + bisection, problem-size sweeps."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import datasets, losses, nn
from .criteria import EXACT_L0, THRESHOLD, FitCriterion
from .datasets import Dataset
from .domains import EPSILON
from .errors import DivergedError, EmptyInputError, FormatError, HeurscaleError, NoFitError
from .losses import CROSS_ENTROPY, L_EPS, MSE, SCALED, TRUE_L, LossConfig

RESULTS_SCHEMA = "# heurscale-results v1"
DEFAULT_CAP = {nn.FIXED_DEPTH: 2**16, nn.FIXED_WIDTH: 64}


def derive_seed(*parts: int) -> int:
    """A 64-bit seed determined by a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


@dataclass
class FitContext:
    arch_kind: str
    train: Dataset
    loss: LossConfig
    criterion: FitCriterion
    restarts: int = 5
    batch_size: int = 64
    lr: float = 1e-3
    master_seed: int = 0
    workers: int = 1

    def architecture(self, size: int) -> nn.Architecture:
        return nn.Architecture(self.arch_kind, self.train.meta.dim, size, self.loss.output_dim)


@dataclass
class FitOutcome:
    size: int
    fitted: bool
    best_metric: float
    winning_seed: int | None
    seeds: list[int]
    metrics: list[float]
    model: nn.Network | None = field(default=None, repr=False)


def train_once(ctx: FitContext, size: int, seed: int) -> tuple[nn.Network, nn.TrainReport]:
    """One restart: init and shuffling both come from ``seed``."""
    rng = np.random.default_rng(seed)
    net = nn.build(ctx.architecture(size), rng)
    report = nn.train(
        net,
        ctx.train.features,
        ctx.train.labels,
        ctx.loss,
        ctx.criterion.max_epochs,
        ctx.batch_size,
        ctx.criterion,
        rng,
        lr=ctx.lr,
    )
    return net, report


def _restart(args):
    ctx, size, seed = args
    try:
        net, report = train_once(ctx, size, seed)
    except DivergedError:
        return None, False, float("nan")
    return net, report.satisfied, report.best_metric


def fits(size: int, ctx: FitContext, restarts: int | None = None) -> FitOutcome:
    """Train ``restarts`` independently seeded networks; fitted if any one meets the criterion.

    A diverged restart counts as a failure. The returned model is the
    lowest-seed restart that fit, or the one with the best metric otherwise.
    """
    if size < 1:
        raise ValueError(f"architecture size must be >= 1, got {size}")
    k = ctx.restarts if restarts is None else restarts
    seeds = [derive_seed(ctx.master_seed, size, r) for r in range(k)]
    jobs = [(ctx, size, s) for s in seeds]
    if ctx.workers > 1:
        with ProcessPoolExecutor(ctx.workers) as pool:
            results = list(pool.map(_restart, jobs))
    else:
        results = [_restart(j) for j in jobs]

    crit = ctx.criterion
    best = float("nan")
    best_idx = None
    win = None
    for i, (_, ok, metric) in enumerate(results):
        if crit.better(metric, best):
            best, best_idx = metric, i
        if ok and win is None:
            win = i
    pick = win if win is not None else best_idx
    return FitOutcome(
        size=size,
        fitted=win is not None,
        best_metric=best,
        winning_seed=seeds[win] if win is not None else None,
        seeds=seeds,
        metrics=[r[2] for r in results],
        model=results[pick][0] if pick is not None else None,
    )


@dataclass
class SizeSearch:
    min_size: int
    probes: dict[int, bool]
    non_monotone: bool

    @property
    def probe_string(self) -> str:
        return ";".join(f"{s}:{int(ok)}" for s, ok in sorted(self.probes.items()))


def binary_search_min_size(predicate: Callable[[int], bool], lo: int = 1, cap: int = 2**16) -> SizeSearch:
    """Smallest size in [lo, cap] accepted by ``predicate``, assuming monotonicity.

    Doubles from ``lo`` until a size is accepted (the last probe is clamped to
    ``cap``), then bisects between the last rejection and the first
    acceptance. Every size is evaluated at most once. With a stochastic
    predicate the result is the smallest accepted probe, and ``non_monotone``
    reports whether some rejected probe lies above an accepted one.
    """
    if lo < 1 or cap < lo:
        raise ValueError(f"need 1 <= lo <= cap, got lo={lo}, cap={cap}")
    probes: dict[int, bool] = {}

    def ask(size: int) -> bool:
        if size not in probes:
            probes[size] = bool(predicate(size))
        return probes[size]

    if ask(lo):
        hi, fail = lo, lo - 1
    else:
        fail, hi = lo, min(2 * lo, cap)
        while not ask(hi):
            if hi >= cap:
                raise NoFitError(f"no size up to the cap {cap} fits")
            fail, hi = hi, min(2 * hi, cap)
    while hi - fail > 1:
        mid = (hi + fail) // 2
        if ask(mid):
            hi = mid
        else:
            fail = mid
    accepted = [s for s, ok in probes.items() if ok]
    non_monotone = any(not ok and s > min(accepted) for s, ok in probes.items())
    return SizeSearch(hi, probes, non_monotone)


def evaluate_model(model: nn.Network, data: Dataset, loss: LossConfig) -> np.ndarray:
    """Heuristic predictions of ``model`` on ``data`` in EVAL mode."""
    out = model.forward(data.features, nn.EVAL)
    if loss.kind == CROSS_ENTROPY:
        return losses.class_predictions(out, loss.epsilon)
    return out


def test_error(model: nn.Network, test: Dataset, metric: LossConfig, train_loss: LossConfig | None = None) -> float:
    """Held-out error: the 0/1 loss (fraction outside eps/2) or MSE."""
    if len(test) == 0:
        raise EmptyInputError("empty test set")
    preds = evaluate_model(model, test, train_loss or metric)
    if metric.kind == TRUE_L:
        return losses.loss_true(preds, test.labels, metric.epsilon)
    if metric.kind == MSE:
        return losses.loss_mse(preds, test.labels)
    raise ValueError(f"test error is reported as true_l or mse, not {metric.kind}")


test_error.__test__ = False  # keep pytest from collecting this by name


# -- sweeps ----------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    domain: str
    sizes: tuple[int, ...]
    arch_kind: str = nn.FIXED_DEPTH
    loss_kind: str = L_EPS
    c: float = 10.0
    criterion_kind: str = EXACT_L0
    threshold: float = 0.0
    max_epochs: int = 3000
    train_count: int = 3000
    test_count: int = 200_000
    restarts: int = 5
    batch_size: int = 64
    lr: float = 1e-3
    master_seed: int = 0
    max_walk: int | None = None
    lo: int = 1
    cap: int | None = None
    workers: int = 1

    def __post_init__(self):
        if not self.sizes:
            raise ValueError("sizes must be non-empty")
        if list(self.sizes) != sorted(set(self.sizes)):
            raise ValueError("sizes must be strictly ascending")
        if self.domain not in EPSILON:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.loss_kind == TRUE_L:
            raise ValueError("the 0/1 loss cannot be used for training")
        if self.criterion_kind == THRESHOLD and not self.threshold > 0:
            raise ValueError("threshold criterion needs a positive threshold")

    @property
    def epsilon(self) -> float:
        return EPSILON[self.domain]

    @property
    def search_cap(self) -> int:
        return self.cap if self.cap is not None else DEFAULT_CAP[self.arch_kind]

    def criterion_label(self) -> str:
        return "l0" if self.criterion_kind == EXACT_L0 else f"{self.loss_kind}:{self.threshold:g}"


@dataclass
class ResultRecord:
    domain: str
    n: int
    arch: str
    criterion: str
    threshold: float
    loss: str
    c: float
    status: str
    min_units: int
    param_count: int
    best_train_metric: float
    test_l0: float
    test_mse: float
    restarts: int
    winning_seed: int
    approximate: bool
    probes: str
    master_seed: int
    train_count: int
    test_count: int
    note: str = ""
    wall_time: float = field(default=0.0, compare=False)

    # wall time is non-deterministic; it goes to a sidecar file, not the results CSV
    FIELDS = (
        "domain", "n", "arch", "criterion", "threshold", "loss", "c", "status", "min_units",
        "param_count", "best_train_metric", "test_l0", "test_mse", "restarts", "winning_seed",
        "approximate", "probes", "master_seed", "train_count", "test_count", "note",
    )

    def row(self) -> list[str]:
        out = []
        for name in self.FIELDS:
            v = getattr(self, name)
            if isinstance(v, bool):
                out.append(str(int(v)))
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_row(cls, row: dict) -> "ResultRecord":
        kw = {}
        for name in cls.FIELDS:
            typ = cls.__dataclass_fields__[name].type
            v = row[name]
            if typ == "int":
                kw[name] = int(v)
            elif typ == "float":
                kw[name] = float(v)
            elif typ == "bool":
                kw[name] = bool(int(v))
            else:
                kw[name] = v
        return cls(**kw)

    @property
    def key(self) -> tuple:
        return (self.domain, self.n, self.arch, self.criterion)


def read_results(path) -> list[ResultRecord]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines:
        return []
    reader = csv.DictReader(lines)
    missing = set(ResultRecord.FIELDS) - set(reader.fieldnames or ())
    if missing:
        raise FormatError(f"{path}: missing columns {sorted(missing)}")
    try:
        return [ResultRecord.from_row(r) for r in reader]
    except (ValueError, TypeError, KeyError) as exc:
        raise FormatError(f"{path}: malformed row ({exc})") from exc


def append_result(path, record: ResultRecord) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            fh.write(RESULTS_SCHEMA + "\n")
            w.writerow(ResultRecord.FIELDS)
        w.writerow(record.row())
        fh.flush()


def _dataset_seeds(master: int, n: int) -> tuple[int, int]:
    return derive_seed(master, n, 0), derive_seed(master, n, 1)


def load_or_generate(config: SweepConfig, n: int, cache: dict | None = None, data_dir: Path | None = None):
    """Train and test sets for size ``n`` (disjoint derived seeds), reused across thresholds."""
    key = (config.domain, n, config.train_count, config.test_count, config.master_seed, config.max_walk)
    if cache is not None and key in cache:
        return cache[key]
    tr_seed, te_seed = _dataset_seeds(config.master_seed, n)
    sets = []
    for count, seed, tag in ((config.train_count, tr_seed, "train"), (config.test_count, te_seed, "test")):
        path = None
        if data_dir is not None:
            path = data_dir / f"{config.domain}_n{n}_{tag}_{count}_{seed}.hslb"
            if path.exists():
                sets.append(datasets.load(path))
                continue
        ds = datasets.generate(config.domain, n, count, seed, config.max_walk, config.workers)
        if path is not None:
            datasets.save(ds, path)
        sets.append(ds)
    if cache is not None:
        cache[key] = tuple(sets)
    return tuple(sets)


def build_context(config: SweepConfig, train: Dataset, test: Dataset) -> tuple[FitContext, int]:
    """Loss and criterion for one problem size; returns the context and how many zero labels were dropped."""
    eps = config.epsilon
    dropped = 0
    num_classes = 0
    if config.loss_kind == SCALED:
        keep = train.labels > 0
        dropped = int((~keep).sum())
        train = train.subset(keep)
    if config.loss_kind == CROSS_ENTROPY:
        top = max(train.labels.max(), test.labels.max())
        num_classes = int(round(top / eps)) + 1
    loss = LossConfig(config.loss_kind, eps, config.c if config.loss_kind == L_EPS else 0.0, num_classes)
    if config.criterion_kind == EXACT_L0:
        crit = FitCriterion.exact(eps, config.max_epochs)
    else:
        crit = FitCriterion.below(loss if config.loss_kind != L_EPS else LossConfig(MSE, eps), config.threshold, config.max_epochs)
    ctx = FitContext(
        arch_kind=config.arch_kind,
        train=train,
        loss=loss,
        criterion=crit,
        restarts=config.restarts,
        batch_size=config.batch_size,
        lr=config.lr,
        master_seed=config.master_seed,
        workers=config.workers,
    )
    return ctx, dropped


def _emit(progress, *fields):
    if progress is not None:
        progress("\t".join(str(f) for f in fields))


def search_size(config: SweepConfig, n: int, train: Dataset, test: Dataset, progress=None) -> ResultRecord:
    t0 = time.perf_counter()
    ctx, dropped = build_context(config, train, test)
    outcomes: dict[int, FitOutcome] = {}

    def predicate(size: int) -> bool:
        out = fits(size, ctx)
        outcomes[size] = out
        _emit(progress, "probe", config.domain, n, size, int(out.fitted), f"{out.best_metric:.6g}")
        return out.fitted

    base = dict(
        domain=config.domain, n=n, arch=config.arch_kind, criterion=config.criterion_label(),
        threshold=config.threshold, loss=config.loss_kind, c=config.c, restarts=config.restarts,
        master_seed=config.master_seed, train_count=len(train), test_count=len(test),
    )
    note = f"dropped_zero_labels={dropped}" if dropped else ""
    try:
        search = binary_search_min_size(predicate, config.lo, config.search_cap)
    except NoFitError as exc:
        cap = config.search_cap
        return ResultRecord(
            **base, status="no_fit", min_units=cap, param_count=nn.param_count(ctx.architecture(cap)),
            best_train_metric=float("nan"), test_l0=float("nan"), test_mse=float("nan"), winning_seed=0,
            approximate=False, probes=";".join(f"{s}:0" for s in sorted(outcomes)),
            note=str(exc), wall_time=time.perf_counter() - t0,
        )
    best = outcomes[search.min_size]
    eps_metric = LossConfig(TRUE_L, config.epsilon)
    return ResultRecord(
        **base,
        status="ok",
        min_units=search.min_size,
        param_count=nn.param_count(ctx.architecture(search.min_size)),
        best_train_metric=float(best.best_metric),
        test_l0=test_error(best.model, test, eps_metric, ctx.loss),
        test_mse=test_error(best.model, test, LossConfig(MSE, config.epsilon), ctx.loss),
        winning_seed=best.winning_seed,
        approximate=search.non_monotone,
        probes=search.probe_string,
        note=note,
        wall_time=time.perf_counter() - t0,
    )


def write_manifest(out_dir, config, extra: dict | None = None) -> None:
    """Record the full run configuration; refuses to mix a different run into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"config": asdict(config), **(extra or {})}
    path = out_dir / "manifest.json"
    text = json.dumps(manifest, indent=2, sort_keys=True, default=list) + "\n"
    if path.exists():
        old = json.loads(path.read_text())
        if old != json.loads(text):
            raise ValueError(f"{path} describes a different run; use a fresh output directory")
        return
    path.write_text(text)


def run_scaling_sweep(
    config: SweepConfig,
    out_dir=None,
    progress: Callable[[str], None] | None = None,
    cache: dict | None = None,
    results_name: str = "results.csv",
) -> list[ResultRecord]:
    """Minimal fitting size for every problem size in ``config.sizes``.

    With ``out_dir`` set, records are appended to ``results.csv`` as each size
    completes, and sizes already present there are skipped on a rerun.
    """
    cache = {} if cache is None else cache
    results_path = timings_path = data_dir = None
    done: dict[tuple, ResultRecord] = {}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        data_dir = out_dir / "data"
        data_dir.mkdir(exist_ok=True)
        results_path = out_dir / results_name
        timings_path = out_dir / "timings.csv"
        done = {r.key: r for r in read_results(results_path)}

    records = []
    for n in config.sizes:
        key = (config.domain, n, config.arch_kind, config.criterion_label())
        if key in done:
            _emit(progress, "skip", config.domain, n, "already recorded")
            records.append(done[key])
            continue
        _emit(progress, "size", config.domain, n, config.criterion_label())
        try:
            train, test = load_or_generate(config, n, cache, data_dir)
            rec = search_size(config, n, train, test, progress)
        except HeurscaleError as exc:
            rec = ResultRecord(
                config.domain, n, config.arch_kind, config.criterion_label(), config.threshold,
                config.loss_kind, config.c, "error", 0, 0, float("nan"), float("nan"), float("nan"),
                config.restarts, 0, False, "", config.master_seed, config.train_count, config.test_count,
                note=f"{type(exc).__name__}: {exc}",
            )
        _emit(progress, "record", rec.domain, rec.n, rec.status, rec.min_units, rec.param_count,
              f"{rec.test_l0:.6g}", f"{rec.test_mse:.6g}")
        if results_path is not None:
            append_result(results_path, rec)
            with open(timings_path, "a") as fh:
                fh.write(f"{rec.domain},{rec.n},{rec.criterion},{rec.wall_time:.3f}\n")
        records.append(rec)
    return records


def run_threshold_sweep(
    config: SweepConfig,
    thresholds,
    out_dir=None,
    progress: Callable[[str], None] | None = None,
) -> list[ResultRecord]:
    """One scaling sweep per threshold, all on the same datasets and restart seeds."""
    thresholds = [float(t) for t in thresholds]
    if not thresholds or any(t <= 0 for t in thresholds) or len(set(thresholds)) != len(thresholds):
        raise ValueError("thresholds must be positive and distinct")
    cache: dict = {}
    records = []
    for t in thresholds:
        cfg = replace(config, criterion_kind=THRESHOLD, threshold=t)
        records += run_scaling_sweep(cfg, out_dir, progress, cache)
    return records
