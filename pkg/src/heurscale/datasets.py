"""Labelled (features, h*) datasets and their on-disk format.

Sample ``i`` of a dataset draws from its own generator seeded with
``(seed, i)``, so the content depends only on (domain, n, count, seed) and not
on how generation is split across workers.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .domains import EPSILON, BlocksWorldDomain, PancakeDomain, TspDomain, TspInstance, feature_dim
from .errors import FormatError, SizeLimitError
from .oracles import GAP, HELD_KARP_CAP, MISPLACED, astar, held_karp_tenths

GENERATOR_VERSION = 1
MAGIC = b"HSLB1"


@dataclass(frozen=True)
class DatasetMeta:
    domain: str
    n: int
    count: int
    seed: int
    epsilon: float
    dim: int
    version: int = GENERATOR_VERSION
    max_walk: int = 0  # pancake only


@dataclass
class Dataset:
    features: np.ndarray  # (count, dim) float32
    labels: np.ndarray  # (count,) float64
    meta: DatasetMeta

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, mask) -> "Dataset":
        f, y = self.features[mask], self.labels[mask]
        return Dataset(f, y, replace(self.meta, count=len(y)))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.meta == other.meta
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _pancake_sample(n: int, max_walk: int, seed: int, index: int):
    dom = PancakeDomain(n)
    rng = sample_rng(seed, index)
    walk = int(rng.integers(0, max_walk + 1))
    s = dom.random_walk(walk, rng)
    return dom.encode(s), astar(dom, s, GAP).optimal_cost


def _tsp_sample(n: int, seed: int, index: int):
    inst = TspInstance.random(n, sample_rng(seed, index))
    dom = TspDomain(inst)
    # labels come straight from integer tenths so they sit exactly on the 0.1 grid
    return dom.encode(dom.initial_state()), held_karp_tenths(inst) / 10.0


def _bw_sample(n: int, seed: int, index: int):
    dom = BlocksWorldDomain(n)
    s = dom.sample_uniform(sample_rng(seed, index))
    return dom.encode(s), astar(dom, s, MISPLACED).optimal_cost


def _generate_range(domain: str, n: int, seed: int, lo: int, hi: int, max_walk: int):
    feats, labels = [], []
    for i in range(lo, hi):
        if domain == "pancake":
            f, y = _pancake_sample(n, max_walk, seed, i)
        elif domain == "tsp":
            f, y = _tsp_sample(n, seed, i)
        else:
            f, y = _bw_sample(n, seed, i)
        feats.append(f)
        labels.append(y)
    return np.asarray(feats, dtype=np.float32).reshape(hi - lo, -1), np.asarray(labels, dtype=np.float64)


def _generate(domain: str, n: int, count: int, seed: int, max_walk: int = 0, workers: int = 1) -> Dataset:
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    dim = feature_dim(domain, n)
    if workers <= 1:
        f, y = _generate_range(domain, n, seed, 0, count, max_walk)
    else:
        bounds = np.linspace(0, count, workers + 1).astype(int)
        with ProcessPoolExecutor(workers) as pool:
            parts = list(
                pool.map(
                    _generate_range,
                    *zip(*[(domain, n, seed, int(a), int(b), max_walk) for a, b in zip(bounds, bounds[1:])]),
                )
            )
        f = np.concatenate([p[0].reshape(-1, dim) for p in parts])
        y = np.concatenate([p[1] for p in parts])
    meta = DatasetMeta(domain, n, count, int(seed), EPSILON[domain], dim, max_walk=max_walk)
    return Dataset(f, y, meta)


def gen_pancake_dataset(n: int, count: int, max_walk: int | None = None, seed: int = 0, workers: int = 1) -> Dataset:
    """Random walks of uniform length in 0..max_walk from the sorted stack, labelled by A* + gap."""
    if n < 2:
        raise ValueError("pancake needs n >= 2")
    if max_walk is None:
        max_walk = 2 * n
    if max_walk < 1:
        raise ValueError("max_walk must be >= 1")
    return _generate("pancake", n, count, seed, max_walk, workers)


def gen_tsp_dataset(n: int, count: int, seed: int = 0, workers: int = 1) -> Dataset:
    """Fresh random instances at their initial state, labelled by Held-Karp."""
    if n < 2:
        raise ValueError("TSP needs n >= 2")
    if n > HELD_KARP_CAP:
        raise SizeLimitError(f"Held-Karp capped at n={HELD_KARP_CAP}")
    return _generate("tsp", n, count, seed, 0, workers)


def gen_bw_dataset(n: int, count: int, seed: int = 0, workers: int = 1) -> Dataset:
    """Uniformly random start states, labelled by A* + misplaced blocks."""
    if n < 1:
        raise ValueError("blocks world needs n >= 1")
    return _generate("blocksworld", n, count, seed, 0, workers)


def generate(domain: str, n: int, count: int, seed: int, max_walk: int | None = None, workers: int = 1) -> Dataset:
    if domain == "pancake":
        return gen_pancake_dataset(n, count, max_walk, seed, workers)
    if domain == "tsp":
        return gen_tsp_dataset(n, count, seed, workers)
    if domain == "blocksworld":
        return gen_bw_dataset(n, count, seed, workers)
    raise ValueError(f"unknown domain {domain!r}")


# -- file format -----------------------------------------------------------------

_HEADER_KEYS = ("domain", "n", "count", "seed", "epsilon", "dim", "version", "max_walk")


def save(dataset: Dataset, path) -> None:
    """Write ``HSLB1``, key=value header lines, a blank line, then fixed-size records.

    Each record is ``dim`` little-endian float32 features followed by one
    little-endian float64 label.
    """
    meta = dataset.meta
    dim = meta.dim
    rec = np.dtype([("f", "<f4", (dim,)), ("y", "<f8")])
    arr = np.empty(len(dataset), dtype=rec)
    arr["f"] = dataset.features
    arr["y"] = dataset.labels
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        for key in _HEADER_KEYS:
            fh.write(f"{key}={getattr(meta, key)}\n".encode())
        fh.write(b"\n")
        fh.write(arr.tobytes())


def load(path) -> Dataset:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC + b"\n"):
        raise FormatError(f"{path}: missing HSLB1 magic")
    end = data.find(b"\n\n", len(MAGIC))
    if end < 0:
        raise FormatError(f"{path}: unterminated header")
    try:
        raw = dict(line.split("=", 1) for line in data[len(MAGIC) + 1 : end].decode().splitlines())
        meta = DatasetMeta(
            domain=raw["domain"],
            n=int(raw["n"]),
            count=int(raw["count"]),
            seed=int(raw["seed"]),
            epsilon=float(raw["epsilon"]),
            dim=int(raw["dim"]),
            version=int(raw.get("version", GENERATOR_VERSION)),
            max_walk=int(raw.get("max_walk", 0)),
        )
    except (KeyError, ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: malformed header ({exc})") from exc
    try:
        expected_dim = feature_dim(meta.domain, meta.n)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if meta.dim != expected_dim:
        raise FormatError(f"{path}: dim={meta.dim} but {meta.domain} n={meta.n} encodes to {expected_dim}")
    rec = np.dtype([("f", "<f4", (meta.dim,)), ("y", "<f8")])
    body = data[end + 2 :]
    if len(body) != meta.count * rec.itemsize:
        raise FormatError(f"{path}: expected {meta.count} records of {rec.itemsize} bytes, got {len(body)} bytes")
    arr = np.frombuffer(body, dtype=rec)
    return Dataset(arr["f"].astype(np.float32), arr["y"].astype(np.float64), meta)


def split_and_save(train: Dataset, test: Dataset, path) -> tuple[Path, Path]:
    """Write ``<path>.train.hslb`` and ``<path>.test.hslb``; the two must come from different seeds."""
    if train.meta.seed == test.meta.seed:
        raise ValueError("train and test sets must be generated from different seeds")
    base = Path(path)
    tr, te = base.with_name(base.name + ".train.hslb"), base.with_name(base.name + ".test.hslb")
    save(train, tr)
    save(test, te)
    return tr, te


def export_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{i}" for i in range(dataset.meta.dim)] + ["hstar"])
        for f, y in zip(dataset.features, dataset.labels):
            w.writerow([f"{v:.6g}" for v in f] + [f"{y:.6g}"])
