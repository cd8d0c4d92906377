"""Charts and tidy tables from a results CSV, plus loss-curve data."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .domains import DOMAIN_NAMES  # noqa: E402
from .experiment import ResultRecord, read_results  # noqa: E402
from .losses import loss_eps_terms  # noqa: E402

# fixed salt and no date stamp keep SVG output byte-identical across runs
_SVG_RC = {"svg.hashsalt": "heurscale", "svg.fonttype": "none"}
_SVG_META = {"Date": None, "Creator": None}


def _series(records: list[ResultRecord]) -> dict[tuple[str, str], list[ResultRecord]]:
    groups: dict[tuple[str, str], list[ResultRecord]] = {}
    for r in records:
        if r.status in ("ok", "no_fit"):
            groups.setdefault((r.arch, r.criterion), []).append(r)
    for rs in groups.values():
        rs.sort(key=lambda r: r.n)
    return groups


def _test_error(r: ResultRecord) -> float:
    return r.test_l0 if r.criterion == "l0" else r.test_mse


def plot_domain(domain: str, records: list[ResultRecord], path) -> None:
    """x: problem size; left: parameter count (log10); right: held-out error."""
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax2 = ax.twinx()
        ax.set_yscale("log", base=10)
        ax.grid(True, which="major", alpha=0.5)
        ax.grid(True, which="minor", alpha=0.2)
        ax.set_xlabel("problem size")
        ax.set_ylabel("minimum parameters")
        ax2.set_ylabel("test error")
        ax.set_title(domain)
        for (arch, crit), rs in sorted(_series(records).items()):
            label = f"{arch} {crit}"
            ns = [r.n for r in rs]
            ax.plot(ns, [r.param_count for r in rs], "-", label=label)
            ok = [r for r in rs if r.status == "ok"]
            capped = [r for r in rs if r.status == "no_fit"]
            ax.plot([r.n for r in ok], [r.param_count for r in ok], "o", color=ax.lines[-1].get_color())
            if capped:
                ax.plot([r.n for r in capped], [r.param_count for r in capped], "o", mfc="none",
                        color=ax.lines[-1].get_color())
            ax2.plot([r.n for r in ok], [_test_error(r) for r in ok], "s--", alpha=0.6, label=f"{label} test error")
        if ax.lines:
            ax.legend(loc="upper left", fontsize="small")
        else:
            ax.set_ylim(1, 10)
            ax.set_xlim(0, 1)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata=_SVG_META)
        plt.close(fig)


def write_points(records: list[ResultRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["domain", "arch", "criterion", "n", "status", "min_units", "param_count", "test_error"])
        for r in sorted(records, key=lambda r: (r.domain, r.arch, r.criterion, r.n)):
            if r.status in ("ok", "no_fit"):
                w.writerow([r.domain, r.arch, r.criterion, r.n, r.status, r.min_units, r.param_count, repr(_test_error(r))])


def loss_curves(eps: float, cs=(0.0, 10.0, 100.0), steps_per_eps: int = 40) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """0/1 loss and l_eps for each c over errors in [-3 eps, 3 eps].

    The grid is k * eps / steps_per_eps, so +-eps/2 fall exactly on grid points.
    """
    k = np.arange(-3 * steps_per_eps, 3 * steps_per_eps + 1)
    x = k / steps_per_eps * eps
    curves = {"l": (np.abs(x) >= eps / 2).astype(float)}
    for c in cs:
        curves[f"l_eps_c{c:g}"] = loss_eps_terms(x, eps, c)
    return x, curves


def write_loss_curves(out_dir, eps: float = 2.0, cs=(0.0, 10.0, 100.0)) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    x, curves = loss_curves(eps, cs)
    csv_path = out_dir / "loss_curves.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", *curves])
        for i in range(len(x)):
            w.writerow([repr(float(x[i]))] + [repr(float(v[i])) for v in curves.values()])
    svg_path = out_dir / "loss_curves.svg"
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(5, 4))
        for name, ys in curves.items():
            ax.plot(x, ys, label=name)
        ax.set_xlabel("heuristic error")
        ax.set_ylabel("loss")
        ax.set_ylim(0, min(4 * eps, float(max(v.max() for v in curves.values()))))
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata=_SVG_META)
        plt.close(fig)
    return csv_path, svg_path


def make_report(results_csv, out_dir, eps: float = 2.0, cs=(0.0, 10.0, 100.0)) -> list[Path]:
    """Per-domain charts, a tidy points table and the loss-curve data. Returns written paths."""
    if not Path(results_csv).exists():
        raise FileNotFoundError(f"no results file at {results_csv}")
    records = read_results(results_csv)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for domain in DOMAIN_NAMES:
        path = out_dir / f"{domain}.svg"
        plot_domain(domain, [r for r in records if r.domain == domain], path)
        written.append(path)
    points = out_dir / "points.csv"
    write_points(records, points)
    written.append(points)
    written.extend(write_loss_curves(out_dir, eps, cs))
    return written
