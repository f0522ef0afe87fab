"""Aggregate run directories into learning curves and a score table."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cody.config import TrainConfig, parse_kv_file
from cody.trainer import read_eval


@dataclass
class RunSummary:
    path: Path
    env_name: str
    ablation: str
    seed: int
    steps: np.ndarray
    returns: np.ndarray
    variant: str = ""

    def return_at(self, step: int) -> float:
        """Eval return at the last evaluation not later than ``step``."""
        mask = self.steps <= step
        if not mask.any():
            return math.nan
        return float(self.returns[mask][-1])


def find_runs(paths) -> list[RunSummary]:
    runs = []
    for root in paths:
        root = Path(root)
        candidates = [root] if (root / "config.txt").exists() else sorted(p.parent for p in root.rglob("config.txt"))
        for run_dir in candidates:
            records = read_eval(run_dir)
            if not records:
                continue
            cfg = TrainConfig.from_dict(parse_kv_file(run_dir / "config.txt"))
            variant = "transfer" if cfg.freeze_encoder else cfg.ablation
            runs.append(
                RunSummary(
                    path=run_dir,
                    env_name=cfg.env_name,
                    ablation=cfg.ablation,
                    seed=cfg.seed,
                    steps=np.array([r.env_step for r in records]),
                    returns=np.array([r.mean_return for r in records]),
                    variant=variant,
                )
            )
    return runs


def mean_and_se(values) -> tuple[float, float]:
    """Arithmetic mean and standard error (0 for a single value)."""
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=np.float64)
    if len(v) == 0:
        return math.nan, math.nan
    if len(v) == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def score_table(runs: list[RunSummary], marks: list[int]) -> list[dict]:
    """One row per (env, step mark); one ``mean ± se`` column per variant."""
    groups: dict[tuple[str, str], list[RunSummary]] = defaultdict(list)
    for run in runs:
        groups[(run.env_name, run.variant)].append(run)
    variants = sorted({v for _, v in groups})
    rows = []
    for env in sorted({e for e, _ in groups}):
        for mark in marks:
            row: dict = {"env": env, "step": mark}
            for variant in variants:
                members = groups.get((env, variant), [])
                mean, se = mean_and_se([r.return_at(mark) for r in members])
                row[variant] = (mean, se, len(members))
            rows.append(row)
    return rows


def write_table(rows: list[dict], path: Path) -> None:
    variants = sorted({k for row in rows for k in row if k not in ("env", "step")})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["env", "step", *variants])
        for row in rows:
            cells = []
            for v in variants:
                mean, se, n = row.get(v, (math.nan, math.nan, 0))
                cells.append("" if n == 0 or math.isnan(mean) else f"{mean:.1f} ± {se:.1f}")
            writer.writerow([row["env"], row["step"], *cells])


def curve_stats(runs: list[RunSummary]) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Mean and standard error across seeds on the common evaluation steps."""
    common = sorted(set.intersection(*(set(r.steps.tolist()) for r in runs)))
    if not common:
        return np.array([]), np.array([]), np.array([]), len(runs)
    steps = np.array(common)
    vals = np.stack([[r.return_at(s) for s in steps] for r in runs])
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(len(runs)) if len(runs) > 1 else np.zeros_like(mean)
    return steps, mean, se, len(runs)


def plot_curves(runs: list[RunSummary], path: Path, title: str = "") -> Path:
    """Mean eval return per variant with a ± 1 standard-error band over seeds."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups: dict[str, list[RunSummary]] = defaultdict(list)
    for run in runs:
        groups[f"{run.env_name}/{run.variant}"].append(run)
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, members in sorted(groups.items()):
        steps, mean, se, n = curve_stats(members)
        if len(steps) == 0:
            continue
        ax.plot(steps, mean, label=f"{label} (n={n})")
        ax.fill_between(steps, mean - se, mean + se, alpha=0.25)
    ax.set_xlabel("environment steps")
    ax.set_ylabel("eval return")
    ax.set_title(title or "mean ± 1 standard error over seeds")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def build_report(paths, out_dir: str | Path, marks: list[int]) -> dict:
    runs = find_runs(paths)
    if not runs:
        raise FileNotFoundError("no run directories with evaluation records found")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = score_table(runs, marks)
    write_table(rows, out_dir / "scores.csv")
    plot_curves(runs, out_dir / "curves.png")
    return {"runs": runs, "rows": rows, "table": out_dir / "scores.csv", "plot": out_dir / "curves.png"}
