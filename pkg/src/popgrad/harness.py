"""Run bookkeeping: configuration parsing, multi-run statistics, CSV emission,
and the population-similarity diagnostic.

Curves from different algorithms are made comparable by interpolating every
run onto a common checkpoint grid (every 5000 environment steps). The spread
band is one standard error of the mean per checkpoint, i.e. a 68% confidence
interval; medians are taken per checkpoint over runs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .loop import ConfigError, HybridConfig, RunRecord

CSV_HEADER = "total_steps,generation,eval_mean,eval_median,ci68,reuse_fraction,epsilon"

_BOOL_WORDS = {"on": True, "true": True, "1": True, "yes": True,
               "off": False, "false": False, "0": False, "no": False}


def _coerce(key: str, raw, current):
    """Parse a raw config value into the type of the dataclass default."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if isinstance(current, bool):
        if text.lower() not in _BOOL_WORDS:
            raise ConfigError(f"{key}: expected on/off, got {raw!r}")
        return _BOOL_WORDS[text.lower()]
    if isinstance(current, int) and not isinstance(current, bool):
        try:
            return int(text)
        except ValueError as e:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from e
    if isinstance(current, float):
        try:
            return float(text)
        except ValueError as e:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from e
    if isinstance(current, tuple):
        try:
            return tuple(int(p) for p in text.replace("x", ",").split(",") if p)
        except ValueError as e:
            raise ConfigError(f"{key}: expected comma-separated integers, got {raw!r}") from e
    if current is None:  # optional integer fields
        try:
            return int(text)
        except ValueError as e:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from e
    return text


def parse_config(source) -> HybridConfig:
    """Build a validated HybridConfig from a key=value file, a path, or a dict.

    Defaults are the reference hyper-parameters (learning rate 1e-3 for both
    networks, gamma 0.99, tau 5e-3, population 10, sigma_init 1e-3, sigma_end
    1e-5, tau_cem 0.95, buffer 1e6, batch 100). Unknown keys are rejected by
    name; out-of-range values raise ConfigError naming the offending key.
    """
    if isinstance(source, HybridConfig):
        return source.validate()
    if isinstance(source, dict):
        items = dict(source)
    else:
        items = {}
        with open(source, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                if "=" not in text:
                    raise ConfigError(f"line {lineno}: expected key=value, got {text!r}")
                key, _, value = text.partition("=")
                items[key.strip()] = value.strip()

    defaults = HybridConfig()
    fields = {f.name: getattr(defaults, f.name) for f in dataclasses.fields(HybridConfig)}
    kwargs = {}
    for key, raw in items.items():
        if key not in fields:
            raise ConfigError(f"unknown configuration key {key!r}")
        kwargs[key] = _coerce(key, raw, fields[key])
    return HybridConfig(**kwargs).validate()


@dataclass
class AggregateCurve:
    """Per-checkpoint statistics over runs on the common step grid."""

    steps: np.ndarray
    generation: np.ndarray
    mean: np.ndarray
    median: np.ndarray
    ci68: np.ndarray  # one standard error of the mean over runs
    reuse_fraction: np.ndarray
    epsilon: np.ndarray
    n_runs: int


def aggregate(runs, grid_step: int = 5000) -> AggregateCurve:
    """Interpolate each run onto the common step grid and reduce across runs.

    The grid ends at the smallest final step count over runs, so no run is
    extrapolated. Checkpoints before a run's first record clamp to its first
    value.
    """
    if not runs or any(len(r) == 0 for r in runs):
        raise ValueError("aggregate needs at least one non-empty run")
    final_steps = min(r[-1].total_steps for r in runs)
    grid = np.arange(grid_step, final_steps + 1, grid_step, dtype=np.float64)
    if grid.size == 0:
        grid = np.array([float(final_steps)])

    per_run = {"mean": [], "gen": [], "reuse": [], "eps": []}
    for records in runs:
        x = np.array([r.total_steps for r in records], dtype=np.float64)
        per_run["mean"].append(np.interp(grid, x, [r.eval_mean for r in records]))
        per_run["gen"].append(np.interp(grid, x, [r.generation for r in records]))
        per_run["reuse"].append(np.interp(grid, x, [r.reuse_fraction for r in records]))
        per_run["eps"].append(np.interp(grid, x, [r.epsilon for r in records]))
    values = np.stack(per_run["mean"])
    n = values.shape[0]
    if n > 1:
        sem = np.std(values, axis=0, ddof=1) / np.sqrt(n)
        sem[np.ptp(values, axis=0) == 0.0] = 0.0  # identical runs: exactly zero
    else:
        sem = np.zeros(grid.size)
    return AggregateCurve(
        steps=grid.astype(np.int64),
        generation=np.floor(np.mean(np.stack(per_run["gen"]), axis=0)).astype(np.int64),
        mean=np.mean(values, axis=0),
        median=np.median(values, axis=0),
        ci68=sem,
        reuse_fraction=np.mean(np.stack(per_run["reuse"]), axis=0),
        epsilon=np.mean(np.stack(per_run["eps"]), axis=0),
        n_runs=n)


@dataclass
class SimilarityReport:
    """Average pairwise parameter-sharing fraction and its 10-bin histogram."""

    average: float
    counts: np.ndarray  # histogram of pairwise similarities over [0, 1]
    bin_edges: np.ndarray


def similarity_histogram(genomes, tol: float = 1e-8) -> SimilarityReport:
    """Fraction of coordinates shared (equal within ``tol``) between individuals.

    Computed for every unordered pair, averaged, and bucketed into 10 bins over
    [0, 1]. Freshly sampled continuous populations sit near zero; populations
    collapsing onto one individual approach one.
    """
    if len(genomes) < 2:
        raise ValueError(f"similarity needs at least 2 individuals, got {len(genomes)}")
    g = np.stack([np.asarray(x, dtype=np.float64) for x in genomes])
    n = g.shape[0]
    sims = []
    for i in range(n):
        for j in range(i + 1, n):
            sims.append(float(np.mean(np.abs(g[i] - g[j]) <= tol)))
    sims = np.array(sims)
    counts, edges = np.histogram(sims, bins=10, range=(0.0, 1.0))
    return SimilarityReport(average=float(np.mean(sims)), counts=counts, bin_edges=edges)


def _fmt(value) -> str:
    return repr(float(value))


def emit_csv(data, path) -> str:
    """Write records or an aggregate curve as CSV; returns the path.

    One row per checkpoint under a fixed header, plain decimal points, final
    row newline-terminated. Numeric columns round-trip exactly through
    ``read_csv``. Wall time is deliberately not a column so reruns of the same
    seed are byte-identical.
    """
    lines = [CSV_HEADER]
    if isinstance(data, AggregateCurve):
        for i in range(data.steps.size):
            lines.append(",".join([
                str(int(data.steps[i])), str(int(data.generation[i])),
                _fmt(data.mean[i]), _fmt(data.median[i]), _fmt(data.ci68[i]),
                _fmt(data.reuse_fraction[i]), _fmt(data.epsilon[i])]))
    else:
        for r in data:
            lines.append(",".join([
                str(int(r.total_steps)), str(int(r.generation)),
                _fmt(r.eval_mean), _fmt(r.eval_median), _fmt(r.ci68),
                _fmt(r.reuse_fraction), _fmt(r.epsilon)]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return str(path)


def read_csv(path):
    """Rows of an emitted CSV as dicts keyed by the header columns."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path} does not carry the expected header")
    names = CSV_HEADER.split(",")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        row = {"total_steps": int(parts[0]), "generation": int(parts[1])}
        for name, part in zip(names[2:], parts[2:]):
            row[name] = float(part)
        rows.append(row)
    return rows
