"""Seeded, shardable Monte Carlo experiments and their CSV/JSON persistence.

Ratio samples are generated in fixed-size blocks. Block ``b`` of a stream
always uses Philox counter block ``b`` and always draws a full block, so the
sample of size ``N`` is the first ``N`` values of any larger sample, and the
result is independent of how blocks are split across worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import multiprocessing
import numpy as np

from ._validation import check_dimension, check_exponent
from .constants import ConjugatePair, conjugate, limit_constants
from .empirical import (EmpiricalDistribution, dkw_bound, kolmogorov_distance, normal_cdf,
                        two_sample_dkw_bound, two_sample_ks)
from .exceptions import ConfigError
from .rates import solve_ldp_rate
from .rng import RngStream
from .sampling import DistributionModel, ModelKind, SurfaceMethod, draw_raw
from .statistics import ratio_from_raw

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentResult",
    "RatioSample",
    "ratio_sample",
    "clear_sample_cache",
    "default_shards",
    "run_experiment",
    "run_clt",
    "run_reverse_holder",
    "run_berry_esseen",
    "run_mdp",
    "run_ldp_tail",
    "run_measure_comparison",
]

EXPERIMENTS = ("clt", "reverse-holder", "berry-esseen", "mdp", "ldp-tail", "compare-measures")
MIN_LDP_HITS = 100
JACKKNIFE_BLOCKS = 20


def default_shards() -> int:
    env = os.environ.get("THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"THREADS must be a positive integer, got {env!r}") from None
        if value < 1:
            raise ConfigError(f"THREADS must be a positive integer, got {env!r}")
        return value
    return os.cpu_count() or 1


# ------------------------------------------------------------------- sampling

def block_size(n: int) -> int:
    """Rows per RNG block; depends on ``n`` only, never on shards or N."""
    return max(1, min(8192, (1 << 18) // n))


def _ratio_blocks(task):
    p, kind, method, n, seed, stream_id, lo, hi = task
    pair = conjugate(p)
    model = DistributionModel(kind, method)
    stream = RngStream(seed, stream_id)
    size = block_size(n)
    vals, logw = [], []
    for b in range(lo, hi):
        raw = draw_raw(model, n, pair, stream.generator(b), size)
        vals.append(ratio_from_raw(raw, pair))
        if raw.log_weight is not None:
            logw.append(raw.log_weight)
    return (np.concatenate(vals) if vals else np.empty(0),
            np.concatenate(logw) if logw else None)


@dataclass(frozen=True, eq=False)
class RatioSample:
    values: np.ndarray
    weights: Optional[np.ndarray]
    pairs_drawn: int

    def __len__(self):
        return self.values.size

    def head(self, size: int) -> "RatioSample":
        w = None if self.weights is None else self.weights[:size]
        return RatioSample(self.values[:size], w, self.pairs_drawn)


_CACHE: dict = {}


def clear_sample_cache() -> None:
    _CACHE.clear()


def ratio_stream(seed: int, stream_id: int, model: DistributionModel, n: int) -> RngStream:
    """The stream for one (model, n) arm; distinct arms never share draws."""
    return RngStream(seed, stream_id).substream(f"ratio/{model.label(n)}/n={n}")


def ratio_sample(pair, model: DistributionModel, n: int, num_samples: int, *, seed: int,
                 stream_id: int = 0, shards: int = 1, cache: bool = True) -> RatioSample:
    """Hölder ratios of `num_samples` independent pairs, with importance
    weights when the model is self-normalized-weighted."""
    pair = pair if isinstance(pair, ConjugatePair) else conjugate(pair)
    n = check_dimension(n)
    stream = ratio_stream(seed, stream_id, model, n)
    size = block_size(n)
    need = -(-int(num_samples) // size)
    method = model.resolved_method(n)
    key = (pair.p, model.kind.value, None if method is None else method.value, n,
           stream.seed, stream.stream_id)
    have_vals, have_logw, have = _CACHE.get(key, (np.empty(0), None, 0)) if cache else (
        np.empty(0), None, 0)
    if need > have:
        base = (pair.p, model.kind.value, None if method is None else method.value, n,
                stream.seed, stream.stream_id)
        todo = need - have
        parts = max(1, min(int(shards), todo))
        cuts = [have + (todo * i) // parts for i in range(parts + 1)]
        tasks = [base + (cuts[i], cuts[i + 1]) for i in range(parts)]
        if parts == 1:
            results = [_ratio_blocks(tasks[0])]
        else:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=parts, mp_context=ctx) as pool:
                results = list(pool.map(_ratio_blocks, tasks))
        new_vals = np.concatenate([have_vals] + [r[0] for r in results])
        new_logw = None
        if method is SurfaceMethod.IMPORTANCE:
            new_logw = np.concatenate(([] if have_logw is None else [have_logw])
                                      + [r[1] for r in results])
        have_vals, have_logw, have = new_vals, new_logw, need
        if cache:
            _CACHE[key] = (have_vals, have_logw, have)
    vals = have_vals[:num_samples]
    w = None if have_logw is None else np.exp(have_logw[:num_samples])
    return RatioSample(vals, w, need * size)


# ---------------------------------------------------------------- config

def _tuple(values, cast=float):
    if values is None:
        return ()
    return tuple(cast(v) for v in values)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's output.

    Grids default to empty tuples; each runner substitutes its own default
    and :meth:`resolved` materializes it so the echoed config is complete.
    """

    experiment: str = "clt"
    p: float = 2.0
    model: DistributionModel = field(default_factory=DistributionModel)
    n: int = 1000
    num_samples: int = 10000
    seed: int = 0
    stream_id: int = 0
    shards: int = 1
    t_grid: tuple = ()
    n_grid: tuple = ()
    x_grid: tuple = ()
    beta: float = 0.25
    bins: int = 80

    def __post_init__(self):
        object.__setattr__(self, "t_grid", _tuple(self.t_grid))
        object.__setattr__(self, "n_grid", _tuple(self.n_grid, int))
        object.__setattr__(self, "x_grid", _tuple(self.x_grid))
        if not isinstance(self.model, DistributionModel):
            object.__setattr__(self, "model", DistributionModel(self.model))

    @property
    def pair(self) -> ConjugatePair:
        return conjugate(self.p)

    def replace(self, **changes) -> "ExperimentConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return ExperimentConfig(**data)

    def resolved(self) -> "ExperimentConfig":
        defaults = _DEFAULT_GRIDS.get(self.experiment, {})
        changes = {k: v(self) if callable(v) else v for k, v in defaults.items()
                   if not getattr(self, k)}
        return self.replace(**changes) if changes else self

    def validate(self) -> "ExperimentConfig":
        """Raise :class:`ConfigError` on any invalid combination; return the
        resolved config. Runs before any sampling."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        try:
            check_exponent(self.p)
            check_dimension(self.n)
            RngStream(self.seed, self.stream_id)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if int(self.num_samples) != self.num_samples or self.num_samples < 2:
            raise ConfigError(f"num_samples must be an integer >= 2, got {self.num_samples}")
        if int(self.shards) != self.shards or self.shards < 1:
            raise ConfigError(f"shards must be a positive integer, got {self.shards}")
        if self.bins < 1:
            raise ConfigError("bins must be positive")
        if self.model.surface_method is not None and self.model.kind is not ModelKind.SURFACE:
            raise ConfigError("a surface method only applies to the surface model")
        cfg = self.resolved()
        if any(int(v) < 1 for v in cfg.n_grid):
            raise ConfigError(f"n_grid entries must be positive, got {cfg.n_grid}")
        if cfg.experiment == "mdp":
            _check_mdp_window(cfg.n, cfg.beta)
        if cfg.experiment == "ldp-tail":
            _check_ldp_hits(cfg)
        if cfg.experiment == "compare-measures" and cfg.model.kind is not ModelKind.CONE:
            raise ConfigError("compare-measures always compares against the cone model")
        return cfg

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "p": self.p,
            "q": self.pair.q,
            "model": self.model.kind.value,
            "surface_method": None if self.model.surface_method is None
            else self.model.surface_method.value,
            "n": self.n,
            "num_samples": self.num_samples,
            "seed": self.seed,
            "stream_id": self.stream_id,
            "shards": self.shards,
            "t_grid": list(self.t_grid),
            "n_grid": list(self.n_grid),
            "x_grid": list(self.x_grid),
            "beta": self.beta,
            "bins": self.bins,
        }


_DEFAULT_GRIDS = {
    "reverse-holder": {"t_grid": (0.0, 0.5, 1.0, 2.0)},
    "berry-esseen": {"n_grid": (50, 200, 1000, 10000)},
    "mdp": {"t_grid": lambda c: (0.5 * limit_constants(c.pair).sigma,
                                 -0.5 * limit_constants(c.pair).sigma)},
    "ldp-tail": {"x_grid": (0.75,), "n_grid": (20, 40, 80)},
    "compare-measures": {"n_grid": (25, 100, 400)},
}


def _check_mdp_window(n: int, beta: float) -> None:
    if not 0.0 < beta < 0.5:
        raise ConfigError(f"MDP speed exponent beta must lie in (0, 0.5), got {beta}")
    if n < 2 or n ** beta < 3.0 * math.sqrt(math.log(n)):
        raise ConfigError(
            f"n = {n} too small for beta = {beta}: need n^beta >= 3 sqrt(log n) "
            f"({n ** beta:.3g} < {3.0 * math.sqrt(math.log(max(n, 2))):.3g})")


def tail_rate(x: float, pair) -> float:
    """Rate of the upper-tail event ``{R >= x}``: ``I(x)`` past the mean, else 0."""
    if x <= limit_constants(pair).m:
        return 0.0
    return solve_ldp_rate(x, pair).value


def _check_ldp_hits(cfg: ExperimentConfig) -> None:
    for x in cfg.x_grid:
        if x > 1.0:
            continue  # no hits possible; reported as a flagged row, not refused
        rate = tail_rate(x, cfg.pair)
        for n in cfg.n_grid:
            expected = cfg.num_samples * math.exp(-n * rate)
            if expected < MIN_LDP_HITS:
                raise ConfigError(
                    f"x = {x}, n = {n}: predicted hit count N e^(-n I) = {expected:.3g} "
                    f"< {MIN_LDP_HITS}; raise --num-samples or lower n")


# ---------------------------------------------------------------- results

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def _json_value(value):
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return None
        return value
    return value


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    columns: tuple
    rows: list
    summary: dict
    runtime_seconds: Optional[float] = None
    tables: dict = field(default_factory=dict)

    def to_csv(self, fh=None, table: Optional[str] = None) -> str:
        """RFC-4180 CSV of the main table (or a named extra table)."""
        columns, rows = (self.columns, self.rows) if table is None else self.tables[table]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def envelope(self, timing: bool = True) -> dict:
        from . import __version__

        return {
            "config": self.config.to_dict(),
            "rows": _json_value(self.rows),
            "summary": _json_value(self.summary),
            "runtime_seconds": self.runtime_seconds if timing else None,
            "library_version": __version__,
        }

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.envelope(timing), indent=2, sort_keys=True) + "\n"

    @property
    def stem(self) -> str:
        c = self.config
        return (f"{c.experiment}_p{c.p:g}_{c.model.label(c.n)}_n{c.n}"
                f"_N{c.num_samples}_seed{c.seed}")

    def write(self, directory, timing: bool = True) -> list:
        """Write ``<stem>.csv``, ``<stem>.json`` (and extra tables) to `directory`."""
        os.makedirs(directory, exist_ok=True)
        paths = []
        base = os.path.join(directory, self.stem)
        with open(base + ".csv", "w", newline="", encoding="utf-8") as fh:
            self.to_csv(fh)
        paths.append(base + ".csv")
        for name in sorted(self.tables):
            path = f"{base}_{name}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                self.to_csv(fh, table=name)
            paths.append(path)
        with open(base + ".json", "w", encoding="utf-8") as fh:
            fh.write(self.to_json(timing))
        paths.append(base + ".json")
        return paths


# ---------------------------------------------------------------- estimators

def _normalized(weights, size):
    if weights is None:
        return np.full(size, 1.0 / size)
    return weights / weights.sum()


def _weighted_moments(z, weights):
    w = _normalized(weights, z.size)
    mean = float(np.dot(w, z))
    var = float(np.dot(w, (z - mean) ** 2))
    if weights is None:
        var *= z.size / (z.size - 1.0)
    return mean, var


def _effective_size(weights, size):
    if weights is None:
        return float(size)
    return float(weights.sum() ** 2 / np.dot(weights, weights))


def _jackknife(stat, z, weights, blocks=JACKKNIFE_BLOCKS):
    """Delete-one-block jackknife standard error over contiguous blocks."""
    edges = np.linspace(0, z.size, blocks + 1).astype(int)
    vals = []
    for j in range(blocks):
        keep = np.concatenate([np.arange(0, edges[j]), np.arange(edges[j + 1], z.size)])
        vals.append(stat(z[keep], None if weights is None else weights[keep]))
    vals = np.asarray(vals)
    return float(math.sqrt((blocks - 1) / blocks * np.sum((vals - vals.mean()) ** 2)))


def _ks_stat(sigma2):
    return lambda z, w: kolmogorov_distance(EmpiricalDistribution(z, w), sigma2)


def _var_stat(z, w):
    return _weighted_moments(z, w)[1]


def _probability(hit, weights):
    """Self-normalized frequency with its (effective-size) binomial SE."""
    w = _normalized(weights, hit.size)
    f = float(np.dot(w, hit))
    ess = _effective_size(weights, hit.size)
    return f, math.sqrt(max(f * (1.0 - f), 0.0) / ess)


def _centered(cfg: ExperimentConfig, n: int, size: int, shards=None):
    pair = cfg.pair
    sample = ratio_sample(pair, cfg.model, n, size, seed=cfg.seed, stream_id=cfg.stream_id,
                          shards=cfg.shards if shards is None else shards)
    m = limit_constants(pair).m
    return math.sqrt(n) * (sample.values - m), sample


def _timed(fn):
    def run(config, *args, **kwargs):
        start = time.perf_counter()
        res = fn(config, *args, **kwargs)
        res.runtime_seconds = time.perf_counter() - start
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


@_timed
def run_clt(config: ExperimentConfig) -> ExperimentResult:
    """Distribution of ``sqrt(n)(R - m)`` against ``N(0, sigma^2)``."""
    cfg = config.replace(experiment="clt").validate()
    consts = limit_constants(cfg.pair)
    z, sample = _centered(cfg, cfg.n, cfg.num_samples)
    w = sample.weights
    mean, var = _weighted_moments(z, w)
    ess = _effective_size(w, z.size)
    ks = kolmogorov_distance(EmpiricalDistribution(z, w), consts.sigma2)
    sigma = consts.sigma
    edges = np.linspace(-5 * sigma, 5 * sigma, cfg.bins + 1)
    if w is None:
        mass = np.histogram(z, bins=edges)[0] / z.size
    else:
        mass = np.histogram(z, bins=edges, weights=w / w.sum())[0]
    expected = np.diff(normal_cdf(edges, consts.sigma2))
    rows = [{"bin_lo": float(edges[i]), "bin_hi": float(edges[i + 1]),
             "fraction": float(mass[i]), "fraction_se": math.sqrt(mass[i] * (1 - mass[i]) / ess),
             "normal_fraction": float(expected[i])} for i in range(cfg.bins)]
    summary = {
        "m": consts.m, "sigma2": consts.sigma2,
        "mean": mean, "mean_se": math.sqrt(var / ess),
        "variance": var, "variance_se": _jackknife(_var_stat, z, w),
        "variance_rel_error": var / consts.sigma2 - 1.0,
        "kolmogorov": ks, "kolmogorov_se": _jackknife(_ks_stat(consts.sigma2), z, w),
        "dkw_99": dkw_bound(ess), "min": float(z.min()), "max": float(z.max()),
        "outside_fraction": float(1.0 - mass.sum()),
        "effective_size": ess, "pairs_drawn": sample.pairs_drawn,
    }
    return ExperimentResult(cfg, ("bin_lo", "bin_hi", "fraction", "fraction_se",
                                  "normal_fraction"), rows, summary)


@_timed
def run_reverse_holder(config: ExperimentConfig, t_grid: Optional[Sequence[float]] = None
                       ) -> ExperimentResult:
    """Frequency of ``R >= m + t/sqrt(n)`` for each ``t``."""
    cfg = config.replace(experiment="reverse-holder",
                         **({"t_grid": t_grid} if t_grid is not None else {})).validate()
    consts = limit_constants(cfg.pair)
    _, sample = _centered(cfg, cfg.n, cfg.num_samples)
    rows = []
    for t in cfg.t_grid:
        threshold = t / math.sqrt(cfg.n) + consts.m
        f, se = _probability(sample.values >= threshold, sample.weights)
        gauss = 1.0 - normal_cdf(t, consts.sigma2)
        rows.append({"t": t, "threshold": threshold, "frequency": f, "frequency_se": se,
                     "gaussian_tail": gauss,
                     "z_score": (f - gauss) / se if se > 0 else (0.0 if f == gauss else math.inf)})
    head = next((r for r in rows if r["t"] == 0.0), rows[0])
    summary = {"m": consts.m, "sigma2": consts.sigma2, "headline_t": head["t"],
               "headline_frequency": head["frequency"], "headline_se": head["frequency_se"],
               "pairs_drawn": sample.pairs_drawn}
    return ExperimentResult(cfg, ("t", "threshold", "frequency", "frequency_se",
                                  "gaussian_tail", "z_score"), rows, summary)


@_timed
def run_berry_esseen(config: ExperimentConfig, n_grid: Optional[Sequence[int]] = None
                     ) -> ExperimentResult:
    """Kolmogorov distance to the Gaussian limit across dimensions.

    Each row also reports the statistic on the first half of the sample, so
    the stability of ``c_hat = max d sqrt(n)/log n`` under doubling N is read
    off one run.
    """
    cfg = config.replace(experiment="berry-esseen",
                         **({"n_grid": n_grid} if n_grid is not None else {})).validate()
    consts = limit_constants(cfg.pair)
    half = cfg.num_samples // 2
    rows = []
    for n in cfg.n_grid:
        z, sample = _centered(cfg, n, cfg.num_samples)
        w = sample.weights
        d = kolmogorov_distance(EmpiricalDistribution(z, w), consts.sigma2)
        d_half = kolmogorov_distance(
            EmpiricalDistribution(z[:half], None if w is None else w[:half]), consts.sigma2)
        scale = math.sqrt(n) / math.log(n) if n > 1 else math.nan
        rows.append({"n": n, "kolmogorov": d,
                     "kolmogorov_se": _jackknife(_ks_stat(consts.sigma2), z, w),
                     "dkw_99": dkw_bound(_effective_size(w, z.size)),
                     "scaled": d * scale, "kolmogorov_half": d_half,
                     "dkw_99_half": dkw_bound(_effective_size(None if w is None else w[:half],
                                                              half)),
                     "scaled_half": d_half * scale})
    c_hat = max(r["scaled"] for r in rows)
    c_half = max(r["scaled_half"] for r in rows)
    decreasing = all(b["kolmogorov"] <= a["kolmogorov"] + 2 * b["dkw_99"]
                     for a, b in zip(rows, rows[1:]))
    summary = {"c_hat": c_hat, "c_hat_half": c_half,
               "c_hat_rel_change": abs(c_hat - c_half) / c_half if c_half > 0 else math.inf,
               "decreasing_within_slack": decreasing, "sigma2": consts.sigma2}
    return ExperimentResult(cfg, ("n", "kolmogorov", "kolmogorov_se", "dkw_99", "scaled",
                                  "kolmogorov_half", "dkw_99_half", "scaled_half"),
                            rows, summary)


@_timed
def run_mdp(config: ExperimentConfig, t_grid: Optional[Sequence[float]] = None,
            beta: Optional[float] = None) -> ExperimentResult:
    """``(1/b_n^2) log P[(sqrt n / b_n)(R - m) >= t]`` (``<= t`` for ``t < 0``)."""
    changes = {"experiment": "mdp"}
    if t_grid is not None:
        changes["t_grid"] = t_grid
    if beta is not None:
        changes["beta"] = beta
    cfg = config.replace(**changes).validate()
    consts = limit_constants(cfg.pair)
    b = cfg.n ** cfg.beta
    z, sample = _centered(cfg, cfg.n, cfg.num_samples)
    scaled = z / b
    rows = []
    for t in cfg.t_grid:
        hit = scaled >= t if t >= 0 else scaled <= t
        f, se = _probability(hit, sample.weights)
        hits = int(np.count_nonzero(hit))
        est = math.log(f) / b ** 2 if f > 0 else -math.inf
        target = -t * t / (2.0 * consts.sigma2)
        rows.append({"t": t, "tail": "upper" if t >= 0 else "lower", "probability": f,
                     "probability_se": se, "hits": hits, "log_ratio": est,
                     "log_ratio_se": se / (f * b ** 2) if f > 0 else math.inf,
                     "mdp_rate": target,
                     "rel_gap": abs(est - target) / abs(target) if target != 0 and f > 0
                     else (math.inf if f == 0 else abs(est)),
                     "flagged": hits == 0})
    summary = {"b_n": b, "beta": cfg.beta, "sigma2": consts.sigma2,
               "flagged_rows": sum(r["flagged"] for r in rows), "pairs_drawn": sample.pairs_drawn}
    return ExperimentResult(cfg, ("t", "tail", "probability", "probability_se", "hits",
                                  "log_ratio", "log_ratio_se", "mdp_rate", "rel_gap",
                                  "flagged"), rows, summary)


@_timed
def run_ldp_tail(config: ExperimentConfig, x_grid: Optional[Sequence[float]] = None,
                 n_grid: Optional[Sequence[int]] = None) -> ExperimentResult:
    """Direct Monte Carlo ``(1/n) log P[R >= x]`` against ``-I(x)``."""
    changes = {"experiment": "ldp-tail"}
    if x_grid is not None:
        changes["x_grid"] = x_grid
    if n_grid is not None:
        changes["n_grid"] = n_grid
    cfg = config.replace(**changes).validate()
    pair = cfg.pair
    rates = {x: (math.inf if x > 1.0 else tail_rate(x, pair)) for x in cfg.x_grid}
    samples = {n: ratio_sample(pair, cfg.model, n, cfg.num_samples, seed=cfg.seed,
                               stream_id=cfg.stream_id, shards=cfg.shards) for n in cfg.n_grid}
    rows = []
    for x in cfg.x_grid:
        prev_gap = None
        for n in cfg.n_grid:
            s = samples[n]
            hit = s.values >= x
            f, se = _probability(hit, s.weights)
            hits = int(np.count_nonzero(hit))
            est = math.log(f) / n if f > 0 else -math.inf
            gap = abs(est + rates[x]) if f > 0 and math.isfinite(rates[x]) else math.nan
            rows.append({"x": x, "n": n, "hits": hits, "probability": f, "probability_se": se,
                         "log_rate": est, "log_rate_se": se / (f * n) if f > 0 else math.inf,
                         "rate": rates[x], "gap": gap,
                         "gap_shrinking": (gap < prev_gap) if prev_gap is not None
                         and not math.isnan(gap) else None,
                         "flagged": hits == 0})
            prev_gap = gap
    summary = {"rates": {repr(x): r for x, r in rates.items()},
               "flagged_rows": sum(r["flagged"] for r in rows)}
    return ExperimentResult(cfg, ("x", "n", "hits", "probability", "probability_se",
                                  "log_rate", "log_rate_se", "rate", "gap", "gap_shrinking",
                                  "flagged"), rows, summary)


@_timed
def run_measure_comparison(config: ExperimentConfig, n_grid: Optional[Sequence[int]] = None
                           ) -> ExperimentResult:
    """KS distance between ratio laws under cone and surface measure.

    Per dimension: cone vs surface-by-rejection, and surface-by-rejection vs
    surface-by-importance-weights (two estimators of the same law).
    """
    cfg = config.replace(experiment="compare-measures", model=DistributionModel(ModelKind.CONE),
                         **({"n_grid": n_grid} if n_grid is not None else {})).validate()
    pair = cfg.pair
    reject = DistributionModel(ModelKind.SURFACE, SurfaceMethod.REJECTION)
    weight = DistributionModel(ModelKind.SURFACE, SurfaceMethod.IMPORTANCE)
    rows = []
    for n in cfg.n_grid:
        arms = {name: ratio_sample(pair, model, n, cfg.num_samples, seed=cfg.seed,
                                   stream_id=cfg.stream_id, shards=cfg.shards)
                for name, model in (("cone", cfg.model), ("reject", reject), ("weight", weight))}
        cone = EmpiricalDistribution(arms["cone"].values)
        rej = EmpiricalDistribution(arms["reject"].values)
        wtd = EmpiricalDistribution(arms["weight"].values, arms["weight"].weights)
        noise = two_sample_dkw_bound(cfg.num_samples, cfg.num_samples)
        rows.append({"n": n, "ks_cone_surface": two_sample_ks(cone, rej),
                     "dkw_99": noise,
                     "ks_weight_reject": two_sample_ks(wtd, rej),
                     "dkw_99_weighted": two_sample_dkw_bound(wtd.effective_size, cfg.num_samples),
                     "effective_size_weighted": wtd.effective_size})
    ns = np.array([r["n"] for r in rows], dtype=float)
    ks = np.array([r["ks_cone_surface"] for r in rows])
    slope = float(np.polyfit(np.log(ns), np.log(ks), 1)[0]) if len(rows) > 1 and np.all(ks > 0) \
        else math.nan
    summary = {"decay_exponent": slope,
               "all_within_noise": all(r["ks_cone_surface"] <= r["dkw_99"] for r in rows),
               "weighted_within_noise": all(r["ks_weight_reject"] <= r["dkw_99_weighted"]
                                            for r in rows)}
    return ExperimentResult(cfg, ("n", "ks_cone_surface", "dkw_99", "ks_weight_reject",
                                  "dkw_99_weighted", "effective_size_weighted"), rows, summary)


_RUNNERS = {
    "clt": run_clt,
    "reverse-holder": run_reverse_holder,
    "berry-esseen": run_berry_esseen,
    "mdp": run_mdp,
    "ldp-tail": run_ldp_tail,
    "compare-measures": run_measure_comparison,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    try:
        runner = _RUNNERS[config.experiment]
    except KeyError:
        raise ConfigError(f"unknown experiment {config.experiment!r}") from None
    return runner(config)
