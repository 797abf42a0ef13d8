"""Noise-augmentation experiment: metric learning with and without regularisation.

For every noise dimension and run: append Wishart-correlated noise, split
70/10/20, fit an unregularised metric (``Lambda = 0``) and one metric per
``Lambda`` in the grid, pick the grid value with the lowest validation k-NN
error, and record test k-NN errors alongside identity-metric and random-label
baselines.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import csv
import io
from pathlib import Path

import numpy as np

from ._rng import make_rng
from .data_io import SplitSpec, augment_noise, load_csv, split, standardize, wishart_covariance
from .errors import InputError, MetricBoundsError, SplitError
from .evaluation import knn_error, random_baseline
from .losses import LossSpec
from .metric import Metric
from .optimizer import FitOptions, erm_fit, shuffled_pairs

CSV_HEADER = ("dataset", "noise_dim", "run", "lambda_selected",
              "err_unreg", "err_reg", "err_identity", "err_random")
DEFAULT_NOISE_DIMS = (0, 25, 50, 100, 200, 500)
DEFAULT_LAMBDA_GRID = tuple(round(0.1 * i, 1) for i in range(11))

KEY_PAIRS = 401
# A split that loses a class is redrawn with a bumped attempt key, at most this often.
MAX_SPLIT_ATTEMPTS = 100


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's output.

    ``standardize`` z-scores every split with training statistics after
    noise is appended.  It is off by default.  ``workers > 1`` runs cells in
    that many processes; output order and values do not depend on it.
    """

    dataset: str
    has_header: bool = False
    label_column: int = -1
    name: str = None
    noise_dims: tuple = DEFAULT_NOISE_DIMS
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    k: int = 3
    runs: int = 20
    spec: LossSpec = field(default_factory=lambda: LossSpec(lam=0.2, U=0.0, L=5.0))
    fit: FitOptions = field(default_factory=lambda: FitOptions(max_iters=500))
    pair_passes: int = 1
    standardize: bool = False
    seed: int = 0
    output: str = None
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise InputError("runs must be >= 1")
        if self.k < 1 or self.k % 2 == 0:
            raise InputError("k must be odd and >= 1")
        if not self.lambda_grid or any(v < 0 for v in self.lambda_grid):
            raise InputError("lambda_grid must be non-empty and non-negative")
        if any(int(d) != d or d < 0 for d in self.noise_dims):
            raise InputError("noise_dims must be non-negative integers")
        if self.pair_passes < 1:
            raise InputError("pair_passes must be >= 1")
        if self.workers < 1:
            raise InputError("workers must be >= 1")
        object.__setattr__(self, "noise_dims", tuple(int(d) for d in self.noise_dims))
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))


def _parse_bool(v):
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _parse_list(conv):
    return lambda v: tuple(conv(t) for t in v.replace(",", " ").split())


# key -> (target, converter); target is a config field or "spec.x" / "fit.x".
_CONFIG_KEYS = {
    "dataset": ("dataset", str),
    "has_header": ("has_header", _parse_bool),
    "label_column": ("label_column", int),
    "name": ("name", str),
    "noise_dims": ("noise_dims", _parse_list(int)),
    "lambda_grid": ("lambda_grid", _parse_list(float)),
    "k": ("k", int),
    "runs": ("runs", int),
    "pair_passes": ("pair_passes", int),
    "standardize": ("standardize", _parse_bool),
    "seed": ("seed", int),
    "output": ("output", str),
    "workers": ("workers", int),
    "lam": ("spec.lam", float),
    "U": ("spec.U", float),
    "L": ("spec.L", float),
    "max_iters": ("fit.max_iters", int),
    "step0": ("fit.step0", float),
    "tol": ("fit.tol", float),
    "patience": ("fit.patience", int),
    "fit_seed": ("fit.seed", int),
}


def parse_config(text, base=None):
    """Build an :class:`ExperimentConfig` from ``key = value`` lines.

    ``#`` starts a comment.  Lists are comma or space separated.  ``base``
    supplies defaults for keys not given, including ``dataset``.
    """
    top, spec_kw, fit_kw = {}, {}, {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {ln}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise InputError(f"config line {ln}: unknown key {key!r}")
        target, conv = _CONFIG_KEYS[key]
        try:
            value = conv(val)
        except ValueError as exc:
            raise InputError(f"config line {ln}: bad value for {key}: {exc}") from None
        if target.startswith("spec."):
            spec_kw[target[5:]] = value
        elif target.startswith("fit."):
            fit_kw[target[4:]] = value
        else:
            top[target] = value
    if base is None:
        if "dataset" not in top:
            raise InputError("config must set 'dataset'")
        base = ExperimentConfig(dataset=top["dataset"])
    spec = replace(base.spec, **spec_kw)
    fit = replace(base.fit, **fit_kw)
    return replace(base, spec=spec, fit=fit, **top)


def load_config(path, base=None):
    with open(path) as fh:
        return parse_config(fh.read(), base)


def format_config(cfg):
    """Inverse of :func:`parse_config`."""
    out = []
    for key, (target, _) in _CONFIG_KEYS.items():
        if target.startswith("spec."):
            v = getattr(cfg.spec, target[5:])
        elif target.startswith("fit."):
            v = getattr(cfg.fit, target[4:])
        else:
            v = getattr(cfg, target)
        if v is None:
            continue
        if isinstance(v, tuple):
            v = ", ".join(repr(x) for x in v)
        out.append(f"{key} = {v}")
    return "\n".join(out) + "\n"


def _split_with_retry(ds, seed, noise_dim, run):
    for attempt in range(MAX_SPLIT_ATTEMPTS):
        try:
            return split(ds, SplitSpec(seed=seed), noise_dim, run, attempt)
        except SplitError:
            continue
    raise SplitError(f"no split keeps every class after {MAX_SPLIT_ATTEMPTS} attempts")


def run_cell(cfg, base, noise_dim, run):
    """One ``(noise_dim, run)`` cell; returns the CSV row as a dict."""
    ds = base
    if noise_dim > 0:
        Sigma = wishart_covariance(noise_dim, cfg.seed, noise_dim, run)
        ds = augment_noise(base, Sigma, cfg.seed, noise_dim, run)
    train, val, test = _split_with_retry(ds, cfg.seed, noise_dim, run)
    if cfg.standardize:
        train, val, test = standardize(train, val, test)
    rng = make_rng(cfg.seed, KEY_PAIRS, noise_dim, run)
    S = shuffled_pairs(train.points, train.labels, rng, cfg.pair_passes)

    fits = {}

    def fitted(Lam):
        if Lam not in fits:
            fits[Lam] = erm_fit(S, cfg.spec, Lam, cfg.fit)
        return fits[Lam]

    unreg = fitted(0.0)
    best = None
    for Lam in cfg.lambda_grid:
        v = knn_error(fitted(Lam), train, val, cfg.k)
        # ties go to the smaller Lambda
        if best is None or v < best[0] or (v == best[0] and Lam < best[1]):
            best = (v, Lam)
    lam_sel = best[1]
    return {
        "dataset": cfg.name or Path(cfg.dataset).stem,
        "noise_dim": noise_dim,
        "run": run,
        "lambda_selected": lam_sel,
        "err_unreg": knn_error(unreg, train, test, cfg.k),
        "err_reg": knn_error(fitted(lam_sel), train, test, cfg.k),
        "err_identity": knn_error(Metric.identity(train.D), train, test, cfg.k),
        "err_random": random_baseline(train, test),
    }


def _cell_job(args):
    cfg, base, nd, run = args
    try:
        return run_cell(cfg, base, nd, run)
    except MetricBoundsError as exc:
        raise type(exc)(f"noise_dim={nd}, run={run}: {exc}") from exc


def run_experiment(cfg, progress=None):
    """Run every ``(noise_dim, run)`` cell; rows come back in ``(noise_dim, run)`` order."""
    base = load_csv(cfg.dataset, cfg.has_header, cfg.label_column, cfg.name)
    if len(np.unique(base.labels)) < 2:
        raise InputError(f"{cfg.dataset}: need at least two classes")
    jobs = [(cfg, base, nd, run) for nd in cfg.noise_dims for run in range(cfg.runs)]
    rows = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = pool.map(_cell_job, jobs)
            for row in results:
                rows.append(row)
                if progress is not None:
                    progress(row)
    else:
        for job in jobs:
            rows.append(_cell_job(job))
            if progress is not None:
                progress(rows[-1])
    return rows


def write_results(rows, fh):
    """Write rows under :data:`CSV_HEADER`; floats use their shortest round-trip repr."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in CSV_HEADER])


def results_csv(rows):
    buf = io.StringIO()
    write_results(rows, buf)
    return buf.getvalue()


def summarize(rows):
    """Mean of each error column per noise dimension."""
    cols = ("err_unreg", "err_reg", "err_identity", "err_random")
    out = {}
    for nd in sorted({r["noise_dim"] for r in rows}):
        sel = [r for r in rows if r["noise_dim"] == nd]
        out[nd] = {c: float(np.mean([r[c] for r in sel])) for c in cols}
    return out
