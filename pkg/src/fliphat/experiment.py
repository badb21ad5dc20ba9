"""Regret-versus-dimension sweeps: config parsing, execution, CSV and SVG output."""
import csv
import json
import math
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .env import DEFAULT_NOISE_SIGMA, make_instance
from .exceptions import ConfigError
from .noise import SeedPath, float_index
from .peeling import PrivacyBudget
from .policy import FliphatConfig, run_fliphat

RAW_HEADER = ["d", "epsilon", "delta", "repetition", "final_regret", "seed_path"]
AGGREGATE_HEADER = ["d", "epsilon", "mean_regret", "stddev", "ci95_halfwidth", "repetitions"]


@dataclass(frozen=True)
class ExperimentConfig:
    dimensions: tuple = (400, 800, 1600, 2800)
    epsilons: tuple = (0.8, 2.0, 5.0)
    delta: float = 1e-2
    s_star: int = 10
    K: int = 3
    T: int = 30000
    repetitions: int = 10
    root_seed: int = 0
    x_max: float = 10.0
    ar_phi: float = 0.3
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    beta_magnitude: float = None
    s: int = None
    M_max: int = 50
    kappa_bar: float = None
    kappa_under: float = None
    non_private: bool = False
    sensitivity: str = "literal"
    parallel: int = 1

    def __post_init__(self):
        if not self.dimensions:
            raise ConfigError("dimensions", "sweep list is empty")
        if not self.epsilons:
            raise ConfigError("epsilons", "sweep list is empty")
        for name in ("repetitions", "T", "K", "s_star", "M_max", "parallel"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be at least 1")
        if self.K < 2:
            raise ConfigError("K", "needs at least two arms")
        if any(d < max(self.s_star, self.sparsity) for d in self.dimensions):
            raise ConfigError("dimensions", "every d must be at least s_star and s")
        if any(not e > 0 for e in self.epsilons):
            raise ConfigError("epsilons", "must be positive (or inf)")
        if not 0 < self.delta < 1:
            raise ConfigError("delta", "must lie in (0, 1)")
        if not -1 < self.ar_phi < 1:
            raise ConfigError("ar_phi", "must lie in (-1, 1)")
        if self.sensitivity not in ("literal", "provable"):
            raise ConfigError("sensitivity", "must be 'literal' or 'provable'")
        if not 0 <= self.root_seed < 2**64:
            raise ConfigError("root_seed", "must be a 64-bit unsigned integer")

    @property
    def sparsity(self):
        return self.s_star if self.s is None else self.s

    def policy_config(self, epsilon):
        non_private = self.non_private or math.isinf(epsilon)
        return FliphatConfig(
            sparsity=self.sparsity,
            budget=PrivacyBudget(epsilon, self.delta),
            kappa_bar=self.kappa_bar,
            kappa_under=self.kappa_under,
            max_iterations=self.M_max,
            non_private=non_private,
            sensitivity=self.sensitivity,
        )

    def to_dict(self):
        out = asdict(self)
        out["dimensions"] = list(self.dimensions)
        out["epsilons"] = [_fmt(e) for e in self.epsilons]
        return out


def _fmt(x):
    return "inf" if isinstance(x, float) and math.isinf(x) else x


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional(conv):
    def parse(text):
        return None if text.strip().lower() in ("", "none", "default") else conv(text)
    return parse


def _parse_list(conv):
    def parse(text):
        items = [tok.strip() for tok in text.split(",") if tok.strip()]
        return tuple(conv(tok) for tok in items)
    return parse


_PARSERS = {
    "dimensions": _parse_list(int),
    "epsilons": _parse_list(float),
    "delta": float,
    "s_star": int,
    "K": int,
    "T": int,
    "repetitions": int,
    "root_seed": int,
    "x_max": float,
    "ar_phi": float,
    "noise_sigma": float,
    "beta_magnitude": _parse_optional(float),
    "s": _parse_optional(int),
    "M_max": int,
    "kappa_bar": _parse_optional(float),
    "kappa_under": _parse_optional(float),
    "non_private": _parse_bool,
    "sensitivity": str.strip,
    "parallel": int,
}


def config_help():
    """One line per key with its default, for ``--help``."""
    defaults = ExperimentConfig()
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(defaults, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(_fmt(v)) for v in value)
        lines.append(f"  {f.name} = {value}")
    return "\n".join(lines)


def parse_config(text):
    """Parse ``key = value`` lines (``#`` comments, comma-separated lists)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(key, "unknown key")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    return ExperimentConfig(**values)


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", str(exc)) from None
    return parse_config(text)


@dataclass(frozen=True)
class CellResult:
    d: int
    epsilon: float
    repetition: int
    final_regret: float
    seed_path: str
    ledger: dict = field(compare=False, default=None)
    iterations: dict = field(compare=False, default=None)
    cap_hit: bool = field(compare=False, default=False)


@dataclass(frozen=True)
class Aggregate:
    d: int
    epsilon: float
    mean_regret: float
    stddev: float
    ci95_halfwidth: float
    repetitions: int


@dataclass
class SweepResult:
    config: ExperimentConfig
    cells: list
    aggregates: list

    def aggregate(self, d, epsilon):
        for a in self.aggregates:
            if a.d == d and a.epsilon == epsilon:
                return a
        raise KeyError((d, epsilon))


def cell_path(cfg, d, epsilon, rep):
    return SeedPath(cfg.root_seed).child("d", d).child("eps", float_index(epsilon)).child("rep", rep)


def run_cell(cfg, d, epsilon, rep):
    """One FLIPHAT run. The instance and environment depend on ``(root, d, rep)``
    only, so all budgets at a given ``(d, rep)`` face the same contexts."""
    env_root = SeedPath(cfg.root_seed).child("d", d).child("rep", rep)
    inst = make_instance(cfg.K, d, cfg.s_star, env_root.child("instance"), magnitude=cfg.beta_magnitude,
                         x_max=cfg.x_max, ar_phi=cfg.ar_phi, noise_sigma=cfg.noise_sigma)
    path = cell_path(cfg, d, epsilon, rep)
    trace = run_fliphat(inst, cfg.policy_config(epsilon), cfg.T, path.child("policy"),
                        env_stream=env_root.child("environment"))
    return CellResult(d, float(epsilon), rep, trace.final_regret, str(path), trace.ledger.to_dict(),
                      dict(trace.iterations), any(trace.cap_hit.values()))


def _run_cell_args(args):
    return run_cell(*args)


def aggregate_cells(cells, cfg):
    out = []
    for d in cfg.dimensions:
        for eps in cfg.epsilons:
            vals = np.array([c.final_regret for c in cells if c.d == d and c.epsilon == eps])
            mean = math.fsum(vals) / vals.size
            sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            out.append(Aggregate(d, float(eps), mean, sd, 1.96 * sd / math.sqrt(vals.size), int(vals.size)))
    return out


def run_sweep(cfg, parallel=None):
    """Run every ``(d, epsilon, repetition)`` cell and aggregate.

    Each cell owns its seed path, so results do not depend on ``parallel``
    or on execution order.
    """
    workers = cfg.parallel if parallel is None else parallel
    jobs = [(cfg, d, float(eps), rep) for d in cfg.dimensions for eps in cfg.epsilons
            for rep in range(cfg.repetitions)]
    if workers <= 1:
        cells = [_run_cell_args(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell_args, jobs))
    cells.sort(key=lambda c: (cfg.dimensions.index(c.d), cfg.epsilons.index(c.epsilon), c.repetition))
    return SweepResult(cfg, cells, aggregate_cells(cells, cfg))


def emit_csv(res, out_dir):
    """Write ``raw.csv`` and ``aggregate.csv``; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    raw_path = out_dir / "raw.csv"
    agg_path = out_dir / "aggregate.csv"
    with open(raw_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RAW_HEADER)
        for c in res.cells:
            w.writerow([c.d, repr(c.epsilon), repr(res.config.delta), c.repetition, repr(c.final_regret),
                        c.seed_path])
    with open(agg_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for a in res.aggregates:
            w.writerow([a.d, repr(a.epsilon), repr(a.mean_regret), repr(a.stddev), repr(a.ci95_halfwidth),
                        a.repetitions])
    return raw_path, agg_path


def read_raw_csv(path):
    with open(path, newline="") as fh:
        return [
            {"d": int(r["d"]), "epsilon": float(r["epsilon"]), "delta": float(r["delta"]),
             "repetition": int(r["repetition"]), "final_regret": float(r["final_regret"]),
             "seed_path": r["seed_path"]}
            for r in csv.DictReader(fh)
        ]


def read_aggregate_csv(path):
    with open(path, newline="") as fh:
        return [
            Aggregate(int(r["d"]), float(r["epsilon"]), float(r["mean_regret"]), float(r["stddev"]),
                      float(r["ci95_halfwidth"]), int(r["repetitions"]))
            for r in csv.DictReader(fh)
        ]


def emit_ledger(res, path):
    payload = {c.seed_path: c.ledger for c in res.cells}
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def emit_meta(res, path):
    import scipy
    import sklearn

    from . import __version__

    meta = {
        "config": res.config.to_dict(),
        "versions": {
            "fliphat": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__,
        },
        "iteration_cap_bound": any(c.cap_hit for c in res.cells),
    }
    Path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 800, 500
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 160, 30, 60


def _eps_label(eps):
    return "inf (non-private)" if math.isinf(eps) else f"{eps:g}"


def emit_svg_plot(res, path):
    """Mean final regret against d (log-2 x axis), one curve and 95% band per epsilon."""
    aggs = res.aggregates
    if not aggs:
        raise ValueError("nothing to plot")
    dims = sorted({a.d for a in aggs})
    epss = sorted({a.epsilon for a in aggs})
    lo_exp = math.floor(math.log2(dims[0]))
    hi_exp = math.ceil(math.log2(dims[-1]))
    if hi_exp == lo_exp:
        hi_exp += 1
    ymax = max(a.mean_regret + a.ci95_halfwidth for a in aggs)
    ymin = min(0.0, min(a.mean_regret - a.ci95_halfwidth for a in aggs))
    if ymax <= ymin:
        ymax = ymin + 1.0
    ymax *= 1.05
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def sx(d):
        return _LEFT + pw * (math.log2(d) - lo_exp) / (hi_exp - lo_exp)

    def sy(v):
        return _TOP + ph * (1.0 - (v - ymin) / (ymax - ymin))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<line x1="{_LEFT}" y1="{_TOP + ph}" x2="{_LEFT + pw}" y2="{_TOP + ph}" stroke="black"/>',
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_TOP + ph}" stroke="black"/>',
    ]
    for e in range(lo_exp, hi_exp + 1):
        x = sx(2.0**e)
        parts.append(f'<line x1="{x:.2f}" y1="{_TOP + ph}" x2="{x:.2f}" y2="{_TOP + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{_TOP + ph + 20}" font-size="12" text-anchor="middle">{2**e}</text>')
    for k in range(6):
        v = ymin + (ymax - ymin) * k / 5
        y = sy(v)
        parts.append(f'<line x1="{_LEFT - 5}" y1="{y:.2f}" x2="{_LEFT}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{_LEFT - 8}" y="{y + 4:.2f}" font-size="12" text-anchor="end">{v:.4g}</text>')
    parts.append(f'<text x="{_LEFT + pw / 2:.2f}" y="{_H - 15}" font-size="14" text-anchor="middle">'
                 'ambient dimension d (log scale)</text>')
    parts.append(f'<text x="20" y="{_TOP + ph / 2:.2f}" font-size="14" text-anchor="middle" '
                 f'transform="rotate(-90 20 {_TOP + ph / 2:.2f})">mean final regret</text>')
    for i, eps in enumerate(epss):
        color = _COLORS[i % len(_COLORS)]
        rows = sorted((a for a in aggs if a.epsilon == eps), key=lambda a: a.d)
        upper = [f"{sx(a.d):.2f},{sy(a.mean_regret + a.ci95_halfwidth):.2f}" for a in rows]
        lower = [f"{sx(a.d):.2f},{sy(a.mean_regret - a.ci95_halfwidth):.2f}" for a in reversed(rows)]
        parts.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        mean = " ".join(f"{sx(a.d):.2f},{sy(a.mean_regret):.2f}" for a in rows)
        parts.append(f'<polyline points="{mean}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = _TOP + 20 + 22 * i
        lx = _LEFT + pw + 15
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 32}" y="{ly + 4}" font-size="12">epsilon = {_eps_label(eps)}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def default_out_dir():
    return Path(os.environ.get("FLIPHAT_OUT_DIR", "fliphat-out"))
