"""Panel ingestion, run configuration and report emission.

Panels are long-format CSV with header ``unit_id,date,value,arm``; ``arm`` is
``treatment`` or ``control`` and every unit must cover the same weekly dates.
Reports are one CSV per table (10 significant digits) plus ``manifest.json``.
"""
import csv
import dataclasses
import hashlib
import json
import os
import platform
from dataclasses import dataclass, field
from datetime import date
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml

from .causal import StudyDesign
from .errors import ConfigError, DataError
from .filter import DEFAULT_BETA, DEFAULT_DELTA
from .model_set import ModelSetConfig
from .priors import PriorRecipe
from .synth import ControlPanel

PANEL_COLUMNS = ("unit_id", "date", "value", "arm")
ARMS = ("treatment", "control")


# -- configuration -----------------------------------------------------------


@dataclass
class Windows:
    intervention: str = None  # first post-intervention date
    evaluation: str = None  # first evaluation date; transition runs in between
    end: Optional[str] = None


@dataclass
class ModelOptions:
    candidates: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 10])
    discounts: List[List[float]] = field(default_factory=lambda: [[DEFAULT_DELTA, DEFAULT_BETA]])
    centering: str = "training"
    standardize: bool = False


@dataclass
class PriorOptions:
    init_weeks: int = 20
    c0: float = 1.0
    df: float = 10.0
    shrinkage: float = 0.1
    floor: float = 1e-6


@dataclass
class SamplingOptions:
    draws: int = 10_000
    seed: int = 0
    threads: int = 1


@dataclass
class LiftOptions:
    window: str = "evaluation"  # or "post"
    form: str = "summed"  # or "weekly"


@dataclass
class RunConfig:
    data: str = None
    windows: Windows = field(default_factory=Windows)
    model: ModelOptions = field(default_factory=ModelOptions)
    prior: PriorOptions = field(default_factory=PriorOptions)
    sampling: SamplingOptions = field(default_factory=SamplingOptions)
    lift: LiftOptions = field(default_factory=LiftOptions)
    output: str = "out"

    def model_set_config(self):
        return ModelSetConfig(
            candidates=self.model.candidates,
            discounts=[tuple(pair) for pair in self.model.discounts],
            prior=PriorRecipe(**dataclasses.asdict(self.prior)),
        )

    def to_dict(self):
        return dataclasses.asdict(self)


def _build(cls, raw, path):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {path or 'config'}: {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, value in raw.items():
        sub = known[name].default_factory if known[name].default_factory is not dataclasses.MISSING else None
        if sub is not None and dataclasses.is_dataclass(sub):
            value = _build(sub, value, f"{path}.{name}" if path else name)
        elif isinstance(value, date):
            value = value.isoformat()
        kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(raw):
    cfg = _build(RunConfig, raw or {}, "")
    validate_config(cfg)
    return cfg


def load_config(path):
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    cfg = config_from_dict(raw)
    if cfg.data and not os.path.isabs(cfg.data):
        cfg.data = os.path.normpath(os.path.join(os.path.dirname(os.path.abspath(path)), cfg.data))
    return cfg


def validate_config(cfg):
    if cfg.lift.window not in ("evaluation", "post"):
        raise ConfigError(f"lift.window must be 'evaluation' or 'post', got {cfg.lift.window!r}")
    if cfg.lift.form not in ("summed", "weekly"):
        raise ConfigError(f"lift.form must be 'summed' or 'weekly', got {cfg.lift.form!r}")
    if cfg.model.centering not in ("training", "full"):
        raise ConfigError("model.centering must be 'training' or 'full'")
    if not cfg.model.candidates or any(int(c) < 1 for c in cfg.model.candidates):
        raise ConfigError("model.candidates must be a non-empty list of positive integers")
    for pair in cfg.model.discounts:
        if len(pair) != 2 or not all(0 < float(x) <= 1 for x in pair):
            raise ConfigError(f"discount pair {pair} must be [delta, beta] in (0, 1]")
    if int(cfg.sampling.draws) < 1:
        raise ConfigError("sampling.draws must be >= 1")
    if int(cfg.sampling.threads) < 1:
        raise ConfigError("sampling.threads must be >= 1")


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# -- panels ------------------------------------------------------------------


def _parse_date(text, where):
    try:
        return date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataError(f"{where}: bad date {text!r}") from exc


def read_panel_records(path):
    """Validated ``(unit_id, date, value, arm)`` tuples from a long-format CSV."""
    records = []
    seen = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PANEL_COLUMNS:
            raise DataError(f"{path}: header must be {','.join(PANEL_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            unit, d, v, arm = (x.strip() for x in row)
            if arm not in ARMS:
                raise DataError(f"{path}:{lineno}: unknown arm {arm!r}")
            when = _parse_date(d, f"{path}:{lineno}")
            try:
                value = float(v)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric value {v!r}") from exc
            if not np.isfinite(value) or value < 0:
                raise DataError(f"{path}:{lineno}: value must be finite and non-negative")
            if (unit, when) in seen:
                raise DataError(f"{path}:{lineno}: duplicate record for unit {unit} on {when}")
            seen.add((unit, when))
            records.append((unit, when, value, arm))
    if not records:
        raise DataError(f"{path}: no records")
    return records


def pivot_panel(records):
    """Wide matrices from records: ``(dates, treated_ids, Y, control_ids, X)``."""
    arms, coverage = {}, {}
    for unit, when, value, arm in records:
        if arms.setdefault(unit, arm) != arm:
            raise DataError(f"unit {unit} appears in both arms")
        coverage.setdefault(unit, {})[when] = value
    dates = sorted({when for _, when, _, _ in records})
    ragged = []
    for unit, series in sorted(coverage.items()):
        missing = [d for d in dates if d not in series]
        if missing:
            ragged.append(f"{unit} (missing {', '.join(d.isoformat() for d in missing[:5])}"
                          + (", ..." if len(missing) > 5 else "") + ")")
    if ragged:
        raise DataError("ragged date coverage: " + "; ".join(ragged))
    treated = sorted(u for u, a in arms.items() if a == "treatment")
    control = sorted(u for u, a in arms.items() if a == "control")
    if not treated or not control:
        raise DataError("panel needs at least one treatment and one control unit")
    Y = np.array([[coverage[u][d] for u in treated] for d in dates])
    X = np.array([[coverage[u][d] for u in control] for d in dates])
    return dates, treated, Y, control, X


def load_panel(path, config):
    """Read a panel and cut it into training / transition / evaluation windows.

    Returns ``(treated, ControlPanel, StudyDesign)``; ``treated`` spans the
    training and post rows (``T + k``).
    """
    dates, treated_ids, Y, control_ids, X = pivot_panel(read_panel_records(path))
    w = config.windows
    if w.intervention is None or w.evaluation is None:
        raise ConfigError("windows.intervention and windows.evaluation are required")
    t_int = _parse_date(str(w.intervention), "windows.intervention")
    t_eval = _parse_date(str(w.evaluation), "windows.evaluation")
    for label, d in (("intervention", t_int), ("evaluation", t_eval)):
        if d not in dates:
            raise ConfigError(f"windows.{label} date {d} is not a panel date")
    if t_eval < t_int:
        raise ConfigError("evaluation window must start on or after the intervention")
    if w.end is not None:
        t_end = _parse_date(str(w.end), "windows.end")
        if t_end not in dates:
            raise ConfigError(f"windows.end date {t_end} is not a panel date")
        if t_end < t_eval:
            raise DataError(f"empty evaluation window: windows.end {t_end} precedes {t_eval}")
        keep = [i for i, d in enumerate(dates) if d <= t_end]
        dates = [dates[i] for i in keep]
        Y, X = Y[keep], X[keep]
    T = dates.index(t_int)
    m = dates.index(t_eval) - T
    k = len(dates) - T
    design = StudyDesign(T, m, k, tuple(treated_ids), tuple(control_ids),
                         tuple(d.isoformat() for d in dates))
    return Y, ControlPanel(X, control_ids, T), design


def write_panel(path, dates, treated_ids, Y, control_ids, X):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(PANEL_COLUMNS)
        for ids, M, arm in ((treated_ids, Y, "treatment"), (control_ids, X, "control")):
            for j, unit in enumerate(ids):
                for i, d in enumerate(dates):
                    out.writerow((unit, d, fmt(max(M[i, j], 0.0)), arm))


# -- report tables -----------------------------------------------------------


def fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    return "nan" if np.isnan(x) else f"{x:.10g}"


@dataclass(eq=False)
class Table:
    columns: Tuple[str, ...]
    rows: List[tuple]

    def write(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(self.columns)
            for row in self.rows:
                out.writerow([fmt(v) for v in row])


def read_table(path):
    """Header and rows of an emitted table; numeric cells come back as floats."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        columns = tuple(next(reader))
        rows = []
        for row in reader:
            parsed = []
            for cell in row:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    parsed.append(cell)
            rows.append(tuple(parsed))
    return Table(columns, rows)


LIFT_COLUMNS = ("model", "scope", "unit_id", "mode", "mean", "mc_se", "q025", "q50", "q975",
                "n_draws", "excluded")


def lift_table(evaluation):
    rows = []
    for model, summ in evaluation.lift.items():
        for j, (uid, u) in enumerate(zip(summ.unit_ids, summ.units)):
            rows.append((model, "unit", uid, "marginal", u.mean, u.mc_se, *u.quantiles,
                         u.size, int(summ.excluded[j])))
        for mode in ("multivariate", "independent"):
            a = getattr(summ, mode)
            rows.append((model, "aggregate", "ALL", mode, a.mean, a.mc_se, *a.quantiles,
                         a.size, int(summ.excluded.sum())))
    return Table(LIFT_COLUMNS, rows)


def correlation_table(evaluation):
    rows = []
    ids = evaluation.unit_ids or tuple(str(j) for j in range(evaluation.draws["bma"].q))
    for model, corr in evaluation.correlation.items():
        if corr is None:
            continue
        for i, a in enumerate(ids):
            for j, b in enumerate(ids):
                rows.append((model, a, b, corr[i, j]))
    return Table(("model", "unit_i", "unit_j", "correlation"), rows)


def _date_of(design, t):
    return design.dates[t] if design.dates else ""


def loglik_table(fit):
    rows = []
    times = fit.scored_times
    for label, traj in zip(fit.labels, fit.trajectories):
        for t, ll in zip(times, traj.loglik):
            rows.append((label, int(t), _date_of(fit.design, t), ll))
    return Table(("model", "t", "date", "loglik"), rows)


def weights_table(fit):
    rows = []
    for i, t in enumerate(fit.scored_times):
        for label, w in zip(fit.labels, fit.weights.weights[i]):
            rows.append((int(t), _date_of(fit.design, t), label, w))
    return Table(("t", "date", "model", "weight"), rows)


@dataclass(eq=False)
class ReportBundle:
    tables: Dict[str, Table]
    metadata: dict
    design: Optional[StudyDesign] = None


def bundle_from(fit=None, evaluation=None, config=None, command=""):
    tables = {}
    if fit is not None:
        tables["loglik"] = loglik_table(fit)
        tables["bma_weights"] = weights_table(fit)
    if evaluation is not None:
        tables["lift_summary"] = lift_table(evaluation)
        tables["correlation"] = correlation_table(evaluation)
    meta = {"command": command}
    if config is not None:
        echo = config.to_dict()
        # threads and output location never affect the numbers
        echo["sampling"].pop("threads", None)
        echo.pop("output", None)
        meta["config"] = echo
        meta["config_hash"] = hashlib.sha256(canonical_json(echo).encode()).hexdigest()
        meta["seed"] = config.sampling.seed
        meta["draws"] = config.sampling.draws
    design = fit.design if fit is not None else None
    if design is not None:
        meta["design"] = {"T": design.T, "m": design.m, "k": design.k,
                          "q": len(design.treated_ids), "c": len(design.control_ids),
                          "first_date": _date_of(design, 0),
                          "last_date": design.dates[-1] if design.dates else ""}
    return ReportBundle(tables, meta, design)


def _versions():
    import scipy

    from . import __version__

    return {"mvdlm_causal": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def emit_report(bundle, out_dir):
    """Write every table as ``<name>.csv`` plus ``manifest.json``; returns the paths."""
    d = bundle.design
    if d is not None and d.k <= d.m:
        raise DataError("empty evaluation window; nothing written")
    if not bundle.tables:
        raise DataError("report bundle has no tables; nothing written")
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise OSError(f"output directory {out_dir} is not writable")
    paths, digests = [], {}
    for name in sorted(bundle.tables):
        path = os.path.join(out_dir, f"{name}.csv")
        bundle.tables[name].write(path)
        with open(path, "rb") as fh:
            digests[f"{name}.csv"] = hashlib.sha256(fh.read()).hexdigest()
        paths.append(path)
    manifest = dict(bundle.metadata)
    manifest["files"] = digests
    manifest["versions"] = _versions()
    mpath = os.path.join(out_dir, "manifest.json")
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(mpath)
    return paths
