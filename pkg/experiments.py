"""Experiment harness - seeded Monte Carlo runs and their run directories.

Each replicate draws its cities from a sub-seed hashed out of
(master seed, replicate, "points"), so every family in an experiment sees
the same configurations and replicates may run in any order or process.
Results are sorted before they are written; run directories contain no
timestamps or wall times, so a rerun reproduces them byte for byte.
"""

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import net_io
from analytics import MST_L_REFERENCE, beta_curve_analytic, delaunay_L, hammersley_L, skeleton_limits
from builders import FAMILIES, build_family, build_mst, overlay_line_process
from geometry import derive_seed, sample_finite_model
from metrics import (
    NetSummary,
    ProfileParams,
    RhoBin,
    RhoProfile,
    avg_degree,
    normalized_length,
    summarize_with_profile,
)
from road_errors import InvalidParameterError
from templates import template_area

logger = logging.getLogger(__name__)

EXPERIMENTS = ("table1", "fig6", "fig7", "converge", "paradox")
DEFAULT_LINE_INTENSITIES = [0.0, 0.05, 0.1, 0.2, 0.4]


# ==================== Configuration models ====================

class FamilySpec(BaseModel):
    """A network family with its parameters."""

    model_config = ConfigDict(frozen=True)

    family: str
    params: dict[str, float] = Field(default_factory=dict)

    @field_validator("family")
    @classmethod
    def _known(cls, value: str) -> str:
        if value not in FAMILIES:
            raise ValueError(f"unknown family {value!r}")
        return value

    @model_validator(mode="after")
    def _params_in_range(self) -> "FamilySpec":
        p = self.params
        required = {"geometric": "c", "k-neighbor": "K", "beta": "beta", "gp": "p"}.get(self.family)
        if required and required not in p:
            raise ValueError(f"family {self.family} needs parameter {required}")
        if "beta" in p and not 0 < p["beta"] <= 2:
            raise ValueError("beta must lie in (0, 2]")
        if "p" in p and not p["p"] >= 1:
            raise ValueError("p must be >= 1")
        if "K" in p and (p["K"] < 1 or int(p["K"]) != p["K"]):
            raise ValueError("K must be a positive integer")
        if "c" in p and not p["c"] > 0:
            raise ValueError("c must be positive")
        return self

    @property
    def label(self) -> str:
        if self.family == "beta":
            return f"beta={self.params['beta']:g}"
        if self.family == "gp":
            return f"G_{self.params['p']:g}"
        return self.family

    @property
    def param_text(self) -> str:
        return ";".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))

    def build_params(self) -> dict:
        params = dict(self.params)
        if "K" in params:
            params["K"] = int(params["K"])
        return params

    def analytic_limits(self) -> tuple[Optional[float], Optional[float]]:
        """(L, degree) in the infinite model when known."""
        if self.family in ("beta", "gabriel", "rng"):
            beta = {"gabriel": 1.0, "rng": 2.0}.get(self.family, self.params.get("beta"))
            return skeleton_limits(template_area(beta))
        if self.family == "delaunay":
            return delaunay_L(), 6.0
        if self.family == "hammersley":
            return hammersley_L(), 4.0
        if self.family == "mst":
            return MST_L_REFERENCE, 2.0
        return None, None


class ExperimentConfig(BaseModel):
    """Everything needed to regenerate an experiment's outputs."""

    experiment: str
    families: list[FamilySpec] = Field(default_factory=list)
    n: int = Field(default=2500, ge=1)
    n_grid: list[int] = Field(default_factory=list)
    replicates: int = Field(default=10, ge=1)
    master_seed: int = Field(ge=0, lt=2 ** 64)
    profile: ProfileParams = Field(default_factory=ProfileParams)
    hammersley_margin: float = Field(default=0.2, ge=0, lt=0.5)
    beta_grid: list[float] = Field(default_factory=list)
    line_intensities: list[float] = Field(default_factory=list)
    gp_max_n: int = Field(default=1000, ge=2)
    code_version: str = "1.0.0"

    @field_validator("experiment")
    @classmethod
    def _known(cls, value: str) -> str:
        if value not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {value!r}")
        return value

    @field_validator("beta_grid")
    @classmethod
    def _betas(cls, value: list[float]) -> list[float]:
        if any(not 0 < b <= 2 for b in value):
            raise ValueError("beta grid values must lie in (0, 2]")
        return value

    @field_validator("line_intensities")
    @classmethod
    def _intensities(cls, value: list[float]) -> list[float]:
        if any(v < 0 for v in value):
            raise ValueError("line intensities must be >= 0")
        return value

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def profile_for(self, spec: FamilySpec) -> ProfileParams:
        if spec.family == "hammersley":
            return self.profile.model_copy(update={"inner_margin": self.hammersley_margin, "planarized": True})
        return self.profile


# ==================== Results ====================

@dataclass
class RunRecord:
    """One replicate of one family."""
    config_hash: str
    family: str
    param: str
    n: int
    replicate: int
    sub_seed: int
    L: float
    degree: float
    rtilde: float
    rmax: float
    rave: float
    unreachable: float
    unbounded_suspected: bool = False
    wall_ms: int = 0

    def to_row(self) -> tuple:
        return (self.family, self.param, self.n, self.replicate, self.L, self.degree,
                self.rtilde, self.rmax, self.rave, self.unreachable)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "family": self.family,
            "param": self.param,
            "n": self.n,
            "replicate": self.replicate,
            "sub_seed": self.sub_seed,
            "L": self.L,
            "degree": self.degree,
            "rtilde": self.rtilde,
            "rmax": self.rmax,
            "rave": self.rave,
            "unreachable": self.unreachable,
            "unbounded_suspected": self.unbounded_suspected,
            "wall_ms": self.wall_ms,
        }


@dataclass
class TableRow:
    family: str
    L: float
    L_se: float
    degree: float
    degree_se: float
    rtilde: float
    rtilde_se: float
    unbounded_suspected: float  # fraction of replicates flagging it

    def to_row(self) -> tuple:
        return (self.family, self.L, self.L_se, self.degree, self.degree_se,
                self.rtilde, self.rtilde_se, self.unbounded_suspected)


@dataclass
class CurvePoint:
    """One (L, R-tilde) point of the length/efficiency trade-off."""
    label: str
    L: float
    R: float
    L_monte_carlo: float
    analytic_L: bool


@dataclass
class ConvergencePoint:
    n: int
    mean_L: float
    mean_degree: float
    L_limit: Optional[float]
    degree_limit: Optional[float]

    @property
    def L_deviation(self) -> Optional[float]:
        return None if self.L_limit is None else abs(self.mean_L - self.L_limit)

    @property
    def degree_deviation(self) -> Optional[float]:
        return None if self.degree_limit is None else abs(self.mean_degree - self.degree_limit)


@dataclass
class ParadoxRow:
    intensity: float
    added_length_per_area: float
    r_ave: float
    rho_at_1: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord] = field(default_factory=list)
    table: list[TableRow] = field(default_factory=list)
    profiles: dict[str, RhoProfile] = field(default_factory=dict)
    curve: list[CurvePoint] = field(default_factory=list)
    convergence: list[ConvergencePoint] = field(default_factory=list)
    paradox: list[ParadoxRow] = field(default_factory=list)


def mean_and_stderr(values) -> tuple[float, float]:
    """Sample mean and std(ddof=1)/sqrt(k); stderr is NaN for a single value."""
    arr = np.asarray(list(values), dtype=float)
    if len(arr) == 0:
        return math.nan, math.nan
    mean = float(np.mean(arr))
    if len(arr) < 2 or not np.all(np.isfinite(arr)):
        return mean, math.nan
    return mean, float(np.std(arr, ddof=1) / math.sqrt(len(arr)))


def average_profiles(profiles: list[RhoProfile]) -> RhoProfile:
    """Bin-wise mean of the replicate bin means (over replicates where the bin qualifies)."""
    first = profiles[0]
    bins = []
    for k, b in enumerate(first.bins):
        column = [p.bins[k] for p in profiles]
        means = [c.mean_ratio for c in column if c.mean_ratio is not None]
        bins.append(RhoBin(
            center=b.center,
            count=sum(c.count for c in column),
            mean_ratio=float(np.mean(means)) if means else None,
            max_ratio=max(c.max_ratio for c in column),
        ))
    return RhoProfile(
        bin_width=first.bin_width,
        d_max=first.d_max,
        inner_margin=first.inner_margin,
        min_count=first.min_count,
        bins=bins,
        unreachable_fraction=float(np.mean([p.unreachable_fraction for p in profiles])),
    )


# ==================== Worker tasks ====================

@dataclass(frozen=True)
class ReplicateTask:
    spec: FamilySpec
    n: int
    replicate: int
    master_seed: int
    profile: ProfileParams
    config_hash: str
    with_routes: bool = True


def network_seed(master_seed: int, replicate: int, spec: FamilySpec) -> int:
    return derive_seed(master_seed, replicate, f"network:{spec.label}")


def run_replicate(task: ReplicateTask) -> tuple[RunRecord, Optional[RhoProfile]]:
    """Build and measure one family on one replicate configuration."""
    started = time.perf_counter()
    seed = derive_seed(task.master_seed, task.replicate, "points")
    config = sample_finite_model(task.n, seed)
    net = build_family(config, task.spec.family, task.spec.build_params(),
                       seed=network_seed(task.master_seed, task.replicate, task.spec))

    profile = None
    if task.with_routes:
        summary, profile = summarize_with_profile(net, task.profile)
    else:
        summary = NetSummary(
            family=net.family.describe(), n_cities=net.n_cities,
            L=normalized_length(net, task.profile.inner_margin),
            avg_degree=avg_degree(net, task.profile.inner_margin),
            r_tilde=math.nan, r_max=math.nan, r_ave=math.nan, r_ave_local=math.nan,
            unreachable_fraction=math.nan, components=0, degree_var=math.nan,
            unbounded_suspected=False,
        )
    record = RunRecord(
        config_hash=task.config_hash,
        family=task.spec.label,
        param=task.spec.param_text,
        n=task.n,
        replicate=task.replicate,
        sub_seed=seed,
        L=summary.L,
        degree=summary.avg_degree,
        rtilde=summary.r_tilde,
        rmax=summary.r_max,
        rave=summary.r_ave,
        unreachable=summary.unreachable_fraction,
        unbounded_suspected=summary.unbounded_suspected,
        wall_ms=int((time.perf_counter() - started) * 1000),
    )
    return record, profile


@dataclass(frozen=True)
class ParadoxTask:
    n: int
    replicate: int
    master_seed: int
    intensities: tuple
    profile: ProfileParams


def run_paradox_replicate(task: ParadoxTask) -> list[ParadoxRow]:
    """MST base with line overlays of increasing intensity on one configuration."""
    config = sample_finite_model(task.n, derive_seed(task.master_seed, task.replicate, "points"))
    base = build_mst(config)
    line_seed = derive_seed(task.master_seed, task.replicate, "lines")
    rows = []
    for intensity in task.intensities:
        net = overlay_line_process(base, intensity, line_seed)
        summary, profile = summarize_with_profile(net, task.profile)
        rho1 = profile.value_at(1.0)
        rows.append(ParadoxRow(
            intensity=float(intensity),
            added_length_per_area=(net.total_length - base.total_length) / config.window.area,
            r_ave=summary.r_ave,
            rho_at_1=math.nan if rho1 is None else rho1,
        ))
    return rows


# ==================== Harness ====================

class ExperimentHarness:
    """Runs experiments, fanning replicates out to a process pool.

    Follows the orchestrator pattern: every step is reported through
    ``_log`` to an optional callback, the module logger and the audit trail.
    """

    def __init__(self, workers: Optional[int] = None, audit=None, log_callback: Optional[Callable] = None,
                 settings=None):
        """Initialize the harness.

        Args:
            workers: Process count (None = settings; 1 runs in-process)
            audit: RunAuditLog to record steps in (None = settings decide)
            log_callback: Optional callback (component, action, success, details)
            settings: RoadSettings override
        """
        from road_settings import get_settings
        self.settings = settings or get_settings()
        self.workers = workers if workers else self.settings.resolved_workers()
        self.audit = audit
        self.log_callback = log_callback
        self._run_id: Optional[str] = None

    def _get_audit(self):
        if self.audit is None and self.settings.audit_enabled:
            from road_database import get_audit_log
            self.audit = get_audit_log()
        return self.audit

    def _log(self, component: str, action: str, success: bool, details: str = "", duration_ms: int = 0):
        """Log an action."""
        if self.log_callback:
            self.log_callback(component, action, success, details)
        (logger.info if success else logger.error)("[%s] %s: %s", component, action, details)
        audit = self._get_audit()
        if audit is not None:
            audit.log_action(
                component=component,
                action=action,
                output_summary=details,
                duration_ms=duration_ms,
                success=success,
                run_id=self._run_id,
            )

    def _map(self, fn, tasks: list):
        if self.workers <= 1 or len(tasks) <= 1:
            return [fn(t) for t in tasks]
        with ProcessPoolExecutor(max_workers=min(self.workers, len(tasks))) as pool:
            return list(pool.map(fn, tasks))

    def _replicates(self, config: ExperimentConfig, spec: FamilySpec, n: int,
                    with_routes: bool = True) -> tuple[list[RunRecord], list[RhoProfile]]:
        tasks = [
            ReplicateTask(spec=spec, n=n, replicate=rep, master_seed=config.master_seed,
                          profile=config.profile_for(spec), config_hash=config.config_hash(),
                          with_routes=with_routes)
            for rep in range(config.replicates)
        ]
        started = time.perf_counter()
        results = sorted(self._map(run_replicate, tasks), key=lambda r: r[0].replicate)
        duration = int((time.perf_counter() - started) * 1000)
        self._log("harness", f"replicates:{spec.label}", True,
                  f"n={n} reps={config.replicates} workers={self.workers}", duration)
        return [r for r, _ in results], [p for _, p in results if p is not None]

    # ---- experiments ----

    def run_table1(self, config: ExperimentConfig) -> ExperimentResult:
        if config.n < 100:
            raise InvalidParameterError("n", f"table1 needs n >= 100, got {config.n}")
        result = ExperimentResult(config)
        for spec in config.families or table1_families():
            records, _ = self._replicates(config, spec, config.n)
            result.records.extend(records)
            L, L_se = mean_and_stderr(r.L for r in records)
            deg, deg_se = mean_and_stderr(r.degree for r in records)
            rt, rt_se = mean_and_stderr(r.rtilde for r in records)
            flagged = float(np.mean([r.unbounded_suspected for r in records]))
            result.table.append(TableRow(spec.label, L, L_se, deg, deg_se, rt, rt_se, flagged))
        return result

    def run_fig6_curves(self, config: ExperimentConfig) -> ExperimentResult:
        result = ExperimentResult(config)
        for spec in config.families or fig6_families():
            records, profiles = self._replicates(config, spec, config.n)
            result.records.extend(records)
            result.profiles[spec.label] = average_profiles(profiles)
        return result

    def run_fig7_sweep(self, config: ExperimentConfig) -> ExperimentResult:
        result = ExperimentResult(config)
        betas = config.beta_grid or list(self.settings.beta_grid)
        for point in beta_curve_analytic(betas):
            spec = FamilySpec(family="beta", params={"beta": point.beta})
            records, _ = self._replicates(config, spec, config.n)
            result.records.extend(records)
            mc_L, _ = mean_and_stderr(r.L for r in records)
            R, _ = mean_and_stderr(r.rtilde for r in records)
            result.curve.append(CurvePoint(spec.label, point.L, R, mc_L, True))
        for spec in config.families or fig7_specials():
            n = min(config.n, config.gp_max_n) if spec.family == "gp" else config.n
            records, _ = self._replicates(config, spec, n)
            result.records.extend(records)
            L, _ = mean_and_stderr(r.L for r in records)
            R, _ = mean_and_stderr(r.rtilde for r in records)
            result.curve.append(CurvePoint(spec.label, L, R, L, False))
        return result

    def run_convergence(self, config: ExperimentConfig) -> ExperimentResult:
        result = ExperimentResult(config)
        spec = config.families[0] if config.families else FamilySpec(family="gabriel")
        L_limit, deg_limit = spec.analytic_limits()
        for n in config.n_grid or list(self.settings.convergence_grid):
            records, _ = self._replicates(config, spec, n, with_routes=False)
            result.records.extend(records)
            mean_L, _ = mean_and_stderr(r.L for r in records)
            mean_deg, _ = mean_and_stderr(r.degree for r in records)
            result.convergence.append(ConvergencePoint(n, mean_L, mean_deg, L_limit, deg_limit))
        return result

    def run_paradox_demo(self, config: ExperimentConfig) -> ExperimentResult:
        result = ExperimentResult(config)
        intensities = tuple(sorted(config.line_intensities or DEFAULT_LINE_INTENSITIES))
        tasks = [ParadoxTask(config.n, rep, config.master_seed, intensities, config.profile)
                 for rep in range(config.replicates)]
        started = time.perf_counter()
        per_rep = self._map(run_paradox_replicate, tasks)
        self._log("harness", "paradox", True, f"n={config.n} reps={config.replicates}",
                  int((time.perf_counter() - started) * 1000))
        for k, intensity in enumerate(intensities):
            rows = [rep_rows[k] for rep_rows in per_rep]
            result.paradox.append(ParadoxRow(
                intensity=intensity,
                added_length_per_area=float(np.mean([r.added_length_per_area for r in rows])),
                r_ave=float(np.mean([r.r_ave for r in rows])),
                rho_at_1=float(np.nanmean([r.rho_at_1 for r in rows])),
            ))
        return result

    def run(self, config: ExperimentConfig, out_dir=None) -> ExperimentResult:
        """Run an experiment and optionally write its run directory."""
        self._run_id = config.config_hash()
        runner = {
            "table1": self.run_table1,
            "fig6": self.run_fig6_curves,
            "fig7": self.run_fig7_sweep,
            "converge": self.run_convergence,
            "paradox": self.run_paradox_demo,
        }[config.experiment]
        started = time.perf_counter()
        try:
            result = runner(config)
        except Exception as exc:
            self._log("harness", config.experiment, False, str(exc))
            raise
        self._log("harness", config.experiment, True, f"{len(result.records)} records",
                  int((time.perf_counter() - started) * 1000))
        if out_dir is not None:
            write_run_directory(result, out_dir)
            self._log("harness", "write", True, str(out_dir))
        return result


# ==================== Default family sets ====================

def table1_families() -> list[FamilySpec]:
    return [
        FamilySpec(family="mst"),
        FamilySpec(family="beta", params={"beta": 2.0}),
        FamilySpec(family="beta", params={"beta": 1.0}),
        FamilySpec(family="hammersley"),
        FamilySpec(family="delaunay"),
    ]


def fig6_families() -> list[FamilySpec]:
    return [
        FamilySpec(family="beta", params={"beta": 2.0}),
        FamilySpec(family="beta", params={"beta": 1.0}),
        FamilySpec(family="delaunay"),
    ]


def fig7_specials() -> list[FamilySpec]:
    return [
        FamilySpec(family="delaunay"),
        FamilySpec(family="gp", params={"p": 2.0}),
        FamilySpec(family="hammersley"),
    ]


def delaunay_vs_beta(curve: list[CurvePoint]) -> dict:
    """Compare Delaunay with the beta curve at equal length.

    The curve's R is interpolated linearly in L at the Delaunay length and held
    at the end points outside the sampled range. ``beta_label`` names the
    sampled point of nearest L.
    """
    delaunay = next(p for p in curve if p.label == "delaunay")
    betas = sorted((p for p in curve if p.label.startswith("beta=")), key=lambda p: p.L)
    nearest = min(betas, key=lambda p: abs(p.L - delaunay.L))
    beta_R = float(np.interp(delaunay.L, [p.L for p in betas], [p.R for p in betas]))
    return {
        "delaunay_L": delaunay.L,
        "delaunay_R": delaunay.R,
        "beta_label": nearest.label,
        "beta_L": delaunay.L,
        "beta_R": beta_R,
        "delaunay_more_efficient": delaunay.R < beta_R,
    }


# ==================== Run directory ====================

def write_run_directory(result: ExperimentResult, out_dir) -> Path:
    """Write manifest.json, summary.csv and the experiment's own outputs."""
    out = Path(out_dir)
    config = result.config
    files = ["summary.csv"]
    net_io.write_records(result.records, out / "summary.csv")

    if result.table:
        net_io.write_csv(out / "table1.csv",
                         ["family", "L", "L_se", "degree", "degree_se", "rtilde", "rtilde_se", "unbounded_suspected"],
                         (row.to_row() for row in result.table))
        files.append("table1.csv")
    for label, profile in sorted(result.profiles.items()):
        name = f"rho/{label}.csv"
        net_io.write_profile(profile, out / name)
        files.append(name)
    if result.curve:
        net_io.write_curve(result.curve, out / "curve_fig7.csv")
        files.append("curve_fig7.csv")
    if result.convergence:
        net_io.write_csv(out / "convergence.csv",
                         ["n", "mean_L", "mean_degree", "L_limit", "L_deviation", "degree_limit", "degree_deviation"],
                         ((p.n, p.mean_L, p.mean_degree, p.L_limit, p.L_deviation, p.degree_limit, p.degree_deviation)
                          for p in result.convergence))
        files.append("convergence.csv")
    if result.paradox:
        net_io.write_csv(out / "paradox.csv", ["intensity", "added_length_per_area", "r_ave", "rho_at_1"],
                         ((r.intensity, r.added_length_per_area, r.r_ave, r.rho_at_1) for r in result.paradox))
        files.append("paradox.csv")

    net_io.write_json(out / "manifest.json", {
        "schema": net_io.SCHEMA_VERSION,
        "experiment": config.experiment,
        "config": config.model_dump(mode="json"),
        "config_hash": config.config_hash(),
        "master_seed": config.master_seed,
        "code_version": config.code_version,
        "files": files,
    })
    return out


def load_config(path) -> ExperimentConfig:
    """Load an ExperimentConfig from a JSON file (a run manifest or a bare config)."""
    data = net_io.read_json(path)
    if "config" in data and "experiment" in data:
        data = data["config"]
    try:
        return ExperimentConfig.model_validate(data)
    except ValueError as exc:
        raise InvalidParameterError("config", str(exc).splitlines()[0]) from exc
