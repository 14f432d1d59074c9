"""Desk-scale experiment runner: phantom, degrade, learn, edges, restore, metrics.

Configuration is a flat ``key = value`` text file; ``#`` starts a comment.
Every key has a default (see :data:`DEFAULTS`), so an empty file is a valid
configuration.  All emitted files are listed with SHA-256 digests in
``manifest.json``; when a stage fails the manifest records which one.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .edges import edge_mask, pseudospectrum, write_png
from .errors import ConfigError, InvalidArgumentError, OffgridError, StageError
from .forward import ForwardOp, apply, lowpass_op, random_mask, write_mask
from .framebank import write_bank
from .grid import SpectralImage, make_grid, write_spc
from .hankel import necessary_condition, rank_upper_bound
from .learn import LearnConfig, learn, write_trace as write_learn_trace
from .metrics import MetricsReport, evaluate, write_metrics
from .phantoms import Scene, add_noise, read_scene, scene_fourier, square_disk_phantom, square_phantom
from .restore import RestoreConfig, lslp, pixel_values, split_bregman
from .restore import write_trace as write_restore_trace

BUILTIN_SCENES = {"square": square_phantom, "square_disk": square_disk_phantom}
METHODS = ("proposed", "lslp", "ifft")
TASKS = ("random_sampling", "lowpass")


@dataclass
class ExperimentConfig:
    scene: str = "square_disk"  # built-in name or path to a scene file
    n: int = 64
    task: str = "random_sampling"
    fraction: float = 0.3
    density_power: float = 3.0
    calib: int = 12
    inner: int = 33
    noise_sigma: float = 0.0  # absolute standard deviation
    noise_rel: float = 1e-3  # plus this multiple of max |A u|
    seed: int = 0
    low_n: int = 33
    filter_size: int = 9
    rank: int | None = 30  # None ("auto") takes the numerical rank
    rank_tol: float = 1e-3
    learn_beta: float = 1.0
    learn_beta1: float = 1e-2
    learn_beta2: float = 1e-2
    learn_beta3: float = 1e-2
    learn_max_iters: int = 200
    learn_rel_tol: float = 5e-4
    restore_beta: float = 1e-5
    nu: float = 1e-8
    eps: float = 1e-2
    restore_max_iters: int = 300
    restore_rel_tol: float = 1e-5
    constraint_tol: float = 1e-4
    thresholding: str = "soft"
    lslp_gamma: float = 1e-6
    cg_tol: float = 1e-8
    cg_max: int = 500
    methods: tuple[str, ...] = METHODS
    edge_resolution: int = 64
    edge_quantile: float = 0.05
    record_timing: bool = False  # False writes wall_ms = 0 so reruns are byte-identical
    output: str = "out"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if self.n < 1 or not 1 <= self.low_n <= self.n:
            raise ConfigError("need 1 <= low_n <= n")
        if self.filter_size % 2 == 0 or self.filter_size > self.low_n:
            raise ConfigError("filter_size must be odd and at most low_n")
        if self.rank is not None and not 1 <= self.rank < self.filter_size**2:
            raise ConfigError(f"rank must lie in [1, {self.filter_size**2 - 1}]")
        if self.noise_sigma < 0 or self.noise_rel < 0:
            raise ConfigError("noise levels must be nonnegative")
        if self.thresholding not in ("soft", "hard"):
            raise ConfigError("thresholding must be soft or hard")
        if not 0 < self.edge_quantile <= 1:
            raise ConfigError("edge_quantile must lie in (0, 1]")

    def learn_config(self) -> LearnConfig:
        k = self.filter_size
        return LearnConfig(
            filter_size=(k, k),
            rank=self.rank,
            beta=self.learn_beta,
            beta1=self.learn_beta1,
            beta2=self.learn_beta2,
            beta3=self.learn_beta3,
            max_iters=self.learn_max_iters,
            rel_tol=self.learn_rel_tol,
            rank_tol=self.rank_tol,
        )

    def restore_config(self) -> RestoreConfig:
        return RestoreConfig(
            beta=self.restore_beta,
            nu=self.nu,
            eps=self.eps,
            max_iters=self.restore_max_iters,
            rel_tol=self.restore_rel_tol,
            constraint_tol=self.constraint_tol,
            thresholding=self.thresholding,
        )


DEFAULTS = {f.name: f.default for f in fields(ExperimentConfig)}


def _convert(key: str, raw: str) -> Any:
    default = DEFAULTS[key]
    raw = raw.strip()
    try:
        if key == "rank":
            return None if raw.lower() == "auto" else int(raw)
        if key == "methods":
            return tuple(m.strip() for m in raw.split(",") if m.strip())
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return raw


def parse_config(text: str, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    values: dict[str, Any] = {}
    items: list[tuple[str, str, str]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        items.append((key, raw, f"line {lineno}"))
    for key, raw in (overrides or {}).items():
        items.append((key.replace("-", "_"), raw, "override"))
    for key, raw, where in items:
        if key not in DEFAULTS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    try:
        return ExperimentConfig(**values)
    except ConfigError:
        raise
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, overrides)


def load_scene(name: str) -> Scene:
    if name in BUILTIN_SCENES:
        return BUILTIN_SCENES[name]()
    try:
        scene = read_scene(name)
    except OSError as exc:
        raise ConfigError(f"scene {name!r} is neither built in nor a readable file: {exc}") from None
    if not scene.shapes:
        raise ConfigError(f"scene {name!r} has no shapes")
    return scene


def build_operator(cfg: ExperimentConfig) -> ForwardOp:
    grid = make_grid(cfg.n)
    if cfg.task == "lowpass":
        return lowpass_op(grid, cfg.inner)
    return random_mask(grid, cfg.fraction, cfg.density_power, cfg.calib, cfg.seed)


@dataclass
class ConditionReport:
    low_n: int
    filter_size: int
    necessary: bool
    rank_bound: int
    minimal_size: int
    messages: list[str] = field(default_factory=list)


def check_conditions(low_n: int, filter_size: int, minimal_size: int = 3) -> ConditionReport:
    """Sample-count condition for ``low_n`` samples and a ``filter_size`` filter, plus the rank bound."""
    ok = necessary_condition(low_n, filter_size, filter_size)
    minimal = min(minimal_size, filter_size)
    bound = rank_upper_bound(make_grid(filter_size), make_grid(minimal))
    msgs = [
        f"necessary condition 2(N-K1)(N-K2) >= (K1+1)(K2+1)-1 with N={low_n}, K={filter_size}: "
        + ("satisfied" if ok else "VIOLATED"),
        f"rank bound for a {filter_size}x{filter_size} filter around a {minimal}x{minimal} minimal filter: {bound}",
    ]
    if not ok:
        msgs.append("warning: too few low-frequency samples for this filter size")
    return ConditionReport(low_n, filter_size, ok, bound, minimal, msgs)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Run:
    def __init__(self, out: Path):
        self.out = out
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def manifest(self, status: str, failed_stage: str | None = None, error: str | None = None) -> dict:
        doc = {
            "status": status,
            "failed_stage": failed_stage,
            "error": error,
            "files": [{"name": f, "sha256": _sha256(self.out / f)} for f in self.files if (self.out / f).exists()],
        }
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")
        return doc


@dataclass
class PipelineResult:
    reports: list[MetricsReport]
    manifest: dict
    images: dict[str, np.ndarray]


def run_pipeline(cfg: ExperimentConfig) -> PipelineResult:
    """Run every stage, writing artifacts to ``cfg.output``.

    Raises :class:`StageError` (after writing a failure manifest) when a stage
    fails.
    """
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(out)
    timed = cfg.record_timing
    images: dict[str, np.ndarray] = {}
    reports: list[MetricsReport] = []
    stage = "phantom"

    def clock(t0: float) -> float:
        return (time.perf_counter() - t0) * 1e3 if timed else 0.0

    def untimed(trace):
        if not timed:
            for row in trace:
                row.wall_ms = 0.0
        return trace

    try:
        grid = make_grid(cfg.n)
        scene = load_scene(cfg.scene)
        truth = scene_fourier(scene, grid)
        ref = pixel_values(truth)
        images["truth"] = ref
        write_spc(run.path("truth.spc"), truth)
        write_png(run.path("truth.png"), ref)

        stage = "measure"
        op = build_operator(cfg)
        clean = apply(op, truth)
        sigma = cfg.noise_sigma + cfg.noise_rel * float(np.max(np.abs(clean.values)))
        f = apply(op, add_noise(truth, sigma, cfg.seed))
        write_mask(run.path("mask.msk"), op)
        write_spc(run.path("measured.spc"), f)

        stage = "learn"
        sub = make_grid(cfg.low_n)
        t0 = time.perf_counter()
        learned = learn(f.restrict(sub), op.restrict(sub), cfg.learn_config())
        learn_ms = clock(t0)
        bank = learned.bank.on_grid(grid)
        write_spc(run.path("low_restored.spc"), learned.v)
        write_bank(run.path("bank.fbk"), learned.bank)
        write_learn_trace(run.path("learn_trace.csv"), untimed(learned.trace))

        stage = "edges"
        emap = pseudospectrum(learned.bank, learned.rank, (cfg.edge_resolution, cfg.edge_resolution))
        write_spc(run.path("edges.spc"), emap.values)
        write_png(run.path("edges.png"), emap.values)
        write_png(run.path("edge_mask.png"), edge_mask(emap, cfg.edge_quantile).astype(float))

        stage = "restore"
        for method in cfg.methods:
            t0 = time.perf_counter()
            if method == "proposed":
                res = split_bregman(f, op, bank, cfg.restore_config())
                v = res.v
                write_restore_trace(run.path("proposed_trace.csv"), untimed(res.trace))
                wall = clock(t0) + learn_ms
            elif method == "lslp":
                res_l = lslp(f, op, bank, learned.rank, cfg.lslp_gamma, cfg.cg_tol, cfg.cg_max)
                v = res_l.v
                wall = clock(t0) + learn_ms
            else:
                v = SpectralImage(grid, np.where(op.mask, f.values, 0))
                wall = clock(t0)
            img = pixel_values(v)
            images[method] = img
            write_spc(run.path(f"{method}.spc"), v)
            write_png(run.path(f"{method}.png"), img)
            stage = "metrics"
            reports.append(evaluate(ref, img, cfg.scene, cfg.task, method, wall, cfg.seed))
            stage = "restore"

        stage = "metrics"
        write_metrics(run.path("metrics.csv"), reports)
    except OffgridError as exc:
        run.manifest("failed", stage, str(exc))
        raise StageError(stage, exc) from exc
    except (OSError, np.linalg.LinAlgError) as exc:
        run.manifest("failed", stage, str(exc))
        raise StageError(stage, exc) from exc
    return PipelineResult(reports, run.manifest("ok"), images)
