"""Experiment driver: one round loop, replicated over seeds, aggregated.

Each round runs recommend -> feedback -> ranker update. An active attack
replaces the user's feedback wholesale during its budget (the true user draw
is never taken in those rounds), and environment and adversary use separate
streams, so post-attack trajectories are unaffected by how many draws the
attack consumed. Regret accumulates the exact expected per-round gap against
the true attraction profile regardless of manipulation.

Two engines produce bit-identical trajectories: a pure-Python reference loop
built from the modular operations (supports event logs and state hooks) and
a compiled loop for full-scale runs. Replications are embarrassingly
parallel; per-run streams derive from (master_seed, run_index), and
aggregation folds results in run order, so output is independent of worker
count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .attacks import (
    CascadeOfaSchedule,
    PbmOfaSchedule,
    TargetSpec,
    cascade_atq_transform,
    cascade_ofa_params,
    cascade_ofa_transform,
    pbm_atq_transform,
    pbm_ofa_params,
    pbm_ofa_transform,
)
from .click_models import (
    CASCADE,
    PBM,
    ClickModelKind,
    cascade_simulate,
    expected_reward,
    pbm_simulate,
)
from .core import (
    ADV_STREAM,
    ENV_STREAM,
    AttractionProfile,
    PositionBias,
    RankedList,
    RngStream,
    ValidationError,
    optimal_list,
    validate_profile,
)
from .rankers import CascadeUcb1, PbmUcb

ATTACK_NONE = "none"
CASCADE_OFA = "cascade-ofa"
PBM_OFA = "pbm-ofa"
CASCADE_ATQ = "cascade-atq"
PBM_ATQ = "pbm-atq"
ATTACKS = (ATTACK_NONE, CASCADE_OFA, PBM_OFA, CASCADE_ATQ, PBM_ATQ)

CASCADE_RANKER = "cascade-ucb1"
PBM_RANKER = "pbm-ucb"

# a run "promotes" a target when it is listed in at least this share of rounds
TARGET_COVERAGE_BAR = 0.95


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    profile: AttractionProfile
    k: int
    horizon: int
    alpha: float = 1.5
    ranker: str = ""  # defaults to the model's ranker
    attack: str = ATTACK_NONE
    bias: PositionBias | None = None
    targets: tuple[int, ...] = ()
    threshold: float | None = None
    attack_budget: int | None = None
    runs: int = 1
    master_seed: int = 0
    engine: str = "fast"  # "fast" | "reference"
    regret_mode: str = "expected"  # "expected" | "realized"
    grid_points: int = 200

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(a) for a in self.targets))
        if not self.ranker:
            default = CASCADE_RANKER if self.model == CASCADE else PBM_RANKER
            object.__setattr__(self, "ranker", default)


@dataclass(frozen=True)
class ResolvedExperiment:
    """Config plus everything derived from it once per experiment."""

    config: ExperimentConfig
    kind: ClickModelKind
    target_spec: TargetSpec | None
    schedule: CascadeOfaSchedule | PbmOfaSchedule | None
    budget: int
    best_list: RankedList
    best_reward: float
    grid: np.ndarray


@dataclass(frozen=True)
class RunResult:
    run_index: int
    final_regret: float
    curve_rounds: tuple[int, ...]
    curve_values: tuple[float, ...]
    rec_counts: tuple[int, ...]  # per item, 1..L
    manipulated_rounds: int
    target_coverage: float  # fraction of rounds with every target listed
    post_attack_lock: float | None  # post-budget rounds listing only promoted items


@dataclass(frozen=True)
class ExperimentSummary:
    config: ExperimentConfig
    schedule: dict | None
    budget: int
    results: tuple[RunResult, ...]
    mean_final_regret: float
    std_final_regret: float
    mean_rec_counts: tuple[float, ...]
    success_runs: int  # runs where every target was listed >= 95% of rounds
    curve_rounds: tuple[int, ...]
    curve_mean: tuple[float, ...]
    curve_std: tuple[float, ...]


@dataclass
class EventLogRow:
    t: int
    listed: tuple[int, ...]
    exam: tuple[int, ...]
    clicks: tuple[int, ...]
    manipulated: bool
    regret_delta: float
    state: list[dict] | None = None  # per-item ranker rows when requested


def build_grid(horizon: int, points: int = 200) -> np.ndarray:
    """Geometric sampling grid over 1..horizon, final round always included.

    Dense (every round) when the horizon does not exceed the point budget.
    """
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    if horizon <= points:
        return np.arange(1, horizon + 1, dtype=np.int64)
    raw = np.geomspace(1.0, float(horizon), num=points)
    grid = np.unique(np.clip(raw.astype(np.int64), 1, horizon))
    if grid[-1] != horizon:
        grid = np.append(grid, np.int64(horizon))
    return grid.astype(np.int64)


def resolve_experiment(config: ExperimentConfig) -> ResolvedExperiment:
    """Validate a configuration and derive schedules, budget, and grid."""
    if config.model not in (CASCADE, PBM):
        raise ValidationError(f"unknown click model {config.model!r}")
    validate_profile(config.profile, config.k)
    if config.horizon < 1:
        raise ValidationError("horizon must be >= 1")
    if config.runs < 1:
        raise ValidationError("runs must be >= 1")
    if config.attack not in ATTACKS:
        raise ValidationError(f"unknown attack {config.attack!r}")
    if config.engine not in ("fast", "reference"):
        raise ValidationError(f"unknown engine {config.engine!r}")
    if config.regret_mode not in ("expected", "realized"):
        raise ValidationError(f"unknown regret mode {config.regret_mode!r}")
    if config.regret_mode == "realized" and config.engine != "reference":
        raise ValidationError("realized-regret mode requires the reference engine")

    expected_ranker = CASCADE_RANKER if config.model == CASCADE else PBM_RANKER
    if config.ranker != expected_ranker:
        raise ValidationError(
            f"ranker {config.ranker!r} is incompatible with model {config.model!r}"
        )
    if config.attack != ATTACK_NONE:
        wanted_model = CASCADE if config.attack.startswith("cascade") else PBM
        if config.model != wanted_model:
            raise ValidationError(
                f"attack {config.attack!r} requires the {wanted_model} model"
            )

    if config.model == PBM:
        if config.bias is None:
            raise ValidationError("position-based model requires a bias vector")
        if len(config.bias) != config.k:
            raise ValidationError(
                f"bias length {len(config.bias)} != K={config.k}"
            )
        kind = ClickModelKind.pbm(config.bias)
    else:
        kind = ClickModelKind.cascade()

    target_spec = None
    schedule = None
    budget = 0
    if config.attack != ATTACK_NONE:
        if not config.targets:
            raise ValidationError(f"attack {config.attack!r} requires targets")
        target_spec = TargetSpec.padded(config.targets, config.k, config.profile.size)
        is_ofa = config.attack in (CASCADE_OFA, PBM_OFA)
        if is_ofa and config.attack_budget is not None:
            raise ValidationError(
                "observation-free attacks compute their own budget; "
                "attack_budget applies only to the attack-then-quit baselines"
            )
        if is_ofa or config.attack_budget is None:
            if config.threshold is None:
                raise ValidationError(
                    "attack needs a threshold (or an explicit attack_budget for "
                    "the attack-then-quit baselines)"
                )
            if config.model == CASCADE:
                schedule = cascade_ofa_params(
                    config.alpha, config.horizon, config.k,
                    config.profile.size, config.threshold,
                )
            else:
                schedule = pbm_ofa_params(
                    config.alpha, config.horizon, config.k,
                    config.profile.size, config.bias, config.threshold,
                )
            budget = schedule.budget
        if not is_ofa:
            # baselines spend the matched budget by default, or an explicit one
            if config.attack_budget is not None:
                budget = int(config.attack_budget)
                schedule = None
            if budget < 1:
                raise ValidationError("attack budget must be >= 1")
            if budget > config.horizon:
                raise ValidationError(
                    f"attack budget {budget} exceeds horizon {config.horizon}"
                )
        elif config.horizon <= budget:
            raise ValidationError(
                f"horizon {config.horizon} must exceed the attack budget {budget}"
            )

    best = optimal_list(config.profile, config.k)
    return ResolvedExperiment(
        config=config,
        kind=kind,
        target_spec=target_spec,
        schedule=schedule,
        budget=budget,
        best_list=best,
        best_reward=expected_reward(kind, best, config.profile),
        grid=build_grid(config.horizon, config.grid_points),
    )


def _make_ranker(resolved: ResolvedExperiment):
    cfg = resolved.config
    if cfg.model == CASCADE:
        return CascadeUcb1(cfg.profile.size, cfg.k, cfg.alpha)
    return PbmUcb(cfg.profile.size, cfg.k, cfg.alpha, cfg.bias)


def _make_transform(resolved: ResolvedExperiment):
    """Round transform closure: (t, ranked, rng) -> FeedbackRound | None."""
    cfg = resolved.config
    tgt = resolved.target_spec
    sched = resolved.schedule
    budget = resolved.budget
    if cfg.attack == ATTACK_NONE:
        return None
    if cfg.attack == CASCADE_OFA:
        return lambda t, ranked, rng: cascade_ofa_transform(sched, tgt, t, ranked)
    if cfg.attack == PBM_OFA:
        return lambda t, ranked, rng: pbm_ofa_transform(sched, tgt, t, ranked, rng)
    if cfg.attack == CASCADE_ATQ:
        return lambda t, ranked, rng: cascade_atq_transform(budget, tgt, t, ranked)
    return lambda t, ranked, rng: pbm_atq_transform(
        budget, tgt, t, ranked, cfg.bias, rng
    )


def _run_reference(
    resolved: ResolvedExperiment,
    run_index: int,
    event_log: list | None = None,
    state_hook=None,
    stop_after: int | None = None,
    log_state: bool = False,
) -> RunResult:
    cfg = resolved.config
    profile = cfg.profile
    kind = resolved.kind
    ranker = _make_ranker(resolved)
    transform = _make_transform(resolved)
    env = RngStream.from_key(cfg.master_seed, run_index, ENV_STREAM)
    adv = RngStream.from_key(cfg.master_seed, run_index, ADV_STREAM)

    targets = resolved.target_spec.targets if resolved.target_spec else ()
    promoted = set(resolved.target_spec.promotion_list) if resolved.target_spec else set()
    budget = resolved.budget
    f_star = resolved.best_reward
    realized = cfg.regret_mode == "realized"

    grid = resolved.grid
    curve = np.zeros(len(grid), dtype=np.float64)
    rec_counts = np.zeros(profile.size, dtype=np.int64)
    delta_cache: dict[tuple[int, ...], float] = {}
    cum = 0.0
    manipulated = 0
    all_targets_rounds = 0
    lock_rounds = 0
    g = 0
    last_round = cfg.horizon if stop_after is None else min(stop_after, cfg.horizon)

    for t in range(1, last_round + 1):
        if state_hook is not None:
            state_hook(t, ranker)
        ranked = ranker.recommend()

        fb = transform(t, ranked, adv) if transform else None
        if fb is None:
            if cfg.model == CASCADE:
                fb = cascade_simulate(ranked, profile, env)
            else:
                fb = pbm_simulate(ranked, profile, cfg.bias, env)
        else:
            manipulated += 1

        key = ranked.positions
        delta = delta_cache.get(key)
        if delta is None:
            delta = f_star - expected_reward(kind, ranked, profile)
            delta_cache[key] = delta
        if realized and not fb.manipulated:
            step = f_star - float(sum(fb.clicks))
        else:
            step = delta
        cum += step

        for item in key:
            rec_counts[item - 1] += 1
        if targets and all(a in key for a in targets):
            all_targets_rounds += 1
        if transform and t > budget and all(a in promoted for a in key):
            lock_rounds += 1

        if event_log is not None:
            event_log.append(
                EventLogRow(
                    t=t,
                    listed=key,
                    exam=fb.exam,
                    clicks=fb.clicks,
                    manipulated=fb.manipulated,
                    regret_delta=step,
                    state=ranker.snapshot() if log_state else None,
                )
            )

        ranker.update(ranked, fb)

        if g < len(grid) and t == grid[g]:
            curve[g] = cum
            g += 1

    return _assemble(resolved, run_index, cum, curve, rec_counts, manipulated,
                     all_targets_rounds, lock_rounds, rounds_run=last_round)


def _run_fast(resolved: ResolvedExperiment, run_index: int) -> RunResult:
    cfg = resolved.config
    n_items = cfg.profile.size
    k = cfg.k
    w = cfg.profile.as_array()
    env = RngStream.from_key(cfg.master_seed, run_index, ENV_STREAM)
    adv = RngStream.from_key(cfg.master_seed, run_index, ADV_STREAM)

    if cfg.attack == ATTACK_NONE:
        attack_kind = _kernels.ATTACK_NONE
    elif cfg.attack in (CASCADE_OFA, PBM_OFA):
        attack_kind = _kernels.ATTACK_OFA
    else:
        attack_kind = _kernels.ATTACK_ATQ
    sched = resolved.schedule
    phase1 = sched.phase1_rounds if isinstance(
        sched, (CascadeOfaSchedule, PbmOfaSchedule)
    ) and cfg.attack in (CASCADE_OFA, PBM_OFA) else 0
    phase2 = sched.phase2_rounds if phase1 else 0
    budget = resolved.budget

    target_mask = np.zeros(n_items, dtype=np.bool_)
    promo_mask = np.zeros(n_items, dtype=np.bool_)
    promo = np.zeros(max(k, 1), dtype=np.int64)
    if resolved.target_spec is not None:
        for a in resolved.target_spec.targets:
            target_mask[a - 1] = True
        for i, a in enumerate(resolved.target_spec.promotion_list):
            promo_mask[a - 1] = True
            promo[i] = a - 1

    grid = resolved.grid
    curve = np.zeros(len(grid), dtype=np.float64)
    rec_counts = np.zeros(n_items, dtype=np.int64)
    dummy_lists = np.zeros((1, 1), dtype=np.int32)

    if cfg.model == CASCADE:
        env_u = env.uniforms(k * cfg.horizon)
        exam_out = np.zeros(n_items, dtype=np.int64)
        means_out = np.zeros(n_items, dtype=np.float64)
        cum, manipulated, all_t, lock, _ = _kernels.run_cascade(
            w, k, cfg.horizon, cfg.alpha, resolved.best_reward,
            attack_kind, phase1, phase2, budget,
            promo, target_mask, promo_mask,
            env_u, grid, curve, rec_counts, False, dummy_lists,
            exam_out, means_out,
        )
    else:
        p = cfg.bias.as_array()
        env_u = env.uniforms(2 * k * cfg.horizon)
        atk_u = adv.uniforms(max(k * budget, 1)) if attack_kind else np.zeros(1)
        nrec_out = np.zeros(n_items, dtype=np.int64)
        nclick_out = np.zeros(n_items, dtype=np.int64)
        examest_out = np.zeros(n_items, dtype=np.float64)
        cum, manipulated, all_t, lock, _, _ = _kernels.run_pbm(
            w, p, k, cfg.horizon, cfg.alpha, resolved.best_reward,
            attack_kind, phase1, phase2, budget,
            promo_mask, target_mask,
            env_u, atk_u, grid, curve, rec_counts, False, dummy_lists,
            nrec_out, nclick_out, examest_out,
        )

    return _assemble(resolved, run_index, cum, curve, rec_counts, manipulated,
                     all_t, lock)


def _assemble(resolved, run_index, cum, curve, rec_counts, manipulated,
              all_targets_rounds, lock_rounds, rounds_run=None) -> RunResult:
    cfg = resolved.config
    horizon = cfg.horizon if rounds_run is None else rounds_run
    post = horizon - resolved.budget
    if resolved.target_spec is not None and post > 0 and cfg.attack != ATTACK_NONE:
        lock = lock_rounds / post
    else:
        lock = None
    coverage = all_targets_rounds / horizon if resolved.target_spec else 0.0
    return RunResult(
        run_index=run_index,
        final_regret=float(cum),
        curve_rounds=tuple(int(r) for r in resolved.grid),
        curve_values=tuple(float(v) for v in curve),
        rec_counts=tuple(int(c) for c in rec_counts),
        manipulated_rounds=int(manipulated),
        target_coverage=coverage,
        post_attack_lock=lock,
    )


def run_once(
    config: ExperimentConfig,
    run_index: int = 0,
    *,
    event_log: list | None = None,
    state_hook=None,
    stop_after: int | None = None,
    log_state: bool = False,
) -> RunResult:
    """Execute one full run; streams derive from (master_seed, run_index).

    Event logs, state hooks, and truncation force the reference engine (they
    observe per-round internals the compiled loop does not expose).
    ``log_state`` attaches per-item ranker rows (counters and UCBs as used
    for that round's recommendation) to each event-log entry. ``stop_after``
    cuts the loop short while keeping schedules derived from the configured
    horizon — a diagnostic for inspecting attack phases at full scale
    without paying for the full run; coverage and lock fractions are then
    relative to the executed rounds.
    """
    resolved = resolve_experiment(config)
    needs_reference = (
        config.engine == "reference"
        or event_log is not None
        or state_hook is not None
        or stop_after is not None
    )
    if needs_reference:
        return _run_reference(
            resolved, run_index, event_log, state_hook, stop_after, log_state
        )
    return _run_fast(resolved, run_index)


def _worker(payload) -> RunResult:
    config, run_index = payload
    return run_once(config, run_index)


def run_many(config: ExperimentConfig, workers: int = 1) -> ExperimentSummary:
    """Replicate over run indices 0..runs-1 and aggregate in run order."""
    resolved = resolve_experiment(config)
    indices = list(range(config.runs))
    if workers > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, [(config, i) for i in indices]))
    else:
        results = [run_once(config, i) for i in indices]
    results.sort(key=lambda r: r.run_index)
    return summarize(config, resolved, tuple(results))


def summarize(
    config: ExperimentConfig,
    resolved: ResolvedExperiment,
    results: tuple[RunResult, ...],
) -> ExperimentSummary:
    finals = np.array([r.final_regret for r in results], dtype=np.float64)
    counts = np.array([r.rec_counts for r in results], dtype=np.float64)
    curves = np.array([r.curve_values for r in results], dtype=np.float64)
    std = float(finals.std(ddof=1)) if len(results) > 1 else 0.0
    curve_std = (
        curves.std(axis=0, ddof=1) if len(results) > 1 else np.zeros(curves.shape[1])
    )
    bar = TARGET_COVERAGE_BAR * config.horizon
    success = 0
    if resolved.target_spec is not None:
        for r in results:
            if all(r.rec_counts[a - 1] >= bar for a in resolved.target_spec.targets):
                success += 1
    return ExperimentSummary(
        config=config,
        schedule=resolved.schedule.as_dict() if resolved.schedule else None,
        budget=resolved.budget,
        results=results,
        mean_final_regret=float(finals.mean()),
        std_final_regret=std,
        mean_rec_counts=tuple(float(c) for c in counts.mean(axis=0)),
        success_runs=success,
        curve_rounds=results[0].curve_rounds,
        curve_mean=tuple(float(v) for v in curves.mean(axis=0)),
        curve_std=tuple(float(v) for v in curve_std),
    )
