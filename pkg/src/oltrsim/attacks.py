"""Reward-poisoning attack strategies against the UCB rankers.

The observation-free attacks run in three phases. Phase 1 dictates zero
reward for everything, sinking every item's UCB below a chosen threshold.
Phase 2 feeds clicks to the items of a K-item promotion list so that exactly
those items end the phase with UCBs above the threshold. Phase 3 applies no
manipulation: the ranker, having learned that only the promoted items look
attractive, keeps recommending permutations of the promotion list.

Phase lengths are closed-form functions of (alpha, horizon, K, L, threshold)
— and of the position-bias spread for the position-based variant — computed
with exact integer ceilings. The attack-then-quit baselines spend the same
manipulation budget naively: they click targets from round one and stop.

Transforms return a dictated ``FeedbackRound`` while the attack is active
and ``None`` afterwards (pass-through: the true user feedback is used).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    FeedbackRound,
    PositionBias,
    RankedList,
    RngStream,
    ValidationError,
)
from .click_models import cascade_synthesize


@dataclass(frozen=True)
class TargetSpec:
    """Items to promote, plus the K-item promotion list that pads them.

    ``targets`` is the promoted set S (N <= K items); ``promotion_list`` has
    exactly K distinct items and contains every target. When padding is
    needed it uses the smallest-identifier non-targets, which keeps runs
    reproducible.
    """

    targets: tuple[int, ...]
    promotion_list: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(a) for a in self.targets))
        object.__setattr__(
            self, "promotion_list", tuple(int(a) for a in self.promotion_list)
        )
        if len(set(self.promotion_list)) != len(self.promotion_list):
            raise ValidationError("promotion list has duplicate items")
        if not set(self.targets) <= set(self.promotion_list):
            raise ValidationError("promotion list must contain every target")

    @classmethod
    def padded(cls, targets, k: int, n_items: int) -> "TargetSpec":
        targets = tuple(int(a) for a in targets)
        if len(set(targets)) != len(targets):
            raise ValidationError("duplicate targets")
        if len(targets) > k:
            raise ValidationError(f"more than K={k} targets")
        for a in targets:
            if not 1 <= a <= n_items:
                raise ValidationError(f"target {a} outside item universe 1..{n_items}")
        fill = [a for a in range(1, n_items + 1) if a not in targets]
        padded = tuple(targets) + tuple(fill[: k - len(targets)])
        if len(padded) != k:
            raise ValidationError("item universe too small to pad the promotion list")
        return cls(targets=targets, promotion_list=padded)


@dataclass(frozen=True)
class CascadeOfaSchedule:
    """Phase lengths for the observation-free attack on the cascade ranker."""

    threshold: float  # suppression level; in (0, min(1/K, smallest target weight))
    phase1_rounds: int
    phase2_rounds: int
    k: int

    @property
    def budget(self) -> int:
        return self.phase1_rounds + self.phase2_rounds

    @property
    def sub_phase_len(self) -> int:
        return self.phase2_rounds // self.k

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "phase1_rounds": self.phase1_rounds,
            "phase2_rounds": self.phase2_rounds,
            "budget": self.budget,
        }


@dataclass(frozen=True)
class PbmOfaSchedule:
    """Phase lengths and derived constants for the position-based attack."""

    threshold: float
    bias_spread: float  # p_1 / p_K
    exam_margin: float  # p_K - p_1 * threshold; must stay positive
    phase1_load: float  # scaled surplus of phase-1 placements over the bound
    promotion_rate: float  # required phase-2 clicks per log(horizon)
    phase1_rounds: int
    phase2_rounds: int
    bias: PositionBias

    @property
    def budget(self) -> int:
        return self.phase1_rounds + self.phase2_rounds

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "bias_spread": self.bias_spread,
            "exam_margin": self.exam_margin,
            "phase1_load": self.phase1_load,
            "promotion_rate": self.promotion_rate,
            "phase1_rounds": self.phase1_rounds,
            "phase2_rounds": self.phase2_rounds,
            "budget": self.budget,
        }


def derive_cascade_threshold(w_min_bound: float, k: int, epsilon: float) -> float:
    """Suppression threshold (1 - epsilon) * min(1/K, w_min_bound).

    Any value strictly below both 1/K and the smallest target weight works;
    callers may bypass this and supply a threshold directly.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < w_min_bound <= 1.0:
        raise ValidationError(f"weight bound must lie in (0, 1], got {w_min_bound}")
    return (1.0 - epsilon) * min(1.0 / k, w_min_bound)


def cascade_ofa_params(
    alpha: float, horizon: int, k: int, n_items: int, threshold: float
) -> CascadeOfaSchedule:
    """Exact phase lengths for the cascade attack.

    phase1 = L * ceil(alpha * ln T / (K * threshold^2)) sinks every UCB to
    the threshold; phase2 = K * ceil((threshold*K*phase1/L + L - K + 1)
    / (1 - K*threshold)) lifts the promoted items above it, split into K
    equal sub-phases. The threshold must stay below 1/K or phase 2's
    denominator is nonpositive.
    """
    if not alpha > 1:
        raise ValidationError(f"exploration parameter must exceed 1, got {alpha}")
    if horizon < 3:
        raise ValidationError("horizon must be at least 3")
    if not 1 <= k <= n_items:
        raise ValidationError(f"need 1 <= K <= L, got K={k}, L={n_items}")
    if not 0.0 < threshold < 1.0 / k:
        raise ValidationError(
            f"threshold must lie in (0, 1/K) = (0, {1.0 / k:.6g}), got {threshold}"
        )
    log_t = math.log(horizon)
    phase1 = n_items * math.ceil(alpha * log_t / (k * threshold * threshold))
    numer = threshold * k * phase1 / n_items + n_items - k + 1
    phase2 = k * math.ceil(numer / (1.0 - k * threshold))
    return CascadeOfaSchedule(
        threshold=threshold, phase1_rounds=phase1, phase2_rounds=phase2, k=k
    )


def pbm_ofa_params(
    alpha: float,
    horizon: int,
    k: int,
    n_items: int,
    bias: PositionBias,
    threshold: float,
) -> PbmOfaSchedule:
    """Exact phase lengths for the position-based attack.

    Derivation order matters: the bias spread and phase 1 come first, the
    phase-1 load is computed from the already-ceiled phase-1 length, then the
    examination margin, the promotion rate, and finally phase 2. Rejects
    thresholds at or above 1/spread (margin would be nonpositive) and load
    values that would put the promotion rate's square root below zero.
    """
    if not alpha > 1:
        raise ValidationError(f"exploration parameter must exceed 1, got {alpha}")
    if horizon < 3:
        raise ValidationError("horizon must be at least 3")
    if not 1 <= k <= n_items:
        raise ValidationError(f"need 1 <= K <= L, got K={k}, L={n_items}")
    if len(bias) != k:
        raise ValidationError(f"bias length {len(bias)} != K={k}")
    spread = bias.spread
    if not 0.0 < threshold < min(1.0 / spread, 1.0):
        raise ValidationError(
            f"threshold must lie in (0, min(1/spread, 1)) = "
            f"(0, {min(1.0 / spread, 1.0):.6g}), got {threshold}"
        )
    p1 = bias.p[0]
    pk = bias.p[-1]
    log_t = math.log(horizon)
    wsq = threshold * threshold
    phase1 = math.ceil(
        (n_items / k) * (spread * spread * alpha * log_t / (wsq * pk * pk) + 1.0)
    )
    load = p1 * threshold * (
        k * phase1 / log_t - (n_items - 1) * alpha / (wsq * pk * pk)
    )
    margin = pk - p1 * threshold
    disc = 4.0 * load * margin + 1.0
    if disc < 0.0:
        raise ValidationError(
            f"phase-2 rate undefined: 4*load*margin + 1 = {disc:.6g} < 0"
        )
    rate = (2.0 * load * margin + 1.0 + math.sqrt(disc)) / (2.0 * margin * margin)
    phase2 = math.ceil(n_items * (spread * spread * rate * log_t + 1.0) / k)
    return PbmOfaSchedule(
        threshold=threshold,
        bias_spread=spread,
        exam_margin=margin,
        phase1_load=load,
        promotion_rate=rate,
        phase1_rounds=phase1,
        phase2_rounds=phase2,
        bias=bias,
    )


def sub_phase_index(k: int, t: int, phase1_rounds: int, phase2_rounds: int) -> int:
    """Which of the K equal phase-2 sub-phases round t falls in (1-based).

    ceil(K * (t - phase1) / phase2) with integer arithmetic only; valid for
    phase1 < t <= phase1 + phase2.
    """
    num = k * (t - phase1_rounds)
    return -(-num // phase2_rounds)


def cascade_ofa_transform(
    schedule: CascadeOfaSchedule,
    targets: TargetSpec,
    t: int,
    ranked: RankedList,
) -> FeedbackRound | None:
    """Dictated cascade feedback for round t, or None once the attack ends.

    Phase 1: every listed item examined, none clicked. Phase 2, sub-phase i:
    click the i-th promotion-list item at its position when listed (the scan
    stops there, so lower items stay unexamined); otherwise a full
    examined-and-ignored scan.
    """
    if t < 1:
        raise ValidationError("round number must be >= 1")
    if t <= schedule.phase1_rounds:
        return cascade_synthesize(ranked, None)
    if t <= schedule.budget:
        i = sub_phase_index(schedule.k, t, schedule.phase1_rounds, schedule.phase2_rounds)
        wanted = targets.promotion_list[i - 1]
        pos = ranked.position_of(wanted)
        return cascade_synthesize(ranked, pos)
    return None


def pbm_ofa_transform(
    schedule: PbmOfaSchedule,
    targets: TargetSpec,
    t: int,
    ranked: RankedList,
    rng: RngStream,
) -> FeedbackRound | None:
    """Dictated position-based feedback for round t, or None after the attack.

    Every attack round draws a fresh examination vector from the position
    bias (K draws). Phase 1 reports no clicks at all; phase 2 reports a click
    for every listed promotion-list item whose position came up examined.
    """
    if t < 1:
        raise ValidationError("round number must be >= 1")
    if t > schedule.budget:
        return None
    k = len(ranked)
    exam = [1 if rng.uniform() < schedule.bias.p[i] else 0 for i in range(k)]
    if t <= schedule.phase1_rounds:
        clicks = [0] * k
    else:
        promoted = set(targets.promotion_list)
        clicks = [
            1 if exam[i] and item in promoted else 0
            for i, item in enumerate(ranked)
        ]
    return FeedbackRound.for_list(ranked, exam, clicks, manipulated=True)


def cascade_atq_transform(
    budget: int,
    targets: TargetSpec,
    t: int,
    ranked: RankedList,
) -> FeedbackRound | None:
    """Attack-then-quit baseline for cascade feedback.

    While the budget lasts, click the top-most listed target (cascade
    semantics); with no target listed, report a full ignored scan. Afterwards
    pass the true feedback through.
    """
    if t < 1:
        raise ValidationError("round number must be >= 1")
    if t > budget:
        return None
    target_set = set(targets.targets)
    pos = None
    for i, item in enumerate(ranked):
        if item in target_set:
            pos = i + 1
            break
    return cascade_synthesize(ranked, pos)


def pbm_atq_transform(
    budget: int,
    targets: TargetSpec,
    t: int,
    ranked: RankedList,
    bias: PositionBias,
    rng: RngStream,
) -> FeedbackRound | None:
    """Attack-then-quit baseline for position-based feedback.

    While the budget lasts, draw an examination vector from the bias and
    click every examined listed promotion-list item, ignoring the rest.
    """
    if t < 1:
        raise ValidationError("round number must be >= 1")
    if t > budget:
        return None
    k = len(ranked)
    exam = [1 if rng.uniform() < bias.p[i] else 0 for i in range(k)]
    promoted = set(targets.promotion_list)
    clicks = [
        1 if exam[i] and item in promoted else 0 for i, item in enumerate(ranked)
    ]
    return FeedbackRound.for_list(ranked, exam, clicks, manipulated=True)
