"""Click feedback simulation and exact expected-reward computation.

Two user models are supported. Under the cascade model the user scans the
list top-down and clicks the first attractive item, so a round has at most
one click and nothing below the click is examined. Under the position-based
model every position i is examined independently with probability p_i and an
examined item is clicked with its attraction probability, so several clicks
per round are possible.

RNG discipline (load-bearing for reproducibility across engines): cascade
rounds draw one uniform per examined position, lazily, top to bottom; PBM
rounds always draw exactly 2K uniforms — K examination draws then K
attraction draws, in position order — even for unexamined positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AttractionProfile,
    FeedbackRound,
    PositionBias,
    RankedList,
    RngStream,
    ValidationError,
    optimal_list,
)

CASCADE = "cascade"
PBM = "pbm"


@dataclass(frozen=True)
class ClickModelKind:
    """Model selector; the position-based variant carries its bias vector."""

    tag: str
    bias: PositionBias | None = None

    def __post_init__(self):
        if self.tag not in (CASCADE, PBM):
            raise ValidationError(f"unknown click model {self.tag!r}")
        if self.tag == PBM and self.bias is None:
            raise ValidationError("position-based model requires a bias vector")

    @classmethod
    def cascade(cls) -> "ClickModelKind":
        return cls(CASCADE)

    @classmethod
    def pbm(cls, bias: PositionBias) -> "ClickModelKind":
        return cls(PBM, bias)


def cascade_simulate(
    ranked: RankedList, profile: AttractionProfile, rng: RngStream
) -> FeedbackRound:
    """Simulate one cascade round.

    Scans positions top to bottom; the first Bernoulli(w_a) success is the
    click, everything above it (inclusive) is examined, everything below is
    not. With no success all K positions are examined and nothing is clicked.
    """
    k = len(ranked)
    exam = [0] * k
    clicks = [0] * k
    for i, item in enumerate(ranked):
        exam[i] = 1
        if rng.uniform() < profile.weight(item):
            clicks[i] = 1
            break
    return FeedbackRound.for_list(ranked, exam, clicks)


def pbm_simulate(
    ranked: RankedList,
    profile: AttractionProfile,
    bias: PositionBias,
    rng: RngStream,
) -> FeedbackRound:
    """Simulate one position-based round (exactly 2K draws, fixed order)."""
    k = len(ranked)
    if len(bias) != k:
        raise ValidationError(f"bias length {len(bias)} != list length {k}")
    exam_u = [rng.uniform() for _ in range(k)]
    attr_u = [rng.uniform() for _ in range(k)]
    exam = [1 if exam_u[i] < bias.p[i] else 0 for i in range(k)]
    clicks = [
        1 if exam[i] and attr_u[i] < profile.weight(item) else 0
        for i, item in enumerate(ranked)
    ]
    return FeedbackRound.for_list(ranked, exam, clicks)


def cascade_synthesize(
    ranked: RankedList, clicked_position: int | None = None
) -> FeedbackRound:
    """Build a dictated cascade round with a click at the given 1-based
    position (scan stops there) or, with no position, a full examined-and-
    ignored scan. Used by attacks that replace the user's feedback, so the
    round is marked manipulated.
    """
    k = len(ranked)
    if clicked_position is None:
        return FeedbackRound.for_list(ranked, [1] * k, [0] * k, manipulated=True)
    if not 1 <= clicked_position <= k:
        raise ValidationError(f"clicked position {clicked_position} outside 1..{k}")
    exam = [1 if i < clicked_position else 0 for i in range(k)]
    clicks = [1 if i + 1 == clicked_position else 0 for i in range(k)]
    return FeedbackRound.for_list(ranked, exam, clicks, manipulated=True)


def expected_reward(
    kind: ClickModelKind, ranked: RankedList, profile: AttractionProfile
) -> float:
    """Exact expected number of clicks for one round of the given list.

    Cascade: 1 - prod(1 - w_a) over listed items. Position-based:
    sum(p_i * w_{a_i}) over positions. Both are accumulated in position
    order so the value is bit-identical to the compiled engine's.
    """
    if kind.tag == CASCADE:
        miss = 1.0
        for item in ranked:
            miss *= 1.0 - profile.weight(item)
        return 1.0 - miss
    total = 0.0
    for i, item in enumerate(ranked):
        total += kind.bias.p[i] * profile.weight(item)
    return total


def per_round_regret(
    kind: ClickModelKind, ranked: RankedList, profile: AttractionProfile
) -> float:
    """Expected-reward gap between the optimal list and the given one."""
    best = optimal_list(profile, len(ranked))
    return expected_reward(kind, best, profile) - expected_reward(kind, ranked, profile)


def mc_expected_clicks(
    kind: ClickModelKind,
    ranked: RankedList,
    profile: AttractionProfile,
    rounds: int,
    rng: RngStream,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the expected clicks per round.

    Vectorized and independent of both the closed form above and the
    per-round simulators; used as the oracle side of the equivalence checks.
    Returns (mean clicks per round, standard error of that mean).
    """
    w = np.array([profile.weight(a) for a in ranked])
    k = len(ranked)
    if kind.tag == CASCADE:
        u = rng.uniforms(rounds * k).reshape(rounds, k)
        hits = u < w
        # cascade yields exactly one click iff any position would attract
        clicks = hits.any(axis=1).astype(np.float64)
    else:
        p = kind.bias.as_array()
        exam_u = rng.uniforms(rounds * k).reshape(rounds, k)
        attr_u = rng.uniforms(rounds * k).reshape(rounds, k)
        clicks = ((exam_u < p) & (attr_u < w)).sum(axis=1).astype(np.float64)
    mean = float(clicks.mean())
    stderr = float(clicks.std(ddof=1) / np.sqrt(rounds))
    return mean, stderr
