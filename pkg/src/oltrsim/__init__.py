"""Deterministic click-feedback bandit simulator.

Cascade and position-based click models, the UCB rankers that learn from
them, observation-free reward-poisoning attacks with closed-form phase
lengths, attack-then-quit baselines, and a seeded experiment harness.
"""

__version__ = "0.1.0"

from .core import (
    AttractionProfile,
    FeedbackRound,
    PositionBias,
    RankedList,
    RngStream,
    ValidationError,
    optimal_list,
    validate_profile,
)
from .click_models import (
    ClickModelKind,
    cascade_simulate,
    cascade_synthesize,
    expected_reward,
    mc_expected_clicks,
    pbm_simulate,
    per_round_regret,
)
from .rankers import CascadeUcb1, PbmUcb, ucb_cascade, ucb_pbm
from .attacks import (
    CascadeOfaSchedule,
    PbmOfaSchedule,
    TargetSpec,
    cascade_atq_transform,
    cascade_ofa_params,
    cascade_ofa_transform,
    derive_cascade_threshold,
    pbm_atq_transform,
    pbm_ofa_params,
    pbm_ofa_transform,
)
from .harness import (
    ExperimentConfig,
    ExperimentSummary,
    RunResult,
    run_many,
    run_once,
)
from .data_ingest import (
    attraction_probs,
    builtin_profile,
    parse_movielens,
    select_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
