from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oltrsim.attacks import (
    TargetSpec,
    cascade_atq_transform,
    cascade_ofa_params,
    cascade_ofa_transform,
    derive_cascade_threshold,
    pbm_atq_transform,
    pbm_ofa_params,
    pbm_ofa_transform,
    sub_phase_index,
)
from oltrsim.core import PositionBias, RankedList, RngStream, ValidationError

# frozen 50-digit precompute of the phase formulas at the canonical settings
CANON_CASCADE = dict(phase1=10260, phase2=1005)
CANON_PBM = dict(
    phase1=17728,
    phase2=6876,
    bias_spread=0.95 / 0.85,
    exam_margin=0.774,
    phase1_load=86.136749841653522775801328279274701580220979748551,
    promotion_rate=125.77752972924981194194994007717755352620144734425,
)
# same formulas at the small diagnostic instance (L=6, K=2, T=2e4, wm=0.1)
SMALL_PBM = dict(phase1=7708, phase2=2856)
# cascade manipulation totals across horizons (closed-form evaluation)
CASCADE_BUDGETS = {10_000: 7914, 100_000: 9885, 1_000_000: 11856}


class TestTargetSpec:
    def test_pads_with_smallest_nontargets(self):
        spec = TargetSpec.padded((7, 10), 3, 10)
        assert spec.promotion_list == (7, 10, 1)

    def test_full_target_set_needs_no_padding(self):
        spec = TargetSpec.padded((4, 7, 10), 3, 10)
        assert spec.promotion_list == (4, 7, 10)

    def test_rejects_too_many_targets(self):
        with pytest.raises(ValidationError):
            TargetSpec.padded((1, 2, 3, 4), 3, 10)

    def test_rejects_unknown_items(self):
        with pytest.raises(ValidationError):
            TargetSpec.padded((11,), 3, 10)


class TestDeriveThreshold:
    def test_canonical_value(self):
        # smallest target weight 0.082; epsilon chosen to land on 0.08
        eps = 1 - 0.08 / 0.082
        assert derive_cascade_threshold(0.082, 3, eps) == pytest.approx(0.08)

    def test_unit_bound_uses_list_size(self):
        assert derive_cascade_threshold(1.0, 2, 0.5) == pytest.approx(0.25)

    def test_rejects_epsilon_one(self):
        with pytest.raises(ValidationError):
            derive_cascade_threshold(0.5, 3, 1.0)


class TestCascadeParams:
    def test_canonical_settings(self):
        s = cascade_ofa_params(1.5, 500_000, 3, 10, 0.08)
        assert (s.phase1_rounds, s.phase2_rounds) == (
            CANON_CASCADE["phase1"],
            CANON_CASCADE["phase2"],
        )
        assert s.budget == 11_265
        assert s.sub_phase_len == 335

    def test_hand_evaluated_example(self):
        s = cascade_ofa_params(2.0, 10_000, 2, 4, 0.1)
        assert (s.phase1_rounds, s.phase2_rounds) == (3688, 470)

    def test_rejects_threshold_at_reciprocal_k(self):
        with pytest.raises(ValidationError):
            cascade_ofa_params(1.5, 10_000, 2, 4, 0.5)

    def test_budgets_across_horizons(self):
        for horizon, budget in CASCADE_BUDGETS.items():
            s = cascade_ofa_params(1.5, horizon, 3, 10, 0.08)
            assert s.budget == budget

    def test_budget_growth_tracks_log(self):
        # doubling the horizon scales the budget like ln(2T)/ln(T)
        for horizon in (10_000, 100_000, 1_000_000):
            c1 = cascade_ofa_params(1.5, horizon, 3, 10, 0.08).budget
            c2 = cascade_ofa_params(1.5, 2 * horizon, 3, 10, 0.08).budget
            expected = math.log(2 * horizon) / math.log(horizon)
            assert c2 / c1 == pytest.approx(expected, rel=0.01)

    def test_phase2_is_multiple_of_k(self):
        for k in (2, 3, 4):
            s = cascade_ofa_params(1.5, 50_000, k, 10, 0.9 / k * 0.2)
            assert s.phase2_rounds % k == 0


class TestPbmParams:
    def test_canonical_settings_match_recomputation(self, bias3):
        s = pbm_ofa_params(1.5, 500_000, 3, 10, bias3, 0.08)
        assert (s.phase1_rounds, s.phase2_rounds) == (
            CANON_PBM["phase1"],
            CANON_PBM["phase2"],
        )
        assert s.bias_spread == pytest.approx(CANON_PBM["bias_spread"], rel=1e-9)
        assert s.exam_margin == pytest.approx(CANON_PBM["exam_margin"], rel=1e-9)
        assert s.phase1_load == pytest.approx(CANON_PBM["phase1_load"], rel=1e-9)
        assert s.promotion_rate == pytest.approx(
            CANON_PBM["promotion_rate"], rel=1e-9
        )

    def test_small_instance(self):
        s = pbm_ofa_params(1.5, 20_000, 2, 6, PositionBias((0.95, 0.85)), 0.1)
        assert (s.phase1_rounds, s.phase2_rounds) == (
            SMALL_PBM["phase1"],
            SMALL_PBM["phase2"],
        )

    def test_spread_and_margin_values(self, bias3):
        s = pbm_ofa_params(1.5, 500_000, 3, 10, bias3, 0.08)
        assert s.bias_spread == pytest.approx(1.117647, abs=1e-6)
        assert s.exam_margin == pytest.approx(0.85 - 0.95 * 0.08, abs=1e-12)

    def test_rejects_threshold_beyond_spread_reciprocal(self, bias3):
        with pytest.raises(ValidationError):
            pbm_ofa_params(1.5, 500_000, 3, 10, bias3, 0.9)


def _spec_4_7_10():
    return TargetSpec.padded((4, 7, 10), 3, 10)


class TestSubPhaseIndex:
    def test_boundaries(self):
        assert sub_phase_index(3, 10_261, 10_260, 1005) == 1
        assert sub_phase_index(3, 11_265, 10_260, 1005) == 3

    @given(k=st.integers(1, 6), per=st.integers(1, 50), phase1=st.integers(0, 1000))
    @settings(max_examples=100, deadline=None)
    def test_covers_exactly_1_to_k_in_equal_spans(self, k, per, phase1):
        phase2 = k * per
        seen = {}
        for t in range(phase1 + 1, phase1 + phase2 + 1):
            i = sub_phase_index(k, t, phase1, phase2)
            seen[i] = seen.get(i, 0) + 1
        assert set(seen) == set(range(1, k + 1))
        assert all(count == per for count in seen.values())


class TestCascadeOfaTransform:
    def test_phase1_scans_without_clicks(self):
        s = cascade_ofa_params(1.5, 500_000, 3, 10, 0.08)
        fb = cascade_ofa_transform(s, _spec_4_7_10(), s.phase1_rounds, RankedList((1, 2, 3)))
        assert fb.exam == (1, 1, 1)
        assert fb.clicks == (0, 0, 0)
        assert fb.manipulated

    def test_phase2_clicks_subphase_item_at_its_position(self):
        s = cascade_ofa_params(1.5, 500_000, 3, 10, 0.08)
        t = s.phase1_rounds + 1  # first sub-phase promotes item 4
        fb = cascade_ofa_transform(s, _spec_4_7_10(), t, RankedList((9, 4, 2)))
        assert fb.clicks == (0, 1, 0)
        assert fb.exam == (1, 1, 0)

    def test_phase2_without_subphase_item_scans(self):
        s = cascade_ofa_params(1.5, 500_000, 3, 10, 0.08)
        t = s.phase1_rounds + 1
        fb = cascade_ofa_transform(s, _spec_4_7_10(), t, RankedList((1, 2, 3)))
        assert fb.clicks == (0, 0, 0)
        assert fb.exam == (1, 1, 1)

    def test_last_subphase_promotes_last_item(self):
        s = cascade_ofa_params(1.5, 500_000, 3, 10, 0.08)
        t = s.budget
        fb = cascade_ofa_transform(s, _spec_4_7_10(), t, RankedList((10, 1, 2)))
        assert fb.clicks == (1, 0, 0)

    def test_passes_through_after_budget(self):
        s = cascade_ofa_params(1.5, 500_000, 3, 10, 0.08)
        assert cascade_ofa_transform(s, _spec_4_7_10(), s.budget + 1, RankedList((1, 2, 3))) is None


class TestPbmOfaTransform:
    def _schedule(self, bias3):
        return pbm_ofa_params(1.5, 500_000, 3, 10, bias3, 0.08)

    def test_phase1_rewards_all_zero(self, bias3):
        s = self._schedule(bias3)
        rng = RngStream.from_key(0, 0, 1)
        fb = pbm_ofa_transform(s, _spec_4_7_10(), 1, RankedList((4, 7, 10)), rng)
        assert fb.clicks == (0, 0, 0)
        assert fb.manipulated

    def test_phase2_no_targets_listed_rewards_zero(self, bias3):
        s = self._schedule(bias3)
        rng = RngStream.from_key(0, 0, 1)
        fb = pbm_ofa_transform(
            s, _spec_4_7_10(), s.phase1_rounds + 1, RankedList((1, 2, 3)), rng
        )
        assert fb.clicks == (0, 0, 0)

    def test_phase2_reward_rate_matches_top_bias(self, bias3):
        s = self._schedule(bias3)
        rng = RngStream.from_key(0, 0, 1)
        t = s.phase1_rounds + 1
        n = 40_000
        hits = sum(
            pbm_ofa_transform(s, _spec_4_7_10(), t, RankedList((4, 1, 2)), rng).clicks[0]
            for _ in range(n)
        )
        se = math.sqrt(0.95 * 0.05 / n)
        assert abs(hits / n - 0.95) < 3 * se

    def test_passes_through_after_budget(self, bias3):
        s = self._schedule(bias3)
        rng = RngStream.from_key(0, 0, 1)
        assert pbm_ofa_transform(s, _spec_4_7_10(), s.budget + 1, RankedList((1, 2, 3)), rng) is None

    def test_consumes_no_draws_after_budget(self, bias3):
        s = self._schedule(bias3)
        a = RngStream.from_key(9, 0, 1)
        b = RngStream.from_key(9, 0, 1)
        pbm_ofa_transform(s, _spec_4_7_10(), s.budget + 1, RankedList((1, 2, 3)), a)
        assert a.uniform() == b.uniform()


class TestCascadeAtq:
    def test_clicks_topmost_target(self):
        fb = cascade_atq_transform(100, _spec_4_7_10(), 5, RankedList((4, 1, 7)))
        assert fb.clicks == (1, 0, 0)

    def test_ignores_listed_nontargets(self):
        fb = cascade_atq_transform(100, _spec_4_7_10(), 5, RankedList((1, 2, 3)))
        assert fb.exam == (1, 1, 1)
        assert fb.clicks == (0, 0, 0)

    def test_quits_after_budget(self):
        assert cascade_atq_transform(100, _spec_4_7_10(), 101, RankedList((4, 1, 7))) is None


class TestPbmAtq:
    def test_no_targets_no_rewards(self, bias3):
        rng = RngStream.from_key(1, 0, 1)
        fb = pbm_atq_transform(100, _spec_4_7_10(), 5, RankedList((1, 2, 3)), bias3, rng)
        assert fb.clicks == (0, 0, 0)

    def test_examined_target_rewarded(self, bias3):
        bias_certain = PositionBias((1.0, 1.0, 1.0))
        rng = RngStream.from_key(1, 0, 1)
        fb = pbm_atq_transform(
            100, _spec_4_7_10(), 5, RankedList((4, 1, 10)), bias_certain, rng
        )
        assert fb.clicks == (1, 0, 1)

    def test_quits_after_budget(self, bias3):
        rng = RngStream.from_key(1, 0, 1)
        assert pbm_atq_transform(100, _spec_4_7_10(), 101, RankedList((4, 1, 7)), bias3, rng) is None
