"""Compiled round loops for full-scale runs.

These mirror the pure-Python reference engine operation for operation:
identical UCB expressions, identical tie-breaking (strict > keeps the
smallest index), identical RNG consumption order (cascade rounds draw one
uniform per examined position; position-based rounds draw K examination then
K attraction uniforms; attack rounds draw K adversary uniforms and no
environment uniforms). The equivalence test in the suite holds the two
engines to bit-identical trajectories, so any change here must be made in
the reference engine too.

Uniform buffers are pre-drawn by the caller from the run's streams; the
kernels consume a prefix and report how much they used.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ATTACK_NONE = 0
ATTACK_OFA = 1
ATTACK_ATQ = 2


@njit(cache=True)
def _select_top_k(scores, k, chosen, taken):
    # K items with the largest scores, descending, ties toward lower index.
    n = scores.shape[0]
    for i in range(n):
        taken[i] = False
    for slot in range(k):
        best = -1
        best_score = -np.inf
        for i in range(n):
            if not taken[i] and (best < 0 or scores[i] > best_score):
                best = i
                best_score = scores[i]
        taken[best] = True
        chosen[slot] = best


@njit(cache=True)
def run_cascade(
    w,
    k,
    horizon,
    alpha,
    f_star,
    attack_kind,
    phase1,
    phase2,
    budget,
    promo,
    target_mask,
    promo_mask,
    env_u,
    grid,
    curve,
    rec_counts,
    record_lists,
    lists_out,
    exam_counts_out,
    means_out,
):
    n_items = w.shape[0]
    exam_counts = np.ones(n_items, dtype=np.int64)
    means = np.zeros(n_items, dtype=np.float64)
    scores = np.empty(n_items, dtype=np.float64)
    chosen = np.empty(k, dtype=np.int64)
    taken = np.zeros(n_items, dtype=np.bool_)

    n_targets = 0
    for i in range(n_items):
        if target_mask[i]:
            n_targets += 1

    env_pos = 0
    cum = 0.0
    manipulated = 0
    all_targets_rounds = 0
    lock_rounds = 0
    g = 0

    for t in range(1, horizon + 1):
        lt = math.log(t)
        c = alpha * lt
        for i in range(n_items):
            scores[i] = means[i] + math.sqrt(c / exam_counts[i])
        _select_top_k(scores, k, chosen, taken)

        # feedback as (exam_len, click_pos): cascade examinations are always
        # a prefix, with the click (if any) at the last examined position
        click_pos = 0
        exam_len = k
        if attack_kind == ATTACK_OFA and t <= budget:
            manipulated += 1
            if t > phase1:
                num = k * (t - phase1)
                sub = -(-num // phase2)  # ceil
                wanted = promo[sub - 1]
                for pos in range(k):
                    if chosen[pos] == wanted:
                        click_pos = pos + 1
                        exam_len = click_pos
                        break
        elif attack_kind == ATTACK_ATQ and t <= budget:
            manipulated += 1
            for pos in range(k):
                if target_mask[chosen[pos]]:
                    click_pos = pos + 1
                    exam_len = click_pos
                    break
        else:
            for pos in range(k):
                u = env_u[env_pos]
                env_pos += 1
                if u < w[chosen[pos]]:
                    click_pos = pos + 1
                    exam_len = click_pos
                    break

        miss = 1.0
        for pos in range(k):
            miss *= 1.0 - w[chosen[pos]]
        cum += f_star - (1.0 - miss)

        present = 0
        in_promo = 0
        for pos in range(k):
            i = chosen[pos]
            rec_counts[i] += 1
            if target_mask[i]:
                present += 1
            if promo_mask[i]:
                in_promo += 1
        if n_targets > 0 and present == n_targets:
            all_targets_rounds += 1
        if attack_kind != ATTACK_NONE and t > budget and in_promo == k:
            lock_rounds += 1

        for pos in range(exam_len):
            i = chosen[pos]
            n_old = exam_counts[i]
            exam_counts[i] = n_old + 1
            reward = 1.0 if pos + 1 == click_pos else 0.0
            means[i] = (means[i] * n_old + reward) / (n_old + 1)

        if record_lists:
            for pos in range(k):
                lists_out[t - 1, pos] = chosen[pos] + 1

        if g < grid.shape[0] and t == grid[g]:
            curve[g] = cum
            g += 1

    for i in range(n_items):
        exam_counts_out[i] = exam_counts[i]
        means_out[i] = means[i]
    return cum, manipulated, all_targets_rounds, lock_rounds, env_pos


@njit(cache=True)
def run_pbm(
    w,
    p,
    k,
    horizon,
    alpha,
    f_star,
    attack_kind,
    phase1,
    phase2,
    budget,
    promo_mask,
    target_mask,
    env_u,
    atk_u,
    grid,
    curve,
    rec_counts,
    record_lists,
    lists_out,
    rec_counts_state_out,
    click_counts_out,
    exam_estimate_out,
):
    n_items = w.shape[0]
    n_rec = np.ones(n_items, dtype=np.int64)
    n_click = np.zeros(n_items, dtype=np.int64)
    exam_est = np.zeros(n_items, dtype=np.float64)
    scores = np.empty(n_items, dtype=np.float64)
    chosen = np.empty(k, dtype=np.int64)
    taken = np.zeros(n_items, dtype=np.bool_)
    rewards = np.zeros(k, dtype=np.int64)

    n_targets = 0
    for i in range(n_items):
        if target_mask[i]:
            n_targets += 1

    env_pos = 0
    atk_pos = 0
    cum = 0.0
    manipulated = 0
    all_targets_rounds = 0
    lock_rounds = 0
    g = 0

    for t in range(1, horizon + 1):
        lt = math.log(t)
        for i in range(n_items):
            nt = exam_est[i]
            if nt == 0.0:
                scores[i] = np.inf
            else:
                scores[i] = n_click[i] / nt + math.sqrt(
                    alpha * n_rec[i] * lt / (nt * nt)
                )
        _select_top_k(scores, k, chosen, taken)

        if attack_kind != ATTACK_NONE and t <= budget:
            manipulated += 1
            # adversary examination draws, one per position
            in_phase1 = attack_kind == ATTACK_OFA and t <= phase1
            for pos in range(k):
                examined = atk_u[atk_pos] < p[pos]
                atk_pos += 1
                if examined and not in_phase1 and promo_mask[chosen[pos]]:
                    rewards[pos] = 1
                else:
                    rewards[pos] = 0
        else:
            # true user round: K examination draws then K attraction draws
            base = env_pos + k
            for pos in range(k):
                examined = env_u[env_pos + pos] < p[pos]
                clicked = examined and env_u[base + pos] < w[chosen[pos]]
                rewards[pos] = 1 if clicked else 0
            env_pos += 2 * k

        f = 0.0
        for pos in range(k):
            f += p[pos] * w[chosen[pos]]
        cum += f_star - f

        present = 0
        in_promo = 0
        for pos in range(k):
            i = chosen[pos]
            rec_counts[i] += 1
            if target_mask[i]:
                present += 1
            if promo_mask[i]:
                in_promo += 1
        if n_targets > 0 and present == n_targets:
            all_targets_rounds += 1
        if attack_kind != ATTACK_NONE and t > budget and in_promo == k:
            lock_rounds += 1

        for pos in range(k):
            i = chosen[pos]
            n_rec[i] += 1
            n_click[i] += rewards[pos]
            exam_est[i] += p[pos]

        if record_lists:
            for pos in range(k):
                lists_out[t - 1, pos] = chosen[pos] + 1

        if g < grid.shape[0] and t == grid[g]:
            curve[g] = cum
            g += 1

    for i in range(n_items):
        rec_counts_state_out[i] = n_rec[i]
        click_counts_out[i] = n_click[i]
        exam_estimate_out[i] = exam_est[i]
    return cum, manipulated, all_targets_rounds, lock_rounds, env_pos, atk_pos
