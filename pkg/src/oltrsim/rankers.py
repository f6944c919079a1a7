"""UCB-based list rankers: one for cascade feedback, one for position-based.

Both rankers follow the same per-round contract: at the start of round t,
``recommend`` computes every item's UCB index with ln(t) and the counters
accumulated through round t-1, then returns the K items with the largest
index in descending order (ties toward the smaller item identifier);
``update`` folds one round of feedback into the counters and advances t.

There is no forced warm-start pass: the cascade ranker initializes every
item's examination counter to 1 with an empirical mean of 0, and the
position-based ranker initializes every recommendation counter to 1 while
the examination estimator starts at 0, so the first real observation is
averaged against one phantom zero. The attack-phase exactness tests depend
on this literal initialization.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    FeedbackRound,
    PositionBias,
    RankedList,
    ValidationError,
    top_k_by_score,
)


def ucb_cascade(mean: float, n_exam: int, t: int, alpha: float) -> float:
    """Cascade UCB index: empirical mean plus sqrt(alpha * ln t / n_exam)."""
    if n_exam < 1:
        raise ValidationError("examination count must be >= 1")
    if t < 1:
        raise ValidationError("round number must be >= 1")
    return mean + math.sqrt(alpha * math.log(t) / n_exam)


def ucb_pbm(clicks: int, n_rec: int, exam_estimate: float, t: int, alpha: float) -> float:
    """Position-based UCB index.

    clicks / exam_estimate + sqrt(alpha * n_rec * ln t / exam_estimate^2),
    with a +inf sentinel when the examination estimator is still zero so
    never-placed items are explored first.
    """
    if t < 1:
        raise ValidationError("round number must be >= 1")
    if exam_estimate < 0:
        raise ValidationError("examination estimate must be >= 0")
    if exam_estimate == 0.0:
        return math.inf
    lt = math.log(t)
    return clicks / exam_estimate + math.sqrt(
        alpha * n_rec * lt / (exam_estimate * exam_estimate)
    )


class CascadeUcb1:
    """Ranker for cascade feedback.

    Per item: an examination counter (initialized to 1) and an empirical
    click-per-examination mean (initialized to 0). Only examined items are
    updated; items below a click, or absent from the list, are untouched.
    """

    def __init__(self, n_items: int, k: int, alpha: float):
        if not alpha > 1:
            raise ValidationError(f"exploration parameter must exceed 1, got {alpha}")
        if not 1 <= k <= n_items:
            raise ValidationError(f"need 1 <= K <= L, got K={k}, L={n_items}")
        self.n_items = n_items
        self.k = k
        self.alpha = alpha
        self.t = 1
        self.exam_counts = np.ones(n_items, dtype=np.int64)
        self.means = np.zeros(n_items, dtype=np.float64)

    def ucb_values(self) -> np.ndarray:
        """UCB index per item for the current round."""
        lt = math.log(self.t)
        c = self.alpha * lt
        out = np.empty(self.n_items, dtype=np.float64)
        for i in range(self.n_items):
            out[i] = self.means[i] + math.sqrt(c / self.exam_counts[i])
        return out

    def recommend(self) -> RankedList:
        scores = self.ucb_values()
        return RankedList(tuple(i + 1 for i in top_k_by_score(scores, self.k)))

    def update(self, ranked: RankedList, feedback: FeedbackRound) -> None:
        if len(ranked) != self.k:
            raise ValidationError(f"feedback list length {len(ranked)} != K={self.k}")
        for pos, item in enumerate(ranked):
            if feedback.exam[pos]:
                i = item - 1
                n_old = self.exam_counts[i]
                self.exam_counts[i] = n_old + 1
                reward = feedback.item_rewards.get(item, 0)
                self.means[i] = (self.means[i] * n_old + reward) / (n_old + 1)
        self.t += 1

    def snapshot(self) -> list[dict]:
        """Per-item state rows (counters, mean, current UCB) for event logs."""
        ucbs = self.ucb_values()
        return [
            {
                "item": i + 1,
                "exam_count": int(self.exam_counts[i]),
                "mean": float(self.means[i]),
                "ucb": float(ucbs[i]),
            }
            for i in range(self.n_items)
        ]


class PbmUcb:
    """Ranker for position-based feedback.

    Per item: a recommendation counter (initialized to 1), a click counter,
    and a real-valued examination estimator that accumulates the position
    bias of every slot the item actually occupied (the initial pseudo-count
    never enters it). Every listed item is updated each round; examination
    flags are not observable to this ranker.
    """

    def __init__(self, n_items: int, k: int, alpha: float, bias: PositionBias):
        if not alpha > 1:
            raise ValidationError(f"exploration parameter must exceed 1, got {alpha}")
        if not 1 <= k <= n_items:
            raise ValidationError(f"need 1 <= K <= L, got K={k}, L={n_items}")
        if len(bias) != k:
            raise ValidationError(f"bias length {len(bias)} != K={k}")
        self.n_items = n_items
        self.k = k
        self.alpha = alpha
        self.bias = bias
        self.t = 1
        self.rec_counts = np.ones(n_items, dtype=np.int64)
        self.click_counts = np.zeros(n_items, dtype=np.int64)
        self.exam_estimate = np.zeros(n_items, dtype=np.float64)

    def ucb_values(self) -> np.ndarray:
        lt = math.log(self.t)
        out = np.empty(self.n_items, dtype=np.float64)
        for i in range(self.n_items):
            nt = self.exam_estimate[i]
            if nt == 0.0:
                out[i] = math.inf
            else:
                out[i] = self.click_counts[i] / nt + math.sqrt(
                    self.alpha * self.rec_counts[i] * lt / (nt * nt)
                )
        return out

    def recommend(self) -> RankedList:
        scores = self.ucb_values()
        return RankedList(tuple(i + 1 for i in top_k_by_score(scores, self.k)))

    def update(self, ranked: RankedList, feedback: FeedbackRound) -> None:
        if len(ranked) != self.k:
            raise ValidationError(f"feedback list length {len(ranked)} != K={self.k}")
        for pos, item in enumerate(ranked):
            i = item - 1
            self.rec_counts[i] += 1
            self.click_counts[i] += feedback.item_rewards.get(item, 0)
            self.exam_estimate[i] += self.bias.p[pos]
        self.t += 1

    def snapshot(self) -> list[dict]:
        """Per-item state rows (counters, estimator, current UCB)."""
        ucbs = self.ucb_values()
        return [
            {
                "item": i + 1,
                "rec_count": int(self.rec_counts[i]),
                "click_count": int(self.click_counts[i]),
                "exam_estimate": float(self.exam_estimate[i]),
                "ucb": float(ucbs[i]),
            }
            for i in range(self.n_items)
        ]
