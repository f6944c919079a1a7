"""Shared domain types, validation, and the deterministic RNG contract.

Item identifiers are 1-based everywhere a caller can see them (lists, logs,
CSV columns); internal arrays are 0-based. Ties in every score-sorting
operation break toward the smallest item identifier — several exactness
tests depend on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

# RNG contract: Philox4x64-10 counter-based generator, streams derived via
# numpy SeedSequence from the entropy tuple (master_seed, run_index, role).
# Both pieces are stable across platforms and numpy releases and are recorded
# in run manifests.
RNG_ALGORITHM = "philox4x64-10"

ENV_STREAM = 0  # environment: true user click draws
ADV_STREAM = 1  # adversary: dictated examination draws
AUX_STREAM = 2  # everything else (profile selection, shuffles)


class ValidationError(ValueError):
    """A domain object or configuration violates its invariants."""


@dataclass(frozen=True)
class AttractionProfile:
    """Item universe with one attraction probability per item.

    ``weights[i]`` is the probability that item ``items[i]`` is clicked when
    examined. In "sorted" construction the weights are nonincreasing, so the
    optimal list is simply the first K items.
    """

    weights: tuple[float, ...]
    items: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.items:
            object.__setattr__(self, "items", tuple(range(1, len(self.weights) + 1)))
        else:
            object.__setattr__(self, "items", tuple(int(a) for a in self.items))

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def is_sorted(self) -> bool:
        return all(a >= b for a, b in zip(self.weights, self.weights[1:]))

    def weight(self, item: int) -> float:
        """Attraction probability of a 1-based item identifier."""
        return self.weights[self._index[item]]

    @cached_property
    def _index(self) -> dict[int, int]:
        return {a: i for i, a in enumerate(self.items)}

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)


@dataclass(frozen=True)
class RankedList:
    """Ordered recommendation of K distinct items; position 1 is the top."""

    positions: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(int(a) for a in self.positions))
        if len(set(self.positions)) != len(self.positions):
            raise ValidationError(f"duplicate items in ranked list {self.positions}")

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    def __contains__(self, item: int) -> bool:
        return item in self.positions

    def position_of(self, item: int) -> int | None:
        """1-based position of ``item``, or None when it is not listed."""
        try:
            return self.positions.index(item) + 1
        except ValueError:
            return None


@dataclass(frozen=True)
class PositionBias:
    """Per-position examination probabilities, nonincreasing, in (0, 1]."""

    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if not self.p:
            raise ValidationError("position bias must not be empty")
        for x in self.p:
            if not 0.0 < x <= 1.0:
                raise ValidationError(f"position bias {x} outside (0, 1]")
        if any(a < b for a, b in zip(self.p, self.p[1:])):
            raise ValidationError(f"position bias must be nonincreasing: {self.p}")

    def __len__(self) -> int:
        return len(self.p)

    @property
    def spread(self) -> float:
        """Ratio of the top position's bias to the bottom's (p_1 / p_K)."""
        return self.p[0] / self.p[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=np.float64)


@dataclass(frozen=True, eq=True)
class FeedbackRound:
    """One round of user feedback over a ranked list.

    ``exam`` and ``clicks`` are per-position 0/1 flags; ``item_rewards`` maps
    each listed item to its 0/1 reward, which always equals that item's click
    flag. ``manipulated`` marks rounds whose feedback an attack dictated.
    """

    exam: tuple[int, ...]
    clicks: tuple[int, ...]
    item_rewards: Mapping[int, int]
    manipulated: bool = False

    def __post_init__(self):
        for e, c in zip(self.exam, self.clicks):
            if c and not e:
                raise ValidationError("click without examination")

    @classmethod
    def for_list(
        cls,
        ranked: RankedList | Sequence[int],
        exam: Sequence[int],
        clicks: Sequence[int],
        manipulated: bool = False,
    ) -> "FeedbackRound":
        """Build a round whose rewards are derived from the click flags."""
        items = tuple(ranked)
        if not (len(items) == len(exam) == len(clicks)):
            raise ValidationError("exam/clicks length must match the list")
        rewards = {a: int(c) for a, c in zip(items, clicks)}
        return cls(
            exam=tuple(int(e) for e in exam),
            clicks=tuple(int(c) for c in clicks),
            item_rewards=rewards,
            manipulated=manipulated,
        )


@dataclass
class RngStream:
    """A named, reproducible random stream.

    Streams are identified by ``(master_seed, run_index, role)`` and fed
    through ``SeedSequence`` into a Philox generator, so identical keys give
    identical draw sequences on every platform and independent keys give
    streams that are uncorrelated by construction. One stream belongs to
    exactly one run.
    """

    key: tuple[int, int, int]
    generator: np.random.Generator = field(repr=False)

    @classmethod
    def from_key(cls, master_seed: int, run_index: int, role: int) -> "RngStream":
        key = (int(master_seed), int(run_index), int(role))
        seq = np.random.SeedSequence(entropy=list(key))
        return cls(key=key, generator=np.random.Generator(np.random.Philox(seq)))

    def uniform(self) -> float:
        """One double in [0, 1); successive calls walk the stream."""
        return float(self.generator.random())

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` doubles; identical to ``n`` successive ``uniform()`` calls."""
        return self.generator.random(n)

    def bernoulli(self, p: float) -> int:
        return 1 if self.uniform() < p else 0


def validate_profile(profile: AttractionProfile, k: int) -> AttractionProfile:
    """Check profile invariants against a list length K; return it unchanged.

    Rejects probabilities outside [0, 1], duplicate item identifiers, K
    larger than the universe, and nonpositive K.
    """
    if k <= 0:
        raise ValidationError(f"K must be positive, got {k}")
    if k > profile.size:
        raise ValidationError(f"K exceeds L: K={k}, L={profile.size}")
    for w in profile.weights:
        if not 0.0 <= w <= 1.0:
            raise ValidationError(f"probability out of range: {w}")
    if len(set(profile.items)) != profile.size:
        raise ValidationError("duplicate item identifiers")
    if len(profile.items) != len(profile.weights):
        raise ValidationError("items and weights must have equal length")
    return profile


def optimal_list(profile: AttractionProfile, k: int) -> RankedList:
    """The K most attractive items in descending weight, ties by identifier."""
    validate_profile(profile, k)
    order = sorted(zip(profile.items, profile.weights), key=lambda t: (-t[1], t[0]))
    return RankedList(tuple(a for a, _ in order[:k]))


def top_k_by_score(scores: Sequence[float], k: int) -> list[int]:
    """Indices of the K largest scores, descending, ties toward lower index.

    Plain selection loop so the decision path is identical to the compiled
    engine's (strict ``>`` keeps the first maximum on exact ties, including
    between +inf sentinels).
    """
    n = len(scores)
    chosen: list[int] = []
    taken = [False] * n
    for _ in range(k):
        best = -1
        best_score = -math.inf
        for i in range(n):
            if not taken[i] and (best < 0 or scores[i] > best_score):
                best = i
                best_score = scores[i]
        taken[best] = True
        chosen.append(best)
    return chosen
