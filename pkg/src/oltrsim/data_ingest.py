"""MovieLens ratings parsing and attraction-profile derivation.

A movie's attraction probability is the share of its ratings that exceed a
threshold (strictly above; default three stars, so 3.5 counts and 3.0 does
not). Movies with too few ratings are dropped to avoid degenerate 0/1
probabilities. Selected movies are relabeled 1..L in descending probability,
giving a sorted-mode profile whose optimal list is (1..K).

Because published MovieLens snapshots differ, the canonical 10-movie profile
used throughout the test suite also ships built in, so nothing here requires
the dataset itself.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import AttractionProfile, ValidationError

FORMAT_LEGACY = "legacy"  # tab-separated: user, item, rating, timestamp
FORMAT_CSV = "csv"  # headered comma-separated: userId,movieId,rating,timestamp

# rating scales per format: legacy files use whole stars, newer ones halves
_SCALES = {FORMAT_LEGACY: (1.0, 5.0), FORMAT_CSV: (0.5, 5.0)}

# canonical 10-movie attraction profile (share of >3-star ratings), the
# default universe for full-scale experiments
MOVIELENS10_WEIGHTS = (
    0.336, 0.204, 0.163, 0.125, 0.112, 0.105, 0.099, 0.090, 0.086, 0.082,
)

_BUILTIN_PROFILES = {
    "movielens10": MOVIELENS10_WEIGHTS,
}


@dataclass(frozen=True)
class RatingsTable:
    """Parsed ratings plus the count of malformed rows that were skipped."""

    users: tuple[int, ...]
    movies: tuple[int, ...]
    ratings: tuple[float, ...]
    timestamps: tuple[int, ...]
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.ratings)


def builtin_profile(name: str) -> AttractionProfile:
    """A named built-in profile; see ``builtin_profile_names``."""
    try:
        return AttractionProfile(weights=_BUILTIN_PROFILES[name])
    except KeyError:
        raise ValidationError(
            f"unknown built-in profile {name!r}; available: "
            f"{', '.join(sorted(_BUILTIN_PROFILES))}"
        ) from None


def builtin_profile_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTIN_PROFILES))


def parse_movielens(path: str | Path, fmt: str) -> RatingsTable:
    """Parse a ratings file in one of the two supported layouts.

    Malformed rows (wrong column count, non-numeric fields, ratings outside
    the format's scale) are skipped and counted. A file with no valid rows is
    an error, as is an unknown format tag.
    """
    if fmt not in (FORMAT_LEGACY, FORMAT_CSV):
        raise ValidationError(f"unknown ratings format {fmt!r}")
    lo, hi = _SCALES[fmt]
    users: list[int] = []
    movies: list[int] = []
    ratings: list[float] = []
    stamps: list[int] = []
    skipped = 0

    path = Path(path)
    with path.open(newline="") as fh:
        if fmt == FORMAT_LEGACY:
            rows = csv.reader(fh, delimiter="\t")
            header_skipped = True  # no header in the legacy layout
        else:
            rows = csv.reader(fh)
            header_skipped = False
        for row in rows:
            if not header_skipped:
                header_skipped = True
                if row and not _is_number(row[2] if len(row) > 2 else ""):
                    continue  # header line
            if len(row) != 4:
                skipped += 1
                continue
            try:
                user = int(row[0])
                movie = int(row[1])
                rating = float(row[2])
                stamp = int(row[3])
            except ValueError:
                skipped += 1
                continue
            if not lo <= rating <= hi:
                skipped += 1
                continue
            users.append(user)
            movies.append(movie)
            ratings.append(rating)
            stamps.append(stamp)

    if not ratings:
        raise ValidationError(f"zero valid rows in {path}")
    return RatingsTable(
        users=tuple(users),
        movies=tuple(movies),
        ratings=tuple(ratings),
        timestamps=tuple(stamps),
        skipped=skipped,
    )


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def attraction_probs(
    table: RatingsTable, threshold: float = 3.0, min_count: int = 20
) -> dict[int, float]:
    """Per-movie probability of a rating strictly above the threshold.

    Movies with fewer than ``min_count`` ratings are omitted. Every returned
    value is the exact rational successes/total for that movie.
    """
    totals: dict[int, int] = {}
    above: dict[int, int] = {}
    for movie, rating in zip(table.movies, table.ratings):
        totals[movie] = totals.get(movie, 0) + 1
        if rating > threshold:
            above[movie] = above.get(movie, 0) + 1
    return {
        movie: above.get(movie, 0) / count
        for movie, count in totals.items()
        if count >= min_count
    }


SELECT_GIVEN = "given-ids"
SELECT_TOP_VARIANCE = "top-variance"
SELECT_SEEDED = "seeded-arbitrary"


def select_profile(
    probs: dict[int, float],
    n_items: int,
    mode: str = SELECT_TOP_VARIANCE,
    seed: int = 0,
    movie_ids: tuple[int, ...] = (),
) -> tuple[AttractionProfile, tuple[int, ...]]:
    """Choose L movies and relabel them 1..L in descending probability.

    Modes: ``given-ids`` takes exactly the supplied movie ids;
    ``top-variance`` takes the L movies with the largest Bernoulli variance
    p(1-p), ties toward the smaller id; ``seeded-arbitrary`` draws L movies
    uniformly without replacement from a seeded stream. Returns the profile
    and the source movie ids in relabeled order.
    """
    if len(probs) < n_items:
        raise ValidationError(
            f"need at least {n_items} movies, have {len(probs)}"
        )
    if mode == SELECT_GIVEN:
        chosen = [int(m) for m in movie_ids]
        if len(chosen) != n_items:
            raise ValidationError(
                f"given-ids mode needs exactly {n_items} ids, got {len(chosen)}"
            )
        missing = [m for m in chosen if m not in probs]
        if missing:
            raise ValidationError(f"movies absent from the table: {missing}")
    elif mode == SELECT_TOP_VARIANCE:
        ranked = sorted(probs, key=lambda m: (-(probs[m] * (1 - probs[m])), m))
        chosen = ranked[:n_items]
    elif mode == SELECT_SEEDED:
        pool = sorted(probs)
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=[int(seed)]))
        )
        chosen = [pool[i] for i in rng.choice(len(pool), size=n_items, replace=False)]
    else:
        raise ValidationError(f"unknown selection mode {mode!r}")

    # relabel 1..L in descending probability; ties toward the smaller movie id
    order = sorted(chosen, key=lambda m: (-probs[m], m))
    weights = tuple(probs[m] for m in order)
    return AttractionProfile(weights=weights), tuple(order)


def write_profile(
    path: str | Path, profile: AttractionProfile, source_ids: tuple[int, ...] = ()
) -> None:
    """Serialize a profile as CSV: item, weight, and optional source id."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if source_ids:
            writer.writerow(["item", "weight", "source_movie_id"])
            for item, w, src in zip(profile.items, profile.weights, source_ids):
                writer.writerow([item, str(w), src])
        else:
            writer.writerow(["item", "weight"])
            for item, w in zip(profile.items, profile.weights):
                writer.writerow([item, str(w)])


def read_profile(path: str | Path) -> AttractionProfile:
    """Read a profile written by ``write_profile``."""
    path = Path(path)
    items: list[int] = []
    weights: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "item" not in reader.fieldnames:
            raise ValidationError(f"{path} is not a profile file (missing header)")
        for row in reader:
            items.append(int(row["item"]))
            weights.append(float(row["weight"]))
    if not items:
        raise ValidationError(f"profile file {path} has no rows")
    return AttractionProfile(weights=tuple(weights), items=tuple(items))
