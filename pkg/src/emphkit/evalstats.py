"""Statistics for the three listening-test protocols.

MUSHRA ratings are summarized per system with normal-approximation
confidence intervals and compared with a Friedman rank test (tie-corrected,
chi-square tail computed here via the regularized upper incomplete gamma
function). Forced-choice preference tests yield a vote-share difference and
an exact two-sided binomial p-value. Identification tests reduce to the
fraction of correctly named target words, grouped by system.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass
class RatingsMatrix:
    """listeners x systems ratings in [0, 100], no missing cells."""

    ratings: np.ndarray
    systems: list[str]
    listeners: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.ratings = np.asarray(self.ratings, dtype=np.float64)
        if self.ratings.ndim != 2:
            raise ValueError("ratings must be a 2-D matrix")
        n, k = self.ratings.shape
        if k != len(self.systems):
            raise ValueError(f"{k} columns for {len(self.systems)} system labels")
        if self.listeners and len(self.listeners) != n:
            raise ValueError(f"{n} rows for {len(self.listeners)} listener labels")
        if not np.all(np.isfinite(self.ratings)):
            raise ValueError("missing or non-finite rating cells")
        if np.any(self.ratings < 0) or np.any(self.ratings > 100):
            raise ValueError("ratings must lie in [0, 100]")


@dataclass(frozen=True)
class PreferenceTally:
    votes_a: int
    votes_b: int
    label_a: str = "A"
    label_b: str = "B"

    def __post_init__(self) -> None:
        if self.votes_a < 0 or self.votes_b < 0:
            raise ValueError("negative vote counts")
        if self.votes_a + self.votes_b < 1:
            raise ValueError("empty tally")


@dataclass(frozen=True)
class IdentifiabilityRecord:
    utterance_id: str
    true_word: int
    chosen_word: int
    listener: str
    system: str = ""


def mushra_summary(m: RatingsMatrix) -> list[dict]:
    """Per-system mean and 95% CI (mean +- 1.96 * sd / sqrt(n))."""
    n = m.ratings.shape[0]
    if n == 0:
        raise ValueError("empty ratings matrix")
    out = []
    for j, system in enumerate(m.systems):
        col = m.ratings[:, j]
        mean = float(col.mean())
        sd = float(col.std(ddof=1)) if n > 1 else 0.0
        half = 1.96 * sd / math.sqrt(n)
        out.append(
            {
                "system": system,
                "mean": mean,
                "ci_low": mean - half,
                "ci_high": mean + half,
                "n": n,
                "degenerate": n == 1,
            }
        )
    return out


def _average_ranks(row: np.ndarray) -> tuple[np.ndarray, float]:
    """Ranks with ties averaged; also the row's tie term sum(t^3 - t)."""
    order = np.argsort(row, kind="stable")
    ranks = np.empty(len(row))
    tie_term = 0.0
    i = 0
    while i < len(row):
        j = i
        while j + 1 < len(row) and row[order[j + 1]] == row[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1  # ranks are 1-based
        for idx in order[i : j + 1]:
            ranks[idx] = avg
        t = j - i + 1
        tie_term += t**3 - t
        i = j + 1
    return ranks, tie_term


def _lower_gamma_series(a: float, x: float) -> float:
    ap = a
    total = term = 1.0 / a
    for _ in range(500):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammaincc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be > 0")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_gamma_series(a, x)
    return _upper_gamma_cf(a, x)


def chi2_sf(q: float, df: int) -> float:
    return gammaincc_upper(df / 2.0, q / 2.0)


def friedman(m: RatingsMatrix) -> dict:
    """Tie-corrected Friedman rank test over the ratings matrix."""
    n, k = m.ratings.shape
    if n < 2 or k < 2:
        raise ValueError("Friedman test needs at least 2 listeners and 2 systems")
    rank_sums = np.zeros(k)
    ties = 0.0
    for row in m.ratings:
        ranks, tie_term = _average_ranks(row)
        rank_sums += ranks
        ties += tie_term
    q0 = 12.0 / (n * k * (k + 1)) * float(np.sum(rank_sums**2)) - 3.0 * n * (k + 1)
    correction = 1.0 - ties / (n * k * (k**2 - 1))
    if correction <= 0:
        return {"Q": 0.0, "df": k - 1, "p": 1.0}
    q = q0 / correction
    return {"Q": q, "df": k - 1, "p": chi2_sf(q, k - 1)}


def exact_binomial_p(successes: int, trials: int) -> float:
    """Exact two-sided binomial test against probability 0.5."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    m = min(successes, trials - successes)
    tail = sum(math.comb(trials, k) for k in range(m + 1))
    return min(1.0, 2 * tail / 2**trials)


def preference_delta(t: PreferenceTally) -> dict:
    total = t.votes_a + t.votes_b
    delta = (t.votes_a - t.votes_b) / total
    return {
        "label_a": t.label_a,
        "label_b": t.label_b,
        "votes_a": t.votes_a,
        "votes_b": t.votes_b,
        "delta_pref": delta,
        "p": exact_binomial_p(t.votes_a, total),
    }


def identifiability(records: Sequence[IdentifiabilityRecord]) -> dict:
    if not records:
        raise ValueError("no identification records")
    by_system: dict[str, list[IdentifiabilityRecord]] = {}
    for r in records:
        by_system.setdefault(r.system, []).append(r)
    summary = {}
    for system, rows in sorted(by_system.items()):
        correct = sum(1 for r in rows if r.chosen_word == r.true_word)
        summary[system] = {
            "correct": correct,
            "n": len(rows),
            "fraction": correct / len(rows),
        }
    correct = sum(1 for r in records if r.chosen_word == r.true_word)
    return {
        "overall": correct / len(records),
        "n": len(records),
        "by_system": summary,
    }


def read_jsonl(text: str) -> list[dict]:
    rows = []
    for i, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad JSONL at line {i + 1}: {exc}") from exc
    return rows


def ratings_from_responses(rows: Iterable[dict]) -> tuple[RatingsMatrix, list[str]]:
    """Assemble a ratings matrix from {listener, ratings: {system: value}} rows.

    A listener's ratings for a system are averaged over screens. Listeners
    who did not rate every system on every screen they saw are excluded and
    reported.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no MUSHRA responses")
    systems = sorted({s for row in rows for s in row["ratings"]})
    screens_seen = {row.get("screen") for row in rows}
    per_listener: dict[str, dict[str, list[float]]] = {}
    listener_screens: dict[str, set] = {}
    for row in rows:
        listener = str(row["listener"])
        acc = per_listener.setdefault(listener, {s: [] for s in systems})
        listener_screens.setdefault(listener, set()).add(row.get("screen"))
        for system, value in row["ratings"].items():
            acc[system].append(float(value))
    matrix, listeners, excluded = [], [], []
    expected = len(screens_seen)
    for listener in sorted(per_listener):
        acc = per_listener[listener]
        complete = len(listener_screens[listener]) == expected and all(
            len(vals) == expected for vals in acc.values()
        )
        if not complete:
            excluded.append(listener)
            continue
        matrix.append([float(np.mean(acc[s])) for s in systems])
        listeners.append(listener)
    if not matrix:
        raise ValueError("no complete MUSHRA sessions")
    return RatingsMatrix(np.array(matrix), systems, listeners), excluded


def tally_from_responses(rows: Iterable[dict]) -> PreferenceTally:
    """Count {choice: system} rows into a two-system tally."""
    counts: dict[str, int] = {}
    for row in rows:
        counts[str(row["choice"])] = counts.get(str(row["choice"]), 0) + 1
    labels = sorted(counts)
    if len(labels) != 2:
        raise ValueError(f"preference responses name {len(labels)} systems, need 2")
    return PreferenceTally(
        counts[labels[0]], counts[labels[1]], labels[0], labels[1]
    )


def identification_from_responses(rows: Iterable[dict]) -> list[IdentifiabilityRecord]:
    return [
        IdentifiabilityRecord(
            utterance_id=str(row["utterance"]),
            true_word=int(row["true_word"]),
            chosen_word=int(row["chosen_word"]),
            listener=str(row["listener"]),
            system=str(row.get("system", "")),
        )
        for row in rows
    ]


def render_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Fixed-width text table for terminal inspection."""
    cells = [[str(c) for c in row] for row in rows]
    widths = [
        max(len(headers[j]), *(len(row[j]) for row in cells)) if cells else len(headers[j])
        for j in range(len(headers))
    ]
    def fmt(row):
        return "  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in cells)
    return "\n".join(lines) + "\n"
