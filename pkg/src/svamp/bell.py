"""The four-party parity Bell functional and the statistics built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .boxes import ConditionalBox, as_index

U0 = frozenset({0b0001, 0b0010, 0b0100, 0b1000})
U1 = frozenset({0b0111, 0b1011, 0b1101, 0b1110})


def _parity(i: int) -> int:
    return bin(i).count("1") & 1


def _build_table() -> np.ndarray:
    t = np.zeros((16, 16), dtype=np.uint8)
    for u in range(16):
        for x in range(16):
            if (u in U0 and _parity(x) == 0) or (u in U1 and _parity(x) == 1):
                t[u, x] = 1
    t.setflags(write=False)
    return t


# BELL_TABLE[u, x] = B(x, u); same layout as ConditionalBox.p
BELL_TABLE = _build_table()


def indicator(x, u) -> int:
    return int(BELL_TABLE[as_index(u), as_index(x)])


def bell_value(box: ConditionalBox) -> float:
    """sum_{x,u} B(x,u) P(x|u); local boxes give >= 2, the ideal box 0."""
    return float((BELL_TABLE * box.p).sum())


def setting_scores(box: ConditionalBox) -> np.ndarray:
    """Per-setting expected indicator sum_x B(x,u) P(x|u)."""
    return (BELL_TABLE * box.p).sum(axis=1)


def weighted_bell_value(box: ConditionalBox, nu) -> float:
    nu = np.asarray(nu, dtype=np.float64)
    if nu.shape != (16,) or nu.min() < -1e-12 or abs(nu.sum() - 1.0) > 1e-9:
        raise ValueError("nu must be a probability vector over the 16 settings")
    return float(nu @ setting_scores(box))


@dataclass(frozen=True)
class EmpiricalBellStats:
    count: int
    n: int
    indicators: np.ndarray

    @property
    def L(self) -> float:
        return self.count / self.n

    @property
    def L_exact(self) -> Fraction:
        return Fraction(self.count, self.n)

    def accepts(self, delta: float) -> bool:
        # exact rational comparison so the abort decision never jitters
        return Fraction(self.count, self.n) <= Fraction(delta)


def empirical_stats(rounds: Iterable[tuple]) -> EmpiricalBellStats:
    """Stats over (outcome, setting) pairs."""
    pairs = list(rounds)
    if not pairs:
        raise ValueError("need at least one round")
    xs = np.fromiter((as_index(x) for x, _ in pairs), dtype=np.int64, count=len(pairs))
    us = np.fromiter((as_index(u) for _, u in pairs), dtype=np.int64, count=len(pairs))
    return stats_from_arrays(us, xs)


def stats_from_arrays(settings, outcomes) -> EmpiricalBellStats:
    settings = np.asarray(settings, dtype=np.int64)
    outcomes = np.asarray(outcomes, dtype=np.int64)
    if settings.shape != outcomes.shape or settings.size == 0:
        raise ValueError("settings and outcomes must be equal-length and non-empty")
    ind = BELL_TABLE[settings, outcomes]
    return EmpiricalBellStats(count=int(ind.sum()), n=int(settings.size), indicators=ind)


def linear_fraction(means: Sequence[float], delta: float) -> tuple[float, float]:
    """Fraction of conditional means at most sqrt(delta), and that threshold.

    Requires every mean >= 0 and their average <= delta; the returned fraction
    is then at least 1 - sqrt(delta) by a Markov count.
    """
    m = np.asarray(means, dtype=np.float64)
    if m.size == 0 or delta <= 0:
        raise ValueError("need a non-empty list of means and delta > 0")
    if m.min() < 0:
        raise ValueError("means must be non-negative")
    if m.mean() > delta * (1 + 1e-12):
        raise ValueError(f"average {m.mean():.6g} exceeds delta {delta:.6g}")
    thr = math.sqrt(delta)
    return float(np.count_nonzero(m <= thr) / m.size), thr
