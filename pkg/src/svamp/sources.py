"""Santha-Vazirani bit sources: generation, adversarial strategies, auditing.

Every model strategy proposes a probability for the next bit being 1; the
source clamps it into ``[1/2 - eps, 1/2 + eps]`` before drawing, so the SV
condition holds by construction.  Replay streams are taken as given and
must be checked with :func:`audit_stream`.

Each drawn bit consumes exactly one uniform from the source's generator
(replay consumes none), so drawing settings one by one or in bulk yields the
same bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .boxes import ConditionalBox, Setting


class SourceExhausted(RuntimeError):
    pass


class Strategy:
    """Proposes P(next bit = 1).

    ``prefix`` is ``(k, code)`` while drawing bit k of a setting whose first k
    bits have big-endian value ``code``; it is ``None`` for other draws.
    Strategies with ``history_free = True`` ignore ``history`` and can be
    sampled in bulk.
    """

    history_free = True

    def propose(self, history: np.ndarray, prefix) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class Uniform(Strategy):
    def propose(self, history, prefix):
        return 0.5

    def describe(self):
        return {"strategy": "uniform"}


class ConstantBias(Strategy):
    """Every bit leans the same way: P(1) = 1/2 +/- bias."""

    def __init__(self, bias: float, direction: int = 1):
        if bias < 0 or direction not in (0, 1):
            raise ValueError("bias must be >= 0 and direction 0 or 1")
        self.bias = float(bias)
        self.direction = direction

    def propose(self, history, prefix):
        return 0.5 + self.bias if self.direction == 1 else 0.5 - self.bias

    def describe(self):
        return {"strategy": "constant-bias", "bias": self.bias, "direction": self.direction}


class GreedyAdversarial(Strategy):
    """Steers settings towards low Bell scores of the colluding device.

    For each setting bit it picks the band extreme minimizing the expected
    per-setting score, with the remaining bits of the setting also chosen
    this way (an exact minimization over SV laws on one round).  Bits drawn
    outside settings lean towards ``free_direction``.
    """

    def __init__(self, scores=None, free_direction: int = 0):
        self.free_direction = free_direction
        self.colluded = scores is not None
        self._scores = np.zeros(16) if scores is None else np.asarray(scores, dtype=np.float64)

    def collude(self, box: ConditionalBox):
        from .bell import setting_scores

        self._scores = setting_scores(box)
        self.colluded = True

    @property
    def scores(self):
        return self._scores

    def choices(self, epsilon: float) -> np.ndarray:
        """table[k, code] of proposed P(bit k = 1 | prefix code)."""
        lo, hi = 0.5 - epsilon, 0.5 + epsilon
        value = self._scores.copy()
        table = np.full((4, 8), 0.5)
        for k in (3, 2, 1, 0):
            zero, one = value[0::2], value[1::2]
            p = np.where(one > zero, lo, np.where(one < zero, hi, lo))
            table[k, : p.size] = p
            value = p * one + (1 - p) * zero
        return table

    def propose(self, history, prefix):
        raise RuntimeError("GreedyAdversarial needs epsilon; use SvSource")

    def describe(self):
        return {"strategy": "greedy", "free_direction": self.free_direction}


class Replay(Strategy):
    history_free = False

    def __init__(self, bits):
        self.bits = np.asarray(bits, dtype=np.uint8).ravel()
        if self.bits.size and self.bits.max() > 1:
            raise ValueError("replay bits must be 0/1")

    def propose(self, history, prefix):
        raise RuntimeError("replay streams are not sampled")

    def describe(self):
        return {"strategy": "replay", "length": int(self.bits.size)}


class SvSource:
    """A stateful epsilon-SV bit source.

    Single-threaded: it owns its generator and its history.
    """

    def __init__(self, epsilon: float, strategy: Strategy | None = None, seed=None, history=()):
        if not 0.0 <= epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 1/2), got {epsilon}")
        self.epsilon = float(epsilon)
        self.strategy = strategy if strategy is not None else Uniform()
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._chunks = [np.asarray(history, dtype=np.uint8).ravel()]
        self._replay_pos = 0

    @property
    def history(self) -> np.ndarray:
        if len(self._chunks) > 1:
            self._chunks = [np.concatenate(self._chunks)]
        return self._chunks[0]

    @property
    def consumed(self) -> int:
        return sum(c.size for c in self._chunks)

    def _clamp(self, p: float) -> float:
        return min(max(p, 0.5 - self.epsilon), 0.5 + self.epsilon)

    def conditional_probability(self, prefix=None) -> float:
        """The law of the next bit, after clamping into the SV band."""
        strat = self.strategy
        if isinstance(strat, Replay):
            raise RuntimeError("replay streams have no model law")
        if isinstance(strat, GreedyAdversarial):
            if prefix is None:
                raw = 1.0 if strat.free_direction == 1 else 0.0
            else:
                k, code = prefix
                raw = float(strat.choices(self.epsilon)[k, code])
            return self._clamp(raw)
        hist = None if strat.history_free else self.history
        return self._clamp(strat.propose(hist, prefix))

    def setting_bit_table(self) -> np.ndarray:
        """Clamped table[k, code] of P(bit k = 1) for bulk setting draws."""
        if isinstance(self.strategy, GreedyAdversarial):
            return np.clip(self.strategy.choices(self.epsilon), 0.5 - self.epsilon, 0.5 + self.epsilon)
        table = np.full((4, 8), 0.5)
        for k in range(4):
            for code in range(1 << k):
                table[k, code] = self.conditional_probability((k, code))
        return table

    def setting_distribution(self) -> np.ndarray:
        """Joint law nu(u) of the next setting (history-free strategies)."""
        table = self.setting_bit_table()
        nu = np.ones(16)
        for u in range(16):
            code = 0
            for k in range(4):
                b = (u >> (3 - k)) & 1
                p = table[k, code]
                nu[u] *= p if b else 1 - p
                code = (code << 1) | b
        return nu

    def _take_replay(self, count: int) -> np.ndarray:
        bits = self.strategy.bits
        if self._replay_pos + count > bits.size:
            raise SourceExhausted(f"replay stream exhausted after {bits.size} bits")
        out = bits[self._replay_pos:self._replay_pos + count].copy()
        self._replay_pos += count
        return out

    def draw_bits(self, count: int, prefix=None) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be >= 0")
        if isinstance(self.strategy, Replay):
            out = self._take_replay(count)
        elif self.strategy.history_free and prefix is None:
            p = self.conditional_probability(None)
            out = (self._rng.random(count) < p).astype(np.uint8)
        else:
            out = np.empty(count, dtype=np.uint8)
            for i in range(count):
                p = self.conditional_probability(prefix)
                out[i] = self._rng.random() < p
                self._chunks.append(out[i:i + 1].copy())
            return out
        self._chunks.append(out)
        return out

    def draw_setting(self) -> Setting:
        code = 0
        for k in range(4):
            bit = int(self.draw_bits(1, prefix=(k, code))[0])
            code = (code << 1) | bit
        return Setting.from_index(code)

    def draw_settings(self, count: int) -> np.ndarray:
        """``count`` settings as uint8 indices, drawn in bulk when possible."""
        if isinstance(self.strategy, Replay):
            bits = self._take_replay(4 * count).reshape(count, 4)
            self._chunks.append(bits.ravel())
            return (bits[:, 0] << 3 | bits[:, 1] << 2 | bits[:, 2] << 1 | bits[:, 3]).astype(np.uint8)
        if not self.strategy.history_free:
            return np.array([self.draw_setting().index for _ in range(count)], dtype=np.uint8)
        settings = kernels.draw_setting_bits(self.setting_bit_table(), self._rng.random((count, 4)))
        self._chunks.append(setting_bits(settings))
        return settings

    def draw_block_index(self, n_blocks: int) -> int:
        """Index in [0, n_blocks) from ceil(log2 n_blocks) bits, rejecting overflow codes."""
        if n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")
        k = math.ceil(math.log2(n_blocks)) if n_blocks > 1 else 0
        if k == 0:
            return 0
        while True:
            bits = self.draw_bits(k)
            code = 0
            for b in bits:
                code = (code << 1) | int(b)
            if code < n_blocks:
                return code


def setting_bits(settings) -> np.ndarray:
    """Unpack uint8 settings to their 4 bits each (party 1 first)."""
    s = np.asarray(settings, dtype=np.uint8)
    return ((s[:, None] >> np.array([3, 2, 1, 0], dtype=np.uint8)) & 1).astype(np.uint8).ravel()


def draw_bits(src: SvSource, count: int) -> np.ndarray:
    return src.draw_bits(count)


def draw_setting(src: SvSource) -> Setting:
    return src.draw_setting()


def draw_block_index(src: SvSource, n_blocks: int) -> int:
    return src.draw_block_index(n_blocks)


@dataclass(frozen=True)
class SvAuditReport:
    n_bits: int
    worst_conditional_deviation: float
    worst_excess: float
    passed: bool
    cells_checked: int


def audit_stream(bits, epsilon: float, window: int, min_count: int = 30) -> SvAuditReport:
    """Empirical SV check on conditional frequencies given the last ``window`` bits.

    A cell passes when ``|freq - 1/2| <= eps + 3 sqrt(p(1-p)/count)`` with
    ``p`` the observed frequency clipped into the SV band.  Cells seen fewer
    than ``min_count`` times are skipped.
    """
    b = np.asarray(bits, dtype=np.int64).ravel()
    if window < 1:
        raise ValueError("window must be >= 1")
    if b.size < window + 1:
        raise ValueError(f"stream of {b.size} bits is shorter than window + 1")
    code = np.zeros(b.size - window, dtype=np.int64)
    for k in range(window):
        code = (code << 1) | b[k:b.size - window + k]
    nxt = b[window:]
    totals = np.bincount(code, minlength=1 << window)
    ones = np.bincount(code, weights=nxt, minlength=1 << window)
    ok = totals >= min_count
    if not ok.any():
        raise ValueError("no history cell has enough samples to audit")
    freq = ones[ok] / totals[ok]
    dev = np.abs(freq - 0.5)
    p = np.clip(freq, 0.5 - epsilon, 0.5 + epsilon)
    tol = 3 * np.sqrt(p * (1 - p) / totals[ok])
    excess = dev - tol
    worst_excess = float(excess.max())
    return SvAuditReport(
        n_bits=int(b.size),
        worst_conditional_deviation=float(dev.max()),
        worst_excess=worst_excess,
        passed=bool(worst_excess <= epsilon),
        cells_checked=int(ok.sum()),
    )


def write_bits(path, bits) -> None:
    """Raw bit file: 8 bits per byte, most significant bit first; zero padded."""
    Path(path).write_bytes(np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes())


def read_bits(path, count: int | None = None) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(Path(path).read_bytes(), dtype=np.uint8))
    if count is not None:
        if count > bits.size:
            raise SourceExhausted(f"{path} holds {bits.size} bits, {count} requested")
        bits = bits[:count]
    return bits


def strategy_from_config(cfg: dict) -> Strategy:
    kind = cfg.get("strategy", "uniform")
    allowed = {
        "uniform": {"strategy"},
        "constant-bias": {"strategy", "bias", "direction"},
        "greedy": {"strategy", "free_direction"},
        "replay": {"strategy", "file"},
    }
    if kind not in allowed:
        raise ValueError(f"unknown SV strategy {kind!r}")
    extra = set(cfg) - allowed[kind] - {"epsilon"}
    if extra:
        raise ValueError(f"unknown keys for {kind} strategy: {sorted(extra)}")
    if kind == "uniform":
        return Uniform()
    if kind == "constant-bias":
        return ConstantBias(float(cfg["bias"]), int(cfg.get("direction", 1)))
    if kind == "greedy":
        return GreedyAdversarial(free_direction=int(cfg.get("free_direction", 0)))
    return Replay(read_bits(cfg["file"]))
