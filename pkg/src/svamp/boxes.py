"""Four-party, two-input/two-output no-signaling boxes.

A box is stored as a 16x16 array ``p[u, x] = P(x|u)``.  Settings and
outcomes are packed big-endian: party 1 is the most significant bit, so
``u = u1*8 + u2*4 + u3*2 + u4``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

N_PARTIES = 4
N_SETTINGS = 16
N_OUTCOMES = 16

TOL_NUMERIC = 1e-12
TOL_NS = 1e-9


def _unpack(index: int) -> tuple[int, int, int, int]:
    if not 0 <= index < 16:
        raise ValueError(f"index {index} outside [0, 16)")
    return tuple((index >> (3 - i)) & 1 for i in range(N_PARTIES))


def _pack(bits: Sequence[int]) -> int:
    if len(bits) != N_PARTIES or any(b not in (0, 1) for b in bits):
        raise ValueError(f"expected four bits, got {bits!r}")
    return (bits[0] << 3) | (bits[1] << 2) | (bits[2] << 1) | bits[3]


class Setting(NamedTuple):
    u1: int
    u2: int
    u3: int
    u4: int

    @property
    def index(self) -> int:
        return _pack(self)

    @classmethod
    def from_index(cls, index: int) -> "Setting":
        return cls(*_unpack(index))


class Outcome(NamedTuple):
    x1: int
    x2: int
    x3: int
    x4: int

    @property
    def index(self) -> int:
        return _pack(self)

    @property
    def parity(self) -> int:
        return self.x1 ^ self.x2 ^ self.x3 ^ self.x4

    @classmethod
    def from_index(cls, index: int) -> "Outcome":
        return cls(*_unpack(index))


def as_index(value) -> int:
    """Accept a Setting/Outcome, a 4-bit sequence, or a plain index."""
    if isinstance(value, (Setting, Outcome)):
        return value.index
    if isinstance(value, (int, np.integer)):
        if not 0 <= int(value) < 16:
            raise ValueError(f"index {value} outside [0, 16)")
        return int(value)
    return _pack(tuple(int(b) for b in value))


class ConditionalBox:
    """Immutable table of conditional probabilities P(x|u).

    Entries within ``TOL_NUMERIC`` of [0, 1] are clamped; anything further out
    is rejected.  Normalization and no-signaling are *not* enforced here,
    use :func:`validate_box` for that.
    """

    __slots__ = ("_p",)

    def __init__(self, p):
        arr = np.array(p, dtype=np.float64)
        if arr.shape != (N_SETTINGS, N_OUTCOMES):
            raise ValueError(f"box must be 16x16, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("box entries must be finite")
        if arr.min() < -TOL_NUMERIC or arr.max() > 1 + TOL_NUMERIC:
            raise ValueError("box entries must lie in [0, 1]")
        np.clip(arr, 0.0, 1.0, out=arr)
        arr.setflags(write=False)
        self._p = arr

    @property
    def p(self) -> np.ndarray:
        return self._p

    def prob(self, x, u) -> float:
        return float(self._p[as_index(u), as_index(x)])

    def row(self, u) -> np.ndarray:
        return self._p[as_index(u)]

    def max_probability(self) -> float:
        return float(self._p.max())

    def cdf(self) -> np.ndarray:
        """Per-setting CDF prepared for inverse-CDF sampling.

        Cells past the last positive entry are pinned to 1.0 so a uniform
        draw in [0, 1) can never land on a zero-probability outcome.
        """
        c = np.cumsum(self._p, axis=1)
        c /= c[:, -1:]
        for u in range(N_SETTINGS):
            last = int(np.flatnonzero(self._p[u] > 0)[-1])
            c[u, last:] = 1.0
        return c

    def to_json(self) -> str:
        return json.dumps({"p": self._p.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ConditionalBox":
        data = json.loads(text)
        if set(data) != {"p"}:
            raise ValueError(f"unexpected keys in box JSON: {sorted(data)}")
        return cls(data["p"])

    def __eq__(self, other):
        return isinstance(other, ConditionalBox) and np.array_equal(self._p, other._p)

    def __hash__(self):
        return hash(self._p.tobytes())

    def __repr__(self):
        return f"ConditionalBox(max={self._p.max():.4g})"


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    normalization_residual: float
    no_signaling_residual: float
    min_entry: float


def _marginal_diffs(p: np.ndarray) -> np.ndarray:
    """All 256 single-party no-signaling residuals.

    For party i, fixed co-settings and co-outcomes, the difference of the
    party-i-summed probabilities between u^i = 0 and u^i = 1.
    """
    t = p.reshape((2,) * 8)  # axes: u1..u4, x1..x4
    diffs = []
    for i in range(N_PARTIES):
        summed = t.sum(axis=4 + i)
        d = np.take(summed, 0, axis=i) - np.take(summed, 1, axis=i)
        diffs.append(d.ravel())
    return np.concatenate(diffs)


def validate_box(box: ConditionalBox, tol_ns: float = TOL_NS, tol_norm: float = TOL_NS) -> ValidationReport:
    p = box.p
    norm = float(np.abs(p.sum(axis=1) - 1.0).max())
    ns = float(np.abs(_marginal_diffs(p)).max())
    return ValidationReport(
        passed=bool(norm <= tol_norm and ns <= tol_ns),
        normalization_residual=norm,
        no_signaling_residual=ns,
        min_entry=float(p.min()),
    )


def uniform_box() -> ConditionalBox:
    return ConditionalBox(np.full((16, 16), 1.0 / 16))


def _ideal_state() -> np.ndarray:
    s = 1 / np.sqrt(2)
    k0, k1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    kp, km = s * (k0 + k1), s * (k0 - k1)
    kron = np.kron
    phi_minus = s * (kron(k0, k0) - kron(k1, k1))
    psi_plus = s * (kron(k0, k1) + kron(k1, k0))
    phi_plus_t = s * (kron(k0, kp) + kron(k1, km))
    psi_minus_t = s * (kron(k0, km) - kron(k1, kp))
    return s * (kron(phi_minus, phi_plus_t) + kron(psi_plus, psi_minus_t))


def quantum_ideal_box() -> ConditionalBox:
    """Born-rule box of the four-qubit state reaching Bell value 0.

    Party i measures X (outcome 0 <-> |+>) for u^i = 0 and Z for u^i = 1.
    """
    psi = _ideal_state()
    s = 1 / np.sqrt(2)
    bases = {
        0: (np.array([s, s]), np.array([s, -s])),
        1: (np.array([1.0, 0.0]), np.array([0.0, 1.0])),
    }
    p = np.empty((16, 16))
    for u in range(16):
        ub = _unpack(u)
        for x in range(16):
            xb = _unpack(x)
            vec = bases[ub[0]][xb[0]]
            for i in range(1, N_PARTIES):
                vec = np.kron(vec, bases[ub[i]][xb[i]])
            p[u, x] = abs(vec @ psi) ** 2
    # Born-rule rows sum to 1 up to rounding; renormalize to TOL_NUMERIC.
    p /= p.sum(axis=1, keepdims=True)
    return ConditionalBox(p)


def mix(boxes: Sequence[ConditionalBox], weights: Sequence[float]) -> ConditionalBox:
    w = np.asarray(weights, dtype=np.float64)
    if len(w) != len(boxes) or np.any(w < 0) or abs(w.sum() - 1) > TOL_NUMERIC:
        raise ValueError("weights must be a probability vector matching the boxes")
    return ConditionalBox(sum(wi * b.p for wi, b in zip(w, boxes)))


def noisy_box(base: ConditionalBox, eta: float) -> ConditionalBox:
    """(1 - eta) * base + eta * uniform."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return ConditionalBox((1 - eta) * base.p + eta / 16)


@dataclass(frozen=True)
class DeterministicStrategy:
    """Per-party (output if u^i=0, output if u^i=1)."""

    responses: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.responses) != N_PARTIES or any(
            len(r) != 2 or r[0] not in (0, 1) or r[1] not in (0, 1) for r in self.responses
        ):
            raise ValueError(f"invalid responses {self.responses!r}")

    def outcome(self, u) -> int:
        ub = _unpack(as_index(u))
        return _pack([self.responses[i][ub[i]] for i in range(N_PARTIES)])

    def box(self) -> ConditionalBox:
        p = np.zeros((16, 16))
        for u in range(16):
            p[u, self.outcome(u)] = 1.0
        return ConditionalBox(p)

    @property
    def index(self) -> int:
        code = 0
        for a0, a1 in self.responses:
            code = (code << 2) | (a0 << 1) | a1
        return code

    @classmethod
    def from_index(cls, index: int) -> "DeterministicStrategy":
        if not 0 <= index < 256:
            raise ValueError(f"strategy index {index} outside [0, 256)")
        pairs = []
        for i in range(N_PARTIES):
            code = (index >> (2 * (3 - i))) & 3
            pairs.append((code >> 1, code & 1))
        return cls(tuple(pairs))


def enumerate_deterministic_boxes() -> list[tuple[DeterministicStrategy, ConditionalBox]]:
    out = []
    for resp in itertools.product(((0, 0), (0, 1), (1, 0), (1, 1)), repeat=N_PARTIES):
        strat = DeterministicStrategy(tuple(resp))
        out.append((strat, strat.box()))
    return out
