"""Field-multiplication extractors over GF(2^n).

Words are little-endian: bit i of the integer is the coefficient of x^i, and
"low m bits" means the coefficients of x^0 .. x^(m-1).

Moduli (irreducible, x^n term implied in the ``MODULI`` values):

    n=4    x^4 + x + 1
    n=8    x^8 + x^4 + x^3 + x + 1
    n=16   x^16 + x^5 + x^3 + x + 1
    n=32   x^32 + x^7 + x^3 + x^2 + 1
    n=64   x^64 + x^4 + x^3 + x + 1
    n=128  x^128 + x^7 + x^2 + x + 1
    n=256  x^256 + x^10 + x^5 + x^2 + 1
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels


def _poly(*exps: int) -> int:
    return sum(1 << e for e in exps)


MODULI = {
    4: _poly(1, 0),
    8: _poly(4, 3, 1, 0),
    16: _poly(5, 3, 1, 0),
    32: _poly(7, 3, 2, 0),
    64: _poly(4, 3, 1, 0),
    128: _poly(7, 2, 1, 0),
    256: _poly(10, 5, 2, 0),
}
KERNEL_MAX_N = 64
MAX_ENUMERATION = 1 << 24


def _check_n(n: int) -> None:
    if n not in MODULI:
        raise ValueError(f"unsupported field size n={n}; choose from {sorted(MODULI)}")


def _check_word(a: int, n: int) -> int:
    a = int(a)
    if not 0 <= a < (1 << n):
        raise ValueError(f"{a} is not an {n}-bit word")
    return a


def gf_mul_int(a: int, b: int, n: int) -> int:
    """Product in GF(2^n) on Python ints (any supported n)."""
    _check_n(n)
    a, b = _check_word(a, n), _check_word(b, n)
    poly, top = MODULI[n], 1 << (n - 1)
    mask = (1 << n) - 1
    res = 0
    while b:
        if b & 1:
            res ^= a
        b >>= 1
        carry = a & top
        a = (a << 1) & mask
        if carry:
            a ^= poly
    return res


@dataclass(frozen=True)
class FieldElement:
    value: int
    n: int

    def __post_init__(self):
        _check_n(self.n)
        _check_word(self.value, self.n)

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.n != self.n:
                raise ValueError("field sizes differ")
            return other.value
        return _check_word(other, self.n)

    def __add__(self, other):
        return FieldElement(self.value ^ self._other(other), self.n)

    __sub__ = __add__
    __radd__ = __add__

    def __mul__(self, other):
        return FieldElement(gf_mul_int(self.value, self._other(other), self.n), self.n)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result, base = FieldElement(1, self.n), self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return self ** ((1 << self.n) - 2)

    def __int__(self):
        return self.value


def gf_mul(a, b, n: int | None = None):
    """Field product.  FieldElements in, FieldElement out; ints need ``n``."""
    if isinstance(a, FieldElement):
        return a * b
    if n is None:
        raise ValueError("n is required for integer operands")
    return gf_mul_int(a, b, n)


def gf_mul_array(a, b, n: int) -> np.ndarray:
    """Vectorized product for n <= 64 (uint64 words)."""
    _check_n(n)
    if n > KERNEL_MAX_N:
        raise ValueError("array kernel supports n <= 64")
    return kernels.gf_mul_array(a, b, n, MODULI[n])


def _low(v: int, m: int) -> int:
    return v & ((1 << m) - 1)


def _check_m(m: int, n: int) -> None:
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")


def extract2(x: int, t: int, m: int, n: int) -> int:
    """Low m bits of x * t in GF(2^n)."""
    _check_m(m, n)
    return _low(gf_mul_int(x, t, n), m)


def extract3(x: int, y: int, t: int, m: int, n: int) -> int:
    """extract2(extract2(x, y, n), t, m): low m bits of (x * y) * t."""
    _check_m(m, n)
    return _low(gf_mul_int(gf_mul_int(x, y, n), t, n), m)


def bits_to_int(bits: Iterable[int]) -> int:
    """Little-endian: bits[i] is the coefficient of x^i."""
    v = 0
    for i, b in enumerate(bits):
        if b:
            v |= 1 << i
    return v


def int_to_bits(v: int, width: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(width)], dtype=np.uint8)


def distance_from_uniform(dist) -> float:
    """sum_s |p(s) - 2^-m| over a table of 2^m probabilities."""
    p = np.asarray(dist, dtype=np.float64).ravel()
    size = p.size
    if size == 0 or size & (size - 1):
        raise ValueError("distribution size must be a power of two")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {p.sum()}, not 1")
    return float(np.abs(p - 1.0 / size).sum())


@dataclass(frozen=True)
class FlatSource:
    """Uniform distribution over ``support`` (a set of n-bit words)."""

    support: frozenset
    n: int

    def __post_init__(self):
        if not self.support:
            raise ValueError("support must be non-empty")
        for v in self.support:
            _check_word(v, self.n)

    @property
    def k(self) -> float:
        return float(np.log2(len(self.support)))

    def array(self) -> np.ndarray:
        return np.array(sorted(self.support), dtype=np.uint64)

    @classmethod
    def random(cls, n: int, k: int, rng) -> "FlatSource":
        """Uniformly random support of size 2^k."""
        rng = np.random.default_rng(rng)
        picks = rng.choice(1 << n, size=1 << k, replace=False)
        return cls(frozenset(int(v) for v in picks), n)

    @classmethod
    def full(cls, n: int) -> "FlatSource":
        return cls(frozenset(range(1 << n)), n)


KIND_ALIASES = {
    "two": "two-source-multiply",
    "two-source-multiply": "two-source-multiply",
    "three": "three-source-composed",
    "three-source-composed": "three-source-composed",
}


@dataclass(frozen=True)
class ExtractorSpec:
    kind: str
    n: int
    m: int

    def __post_init__(self):
        if self.kind not in KIND_ALIASES:
            raise ValueError(f"unknown extractor kind {self.kind!r}")
        object.__setattr__(self, "kind", KIND_ALIASES[self.kind])
        _check_n(self.n)
        _check_m(self.m, self.n)

    @property
    def n_sources(self) -> int:
        return 2 if self.kind == "two-source-multiply" else 3

    def apply(self, *words: int) -> int:
        if len(words) != self.n_sources:
            raise ValueError(f"{self.kind} takes {self.n_sources} inputs")
        if self.n_sources == 2:
            return extract2(*words, self.m, self.n)
        return extract3(*words, self.m, self.n)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "n": self.n, "m": self.m})

    @classmethod
    def from_json(cls, text: str) -> "ExtractorSpec":
        d = json.loads(text)
        if set(d) != {"kind", "n", "m"}:
            raise ValueError(f"extractor spec needs exactly kind, n, m; got {sorted(d)}")
        return cls(d["kind"], int(d["n"]), int(d["m"]))


def exact_output_distribution(spec: ExtractorSpec, sources: Sequence[FlatSource]) -> np.ndarray:
    """Exact law of the output under independent uniform draws from each support."""
    if len(sources) != spec.n_sources:
        raise ValueError(f"{spec.kind} needs {spec.n_sources} sources")
    if any(s.n != spec.n for s in sources):
        raise ValueError("source word size differs from the extractor's n")
    total = 1
    for s in sources:
        total *= len(s.support)
    if total > MAX_ENUMERATION:
        raise ValueError(f"{total} input tuples exceed the enumeration limit 2^24")
    n, m = spec.n, spec.m
    if n > KERNEL_MAX_N:
        counts = np.zeros(1 << m, dtype=np.int64)
        if spec.n_sources == 2:
            firsts = list(sources[0].support)
        else:
            firsts = [gf_mul_int(x, y, n) for x in sources[0].support for y in sources[1].support]
        for a in firsts:
            for t in sources[-1].support:
                counts[_low(gf_mul_int(a, t, n), m)] += 1
        return counts / total
    firsts = sources[0].array()
    if spec.n_sources == 3:
        firsts = gf_mul_array(firsts[:, None], sources[1].array()[None, :], n).ravel()
    counts = kernels.product_histogram(firsts, sources[-1].array(), n, MODULI[n], m)
    return counts / total
