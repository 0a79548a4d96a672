"""Independent reference computations used as test oracles.

None of these import the package's own algorithms; they recompute from
first principles with different methods.
"""
from __future__ import annotations

import itertools

import numpy as np


# -- quantum box via basis rotation ----------------------------------------

def statevector_box() -> np.ndarray:
    """P(x|u) by rotating X-measured qubits with a Hadamard and reading amplitudes.

    The state is assembled from its 16 computational-basis amplitudes, written
    out term by term, rather than from Kronecker products of Bell states.
    """
    amp = np.zeros(16)
    # |phi-> on qubits (1,2): (|00> - |11>)/sqrt2
    # |phi~+> on (3,4): (|0+> + |1->)/sqrt2 ; |psi~-> on (3,4): (|0-> - |1+>)/sqrt2
    s = 1 / np.sqrt(2)
    plus = {0: s, 1: s}
    minus = {0: s, 1: -s}

    def add(q12: dict, q34: dict, coef: float):
        for (a, b), c1 in q12.items():
            for (c, d), c2 in q34.items():
                amp[a * 8 + b * 4 + c * 2 + d] += coef * c1 * c2

    phi_minus = {(0, 0): s, (1, 1): -s}
    psi_plus = {(0, 1): s, (1, 0): s}
    phi_t_plus = {}
    psi_t_minus = {}
    for d in (0, 1):
        phi_t_plus[(0, d)] = phi_t_plus.get((0, d), 0) + s * plus[d]
        phi_t_plus[(1, d)] = phi_t_plus.get((1, d), 0) + s * minus[d]
        psi_t_minus[(0, d)] = psi_t_minus.get((0, d), 0) + s * minus[d]
        psi_t_minus[(1, d)] = psi_t_minus.get((1, d), 0) - s * plus[d]
    add(phi_minus, phi_t_plus, s)
    add(psi_plus, psi_t_minus, s)

    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    I2 = np.eye(2)
    p = np.zeros((16, 16))
    for u in range(16):
        ops = [H if not (u >> (3 - i)) & 1 else I2 for i in range(4)]
        U = ops[0]
        for op in ops[1:]:
            U = np.kron(U, op)
        p[u] = np.abs(U @ amp) ** 2
    return p


# -- no-signaling LP via scipy -------------------------------------------

def scipy_max_output(x: int, u: int, delta: float) -> float:
    from scipy.optimize import linprog

    A, b = [], []
    idx = lambda uu, xx: uu * 16 + xx  # noqa: E731
    for uu in range(16):
        row = np.zeros(256)
        row[uu * 16:(uu + 1) * 16] = 1
        A.append(row)
        b.append(1)
    for party in range(4):
        bit = 1 << (3 - party)
        for uu in range(16):
            if uu & bit:
                continue
            for xx in range(16):
                if xx & bit:
                    continue
                row = np.zeros(256)
                for dx in (0, bit):
                    row[idx(uu, xx | dx)] += 1
                    row[idx(uu | bit, xx | dx)] -= 1
                A.append(row)
                b.append(0)
    bell = np.zeros(256)
    U0, U1 = {1, 2, 4, 8}, {7, 11, 13, 14}
    for uu in range(16):
        for xx in range(16):
            par = bin(xx).count("1") % 2
            if (uu in U0 and par == 0) or (uu in U1 and par == 1):
                bell[idx(uu, xx)] = 1
    c = np.zeros(256)
    c[idx(u, x)] = -1
    res = linprog(c, A_ub=[bell], b_ub=[delta], A_eq=np.array(A), b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return -res.fun


# -- GF(2^n) arithmetic on coefficient lists --------------------------------

def poly_mul(a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] ^= bj
    return out


def poly_mod(a: list[int], m: list[int]) -> list[int]:
    a = list(a)
    dm = len(m) - 1
    for i in range(len(a) - 1, dm - 1, -1):
        if a[i]:
            for j in range(dm + 1):
                a[i - dm + j] ^= m[j]
    return (a + [0] * dm)[:dm]


def coeffs(v: int, width: int) -> list[int]:
    return [(v >> i) & 1 for i in range(width)]


def from_coeffs(c: list[int]) -> int:
    return sum(bit << i for i, bit in enumerate(c))


def schoolbook_gf_mul(a: int, b: int, n: int, modulus_full: int) -> int:
    """Long multiplication followed by long division by the full modulus."""
    m = coeffs(modulus_full, n + 1)
    return from_coeffs(poly_mod(poly_mul(coeffs(a, n), coeffs(b, n)), m))


def _int_mulmod(a: int, b: int, mod: int, deg: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> deg & 1:
            a ^= mod
    return r


def _int_polymod(a: int, mod: int) -> int:
    dm = mod.bit_length() - 1
    while a.bit_length() - 1 >= dm:
        a ^= mod << (a.bit_length() - 1 - dm)
    return a


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _int_polymod(a, b)
    return a


def is_irreducible(mod: int) -> bool:
    """Rabin's test for a polynomial over GF(2) given as an int with the top bit set."""
    n = mod.bit_length() - 1
    primes = [p for p in range(2, n + 1) if n % p == 0 and all(p % q for q in range(2, p))]

    def x_pow_2k(k: int) -> int:
        v = 0b10
        for _ in range(k):
            v = _int_mulmod(v, v, mod, n)
        return v

    if x_pow_2k(n) != 0b10:
        return False
    for p in primes:
        h = x_pow_2k(n // p) ^ 0b10
        if _poly_gcd(mod, h) != 1:
            return False
    return True


# -- brute-force deterministic enumeration ---------------------------------

def lhv_values() -> list[int]:
    """Bell value of every deterministic local strategy, counted directly."""
    U0, U1 = {1, 2, 4, 8}, {7, 11, 13, 14}
    vals = []
    for resp in itertools.product(range(4), repeat=4):
        total = 0
        for u in range(16):
            bits = [(u >> (3 - i)) & 1 for i in range(4)]
            outs = [(resp[i] >> (1 - bits[i])) & 1 for i in range(4)]
            par = sum(outs) % 2
            total += (u in U0 and par == 0) or (u in U1 and par == 1)
        vals.append(total)
    return vals
