"""Acceptance suite: one test per criterion, each with its runtime budget.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from svamp import bounds, lp
from svamp import protocol as pr
from svamp.bell import bell_value
from svamp.boxes import (
    enumerate_deterministic_boxes,
    noisy_box,
    quantum_ideal_box,
    uniform_box,
    validate_box,
)
from svamp.extractors import ExtractorSpec, FieldElement, FlatSource, distance_from_uniform, exact_output_distribution
from svamp.sources import ConstantBias, GreedyAdversarial, SvSource

criterion = pytest.mark.criterion

EPS = 0.01
DELTA = lp.tradeoff_boundary(EPS) / 2
N_ROUNDS = 10_000


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


@criterion(1, "quantum box: Bell value 0, no-signaling")
def test_c01_quantum_violation():
    with Budget(1):
        box = quantum_ideal_box()
        assert abs(bell_value(box)) <= 1e-9
        rep = validate_box(box, tol_ns=1e-9, tol_norm=1e-9)
        assert rep.passed


@criterion(2, "local bound is exactly 2")
def test_c02_lhv_bound():
    with Budget(1):
        values = [bell_value(b) for _, b in enumerate_deterministic_boxes()]
        assert len(values) == 256
        assert min(values) == 2


@criterion(3, "LP output bound with verified duals, monotone in delta")
def test_c03_lp_bound():
    with Budget(30):
        optima = []
        for delta in (0.0, 0.05, 0.10, 0.15):
            _, opt, certs = lp.max_over_all_targets(delta)
            assert len(certs) == 256
            assert opt <= (1 + 2 * delta) / 3 + 1e-7
            for cert in certs:
                assert cert.gap <= 1e-7
                assert lp.verify_certificate(cert).ok
            optima.append(opt)
        assert all(a <= b + 1e-12 for a, b in zip(optima, optima[1:]))


@criterion(4, "tradeoff frontier and gamma consistency")
def test_c04_tradeoff():
    with Budget(1):
        for i in range(100):
            eps = 0.5 * i / 100
            closed = lp.tradeoff_boundary(eps)
            exact = (Fraction(1, 2) - Fraction(eps)) ** 8 / 2
            assert abs(closed - float(exact)) <= 1e-12
            assert lp.gamma_of(2 * closed * (1 - 1e-9), eps) < 1
            assert lp.gamma_of(2 * closed * (1 + 1e-9), eps) >= 1


@criterion(5, "Azuma tail of L_n for an honest i.i.d. device")
def test_c05_azuma():
    eta, n, trials = 0.1, 10_000, 10_000
    with Budget(300):
        vals = pr.empirical_bell_averages(noisy_box(quantum_ideal_box(), eta), pr.SourceSpec(0.0), n, trials, seed=5)
        assert vals.mean() == pytest.approx(eta / 4, abs=1e-3)
        for s in (0.02, 0.05):
            freq = float(np.mean(np.abs(vals - eta / 4) >= s))
            assert freq <= 1.5 * bounds.azuma_bound(n, s)


_DET = [b for _, b in enumerate_deterministic_boxes()]
_QUANTUM = quantum_ideal_box()
_UNIFORM = uniform_box()
# noise >= 0.6 caps every entry at 0.4 + 0.6/16 = 0.4375
_NOISY = [[noisy_box(b, 0.6 + 0.4 * r / 6) for b in _DET] for r in range(7)]


def _adaptive_chain(rng, n=20, mu=0.5):
    """Random capped-round pattern; every box depends on the recorded past."""
    k = int(rng.integers(math.ceil(mu * n), n + 1))
    capped = set(rng.choice(n, k, replace=False).tolist())
    salt = int(rng.integers(1 << 30))

    def chooser(i, past_x, past_u):
        h = hash((salt, i, tuple(past_x), tuple(past_u))) & 0xFF
        if i in capped:
            return _QUANTUM if h % 3 == 0 else _NOISY[h % 7][h]
        return _DET[h] if h % 2 else _UNIFORM

    return chooser, capped


@criterion(6, "chain rule: joint probability <= gamma^(mu n)")
def test_c06_min_entropy_chain():
    gamma, n, mu = Fraction(44, 100), 20, 0.5
    rng = np.random.default_rng(6)
    with Budget(10):
        for _ in range(100):
            chooser, capped = _adaptive_chain(rng, n, mu)
            u = rng.integers(0, 16, n).tolist()
            # greedy most-likely outputs make the check non-trivial
            x = []
            for i in range(n):
                box = chooser(i, x, u[:i])
                if i in capped:
                    assert Fraction(box.max_probability()) <= gamma
                x.append(int(box.p[u[i]].argmax()))
            joint = bounds.chain_rule_oracle(chooser, x, u, exact=True)
            assert isinstance(joint, Fraction)
            assert joint <= gamma ** int(mu * n)
            assert len(capped) >= mu * n


@criterion(7, "de Finetti: copied device within bound, product device 0")
def test_c07_definetti():
    n, N, trials = 1, 16, 4000
    with Budget(60):
        bound = bounds.definetti_bound(n, N, 0.0, 4)
        est = bounds.empirical_block_independence(bounds.CopyTwoDevice(n), n, N, SvSource(0.0, seed=7), trials, rng=7)
        assert est.mean <= bound + 3 * est.stderr
        prod = bounds.ProductTwoDevice(quantum_ideal_box(), noisy_box(quantum_ideal_box(), 0.3))
        est0 = bounds.empirical_block_independence(prod, n, N, SvSource(0.0, seed=8), 200, rng=8)
        assert est0.mean == pytest.approx(0.0, abs=1e-12)


@criterion(8, "two-source extractor distance and field axioms")
def test_c08_extractor():
    spec = ExtractorSpec("two", 8, 1)
    rng = np.random.default_rng(8)
    with Budget(120):
        worst = 0.0
        for _ in range(200):
            a, b = FlatSource.random(8, 6, rng), FlatSource.random(8, 6, rng)
            worst = max(worst, distance_from_uniform(exact_output_distribution(spec, [a, b])))
        assert worst <= 0.125
        els = [FieldElement(v, 4) for v in range(16)]
        for a in els:
            assert (a + FieldElement(0, 4)) == a and (a * FieldElement(1, 4)) == a
            assert (a + a).value == 0
            if a.value:
                assert (a * a.inverse()).value == 1
            for b in els:
                assert a * b == b * a and a + b == b + a
                for c in els:
                    assert (a * b) * c == a * (b * c)
                    assert a * (b + c) == a * b + a * c


@criterion(9, "Protocol I completeness for a noisy honest device")
def test_c09_completeness():
    params = {"epsilon": EPS, "delta": DELTA, "n": N_ROUNDS, "N": None, "m": 1}
    attack = pr.Attack(pr.IidDevice(noisy_box(quantum_ideal_box(), DELTA)), pr.SourceSpec(EPS, ConstantBias(EPS, 1)))
    with Budget(300):
        rep = pr.soundness_experiment(attack, params, 1000, seed=9)
        assert rep.accept_rate >= 0.99


@pytest.mark.slow
@criterion(10, "Protocol I soundness against all 256 local boxes")
def test_c10_soundness_suite():
    params = {"epsilon": EPS, "delta": DELTA, "n": N_ROUNDS, "N": None, "m": 1}
    with Budget(600):
        for idx, (strat, box) in enumerate(enumerate_deterministic_boxes()):
            attack = pr.Attack(pr.IidDevice(box), pr.SourceSpec(EPS, GreedyAdversarial()), label=f"det{idx}")
            rep = pr.soundness_experiment(attack, params, 1000, seed=10_000 + idx)
            assert rep.accept_rate <= 0.01, attack.label
            assert rep.product <= 0.02, attack.label


@criterion(11, "toy composable distance and its relaxation")
def test_c11_toy_composable():
    with Budget(60):
        indep = np.full((2, 2, 2, 2), 1 / 8)
        assert pr.toy_composable_distance(indep, 1) == (0.0, 0.0)
        const = np.zeros((2, 2, 1, 1))
        const[:, 0] = 1.0
        assert pr.toy_composable_distance(const, 1)[0] == 1.0
        rng = np.random.default_rng(11)
        for _ in range(100):
            m = int(rng.integers(1, 3))
            shape = (int(rng.integers(1, 4)), 1 << m, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
            p = rng.random(shape) ** 2
            p /= p.sum(axis=(1, 2, 3), keepdims=True)
            exact, relaxed = pr.toy_composable_distance(p, m)
            assert exact <= relaxed + 1e-12
