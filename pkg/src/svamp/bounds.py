"""Concentration, accumulation and de Finetti bounds plus the Protocol I
parameter schedule.

Quantities that underflow at realistic n (gamma^(mu n), eps_Az, delta1) are
carried as base-2 logarithms; the plain values are reported alongside and may
be 0.0.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .boxes import ConditionalBox, as_index
from .lp import gamma_of

LOG2E = 1.0 / math.log(2.0)
SIGMA_LOG = 4  # log2 of the per-box outcome alphabet


def azuma_bound(n: int, s: float) -> float:
    """P(|L_n - mean| >= s) <= 2 exp(-n s^2 / 2)."""
    if n < 1 or s <= 0:
        raise ValueError("need n >= 1 and s > 0")
    return 2.0 * math.exp(-n * s * s / 2.0)


def min_entropy_accumulation(gamma: float, mu: float, n: int) -> float:
    """-mu n log2(gamma): min-entropy (bits) when mu n rounds have max-probability <= gamma."""
    if not 0.0 < gamma <= 1.0 or not 0.0 <= mu <= 1.0 or n < 0:
        raise ValueError("need gamma in (0, 1], mu in [0, 1], n >= 0")
    return -mu * n * math.log2(gamma)


def definetti_bound(n: int, N: int, epsilon: float, sigma_log: float = SIGMA_LOG) -> float:
    """sqrt(2 ln2 N^log2(1+2eps) n sigma_log / N), an L1-distance bound.

    May exceed 2 for small N; it is reported as is.
    """
    if n < 1 or N < 1:
        raise ValueError("need n >= 1 and N >= 1")
    if not 0.0 <= epsilon < 0.5:
        raise ValueError(f"epsilon must lie in [0, 1/2), got {epsilon}")
    expo = math.log2(1 + 2 * epsilon)
    return math.sqrt(2 * math.log(2) * N ** expo * n * sigma_log / N)


def _log2_add(a: float, b: float) -> float:
    return float(np.logaddexp2(a, b))


def _pow2(x: float) -> float:
    if x < -1074:
        return 0.0
    return math.inf if x > 1023 else 2.0 ** x


@dataclass(frozen=True)
class ProtocolParams:
    epsilon: float
    delta: float
    n: int
    N: int | None
    m: int
    p_acc: float | None
    delta_az: float
    eps_az: float
    log2_eps_az: float
    mu: float
    gamma: float
    log2_gamma_mu_n: float
    delta1: float
    log2_delta1: float
    eta: float
    log2_eta: float
    h: float | None
    n0: int
    eps_def: float | None
    # the two error scales seen in the Protocol I analysis:
    # d * p(ACC) before the |S| factor, and d_comp * p(ACC) after it
    log2_err_sqrt_track: float
    log2_err_quarter_track: float
    feasible: bool
    reasons: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reasons"] = list(self.reasons)
        return d

    def to_json(self) -> str:
        return json.dumps({"schema": "svamp.protocol-params/1", **self.to_dict()})


def derive_params(epsilon: float, delta: float, n: int, N: int | None = None,
                  p_acc: float | None = None, m: int | None = None) -> ProtocolParams:
    """Full Protocol I schedule with delta_Az = n^(-1/4).

    ``m`` (output bits) defaults to floor(n^(1/4)).  ``h`` is the min-entropy
    (bits) of the accepted output, (log2 p_acc - log2 delta1) / 2, and is only
    computed when ``p_acc`` is given.
    """
    if not 0.0 <= epsilon < 0.5:
        raise ValueError(f"epsilon must lie in [0, 1/2), got {epsilon}")
    if delta <= 0 or n < 1:
        raise ValueError("need delta > 0 and n >= 1")
    if p_acc is not None and not 0.0 < p_acc <= 1.0:
        raise ValueError("p_acc must lie in (0, 1]")
    n = int(n)
    delta_az = n ** -0.25
    # eps_Az = 2 exp(-delta_Az^2 n / 4) = 2 exp(-sqrt(n) / 4)
    log2_eps_az = 1.0 - delta_az * delta_az * n / 4.0 * LOG2E
    total = delta + delta_az
    mu = 1.0 - math.sqrt(total)
    gamma = gamma_of(total, epsilon)
    log2_gmn = mu * n * math.log2(gamma)
    log2_delta1 = _log2_add(log2_gmn, 1.0 + log2_eps_az)
    log2_eta = log2_delta1 / 2.0
    # the shortest decimal form keeps 1/0.001^4 at 10^12 rather than one below
    n0 = math.floor(1 / Fraction(repr(float(delta))) ** 4)
    if m is None:
        m = max(1, math.isqrt(math.isqrt(n)))
    reasons = []
    if gamma >= 1.0:
        reasons.append("gamma_ge_1")
    if n < n0:
        reasons.append("n_below_n0")
    # d q(ACC) <= max(2 eta, 2 sqrt(eta)) = 2 sqrt(eta) for eta <= 1
    log2_err = 1.0 + min(log2_eta / 2.0, 0.0)
    return ProtocolParams(
        epsilon=float(epsilon),
        delta=float(delta),
        n=n,
        N=None if N is None else int(N),
        m=int(m),
        p_acc=None if p_acc is None else float(p_acc),
        delta_az=delta_az,
        eps_az=_pow2(log2_eps_az),
        log2_eps_az=log2_eps_az,
        mu=mu,
        gamma=gamma,
        log2_gamma_mu_n=log2_gmn,
        delta1=_pow2(log2_delta1),
        log2_delta1=log2_delta1,
        eta=_pow2(log2_eta),
        log2_eta=log2_eta,
        h=None if p_acc is None else 0.5 * (math.log2(p_acc) - log2_delta1),
        n0=n0,
        eps_def=None if N is None else definetti_bound(n, N, epsilon),
        log2_err_sqrt_track=log2_err,
        log2_err_quarter_track=log2_err + m,
        feasible=not reasons,
        reasons=tuple(reasons),
    )


def eta_value(gamma: float, mu_n: float, eps_az: float) -> float:
    """sqrt(gamma^(mu n) + 2 eps_Az) from its ingredients."""
    log2_d1 = _log2_add(mu_n * math.log2(gamma), math.log2(2 * eps_az) if eps_az > 0 else -math.inf)
    return _pow2(log2_d1 / 2.0)


def eta_threshold(params: ProtocolParams) -> float:
    """The acceptance-probability split point of ``params``.

    Below it the accepted output is too rare to matter; above it the
    accepted output has min-entropy at least -log2 sqrt(eta).
    """
    return params.eta


SWEEP_HEADER = ["epsilon", "delta", "n", "gamma", "mu", "delta1", "h", "feasible"]


def params_csv(rows: Sequence[ProtocolParams]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for p in rows:
        w.writerow([repr(p.epsilon), repr(p.delta), p.n, repr(p.gamma), repr(p.mu),
                    repr(p.delta1), "" if p.h is None else repr(p.h), int(p.feasible)])
    return buf.getvalue()


BoxChain = Sequence[ConditionalBox] | Callable[[int, tuple, tuple], ConditionalBox]


def chain_rule_oracle(conditional_boxes: BoxChain, x, u, exact: bool = False):
    """Joint probability prod_i p(x_i | u_i, past) of a sequence of rounds.

    ``conditional_boxes`` is either a list of per-round boxes or a callable
    ``(i, past_x, past_u) -> ConditionalBox`` for adaptive devices.  Past
    tuples hold indices.  With ``exact`` the product is a Fraction of the
    float entries, so comparisons against a cap suffer no rounding.
    """
    xs = [as_index(v) for v in x]
    us = [as_index(v) for v in u]
    if len(xs) != len(us):
        raise ValueError("x and u must have equal length")
    if not callable(conditional_boxes) and len(conditional_boxes) != len(xs):
        raise ValueError("need one box per round")
    prob = Fraction(1) if exact else 1.0
    for i, (xi, ui) in enumerate(zip(xs, us)):
        if callable(conditional_boxes):
            box = conditional_boxes(i, tuple(xs[:i]), tuple(us[:i]))
        else:
            box = conditional_boxes[i]
        entry = float(box.p[ui, xi])
        prob *= Fraction(entry) if exact else entry
    return prob


# -- empirical de Finetti check ------------------------------------------

class TwoDeviceModel:
    """Device 1 with n rounds, device 2 with N blocks of n rounds.

    Subclasses give the exact joint of (X^1, X^2_j) conditioned on all
    inputs and on the outputs of blocks before j, plus a sampler for those
    prior outputs.  Outcomes of a block are encoded as one integer in
    [0, 16^n), round 1 most significant.
    """

    def sample_prior(self, u1, v, j, rng) -> np.ndarray:
        raise NotImplementedError

    def conditional_joint(self, u1, v, j, prior) -> np.ndarray:
        raise NotImplementedError


def _block_row(box: ConditionalBox, settings) -> np.ndarray:
    row = np.ones(1)
    for s in settings:
        row = np.kron(row, box.p[int(s)])
    return row


class ProductTwoDevice(TwoDeviceModel):
    """Independent i.i.d. devices; every block of device 2 uses ``box2``."""

    def __init__(self, box1: ConditionalBox, box2: ConditionalBox):
        self.box1, self.box2 = box1, box2

    def sample_prior(self, u1, v, j, rng):
        out = []
        for b in range(j):
            row = _block_row(self.box2, v[b])
            out.append(int(rng.choice(row.size, p=row / row.sum())))
        return np.array(out, dtype=np.int64)

    def conditional_joint(self, u1, v, j, prior):
        return np.outer(_block_row(self.box1, u1), _block_row(self.box2, v[j]))


class CopyTwoDevice(TwoDeviceModel):
    """Device 1 outputs uniform bits whatever the input; every block of
    device 2 repeats device 1's outputs.

    Given any earlier block, X^1 is already fixed, so only block 0 carries
    correlation.
    """

    def __init__(self, n: int):
        self.size = 16 ** n

    def sample_prior(self, u1, v, j, rng):
        if j == 0:
            return np.zeros(0, dtype=np.int64)
        x = int(rng.integers(self.size))
        return np.full(j, x, dtype=np.int64)

    def conditional_joint(self, u1, v, j, prior):
        if j == 0:
            return np.eye(self.size) / self.size
        joint = np.zeros((self.size, self.size))
        joint[prior[0], prior[0]] = 1.0
        return joint


def product_distance(joint: np.ndarray) -> float:
    """|| P(A,B) - P(A) x P(B) ||_1."""
    return float(np.abs(joint - np.outer(joint.sum(axis=1), joint.sum(axis=0))).sum())


@dataclass(frozen=True)
class BlockIndependenceEstimate:
    mean: float
    stderr: float
    trials: int


MAX_BLOCK_ROUNDS = 2  # 16^n x 16^n joints stay small


def empirical_block_independence(device: TwoDeviceModel, n: int, N: int, src, trials: int,
                                 rng=None) -> BlockIndependenceEstimate:
    """Monte-Carlo mean of the conditional product distance.

    Per trial the SV source draws device 1's settings, device 2's settings
    for all blocks and then the block index j; earlier block outputs are
    sampled from the model and the distance is computed exactly.
    """
    if n < 1 or N < 1 or trials < 1:
        raise ValueError("need n, N, trials >= 1")
    if n > MAX_BLOCK_ROUNDS:
        raise ValueError(f"exact marginals need n <= {MAX_BLOCK_ROUNDS}, got {n}")
    rng = np.random.default_rng(rng)
    vals = np.empty(trials)
    for t in range(trials):
        u1 = src.draw_settings(n)
        v = src.draw_settings(N * n).reshape(N, n)
        j = src.draw_block_index(N)
        prior = device.sample_prior(u1, v, j, rng)
        vals[t] = product_distance(device.conditional_joint(u1, v, j, prior))
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return BlockIndependenceEstimate(mean=float(vals.mean()), stderr=stderr, trials=trials)
