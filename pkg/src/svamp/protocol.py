"""Protocol I and Protocol II simulation, soundness experiments and the toy
composable distance.

SV bits are consumed in a fixed order per trial: device 1 settings (4n bits),
device 2 settings (4nN bits, Protocol II only), the block index j (Protocol
II only), then the extractor seed t (exactly ``ext.n`` bits).  Device
randomness comes from a separate generator, so the SV stream never depends on
device outcomes.

Seeding: a master seed feeds ``np.random.SeedSequence``; trial i uses child i
of ``spawn(trials)``, which is split again into (SV seed, device seed).
Results are therefore independent of how trials are scheduled.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .bell import BELL_TABLE, EmpiricalBellStats, stats_from_arrays
from .bounds import ProtocolParams, definetti_bound
from .boxes import ConditionalBox, validate_box
from .extractors import ExtractorSpec, bits_to_int
from .sources import GreedyAdversarial, Strategy, SvSource, Uniform, setting_bits

_TABLE = np.ascontiguousarray(BELL_TABLE)


def _check_valid(box: ConditionalBox) -> ConditionalBox:
    rep = validate_box(box)
    if not rep.passed:
        raise ValueError(
            f"device box is not no-signaling (norm {rep.normalization_residual:.3g}, "
            f"ns {rep.no_signaling_residual:.3g})"
        )
    return box


class DeviceModel:
    """A four-partite device used for consecutive rounds.

    ``law(i, inputs, past_outputs)`` is the conditional box of global round
    ``i`` given the inputs of rounds 0..i and the outputs of rounds 0..i-1.
    Nothing else is visible to it, which is the time-ordered no-signaling
    condition.
    """

    kind = "abstract"
    adaptive = False

    def law(self, i: int, inputs: Sequence[int], past_outputs: Sequence[int]) -> ConditionalBox:
        raise NotImplementedError

    def block_box(self, block: int) -> ConditionalBox | None:
        """The fixed box of a non-adaptive block, else None."""
        return None

    def run(self, settings: np.ndarray, rng, block: int = 0, history=None) -> np.ndarray:
        """Outcomes for ``settings`` in block ``block``.

        ``history`` is a (inputs, outputs) pair of lists of earlier rounds,
        extended in place for adaptive devices.
        """
        box = self.block_box(block)
        if box is not None:
            return kernels.sample_outcomes(settings, _cdf(box), rng.random(settings.size))
        ins, outs = history if history is not None else ([], [])
        out = np.empty(settings.size, dtype=np.uint8)
        for k, u in enumerate(settings):
            ins.append(int(u))
            p = self.law(len(outs), ins, outs).row(int(u))
            x = int(min(np.searchsorted(np.cumsum(p), rng.random(), side="right"), 15))
            out[k] = x
            outs.append(x)
        return out

    def describe(self) -> dict:
        return {"kind": self.kind}


_CDF_CACHE: dict = {}


def _cdf(box: ConditionalBox) -> np.ndarray:
    key = id(box)
    hit = _CDF_CACHE.get(key)
    if hit is None or hit[0] is not box:
        hit = (box, np.ascontiguousarray(box.cdf()))
        _CDF_CACHE[key] = hit
    return hit[1]


class IidDevice(DeviceModel):
    kind = "iid"

    def __init__(self, box: ConditionalBox, label: str | None = None):
        self.box = _check_valid(box)
        self.label = label

    def law(self, i, inputs, past_outputs):
        return self.box

    def block_box(self, block):
        return self.box

    def describe(self):
        return {"kind": self.kind, "box": self.label}


class BlockIidDevice(DeviceModel):
    """Block b uses ``boxes[b % len(boxes)]`` for every round in it."""

    kind = "block-iid"

    def __init__(self, boxes: Sequence[ConditionalBox], n: int, labels=None):
        if not boxes:
            raise ValueError("need at least one box")
        self.boxes = [_check_valid(b) for b in boxes]
        self.n = n
        self.labels = labels

    def law(self, i, inputs, past_outputs):
        return self.block_box(i // self.n)

    def block_box(self, block):
        return self.boxes[block % len(self.boxes)]

    def describe(self):
        return {"kind": self.kind, "boxes": self.labels}


class AdaptiveDevice(DeviceModel):
    """Round laws chosen by ``strategy(i, inputs, past_outputs)``.

    The strategy receives tuples, so it cannot mutate or see anything else.
    Every returned box is validated unless ``validate`` is off.
    """

    kind = "adaptive"
    adaptive = True

    def __init__(self, strategy: Callable[[int, tuple, tuple], ConditionalBox], validate: bool = True,
                 label: str | None = None):
        self.strategy = strategy
        self.validate = validate
        self.label = label

    def law(self, i, inputs, past_outputs):
        box = self.strategy(i, tuple(inputs), tuple(past_outputs))
        return _check_valid(box) if self.validate else box

    def describe(self):
        return {"kind": self.kind, "strategy": self.label}


@dataclass(frozen=True)
class SourceSpec:
    """Recipe for a fresh SV source per trial."""

    epsilon: float
    strategy: Strategy = field(default_factory=Uniform)

    def make(self, seed) -> SvSource:
        return SvSource(self.epsilon, self.strategy, seed=seed)


@dataclass(frozen=True)
class AdversaryModel:
    """Classical Eve: side information from the SV stream plus collusion.

    ``side_info_bits`` low bits of the seed t are revealed to Eve as e.  With
    ``collude`` a greedy SV strategy is tuned to device 1's box before the run.
    """

    side_info_bits: int = 0
    collude: bool = True

    def side_info(self, t_word: int) -> int:
        return t_word & ((1 << self.side_info_bits) - 1)


@dataclass
class Transcript:
    protocol: int
    params: dict
    settings: np.ndarray
    outcomes: np.ndarray
    stats: EmpiricalBellStats
    t_bits: np.ndarray
    accepted: bool
    s: int | None
    m: int
    blocks: list = field(default_factory=list)  # Protocol II: per-block dicts
    j: int | None = None
    stats_j: EmpiricalBellStats | None = None
    eps_def: float | None = None

    @property
    def L(self) -> float:
        return self.stats.L

    @property
    def Lj(self) -> float | None:
        return None if self.stats_j is None else self.stats_j.L

    @property
    def t_word(self) -> int:
        return bits_to_int(self.t_bits)

    @property
    def s_hex(self) -> str:
        if self.s is None:
            return ""
        return format(self.s, f"0{max(1, math.ceil(self.m / 4))}x")

    def to_dict(self) -> dict:
        d = {
            "schema": "svamp.transcript/1",
            "protocol": "I" if self.protocol == 1 else "II",
            "params": self.params,
            "rounds": [{"u": int(u), "x": int(x)} for u, x in zip(self.settings, self.outcomes)],
            "blocks": self.blocks,
            "j": self.j,
            "t_hex": format(self.t_word, "x"),
            "L": self.stats.L,
            "accepted": self.accepted,
            "s_hex": self.s_hex or None,
        }
        if self.protocol == 2:
            d["L1"] = self.stats.L
            d["Lj"] = self.Lj
            d["eps_def"] = self.eps_def
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def pack_outcomes(outcomes: np.ndarray, width: int) -> int:
    """Outcome bits (party 1 first within a round, rounds in order) as a
    little-endian word, truncated or zero padded to ``width`` bits."""
    bits = setting_bits(outcomes)[:width]
    return bits_to_int(bits)


def _params_dict(params) -> dict:
    if isinstance(params, ProtocolParams):
        return {"epsilon": params.epsilon, "delta": params.delta, "n": params.n, "N": params.N,
                "m": params.m}
    return dict(params)


def _param(params, name):
    return getattr(params, name) if isinstance(params, ProtocolParams) else params[name]


def _seeds(seed):
    """(SV seed, device seed) for one trial."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    a, b = ss.spawn(2)
    return a, np.random.default_rng(b)


def run_protocol1(params, device: DeviceModel, src: SvSource, ext: ExtractorSpec, rng=None) -> Transcript:
    """One run of Protocol I: n rounds, test L_n <= delta, extract from (x, t)."""
    if ext.n_sources != 2:
        raise ValueError("Protocol I uses a two-source extractor")
    n, delta = int(_param(params, "n")), _param(params, "delta")
    rng = np.random.default_rng(rng)
    settings = src.draw_settings(n)
    outcomes = device.run(settings, rng, block=0)
    stats = stats_from_arrays(settings, outcomes)
    t = src.draw_bits(ext.n)
    accepted = stats.accepts(delta)
    s = ext.apply(pack_outcomes(outcomes, ext.n), bits_to_int(t)) if accepted else None
    return Transcript(protocol=1, params=_params_dict(params), settings=settings, outcomes=outcomes,
                      stats=stats, t_bits=t, accepted=accepted, s=s, m=ext.m)


def run_protocol2(params, device1: DeviceModel, device2: DeviceModel, src: SvSource, ext: ExtractorSpec,
                  rng=None) -> Transcript:
    """One run of Protocol II with N blocks on device 2.

    Unchosen blocks of a non-adaptive device 2 are not simulated; their
    settings are still drawn and logged.  An adaptive device 2 runs every
    block up to and including j, in order.
    """
    if ext.n_sources != 3:
        raise ValueError("Protocol II uses a three-source extractor")
    n, delta = int(_param(params, "n")), _param(params, "delta")
    N = int(_param(params, "N") or 1)
    eps = _param(params, "epsilon")
    rng = np.random.default_rng(rng)
    settings1 = src.draw_settings(n)
    settings2 = src.draw_settings(N * n).reshape(N, n)
    j = src.draw_block_index(N)
    t = src.draw_bits(ext.n)

    outcomes1 = device1.run(settings1, rng, block=0)
    stats1 = stats_from_arrays(settings1, outcomes1)
    blocks = []
    history = ([], [])
    outs_j = None
    for b in range(N):
        simulate = b == j or (device2.adaptive and b < j)
        entry = {"index": b, "rounds": None, "L": None}
        if simulate:
            outs = device2.run(settings2[b], rng, block=b, history=history)
            entry["rounds"] = [{"v": int(v), "y": int(y)} for v, y in zip(settings2[b], outs)]
            entry["L"] = stats_from_arrays(settings2[b], outs).L
            if b == j:
                outs_j = outs
        else:
            entry["settings"] = [int(v) for v in settings2[b]]
        blocks.append(entry)
    stats_j = stats_from_arrays(settings2[j], outs_j)
    accepted = stats1.accepts(delta) and stats_j.accepts(delta)
    s = None
    if accepted:
        s = ext.apply(pack_outcomes(outcomes1, ext.n), pack_outcomes(outs_j, ext.n), bits_to_int(t))
    return Transcript(protocol=2, params=_params_dict(params), settings=settings1, outcomes=outcomes1,
                      stats=stats1, t_bits=t, accepted=accepted, s=s, m=ext.m, blocks=blocks, j=j,
                      stats_j=stats_j, eps_def=definetti_bound(n, N, eps))


def empirical_bell_averages(box: ConditionalBox, source: SourceSpec, n: int, trials: int, seed=0) -> np.ndarray:
    """L_n of ``trials`` independent runs of an i.i.d. device, seeded as in :func:`run_trials`."""
    device = IidDevice(box)
    out = np.empty(trials)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        sv_seed, dev_rng = _seeds(child)
        src = source.make(sv_seed)
        settings = src.draw_settings(n)
        outcomes = device.run(settings, dev_rng)
        out[i] = kernels.bell_count(settings, outcomes, _TABLE) / n
    return out


@dataclass
class Attack:
    device: DeviceModel
    source: SourceSpec
    adversary: AdversaryModel = field(default_factory=AdversaryModel)
    device2: DeviceModel | None = None  # Protocol II only
    label: str = ""


def _prepare(attack: Attack) -> SourceSpec:
    strat = attack.source.strategy
    if attack.adversary.collude and isinstance(strat, GreedyAdversarial) and not strat.colluded:
        box = attack.device.block_box(0)
        if box is None:
            raise ValueError("collusion needs a device with a fixed first-block box")
        strat = GreedyAdversarial(free_direction=strat.free_direction)
        strat.collude(box)
        return SourceSpec(attack.source.epsilon, strat)
    return attack.source


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    accepted: bool
    L1: float
    Lj: float | None
    s: int | None
    s_hex: str
    e: int


def _one_trial(args) -> TrialRecord:
    idx, seed, protocol, params, attack, spec, ext = args
    sv_seed, dev_rng = _seeds(seed)
    src = spec.make(sv_seed)
    if protocol == 1:
        tr = run_protocol1(params, attack.device, src, ext, dev_rng)
    else:
        tr = run_protocol2(params, attack.device, attack.device2, src, ext, dev_rng)
    return TrialRecord(idx, tr.accepted, tr.L, tr.Lj, tr.s, tr.s_hex, attack.adversary.side_info(tr.t_word))


def run_trials(attack: Attack, params, ext: ExtractorSpec, trials: int, seed=0, protocol: int = 1,
               jobs: int = 1) -> list[TrialRecord]:
    """All trials, ordered by trial index whatever the completion order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if protocol == 2 and attack.device2 is None:
        raise ValueError("Protocol II needs device2")
    spec = _prepare(attack)
    children = np.random.SeedSequence(seed).spawn(trials)
    work = [(i, children[i], protocol, params, attack, spec, ext) for i in range(trials)]
    if jobs <= 1:
        return [_one_trial(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_one_trial, work, chunksize=max(1, trials // (4 * jobs))))


@dataclass(frozen=True)
class SoundnessReport:
    trials: int
    accepted: int
    accept_rate: float
    output_distribution: np.ndarray | None  # empirical law of s over accepting runs
    distance: float | None  # side-info-averaged distance from uniform; None if nothing accepted
    product: float
    records: tuple = ()

    def to_dict(self) -> dict:
        return {
            "schema": "svamp.soundness-report/1",
            "trials": self.trials,
            "accepted": self.accepted,
            "accept_rate": self.accept_rate,
            "distance": self.distance,
            "product": self.product,
            "output_distribution": None if self.output_distribution is None else self.output_distribution.tolist(),
        }


MAX_HISTOGRAM_M = 12


def conditional_distance(records: Sequence[TrialRecord], m: int) -> tuple[np.ndarray, float]:
    """Empirical law of s and sum_e p(e) sum_s |p(s|e) - 2^-m| over accepting records."""
    acc = [r for r in records if r.accepted]
    size = 1 << m
    hist = np.zeros(size)
    by_e: dict[int, np.ndarray] = {}
    for r in acc:
        hist[r.s] += 1
        by_e.setdefault(r.e, np.zeros(size))[r.s] += 1
    dist = 0.0
    for counts in by_e.values():
        tot = counts.sum()
        dist += tot / len(acc) * float(np.abs(counts / tot - 1.0 / size).sum())
    return hist / len(acc), dist


def soundness_experiment(attack: Attack, params, trials: int, ext: ExtractorSpec | None = None, seed=0,
                         protocol: int = 1, jobs: int = 1) -> SoundnessReport:
    """Acceptance rate and, over accepting runs, the output's distance from uniform.

    The distance is conditioned on Eve's side information and is an
    empirical estimate, so it carries sampling noise of order
    sqrt(2^m / accepted).  With no accepting run the distance is None and
    the product is 0.
    """
    if ext is None:
        ext = ExtractorSpec("two" if protocol == 1 else "three", 8, 1)
    if ext.m > MAX_HISTOGRAM_M:
        raise ValueError(f"output histograms need m <= {MAX_HISTOGRAM_M}")
    recs = run_trials(attack, params, ext, trials, seed=seed, protocol=protocol, jobs=jobs)
    n_acc = sum(r.accepted for r in recs)
    rate = n_acc / trials
    if n_acc == 0:
        return SoundnessReport(trials, 0, 0.0, None, None, 0.0, tuple(recs))
    hist, dist = conditional_distance(recs, ext.m)
    return SoundnessReport(trials, n_acc, rate, hist, dist, rate * dist, tuple(recs))


REPORT_HEADER = ["trial", "accepted", "L1", "Lj", "s_hex"]


def report_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in records:
        w.writerow([r.trial, int(r.accepted), repr(r.L1), "" if r.Lj is None else repr(r.Lj), r.s_hex])
    return buf.getvalue()


def toy_composable_distance(joint, m: int) -> tuple[float, float]:
    """Exact d_c and its |S| relaxation for ``joint[w, s, z, e] = p(s, z, e | w, ACC)``.

    w is Eve's input, z her output and e her copy of the SV bits.  Returns
    ``(exact, relaxed)`` with

        exact   = sum_{s,e} max_w sum_z |p(s,z,e|w) - p(z,e|w)/|S||
        relaxed = |S| sum_e max_w sum_z sum_s |p(s,z,e|w) - p(z,e|w)/|S||
    """
    p = np.asarray(joint, dtype=np.float64)
    if p.ndim != 4:
        raise ValueError("joint must be indexed [w, s, z, e]")
    size = 1 << m
    if p.shape[1] != size:
        raise ValueError(f"s axis has {p.shape[1]} values, expected 2^m = {size}")
    if p.size > 1 << 20:
        raise ValueError("toy joint too large to enumerate")
    if p.min() < 0 or np.abs(p.sum(axis=(1, 2, 3)) - 1.0).max() > 1e-9:
        raise ValueError("each p(.|w) must be a probability distribution")
    marg = p.sum(axis=1, keepdims=True)  # p(z, e | w)
    dev = np.abs(p - marg / size)  # [w, s, z, e]
    exact = float(dev.sum(axis=2).max(axis=0).sum())
    relaxed = float(size * dev.sum(axis=(1, 2)).max(axis=0).sum())
    return exact, relaxed
