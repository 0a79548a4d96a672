"""Command-line front end: ``svamp <command> ...``.

Exit codes: 0 on success, 2 on invalid arguments or configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds, lp, protocol
from .boxes import ConditionalBox, DeterministicStrategy, noisy_box, quantum_ideal_box, uniform_box
from .extractors import ExtractorSpec, bits_to_int, int_to_bits
from .sources import SvSource, audit_stream, read_bits, strategy_from_config, write_bits


class ConfigError(ValueError):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, newline="")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# -- certify -------------------------------------------------------------

def cmd_certify(args) -> int:
    if args.target:
        x, u = (int(v, 16) for v in args.target)
        cert = lp.max_output_probability(x, u, args.delta)
        check = lp.verify_certificate(cert)
        doc = json.loads(cert.to_json())
        doc["verified"] = check.ok
    else:
        (x, u), opt, certs = lp.max_over_all_targets(args.delta)
        checks = [lp.verify_certificate(c) for c in certs]
        worst = next(c for c in certs if c.target == (x, u))
        doc = {
            "schema": "svamp.lp-sweep/1",
            "delta": args.delta,
            "worst_target": {"x": x, "u": u},
            "optimum": opt,
            "all_verified": all(c.ok for c in checks),
            "max_gap": max(c.gap for c in certs),
            "certificate": json.loads(worst.to_json()),
        }
    _emit(json.dumps(doc, indent=1), args.out)
    return 0


# -- sweep-tradeoff ------------------------------------------------------

def cmd_sweep_tradeoff(args) -> int:
    if args.eps_steps < 1:
        raise ConfigError("--eps-steps must be >= 1")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "delta_max"])
    for i in range(args.eps_steps):
        eps = 0.5 * i / args.eps_steps
        w.writerow([repr(eps), repr(lp.tradeoff_boundary(eps))])
    _emit(buf.getvalue(), args.out)
    return 0


# -- params --------------------------------------------------------------

def cmd_params(args) -> int:
    grid = [(e, d, n) for e in args.epsilon for d in args.delta for n in args.n]
    rows = [bounds.derive_params(e, d, n, N=args.N, p_acc=args.pacc) for e, d, n in grid]
    if len(rows) == 1:
        _emit(json.dumps(json.loads(rows[0].to_json()), indent=1), args.out)
    else:
        _emit(bounds.params_csv(rows), args.out)
    return 0


# -- run -----------------------------------------------------------------

RUN_KEYS = {"params", "device", "device2", "source", "adversary", "extractor", "trials", "seed", "jobs",
            "save_transcripts"}


def _need(cfg: dict, allowed: set, required: set, where: str) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(cfg) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")
    missing = required - set(cfg)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def box_from_config(cfg) -> tuple[ConditionalBox, str]:
    if isinstance(cfg, str):
        cfg = {"box": cfg}
    kind = cfg.get("box") if isinstance(cfg, dict) else None
    if kind == "ideal":
        _need(cfg, {"box"}, set(), "box")
        return quantum_ideal_box(), "ideal"
    if kind == "uniform":
        _need(cfg, {"box"}, set(), "box")
        return uniform_box(), "uniform"
    if kind == "noisy":
        _need(cfg, {"box", "eta"}, {"eta"}, "box")
        return noisy_box(quantum_ideal_box(), float(cfg["eta"])), f"noisy({cfg['eta']})"
    if kind == "deterministic":
        _need(cfg, {"box", "index"}, {"index"}, "box")
        strat = DeterministicStrategy.from_index(int(cfg["index"]))
        return strat.box(), f"deterministic({cfg['index']})"
    if kind == "file":
        _need(cfg, {"box", "path"}, {"path"}, "box")
        return ConditionalBox.from_json(Path(cfg["path"]).read_text()), str(cfg["path"])
    raise ConfigError(f"unknown box descriptor {cfg!r}")


def device_from_config(cfg: dict, n: int) -> protocol.DeviceModel:
    kind = cfg.get("kind", "iid") if isinstance(cfg, dict) else None
    if kind == "iid":
        _need(cfg, {"kind", "box"}, {"box"}, "device")
        box, label = box_from_config(cfg["box"])
        return protocol.IidDevice(box, label)
    if kind == "block-iid":
        _need(cfg, {"kind", "boxes"}, {"boxes"}, "device")
        pairs = [box_from_config(b) for b in cfg["boxes"]]
        return protocol.BlockIidDevice([b for b, _ in pairs], n, [lbl for _, lbl in pairs])
    raise ConfigError(f"unknown device kind {kind!r} (adaptive devices are library-only)")


def load_run_config(path: str, proto: int) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    _need(cfg, RUN_KEYS, {"params", "device", "source"}, "config")
    _need(cfg["params"], {"epsilon", "delta", "n", "N", "m"}, {"epsilon", "delta", "n"}, "params")
    params = {"epsilon": float(cfg["params"]["epsilon"]), "delta": float(cfg["params"]["delta"]),
              "n": int(cfg["params"]["n"]), "N": cfg["params"].get("N")}
    if proto == 2 and not params["N"]:
        raise ConfigError("Protocol II needs params.N")
    if proto == 2 and "device2" not in cfg:
        raise ConfigError("Protocol II needs device2")
    src_cfg = dict(cfg["source"])
    try:
        eps = float(src_cfg.get("epsilon", params["epsilon"]))
        strategy = strategy_from_config(src_cfg)
        ext_cfg = cfg.get("extractor", {"kind": "two" if proto == 1 else "three", "n": 8, "m": 1})
        _need(ext_cfg, {"kind", "n", "m"}, {"kind", "n", "m"}, "extractor")
        ext = ExtractorSpec(ext_cfg["kind"], int(ext_cfg["n"]), int(ext_cfg["m"]))
        adv_cfg = cfg.get("adversary", {})
        _need(adv_cfg, {"side_info_bits", "collude"}, set(), "adversary")
        adversary = protocol.AdversaryModel(int(adv_cfg.get("side_info_bits", 0)), bool(adv_cfg.get("collude", True)))
        attack = protocol.Attack(
            device=device_from_config(cfg["device"], params["n"]),
            source=protocol.SourceSpec(eps, strategy),
            adversary=adversary,
            device2=device_from_config(cfg["device2"], params["n"]) if proto == 2 else None,
        )
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    params["m"] = ext.m
    return {"params": params, "attack": attack, "ext": ext, "cfg": cfg}


def cmd_run(args) -> int:
    loaded = load_run_config(args.config, args.protocol)
    cfg = loaded["cfg"]
    trials = int(cfg.get("trials", args.trials))
    seed = int(cfg.get("seed", args.seed))
    jobs = int(cfg.get("jobs", args.jobs))
    keep = int(cfg.get("save_transcripts", 1))
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    params, attack, ext = loaded["params"], loaded["attack"], loaded["ext"]
    report = protocol.soundness_experiment(attack, params, trials, ext=ext, seed=seed,
                                           protocol=args.protocol, jobs=jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(protocol.report_csv(report.records), newline="")
    summary = report.to_dict()
    summary.update({"protocol": args.protocol, "params": params, "seed": seed})
    (out / "report.json").write_text(json.dumps(summary, indent=1))
    # replay the first trials from their seeds to store full transcripts
    tdir = out / "transcripts"
    tdir.mkdir(exist_ok=True)
    spec = protocol._prepare(attack)
    children = np.random.SeedSequence(seed).spawn(trials)
    for i in range(min(keep, trials)):
        sv_seed, dev_rng = protocol._seeds(children[i])
        src = spec.make(sv_seed)
        if args.protocol == 1:
            tr = protocol.run_protocol1(params, attack.device, src, ext, dev_rng)
        else:
            tr = protocol.run_protocol2(params, attack.device, attack.device2, src, ext, dev_rng)
        (tdir / f"trial_{i:05d}.json").write_text(tr.to_json())
    print(f"accept_rate={report.accept_rate} trials={trials} out={out}")
    return 0


# -- extract -------------------------------------------------------------

def cmd_extract(args) -> int:
    spec = ExtractorSpec(args.kind, args.n, args.m)
    if len(args.inputs) != spec.n_sources:
        raise ConfigError(f"{spec.kind} needs {spec.n_sources} input files")
    streams = [read_bits(p) for p in args.inputs]
    words = min(s.size for s in streams) // args.n
    if words == 0:
        raise ConfigError(f"inputs hold fewer than {args.n} bits")
    out = []
    for w in range(words):
        vals = [bits_to_int(s[w * args.n:(w + 1) * args.n]) for s in streams]
        out.append(int_to_bits(spec.apply(*vals), args.m))
    write_bits(args.out, np.concatenate(out))
    print(f"extracted {words} words of {args.m} bits")
    return 0


# -- definetti -----------------------------------------------------------

def cmd_definetti(args) -> int:
    doc = {
        "schema": "svamp.definetti/1",
        "n": args.n,
        "N": args.N,
        "epsilon": args.epsilon,
        "bound": bounds.definetti_bound(args.n, args.N, args.epsilon, args.sigma_log),
    }
    if args.trials:
        src = SvSource(args.epsilon, seed=args.seed)
        est = bounds.empirical_block_independence(bounds.CopyTwoDevice(args.n), args.n, args.N, src,
                                                  args.trials, rng=args.seed + 1)
        doc["copy_device"] = {"mean": est.mean, "stderr": est.stderr, "trials": est.trials}
    _emit(json.dumps(doc, indent=1), args.out)
    return 0


# -- audit-sv ------------------------------------------------------------

def cmd_audit_sv(args) -> int:
    rep = audit_stream(read_bits(args.inputs), args.epsilon, args.window)
    doc = {"schema": "svamp.sv-audit/1", "n_bits": rep.n_bits,
           "worst_conditional_deviation": rep.worst_conditional_deviation,
           "worst_excess": rep.worst_excess, "cells_checked": rep.cells_checked, "passed": rep.passed}
    _emit(json.dumps(doc, indent=1), args.out)
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="svamp", description="Randomness amplification laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="LP bound on output probabilities")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--target", nargs=2, metavar=("X_HEX", "U_HEX"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep-tradeoff", help="tolerated noise versus epsilon")
    p.add_argument("--eps-steps", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_tradeoff)

    p = sub.add_parser("run", help="simulate Protocol I or II")
    p.add_argument("--protocol", type=int, choices=(1, 2), default=1)
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("params", help="derived protocol parameters")
    p.add_argument("--epsilon", type=float, nargs="+", required=True)
    p.add_argument("--delta", type=float, nargs="+", required=True)
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--pacc", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("extract", help="apply an extractor to raw bit files")
    p.add_argument("--kind", choices=("two", "three"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("definetti", help="de Finetti bound, optionally with a copy-device estimate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--sigma-log", type=float, default=bounds.SIGMA_LOG)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_definetti)

    p = sub.add_parser("audit-sv", help="empirical SV check of a raw bit file")
    p.add_argument("--in", dest="inputs", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit_sv)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"svamp: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"svamp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
