"""Command-line interface.

Subcommands: generate, attack, receive, experiment, verify-theory.
Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 declared checks evaluated and failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import btcs, harness, receiver, signal_io, theory
from .harness import ConfigError


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; bad usage is a config error here
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="toasim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[], help="build a SYNC packet waveform",
                       add_help=True)
    g.add_argument("--phy", default="LE1M")
    g.add_argument("--payload", default="random",
                   choices=("none", "random", "sounding"))
    g.add_argument("--payload-bits", type=int, default=None,
                   help="defaults: none 0, random 128, sounding 96")
    g.add_argument("--n-markers", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--oversampling", type=int, default=8)
    g.add_argument("--out", required=True, help="output prefix")
    g.set_defaults(func=_cmd_generate)

    a = sub.add_parser("attack", help="apply a mask or NGD transform to a signal")
    a.add_argument("--in", dest="inp", required=True, help="input .iq file")
    a.add_argument("--attack", required=True, help="JSON attack description")
    a.add_argument("--out", required=True, help="output .iq file")
    a.set_defaults(func=_cmd_attack)

    r = sub.add_parser("receive", help="estimate ToA and NADM metrics")
    r.add_argument("--in", dest="inp", required=True, help="received .iq file")
    r.add_argument("--template", required=True, help="template .iq file")
    r.add_argument("--phy", default="LE1M")
    r.add_argument("--bits", default=None, help="expected bits file (0/1 text)")
    r.add_argument("--out", default=None, help="write the report JSON here")
    r.set_defaults(func=_cmd_receive)

    e = sub.add_parser("experiment", help="run a batch experiment from an INI file")
    e.add_argument("--config", required=True)
    e.add_argument("--out", default=None,
                   help=f"output root (default ${harness.OUTPUT_ROOT_ENV} or ./toasim_out)")
    e.add_argument("--check", action="store_true",
                   help="evaluate [check] bounds; exit 3 on violation")
    e.add_argument("--no-plots", action="store_true")
    e.set_defaults(func=_cmd_experiment)

    v = sub.add_parser("verify-theory", help="run the derivation cross-checks")
    v.add_argument("--pairs", type=int, default=25)
    v.add_argument("--out", default=None, help="write the report JSON here")
    v.set_defaults(func=_cmd_verify_theory)
    return p


def _cmd_generate(args) -> int:
    # every ValueError out of packet construction traces back to the flags
    try:
        phy = btcs.phy_from_name(args.phy)
        bits = args.payload_bits
        if bits is None:
            bits = {"none": 0, "random": 128, "sounding": 96}[args.payload]
        cfg = btcs.CsSyncConfig(phy=phy, payload_kind=args.payload,
                                payload_bits=bits, n_markers=args.n_markers,
                                seed=args.seed)
        packet = btcs.build_cs_sync(cfg, oversampling=args.oversampling)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    iq_path = Path(str(prefix) + ".iq")
    signal_io.write_signal(packet.waveform, iq_path)
    desc = btcs.packet_descriptor(packet)
    Path(str(prefix) + ".packet.json").write_text(
        json.dumps(desc, sort_keys=True, indent=2) + "\n")
    Path(str(prefix) + ".bits.txt").write_text(
        "".join(str(int(b)) for b in packet.bits) + "\n")
    print(f"wrote {iq_path} ({packet.n_bits} bits, {len(packet.waveform)} samples)")
    return 0


def _cmd_attack(args) -> int:
    sig = signal_io.read_signal(args.inp)
    try:
        desc = json.loads(Path(args.attack).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read attack description: {exc}") from exc
    spec = harness.attack_from_dict(desc)
    if spec is None:
        raise ConfigError("attack description is empty")
    from . import attack as attack_mod
    if isinstance(spec, attack_mod.MaskSpec):
        out = attack_mod.apply_mask(sig, spec)
    else:
        out = attack_mod.apply_ngd(sig, spec)
    signal_io.write_signal(out, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_receive(args) -> int:
    try:
        phy = btcs.phy_from_name(args.phy)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    received = signal_io.read_signal(args.inp)
    template = signal_io.read_signal(args.template)
    corr = receiver.differential_xcorr(received, template, 1.0 / phy.symbol_rate)
    est = receiver.estimate_toa(corr)
    bits_ok = None
    if args.bits is not None:
        text = Path(args.bits).read_text().strip()
        expected = np.array([int(c) for c in text], dtype=np.int8)
        bits_ok = receiver.check_bits(received, expected, phy, est)
        est = receiver.mark_validity(est, bits_ok)
    report = {
        "toa_s": est.toa_seconds,
        "coarse_index": est.coarse_index,
        "fractional": est.fractional,
        "peak_magnitude": est.peak_magnitude,
        "flat_peak": est.flat_peak,
        "ncc": receiver.nadm_ncc(received, template, est),
        "pmse": receiver.nadm_pmse(received, template, est),
        "dft": receiver.nadm_dft(received, est, phy.symbol_rate,
                                 n_samples=len(template)),
        "bits_ok": bits_ok,
    }
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def _cmd_experiment(args) -> int:
    cfg, rf, checks = harness.load_experiment_config(args.config)
    root = Path(args.out) if args.out else harness.default_output_root()
    result = harness.run_experiment(cfg, rf, out_dir=root)
    if not args.no_plots:
        harness.emit_plots(result, root / cfg.id)
    s = result.summary
    print(f"{cfg.id}: {s['n_packets']} packets, mean advance "
          f"{s['mean_advance_m']:.3f} m (std {s['std_advance_m']:.4f} m), "
          f"bits ok {s['n_bits_ok']}/{s['n_packets']}")
    print(f"results in {root / cfg.id}")
    if args.check:
        failures = harness.check_result(result, checks)
        for msg in failures:
            print(f"CHECK FAIL: {msg}", file=sys.stderr)
        if failures:
            return 3
        print("all checks passed")
    return 0


def _cmd_verify_theory(args) -> int:
    n = args.pairs
    report = {"groups": []}
    ok_all = True

    worst = 0.0
    for seed in range(n):
        x, dx = theory.random_perturbation_pair(seed)
        rep = theory.verify_peak_derivative_identity(x, dx)
        worst = max(worst, rep.rel_err)
        ok_all &= rep.passed
    report["groups"].append({"name": "peak-derivative identity", "pairs": n,
                             "worst_rel_err": worst,
                             "passed": bool(ok_all)})

    ok = True
    worst = 0.0
    rng = np.random.default_rng(1234)
    for seed in range(n):
        mask = rng.uniform(0.0, 1.0, 8)
        rep = theory.verify_fsk_real_mask(seed, mask)
        worst = max(worst, abs(rep.lhs))
        ok &= rep.passed
    report["groups"].append({"name": "FSK real-mask projection", "seeds": n,
                             "worst_abs": worst, "passed": bool(ok)})
    ok_all &= ok

    ok = True
    worst = 0.0
    for seed in range(n):
        mask = rng.uniform(0.0, 1.0, 8) + 1j * rng.uniform(-0.5, 0.5, 8)
        v1, v2 = theory.verify_fsk_complex_mask_flip(seed, mask)
        err = abs(v1 + v2)
        scale = max(abs(v1), abs(v2), 1e-30)
        worst = max(worst, err / scale)
        ok &= err <= 1e-9 * scale
    report["groups"].append({"name": "complex-mask sign flip", "seeds": n,
                             "worst_rel_asym": worst, "passed": bool(ok)})
    ok_all &= ok

    rows = theory.advance_prediction_study(theory.PulseFamily(),
                                           np.arange(1, 11) * 1e-9)
    worst = max(r["rel_err"] for r in rows)
    ok = worst <= 0.2
    report["groups"].append({"name": "advance predictor (<= 10 ns)",
                             "worst_rel_err": worst, "passed": bool(ok)})
    ok_all &= ok

    for grp in report["groups"]:
        status = "PASS" if grp["passed"] else "FAIL"
        detail = {k: v for k, v in grp.items() if k not in ("name", "passed")}
        print(f"{status}  {grp['name']}  {detail}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return 0 if ok_all else 3


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
