"""Experiment harness: RF chain simulation, batch runs, persistence, reports.

The chain models a low-IF receiver front end.  Packets are zero-padded,
upsampled to the analog rate, mixed to the IF, optionally attacked, bandpass
filtered, mixed back down, and decimated to the ADC rate.  A ground-truth
copy of every packet traverses the identical chain minus the attack block,
sharing the noise realization, so attacked-minus-truth differences isolate
the attack.
"""
from __future__ import annotations

import configparser
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import attack as attack_mod
from . import btcs, receiver
from .sigproc import (C_LIGHT, Signal, add_awgn, apply_filter,
                      butterworth_bandpass, frequency_shift, resample)

OUTPUT_ROOT_ENV = "TOASIM_OUT"


class ConfigError(ValueError):
    """Bad user-supplied configuration (CLI exit code 1)."""


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "toasim_out"))


@dataclass(frozen=True)
class RfChainConfig:
    """Receiver front-end model.  bandpass_order 0 bypasses the filter."""

    if_freq_hz: float = 4.77e6
    analog_rate_hz: float = 80e6
    adc_rate_hz: float = 8e6
    bandpass_order: int = 4
    bandpass_half_width_hz: float = 1.5e6
    pad_symbols: int = 16

    def __post_init__(self):
        if self.adc_rate_hz <= 0 or self.analog_rate_hz <= self.adc_rate_hz:
            raise ConfigError("need analog_rate_hz > adc_rate_hz > 0")
        if self.if_freq_hz <= 0:
            raise ConfigError("if_freq_hz must be positive")
        if self.if_freq_hz + self.bandpass_half_width_hz >= self.analog_rate_hz / 2:
            raise ConfigError("bandpass extends past the analog Nyquist band")
        if self.bandpass_half_width_hz >= self.if_freq_hz:
            raise ConfigError("bandpass half width must stay below the IF")
        if self.pad_symbols < 4:
            raise ConfigError("pad_symbols must be >= 4 to absorb filter tails")

    def oversampling(self, phy: btcs.PhyMode) -> int:
        ratio = self.adc_rate_hz / phy.symbol_rate
        n = int(round(ratio))
        if abs(ratio - n) > 1e-9 or n < 2:
            raise ConfigError(f"adc_rate_hz must be an integer multiple (>= 2) of "
                              f"the {phy.name} symbol rate")
        return n

    def bandpass(self):
        if self.bandpass_order == 0:
            return None
        return butterworth_bandpass(self.bandpass_order,
                                    self.if_freq_hz - self.bandpass_half_width_hz,
                                    self.if_freq_hz + self.bandpass_half_width_hz,
                                    self.analog_rate_hz)


@dataclass(frozen=True)
class ChainResult:
    attacked: Signal
    ground_truth: Signal
    extent: tuple[int, int]     # packet sample range at the ADC rate


def _shift_attack_to_chain(spec, rf: RfChainConfig, pad_time: float):
    """Re-center an attack spec onto the chain's IF and padded time axis."""
    if isinstance(spec, attack_mod.MaskSpec):
        return dataclasses.replace(spec, offset_s=spec.offset_s + pad_time)
    if isinstance(spec, attack_mod.NgdFilterSpec):
        return dataclasses.replace(
            spec, center_freq_hz=rf.if_freq_hz + spec.center_freq_hz)
    raise ConfigError(f"unsupported attack spec {type(spec).__name__}")


def run_chain(packet: btcs.CsSyncPacket, rf: RfChainConfig,
              attack_spec=None, snr_db: float | None = None,
              noise_seed: int = 0, channel_delay_s: float = 0.0) -> ChainResult:
    """Send one packet through the chain, with and without the attack block.

    The packet waveform must already sit at the ADC rate.  Noise (if any) is
    injected at the analog rate ahead of the attack point, so both paths see
    the same realization.  With no attack the two outputs are the same
    object, bit for bit.  channel_delay_s moves the packet's time origin
    rigidly; the attack stays packet-synchronous, so the attacked-minus-truth
    ToA difference does not depend on it.
    """
    wave = packet.waveform
    if abs(wave.rate - rf.adc_rate_hz) > 1e-6 * rf.adc_rate_hz:
        raise ConfigError("packet waveform rate must equal the ADC rate; "
                          "build packets with oversampling = adc_rate / symbol_rate")
    pad = rf.pad_symbols * packet.oversampling
    pad_time = pad / wave.rate
    padded = Signal(np.concatenate([np.zeros(pad, dtype=np.complex128),
                                    wave.samples,
                                    np.zeros(pad, dtype=np.complex128)]),
                    wave.rate, channel_delay_s - pad_time)
    analog = resample(padded, rf.analog_rate_hz)
    up = int(round(rf.analog_rate_hz / rf.adc_rate_hz))
    at_if = frequency_shift(analog, rf.if_freq_hz)
    extent_analog = (pad * up, (pad + len(wave)) * up)
    at_if = add_awgn(at_if, snr_db, noise_seed, power_extent=extent_analog)

    bp = rf.bandpass()

    def back_end(sig: Signal) -> Signal:
        if bp is not None:
            sig = apply_filter(sig, bp)
        sig = frequency_shift(sig, -rf.if_freq_hz)
        return resample(sig, rf.adc_rate_hz)

    ground_truth = back_end(at_if)
    if attack_spec is None:
        attacked = ground_truth
    else:
        spec = _shift_attack_to_chain(attack_spec, rf, pad_time)
        if isinstance(spec, attack_mod.MaskSpec):
            hit = attack_mod.apply_mask(at_if, spec)
        else:
            hit = attack_mod.apply_ngd(at_if, spec)
        attacked = back_end(hit)
    return ChainResult(attacked=attacked, ground_truth=ground_truth,
                       extent=(pad, pad + len(wave)))


def receive_packet(received: Signal, packet: btcs.CsSyncPacket):
    """Receiver pipeline: differential ToA, bit check, NADM metrics."""
    phy = packet.config.phy
    template = packet.waveform
    corr = receiver.differential_xcorr(received, template, 1.0 / phy.symbol_rate)
    est = receiver.estimate_toa(corr)
    bits_ok = receiver.check_bits(received, packet.bits, phy, est)
    est = receiver.mark_validity(est, bits_ok)
    try:
        pmse = receiver.nadm_pmse(received, template, est)
    except ValueError:
        # envelope gaps leave the phase undefined over too much of the packet
        pmse = math.nan
    report = receiver.NadmReport(
        ncc=receiver.nadm_ncc(received, template, est),
        pmse=pmse,
        dft=receiver.nadm_dft(received, est, phy.symbol_rate,
                              n_samples=len(template)))
    return est, report


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    n_packets: int
    phy: str = "LE1M"
    payload_kind: str = "random"
    payload_bits: int = 128
    n_markers: int = 3
    attack: object | None = None          # MaskSpec | NgdFilterSpec | None
    snr_db: float | None = None
    snr_db_range: tuple[float, float] | None = None
    master_seed: int = 0

    def __post_init__(self):
        if not self.id or any(c in self.id for c in "/\\ \t"):
            raise ConfigError("experiment id must be non-empty, no slashes or spaces")
        if self.n_packets < 1:
            raise ConfigError("n_packets must be >= 1")
        if self.snr_db is not None and self.snr_db_range is not None:
            raise ConfigError("give snr_db or snr_db_range, not both")
        if self.snr_db_range is not None:
            lo, hi = self.snr_db_range
            if not lo < hi:
                raise ConfigError("snr_db_range must be (low, high) with low < high")
        try:
            btcs.phy_from_name(self.phy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def packet_snrs(self) -> list[float | None]:
        if self.snr_db_range is not None:
            lo, hi = self.snr_db_range
            return [float(v) for v in np.linspace(lo, hi, self.n_packets)]
        return [self.snr_db] * self.n_packets


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rf: RfChainConfig
    records: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records])


def _packet_seeds(master_seed: int, n: int) -> list[tuple[int, int]]:
    children = np.random.SeedSequence(master_seed).spawn(n)
    out = []
    for child in children:
        st = child.generate_state(2, np.uint64)
        out.append((int(st[0]), int(st[1])))
    return out


def attack_to_dict(spec) -> dict | None:
    if spec is None:
        return None
    if isinstance(spec, attack_mod.NgdFilterSpec):
        return {"type": "ngd", "delta_t_s": spec.delta_t_s,
                "center_freq_hz": spec.center_freq_hz,
                "realization": spec.realization}
    if isinstance(spec, attack_mod.MaskSpec):
        d = {"type": "mask", "kind": spec.kind, "period_s": spec.period_s,
             "offset_s": spec.offset_s, "complex_allowed": spec.complex_allowed}
        if spec.kind == "truncation":
            d.update(duty=spec.duty, edge_s=spec.edge_s)
        else:
            d.update(alpha=spec.alpha,
                     pulse_derivative_re=list(np.real(spec.pulse_derivative)),
                     pulse_derivative_im=list(np.imag(spec.pulse_derivative)))
        return d
    raise ConfigError(f"unsupported attack spec {type(spec).__name__}")


def _as_bool(v) -> bool:
    if isinstance(v, str):
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {v!r}")
    return bool(v)


def attack_from_dict(d: dict | None):
    if d is None:
        return None
    try:
        kind = d["type"]
        if kind == "ngd":
            return attack_mod.NgdFilterSpec(
                delta_t_s=float(d["delta_t_s"]),
                center_freq_hz=float(d.get("center_freq_hz", 0.0)),
                realization=str(d.get("realization", "frequency_domain")))
        if kind == "mask":
            mk = d.get("kind", "truncation")
            common = dict(period_s=float(d["period_s"]),
                          offset_s=float(d.get("offset_s", 0.0)),
                          complex_allowed=_as_bool(d.get("complex_allowed", False)))
            if mk == "truncation":
                return attack_mod.MaskSpec(kind=mk, duty=float(d.get("duty", 0.5)),
                                           edge_s=float(d.get("edge_s", 0.0)), **common)
            pd = np.asarray(d["pulse_derivative_re"], dtype=np.float64)
            if "pulse_derivative_im" in d:
                pd = pd + 1j * np.asarray(d["pulse_derivative_im"], dtype=np.float64)
            return attack_mod.MaskSpec(kind=mk, alpha=float(d.get("alpha", 0.3)),
                                       pulse_derivative=pd, **common)
        raise ConfigError(f"unknown attack type {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad attack description: {exc}") from exc


def _run_one_packet(cfg: ExperimentConfig, rf: RfChainConfig, idx: int,
                    content_seed: int, noise_seed: int, snr_db):
    phy = btcs.phy_from_name(cfg.phy)
    pkt_cfg = btcs.CsSyncConfig(phy=phy, payload_kind=cfg.payload_kind,
                                payload_bits=cfg.payload_bits,
                                n_markers=cfg.n_markers, seed=content_seed)
    packet = btcs.build_cs_sync(pkt_cfg, oversampling=rf.oversampling(phy))
    chain = run_chain(packet, rf, attack_spec=cfg.attack, snr_db=snr_db,
                      noise_seed=noise_seed)
    est_att, report = receive_packet(chain.attacked, packet)
    if chain.attacked is chain.ground_truth:
        est_gt = est_att
    else:
        est_gt, _ = receive_packet(chain.ground_truth, packet)
    adv_s = est_att.toa_seconds - est_gt.toa_seconds
    return {
        "packet_id": idx,
        "config": {
            "experiment": cfg.id,
            "phy": phy.name,
            "payload_kind": cfg.payload_kind,
            "n_bits": packet.n_bits,
            "seed": content_seed,
            "noise_seed": noise_seed,
            "snr_db": None if snr_db is None else float(snr_db),
            "attack": attack_to_dict(cfg.attack),
        },
        "toa_s": est_att.toa_seconds,
        "toa_gt_s": est_gt.toa_seconds,
        "toa_advance_s": adv_s,
        "toa_advance_m": adv_s * C_LIGHT,
        "ncc": report.ncc,
        "pmse": None if math.isnan(report.pmse) else report.pmse,
        "dft": report.dft,
        "bits_ok": est_att.valid,
    }


def _metric_values(records: list[dict], key: str) -> np.ndarray:
    """Metric column as float64, undefined entries (JSON null) as NaN."""
    return np.array([math.nan if r[key] is None else r[key] for r in records],
                    dtype=np.float64)


def _summarize(cfg: ExperimentConfig, rf: RfChainConfig, records: list[dict]) -> dict:
    adv_m = np.array([r["toa_advance_m"] for r in records])
    out = {
        "experiment": cfg.id,
        "n_packets": len(records),
        "n_bits_ok": int(sum(r["bits_ok"] for r in records)),
        "mean_advance_m": float(np.mean(adv_m)),
        "std_advance_m": float(np.std(adv_m, ddof=1)) if len(records) > 1 else 0.0,
        "mean_advance_ns": float(np.mean(adv_m) / C_LIGHT * 1e9),
        "std_advance_ns": (float(np.std(adv_m, ddof=1) / C_LIGHT * 1e9)
                           if len(records) > 1 else 0.0),
        "attack": attack_to_dict(cfg.attack),
        "rf": dataclasses.asdict(rf),
        "metrics": {},
    }
    for key in ("ncc", "pmse", "dft"):
        vals = _metric_values(records, key)
        defined = vals[np.isfinite(vals)]
        if defined.size:
            out["metrics"][key] = {"min": float(defined.min()),
                                   "max": float(defined.max()),
                                   "mean": float(defined.mean()),
                                   "n_defined": int(defined.size)}
        else:
            out["metrics"][key] = {"min": None, "max": None, "mean": None,
                                   "n_defined": 0}
    return out


def run_experiment(cfg: ExperimentConfig, rf: RfChainConfig | None = None,
                   out_dir=None) -> ExperimentResult:
    """Run every packet of one experiment configuration.

    Per-packet seeds derive from master_seed, so reruns reproduce records
    exactly.  Packets whose bit check fails stay in the record set with
    bits_ok false.  With out_dir given, records stream to
    <out_dir>/<id>/records.jsonl as they complete and a summary.json follows.
    """
    rf = rf or RfChainConfig()
    seeds = _packet_seeds(cfg.master_seed, cfg.n_packets)
    snrs = cfg.packet_snrs()
    result = ExperimentResult(config=cfg, rf=rf)
    sink = None
    try:
        if out_dir is not None:
            dest = Path(out_dir) / cfg.id
            dest.mkdir(parents=True, exist_ok=True)
            sink = (dest / "records.jsonl").open("w")
        for i, ((content_seed, noise_seed), snr) in enumerate(zip(seeds, snrs)):
            rec = _run_one_packet(cfg, rf, i, content_seed, noise_seed, snr)
            result.records.append(rec)
            if sink is not None:
                sink.write(json.dumps(rec, sort_keys=True) + "\n")
                sink.flush()
    finally:
        if sink is not None:
            sink.close()
    result.summary = _summarize(cfg, rf, result.records)
    if out_dir is not None:
        (Path(out_dir) / cfg.id / "summary.json").write_text(
            json.dumps(result.summary, sort_keys=True, indent=2) + "\n")
    return result


@dataclass
class MetricStudyResult:
    results: list[ExperimentResult]
    envelope: dict               # metric -> (min, max) over the legit pool
    overlaps: dict               # config id -> metric -> fraction inside envelope
    table: list[dict]


def run_metric_study(cfgs: list[ExperimentConfig], rf: RfChainConfig | None = None,
                     out_dir=None, legit_ids: list[str] | None = None) -> MetricStudyResult:
    """Compare metric distributions of attacked configs against a legit pool.

    The pool defaults to every config without an attack block.  For each
    remaining config the overlap statistic is the fraction of its per-packet
    metric values inside the pool's [min, max] envelope.
    """
    if not cfgs:
        raise ConfigError("metric study needs at least one configuration")
    ids = [c.id for c in cfgs]
    if len(set(ids)) != len(ids):
        raise ConfigError("experiment ids must be unique")
    if legit_ids is None:
        legit_ids = [c.id for c in cfgs if c.attack is None]
    if not legit_ids:
        raise ConfigError("metric study needs at least one legitimate configuration")
    unknown = set(legit_ids) - set(ids)
    if unknown:
        raise ConfigError(f"legit_ids not among configs: {sorted(unknown)}")
    results = [run_experiment(c, rf, out_dir=out_dir) for c in cfgs]
    by_id = {r.config.id: r for r in results}
    envelope = {}
    for key in ("ncc", "pmse", "dft"):
        pool = np.concatenate([_metric_values(by_id[i].records, key)
                               for i in legit_ids])
        pool = pool[np.isfinite(pool)]
        if pool.size == 0:
            raise ConfigError(f"legit pool has no defined {key} values")
        envelope[key] = (float(pool.min()), float(pool.max()))
    overlaps = {}
    table = []
    for res in results:
        row = {"experiment": res.config.id,
               "role": "legit" if res.config.id in legit_ids else "probe",
               "n_packets": len(res.records)}
        if res.config.id not in legit_ids:
            overlaps[res.config.id] = {}
        for key in ("ncc", "pmse", "dft"):
            vals = _metric_values(res.records, key)
            defined = vals[np.isfinite(vals)]
            row[f"{key}_min"] = float(defined.min()) if defined.size else ""
            row[f"{key}_max"] = float(defined.max()) if defined.size else ""
            row[f"{key}_mean"] = float(defined.mean()) if defined.size else ""
            if res.config.id not in legit_ids:
                # an undefined metric value is never inside the envelope
                lo, hi = envelope[key]
                frac = float(np.mean((vals >= lo) & (vals <= hi)))
                overlaps[res.config.id][key] = frac
                row[f"{key}_overlap"] = frac
        table.append(row)
    study = MetricStudyResult(results=results, envelope=envelope,
                              overlaps=overlaps, table=table)
    if out_dir is not None:
        _write_table_csv(Path(out_dir) / "metric_study.csv", study.table)
    return study


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_table_csv(path: Path, rows: list[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    with path.open("w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(k, "")) for k in cols) + "\n")
    return path


def rerun_exemplar(result: ExperimentResult, packet_id: int = 0):
    """Rebuild one packet of a finished experiment and return its correlations."""
    rec = next((r for r in result.records if r["packet_id"] == packet_id), None)
    if rec is None:
        raise ConfigError(f"no record for packet_id {packet_id}")
    cfg, rf = result.config, result.rf
    phy = btcs.phy_from_name(cfg.phy)
    pkt_cfg = btcs.CsSyncConfig(phy=phy, payload_kind=cfg.payload_kind,
                                payload_bits=cfg.payload_bits,
                                n_markers=cfg.n_markers,
                                seed=rec["config"]["seed"])
    packet = btcs.build_cs_sync(pkt_cfg, oversampling=rf.oversampling(phy))
    chain = run_chain(packet, rf, attack_spec=cfg.attack,
                      snr_db=rec["config"]["snr_db"],
                      noise_seed=rec["config"]["noise_seed"])
    t_sym = 1.0 / phy.symbol_rate
    corr_att = receiver.differential_xcorr(chain.attacked, packet.waveform, t_sym)
    corr_gt = receiver.differential_xcorr(chain.ground_truth, packet.waveform, t_sym)
    return corr_att, corr_gt


def emit_plots(result: ExperimentResult, out_dir) -> list[Path]:
    """Write plot-ready CSV data and rendered figures for one experiment.

    CSV output is deterministic byte for byte across reruns of the same
    experiment.  Figures land next to the CSVs.
    """
    if not result.records:
        raise ConfigError("cannot plot an empty result")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    adv = result.column("toa_advance_m")
    counts, edges = np.histogram(adv, bins=25)
    rows = [{"bin_left_m": float(edges[i]), "bin_right_m": float(edges[i + 1]),
             "count": int(counts[i])} for i in range(counts.size)]
    paths.append(_write_table_csv(out / "advance_hist.csv", rows))

    rows = [{"packet_id": r["packet_id"],
             "snr_db": "" if r["config"]["snr_db"] is None else r["config"]["snr_db"],
             "toa_advance_m": r["toa_advance_m"], "ncc": r["ncc"],
             "pmse": "" if r["pmse"] is None else r["pmse"],
             "dft": r["dft"], "bits_ok": r["bits_ok"]}
            for r in result.records]
    paths.append(_write_table_csv(out / "metrics.csv", rows))

    corr_att, corr_gt = rerun_exemplar(result)
    lags = corr_att.lags()
    rows = [{"lag_us": float(lags[i] * 1e6),
             "attacked_abs": float(np.abs(corr_att.values[i])),
             "ground_truth_abs": float(np.abs(corr_gt.values[i]))}
            for i in range(len(lags))]
    paths.append(_write_table_csv(out / "correlation_trace.csv", rows))

    from . import plots
    paths.extend(plots.render_experiment(result, corr_att, corr_gt, out))
    return paths


# ---------------------------------------------------------------------------
# plain-text configuration files (INI sections, dotted names nest)

_REQUIRED = object()


def _get_typed(section, key, cast, default=_REQUIRED):
    if key not in section:
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return cast(section[key])
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from exc


def load_experiment_config(path):
    """Parse an experiment INI file.

    Returns (ExperimentConfig, RfChainConfig, checks dict).  Sections:
    [experiment] with id/n_packets/phy/payload/..., optional
    [experiment.attack], optional [rf] overrides, optional [check] bounds.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if "experiment" not in parser:
        raise ConfigError("config needs an [experiment] section")
    exp = parser["experiment"]

    attack_spec = None
    if "experiment.attack" in parser:
        attack_spec = attack_from_dict(dict(parser["experiment.attack"]))

    snr_db = _get_typed(exp, "snr_db", float) if "snr_db" in exp else None
    snr_range = None
    if "snr_db_lo" in exp or "snr_db_hi" in exp:
        snr_range = (_get_typed(exp, "snr_db_lo", float),
                     _get_typed(exp, "snr_db_hi", float))
    cfg = ExperimentConfig(
        id=_get_typed(exp, "id", str),
        n_packets=_get_typed(exp, "n_packets", int),
        phy=_get_typed(exp, "phy", str, "LE1M"),
        payload_kind=_get_typed(exp, "payload", str, "random"),
        payload_bits=_get_typed(exp, "payload_bits", int, 128),
        n_markers=_get_typed(exp, "n_markers", int, 3),
        attack=attack_spec,
        snr_db=snr_db,
        snr_db_range=snr_range,
        master_seed=_get_typed(exp, "master_seed", int, 0),
    )
    rf_kwargs = {}
    if "rf" in parser:
        sec = parser["rf"]
        for key, cast in (("if_freq_hz", float), ("analog_rate_hz", float),
                          ("adc_rate_hz", float), ("bandpass_order", int),
                          ("bandpass_half_width_hz", float), ("pad_symbols", int)):
            if key in sec:
                rf_kwargs[key] = _get_typed(sec, key, cast)
    rf = RfChainConfig(**rf_kwargs)
    checks = {}
    if "check" in parser:
        for key in parser["check"]:
            checks[key] = _get_typed(parser["check"], key, float)
    return cfg, rf, checks


CHECK_KEYS = ("mean_advance_m_min", "mean_advance_m_max",
              "std_advance_m_max", "min_bits_ok_fraction")


def check_result(result: ExperimentResult, checks: dict) -> list[str]:
    """Evaluate [check] bounds against a summary; returns violation messages."""
    unknown = set(checks) - set(CHECK_KEYS)
    if unknown:
        raise ConfigError(f"unknown check keys: {sorted(unknown)}")
    s = result.summary
    failures = []
    if "mean_advance_m_min" in checks and s["mean_advance_m"] < checks["mean_advance_m_min"]:
        failures.append(f"mean advance {s['mean_advance_m']:.3f} m below "
                        f"{checks['mean_advance_m_min']} m")
    if "mean_advance_m_max" in checks and s["mean_advance_m"] > checks["mean_advance_m_max"]:
        failures.append(f"mean advance {s['mean_advance_m']:.3f} m above "
                        f"{checks['mean_advance_m_max']} m")
    if "std_advance_m_max" in checks and s["std_advance_m"] > checks["std_advance_m_max"]:
        failures.append(f"advance std {s['std_advance_m']:.3f} m above "
                        f"{checks['std_advance_m_max']} m")
    if "min_bits_ok_fraction" in checks:
        frac = s["n_bits_ok"] / max(s["n_packets"], 1)
        if frac < checks["min_bits_ok_fraction"]:
            failures.append(f"bits_ok fraction {frac:.2f} below "
                            f"{checks['min_bits_ok_fraction']}")
    return failures
