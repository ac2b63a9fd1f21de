"""Chain simulation, experiment batches, persistence, studies, INI configs."""
import json
import math

import numpy as np
import pytest

from toasim import btcs
from toasim.attack import MaskSpec, NgdFilterSpec, apply_mask
from toasim.harness import (CHECK_KEYS, ConfigError, ExperimentConfig,
                            RfChainConfig, attack_from_dict, attack_to_dict,
                            check_result, emit_plots, load_experiment_config,
                            receive_packet, rerun_exemplar, run_chain,
                            run_experiment, run_metric_study)
from toasim.sigproc import C_LIGHT

RF = RfChainConfig()
NGD62 = NgdFilterSpec(delta_t_s=62e-9)
HALF_MASK = MaskSpec(kind="truncation", period_s=1e-6, duty=0.5)


def make_packet(phy=btcs.LE1M, seed=0, rf=RF):
    cfg = btcs.CsSyncConfig(phy=phy, payload_kind="random", seed=seed)
    return btcs.build_cs_sync(cfg, oversampling=rf.oversampling(phy))


@pytest.fixture(scope="module")
def ngd_result():
    cfg = ExperimentConfig(id="ngd62", n_packets=4, snr_db=25.0, attack=NGD62,
                           master_seed=3)
    return run_experiment(cfg, RF)


class TestRfChainConfig:
    def test_oversampling_per_phy(self):
        assert RF.oversampling(btcs.LE1M) == 8
        assert RF.oversampling(btcs.LE2M) == 4

    def test_non_integer_oversampling_rejected(self):
        rf = RfChainConfig(adc_rate_hz=5e6)
        with pytest.raises(ConfigError, match="integer multiple"):
            rf.oversampling(btcs.LE2M)

    @pytest.mark.parametrize("kwargs,msg", [
        (dict(analog_rate_hz=8e6, adc_rate_hz=8e6), "analog_rate_hz"),
        (dict(if_freq_hz=0.0), "if_freq_hz"),
        (dict(if_freq_hz=39e6), "Nyquist"),
        (dict(if_freq_hz=1e6), "half width"),
        (dict(pad_symbols=3), "pad_symbols"),
    ])
    def test_rejects(self, kwargs, msg):
        with pytest.raises(ConfigError, match=msg):
            RfChainConfig(**kwargs)

    def test_bandpass_bypass(self):
        assert RfChainConfig(bandpass_order=0).bandpass() is None
        assert RF.bandpass() is not None


class TestRunChain:
    def test_waveform_rate_must_match_adc(self):
        pkt = btcs.build_cs_sync(btcs.CsSyncConfig(seed=0), oversampling=4)
        with pytest.raises(ConfigError, match="ADC rate"):
            run_chain(pkt, RF)

    def test_no_attack_shares_the_output(self):
        chain = run_chain(make_packet(), RF)
        assert chain.attacked is chain.ground_truth

    def test_extent_brackets_the_packet(self):
        pkt = make_packet()
        chain = run_chain(pkt, RF)
        pad = RF.pad_symbols * pkt.oversampling
        assert chain.extent == (pad, pad + len(pkt.waveform))

    @pytest.mark.parametrize("phy", [btcs.LE1M, btcs.LE2M])
    def test_bypass_chain_is_transparent(self, phy):
        # without the bandpass the up/mix/down/decimate path moves the ToA by
        # far less than a thousandth of an ADC sample
        rf = RfChainConfig(bandpass_order=0)
        pkt = make_packet(phy=phy, rf=rf)
        est, _ = receive_packet(run_chain(pkt, rf).ground_truth, pkt)
        assert abs(est.toa_seconds * rf.adc_rate_hz) < 1e-3

    def test_bandpass_group_delay_shows_in_absolute_toa(self):
        pkt = make_packet()
        est, _ = receive_packet(run_chain(pkt, RF).ground_truth, pkt)
        assert 0.8 < est.toa_seconds * RF.adc_rate_hz < 1.6
        assert est.valid

    def test_ngd_advances_the_toa(self):
        pkt = make_packet()
        chain = run_chain(pkt, RF, attack_spec=NGD62)
        ea, _ = receive_packet(chain.attacked, pkt)
        eg, _ = receive_packet(chain.ground_truth, pkt)
        assert 40e-9 < eg.toa_seconds - ea.toa_seconds < 70e-9
        assert ea.valid and eg.valid

    def test_symbol_mask_leaves_toa_but_lights_dft(self):
        pkt = make_packet()
        chain = run_chain(pkt, RF, attack_spec=HALF_MASK)
        ea, ra = receive_packet(chain.attacked, pkt)
        eg, rg = receive_packet(chain.ground_truth, pkt)
        assert abs(ea.toa_seconds - eg.toa_seconds) < 25e-9
        assert ra.dft > 10 * rg.dft
        assert ra.dft > 0.01

    @pytest.mark.parametrize("attack", [NGD62, HALF_MASK])
    def test_channel_delay_moves_rigidly(self, attack):
        pkt = make_packet()
        c0 = run_chain(pkt, RF, attack_spec=attack)
        cd = run_chain(pkt, RF, attack_spec=attack, channel_delay_s=200e-9)
        a0, _ = receive_packet(c0.attacked, pkt)
        g0, _ = receive_packet(c0.ground_truth, pkt)
        ad, _ = receive_packet(cd.attacked, pkt)
        gd, _ = receive_packet(cd.ground_truth, pkt)
        assert abs(gd.toa_seconds - g0.toa_seconds - 200e-9) < 1e-15
        adv0 = a0.toa_seconds - g0.toa_seconds
        advd = ad.toa_seconds - gd.toa_seconds
        assert abs(advd - adv0) < 1e-15

    def test_noise_seed_reproducible(self):
        pkt = make_packet()
        a = run_chain(pkt, RF, snr_db=15.0, noise_seed=5)
        b = run_chain(pkt, RF, snr_db=15.0, noise_seed=5)
        c = run_chain(pkt, RF, snr_db=15.0, noise_seed=6)
        np.testing.assert_array_equal(a.ground_truth.samples,
                                      b.ground_truth.samples)
        assert not np.array_equal(a.ground_truth.samples,
                                  c.ground_truth.samples)


class TestReceivePacket:
    def test_clean_chain_output(self):
        pkt = make_packet()
        est, rep = receive_packet(run_chain(pkt, RF).ground_truth, pkt)
        assert est.valid
        assert rep.ncc > 0.999
        assert rep.dft < 1e-4

    def test_bare_waveform_fails_closed(self):
        # the bit check wants one symbol beyond the packet; an unpadded
        # waveform cannot supply it, so validity drops rather than guesses
        pkt = make_packet()
        est, _ = receive_packet(pkt.waveform, pkt)
        assert est.valid is False
        assert est.toa_seconds == 0.0

    def test_blanked_packet_has_undefined_pmse(self):
        pkt = make_packet()
        est, rep = receive_packet(apply_mask(pkt.waveform, HALF_MASK), pkt)
        assert math.isnan(rep.pmse)
        assert est.valid is False


class TestExperimentConfig:
    def test_packet_snrs_scalar_and_range(self):
        cfg = ExperimentConfig(id="a", n_packets=3, snr_db=12.0)
        assert cfg.packet_snrs() == [12.0, 12.0, 12.0]
        cfg = ExperimentConfig(id="a", n_packets=3, snr_db_range=(0.0, 30.0))
        assert cfg.packet_snrs() == [0.0, 15.0, 30.0]
        assert ExperimentConfig(id="a", n_packets=2).packet_snrs() == [None, None]

    @pytest.mark.parametrize("kwargs", [
        dict(id="", n_packets=1),
        dict(id="has space", n_packets=1),
        dict(id="bad/slash", n_packets=1),
        dict(id="a", n_packets=0),
        dict(id="a", n_packets=1, snr_db=10.0, snr_db_range=(0.0, 20.0)),
        dict(id="a", n_packets=1, snr_db_range=(20.0, 20.0)),
        dict(id="a", n_packets=1, phy="LE4M"),
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kwargs)


class TestAttackDicts:
    @pytest.mark.parametrize("spec", [
        None,
        NgdFilterSpec(delta_t_s=62e-9, center_freq_hz=1e5,
                      realization="rational_discrete"),
        MaskSpec(kind="truncation", period_s=1e-6, duty=0.7, offset_s=2e-7,
                 edge_s=5e-8),
        MaskSpec(kind="derivative_exponential", period_s=2e-6,
                 pulse_derivative=np.array([0.1, -0.2j, 0.3, 0.0]),
                 alpha=0.4, complex_allowed=True),
    ])
    def test_round_trip(self, spec):
        back = attack_from_dict(attack_to_dict(spec))
        if spec is None:
            assert back is None
        elif isinstance(spec, MaskSpec) and spec.kind == "derivative_exponential":
            np.testing.assert_array_equal(back.pulse_derivative,
                                          spec.pulse_derivative)
            assert (back.period_s, back.alpha) == (spec.period_s, spec.alpha)
        else:
            assert back == spec

    def test_dict_survives_json(self):
        d = attack_to_dict(NGD62)
        assert attack_from_dict(json.loads(json.dumps(d))) == NGD62

    @pytest.mark.parametrize("d", [
        {"type": "emp"},
        {"type": "ngd"},
        {"type": "mask", "kind": "truncation"},
        {"type": "mask", "kind": "truncation", "period_s": "wide"},
        {"type": "mask", "kind": "truncation", "period_s": 1e-6,
         "complex_allowed": "maybe"},
    ])
    def test_bad_descriptions(self, d):
        with pytest.raises(ConfigError):
            attack_from_dict(d)


class TestRunExperiment:
    def test_reruns_reproduce_records_exactly(self, ngd_result):
        again = run_experiment(ngd_result.config, RF)
        assert again.records == ngd_result.records
        assert again.summary == ngd_result.summary

    def test_summary_consistent_with_records(self, ngd_result):
        adv = ngd_result.column("toa_advance_m")
        s = ngd_result.summary
        assert s["n_packets"] == 4
        assert s["mean_advance_m"] == pytest.approx(np.mean(adv), rel=1e-12)
        assert s["std_advance_m"] == pytest.approx(np.std(adv, ddof=1), rel=1e-9)
        assert s["mean_advance_ns"] == pytest.approx(
            s["mean_advance_m"] / C_LIGHT * 1e9, rel=1e-12)
        assert s["n_bits_ok"] == 4

    def test_ngd_advance_magnitude(self, ngd_result):
        # 62 ns of requested advance lands near -17 m of measured range
        adv = ngd_result.column("toa_advance_m")
        assert np.all((-22.0 < adv) & (adv < -12.0))

    def test_streams_to_disk(self, tmp_path):
        cfg = ExperimentConfig(id="disk", n_packets=3, snr_db=20.0,
                               attack=NGD62, master_seed=1)
        res = run_experiment(cfg, RF, out_dir=tmp_path)
        lines = (tmp_path / "disk" / "records.jsonl").read_text().splitlines()
        assert [json.loads(line) for line in lines] == res.records
        stored = json.loads((tmp_path / "disk" / "summary.json").read_text())
        assert stored == res.summary

    def test_low_snr_fails_bits_but_keeps_records(self):
        res = run_experiment(ExperimentConfig(id="low", n_packets=3,
                                              snr_db=-12.0, master_seed=1), RF)
        assert len(res.records) == 3
        assert res.summary["n_bits_ok"] == 0
        assert all(r["bits_ok"] is False for r in res.records)

    def test_long_blanking_leaves_pmse_undefined(self):
        mask = MaskSpec(kind="truncation", period_s=40e-6, duty=0.5)
        res = run_experiment(ExperimentConfig(id="blank", n_packets=2,
                                              attack=mask, master_seed=2), RF)
        assert all(r["pmse"] is None for r in res.records)
        assert res.summary["metrics"]["pmse"]["n_defined"] == 0
        assert res.summary["metrics"]["pmse"]["mean"] is None
        # ncc stays defined throughout
        assert res.summary["metrics"]["ncc"]["n_defined"] == 2


@pytest.fixture(scope="module")
def study():
    legit = ExperimentConfig(id="pool", n_packets=8, snr_db=25.0,
                             master_seed=0)
    ngd = ExperimentConfig(id="ngd", n_packets=4, snr_db=25.0,
                           attack=NGD62, master_seed=7)
    mask = ExperimentConfig(id="mask", n_packets=4, snr_db=25.0,
                            attack=HALF_MASK, master_seed=8)
    return run_metric_study([legit, ngd, mask], RF)


class TestMetricStudy:
    def test_roles_and_overlap_keys(self, study):
        roles = {row["experiment"]: row["role"] for row in study.table}
        assert roles == {"pool": "legit", "ngd": "probe", "mask": "probe"}
        assert set(study.overlaps) == {"ngd", "mask"}

    def test_overlaps_are_fractions(self, study):
        for per_metric in study.overlaps.values():
            for v in per_metric.values():
                assert 0.0 <= v <= 1.0

    def test_blanking_dft_never_looks_legit(self, study):
        assert study.overlaps["mask"]["dft"] == 0.0

    def test_envelope_is_finite_and_ordered(self, study):
        for lo, hi in study.envelope.values():
            assert np.isfinite(lo) and np.isfinite(hi) and lo <= hi

    def test_explicit_legit_ids(self):
        a = ExperimentConfig(id="a", n_packets=4, snr_db=25.0, master_seed=0)
        b = ExperimentConfig(id="b", n_packets=4, snr_db=25.0, master_seed=9)
        study = run_metric_study([a, b], RF, legit_ids=["a"])
        assert set(study.overlaps) == {"b"}

    def test_config_errors(self):
        a = ExperimentConfig(id="a", n_packets=1, attack=NGD62)
        with pytest.raises(ConfigError, match="at least one config"):
            run_metric_study([], RF)
        with pytest.raises(ConfigError, match="unique"):
            run_metric_study([a, a], RF)
        with pytest.raises(ConfigError, match="legitimate"):
            run_metric_study([a], RF)
        b = ExperimentConfig(id="b", n_packets=1)
        with pytest.raises(ConfigError, match="not among"):
            run_metric_study([a, b], RF, legit_ids=["c"])


class TestEmitPlots:
    def test_files_and_determinism(self, ngd_result, tmp_path):
        first = emit_plots(ngd_result, tmp_path / "one")
        names = sorted(p.name for p in first)
        assert names == ["advance_hist.csv", "advance_hist.png",
                         "correlation_trace.csv", "correlation_trace.png",
                         "metrics.csv", "metrics.png"]
        for p in first:
            assert p.stat().st_size > 0
        second = emit_plots(ngd_result, tmp_path / "two")
        for a, b in zip(sorted(first), sorted(second)):
            if a.suffix == ".csv":
                assert a.read_bytes() == b.read_bytes()

    def test_empty_result_rejected(self, tmp_path):
        cfg = ExperimentConfig(id="none", n_packets=1)
        from toasim.harness import ExperimentResult
        empty = ExperimentResult(config=cfg, rf=RF)
        with pytest.raises(ConfigError, match="empty"):
            emit_plots(empty, tmp_path)


class TestRerunExemplar:
    def test_attacked_peak_sits_earlier(self, ngd_result):
        corr_att, corr_gt = rerun_exemplar(ngd_result)
        la = corr_att.lags()[np.argmax(np.abs(corr_att.values))]
        lg = corr_gt.lags()[np.argmax(np.abs(corr_gt.values))]
        assert la <= lg

    def test_unknown_packet_rejected(self, ngd_result):
        with pytest.raises(ConfigError, match="packet_id"):
            rerun_exemplar(ngd_result, packet_id=99)


class TestIniConfig:
    FULL = """
[experiment]
id = trial
n_packets = 5
phy = LE2M
payload = sounding
payload_bits = 96
n_markers = 2
snr_db = 18.5
master_seed = 42

[experiment.attack]
type = ngd
delta_t_s = 6.2e-8
realization = rational_discrete

[rf]
if_freq_hz = 5e6
bandpass_order = 0

[check]
mean_advance_m_min = -25
mean_advance_m_max = -10
"""

    def test_full_file(self, tmp_path):
        path = tmp_path / "trial.ini"
        path.write_text(self.FULL)
        cfg, rf, checks = load_experiment_config(path)
        assert cfg.id == "trial" and cfg.n_packets == 5
        assert cfg.phy == "LE2M" and cfg.payload_kind == "sounding"
        assert cfg.snr_db == 18.5 and cfg.master_seed == 42
        assert cfg.attack == NgdFilterSpec(delta_t_s=6.2e-8,
                                           realization="rational_discrete")
        assert rf.if_freq_hz == 5e6 and rf.bandpass_order == 0
        assert rf.adc_rate_hz == RF.adc_rate_hz
        assert checks == {"mean_advance_m_min": -25.0,
                          "mean_advance_m_max": -10.0}

    def test_snr_range_keys(self, tmp_path):
        path = tmp_path / "r.ini"
        path.write_text("[experiment]\nid = r\nn_packets = 3\n"
                        "snr_db_lo = 0\nsnr_db_hi = 30\n")
        cfg, _, _ = load_experiment_config(path)
        assert cfg.snr_db_range == (0.0, 30.0)

    def test_mask_attack_section(self, tmp_path):
        path = tmp_path / "m.ini"
        path.write_text("[experiment]\nid = m\nn_packets = 1\n\n"
                        "[experiment.attack]\ntype = mask\nkind = truncation\n"
                        "period_s = 1e-6\nduty = 0.75\n")
        cfg, _, _ = load_experiment_config(path)
        assert cfg.attack == MaskSpec(kind="truncation", period_s=1e-6,
                                      duty=0.75)

    @pytest.mark.parametrize("body,msg", [
        ("[rf]\nadc_rate_hz = 8e6\n", "experiment"),
        ("[experiment]\nn_packets = 1\n", "id"),
        ("[experiment]\nid = x\nn_packets = soon\n", "n_packets"),
        ("[experiment]\nid = x\nn_packets = 1\n\n"
         "[experiment.attack]\ntype = emp\n", "attack"),
    ])
    def test_bad_files(self, tmp_path, body, msg):
        path = tmp_path / "bad.ini"
        path.write_text(body)
        with pytest.raises(ConfigError, match=msg):
            load_experiment_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_experiment_config(tmp_path / "absent.ini")


class TestCheckResult:
    def test_passing_bounds(self, ngd_result):
        checks = {"mean_advance_m_min": -25.0, "mean_advance_m_max": -10.0,
                  "std_advance_m_max": 1.0, "min_bits_ok_fraction": 1.0}
        assert check_result(ngd_result, checks) == []

    def test_violations_reported(self, ngd_result):
        checks = {"mean_advance_m_min": 0.0, "std_advance_m_max": 0.0,
                  "min_bits_ok_fraction": 2.0}
        msgs = check_result(ngd_result, checks)
        assert len(msgs) == 3
        assert any("mean advance" in m for m in msgs)
        assert any("std" in m for m in msgs)
        assert any("bits_ok" in m for m in msgs)

    def test_unknown_key_rejected(self, ngd_result):
        with pytest.raises(ConfigError, match="unknown check"):
            check_result(ngd_result, {"max_regret": 1.0})

    def test_check_keys_frozen(self):
        assert set(CHECK_KEYS) == {"mean_advance_m_min", "mean_advance_m_max",
                                   "std_advance_m_max",
                                   "min_bits_ok_fraction"}
