"""toasim: simulator and analysis toolkit for distance-decreasing attacks on
correlation-based time-of-arrival estimation in narrowband ranging."""

from .sigproc import (C_LIGHT, Correlation, LinearFilter, Signal, add_awgn,
                      apply_filter, butterworth_bandpass, crlb_toa_std,
                      cross_correlate, frequency_shift, group_delay,
                      resample, rms_bandwidth)
from .signal_io import read_signal, write_signal, write_signal_csv
from .btcs import (LE1M, LE2M, CsSyncConfig, CsSyncPacket, PhyMode,
                   build_cs_sync, differential_template, gfsk_demodulate,
                   gfsk_modulate, packet_descriptor, phy_from_name,
                   sounding_sequence)
from .attack import (MaskSpec, NgdFilterSpec, apply_mask, apply_ngd,
                     build_mask, ngd_group_delay, ngd_response,
                     perturbation_projection, phase_offset_sweep,
                     predict_advance)
from .receiver import (NadmReport, ToaEstimate, check_bits, differential_xcorr,
                       estimate_toa, nadm_dft, nadm_ncc, nadm_pmse)
from .theory import (DerivationReport, PulseFamily, advance_prediction_study,
                     random_perturbation_pair, tof_twr,
                     verify_fsk_complex_mask_flip, verify_fsk_real_mask,
                     verify_peak_derivative_identity)
from .harness import (ExperimentConfig, ExperimentResult, MetricStudyResult,
                      RfChainConfig, emit_plots, load_experiment_config,
                      receive_packet, run_chain, run_experiment,
                      run_metric_study)

__version__ = "0.1.0"
