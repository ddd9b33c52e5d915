"""Edge/cloud dispatch engine and trace-driven simulator for seq2seq workloads."""

from .models import (DeviceProfile, FilterRules, FitReport, LatencySample,
                     LengthModel, LengthPair, exec_time, fit_latency, fit_length,
                     fit_scores, predict_len, prefilter)
from .netsim import (BandwidthModel, RttTrace, TxEstimator, current_tx_estimate,
                     observe_roundtrip, payload_ms, realized_tx, rtt_at,
                     synth_trace)
from .policy import (Decision, PolicyConfig, PolicyKind, Target, naive_decide,
                     oracle_decide, predictive_decide, static_decide)
from .sim import (Report, RequestRecord, RunResult, SimConfig, compare_report,
                  oracle_from_records, percent_variation, run_simulation)
from .workload import (Corpus, DeviceOracle, Request, SynthSpec, load_corpus,
                       load_measurements, realize_latency, synth_corpus)

__all__ = [name for name in dir() if not name.startswith("_")]
