#!/usr/bin/env python3
"""Run the two-regime policy comparison on both shipped connection profiles.

Produces the per-profile percent-variation tables (each policy vs the two
static baselines and the oracle) and writes all artifacts under out/.
"""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from seqroute.models import DeviceProfile, LengthModel
from seqroute.netsim import BandwidthModel, TxEstimator, load_trace
from seqroute.policy import PolicyConfig, PolicyKind
from seqroute.sim import SimConfig, compare_report, save_records
from seqroute.workload import Corpus, DeviceOracle, Request

EDGE = DeviceProfile(alpha_n=0.1, alpha_m=2.0, beta=5, device_id="edge")
CLOUD = DeviceProfile(alpha_n=0.02, alpha_m=0.5, beta=2, device_id="cloud")
LM = LengthModel(gamma=0.9, delta=1)


def two_regime_corpus(seed=55, count=10_000):
    rng = np.random.default_rng(seed)
    reqs = []
    for i in range(count):
        n = int(rng.integers(3, 16)) if i % 2 == 0 else int(rng.integers(60, 101))
        m = max(1, round(0.9 * n + 1 + float(rng.normal(0, 2.0))))
        reqs.append(Request(id=i, n=n, m_true=m))
    return Corpus(requests=tuple(reqs), language_pair="two-regime")


def main():
    root = Path(__file__).resolve().parents[1]
    out_root = root / "out"
    corpus = two_regime_corpus()
    for kind in ("cp1", "cp2"):
        trace = load_trace(root / "traces" / f"{kind}.csv", trace_id=kind)
        predictive = PolicyConfig(kind=PolicyKind.PREDICTIVE, edge=EDGE,
                                  cloud=CLOUD, length_model=LM,
                                  m_avg=corpus.m_avg)
        naive = PolicyConfig(kind=PolicyKind.NAIVE, edge=EDGE, cloud=CLOUD,
                             length_model=LM, m_avg=corpus.m_avg)
        cfg = SimConfig(
            corpus=corpus,
            edge_oracle=DeviceOracle(true_profile=EDGE, noise_sd=0.5, seed=400),
            cloud_oracle=DeviceOracle(true_profile=CLOUD, noise_sd=0.5,
                                      seed=401),
            trace=trace, bandwidth=BandwidthModel(),
            policy=predictive,
            estimator_init=TxEstimator(ewma_alpha=1.0,
                                       initial_rtt=trace.rtts[0]))
        report, results = compare_report(cfg, [predictive, naive])
        out_dir = out_root / kind
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, result in results.items():
            save_records(result, out_dir / f"{name}_records.csv")
        print(f"\n=== connection profile {kind} "
              f"({report.request_count} requests) ===")
        for name in sorted(report.totals):
            v = report.variations[name]
            print(f"{name:>12}: {report.totals[name]:14.2f} ms | "
                  f"vs edge {v['vs_static_edge']:+7.2f}% | "
                  f"vs cloud {v['vs_static_cloud']:+7.2f}% | "
                  f"vs oracle {v['vs_oracle']:+7.2f}%")


if __name__ == "__main__":
    main()
