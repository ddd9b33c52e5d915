"""Acceptance criteria, one test per criterion (criterion 6 split in three).

Each test prints one `ACCEPTANCE <id> PASS` line with the achieved numbers.
Run with `pytest tests/test_acceptance.py -v -s`.
"""
import json
import socket
import time

import numpy as np
import pytest

from seqroute.gateway import (CloudStubConfig, CloudStubServer, GatewayConfig,
                              GatewayServer, replay_decisions, start_in_thread)
from seqroute.models import (DeviceProfile, FilterRules, LatencySample,
                             LengthModel, LengthPair, exec_time, fit_latency,
                             fit_length)
from seqroute.netsim import (BandwidthModel, RttTrace, TxEstimator,
                             current_tx_estimate, observe_roundtrip, payload_ms,
                             rtt_at, synth_trace)
from seqroute.policy import PolicyConfig, PolicyKind, Target
from seqroute.sim import (SimConfig, compare_report, percent_variation,
                          run_simulation)
from seqroute.workload import (Corpus, DeviceOracle, Request, SynthSpec,
                               synth_corpus)

from oracles import ols_line, ols_plane, straight_line_total

BW = BandwidthModel(mbps=100.0, bytes_per_token=2)


def _sim_cfg(corpus, policy, edge, cloud, trace, *, edge_noise=0.0,
             cloud_noise=0.0, seed=0, initial_rtt=50.0, ewma_alpha=1.0):
    return SimConfig(
        corpus=corpus,
        edge_oracle=DeviceOracle(true_profile=edge, noise_sd=edge_noise,
                                 seed=seed),
        cloud_oracle=DeviceOracle(true_profile=cloud, noise_sd=cloud_noise,
                                  seed=seed + 1),
        trace=trace, bandwidth=BW, policy=policy,
        estimator_init=TxEstimator(ewma_alpha=ewma_alpha,
                                   initial_rtt=initial_rtt))


def test_criterion_1_perfect_information_equivalence():
    edge = DeviceProfile(alpha_n=0.2, alpha_m=1.5, beta=8)
    cloud = DeviceProfile(alpha_n=0.05, alpha_m=0.4, beta=3)
    lm = LengthModel(gamma=2.0, delta=3.0)  # integer-valued on integer n
    corpus = synth_corpus(SynthSpec(count=10_000, n_dist=("uniform", 3, 100),
                                    gamma=2.0, delta=3.0, seed=41))
    trace = RttTrace.constant(50.0)
    start = time.perf_counter()
    pred = run_simulation(_sim_cfg(
        corpus, PolicyConfig(kind=PolicyKind.PREDICTIVE, edge=edge, cloud=cloud,
                             length_model=lm),
        edge, cloud, trace, initial_rtt=50.0))
    oracle = run_simulation(_sim_cfg(
        corpus, PolicyConfig(kind=PolicyKind.ORACLE, edge=edge, cloud=cloud,
                             length_model=lm),
        edge, cloud, trace, initial_rtt=50.0))
    elapsed = time.perf_counter() - start
    mismatches = sum(1 for a, b in zip(pred.records, oracle.records)
                     if a.decision.target is not b.decision.target)
    assert mismatches == 0
    assert abs(pred.total - oracle.total) <= 1e-9 * oracle.total
    assert elapsed < 5.0
    print(f"\nACCEPTANCE 1 PASS: 10000/10000 decisions equal, "
          f"total diff {abs(pred.total - oracle.total):.2e} ms, "
          f"runtime {elapsed:.2f}s")


def test_criterion_2_fit_recovery():
    # latency plane with 0.1 ms noise, 1000 samples
    rng = np.random.default_rng(1234)
    n = rng.integers(1, 100, size=1000)
    m = rng.integers(1, 100, size=1000)
    t = 0.5 * n + 2.0 * m + 1.0 + rng.normal(0, 0.1, size=1000)
    samples = [LatencySample(int(a), int(b), float(c))
               for a, b, c in zip(n, m, t)]
    profile, lat_fit = fit_latency(samples)
    oa, ob, oc = ols_plane(n.tolist(), m.tolist(), t.tolist())
    assert profile.alpha_n == pytest.approx(oa, abs=1e-8)
    assert profile.alpha_m == pytest.approx(ob, abs=1e-8)
    assert profile.beta == pytest.approx(oc, abs=1e-8)
    assert abs(profile.alpha_n - 0.5) <= 0.05
    assert abs(profile.alpha_m - 2.0) <= 0.05
    assert abs(profile.beta - 1.0) <= 0.05
    assert lat_fit.r2 >= 0.99

    # length line with 2-token noise, 10k pairs
    n2 = rng.integers(3, 101, size=10_000)
    m2 = np.maximum(np.rint(0.8 * n2 + 2.0 + rng.normal(0, 2.0, n2.size)), 1)
    pairs = [LengthPair(int(a), int(b)) for a, b in zip(n2, m2)]
    lm, len_fit = fit_length(pairs, FilterRules(min_len=1, max_len=200,
                                                max_ratio=100.0))
    slope, intercept = ols_line(n2.tolist(), m2.tolist())
    assert lm.gamma == pytest.approx(slope, abs=1e-9)
    assert lm.delta == pytest.approx(intercept, abs=1e-9)
    assert abs(lm.gamma - 0.8) <= 0.02
    assert abs(lm.delta - 2.0) <= 0.5
    assert len_fit.r2 >= 0.95
    print(f"\nACCEPTANCE 2 PASS: plane ({profile.alpha_n:.4f}, "
          f"{profile.alpha_m:.4f}, {profile.beta:.4f}) r2={lat_fit.r2:.4f}; "
          f"line ({lm.gamma:.4f}, {lm.delta:.4f}) r2={len_fit.r2:.4f}")


def test_criterion_3_oracle_dominance_across_seeds():
    checked = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        edge = DeviceProfile(alpha_n=float(rng.uniform(0.05, 0.5)),
                             alpha_m=float(rng.uniform(0.5, 2.5)),
                             beta=float(rng.uniform(1, 15)))
        cloud = DeviceProfile(alpha_n=float(rng.uniform(0.01, 0.2)),
                              alpha_m=float(rng.uniform(0.1, 0.8)),
                              beta=float(rng.uniform(0.5, 6)))
        gamma = float(rng.uniform(0.5, 1.5))
        delta = float(rng.uniform(0, 5))
        lm = LengthModel(gamma=gamma, delta=delta)
        corpus = synth_corpus(SynthSpec(
            count=300, n_dist=("uniform", 3, 100), gamma=gamma, delta=delta,
            length_noise_sd=float(rng.uniform(0, 6)), seed=seed))
        trace = synth_trace("cp1" if seed % 2 else "cp2", duration_s=600,
                            step_s=5, seed=seed)
        cfg = _sim_cfg(corpus,
                       PolicyConfig(kind=PolicyKind.PREDICTIVE, edge=edge,
                                    cloud=cloud, length_model=lm,
                                    m_avg=corpus.m_avg),
                       edge, cloud, trace,
                       edge_noise=float(rng.uniform(0, 3)),
                       cloud_noise=float(rng.uniform(0, 3)), seed=seed * 100)
        naive = PolicyConfig(kind=PolicyKind.NAIVE, edge=edge, cloud=cloud,
                             length_model=lm, m_avg=corpus.m_avg)
        report, _ = compare_report(cfg, [cfg.policy, naive])
        for name, total in report.totals.items():
            assert report.totals["oracle"] <= total + 1e-9, (seed, name)
        checked += 1
    print(f"\nACCEPTANCE 3 PASS: oracle dominated all policies in "
          f"{checked}/20 seeded configurations, zero violations")


def _two_regime_corpus(seed=55, count=2000):
    """Half short edge-favoring requests, half long cloud-favoring ones."""
    rng = np.random.default_rng(seed)
    reqs = []
    for i in range(count):
        if i % 2 == 0:
            n = int(rng.integers(3, 16))
        else:
            n = int(rng.integers(60, 101))
        m = max(1, round(0.9 * n + 1 + float(rng.normal(0, 2.0))))
        reqs.append(Request(id=i, n=n, m_true=m))
    return Corpus(requests=tuple(reqs), language_pair="two-regime")


def test_criterion_4_ordering_reproduction():
    edge = DeviceProfile(alpha_n=0.1, alpha_m=2.0, beta=5)
    cloud = DeviceProfile(alpha_n=0.02, alpha_m=0.5, beta=2)
    lm = LengthModel(gamma=0.9, delta=1)
    corpus = _two_regime_corpus()
    achieved = {}
    for kind in ("cp1", "cp2"):
        trace = synth_trace(kind, duration_s=1800, step_s=5, seed=17)
        cfg = _sim_cfg(corpus,
                       PolicyConfig(kind=PolicyKind.PREDICTIVE, edge=edge,
                                    cloud=cloud, length_model=lm,
                                    m_avg=corpus.m_avg),
                       edge, cloud, trace, edge_noise=0.5, cloud_noise=0.5,
                       seed=400, initial_rtt=trace.rtts[0])
        naive = PolicyConfig(kind=PolicyKind.NAIVE, edge=edge, cloud=cloud,
                             length_model=lm, m_avg=corpus.m_avg)
        report, _ = compare_report(cfg, [cfg.policy, naive])
        best_static = min(report.totals["static_edge"],
                          report.totals["static_cloud"])
        pred_vs_static = percent_variation(report.totals["predictive"],
                                           best_static)
        pred_gap = report.variations["predictive"]["vs_oracle"]
        naive_gap = report.variations["naive"]["vs_oracle"]
        achieved[kind] = (pred_vs_static, pred_gap, naive_gap)
        assert report.totals["predictive"] < best_static
        assert pred_vs_static <= -5.0, (kind, pred_vs_static)
        if kind == "cp1":
            assert pred_gap < naive_gap
            assert pred_gap <= 0.5 * naive_gap, (pred_gap, naive_gap)
    print("\nACCEPTANCE 4 PASS: "
          + "; ".join(f"{k}: predictive vs best static {v[0]:+.2f}%, "
                      f"vs oracle {v[1]:+.2f}% (naive {v[2]:+.2f}%)"
                      for k, v in achieved.items()))


def test_criterion_5_transformer_regime_sensitivity():
    # same corpus with poorly predictable output lengths, two device regimes
    rng = np.random.default_rng(71)
    reqs = []
    for i in range(2000):
        n = int(rng.integers(3, 101))
        m = max(1, round(0.9 * n + 1 + float(rng.normal(0, 15.0))))
        reqs.append(Request(id=i, n=n, m_true=m))
    corpus = Corpus(requests=tuple(reqs))
    lm = LengthModel(gamma=0.9, delta=1)
    trace = RttTrace.constant(40.0)
    regimes = {
        # recurrent-style: time grows with the known input length
        "rnn": (DeviceProfile(alpha_n=1.5, alpha_m=0.5, beta=5),
                DeviceProfile(alpha_n=0.375, alpha_m=0.125, beta=2)),
        # attention-style: encoder cost flat in n, cost driven by unknown m
        "transformer": (DeviceProfile(alpha_n=0.0, alpha_m=2.0, beta=5),
                        DeviceProfile(alpha_n=0.0, alpha_m=0.5, beta=2)),
    }
    overheads = {}
    for name, (edge, cloud) in regimes.items():
        cfg = _sim_cfg(corpus,
                       PolicyConfig(kind=PolicyKind.PREDICTIVE, edge=edge,
                                    cloud=cloud, length_model=lm),
                       edge, cloud, trace, initial_rtt=40.0)
        report, _ = compare_report(cfg, [cfg.policy])
        overheads[name] = report.variations["predictive"]["vs_oracle"]
    assert overheads["transformer"] > overheads["rnn"]
    print(f"\nACCEPTANCE 5 PASS: vs-oracle overhead transformer "
          f"{overheads['transformer']:+.2f}% > rnn {overheads['rnn']:+.2f}%")


def test_criterion_6a_rtt_step_replay_brute_force():
    rng = np.random.default_rng(99)
    offs = np.cumsum(rng.uniform(0.05, 15.0, size=500))
    trace = RttTrace(offsets=tuple(float(o) for o in offs),
                     rtts=tuple(float(r) for r in rng.uniform(1, 200, 500)))

    def linear_scan(t):
        best = trace.rtts[0]
        for off, r in zip(trace.offsets, trace.rtts):
            if off <= t:
                best = r
        return best

    queries = rng.uniform(-20, float(offs[-1]) + 100, size=10_000)
    for t in queries:
        assert rtt_at(trace, float(t)) == linear_scan(float(t))
    print("\nACCEPTANCE 6a PASS: rtt replay equals linear scan on 10000 queries")


def test_criterion_6b_payload_below_0_02ms_up_to_1000_tokens():
    # Stated bound: payload < 0.02 ms at defaults for n+m <= 1000. At
    # 100 Mbps and 2 bytes/token the defaults give 16 bits/token, i.e.
    # 0.16 ms at n+m = 1000, so this bound cannot hold beyond n+m = 124.
    # Asserted as stated; see the decisions ledger.
    worst = max(payload_ms(BW, n, 1000 - n) for n in range(1, 1000))
    assert worst < 0.02, f"worst payload at defaults is {worst} ms"
    print("\nACCEPTANCE 6b PASS")


def test_criterion_6c_estimator_one_observation_behind():
    trace = synth_trace("cp1", duration_s=300, step_s=3, seed=2)
    est = TxEstimator(ewma_alpha=1.0, initial_rtt=50.0)
    rng = np.random.default_rng(5)
    t = 0.0
    for _ in range(200):
        t += float(rng.uniform(0.1, 10.0))
        est = observe_roundtrip(est, rtt_at(trace, t), t)
        expect = rtt_at(trace, t) + payload_ms(BW, 7, 9)
        assert current_tx_estimate(est, BW, 7, 9) == pytest.approx(expect)
    print("\nACCEPTANCE 6c PASS: alpha=1 estimator tracks the last observation "
          "exactly")


def test_criterion_7_brute_force_simulation_equivalence():
    edge = DeviceProfile(alpha_n=0.2, alpha_m=1.5, beta=8)
    cloud = DeviceProfile(alpha_n=0.05, alpha_m=0.4, beta=3)
    lm = LengthModel(gamma=0.9, delta=1)
    rng = np.random.default_rng(77)
    checked = 0
    for _ in range(30):
        size = int(rng.integers(1, 11))
        reqs = [(int(rng.integers(1, 120)), int(rng.integers(1, 120)))
                for _ in range(size)]
        rtt = float(rng.uniform(5, 120))
        corpus = Corpus(requests=tuple(Request(id=i, n=n, m_true=m)
                                       for i, (n, m) in enumerate(reqs)))
        result = run_simulation(_sim_cfg(
            corpus, PolicyConfig(kind=PolicyKind.PREDICTIVE, edge=edge,
                                 cloud=cloud, length_model=lm),
            edge, cloud, RttTrace.constant(rtt), initial_rtt=rtt))
        per_token = payload_ms(BW, 1, 0)

        def pick(i, n, tx):
            m_hat = max(1.0, lm.gamma * n + lm.delta)
            est_tx = rtt + (n + m_hat) * per_token
            return "edge" if exec_time(edge, n, m_hat) <= \
                est_tx + exec_time(cloud, n, m_hat) else "cloud"

        expected, _ = straight_line_total(
            reqs, [exec_time(edge, n, m) for n, m in reqs],
            [exec_time(cloud, n, m) for n, m in reqs], rtt, per_token, pick)
        assert abs(result.total - expected) <= 1e-9 * max(expected, 1.0)
        checked += 1
    print(f"\nACCEPTANCE 7 PASS: {checked} small corpora matched the "
          "straight-line recomputation to 1e-9")


def test_criterion_8_gateway_replay_equivalence(tmp_path):
    edge = DeviceProfile(alpha_n=0.002, alpha_m=0.015, beta=0.08)
    cloud = DeviceProfile(alpha_n=0.0005, alpha_m=0.004, beta=0.03)
    lm = LengthModel(gamma=0.9, delta=1)
    policy = PolicyConfig(kind=PolicyKind.PREDICTIVE, edge=edge, cloud=cloud,
                          length_model=lm)
    stub = CloudStubServer(CloudStubConfig(host="127.0.0.1", port=0,
                                           profile=cloud,
                                           artificial_rtt_ms=0.5))
    start_in_thread(stub)
    log_path = tmp_path / "decisions.csv"
    gateway = GatewayServer(GatewayConfig(
        host="127.0.0.1", port=0, policy=policy, bandwidth=BW,
        estimator_init=TxEstimator(ewma_alpha=1.0, initial_rtt=0.5),
        cloud_host="127.0.0.1", cloud_port=stub.server_address[1],
        log_path=str(log_path)))
    start_in_thread(gateway)
    start = time.perf_counter()
    try:
        sk = socket.create_connection(gateway.server_address, timeout=30)
        fh = sk.makefile("rwb")
        for i in range(1000):
            frame = {"id": str(i), "n": 2 + (i * 13) % 130}
            fh.write(json.dumps(frame).encode("utf-8") + b"\n")
            fh.flush()
            reply = json.loads(fh.readline())
            assert "error" not in reply
        sk.close()
    finally:
        gateway.shutdown()
        gateway.server_close()
        stub.shutdown()
        stub.server_close()
    elapsed = time.perf_counter() - start
    matches, total = replay_decisions(log_path, policy, BW)
    assert total == 1000
    assert matches == 1000
    assert elapsed < 30.0
    print(f"\nACCEPTANCE 8 PASS: 1000/1000 decisions reproduced offline, "
          f"live run took {elapsed:.1f}s")


def test_criterion_9_determinism_byte_identical_artifacts(tmp_path):
    from seqroute.cli import main as cli_main

    exp = {
        "corpus": {"synthetic": {"count": 800, "n_dist": ["uniform", 3, 100],
                                 "gamma": 0.9, "delta": 1,
                                 "length_noise_sd": 2.0, "seed": 7}},
        "edge_true": {"alpha_n": 0.2, "alpha_m": 1.5, "beta": 8},
        "cloud_true": {"alpha_n": 0.05, "alpha_m": 0.4, "beta": 3},
        "edge_noise_sd": 1.0, "cloud_noise_sd": 1.0,
        "edge_seed": 5, "cloud_seed": 6,
        "length_model": {"gamma": 0.9, "delta": 1},
        "trace": {"synth": {"kind": "cp1", "duration_s": 600, "step_s": 5,
                            "seed": 17}},
        "estimator": {"ewma_alpha": 1.0, "initial_rtt": 80.0},
        "policies": ["predictive", "naive"],
    }
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps(exp), encoding="utf-8")
    out_dirs = [tmp_path / "run1", tmp_path / "run2"]
    for out in out_dirs:
        assert cli_main(["compare", "--config", str(cfg),
                         "--out-dir", str(out)]) == 0
        assert cli_main(["gen-corpus", "--count", "300", "--gamma", "0.8",
                         "--delta", "2", "--noise-sd", "2", "--seed", "9",
                         "--out", str(out / "corpus.tsv")]) == 0
        assert cli_main(["gen-trace", "--kind", "cp2", "--duration", "300",
                         "--step", "5", "--seed", "3",
                         "--out", str(out / "trace.csv")]) == 0
    names = sorted(p.name for p in out_dirs[0].iterdir())
    for name in names:
        assert (out_dirs[0] / name).read_bytes() == \
            (out_dirs[1] / name).read_bytes(), name
    print(f"\nACCEPTANCE 9 PASS: {len(names)} artifacts byte-identical across "
          "repeated runs")
