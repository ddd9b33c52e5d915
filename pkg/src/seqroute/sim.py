"""Trace-driven simulation of the dispatch gateway and policy comparison reports."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .models import predict_len
from .netsim import (BandwidthModel, RttTrace, TxEstimator, current_tx_estimate,
                     observe_roundtrip, realized_tx, rtt_at)
from .policy import (Decision, PolicyConfig, PolicyKind, Target, naive_decide,
                     oracle_decide, predictive_decide, static_decide)
from .workload import Corpus, DeviceOracle, realize_latency


@dataclass(frozen=True)
class SimConfig:
    corpus: Corpus
    edge_oracle: DeviceOracle
    cloud_oracle: DeviceOracle
    trace: RttTrace
    bandwidth: BandwidthModel
    policy: PolicyConfig
    estimator_init: TxEstimator
    mode: str = "serial"  # "serial" or "poisson"
    poisson_rate: float = 0.0  # requests/second, poisson mode only
    arrival_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("serial", "poisson"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "poisson" and self.poisson_rate <= 0:
            raise ConfigError("poisson mode requires rate > 0")


@dataclass(frozen=True)
class RequestRecord:
    request_id: int
    n: int
    m_true: int
    decision: Decision
    realized_edge: float
    realized_cloud_exec: float
    realized_tx: float
    charged: float
    clock_at_dispatch: float  # seconds


@dataclass(frozen=True)
class RunResult:
    records: tuple[RequestRecord, ...]
    total: float  # ms
    policy: str
    seeds: tuple[int, ...] = ()


@dataclass(frozen=True)
class Report:
    totals: dict  # policy name -> total ms
    variations: dict  # policy name -> {vs_static_edge, vs_static_cloud, vs_oracle} in %
    request_count: int
    trace_id: str


def _length_assumption(policy: PolicyConfig, n: int) -> float:
    if policy.kind is PolicyKind.NAIVE:
        return float(policy.m_avg)
    return predict_len(policy.length_model, n)


def _decide(policy: PolicyConfig, n: int, t_tx_est: float,
            realized_edge: float, realized_cloud: float,
            realized_tx_cost: float) -> Decision:
    if policy.kind is PolicyKind.PREDICTIVE:
        return predictive_decide(policy, n, t_tx_est)
    if policy.kind is PolicyKind.NAIVE:
        return naive_decide(policy, n, t_tx_est)
    if policy.kind in (PolicyKind.STATIC_EDGE, PolicyKind.STATIC_CLOUD):
        return static_decide(policy, n, t_tx_est)
    if policy.kind is PolicyKind.ORACLE:
        return oracle_decide(realized_edge, realized_cloud, realized_tx_cost)
    raise ConfigError(f"unhandled policy kind {policy.kind}")


def _charged(decision: Decision, realized_edge: float, realized_cloud: float,
             realized_tx_cost: float) -> float:
    if decision.target is Target.EDGE:
        return realized_edge
    return realized_tx_cost + realized_cloud


def run_simulation(cfg: SimConfig) -> RunResult:
    if cfg.mode == "poisson":
        return _run_poisson(cfg)
    est = cfg.estimator_init
    clock = 0.0
    records = []
    for req in cfg.corpus.requests:
        m_hat = _length_assumption(cfg.policy, req.n)
        t_tx_est = current_tx_estimate(est, cfg.bandwidth, req.n, m_hat)
        r_edge = realize_latency(cfg.edge_oracle, req)
        r_cloud = realize_latency(cfg.cloud_oracle, req)
        rtt_now = rtt_at(cfg.trace, clock)
        r_tx = realized_tx(cfg.trace, cfg.bandwidth, clock, req.n, req.m_true)
        decision = _decide(cfg.policy, req.n, t_tx_est, r_edge, r_cloud, r_tx)
        charged = _charged(decision, r_edge, r_cloud, r_tx)
        records.append(RequestRecord(
            request_id=req.id, n=req.n, m_true=req.m_true, decision=decision,
            realized_edge=r_edge, realized_cloud_exec=r_cloud, realized_tx=r_tx,
            charged=charged, clock_at_dispatch=clock))
        clock += charged / 1000.0
        if decision.target is Target.CLOUD:
            est = observe_roundtrip(est, rtt_now, clock)
    return RunResult(records=tuple(records),
                     total=float(sum(r.charged for r in records)),
                     policy=cfg.policy.kind.value,
                     seeds=(cfg.edge_oracle.seed, cfg.cloud_oracle.seed))


def _run_poisson(cfg: SimConfig) -> RunResult:
    """Open-loop arrivals with per-device FIFO queues; charged includes queueing."""
    rng = np.random.default_rng(cfg.arrival_seed)
    inter = rng.exponential(1.0 / cfg.poisson_rate, size=len(cfg.corpus.requests))
    arrivals = np.cumsum(inter)
    est = cfg.estimator_init
    device_free = {Target.EDGE: 0.0, Target.CLOUD: 0.0}
    pending_obs: list[tuple[float, float]] = []  # (completion s, measured rtt ms)
    records = []
    for req, arrival in zip(cfg.corpus.requests, arrivals):
        arrival = float(arrival)
        # fold in cloud round trips that completed before this arrival
        ready = sorted(o for o in pending_obs if o[0] <= arrival)
        for done_at, measured in ready:
            est = observe_roundtrip(est, measured, done_at)
            pending_obs.remove((done_at, measured))
        m_hat = _length_assumption(cfg.policy, req.n)
        t_tx_est = current_tx_estimate(est, cfg.bandwidth, req.n, m_hat)
        r_edge = realize_latency(cfg.edge_oracle, req)
        r_cloud = realize_latency(cfg.cloud_oracle, req)
        rtt_now = rtt_at(cfg.trace, arrival)
        r_tx = realized_tx(cfg.trace, cfg.bandwidth, arrival, req.n, req.m_true)
        decision = _decide(cfg.policy, req.n, t_tx_est, r_edge, r_cloud, r_tx)
        service = _charged(decision, r_edge, r_cloud, r_tx)
        start = max(arrival, device_free[decision.target])
        completion = start + service / 1000.0
        device_free[decision.target] = completion
        charged = (completion - arrival) * 1000.0
        records.append(RequestRecord(
            request_id=req.id, n=req.n, m_true=req.m_true, decision=decision,
            realized_edge=r_edge, realized_cloud_exec=r_cloud, realized_tx=r_tx,
            charged=charged, clock_at_dispatch=arrival))
        if decision.target is Target.CLOUD:
            pending_obs.append((completion, rtt_now))
    return RunResult(records=tuple(records),
                     total=float(sum(r.charged for r in records)),
                     policy=cfg.policy.kind.value,
                     seeds=(cfg.edge_oracle.seed, cfg.cloud_oracle.seed,
                            cfg.arrival_seed))


def oracle_from_records(records) -> RunResult:
    """Re-route recorded requests by realized latencies; sum of per-request minima."""
    rerouted = []
    for rec in records:
        decision = oracle_decide(rec.realized_edge, rec.realized_cloud_exec,
                                 rec.realized_tx)
        charged = _charged(decision, rec.realized_edge, rec.realized_cloud_exec,
                           rec.realized_tx)
        rerouted.append(replace(rec, decision=decision, charged=charged))
    return RunResult(records=tuple(rerouted),
                     total=float(sum(r.charged for r in rerouted)),
                     policy="oracle")


def percent_variation(t_policy: float, t_ref: float) -> float:
    if t_ref <= 0:
        raise ValueError("reference total must be > 0")
    return 100.0 * (t_policy - t_ref) / t_ref


def compare_report(cfg: SimConfig, policies: list[PolicyConfig]) -> tuple[Report, dict]:
    """Run each policy on the identical workload/trace/seeds and compare totals.

    Static baselines are always appended. The oracle row takes, per request, the
    realized minimum over both devices across every run (transmission costs differ
    between runs because each policy advances the clock differently), so its total
    lower-bounds every run by construction.

    Returns (report, results) where results maps policy name to its RunResult.
    """
    if not policies:
        raise ConfigError("need at least one policy to compare")
    all_policies = list(policies)
    present = {p.kind for p in all_policies}
    template = policies[0]
    for kind in (PolicyKind.STATIC_EDGE, PolicyKind.STATIC_CLOUD):
        if kind not in present:
            all_policies.append(PolicyConfig(kind=kind, edge=template.edge,
                                             cloud=template.cloud,
                                             length_model=template.length_model,
                                             m_avg=template.m_avg))
    results: dict[str, RunResult] = {}
    for pol in all_policies:
        run = run_simulation(replace(cfg, policy=pol))
        results[pol.kind.value] = run

    n_req = len(cfg.corpus.requests)
    oracle_total = 0.0
    for i in range(n_req):
        best = min(min(run.records[i].realized_edge,
                       run.records[i].realized_tx + run.records[i].realized_cloud_exec)
                   for run in results.values())
        oracle_total += best

    totals = {name: run.total for name, run in results.items()}
    totals["oracle"] = oracle_total
    refs = {"vs_static_edge": totals[PolicyKind.STATIC_EDGE.value],
            "vs_static_cloud": totals[PolicyKind.STATIC_CLOUD.value],
            "vs_oracle": oracle_total}
    variations = {name: {ref: percent_variation(total, tref)
                         for ref, tref in refs.items()}
                  for name, total in totals.items()}
    report = Report(totals=totals, variations=variations,
                    request_count=n_req, trace_id=cfg.trace.trace_id)
    return report, results


RECORD_CSV_HEADER = ["request_id", "decision", "est_edge_ms", "est_cloud_ms",
                     "realized_edge_ms", "realized_cloud_ms", "realized_tx_ms",
                     "charged_ms", "clock_s"]


def save_records(result: RunResult, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_CSV_HEADER)
        for r in result.records:
            writer.writerow([r.request_id, r.decision.target.value,
                             repr(r.decision.est_edge),
                             repr(r.decision.est_cloud_total),
                             repr(r.realized_edge), repr(r.realized_cloud_exec),
                             repr(r.realized_tx), repr(r.charged),
                             repr(r.clock_at_dispatch)])
