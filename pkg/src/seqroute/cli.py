"""Command-line entry point: fitting, generation, simulation, comparison, serving.

Subcommands: fit-latency, fit-length, gen-corpus, gen-trace, simulate, compare,
serve, replay-check. All randomness comes from explicit seeds in flags or config
files, so identical inputs produce byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import SeqRouteError
from .models import (DeviceProfile, FilterRules, FitReport, LengthModel,
                     fit_latency, fit_length)
from .netsim import (BandwidthModel, RttTrace, TxEstimator, load_trace,
                     save_trace, synth_trace)
from .policy import PolicyConfig, PolicyKind
from .sim import (Report, SimConfig, compare_report, run_simulation,
                  save_records)
from .workload import (Corpus, DeviceOracle, SynthSpec, load_corpus,
                       load_measurements, save_corpus, synth_corpus)
from . import gateway as gw


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _profile_to_dict(p: DeviceProfile) -> dict:
    return {"alpha_n": p.alpha_n, "alpha_m": p.alpha_m, "beta": p.beta,
            "device_id": p.device_id}


def _profile_from_dict(d: dict, device_id: str = "") -> DeviceProfile:
    return DeviceProfile(alpha_n=float(d["alpha_n"]), alpha_m=float(d["alpha_m"]),
                         beta=float(d["beta"]),
                         device_id=d.get("device_id", device_id))


def _length_model_from_dict(d: dict) -> LengthModel:
    return LengthModel(gamma=float(d["gamma"]), delta=float(d["delta"]),
                       language_pair=d.get("language_pair", ""))


def _fit_to_dict(f: FitReport) -> dict:
    return {"r2": f.r2, "mse": f.mse, "sample_count": f.sample_count}


def _bandwidth_from_dict(d: dict | None) -> BandwidthModel:
    if d is None:
        return BandwidthModel()
    return BandwidthModel(mbps=float(d.get("mbps", 100.0)),
                          bytes_per_token=int(d.get("bytes_per_token", 2)))


def _estimator_from_dict(d: dict | None) -> TxEstimator:
    if d is None:
        return TxEstimator()
    return TxEstimator(ewma_alpha=float(d.get("ewma_alpha", 1.0)),
                       initial_rtt=float(d.get("initial_rtt", 50.0)))


def _corpus_from_config(cfg: dict) -> Corpus:
    spec = cfg["corpus"]
    if "path" in spec:
        return load_corpus(spec["path"])
    syn = spec["synthetic"]
    return synth_corpus(SynthSpec(
        count=int(syn["count"]), n_dist=tuple(syn["n_dist"]),
        gamma=float(syn["gamma"]), delta=float(syn["delta"]),
        length_noise_sd=float(syn.get("length_noise_sd", 0.0)),
        max_len=int(syn.get("max_len", 100)), seed=int(syn.get("seed", 0))))


def _trace_from_config(cfg: dict) -> RttTrace:
    spec = cfg["trace"]
    if "path" in spec:
        return load_trace(spec["path"])
    if "constant" in spec:
        return RttTrace.constant(float(spec["constant"]))
    syn = spec["synth"]
    return synth_trace(kind=syn["kind"],
                       duration_s=float(syn.get("duration_s", 3600.0)),
                       step_s=float(syn.get("step_s", 10.0)),
                       seed=int(syn.get("seed", 0)),
                       base_rtt=syn.get("base_rtt"),
                       amplitude=syn.get("amplitude"))


def _policy_config(cfg: dict, kind: PolicyKind, corpus: Corpus) -> PolicyConfig:
    edge = _profile_from_dict(cfg.get("edge_fitted", cfg["edge_true"]), "edge")
    cloud = _profile_from_dict(cfg.get("cloud_fitted", cfg["cloud_true"]), "cloud")
    lm = _length_model_from_dict(cfg["length_model"])
    m_avg = float(cfg["m_avg"]) if cfg.get("m_avg") is not None else corpus.m_avg
    return PolicyConfig(kind=kind, edge=edge, cloud=cloud, length_model=lm,
                        m_avg=m_avg)


def _sim_config(cfg: dict, policy: PolicyConfig, corpus: Corpus,
                trace: RttTrace) -> SimConfig:
    return SimConfig(
        corpus=corpus,
        edge_oracle=DeviceOracle(
            true_profile=_profile_from_dict(cfg["edge_true"], "edge"),
            noise_sd=float(cfg.get("edge_noise_sd", 0.0)),
            seed=int(cfg.get("edge_seed", 0))),
        cloud_oracle=DeviceOracle(
            true_profile=_profile_from_dict(cfg["cloud_true"], "cloud"),
            noise_sd=float(cfg.get("cloud_noise_sd", 0.0)),
            seed=int(cfg.get("cloud_seed", 1))),
        trace=trace,
        bandwidth=_bandwidth_from_dict(cfg.get("bandwidth")),
        policy=policy,
        estimator_init=_estimator_from_dict(cfg.get("estimator")),
        mode=cfg.get("mode", "serial"),
        poisson_rate=float(cfg.get("poisson_rate", 0.0)),
        arrival_seed=int(cfg.get("arrival_seed", 0)))


def cmd_fit_latency(args) -> int:
    samples = load_measurements(args.measurements)
    profile, fit = fit_latency(samples)
    out = _profile_to_dict(profile)
    out["device_id"] = args.device_id
    out.update(kind="device_profile", fit=_fit_to_dict(fit))
    _dump_json(out, Path(args.out))
    print(f"fitted {args.device_id or 'device'} profile on {fit.sample_count} "
          f"samples: r2={fit.r2:.4f} mse={fit.mse:.4f}")
    return 0


def cmd_fit_length(args) -> int:
    corpus = load_corpus(args.pairs)
    from .models import LengthPair
    pairs = [LengthPair(n=r.n, m_real=r.m_true) for r in corpus.requests]
    rules = FilterRules(min_len=args.min_len, max_len=args.max_len,
                        max_ratio=args.max_ratio)
    lm, fit = fit_length(pairs, rules, language_pair=args.language_pair)
    out = {"kind": "length_model", "gamma": lm.gamma, "delta": lm.delta,
           "language_pair": lm.language_pair, "fit": _fit_to_dict(fit)}
    _dump_json(out, Path(args.out))
    print(f"fitted length model on {fit.sample_count} pairs: "
          f"gamma={lm.gamma:.4f} delta={lm.delta:.4f} r2={fit.r2:.4f}")
    return 0


def cmd_gen_corpus(args) -> int:
    if args.dist == "uniform":
        n_dist = ("uniform", args.lo, args.hi)
    else:
        n_dist = ("lognormal", args.mu, args.sigma)
    spec = SynthSpec(count=args.count, n_dist=n_dist, gamma=args.gamma,
                     delta=args.delta, length_noise_sd=args.noise_sd,
                     max_len=args.max_len, seed=args.seed)
    corpus = synth_corpus(spec, language_pair=args.language_pair)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus.requests)} requests to {args.out} "
          f"(m_avg={corpus.m_avg:.2f})")
    return 0


def cmd_gen_trace(args) -> int:
    trace = synth_trace(kind=args.kind, duration_s=args.duration,
                        step_s=args.step, seed=args.seed,
                        base_rtt=args.base_rtt, amplitude=args.amplitude)
    save_trace(trace, args.out)
    print(f"wrote {len(trace.offsets)} samples to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    corpus = _corpus_from_config(cfg)
    trace = _trace_from_config(cfg)
    kind = PolicyKind(args.policy)
    policy = _policy_config(cfg, kind, corpus)
    result = run_simulation(_sim_config(cfg, policy, corpus, trace))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_records(result, out_dir / f"{kind.value}_records.csv")
    _dump_json({"policy": result.policy, "total_ms": result.total,
                "request_count": len(result.records),
                "trace_id": trace.trace_id, "seeds": list(result.seeds)},
               out_dir / f"{kind.value}_summary.json")
    print(f"{kind.value}: total {result.total:.2f} ms over "
          f"{len(result.records)} requests")
    return 0


def _report_json(report: Report, mode: str) -> dict:
    return {
        "notes": ("serial closed-loop run: requests are issued back-to-back and "
                  "experience no queueing" if mode == "serial"
                  else "poisson open-loop run: charged latency includes queueing"),
        "request_count": report.request_count,
        "trace_id": report.trace_id,
        "totals_ms": {k: v for k, v in sorted(report.totals.items())},
        "percent_variation": {
            name: {ref: round(val, 2) for ref, val in sorted(vs.items())}
            for name, vs in sorted(report.variations.items())},
    }


def cmd_compare(args) -> int:
    cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    corpus = _corpus_from_config(cfg)
    trace = _trace_from_config(cfg)
    policies = [_policy_config(cfg, PolicyKind(name), corpus)
                for name in cfg.get("policies", ["predictive", "naive"])]
    sim_cfg = _sim_config(cfg, policies[0], corpus, trace)
    report, results = compare_report(sim_cfg, policies)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, result in results.items():
        save_records(result, out_dir / f"{name}_records.csv")
    _dump_json(_report_json(report, sim_cfg.mode), out_dir / "report.json")
    with (out_dir / "report.csv").open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("policy,total_ms,vs_static_edge_pct,vs_static_cloud_pct,"
                 "vs_oracle_pct\n")
        for name in sorted(report.totals):
            v = report.variations[name]
            fh.write(f"{name},{report.totals[name]:.4f},"
                     f"{v['vs_static_edge']:.2f},{v['vs_static_cloud']:.2f},"
                     f"{v['vs_oracle']:.2f}\n")
    for name in sorted(report.totals):
        v = report.variations[name]
        print(f"{name:>12}: total {report.totals[name]:12.2f} ms | "
              f"vs edge {v['vs_static_edge']:+7.2f}% | "
              f"vs cloud {v['vs_static_cloud']:+7.2f}% | "
              f"vs oracle {v['vs_oracle']:+7.2f}%")
    return 0


def _gateway_policy(cfg: dict) -> PolicyConfig:
    return PolicyConfig(
        kind=PolicyKind(cfg.get("policy", "predictive")),
        edge=_profile_from_dict(cfg["edge"], "edge"),
        cloud=_profile_from_dict(cfg["cloud"], "cloud"),
        length_model=_length_model_from_dict(cfg["length_model"]),
        m_avg=float(cfg["m_avg"]) if cfg.get("m_avg") is not None else None)


def cmd_serve(args) -> int:
    cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    policy = _gateway_policy(cfg)
    bandwidth = _bandwidth_from_dict(cfg.get("bandwidth"))
    stub_server = None
    if args.inline_cloud_stub:
        stub_cfg = cfg["cloud_stub"]
        stub_server = gw.CloudStubServer(gw.CloudStubConfig(
            host=cfg["cloud_addr"]["host"],
            port=cfg["cloud_addr"]["port"],
            profile=_profile_from_dict(stub_cfg["profile"], "cloud"),
            artificial_rtt_ms=float(stub_cfg.get("artificial_rtt_ms", 0.0))))
        gw.start_in_thread(stub_server)
        print(f"cloud stub listening on {stub_server.server_address}")
    server = gw.GatewayServer(gw.GatewayConfig(
        host=cfg["listen"]["host"], port=cfg["listen"]["port"],
        policy=policy, bandwidth=bandwidth,
        estimator_init=_estimator_from_dict(cfg.get("estimator")),
        cloud_host=cfg.get("cloud_addr", {}).get("host", ""),
        cloud_port=cfg.get("cloud_addr", {}).get("port", 0),
        log_path=cfg.get("log")))
    print(f"gateway listening on {server.server_address}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        if stub_server is not None:
            stub_server.server_close()
    return 0


def cmd_replay_check(args) -> int:
    cfg = json.loads(Path(args.model).read_text(encoding="utf-8"))
    policy = _gateway_policy(cfg)
    bandwidth = _bandwidth_from_dict(cfg.get("bandwidth"))
    matches, total = gw.replay_decisions(args.log, policy, bandwidth)
    print(f"{matches}/{total} decisions match")
    return 0 if matches == total else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqroute",
        description="Edge/cloud dispatch engine and simulator for "
                    "sequence-to-sequence workloads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-latency", help="fit a device execution-time plane")
    p.add_argument("--measurements", required=True, help="CSV with header n,m,t_ms")
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--device-id", default="")
    p.set_defaults(func=cmd_fit_latency)

    p = sub.add_parser("fit-length", help="fit the input-to-output length line")
    p.add_argument("--pairs", required=True, help="TSV with header n<TAB>m_real")
    p.add_argument("--out", required=True)
    p.add_argument("--min-len", type=int, default=1)
    p.add_argument("--max-len", type=int, default=100)
    p.add_argument("--max-ratio", type=float, default=2.0)
    p.add_argument("--language-pair", default="")
    p.set_defaults(func=cmd_fit_length)

    p = sub.add_parser("gen-corpus", help="generate a synthetic request corpus")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--dist", choices=["uniform", "lognormal"], default="uniform")
    p.add_argument("--lo", type=int, default=3)
    p.add_argument("--hi", type=int, default=100)
    p.add_argument("--mu", type=float, default=3.0)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--max-len", type=int, default=100)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--language-pair", default="synthetic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("gen-trace", help="generate a synthetic RTT trace")
    p.add_argument("--kind", choices=["cp1", "cp2", "flat"], required=True)
    p.add_argument("--duration", type=float, default=3600.0)
    p.add_argument("--step", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-rtt", type=float, default=None)
    p.add_argument("--amplitude", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("simulate", help="run one policy over a config")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--policy", required=True,
                   choices=[k.value for k in PolicyKind])
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run and compare policies vs baselines")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="start the dispatch gateway daemon")
    p.add_argument("--config", required=True, help="gateway config JSON")
    p.add_argument("--inline-cloud-stub", action="store_true",
                   help="also start the cloud stub in-process")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay-check",
                       help="verify a gateway decision log against the policy")
    p.add_argument("--log", required=True, help="gateway decision CSV")
    p.add_argument("--model", required=True, help="policy model JSON")
    p.set_defaults(func=cmd_replay_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SeqRouteError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
