"""Dispatch policies: length-predictive, naive, static, and the post-hoc oracle."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .models import DeviceProfile, LengthModel, exec_time, predict_len


class Target(str, Enum):
    EDGE = "edge"
    CLOUD = "cloud"


class PolicyKind(str, Enum):
    PREDICTIVE = "predictive"  # length-predicting dispatch rule
    NAIVE = "naive"  # same rule with the corpus-average output length
    STATIC_EDGE = "static_edge"
    STATIC_CLOUD = "static_cloud"
    ORACLE = "oracle"


@dataclass(frozen=True)
class Decision:
    target: Target
    est_edge: float  # ms
    est_cloud_total: float  # ms, execution + transmission estimate
    rationale: str


@dataclass(frozen=True)
class PolicyConfig:
    kind: PolicyKind
    edge: DeviceProfile
    cloud: DeviceProfile
    length_model: LengthModel
    m_avg: float | None = None  # naive policy only

    def __post_init__(self):
        if self.kind is PolicyKind.NAIVE and (self.m_avg is None or self.m_avg < 1):
            raise ValueError("naive policy requires m_avg >= 1")


def _decide(cfg: PolicyConfig, n: float, m_hat: float, t_tx: float,
            rationale: str) -> Decision:
    est_edge = exec_time(cfg.edge, n, m_hat)
    est_cloud_total = t_tx + exec_time(cfg.cloud, n, m_hat)
    # ties go to the edge: offloading buys nothing on indifference
    target = Target.EDGE if est_edge <= est_cloud_total else Target.CLOUD
    return Decision(target=target, est_edge=est_edge,
                    est_cloud_total=est_cloud_total, rationale=rationale)


def predictive_decide(cfg: PolicyConfig, n: float, t_tx: float) -> Decision:
    """Route using the predicted output length for this input."""
    assert cfg.kind is PolicyKind.PREDICTIVE
    return _decide(cfg, n, predict_len(cfg.length_model, n), t_tx, "predictive")


def naive_decide(cfg: PolicyConfig, n: float, t_tx: float) -> Decision:
    """Route assuming the corpus-average output length, independent of n."""
    assert cfg.kind is PolicyKind.NAIVE
    return _decide(cfg, n, cfg.m_avg, t_tx, "naive")


def static_decide(cfg: PolicyConfig, n: float = 1.0, t_tx: float = 0.0) -> Decision:
    """Constant routing; inputs only fill the estimate fields for reporting."""
    assert cfg.kind in (PolicyKind.STATIC_EDGE, PolicyKind.STATIC_CLOUD)
    m_hat = predict_len(cfg.length_model, n)
    est_edge = exec_time(cfg.edge, n, m_hat)
    est_cloud_total = t_tx + exec_time(cfg.cloud, n, m_hat)
    target = Target.EDGE if cfg.kind is PolicyKind.STATIC_EDGE else Target.CLOUD
    return Decision(target=target, est_edge=est_edge,
                    est_cloud_total=est_cloud_total, rationale=cfg.kind.value)


def oracle_decide(realized_edge: float, realized_cloud_exec: float,
                  realized_tx: float) -> Decision:
    """Pick the device with the lower realized total latency (ties to edge)."""
    cloud_total = realized_tx + realized_cloud_exec
    target = Target.EDGE if realized_edge <= cloud_total else Target.CLOUD
    return Decision(target=target, est_edge=realized_edge,
                    est_cloud_total=cloud_total, rationale="oracle")
