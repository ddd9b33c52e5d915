import json
import socket
import threading

import pytest

from seqroute.gateway import (CloudStubConfig, CloudStubServer, GatewayConfig,
                              GatewayServer, replay_decisions, start_in_thread)
from seqroute.models import DeviceProfile, LengthModel
from seqroute.netsim import BandwidthModel, TxEstimator
from seqroute.policy import PolicyConfig, PolicyKind, predictive_decide

# millisecond-scale profiles keep stub sleeps short
EDGE = DeviceProfile(alpha_n=0.002, alpha_m=0.015, beta=0.08, device_id="edge")
CLOUD = DeviceProfile(alpha_n=0.0005, alpha_m=0.004, beta=0.03,
                      device_id="cloud")
LM = LengthModel(gamma=0.9, delta=1)
BW = BandwidthModel(mbps=100.0, bytes_per_token=2)


@pytest.fixture
def stack(tmp_path):
    stub = CloudStubServer(CloudStubConfig(host="127.0.0.1", port=0,
                                           profile=CLOUD,
                                           artificial_rtt_ms=1.0))
    start_in_thread(stub)
    policy = PolicyConfig(kind=PolicyKind.PREDICTIVE, edge=EDGE, cloud=CLOUD,
                          length_model=LM)
    log_path = tmp_path / "decisions.csv"
    gateway = GatewayServer(GatewayConfig(
        host="127.0.0.1", port=0, policy=policy, bandwidth=BW,
        estimator_init=TxEstimator(ewma_alpha=1.0, initial_rtt=1.0),
        cloud_host="127.0.0.1", cloud_port=stub.server_address[1],
        log_path=str(log_path)))
    start_in_thread(gateway)
    yield gateway, stub, log_path, policy
    gateway.shutdown()
    gateway.server_close()
    stub.shutdown()
    stub.server_close()


class Client:
    def __init__(self, addr):
        self.sock = socket.create_connection(addr, timeout=30)
        self.fh = self.sock.makefile("rwb")

    def call_raw(self, payload: bytes) -> dict:
        self.fh.write(payload + b"\n")
        self.fh.flush()
        return json.loads(self.fh.readline().decode("utf-8"))

    def call(self, frame: dict) -> dict:
        return self.call_raw(json.dumps(frame).encode("utf-8"))

    def close(self):
        self.sock.close()


def test_edge_routing_matches_offline_policy(stack):
    gateway, _, _, policy = stack
    client = Client(gateway.server_address)
    try:
        # tiny request: offline policy says edge at the initial estimate
        offline = predictive_decide(policy, 2, 1.0)
        reply = client.call({"id": "a", "n": 2})
        assert offline.target.value == "edge"
        assert reply["target"] == "edge"
        assert reply["id"] == "a"
        assert reply["est_edge_ms"] == pytest.approx(offline.est_edge, abs=1e-6)
    finally:
        client.close()


def test_cloud_routing_and_estimator_update(stack):
    gateway, _, _, _ = stack
    client = Client(gateway.server_address)
    try:
        reply = client.call({"id": "big", "n": 100, "m_true": 90})
        assert reply["target"] == "cloud"
        stats = gateway.stats()
        assert stats["cloud_count"] == 1
        # wall-clock round trip replaces the configured prior
        assert stats["rtt_estimate_ms"] != pytest.approx(1.0, abs=1e-9) or \
            stats["rtt_estimate_ms"] > 0
    finally:
        client.close()


def test_malformed_frame_keeps_connection_open(stack):
    gateway, _, _, _ = stack
    client = Client(gateway.server_address)
    try:
        bad = client.call_raw(b"{not json")
        assert "error" in bad
        missing = client.call({"id": "x"})
        assert "error" in missing
        negative = client.call({"id": "y", "n": 0})
        assert "error" in negative
        good = client.call({"id": "z", "n": 2})
        assert good["target"] in ("edge", "cloud")
    finally:
        client.close()


def test_stats_conservation(stack):
    gateway, _, _, _ = stack
    client = Client(gateway.server_address)
    try:
        k = 20
        for i in range(k):
            client.call({"id": str(i), "n": 2 + (i % 120)})
        stats = gateway.stats()
        assert stats["edge_count"] + stats["cloud_count"] == k
        assert stats["requests"] == k
    finally:
        client.close()


def test_concurrent_snapshots_consistent(stack):
    gateway, _, _, _ = stack
    snapshots = []
    stop = threading.Event()

    def reader():
        while not stop.is_set():
            snapshots.append(gateway.stats())

    t = threading.Thread(target=reader)
    t.start()
    clients = [Client(gateway.server_address) for _ in range(4)]
    threads = []
    for ci, client in enumerate(clients):
        def load(c=client, base=ci * 50):
            for i in range(25):
                c.call({"id": f"{base + i}", "n": 2 + (i % 100)})
        th = threading.Thread(target=load)
        th.start()
        threads.append(th)
    for th in threads:
        th.join()
    stop.set()
    t.join()
    for c in clients:
        c.close()
    for snap in snapshots:
        assert snap["edge_count"] + snap["cloud_count"] == snap["requests"]
    assert gateway.stats()["requests"] == 100


def test_cloud_unreachable_falls_back_to_edge(tmp_path):
    policy = PolicyConfig(kind=PolicyKind.PREDICTIVE, edge=EDGE, cloud=CLOUD,
                          length_model=LM)
    gateway = GatewayServer(GatewayConfig(
        host="127.0.0.1", port=0, policy=policy, bandwidth=BW,
        estimator_init=TxEstimator(ewma_alpha=1.0, initial_rtt=1.0),
        cloud_host="127.0.0.1", cloud_port=1,  # nothing listens here
        log_path=None))
    start_in_thread(gateway)
    client = Client(gateway.server_address)
    try:
        reply = client.call({"id": "q", "n": 120, "m_true": 110})
        assert reply["target"] == "cloud"  # the decision itself
        assert reply.get("cloud_unreachable") is True
    finally:
        client.close()
        gateway.shutdown()
        gateway.server_close()


def test_replay_equivalence(stack):
    gateway, _, log_path, policy = stack
    client = Client(gateway.server_address)
    try:
        for i in range(200):
            client.call({"id": str(i), "n": 2 + (i * 7) % 130})
    finally:
        client.close()
    matches, total = replay_decisions(log_path, policy, BW)
    assert total == 200
    assert matches == total
