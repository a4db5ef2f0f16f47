import os
from pathlib import Path

import pytest

import irsnic

ROOT = Path(os.environ.get("IRS_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def test_forward_scenario_file():
    text = (ROOT / "scenarios" / "filtered_flow.txt").read_text()
    r = irsnic.forward(text)
    assert r["ok"]
    assert r["lines"]["rx_queue.2"] == "500"
    assert r["lines"]["violations"] == "0"


def test_forward_is_deterministic():
    text = "ring_size 64\nbudget 8\ninject 0 200 60-900 random\n"
    assert irsnic.forward(text)["text"] == irsnic.forward(text)["text"]


def test_parse_error_carries_code():
    with pytest.raises(irsnic.IrsError, match="ParseError"):
        irsnic.forward("bogus 1\n")


def test_bugcorpus_and_membench():
    bugs = irsnic.bugcorpus()
    assert bugs["ok"]
    assert bugs["lines"]["passed"] == bugs["lines"]["cases"]
    bench = irsnic.membench(20, 2)
    assert bench["lines"]["reclaimed"] == "1"


def test_conformance_kills_every_mutation():
    r = irsnic.conformance(str(ROOT))
    assert r["failures"] == 0
    assert r["assertions"] >= 20
    assert r["mutations"] and all(killed for _, killed in r["mutations"])


def test_nic_round_trip():
    nic = irsnic.Nic(rx_queues=2, tx_queues=1, ring_size=64)
    nic.enable_rx(0)
    nic.enable_rx(1)
    nic.enable_tx(0)
    h = nic.add_filter(1, "10.0.0.1", "10.0.0.2", 5000, 6000, "udp")
    for seq in range(5):
        nic.inject(irsnic.build_packet("10.0.0.1", "10.0.0.2", 5000, 6000, "udp", seq, 128))
    nic.step(16)
    got = nic.receive(1, 16)
    assert [irsnic.parse_sequence(p) for p in got] == list(range(5))
    assert nic.receive(0, 16) == []
    assert nic.send(0, got) == 5
    nic.step(16)
    assert nic.transmitted == 5
    with pytest.raises(irsnic.IrsError, match="StateConflict"):
        nic.configure_rss([1])
    nic.remove_filter(h)
    assert nic.filter_count() == 0
    nic.configure_rss([0, 1])
    assert nic.rx_state(1) == "Rss"
    assert nic.violations() == []
