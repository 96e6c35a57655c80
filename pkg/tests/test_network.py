import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from gridflow.network import (
    BranchKind,
    BusKind,
    ParseError,
    ValidationError,
    base_current_amps,
    dump_case,
    glover5,
    load_case,
    network_from_dict,
    network_to_dict,
    parse_case,
    validate,
)

from netgen import random_network


def glover_doc():
    return network_to_dict(glover5())


def test_glover5_shape():
    net = glover5()
    assert len(net.buses) == 5
    kinds = [br.kind for br in net.branches]
    assert kinds.count(BranchKind.LINE) == 3
    assert kinds.count(BranchKind.TRANSFORMER) == 2
    assert net.slack.id == 1
    assert net.bus(3).kind is BusKind.PV and net.bus(3).v_setpoint == 1.05


def test_two_slack_buses_rejected_naming_both():
    doc = glover_doc()
    doc["buses"][2]["kind"] = "Slack"
    with pytest.raises(ValidationError) as exc:
        network_from_dict(doc)
    msg = str(exc.value)
    assert "1" in msg and "3" in msg and "Slack" in msg


def test_line_zero_sequence_defaults_to_three_times_positive():
    br = next(b for b in glover5().branches if b.connects(2, 4))
    assert br.r0 == pytest.approx(0.027)
    assert br.x0 == pytest.approx(0.300)
    assert br.b0_charging == br.b_charging


def test_base_current():
    net = glover5()
    assert base_current_amps(net, 2) == pytest.approx(167.35, abs=0.01)
    assert base_current_amps(net, 1) == pytest.approx(3849.0, abs=0.1)
    half = net.replace(s_base=50.0)
    assert base_current_amps(half, 2) == pytest.approx(base_current_amps(net, 2) / 2)


def test_glover5_validates_clean():
    rep = validate(glover5())
    assert rep.ok and rep.errors == []


def test_unresolved_endpoint():
    doc = glover_doc()
    doc["branches"][0]["to_bus"] = 9
    with pytest.raises(ValidationError, match="unresolved endpoint 9"):
        network_from_dict(doc)


def test_disconnected_bus_is_a_warning():
    doc = glover_doc()
    doc["branches"] = [b for b in doc["branches"] if 2 not in (b["from_bus"], b["to_bus"])]
    net = network_from_dict(doc)
    rep = validate(net)
    assert rep.ok
    assert any("bus 2 disconnected" in w for w in rep.warnings)


def test_unknown_key_rejected():
    doc = glover_doc()
    doc["buses"][0]["colour"] = "red"
    with pytest.raises(ParseError, match="colour"):
        network_from_dict(doc)


def test_malformed_json_reports_line():
    with pytest.raises(ParseError, match="line 2"):
        parse_case('{\n  "s_base_mva": ,\n}')


def test_tap_on_line_rejected():
    doc = glover_doc()
    doc["branches"][0]["tap"] = 1.05
    with pytest.raises(ValidationError, match="tap"):
        network_from_dict(doc)


def test_embedded_and_file_agree(tmp_path):
    p = tmp_path / "case.json"
    p.write_text(dump_case(glover5()))
    assert load_case(p) == load_case("@glover5")


def test_unknown_embedded_case():
    with pytest.raises(ParseError):
        load_case("@nope")


def _close(a, b):
    if isinstance(a, float) and isinstance(b, float):
        return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k]) for k in a)
    if isinstance(a, list):
        return len(a) == len(b) and all(_close(x, y) for x, y in zip(a, b))
    return a == b


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_round_trip(seed, n):
    net = random_network(seed, n)
    again = parse_case(dump_case(net))
    # angles travel in degrees, so compare documents rather than raw radians
    assert _close(network_to_dict(again), network_to_dict(net))
    assert json.loads(dump_case(again)) == json.loads(dump_case(parse_case(dump_case(again))))
