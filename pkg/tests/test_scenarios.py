import dataclasses
import json

import pytest
from hypothesis import given, settings, strategies as st

from gridflow.analysis import summarize
from gridflow.network import BranchKind, ParseError, glover5
from gridflow.scenarios import (
    ActionRejected,
    AddBranch,
    AddShunt,
    RemoveBranch,
    ScaleLoad,
    SetLoad,
    SetShuntQ,
    SetTap,
    action_from_dict,
    action_to_dict,
    apply_actions,
    grid_values,
    load_scenario,
    load_shed_sweep,
    run_scenario,
    run_scenario_file,
    shunt_sweep,
    tap_sweep,
)
from gridflow.network import ShuntDevice

OUTAGE = (RemoveBranch(2, 5),)


@pytest.fixture(scope="module")
def base():
    return glover5()


def test_add_shunt(base):
    net = apply_actions(base, [AddShunt(ShuntDevice(2, 1.9))])
    assert net.shunts == (ShuntDevice(2, 1.9),)
    again = apply_actions(net, [SetShuntQ(2, 1.0)])
    assert again.shunts[0].q_nominal == 1.0


def test_remove_then_add_restores_branch_set(base):
    br = next(b for b in base.branches if b.connects(2, 5))
    net = apply_actions(base, [RemoveBranch(2, 5), AddBranch(br)])
    assert sorted(net.branches, key=lambda b: b.key) == sorted(base.branches, key=lambda b: b.key)


def test_base_is_untouched(base):
    before = dataclasses.replace(base)
    apply_actions(base, [RemoveBranch(2, 5), AddShunt(ShuntDevice(2, 1.9)), ScaleLoad(2, 0.5)])
    assert base == before


def test_rejections(base):
    with pytest.raises(ActionRejected):
        apply_actions(base, [SetTap(2, 4, 1.05)])
    with pytest.raises(ActionRejected):
        apply_actions(base, [SetTap(5, 1, 2.0)])
    with pytest.raises(ActionRejected):
        apply_actions(base, [RemoveBranch(1, 2)])
    with pytest.raises(ActionRejected):
        apply_actions(base, [ScaleLoad(9, 0.5)])
    with pytest.raises(ActionRejected):
        apply_actions(base, [SetShuntQ(2, 1.0)])
    with pytest.raises(ActionRejected):
        apply_actions(base, [AddBranch(base.branches[0])])


def test_load_actions(base):
    net = apply_actions(base, [ScaleLoad(2, 0.5)])
    assert (net.bus(2).p_load, net.bus(2).q_load) == (4.0, 1.4)
    net = apply_actions(base, [SetLoad(2, 1.0, 0.5)])
    assert (net.bus(2).p_load, net.bus(2).q_load) == (1.0, 0.5)


def test_shunt_scenario(base):
    rep = run_scenario(base, [AddShunt(ShuntDevice(2, 1.9))])
    assert rep.converged
    assert rep.v(2) == pytest.approx(0.952, abs=0.005)
    assert rep.total_loss_mw == pytest.approx(25.68, abs=0.05)
    assert rep.dloss_mw == pytest.approx(25.68 - 34.84, abs=0.05)
    assert rep.dv[2] > 0


def test_parallel_transformer_shares_equally(base):
    tx = next(b for b in base.branches if b.connects(1, 5))
    rep = run_scenario(base, [AddBranch(dataclasses.replace(tx, circuit=2))])
    assert rep.loading_pct["5-1"] == pytest.approx(rep.loading_pct["5-1#2"], abs=1e-9)


def test_outage_does_not_raise(base):
    rep = run_scenario(base, OUTAGE)
    assert not rep.converged and rep.failure and rep.failure_trace
    assert rep.to_dict()["converged"] is False


def test_determinism(base):
    a = run_scenario(base, [AddShunt(ShuntDevice(2, 1.9))]).to_dict()
    b = run_scenario(base, [AddShunt(ShuntDevice(2, 1.9))]).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_shunt_sweep_consistency(base):
    pts = shunt_sweep(base, 2, [0.0, 1.9])
    plain = run_scenario(base, [])
    single = run_scenario(base, [AddShunt(ShuntDevice(2, 1.9))])
    assert pts[0][1].v(2) == plain.v(2) and pts[0][1].actions == ()
    assert pts[1][1].v(2) == single.v(2)
    assert pts[1][1].total_loss_mw == single.total_loss_mw


def test_shunt_sweep_parallel_matches_serial(base):
    qs = [0.5, 1.0, 1.5, 1.9]
    serial = [r.v(2) for _, r in shunt_sweep(base, 2, qs)]
    par = [r.v(2) for _, r in shunt_sweep(base, 2, qs, parallel=4)]
    assert serial == par


def test_outaged_shunt_sweep_never_recovers(base):
    outaged = apply_actions(base, OUTAGE)
    for _, r in shunt_sweep(outaged, 2, [1.9, 20.0, 40.0]):
        assert not r.converged or r.v(2) < 0.3


def test_outaged_case_recovers_only_in_a_middle_band(base):
    outaged = apply_actions(base, OUTAGE)
    v = {q: r.v(2) for q, r in shunt_sweep(outaged, 2, [5.0, 6.0, 9.0, 12.0, 12.5])}
    assert v[5.0] is None and v[12.5] is None
    assert all(v[q] is not None and v[q] > 0.95 for q in (6.0, 9.0, 12.0))


def test_grid_values():
    assert grid_values(0.85, 1.15, 0.01)[-1] == 1.15 and len(grid_values(0.85, 1.15, 0.01)) == 31
    assert grid_values(0.9, 1.0, 0.5) == [0.9]
    with pytest.raises(ValueError):
        grid_values(0.9, 1.0, 0.0)


def test_tap_sweep_degenerate_grid(base):
    res = tap_sweep(base, [(5, 1)], (0.95, 1.0), 0.5, target_bus=2, target_v=0.0)
    assert [p.taps for p in res.grid] == [(0.95,)]


def test_tap_sweep_unconstrained_is_global_min_loss(base):
    res = tap_sweep(base, [(5, 1), (4, 3)], (0.9, 1.1), 0.05, target_bus=2, target_v=0.0, objective="min_loss")
    losses = [p.loss_mw for p in res.grid if p.converged]
    assert res.best.loss_mw == min(losses)


def test_tap_sweep_rejects_lines(base):
    with pytest.raises(ActionRejected):
        tap_sweep(base, [(2, 4)], target_bus=2)


def test_load_shed_trivial_and_infeasible(base):
    assert load_shed_sweep(base, 2, target_v=0.5).min_shed_pct == 0
    res = load_shed_sweep(base, 2, target_v=1.2, step_pct=10)
    assert not res.feasible and res.min_shed_pct is None
    with pytest.raises(ActionRejected):
        load_shed_sweep(base, 4)


def test_intact_load_shed(base):
    res = load_shed_sweep(base, 2)
    assert res.min_shed_pct == 29.0


def test_outaged_load_shed(base):
    res = load_shed_sweep(apply_actions(base, OUTAGE), 2)
    assert res.min_shed_pct == 66.0
    v = {pct: r.v(2) for pct, r in res.points}
    assert v[65.0] == pytest.approx(0.9496, abs=1e-4)
    assert v[66.0] >= 0.95


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(60, 100), min_size=2, max_size=5, unique=True))
def test_shed_monotone_on_outaged_case(pcts):
    outaged = apply_actions(glover5(), OUTAGE)
    volts = []
    for pct in sorted(pcts):
        r = run_scenario(outaged, [ScaleLoad(2, 1 - pct / 100)])
        if r.converged:
            volts.append(r.v(2))
    assert volts == sorted(volts)


def test_action_dict_round_trip(base):
    acts = [
        RemoveBranch(2, 5),
        AddBranch(dataclasses.replace(base.branches[0], circuit=2)),
        AddShunt(ShuntDevice(2, 1.9)),
        SetShuntQ(2, 1.0),
        SetTap(5, 1, 1.05),
        ScaleLoad(2, 0.5),
        SetLoad(2, 1.0, 0.2),
    ]
    for a in acts:
        assert action_from_dict(json.loads(json.dumps(action_to_dict(a)))) == a
    with pytest.raises(ParseError):
        action_from_dict({"type": "Explode"})
    with pytest.raises(ParseError):
        action_from_dict({"type": "ScaleLoad", "bus": 2})


def test_scenario_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"name": "cap", "actions": [{"type": "AddShunt", "bus": 2, "q_nominal": 1.9}]}))
    doc = run_scenario_file(load_scenario(p))
    assert doc["ok"] and doc["report"]["name"] == "cap"
    p.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ParseError):
        load_scenario(p)


def test_scenario_conserves_power(base):
    rep = run_scenario(base, [AddShunt(ShuntDevice(2, 1.9))])
    s = summarize(rep.network, rep.solution)
    assert abs(s.imbalance) < 1e-6
    assert BranchKind.TRANSFORMER in {b.kind for b in rep.network.branches}
