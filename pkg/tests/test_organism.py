"""Organism registry, lift queries, and rigid-body motion.

The registry tests cross-check merge/split bookkeeping against a small
union-find written here in the test, so the two sides share no code: the
implementation walks components with BFS, the oracle with path compression.
"""

import math

import pytest
from hypothesis import given, strategies as st

from orgsim.docking import DockPhase, DockPort, Face
from orgsim.energy import Tariff
from orgsim.errors import CommandError, ProtocolError
from orgsim.geometry import Pose
from orgsim.organism import (LiftQuery, OrganismRegistry, Translate, Turn,
                             center_of_mass, edge_key, lift_feasible,
                             lift_torque_nm, organism_move, reach_height,
                             scout_carry_configuration, worst_case_chain)
from orgsim.robot_model import (Health, ModuleClass, make_module_spec,
                                new_module_state)
from orgsim.world import TerrainClass

TARIFF = Tariff()

SCOUT = make_module_spec(ModuleClass.SCOUT)
BACKBONE = make_module_spec(ModuleClass.BACKBONE)
WHEEL = make_module_spec(ModuleClass.ACTIVE_WHEEL)


def docked_pair(a: int, b: int, fa=Face.NORTH, fb=Face.SOUTH):
    pa = DockPort(owner=a, face=fa, phase=DockPhase.DOCKED)
    pb = DockPort(owner=b, face=fb, phase=DockPhase.DOCKED)
    pa.peer, pb.peer = pb, pa
    return pa, pb


# -- registry vs union-find oracle ----------------------------------------


def uf_components(ids, pairs):
    parent = {i: i for i in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    comps = {}
    for i in ids:
        comps.setdefault(find(i), set()).add(i)
    return list(comps.values())


N_MODULES = 7
ALL_PAIRS = [(a, b) for a in range(N_MODULES) for b in range(a + 1, N_MODULES)]


@given(st.lists(st.integers(0, len(ALL_PAIRS) - 1), max_size=40))
def test_registry_tracks_components_exactly(toggles):
    reg = OrganismRegistry()
    live = {}  # (a, b) -> EdgeKey
    for t in toggles:
        a, b = ALL_PAIRS[t]
        if (a, b) in live:
            reg.remove_edge(live.pop((a, b)))
        else:
            pa, pb = docked_pair(a, b)
            reg.register_edge(pa, pb)
            live[(a, b)] = edge_key(pa, pb)

        expected = {min(c): c for c in
                    uf_components(range(N_MODULES), live) if len(c) > 1}
        got = {oid: set(org.nodes) for oid, org in reg.organisms.items()}
        assert got == expected
        for oid, org in reg.organisms.items():
            assert org.id == min(org.nodes) == oid
            want_edges = {k for (pa_, pb_), k in live.items()
                          if pa_ in org.nodes and pb_ in org.nodes}
            assert org.edges == want_edges
        for mid in range(N_MODULES):
            org = reg.organism_of(mid)
            if any(mid in c for c in expected.values()):
                assert org is not None and mid in org.nodes
            else:
                assert org is None


def test_edge_key_is_order_independent():
    pa, pb = docked_pair(4, 2)
    assert edge_key(pa, pb) == edge_key(pb, pa) == ((2, "S"), (4, "N"))


def test_register_requires_docked_mutually_peered_ports():
    pa = DockPort(owner=0, face=Face.NORTH, phase=DockPhase.LOCKING)
    pb = DockPort(owner=1, face=Face.SOUTH, phase=DockPhase.LOCKING)
    reg = OrganismRegistry()
    with pytest.raises(ProtocolError):
        reg.register_edge(pa, pb)
    pa.phase = pb.phase = DockPhase.DOCKED  # still not peered
    with pytest.raises(ProtocolError):
        reg.register_edge(pa, pb)


def test_merge_event_reports_absorbed_organisms():
    reg = OrganismRegistry()
    ev = reg.register_edge(*docked_pair(0, 1))
    assert (ev.organism_id, ev.absorbed, ev.nodes) == (0, (), (0, 1))
    reg.register_edge(*docked_pair(2, 3))
    ev = reg.register_edge(*docked_pair(1, 2))
    assert (ev.organism_id, ev.absorbed, ev.nodes) == (0, (2,), (0, 1, 2, 3))


def test_merge_smaller_newcomer_takes_over_the_id():
    reg = OrganismRegistry()
    reg.register_edge(*docked_pair(1, 2))
    ev = reg.register_edge(*docked_pair(0, 1))
    assert ev.organism_id == 0
    assert ev.absorbed == (1,)


def test_loop_closing_edge_is_not_a_merge():
    reg = OrganismRegistry()
    reg.register_edge(*docked_pair(0, 1))
    reg.register_edge(*docked_pair(1, 2))
    ev = reg.register_edge(*docked_pair(0, 2, Face.EAST, Face.WEST))
    assert ev.absorbed == ()
    assert len(reg.organisms[0].edges) == 3
    # removing one loop edge keeps the organism whole
    sp = reg.remove_edge(((0, "N"), (1, "S")))
    assert (sp.survivors, sp.dissolved) == ((0,), ())


def test_split_events():
    reg = OrganismRegistry()
    reg.register_edge(*docked_pair(0, 1))
    reg.register_edge(*docked_pair(1, 2))
    sp = reg.remove_edge(((0, "N"), (1, "S")))
    assert (sp.organism_id, sp.survivors, sp.dissolved) == (0, (1,), (0,))
    sp = reg.remove_edge(((1, "N"), (2, "S")))
    assert (sp.organism_id, sp.survivors, sp.dissolved) == (1, (), (1, 2))
    assert reg.organisms == {}
    with pytest.raises(ValueError):
        reg.remove_edge(((0, "N"), (1, "S")))


def test_drop_module_strips_every_touching_edge():
    reg = OrganismRegistry()
    reg.register_edge(*docked_pair(0, 1))
    reg.register_edge(*docked_pair(1, 2))
    events = reg.drop_module(1)
    assert len(events) == 2
    assert reg.organisms == {}
    assert reg.drop_module(1) == []  # already alone


# -- mass and lift --------------------------------------------------------


def test_center_of_mass_weights_by_mass():
    heavy = make_module_spec(ModuleClass.SCOUT, {"mass": 3.0})
    states = {0: new_module_state(0, SCOUT, Pose(0.0, 0.0, 0)),
              1: new_module_state(1, heavy, Pose(1.0, 0.0, 0))}
    specs = {0: SCOUT, 1: heavy}
    cx, cy = center_of_mass([0, 1], states, specs)
    assert (cx, cy) == pytest.approx((0.75, 0.0))
    with pytest.raises(ValueError):
        center_of_mass([], states, specs)


def test_lift_torque_oracle_values():
    # chain of unit masses on 0.10 m pitch: g * edge * (1 + 2 + ... + n)
    specs = {i: SCOUT for i in range(4)}
    two = LiftQuery(pivot=0, pivot_dof=0, chain=(1, 2))
    three = LiftQuery(pivot=0, pivot_dof=0, chain=(1, 2, 3))
    assert lift_torque_nm(two, specs) == pytest.approx(2.943)
    assert lift_torque_nm(three, specs) == pytest.approx(5.886)


def test_lift_feasibility_by_class():
    scout_specs = {i: SCOUT for i in range(4)}
    assert lift_feasible(LiftQuery(0, 0, (1, 2)), scout_specs)          # 2.943 <= 3
    assert not lift_feasible(LiftQuery(0, 0, (1, 2, 3)), scout_specs)   # 5.886 > 3
    bb_base = {0: BACKBONE, 1: SCOUT, 2: SCOUT, 3: SCOUT}
    assert lift_feasible(LiftQuery(0, 0, (1, 2, 3)), bb_base)           # 5.886 <= 7
    with pytest.raises(ValueError):
        lift_feasible(LiftQuery(0, 1, (1,)), bb_base)  # backbone has one joint


def chain_org(reg_ids):
    reg = OrganismRegistry()
    for a, b in zip(reg_ids, reg_ids[1:]):
        reg.register_edge(*docked_pair(a, b))
    return reg.organisms[min(reg_ids)]


def test_reach_singleton_is_one_edge():
    assert reach_height(None, {5: SCOUT}, singleton=5) == pytest.approx(0.10)
    with pytest.raises(ValueError):
        reach_height(None, {5: SCOUT})


def test_reach_designated_stack_is_all_or_nothing():
    org = chain_org([0, 1, 2, 3])
    scouts = {i: SCOUT for i in range(4)}
    mixed = {0: BACKBONE, 1: SCOUT, 2: SCOUT, 3: SCOUT}
    # scout base cannot hold three above; the stack stays flat
    assert reach_height(org, scouts, stack=(0, 1, 2, 3)) == pytest.approx(0.10)
    assert reach_height(org, mixed, stack=(0, 1, 2, 3)) == pytest.approx(0.40)
    assert reach_height(org, scouts, stack=(0, 1, 2)) == pytest.approx(0.30)
    with pytest.raises(ValueError):
        reach_height(org, scouts, stack=())


def test_reach_search_finds_the_best_erectable_chain():
    org = chain_org([0, 1, 2, 3])
    scouts = {i: SCOUT for i in range(4)}
    # all-scout 4-chain: no pivot can lift 3, but any end can lift 2
    assert reach_height(org, scouts) == pytest.approx(0.30)
    one_backbone = {0: BACKBONE, 1: SCOUT, 2: SCOUT, 3: SCOUT}
    assert reach_height(org, one_backbone) == pytest.approx(0.40)


def test_worst_case_chain_hangs_the_long_side():
    org = chain_org([0, 1, 2, 3])
    assert worst_case_chain(org, 1) == (2, 3)
    assert worst_case_chain(org, 0) == (1, 2, 3)
    assert worst_case_chain(org, 3) == (2, 1, 0)


# -- rigid motion ---------------------------------------------------------


def plain(x, y):
    return TerrainClass.PLAIN


def two_scouts(heading=0.0):
    reg = OrganismRegistry()
    reg.register_edge(*docked_pair(0, 1))
    org = reg.organisms[0]
    states = {0: new_module_state(0, SCOUT, Pose(0.0, 0.0, heading)),
              1: new_module_state(1, SCOUT, Pose(0.1, 0.0, heading))}
    specs = {0: SCOUT, 1: SCOUT}
    return org, states, specs


def test_translate_moves_rigidly_and_caps_speed():
    org, states, specs = two_scouts()
    specs = {0: SCOUT, 1: BACKBONE}
    states[1].module_class = ModuleClass.BACKBONE
    res = organism_move(org, states, specs, Translate(1.0, 0.0), 10.0,
                        plain, TARIFF)
    assert not res.blocked
    # slowest ground member is the screw drive at 0.06 m/s
    assert res.poses[0].x == pytest.approx(0.6)
    assert res.poses[1].x == pytest.approx(0.7)
    assert res.poses[0].heading == 0.0
    d_old = states[0].pose.distance_to(states[1].pose)
    d_new = res.poses[0].distance_to(res.poses[1])
    assert abs(d_old - d_new) < 1e-12


def test_turn_rotates_about_the_center_of_mass():
    org, states, specs = two_scouts()
    res = organism_move(org, states, specs, Turn(90.0), 1.0, plain, TARIFF)
    assert res.poses[0].x == pytest.approx(0.05)
    assert res.poses[0].y == pytest.approx(-0.05)
    assert res.poses[1].x == pytest.approx(0.05)
    assert res.poses[1].y == pytest.approx(0.05)
    assert res.poses[0].heading == pytest.approx(90.0)
    d_new = res.poses[0].distance_to(res.poses[1])
    assert abs(d_new - 0.1) < 1e-9


def test_turn_rate_capped_by_rim_speed():
    org, states, specs = two_scouts()
    states[1].pose = Pose(2.0, 0.0, 0.0)  # r_max = 1.0 around the midpoint
    res = organism_move(org, states, specs, Turn(90.0), 10.0, plain, TARIFF)
    # cap 0.125 m/s * 10 s over a 1.0 m radius = 1.25 rad of arc
    assert res.poses[1].heading == pytest.approx(math.degrees(1.25))


def test_sideways_translation_needs_scout_carry():
    org, states, _ = two_scouts()
    specs = {0: SCOUT, 1: BACKBONE}
    states[1].module_class = ModuleClass.BACKBONE
    with pytest.raises(CommandError):
        organism_move(org, states, specs, Translate(0.0, 0.05), 10.0,
                      plain, TARIFF)


def test_scout_carry_configuration_and_sideways_motion():
    reg = OrganismRegistry()
    reg.register_edge(*docked_pair(0, 1))
    reg.register_edge(*docked_pair(1, 2))
    org = reg.organisms[0]
    specs = {0: SCOUT, 1: SCOUT, 2: BACKBONE}
    states = {0: new_module_state(0, SCOUT, Pose(0.0, 0.0, 0)),
              1: new_module_state(1, SCOUT, Pose(0.1, 0.0, 0)),
              2: new_module_state(2, BACKBONE, Pose(0.05, 0.0, 0))}
    states[2].carried = True
    assert scout_carry_configuration(org, states)
    res = organism_move(org, states, specs, Translate(0.0, 0.05), 10.0,
                        plain, TARIFF)
    assert not res.blocked
    assert res.poses[0].y == pytest.approx(0.5)
    # the rider is billed nothing; the walkers split its freight evenly
    assert res.energy_j[2] == 0.0
    raw = TARIFF.locomotion_j_per_m_kg * 0.5 * 1.0
    assert res.energy_j[0] == pytest.approx(raw * 1.5)
    assert res.energy_j[1] == pytest.approx(raw * 1.5)
    states[2].carried = False
    assert not scout_carry_configuration(org, states)


def test_blocked_member_freezes_the_whole_body():
    def walled(x, y):
        return TerrainClass.PLAIN if x < 0.55 else None
    org, states, specs = two_scouts()
    res = organism_move(org, states, specs, Translate(0.125, 0.0), 10.0,
                        walled, TARIFF)
    assert res.blocked
    assert res.poses[0] == states[0].pose and res.poses[1] == states[1].pose
    assert set(res.energy_j.values()) == {0.0}


def test_carried_module_ignores_soft_terrain_but_not_walls():
    def rough_north(x, y):
        return TerrainClass.ROUGH if y > 0.25 else TerrainClass.PLAIN
    reg = OrganismRegistry()
    reg.register_edge(*docked_pair(0, 1))
    reg.register_edge(*docked_pair(1, 2))
    org = reg.organisms[0]
    specs = {0: SCOUT, 1: SCOUT, 2: BACKBONE}
    states = {0: new_module_state(0, SCOUT, Pose(0.0, 0.0, 0)),
              1: new_module_state(1, SCOUT, Pose(0.1, 0.0, 0)),
              2: new_module_state(2, BACKBONE, Pose(0.05, 0.5, 0))}
    states[2].carried = True
    res = organism_move(org, states, specs, Translate(0.05, 0.0), 10.0,
                        rough_north, TARIFF)
    assert not res.blocked  # rider crosses rough ground it could never walk
    def obstacle_north(x, y):
        return TerrainClass.OBSTACLE if y > 0.25 else TerrainClass.PLAIN
    res = organism_move(org, states, specs, Translate(0.05, 0.0), 10.0,
                        obstacle_north, TARIFF)
    assert res.blocked


def test_ground_member_respects_its_own_traversability():
    def rough_east(x, y):
        return TerrainClass.ROUGH if x > 0.3 else TerrainClass.PLAIN
    org, states, _ = two_scouts()
    specs = {0: SCOUT, 1: BACKBONE}
    states[1].module_class = ModuleClass.BACKBONE
    res = organism_move(org, states, specs, Translate(0.06, 0.0), 10.0,
                        rough_east, TARIFF)
    assert res.blocked  # the screw module cannot enter rough ground


def test_dead_member_must_be_carried():
    org, states, specs = two_scouts()
    states[1].health = Health.HARDWARE_DEAD
    with pytest.raises(CommandError):
        organism_move(org, states, specs, Translate(0.05, 0.0), 10.0,
                      plain, TARIFF)
    states[1].carried = True
    res = organism_move(org, states, specs, Translate(0.05, 0.0), 10.0,
                        plain, TARIFF)
    assert not res.blocked


def test_no_ground_contact_is_an_error():
    org, states, specs = two_scouts()
    states[0].carried = True
    states[1].carried = True
    with pytest.raises(CommandError):
        organism_move(org, states, specs, Translate(0.05, 0.0), 10.0,
                      plain, TARIFF)


def test_zero_commands_are_free_no_ops():
    org, states, specs = two_scouts()
    for cmd in (Translate(0.0, 0.0), Turn(0.0)):
        res = organism_move(org, states, specs, cmd, 10.0, plain, TARIFF)
        assert not res.blocked
        assert res.poses[0] == states[0].pose
        assert set(res.energy_j.values()) == {0.0}
    with pytest.raises(ValueError):
        organism_move(org, states, specs, Turn(1.0), 0.0, plain, TARIFF)
    with pytest.raises(CommandError):
        organism_move(org, states, specs, "sideways", 10.0, plain, TARIFF)
