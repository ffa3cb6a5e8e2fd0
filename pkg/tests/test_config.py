"""Scenario file parsing, derived quantities, and semantic validation."""

import pytest

from orgsim.config import (SECONDS_PER_DAY, SpawnSpec, load_scenario,
                           load_scenario_file, validate_scenario)
from orgsim.errors import ConfigError
from orgsim.robot_model import Health, ModuleClass

MAP = """\
cellsize 0.25
######
#....#
#GG..#
######
socket 0 1 1 0.3 20
socket 1 4 1 0.3 10
"""

FULL = """\
[run]
name = bench
days = 3
dt = 10 ; seconds per tick
seed = 42

[energy]
idle_w = 0.4
coprocessor_w = 1.5
locomotion_j_per_m_kg = 2.5
actuation_j_per_nm_rad = 0.8
lock_j = 4.0
recharge_efficiency = 0.85
share_rate_w = 40
contact_range_m = 0.12
hazard_rate = 0.0001
credit_log = yes

[schedule]
mode = rotating
active_count = 1
dwell_min = 100
dwell_max = 200

[roster]
scout = 2
backbone = 1
active_wheel = 1

[modules]
mass = 1.2
edge_length = 0.11
battery_capacity = 18000
start_fraction = 0.5

[controllers]
all = seek_energy, explore
scout = explore
emergency_fraction = 0.2

[sensing]
range_m = 4.0
radio_range_m = 8.0

[spawns]
mode = fixed
0 = 0.3 0.3 0
1 = 0.6 0.3 90 battery=0.25
2 = 0.9 0.3 180 health=energy_dead
3 = 1.2 0.3 270 battery=1.0 health=ok

[output]
log = no
"""


def load(text, **kw):
    kw.setdefault("map_text", MAP)
    return load_scenario(text, **kw)


# -- parsing --------------------------------------------------------------


def test_full_file_round_trip():
    cfg = load(FULL)
    assert cfg.name == "bench"
    assert (cfg.days, cfg.dt, cfg.seed) == (3.0, 10.0, 42)
    assert cfg.tariff.idle_w == 0.4
    assert cfg.tariff.coprocessor_w == 1.5
    assert cfg.tariff.locomotion_j_per_m_kg == 2.5
    assert cfg.tariff.actuation_j_per_nm_rad == 0.8
    assert cfg.tariff.lock_j == 4.0
    assert cfg.tariff.recharge_efficiency == 0.85
    assert cfg.tariff.share_rate_w == 40.0
    assert cfg.contact_range_m == 0.12
    assert cfg.hazard_rate == 0.0001
    assert cfg.credit_log is True
    assert cfg.schedule_mode == "rotating"
    assert (cfg.active_count, cfg.dwell_min, cfg.dwell_max) == (1, 100, 200)
    assert cfg.roster == {ModuleClass.SCOUT: 2, ModuleClass.BACKBONE: 1,
                          ModuleClass.ACTIVE_WHEEL: 1}
    assert cfg.module_overrides == {"mass": 1.2, "edge_length": 0.11,
                                    "battery_capacity": 18000.0}
    assert cfg.start_fraction == 0.5
    assert cfg.controllers_all == ["seek_energy", "explore"]
    assert cfg.controllers_by_class == {ModuleClass.SCOUT: ["explore"]}
    assert cfg.controller_params["emergency_fraction"] == 0.2
    assert (cfg.sensing_range_m, cfg.radio_range_m) == (4.0, 8.0)
    assert cfg.spawn_mode == "fixed"
    assert cfg.log_enabled is False
    assert cfg.raw_text == FULL
    assert cfg.findings == []


def test_defaults_from_empty_file():
    cfg = load("", name_hint="blank")
    assert cfg.name == "blank"
    assert (cfg.days, cfg.dt, cfg.seed) == (1.0, 10.0, 0)
    assert cfg.tariff.idle_w == 0.5
    assert cfg.tariff.recharge_efficiency == 0.9
    assert cfg.tariff.share_rate_w == 50.0
    assert cfg.contact_range_m == 0.1
    assert cfg.hazard_rate == 0.0
    assert cfg.credit_log is False
    assert cfg.schedule_mode == "always_on"
    assert (cfg.active_count, cfg.dwell_min, cfg.dwell_max) == (0, 360, 1440)
    assert all(v == 0 for v in cfg.roster.values())
    assert cfg.module_overrides == {}
    assert cfg.start_fraction == 1.0
    assert cfg.controllers_all == []
    assert cfg.controllers_by_class == {}
    assert cfg.controller_params["emergency_fraction"] == 0.15
    assert (cfg.sensing_range_m, cfg.radio_range_m) == (5.0, 10.0)
    assert cfg.spawn_mode == "seeded"
    assert cfg.fixed_spawns == {}
    assert cfg.log_enabled is True


def test_inline_comments_are_stripped():
    cfg = load("[run]\ndays = 2 ; two full days\n")
    assert cfg.days == 2.0


def test_unknown_section_and_key_become_findings():
    cfg = load("[rnu]\ndays = 1\n[run]\ndasy = 1\n")
    assert "unknown section [rnu]" in cfg.findings
    assert "unknown key 'dasy' in [run]" in cfg.findings


def test_bad_value_raises():
    with pytest.raises(ConfigError, match="bad value for days"):
        load("[run]\ndays = soon\n")


def test_bad_boolean_raises():
    with pytest.raises(ConfigError, match="bad value for log"):
        load("[output]\nlog = maybe\n")


def test_nonpositive_dt_and_days_raise():
    with pytest.raises(ConfigError, match="dt must be positive"):
        load("[run]\ndt = 0\n")
    with pytest.raises(ConfigError, match="days must be positive"):
        load("[run]\ndays = -1\n")


def test_broken_ini_raises():
    with pytest.raises(ConfigError, match="cannot parse scenario file"):
        load("no section header here\n")


# -- map sourcing ---------------------------------------------------------


def test_map_read_from_path(tmp_path):
    (tmp_path / "room.map").write_text(MAP)
    cfg = load_scenario("[arena]\nmap = room.map\n", base_dir=tmp_path)
    assert cfg.map_ref == "room.map"
    assert cfg.map_text == MAP
    assert cfg.build_arena().width == 6


def test_map_text_kwarg_wins_for_replay():
    cfg = load_scenario("[arena]\nmap = does/not/exist.map\n", map_text=MAP)
    assert cfg.map_ref == "does/not/exist.map"
    assert cfg.map_text == MAP


def test_inline_map_without_arena_section():
    cfg = load("")
    assert cfg.map_ref == "<inline>"


def test_missing_map_raises():
    with pytest.raises(ConfigError, match=r"\[arena\] map is required"):
        load_scenario("[run]\ndays = 1\n")


def test_unreadable_map_path_raises(tmp_path):
    with pytest.raises(ConfigError, match="cannot read map"):
        load_scenario("[arena]\nmap = gone.map\n", base_dir=tmp_path)


def test_load_scenario_file_uses_stem_as_name(tmp_path):
    (tmp_path / "room.map").write_text(MAP)
    f = tmp_path / "night_shift.cfg"
    f.write_text("[arena]\nmap = room.map\n")
    cfg = load_scenario_file(f)
    assert cfg.name == "night_shift"


def test_load_scenario_file_missing_raises(tmp_path):
    with pytest.raises(ConfigError, match="cannot read scenario"):
        load_scenario_file(tmp_path / "nope.cfg")


# -- spawn lines ----------------------------------------------------------


def test_spawn_options_parse():
    cfg = load(FULL)
    assert cfg.fixed_spawns[0] == SpawnSpec(0.3, 0.3, 0.0)
    assert cfg.fixed_spawns[1] == SpawnSpec(0.6, 0.3, 90.0, 0.25)
    assert cfg.fixed_spawns[2] == SpawnSpec(0.9, 0.3, 180.0, None,
                                            Health.ENERGY_DEAD)
    assert cfg.fixed_spawns[3] == SpawnSpec(1.2, 0.3, 270.0, 1.0, Health.OK)


def test_spawn_needs_three_fields():
    with pytest.raises(ConfigError, match="at least 'x y heading'"):
        load("[spawns]\n0 = 0.3 0.3\n")


def test_spawn_option_without_equals_raises():
    with pytest.raises(ConfigError, match="bad spawn option"):
        load("[spawns]\n0 = 0.3 0.3 0 full\n")


def test_spawn_unknown_option_raises():
    with pytest.raises(ConfigError, match="unknown spawn option 'charge'"):
        load("[spawns]\n0 = 0.3 0.3 0 charge=1\n")


def test_spawn_unknown_health_raises():
    with pytest.raises(ConfigError, match="unknown health 'dead'"):
        load("[spawns]\n0 = 0.3 0.3 0 health=dead\n")


def test_spawn_key_must_be_module_id():
    with pytest.raises(ConfigError, match="spawn keys are module ids"):
        load("[spawns]\nfirst = 0.3 0.3 0\n")


# -- derived quantities ---------------------------------------------------


def test_tick_counts():
    cfg = load("[run]\ndays = 3\ndt = 10\n")
    assert cfg.total_ticks == 25920
    assert cfg.ticks_per_day == 8640

    odd = load("[run]\ndays = 0.5\ndt = 7\n")
    assert odd.total_ticks == round(0.5 * SECONDS_PER_DAY / 7)
    assert odd.ticks_per_day == round(SECONDS_PER_DAY / 7)

    coarse = load("[run]\ndays = 2\ndt = 200000\n")
    assert coarse.ticks_per_day == 1   # never reported as zero


def test_class_of_is_dense_by_declaration_order():
    cfg = load("[roster]\nscout = 2\nbackbone = 1\nactive_wheel = 1\n")
    assert cfg.module_count == 4
    got = [cfg.class_of(i) for i in range(4)]
    assert got == [ModuleClass.SCOUT, ModuleClass.SCOUT,
                   ModuleClass.BACKBONE, ModuleClass.ACTIVE_WHEEL]
    with pytest.raises(ValueError, match="beyond roster"):
        cfg.class_of(4)


def test_controllers_for_falls_back_to_all():
    cfg = load(FULL)
    assert cfg.controllers_for(ModuleClass.SCOUT) == ["explore"]
    assert cfg.controllers_for(ModuleClass.BACKBONE) == ["seek_energy",
                                                         "explore"]


# -- semantic validation --------------------------------------------------


def check(text, **kw):
    return validate_scenario(load(text, **kw))


def test_valid_scenario_has_no_findings():
    assert check(FULL) == []


def test_validate_reports_broken_map_and_stops():
    findings = check("[roster]\nscout = -1\n", map_text="..X..")
    assert len(findings) == 1
    assert findings[0].startswith("map does not load:")


def test_validate_empty_and_negative_roster():
    assert "roster is empty" in check("")
    findings = check("[roster]\nscout = -1\nbackbone = 2\n")
    assert "negative roster count for scout" in findings


def test_validate_schedule_mode_and_bounds():
    assert any("unknown schedule mode" in f
               for f in check("[schedule]\nmode = weekly\n"))
    rotating = ("[schedule]\nmode = rotating\nactive_count = {}\n"
                "dwell_min = {}\ndwell_max = {}\n")
    findings = check(rotating.format(0, 100, 200))
    assert "rotating schedule needs active_count > 0" in findings
    findings = check(rotating.format(3, 100, 200))
    assert any("exceeds the 2 sockets" in f for f in findings)
    findings = check(rotating.format(1, 300, 200))
    assert any("dwell bounds" in f for f in findings)
    assert check(rotating.format(1, 100, 200) + "[roster]\nscout = 1\n") == []


def test_validate_rates_and_fractions():
    assert any("hazard_rate" in f for f in check("[energy]\nhazard_rate = 1\n"))
    assert any("start_fraction" in f
               for f in check("[modules]\nstart_fraction = 1.5\n"))
    assert any("module override mass" in f
               for f in check("[modules]\nmass = 0\n"))
    assert any("range_m" in f for f in check("[sensing]\nrange_m = -1\n"))
    assert any("radio_range_m" in f
               for f in check("[sensing]\nradio_range_m = -1\n"))


def test_validate_unknown_controller():
    findings = check("[controllers]\nall = explore, wander\n")
    assert "unknown controller 'wander'" in findings
    findings = check("[controllers]\nscout = wander\n")
    assert "unknown controller 'wander'" in findings


def test_validate_spawn_mode_and_coverage():
    assert any("unknown spawn mode" in f
               for f in check("[spawns]\nmode = random\n"))

    base = "[roster]\nscout = 2\n[spawns]\nmode = fixed\n"
    findings = check(base + "0 = 0.3 0.3 0\n")
    assert "fixed spawns missing for modules [1]" in findings
    findings = check(base + "0 = 0.3 0.3 0\n1 = 0.6 0.3 0\n5 = 0.9 0.3 0\n")
    assert "spawns given for ids beyond the roster: [5]" in findings


def test_validate_spawn_placement():
    base = "[roster]\nscout = 1\n[spawns]\nmode = fixed\n"
    assert any("outside arena" in f for f in check(base + "0 = 9 9 0\n"))
    assert any("inside a wall" in f for f in check(base + "0 = 0.1 0.1 0\n"))
    assert any("battery 1.5 outside" in f
               for f in check(base + "0 = 0.3 0.3 0 battery=1.5\n"))


def test_validate_seeded_needs_room():
    findings = check("[roster]\nscout = 99\n")
    assert any("cannot spawn on" in f for f in findings)
