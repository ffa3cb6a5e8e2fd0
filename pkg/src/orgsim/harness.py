"""Run harness: tick pipeline, event log, metrics, replay, parameter sweeps.

The pipeline order inside one tick is fixed and documented here because
replayability depends on it: socket schedule, radio delivery and sensing,
controllers, arbitration, guard, execution in module id order, docking
advance, energy accounting, deaths, then metrics and invariants. Every line
the run emits is folded into a rolling 64-bit digest; the log also embeds
the complete scenario text and seed, so a log file alone is enough to rerun
the simulation and cross-check every line of the original.
"""

from __future__ import annotations

import math
import time
import urllib.parse
from dataclasses import dataclass
from pathlib import Path

from .behaviors import build_controllers
from .config import ScenarioConfig, load_scenario
from .control import (ActionProposal, Actuate, Dock, Drive, GuardContext, Idle,
                      InteractionChannel, InternalChannel, LocalChannel,
                      Mailbox, MessageBus, Observation, Recharge, Rejected,
                      SelfChannel, SensedModule, ToggleCoprocessor, Tow,
                      Undock, guard_action, select_action, step_controllers)
from .docking import (DockPhase, TickInput, advance_dock, attempt_align,
                      face_center, undock)
from .energy import EnergyLedger, classify_deaths, drain, recharge, share_energy
from .errors import CommandError, ConfigError, InvariantBreach, ReplayError
from .geometry import Pose
from .organism import (OrganismRegistry, Translate, Turn, edge_key,
                       organism_move, reach_height)
from .rng import Fnv1a, Rng
from .robot_model import (DriveCommand, Health, ModuleState, actuate_joint,
                          alignment_tolerance, locomotion_step,
                          make_module_spec, new_module_state)
from .world import SocketSchedule, SocketScheduler, in_graveyard, sense_sockets

LOG_VERSION = "orgsim-log v1"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _enc(text: str) -> str:
    return urllib.parse.quote(text, safe="")


def _dec(text: str) -> str:
    return urllib.parse.unquote(text)


class EventLog:
    """Append-only run record with a rolling FNV-1a digest over every line."""

    def __init__(self):
        self.lines: list[str] = []
        self._fnv = Fnv1a()
        self.event_count = 0

    def raw(self, line: str) -> None:
        self.lines.append(line)
        self._fnv.update(line + "\n")

    def event(self, tick: int, module_id: int, kind: str, **fields) -> None:
        parts = [str(tick), str(module_id), kind]
        parts.extend(f"{k}={_fmt(v)}" for k, v in fields.items())
        self.raw(" ".join(parts))
        self.event_count += 1

    @property
    def digest(self) -> str:
        return self._fnv.hexdigest()

    def save(self, path: Path) -> None:
        path.write_text("\n".join(self.lines) + "\n")


@dataclass
class RunMetrics:
    """Everything a finished run reports, mirrored into metrics text files."""

    name: str
    seed: int
    ticks: int
    dt: float
    survivors: int
    deaths_energy: int
    deaths_hardware: int
    death_ratio: float | None
    coverage: float
    disposed: int
    tasks_open: int
    merges: int
    splits: int
    rejections: dict[str, int]
    messages_posted: int
    messages_dropped: int
    initial_j: float
    drawn_j: float
    charged_j: float
    consumed_j: float
    shared_j: float
    stored_j: float
    residual_j: float
    residual_j_per_hour: float
    events: int
    digest: str
    wall_time_s: float

    def to_text(self) -> str:
        ratio = ("none" if self.death_ratio is None
                 else "inf" if math.isinf(self.death_ratio)
                 else repr(self.death_ratio))
        lines = [
            f"name {self.name}",
            f"seed {self.seed}",
            f"ticks {self.ticks}",
            f"dt {self.dt!r}",
            f"survivors {self.survivors}",
            f"deaths_energy {self.deaths_energy}",
            f"deaths_hardware {self.deaths_hardware}",
            f"death_ratio {ratio}",
            f"coverage {self.coverage:.6f}",
            f"disposed {self.disposed}",
            f"tasks_open {self.tasks_open}",
            f"merges {self.merges}",
            f"splits {self.splits}",
        ]
        for reason in sorted(self.rejections):
            lines.append(f"rejections_{reason} {self.rejections[reason]}")
        lines += [
            f"messages_posted {self.messages_posted}",
            f"messages_dropped {self.messages_dropped}",
            f"initial_j {self.initial_j!r}",
            f"drawn_j {self.drawn_j!r}",
            f"charged_j {self.charged_j!r}",
            f"consumed_j {self.consumed_j!r}",
            f"shared_j {self.shared_j!r}",
            f"stored_j {self.stored_j!r}",
            f"residual_j {self.residual_j!r}",
            f"residual_j_per_hour {self.residual_j_per_hour!r}",
            f"events {self.events}",
            f"digest {self.digest}",
            f"wall_time_s {self.wall_time_s:.3f}",
        ]
        return "\n".join(lines) + "\n"


@dataclass
class _Pairing:
    port_a: object
    port_b: object
    tow: bool
    created: int


class Simulation:
    """One seeded scenario run. Construct, then call run() exactly once."""

    def __init__(self, cfg: ScenarioConfig, seed: int | None = None):
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        self.arena = cfg.build_arena()
        self.log = EventLog()
        self.tick = 0

        master = Rng(self.seed)
        self.rng_hazards = master.substream("hazards")
        self._rng_noise = master.substream("noise")
        self._rng_placement = master.substream("placement")

        self.scheduler: SocketScheduler | None = None
        if cfg.schedule_mode == "rotating" and self.arena.sockets:
            self.scheduler = SocketScheduler(
                SocketSchedule(self.seed, cfg.dwell_min, cfg.dwell_max,
                               cfg.active_count),
                self.arena.sockets, master.substream("schedule"))
        else:
            for s in self.arena.sockets:
                s.active = True

        self.specs = {}
        self.states: dict[int, ModuleState] = {}
        self.controllers = {}
        self.controller_order = {}
        self.ledger = EnergyLedger()
        self._spawn_modules()

        self.bus = MessageBus(cfg.radio_range_m)
        self._mailboxes = {i: Mailbox(self.bus, i) for i in self.states}
        self.registry = OrganismRegistry()
        self.pairs: dict[tuple, _Pairing] = {}
        self._engaged: set[int] = set()        # id(port) of ports in a pairing
        self._reach_cache: dict[int, float] = {}
        self.visited: set[tuple[int, int]] = set()
        self.disposed: set[int] = set()
        self.deaths_energy = 0
        self.deaths_hardware = 0
        self.merges = 0
        self.splits = 0
        self.rejections: dict[str, int] = {}
        self._last_reject: dict[int, tuple] = {}
        self._last_recharge: dict[int, tuple] = {}
        self._delivered_count = 0
        self._ran = False

        # static observation pieces
        self._arena_size = (self.arena.width * self.arena.cell_size,
                            self.arena.height * self.arena.cell_size)
        if self.arena.graveyard is not None:
            x0, y0, x1, y1 = self.arena.graveyard
            cs = self.arena.cell_size
            self._yard_rect = (x0 * cs, y0 * cs, (x1 + 1) * cs, (y1 + 1) * cs)
        else:
            self._yard_rect = None

    # -- setup ------------------------------------------------------------

    def _spawn_modules(self) -> None:
        cfg = self.cfg
        n = cfg.module_count
        spawn_cells = None
        if cfg.spawn_mode == "seeded":
            cells = self.arena.walkable_cells()
            if self.arena.graveyard is not None:
                x0, y0, x1, y1 = self.arena.graveyard
                cells = [c for c in cells
                         if not (x0 <= c[0] <= x1 and y0 <= c[1] <= y1)]
            if n > len(cells):
                raise ConfigError(
                    f"{n} modules cannot spawn on {len(cells)} free cells")
            self._rng_placement.shuffle(cells)
            spawn_cells = cells[:n]

        for i in range(n):
            mc = cfg.class_of(i)
            spec = make_module_spec(mc, cfg.module_overrides or None)
            self.specs[i] = spec
            if cfg.spawn_mode == "fixed":
                sp = cfg.fixed_spawns.get(i)
                if sp is None:
                    raise ConfigError(f"no fixed spawn for module {i}")
                frac = cfg.start_fraction if sp.battery is None else sp.battery
                st = new_module_state(i, spec, Pose(sp.x, sp.y, sp.heading),
                                      battery_fraction=frac)
                if sp.health is not None:
                    st.health = sp.health
                    if sp.health is Health.ENERGY_DEAD:
                        st.battery_pj = 0
            else:
                cx, cy = spawn_cells[i]
                px, py = self.arena.cell_center(cx, cy)
                heading = self._rng_placement.uniform(0.0, 360.0)
                st = new_module_state(i, spec, Pose(px, py, heading),
                                      battery_fraction=cfg.start_fraction)
            self.states[i] = st
            self.ledger.note_initial(st.battery_pj)
            names = cfg.controllers_for(mc)
            self.controllers[i] = build_controllers(
                names, i, self._rng_noise, cfg.controller_params)
            self.controller_order[i] = {name: k for k, name in enumerate(names)}

    def _write_header(self, total_ticks: int) -> None:
        self.log.raw(f"# {LOG_VERSION}")
        self.log.raw(f"# scenario {self.cfg.name}")
        self.log.raw(f"# config {_enc(self.cfg.raw_text)}")
        self.log.raw(f"# map {_enc(self.cfg.map_text)}")
        self.log.raw(f"# seed {self.seed}")
        self.log.raw(f"# ticks {total_ticks}")
        for i in sorted(self.states):
            st = self.states[i]
            self.log.event(0, i, "spawn", cls=st.module_class.value,
                           x=st.pose.x, y=st.pose.y, heading=st.pose.heading,
                           battery=st.battery, health=st.health.value)
        for s in self.arena.sockets:
            if s.active:
                self.log.event(0, -1, "socket", id=s.id, active=True)

    # -- the tick pipeline ------------------------------------------------

    def run(self, ticks: int | None = None) -> RunMetrics:
        if self._ran:
            raise RuntimeError("a Simulation instance runs once")
        self._ran = True
        total = self.cfg.total_ticks if ticks is None else ticks
        self._write_header(total)
        started = time.perf_counter()
        for _ in range(total):
            self.tick += 1
            self._phase_schedule()
            delivered = self._phase_sense()
            selected = self._phase_decide(delivered)
            self._idle_paid: set[int] = set()
            self._phase_execute(selected)
            self._phase_docking()
            self._phase_energy()
            self._phase_death()
            self._phase_metrics()
        return self._finalize(total, time.perf_counter() - started)

    def _phase_schedule(self) -> None:
        if self.scheduler is None:
            return
        for sid, active in self.scheduler.step(self.tick):
            self.log.event(self.tick, -1, "socket", id=sid, active=active)

    def _phase_sense(self) -> dict:
        positions = {i: st.pose for i, st in self.states.items()}
        delivered = self.bus.deliver(positions)
        self._delivered_count = sum(len(v) for v in delivered.values())
        return delivered

    def _observe(self, i: int, delivered: dict) -> Observation:
        cfg = self.cfg
        st = self.states[i]
        spec = self.specs[i]
        arena = self.arena
        pose = st.pose
        my_cell = arena.cell_of(pose.x, pose.y)

        sockets = tuple(sense_sockets(pose, cfg.sensing_range_m, arena))
        others = []
        for j in sorted(self.states):
            if j == i:
                continue
            other = self.states[j]
            d = pose.distance_to(other.pose)
            if d > cfg.sensing_range_m:
                continue
            if not arena.line_of_sight(my_cell, arena.cell_of(other.pose.x,
                                                              other.pose.y)):
                continue
            others.append(SensedModule(j, other.module_class, other.pose,
                                       other.health, d))

        org = self.registry.organism_of(i)
        return Observation(
            me=SelfChannel(
                id=i, module_class=st.module_class, pose=pose,
                battery_fraction=st.battery_fraction, health=st.health,
                joint_angles=tuple(st.joint_angles),
                coprocessor_on=st.coprocessor_on, carried=st.carried),
            local=LocalChannel(
                terrain=arena.terrain_at(pose.x, pose.y),
                sockets=sockets, modules=tuple(others),
                arena_size=self._arena_size, graveyard=self._yard_rect),
            interaction=InteractionChannel(
                docked_faces=tuple(f.value for f in st.docked_faces),
                port_phases=tuple(p.phase.value for p in st.ports),
                port_peers=tuple(
                    (p.peer.owner, p.peer.face.value) if p.peer is not None
                    else None for p in st.ports),
                organism_id=org.id if org is not None else None,
                organism_size=len(org.nodes) if org is not None else 1,
                organism_reach=self._reach_of(i),
                messages=tuple(delivered.get(i, ()))),
            internal=InternalChannel(
                tick=self.tick, dt=cfg.dt, bus_load=self._delivered_count,
                outbox=self._mailboxes[i]),
        )

    def _phase_decide(self, delivered: dict) -> dict[int, ActionProposal]:
        selected = {}
        for i in sorted(self.states):
            st = self.states[i]
            if st.health is not Health.OK or not self.controllers[i]:
                continue
            obs = self._observe(i, delivered)
            proposals = step_controllers(self.controllers[i], obs)
            choice = select_action(proposals, self.controller_order[i])
            if not isinstance(choice.action, Idle):
                selected[i] = choice
        return selected

    def _phase_execute(self, selected: dict[int, ActionProposal]) -> None:
        moved_orgs: set[int] = set()
        for i in sorted(selected):
            prop = selected[i]
            st = self.states[i]
            org = self.registry.organism_of(i)
            if (isinstance(prop.action, Drive) and org is not None
                    and org.id in moved_orgs):
                # a lower id already steered this organism; guarding the
                # stale proposal against the moved body would only mislead
                continue
            ctx = GuardContext(
                state=st, spec=self.specs[i], states=self.states,
                specs=self.specs, organism=self.registry.organism_of(i),
                terrain_at=self.arena.terrain_at, dt=self.cfg.dt,
                socket_by_id=self.arena.socket_by_id)
            verdict = guard_action(prop.action, ctx)
            if isinstance(verdict, Rejected):
                self._note_rejection(i, verdict, prop.source)
                continue
            self._apply_action(i, verdict, moved_orgs)

    def _note_rejection(self, i: int, rej: Rejected, source: str) -> None:
        self.rejections[rej.reason] = self.rejections.get(rej.reason, 0) + 1
        key = (rej.reason, rej.detail)
        if self._last_reject.get(i) != key:
            self._last_reject[i] = key
            self.log.event(self.tick, i, "reject", reason=rej.reason,
                           source=source, detail=_enc(rej.detail))

    def _apply_action(self, i: int, action, moved_orgs: set[int]) -> None:
        st = self.states[i]
        spec = self.specs[i]
        cfg = self.cfg

        if isinstance(action, Drive):
            org = self.registry.organism_of(i)
            if org is None:
                cmd = DriveCommand(action.linear, action.lateral, action.angular)
                mr = locomotion_step(st, spec, cmd, self.arena.terrain_at,
                                     cfg.dt, cfg.tariff)
                st.pose = mr.pose
                drain(st, mr.energy_j, self.ledger)
                self._idle_paid.add(i)
            else:
                if org.id in moved_orgs:
                    return  # a lower id already steered this organism
                moved_orgs.add(org.id)
                self._drive_organism(i, org, action)
            return

        if isinstance(action, Actuate):
            jr = actuate_joint(st, spec, action.dof_index, action.target_deg,
                               cfg.dt, cfg.tariff)
            st.joint_angles[action.dof_index] = jr.angle
            drain(st, jr.energy_j, self.ledger)
            return

        if isinstance(action, Dock):   # Tow included
            self._start_pairing(i, action)
            return

        if isinstance(action, Undock):
            port = st.port(action.face)
            if port.phase is DockPhase.DOCKED:
                undock(port)
            return

        if isinstance(action, Recharge):
            self._do_recharge(i, action.socket_id)
            return

        if isinstance(action, ToggleCoprocessor):
            st.coprocessor_on = action.on
            return

    def _drive_organism(self, i: int, org, action: Drive) -> None:
        st = self.states[i]
        speed = math.hypot(action.linear, action.lateral)
        if speed < 1e-12:
            if action.angular == 0.0:
                return
            cmd = Turn(action.angular)
        else:
            h = math.radians(st.pose.heading)
            wx = action.linear * math.cos(h) - action.lateral * math.sin(h)
            wy = action.linear * math.sin(h) + action.lateral * math.cos(h)
            cmd = Translate(wx, wy)
        try:
            res = organism_move(org, self.states, self.specs, cmd,
                                self.cfg.dt, self.arena.terrain_at,
                                self.cfg.tariff)
        except CommandError as exc:
            self._note_rejection(i, Rejected("protocol", str(exc)), "execute")
            return
        if res.blocked:
            return
        for mid, pose in res.poses.items():
            self.states[mid].pose = pose
        for mid, joules in res.energy_j.items():
            drain(self.states[mid], joules, self.ledger)

    def _start_pairing(self, i: int, action: Dock) -> None:
        st = self.states[i]
        other = self.states[action.target_id]
        mine = st.port(action.face)
        theirs = other.port(action.target_face)
        if (id(mine) in self._engaged or id(theirs) in self._engaged
                or mine.phase is not DockPhase.FREE
                or theirs.phase is not DockPhase.FREE):
            self._note_rejection(i, Rejected(
                "protocol", "port already engaged by another pairing"),
                "execute")
            return
        key = edge_key(mine, theirs)
        self.pairs[key] = _Pairing(mine, theirs, isinstance(action, Tow),
                                   self.tick)
        self._engaged.add(id(mine))
        self._engaged.add(id(theirs))

    def _reach_of(self, i: int) -> float:
        org = self.registry.organism_of(i)
        if org is None:
            return self.specs[i].edge_length
        cached = self._reach_cache.get(org.id)
        if cached is None:
            cached = reach_height(org, self.specs)
            self._reach_cache[org.id] = cached
        return cached

    def _do_recharge(self, i: int, socket_id: int) -> None:
        st = self.states[i]
        socket = self.arena.socket_by_id(socket_id)
        px, py = socket.position(self.arena.cell_size)
        res = recharge(
            st, socket_active=socket.active, socket_rating_w=socket.rating,
            socket_height=socket.height, reach_m=self._reach_of(i),
            distance_m=st.pose.distance_to(Pose(px, py)), dt=self.cfg.dt,
            tariff=self.cfg.tariff, ledger=self.ledger,
            contact_range_m=self.cfg.contact_range_m)
        state = "granted" if res.granted else res.reason
        key = (socket_id, state)
        if self._last_recharge.get(i) != key:
            self._last_recharge[i] = key
            self.log.event(self.tick, i, "recharge", socket=socket_id,
                           state=state)

    def _phase_docking(self) -> None:
        for key in sorted(self.pairs):
            pairing = self.pairs[key]
            pa, pb = pairing.port_a, pairing.port_b
            if pa.phase is DockPhase.DOCKED:
                continue
            sta = self.states[pa.owner]
            stb = self.states[pb.owner]
            edge = self.specs[pa.owner].edge_length
            tol_a = alignment_tolerance(sta.module_class)
            tol_b = alignment_tolerance(stb.module_class)
            tol = tol_a if tol_a.max_offset >= tol_b.max_offset else tol_b
            ax, ay = face_center(sta.pose, pa.face, edge)
            bx, by = face_center(stb.pose, pb.face, edge)
            gap = math.hypot(ax - bx, ay - by)
            inp = TickInput(
                aligned=attempt_align(sta.pose, pa.face, stb.pose, pb.face,
                                      tol, edge),
                abort=(pa.phase in (DockPhase.APPROACHING, DockPhase.ALIGNING)
                       and gap > 0.5),
                separated=gap >= edge,
            )
            prev = pa.phase
            advance_dock(pa, pb, inp,
                         healthy_a=sta.health is Health.OK,
                         healthy_b=stb.health is Health.OK,
                         tow=pairing.tow)
            now = pa.phase
            if now is prev:
                continue
            self.log.event(self.tick, min(pa.owner, pb.owner), "phase",
                           a=pa.owner, fa=pa.face.value, b=pb.owner,
                           fb=pb.face.value, state=now.value, tow=pairing.tow)
            if now is DockPhase.LOCKING:
                drain(sta, self.cfg.tariff.lock_j, self.ledger)
                drain(stb, self.cfg.tariff.lock_j, self.ledger)
            elif now is DockPhase.DOCKED:
                ev = self.registry.register_edge(pa, pb)
                self.merges += 1
                self._reach_cache.clear()
                self.log.event(self.tick, -1, "merge", org=ev.organism_id,
                               size=len(ev.nodes),
                               absorbed="+".join(map(str, ev.absorbed)) or "-")
                if pairing.tow:
                    self._refresh_carried(pa.owner, pb.owner)
            elif now is DockPhase.SEPARATING and prev is DockPhase.UNLOCKING:
                # link is no longer real; the organism loses this edge now,
                # which is exactly what lets the halves move apart
                ev = self.registry.remove_edge(key)
                self.splits += 1
                self._reach_cache.clear()
                self.log.event(self.tick, -1, "split", org=ev.organism_id,
                               survivors="+".join(map(str, ev.survivors)) or "-",
                               dissolved="+".join(map(str, ev.dissolved)) or "-")
                self._refresh_carried(pa.owner, pb.owner)
            if now is DockPhase.FREE:
                del self.pairs[key]
                self._engaged.discard(id(pa))
                self._engaged.discard(id(pb))

    def _refresh_carried(self, *ids: int) -> None:
        for mid in ids:
            st = self.states[mid]
            if st.health is Health.OK:
                continue
            st.carried = any(
                p.tow and p.port_a.phase is DockPhase.DOCKED
                and mid in (p.port_a.owner, p.port_b.owner)
                for p in self.pairs.values())

    def _phase_energy(self) -> None:
        tariff = self.cfg.tariff
        dt = self.cfg.dt
        for i in sorted(self.states):
            st = self.states[i]
            if st.health is Health.OK and i not in self._idle_paid:
                drain(st, tariff.idle_draw_j(dt, st.coprocessor_on), self.ledger)
        edges = []
        for org in self.registry.organisms.values():
            edges.extend(org.edges)
        if edges:
            transfers = share_energy(edges, self.states, dt, tariff, self.ledger)
            if self.cfg.credit_log:
                for tr in transfers:
                    self.log.event(self.tick, tr.donor, "share",
                                   to=tr.receiver, joules=tr.joules)

    def _phase_death(self) -> None:
        for i in sorted(self.states):
            st = self.states[i]
            if st.health is Health.OK and st.battery_pj == 0:
                st.health = Health.ENERGY_DEAD
                self.deaths_energy += 1
                self.log.event(self.tick, i, "death", cause="energy")
        if self.cfg.hazard_rate > 0.0:
            for i in sorted(self.states):
                st = self.states[i]
                if (st.health is Health.OK
                        and self.rng_hazards.random() < self.cfg.hazard_rate):
                    st.health = Health.HARDWARE_DEAD
                    self.deaths_hardware += 1
                    self.log.event(self.tick, i, "death", cause="hazard",
                                   battery=st.battery)

    def _phase_metrics(self) -> None:
        arena = self.arena
        for i, st in self.states.items():
            if st.health is Health.OK:
                self.visited.add(arena.cell_of(st.pose.x, st.pose.y))
            elif (i not in self.disposed and arena.graveyard is not None
                  and in_graveyard(arena, st.pose.x, st.pose.y)):
                self.disposed.add(i)
                self.log.event(self.tick, i, "dispose")
        self._invariant_scan()
        tpd = self.cfg.ticks_per_day
        if self.tick % tpd == 0:
            tally = classify_deaths(self.states.values())
            self.log.event(
                self.tick, -1, "day", index=self.tick // tpd,
                survivors=tally.ok, deaths_energy=self.deaths_energy,
                deaths_hardware=self.deaths_hardware,
                coverage=round(self._coverage(), 6),
                drawn_j=self.ledger.as_dict()["drawn_j"],
                consumed_j=self.ledger.as_dict()["consumed_j"],
                residual_j=self._residual(),
                rejects=sum(self.rejections.values()),
                msgs=self.bus.posted)

    def _coverage(self) -> float:
        total = len(self.arena.walkable_cells())
        return len(self.visited) / total if total else 0.0

    def _residual(self) -> float:
        stored = sum(st.battery_pj for st in self.states.values())
        return self.ledger.residual_j(stored)

    def _invariant_scan(self) -> None:
        for i, st in self.states.items():
            if not 0 <= st.battery_pj <= st.capacity_pj:
                self._breach(i, "battery_bounds",
                             f"battery {st.battery_pj} of {st.capacity_pj}")
            if st.health is Health.ENERGY_DEAD and st.battery_pj != 0:
                self._breach(i, "dead_battery",
                             f"energy-dead with {st.battery_pj} pJ")
            if not self.arena.in_bounds(st.pose.x, st.pose.y):
                self._breach(i, "out_of_bounds",
                             f"({st.pose.x}, {st.pose.y})")
            for p in st.ports:
                peered = p.phase in (DockPhase.LOCKING, DockPhase.DOCKED,
                                     DockPhase.UNLOCKING)
                if peered:
                    if p.peer is None or p.peer.peer is not p:
                        self._breach(i, "peer_symmetry",
                                     f"face {p.face.value} {p.phase.value}")
                    elif p.peer.phase is not p.phase:
                        self._breach(i, "phase_sync",
                                     f"face {p.face.value}")
                elif p.peer is not None:
                    self._breach(i, "stale_peer", f"face {p.face.value}")
        for org_id, org in self.registry.organisms.items():
            if org_id != min(org.nodes):
                self._breach(-1, "organism_id", f"org {org_id}")
            for (a, fa), (b, fb) in org.edges:
                for mid, fval in ((a, fa), (b, fb)):
                    port = next(p for p in self.states[mid].ports
                                if p.face.value == fval)
                    if port.phase is not DockPhase.DOCKED:
                        self._breach(mid, "ghost_edge",
                                     f"face {fval} {port.phase.value}")

    def _breach(self, module_id: int, name: str, detail: str) -> None:
        self.log.event(self.tick, module_id, "breach", name=name,
                       detail=_enc(detail))
        raise InvariantBreach(self.tick, name, detail)

    # -- wrap up ----------------------------------------------------------

    def _finalize(self, total: int, wall: float) -> RunMetrics:
        tally = classify_deaths(self.states.values())
        stored_pj = sum(st.battery_pj for st in self.states.values())
        residual = self.ledger.residual_j(stored_pj)
        hours = total * self.cfg.dt / 3600.0
        led = self.ledger.as_dict()
        tasks_open = sum(
            1 for i, st in self.states.items()
            if st.health is not Health.OK and i not in self.disposed)
        events_before = self.log.event_count
        self.log.event(
            self.tick, -1, "run_end", events=events_before,
            survivors=tally.ok, deaths_energy=tally.energy_dead,
            deaths_hardware=tally.hardware_dead, disposed=len(self.disposed),
            tasks_open=tasks_open, coverage=round(self._coverage(), 6),
            drawn_j=led["drawn_j"], consumed_j=led["consumed_j"],
            stored_j=led["initial_j"] + led["charged_j"] - led["consumed_j"],
            residual_j=residual)
        return RunMetrics(
            name=self.cfg.name, seed=self.seed, ticks=total, dt=self.cfg.dt,
            survivors=tally.ok, deaths_energy=tally.energy_dead,
            deaths_hardware=tally.hardware_dead, death_ratio=tally.ratio,
            coverage=self._coverage(), disposed=len(self.disposed),
            tasks_open=tasks_open, merges=self.merges, splits=self.splits,
            rejections=dict(sorted(self.rejections.items())),
            messages_posted=self.bus.posted,
            messages_dropped=self.bus.dropped,
            initial_j=led["initial_j"], drawn_j=led["drawn_j"],
            charged_j=led["charged_j"], consumed_j=led["consumed_j"],
            shared_j=led["shared_j"],
            stored_j=stored_pj / 10 ** 12,
            residual_j=residual,
            residual_j_per_hour=residual / hours if hours else 0.0,
            events=self.log.event_count, digest=self.log.digest,
            wall_time_s=wall)


def run_scenario(cfg: ScenarioConfig, seed: int | None = None,
                 ticks: int | None = None,
                 out_dir: str | Path | None = None) -> RunMetrics:
    """Run one seed of a scenario; optionally write events.log + metrics.txt."""
    sim = Simulation(cfg, seed)
    metrics = sim.run(ticks)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.log_enabled:
            sim.log.save(out / "events.log")
        (out / "metrics.txt").write_text(metrics.to_text())
    return metrics


def replay_log(text: str) -> RunMetrics:
    """Re-run a log's embedded scenario and insist on the identical log.

    Raises ReplayError on the first divergent, missing or extra line, which
    is what catches a tampered or truncated record.
    """
    lines = text.splitlines()
    if not lines or lines[0] != f"# {LOG_VERSION}":
        raise ReplayError("not a recognizable run log")
    header: dict[str, str] = {}
    for line in lines[1:]:
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(" ")
        header[key] = value
    for want in ("config", "map", "seed", "ticks"):
        if want not in header:
            raise ReplayError(f"log header lacks {want!r}")

    cfg = load_scenario(_dec(header["config"]), map_text=_dec(header["map"]),
                        name_hint=header.get("scenario", "replay"))
    sim = Simulation(cfg, seed=int(header["seed"]))
    metrics = sim.run(int(header["ticks"]))

    fresh = sim.log.lines
    for n, (a, b) in enumerate(zip(lines, fresh), start=1):
        if a != b:
            raise ReplayError(
                f"log diverges at line {n}: file has {a!r}, rerun produced {b!r}")
    if len(lines) != len(fresh):
        raise ReplayError(
            f"log length mismatch: file has {len(lines)} lines, "
            f"rerun produced {len(fresh)}")
    return metrics


def replay_file(path: str | Path) -> RunMetrics:
    return replay_log(Path(path).read_text())


def sweep(cfg: ScenarioConfig, seeds, ticks: int | None = None,
          out_dir: str | Path | None = None) -> list[RunMetrics]:
    """Run the scenario once per seed, serially and independently."""
    results = []
    for seed in seeds:
        if out_dir is not None:
            sub = Path(out_dir) / f"seed_{seed}"
        else:
            sub = None
        results.append(run_scenario(cfg, seed=seed, ticks=ticks, out_dir=sub))
    return results
