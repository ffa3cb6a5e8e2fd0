"""Baseline controllers: exploration, socket stacking, hauling the dead.

Everything here is decentralized. A module only ever uses its own id, its
observation and (for exploration) its private noise stream, yet the fleet
converges on a coherent plan because every module runs the same arithmetic
on the same sensed facts. Socket assignment is literally `id modulo sockets`;
nobody negotiates.

Priorities used by the baseline, within the framework's urgency bands:
emergencies press 10, recharging 40, docking 45, holding formation 50,
abandoning a dark socket 58, travelling to a socket 60, hauling dead modules
to the graveyard 100, wandering 200.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .control import (ActionProposal, Dock, Drive, Idle, Observation, Recharge,
                      Tow, Undock)
from .docking import FACES, Face, attempt_align
from .errors import ConfigError
from .geometry import Pose, ang_diff_deg, heading_vec, norm_deg
from .rng import Rng
from .robot_model import (DriveKind, Health, ModuleClass, alignment_tolerance,
                          make_module_spec)
from .world import SensedSocket

EMERGENCY_PRIORITY = 10
RECHARGE_PRIORITY = 40
DOCK_PRIORITY = 45
HOLD_PRIORITY = 50
LEAVE_SOCKET_PRIORITY = 58
SEEK_PRIORITY = 60
DISPOSAL_PRIORITY = 100
EXPLORE_PRIORITY = 200

EMERGENCY_FRACTION = 0.15
SLOT_PITCH = 0.1          # metres between stack positions, one module edge
ARRIVE_TOL = 0.004        # snug inside the tightest docking tolerance
HEADING_TOL = 1.0
AT_SLOT_RADIUS = 0.05     # close enough to call a slot "mine"


# -- navigation servos ----------------------------------------------------


def _body_frame(pose: Pose, wx: float, wy: float) -> tuple[float, float]:
    h = math.radians(pose.heading)
    c, s = math.cos(h), math.sin(h)
    return wx * c + wy * s, -wx * s + wy * c


def servo_drive(pose: Pose, drive_kind: DriveKind, max_speed: float,
                tx: float, ty: float, dt: float,
                target_heading: float | None = None) -> Drive | None:
    """One tick of closed-loop driving toward a point, None once parked.

    Holonomic drives head straight there while swinging onto the target
    heading. Tracked drives turn in place first, crawling backwards when the
    goal is behind them, because a u-turn costs more ticks than a reverse.
    """
    dx, dy = tx - pose.x, ty - pose.y
    dist = math.hypot(dx, dy)
    if dist < ARRIVE_TOL:
        if target_heading is not None:
            err = ang_diff_deg(target_heading, pose.heading)
            if abs(err) > HEADING_TOL:
                return Drive(0.0, 0.0, err / dt)
        return None

    if drive_kind is not DriveKind.TRACKED:
        bx, by = _body_frame(pose, dx, dy)
        want = target_heading if target_heading is not None else pose.heading
        err = ang_diff_deg(want, pose.heading)
        v = min(max_speed, dist / dt) / dist
        return Drive(bx * v, by * v, err / dt)

    bearing = math.degrees(math.atan2(dy, dx))
    err_fwd = ang_diff_deg(bearing, pose.heading)
    if abs(err_fwd) <= 90.0:
        want, sign = bearing, 1.0
    else:
        want, sign = norm_deg(bearing + 180.0), -1.0
    err = ang_diff_deg(want, pose.heading)
    if abs(err) > HEADING_TOL:
        return Drive(0.0, 0.0, err / dt)    # swing first, then roll
    speed = min(max_speed, dist / dt)
    return Drive(sign * speed, 0.0, err / dt)


def _rect_contains(rect: tuple[float, float, float, float],
                   x: float, y: float) -> bool:
    x0, y0, x1, y1 = rect
    return x0 <= x <= x1 and y0 <= y <= y1


# -- socket stacking arithmetic -------------------------------------------


@dataclass(frozen=True)
class StackSlot:
    socket: SensedSocket
    rank: int                  # 0 touches the socket
    position: tuple[float, float]
    heading: float
    predecessor: int | None    # module id expected one step closer to the wall


def assigned_slot(module_id: int, sockets: list[SensedSocket]) -> StackSlot | None:
    """Where this module belongs, from shared arithmetic on sensed sockets.

    Modules stack on the active sockets when any are lit, otherwise they
    pre-position over the full known set. Fleet ids are dense and 0-based,
    so `id - socket_count` names the module one rank below.
    """
    pool = [s for s in sockets if s.active] or list(sockets)
    if not pool:
        return None
    pool.sort(key=lambda s: s.id)
    n = len(pool)
    sock = pool[module_id % n]
    rank = module_id // n
    ax, ay = heading_vec(sock.approach_deg)
    px = sock.position[0] + SLOT_PITCH * rank * ax
    py = sock.position[1] + SLOT_PITCH * rank * ay
    pred = module_id - n if rank > 0 else None
    return StackSlot(sock, rank, (px, py), sock.approach_deg, pred)


class SeekEnergyController:
    """Walk to the assigned stack slot and draw wall power at rank zero.

    Battery below the emergency fraction promotes every proposal into the
    self-protection band. A module docked at a slot that no longer matches
    its assignment unplugs one face per tick until free to walk again.
    """

    def __init__(self, module_id: int, rng: Rng, params: dict | None = None):
        self.module_id = module_id
        p = params or {}
        self.emergency_fraction = float(p.get("emergency_fraction",
                                              EMERGENCY_FRACTION))

    def __call__(self, obs: Observation):
        slot = assigned_slot(self.module_id, list(obs.local.sockets))
        if slot is None:
            return None
        urgent = obs.me.battery_fraction < self.emergency_fraction
        seek_pri = EMERGENCY_PRIORITY if urgent else SEEK_PRIORITY
        pose = obs.me.pose
        at_slot = (math.hypot(pose.x - slot.position[0],
                              pose.y - slot.position[1]) < AT_SLOT_RADIUS)
        docked = bool(obs.interaction.docked_faces)
        out = []

        if docked and not at_slot:
            # wrong place for the current assignment; let go before walking
            face = next(f for f in FACES
                        if f.value in obs.interaction.docked_faces)
            pri = EMERGENCY_PRIORITY if urgent else LEAVE_SOCKET_PRIORITY
            out.append(ActionProposal(pri, Undock(face)))
            return out

        parked = True
        if not docked and not obs.me.carried:
            # drive all the way down to servo tolerance; dock latches need
            # millimetres, not the loose at-slot radius
            cmd = servo_drive(pose, _drive_kind_of(obs.me.module_class),
                              _speed_of(obs.me.module_class),
                              slot.position[0], slot.position[1],
                              obs.internal.dt, target_heading=slot.heading)
            if cmd is not None:
                parked = False
                out.append(ActionProposal(seek_pri, cmd))

        if parked and slot.rank == 0 and slot.socket.active:
            pri = EMERGENCY_PRIORITY if urgent else RECHARGE_PRIORITY
            out.append(ActionProposal(pri, Recharge(slot.socket.id)))
        return out or None


class AggregateController:
    """Form and hold the stack: dock onto the predecessor, then stand still."""

    def __init__(self, module_id: int, rng: Rng, params: dict | None = None):
        self.module_id = module_id

    def __call__(self, obs: Observation):
        slot = assigned_slot(self.module_id, list(obs.local.sockets))
        if slot is None:
            return None
        pose = obs.me.pose
        at_slot = (math.hypot(pose.x - slot.position[0],
                              pose.y - slot.position[1]) < AT_SLOT_RADIUS)
        if not at_slot:
            return None
        if not obs.interaction.docked_faces:
            # same parked test the seek servo uses; holding any earlier
            # would freeze the module before it is latch-accurate
            still = servo_drive(pose, _drive_kind_of(obs.me.module_class),
                                _speed_of(obs.me.module_class),
                                slot.position[0], slot.position[1],
                                obs.internal.dt, target_heading=slot.heading)
            if still is not None:
                return None
        out = [ActionProposal(HOLD_PRIORITY, Idle())]

        if slot.predecessor is not None:
            south = FACES.index(Face.SOUTH)
            south_free = obs.interaction.port_phases[south] == "free"
            if south_free:
                pred = next((m for m in obs.local.modules
                             if m.id == slot.predecessor), None)
                if pred is not None and pred.health is Health.OK:
                    tol = _pair_tolerance(obs.me.module_class, pred.module_class)
                    if attempt_align(pose, Face.SOUTH, pred.pose, Face.NORTH, tol):
                        out.append(ActionProposal(
                            DOCK_PRIORITY,
                            Dock(Face.SOUTH, pred.id, Face.NORTH)))
        return out


class ExploreController:
    """Random waypoint wandering; the only stochastic baseline behavior."""

    def __init__(self, module_id: int, rng: Rng, params: dict | None = None):
        self.rng = rng
        self.waypoint: tuple[float, float] | None = None
        self.last_pos: tuple[float, float] | None = None
        self.stuck = 0

    def __call__(self, obs: Observation):
        if obs.me.carried:
            return None
        pose = obs.me.pose
        w, h = obs.local.arena_size
        margin = 0.15
        pos = (pose.x, pose.y)
        if self.last_pos is not None and math.dist(pos, self.last_pos) < 1e-6:
            self.stuck += 1
        else:
            self.stuck = 0
        self.last_pos = pos

        if (self.waypoint is None or self.stuck >= 20
                or math.dist(pos, self.waypoint) < 0.05):
            self.waypoint = (self.rng.uniform(margin, w - margin),
                             self.rng.uniform(margin, h - margin))
            self.stuck = 0
        cmd = servo_drive(pose, _drive_kind_of(obs.me.module_class),
                          _speed_of(obs.me.module_class),
                          self.waypoint[0], self.waypoint[1], obs.internal.dt)
        if cmd is None:
            return None
        return [ActionProposal(EXPLORE_PRIORITY, cmd)]


class DisposalController:
    """Two wheeled haulers drag each dead module into the graveyard.

    Recomputed from observation every tick, no internal state: the two
    lowest-id undocked healthy wheeled modules in sensor range answer for
    the lowest-id corpse outside the graveyard. One grabs the east face,
    the other the west, and once all three bodies form one organism they
    drive it home, unplug and back away.
    """

    def __init__(self, module_id: int, rng: Rng, params: dict | None = None):
        self.module_id = module_id

    def __call__(self, obs: Observation):
        if obs.me.module_class is not ModuleClass.ACTIVE_WHEEL:
            return None
        yard = obs.local.graveyard
        if yard is None:
            return None
        pose = obs.me.pose
        dt = obs.internal.dt

        # backing off after a drop: finish separating before anything else
        mid_release = any(ph in ("unlocking", "separating")
                          for ph in obs.interaction.port_phases)
        corpse_peer = self._docked_corpse(obs)
        if mid_release and corpse_peer is None:
            near = [m for m in obs.local.modules
                    if m.health is not Health.OK and m.distance < 0.3]
            if near:
                # steer to a spot a hand's width past the release distance,
                # clamped into the room so a wall-side drop cannot wedge us
                away = math.atan2(pose.y - near[0].pose.y,
                                  pose.x - near[0].pose.x)
                margin = 0.15
                w, h = obs.local.arena_size
                tx = min(max(near[0].pose.x + 0.35 * math.cos(away), margin),
                         w - margin)
                ty = min(max(near[0].pose.y + 0.35 * math.sin(away), margin),
                         h - margin)
                cmd = servo_drive(pose, _drive_kind_of(obs.me.module_class),
                                  _speed_of(obs.me.module_class), tx, ty, dt)
                if cmd is not None:
                    return [ActionProposal(DISPOSAL_PRIORITY, cmd)]
            return None

        if corpse_peer is not None:
            return self._haul(obs, corpse_peer)

        corpse = self._target_corpse(obs)
        if corpse is None:
            return None
        rank = self._my_rank(obs)
        if rank is None:
            return None
        # rank 0 takes the corpse's east flank, rank 1 the west
        side = Face.EAST if rank == 0 else Face.WEST
        grab = Face.WEST if rank == 0 else Face.EAST
        nx, ny = heading_vec(norm_deg(corpse.pose.heading + side.offset_deg))
        px = corpse.pose.x + SLOT_PITCH * nx
        py = corpse.pose.y + SLOT_PITCH * ny
        cmd = servo_drive(pose, _drive_kind_of(obs.me.module_class),
                          _speed_of(obs.me.module_class), px, py, dt,
                          target_heading=corpse.pose.heading)
        if cmd is not None:
            return [ActionProposal(DISPOSAL_PRIORITY, cmd)]
        if obs.interaction.port_phases[FACES.index(grab)] == "free":
            tol = _pair_tolerance(obs.me.module_class, corpse.module_class)
            if attempt_align(pose, grab, corpse.pose, side, tol):
                return [ActionProposal(DISPOSAL_PRIORITY,
                                       Tow(grab, corpse.id, side))]
        return [ActionProposal(DISPOSAL_PRIORITY, Idle())]

    def _docked_corpse(self, obs: Observation):
        for i, peer in enumerate(obs.interaction.port_peers):
            if peer is None:
                continue
            sensed = next((m for m in obs.local.modules if m.id == peer[0]), None)
            if sensed is not None and sensed.health is not Health.OK:
                return FACES[i], sensed
        return None

    def _haul(self, obs: Observation, corpse_peer):
        face, corpse = corpse_peer
        yard = obs.local.graveyard
        pose = obs.me.pose
        if _rect_contains(yard, corpse.pose.x, corpse.pose.y):
            return [ActionProposal(DISPOSAL_PRIORITY, Undock(face))]
        if obs.interaction.organism_size < 3:
            return [ActionProposal(DISPOSAL_PRIORITY, Idle())]  # partner inbound
        gx = (yard[0] + yard[2]) / 2.0
        gy = (yard[1] + yard[3]) / 2.0
        dx, dy = gx - corpse.pose.x, gy - corpse.pose.y
        dist = math.hypot(dx, dy)
        if dist < 1e-9:
            return [ActionProposal(DISPOSAL_PRIORITY, Idle())]
        v = min(_speed_of(obs.me.module_class), dist / obs.internal.dt) / dist
        bx, by = _body_frame(pose, dx * v, dy * v)
        return [ActionProposal(DISPOSAL_PRIORITY, Drive(bx, by, 0.0))]

    def _target_corpse(self, obs: Observation):
        yard = obs.local.graveyard
        dead = [m for m in obs.local.modules
                if m.health is not Health.OK
                and not _rect_contains(yard, m.pose.x, m.pose.y)]
        return min(dead, key=lambda m: m.id) if dead else None

    def _my_rank(self, obs: Observation) -> int | None:
        if obs.interaction.docked_faces:
            return None
        crew = [self.module_id]
        for m in obs.local.modules:
            if (m.module_class is ModuleClass.ACTIVE_WHEEL
                    and m.health is Health.OK):
                crew.append(m.id)
        crew.sort()
        # sensing cannot tell whether others are docked; ids keep it stable
        if self.module_id in crew[:2]:
            return crew[:2].index(self.module_id)
        return None


# -- registry -------------------------------------------------------------


def _pair_tolerance(class_a: ModuleClass, class_b: ModuleClass):
    ta, tb = alignment_tolerance(class_a), alignment_tolerance(class_b)
    return ta if ta.max_offset >= tb.max_offset else tb


# a controller knows its own hardware envelope
_CLASS_SPECS = {mc: make_module_spec(mc) for mc in ModuleClass}


def _speed_of(mc: ModuleClass) -> float:
    return _CLASS_SPECS[mc].max_speed


def _drive_kind_of(mc: ModuleClass) -> DriveKind:
    return _CLASS_SPECS[mc].drive_kind


REGISTRY = {
    "explore": ExploreController,
    "seek_energy": SeekEnergyController,
    "aggregate": AggregateController,
    "disposal": DisposalController,
}


def build_controllers(names, module_id: int, rng: Rng,
                      params: dict | None = None) -> dict:
    """Instantiate named controllers for one module, in the given order."""
    out = {}
    for name in names:
        factory = REGISTRY.get(name)
        if factory is None:
            raise ConfigError(f"unknown controller {name!r}; "
                              f"known: {', '.join(sorted(REGISTRY))}")
        out[name] = factory(module_id, rng.substream(f"{name}/{module_id}"),
                            params)
    return out
