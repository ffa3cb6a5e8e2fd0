"""Module classes, their capability envelopes, and single-module kinematics.

Three hardware classes exist and their capability numbers are fixed: a config
may override only the invented defaults (mass, edge_length, battery_capacity).
Batteries are stored internally in integer picojoules so that energy transfers
can be conserved exactly; the public battery fields are plain joules.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .docking import (DockPort, PEERED_PHASES, ACCURATE_TOLERANCE, ROUGH_TOLERANCE,
                      AlignmentTolerance, Face, make_ports)
from .errors import CommandError, ConfigError
from .geometry import Pose, norm_deg
from .world import TerrainClass

PJ = 10 ** 12  # picojoules per joule


def to_pj(joules: float) -> int:
    return round(joules * PJ)


def to_j(pj: int) -> float:
    return pj / PJ


class ModuleClass(enum.Enum):
    SCOUT = "scout"
    BACKBONE = "backbone"
    ACTIVE_WHEEL = "active_wheel"


class DriveKind(enum.Enum):
    TRACKED = "tracked"            # differential tracks, no sideways motion
    SCREW = "screw"                # screw drive, near omnidirectional
    OMNIDIRECTIONAL = "omni"


class Health(enum.Enum):
    OK = "ok"
    ENERGY_DEAD = "energy_dead"
    HARDWARE_DEAD = "hardware_dead"


@dataclass(frozen=True)
class ModuleSpec:
    module_class: ModuleClass
    max_speed: float               # m/s
    drive_kind: DriveKind
    dof_count: int
    bend_range: float              # +- degrees, joint 0
    rot_range: float | None        # +- degrees, joint 1; None for the single shared joint
    max_torque: float              # N*m
    max_joint_speed: float         # deg/s
    rough_terrain_capable: bool
    mass: float = 1.0              # kg
    edge_length: float = 0.10      # m
    battery_capacity: float = 20000.0  # J


_CAPABILITIES = {
    ModuleClass.SCOUT: dict(
        max_speed=0.125, drive_kind=DriveKind.TRACKED, dof_count=2,
        bend_range=90.0, rot_range=180.0, max_torque=3.0,
        max_joint_speed=37.2, rough_terrain_capable=True),
    ModuleClass.BACKBONE: dict(
        max_speed=0.06, drive_kind=DriveKind.SCREW, dof_count=1,
        bend_range=90.0, rot_range=None, max_torque=7.0,
        max_joint_speed=180.0, rough_terrain_capable=False),
    ModuleClass.ACTIVE_WHEEL: dict(
        max_speed=0.31, drive_kind=DriveKind.OMNIDIRECTIONAL, dof_count=2,
        bend_range=90.0, rot_range=180.0, max_torque=5.0,
        max_joint_speed=50.0, rough_terrain_capable=False),
}

_OVERRIDABLE = ("mass", "edge_length", "battery_capacity")


def make_module_spec(module_class: ModuleClass,
                     overrides: dict | None = None) -> ModuleSpec:
    """Build the ModuleSpec for a class. Only mass, edge_length and
    battery_capacity accept overrides; the capability envelope is hardware."""
    fields = dict(_CAPABILITIES[module_class])
    if overrides:
        for key, value in overrides.items():
            if key not in _OVERRIDABLE:
                raise ConfigError(
                    f"field {key!r} of {module_class.value} is fixed hardware "
                    f"capability and cannot be overridden")
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise ConfigError(f"override {key}={value!r} must be a positive number")
            fields[key] = float(value)
    return ModuleSpec(module_class=module_class, **fields)


def dof_range(spec: ModuleSpec, dof_index: int) -> float:
    """Symmetric limit in degrees for one joint."""
    if not 0 <= dof_index < spec.dof_count:
        raise ValueError(
            f"{spec.module_class.value} has {spec.dof_count} joint(s), "
            f"index {dof_index} invalid")
    if dof_index == 0:
        return spec.bend_range
    assert spec.rot_range is not None
    return spec.rot_range


def alignment_tolerance(module_class: ModuleClass) -> AlignmentTolerance:
    """Scouts only manage rough alignment; the others dock accurately."""
    if module_class is ModuleClass.SCOUT:
        return ROUGH_TOLERANCE
    return ACCURATE_TOLERANCE


_TRAVERSABLE = {
    ModuleClass.SCOUT: frozenset({TerrainClass.PLAIN, TerrainClass.ROUGH,
                                  TerrainClass.SLOPE, TerrainClass.SMALL_HOLE}),
    ModuleClass.BACKBONE: frozenset({TerrainClass.PLAIN}),
    ModuleClass.ACTIVE_WHEEL: frozenset({TerrainClass.PLAIN}),
}


def can_traverse(module_class: ModuleClass, terrain: TerrainClass) -> bool:
    return terrain in _TRAVERSABLE[module_class]


@dataclass
class ModuleState:
    """Mutable per-module simulation state."""

    id: int
    module_class: ModuleClass
    pose: Pose
    battery_pj: int
    capacity_pj: int
    health: Health = Health.OK
    joint_angles: list[float] = field(default_factory=list)
    ports: list[DockPort] = field(default_factory=list)
    coprocessor_on: bool = False
    carried: bool = False          # riding on an organism, not touching ground
    joint_mode: str = "bend"       # how a single shared joint is being used

    @property
    def battery(self) -> float:
        return to_j(self.battery_pj)

    @property
    def capacity(self) -> float:
        return to_j(self.capacity_pj)

    @property
    def battery_fraction(self) -> float:
        return self.battery_pj / self.capacity_pj if self.capacity_pj else 0.0

    def port(self, face: Face) -> DockPort:
        return self.ports[list(Face).index(face)]

    @property
    def is_docked(self) -> bool:
        """True while any port holds a peered connection."""
        return any(p.phase in PEERED_PHASES for p in self.ports)

    @property
    def docked_faces(self) -> list[Face]:
        from .docking import DockPhase
        return [p.face for p in self.ports if p.phase is DockPhase.DOCKED]


def new_module_state(module_id: int, spec: ModuleSpec, pose: Pose,
                     battery_fraction: float = 1.0) -> ModuleState:
    if not 0.0 <= battery_fraction <= 1.0:
        raise ConfigError(f"battery fraction {battery_fraction} outside [0, 1]")
    cap_pj = to_pj(spec.battery_capacity)
    return ModuleState(
        id=module_id,
        module_class=spec.module_class,
        pose=pose,
        battery_pj=round(cap_pj * battery_fraction),
        capacity_pj=cap_pj,
        joint_angles=[0.0] * spec.dof_count,
        ports=make_ports(module_id),
    )


# -- locomotion -----------------------------------------------------------


@dataclass(frozen=True)
class DriveCommand:
    """Requested body-frame velocities: linear along the heading, lateral to
    its left, angular in deg/s. Magnitudes beyond the class speed cap are
    scaled down without changing direction."""

    linear: float = 0.0
    lateral: float = 0.0
    angular: float = 0.0


@dataclass(frozen=True)
class MoveResult:
    pose: Pose
    energy_j: float
    blocked: bool


_PATH_SAMPLE_STEP = 0.05  # m; half a module edge, prevents wall tunnelling


def _path_clear(x0: float, y0: float, x1: float, y1: float,
                module_class: ModuleClass, terrain_at) -> bool:
    dist = math.hypot(x1 - x0, y1 - y0)
    steps = max(1, math.ceil(dist / _PATH_SAMPLE_STEP))
    for i in range(1, steps + 1):
        t = i / steps
        terrain = terrain_at(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t)
        if terrain is None or not can_traverse(module_class, terrain):
            return False
    return True


def locomotion_step(state: ModuleState, spec: ModuleSpec, cmd: DriveCommand,
                    terrain_at, dt: float, tariff) -> MoveResult:
    """Integrate one drive command over dt. Pure: the caller applies the pose.

    The reported energy is what a module doing nothing but this for dt would
    burn: idle draw plus the distance tariff. A move whose path crosses a
    cell this class cannot traverse is blocked and leaves the pose unchanged.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.health is not Health.OK:
        raise CommandError(f"module {state.id} is {state.health.value}, cannot drive")
    if state.is_docked:
        raise CommandError(
            f"module {state.id} is docked; organisms move as one body")
    if spec.drive_kind is DriveKind.TRACKED and cmd.lateral != 0.0:
        raise CommandError(
            f"{spec.module_class.value} tracks cannot slide sideways")

    vx_b, vy_b = cmd.linear, cmd.lateral
    speed = math.hypot(vx_b, vy_b)
    if speed > spec.max_speed:
        scale = spec.max_speed / speed
        vx_b *= scale
        vy_b *= scale
    h = math.radians(state.pose.heading)
    c, s = math.cos(h), math.sin(h)
    dx = (vx_b * c - vy_b * s) * dt
    dy = (vx_b * s + vy_b * c) * dt

    idle_j = tariff.idle_w * dt
    if dx == 0.0 and dy == 0.0:
        heading = norm_deg(state.pose.heading + cmd.angular * dt)
        return MoveResult(Pose(state.pose.x, state.pose.y, heading), idle_j, False)

    nx, ny = state.pose.x + dx, state.pose.y + dy
    if not _path_clear(state.pose.x, state.pose.y, nx, ny,
                       spec.module_class, terrain_at):
        return MoveResult(state.pose, idle_j, True)
    dist = math.hypot(dx, dy)
    energy = idle_j + tariff.locomotion_j_per_m_kg * dist * spec.mass
    heading = norm_deg(state.pose.heading + cmd.angular * dt)
    return MoveResult(Pose(nx, ny, heading), energy, False)


# -- joint actuation ------------------------------------------------------


@dataclass(frozen=True)
class JointResult:
    angle: float
    energy_j: float


def actuate_joint(state: ModuleState, spec: ModuleSpec, dof_index: int,
                  target_deg: float, dt: float, tariff) -> JointResult:
    """Slew one joint toward a target at the class joint speed.

    The target is clamped into the joint range first, then approached at up
    to max_joint_speed for dt. Energy charges the class peak torque over the
    swept angle; an already-satisfied target costs nothing. Pure: the caller
    stores the returned angle.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.health is not Health.OK:
        raise CommandError(f"module {state.id} is {state.health.value}, cannot actuate")
    limit = dof_range(spec, dof_index)
    current = state.joint_angles[dof_index]
    goal = max(-limit, min(limit, target_deg))
    max_step = spec.max_joint_speed * dt
    delta = max(-max_step, min(max_step, goal - current))
    new_angle = current + delta
    energy = tariff.actuation_j_per_nm_rad * spec.max_torque * math.radians(abs(delta))
    return JointResult(new_angle, energy)
