"""Controller interface: observations in, prioritized action proposals out.

Controllers are plain callables registered per module. Every tick each one
sees the same four-channel observation and may propose actions tagged with a
priority byte (lower wins). The framework arbitrates, then a guard checks
the winning action against physics and protocol before anything executes.
Urgency bands, by convention: 0-31 self protection, 32-95 energy, 96-159
scenario tasks, 160-255 exploration and idling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .docking import Face
from .errors import FrameworkError
from .geometry import Pose
from .organism import LiftQuery, Organism, lift_torque_nm, worst_case_chain
from .robot_model import (Health, ModuleClass, ModuleSpec, ModuleState,
                          dof_range, _path_clear)
from .world import SensedSocket, TerrainClass

PRIORITY_MIN = 0
PRIORITY_MAX = 255
MAX_PROPOSALS_PER_CONTROLLER = 16


# -- observation ----------------------------------------------------------


@dataclass(frozen=True)
class SensedModule:
    id: int
    module_class: ModuleClass
    pose: Pose
    health: Health
    distance: float


@dataclass(frozen=True)
class SelfChannel:
    id: int
    module_class: ModuleClass
    pose: Pose
    battery_fraction: float
    health: Health
    joint_angles: tuple[float, ...]
    coprocessor_on: bool
    carried: bool


@dataclass(frozen=True)
class LocalChannel:
    terrain: TerrainClass | None
    sockets: tuple[SensedSocket, ...]
    modules: tuple[SensedModule, ...]
    arena_size: tuple[float, float]                      # metres (w, h)
    graveyard: tuple[float, float, float, float] | None  # x0, y0, x1, y1


@dataclass(frozen=True)
class InteractionChannel:
    docked_faces: tuple[str, ...]
    port_phases: tuple[str, str, str, str]               # N, E, S, W
    port_peers: tuple[tuple[int, str] | None, ...]       # (module id, face) or None
    organism_id: int | None
    organism_size: int          # 1 when alone
    organism_reach: float
    messages: tuple["Message", ...]


@dataclass(frozen=True)
class InternalChannel:
    tick: int
    dt: float
    bus_load: int               # messages the radio delivered fleet-wide this tick
    outbox: "Mailbox | None" = None


@dataclass(frozen=True)
class Observation:
    me: SelfChannel
    local: LocalChannel
    interaction: InteractionChannel
    internal: InternalChannel


# -- actions --------------------------------------------------------------


@dataclass(frozen=True)
class Drive:
    """Body-frame velocity request; becomes a whole-organism move if docked."""
    linear: float = 0.0
    lateral: float = 0.0
    angular: float = 0.0


@dataclass(frozen=True)
class Actuate:
    dof_index: int
    target_deg: float


@dataclass(frozen=True)
class Dock:
    face: Face
    target_id: int
    target_face: Face


@dataclass(frozen=True)
class Tow(Dock):
    """Dock variant that accepts a dead partner for hauling."""


@dataclass(frozen=True)
class Undock:
    face: Face


@dataclass(frozen=True)
class Recharge:
    socket_id: int


@dataclass(frozen=True)
class ToggleCoprocessor:
    on: bool


@dataclass(frozen=True)
class Idle:
    pass


Action = Drive | Actuate | Dock | Undock | Recharge | ToggleCoprocessor | Idle


@dataclass(frozen=True)
class ActionProposal:
    priority: int
    action: Action
    source: str = ""   # controller name, stamped by the framework


IDLE_PROPOSAL = ActionProposal(PRIORITY_MAX, Idle(), source="framework")


def step_controllers(controllers, obs: Observation) -> list[ActionProposal]:
    """Run a module's controllers in registration order, collect proposals.

    `controllers` is an ordered mapping name -> callable(obs). A controller
    may return None, one proposal or an iterable. Bad priorities, oversized
    batches and controller crashes are framework errors, not silent drops.
    """
    out: list[ActionProposal] = []
    for name, fn in controllers.items():
        try:
            result = fn(obs)
        except Exception as exc:
            raise FrameworkError(f"controller {name!r} raised {exc!r}") from exc
        if result is None:
            continue
        if isinstance(result, ActionProposal):
            result = [result]
        batch = list(result)
        if len(batch) > MAX_PROPOSALS_PER_CONTROLLER:
            raise FrameworkError(
                f"controller {name!r} proposed {len(batch)} actions, "
                f"limit is {MAX_PROPOSALS_PER_CONTROLLER}")
        for prop in batch:
            if not isinstance(prop, ActionProposal):
                raise FrameworkError(
                    f"controller {name!r} returned {prop!r}, "
                    f"expected ActionProposal")
            if not (PRIORITY_MIN <= prop.priority <= PRIORITY_MAX
                    and isinstance(prop.priority, int)):
                raise FrameworkError(
                    f"controller {name!r} used priority {prop.priority!r}, "
                    f"must be an int in [{PRIORITY_MIN}, {PRIORITY_MAX}]")
            out.append(replace(prop, source=name))
    return out


def select_action(proposals, controller_order: dict[str, int]) -> ActionProposal:
    """Pick the most urgent proposal; registration order breaks ties.

    The outcome is independent of the order proposals arrive in. With no
    proposals at all the module idles.
    """
    best = None
    best_key = None
    for prop in proposals:
        key = (prop.priority, controller_order.get(prop.source, len(controller_order)),
               prop.source)
        if best_key is None or key < best_key:
            best, best_key = prop, key
    return best if best is not None else IDLE_PROPOSAL


# -- the guard ------------------------------------------------------------


@dataclass(frozen=True)
class Rejected:
    reason: str    # collision | overload | protocol
    detail: str


@dataclass
class GuardContext:
    """Everything the guard needs to judge one module's action."""

    state: ModuleState
    spec: ModuleSpec
    states: dict[int, ModuleState]
    specs: dict[int, ModuleSpec]
    organism: Organism | None
    terrain_at: object          # callable (x, y) -> TerrainClass | None
    dt: float
    socket_by_id: object = None  # callable id -> Socket | None


def guard_action(action: Action, ctx: GuardContext) -> Action | Rejected:
    """Admit, adjust or reject one action before execution.

    Actuation targets are clamped into the joint's range instead of being
    bounced. Everything else either passes through unchanged or comes back
    as a Rejected with a machine-readable reason.
    """
    st, spec = ctx.state, ctx.spec
    if isinstance(action, Idle):
        return action
    if st.health is not Health.OK:
        return Rejected("protocol", f"module {st.id} is {st.health.value}")

    if isinstance(action, Drive):
        return _guard_drive(action, ctx)
    if isinstance(action, Actuate):
        return _guard_actuate(action, ctx)
    if isinstance(action, Dock):    # Tow included
        return _guard_dock(action, ctx)
    if isinstance(action, Undock):
        from .docking import DockPhase
        port = st.port(action.face)
        if port.phase is not DockPhase.DOCKED:
            return Rejected("protocol",
                            f"face {action.face.value} is {port.phase.value}, "
                            f"only a docked face can release")
        return action
    if isinstance(action, Recharge):
        if ctx.socket_by_id is None or ctx.socket_by_id(action.socket_id) is None:
            return Rejected("protocol", f"unknown socket {action.socket_id}")
        return action
    if isinstance(action, ToggleCoprocessor):
        return action
    return Rejected("protocol", f"unrecognized action {action!r}")


def _guard_drive(action: Drive, ctx: GuardContext) -> Action | Rejected:
    st, spec = ctx.state, ctx.spec
    from .robot_model import DriveKind
    if st.carried:
        return Rejected("protocol", "carried modules do not drive")
    solo = ctx.organism is None
    if solo and st.is_docked:
        # a port is mid-lock or mid-release; the body is pinned until the
        # coupling either registers as an organism edge or lets go
        return Rejected("protocol", "docking in progress pins this module")
    if not solo:
        from .docking import DockPhase
        for mid in ctx.organism.nodes:
            if any(p.phase is DockPhase.LOCKING
                   for p in ctx.states[mid].ports):
                return Rejected("protocol",
                                f"module {mid} is mid-lock; the organism "
                                f"holds still until the latch lands")
    if solo and spec.drive_kind is DriveKind.TRACKED and action.lateral != 0.0:
        return Rejected("protocol", "tracked drive cannot move sideways")
    # scale the way execution will, then look where we would end up
    vx, vy = action.linear, action.lateral
    speed = math.hypot(vx, vy)
    if solo:
        cap = spec.max_speed
    else:
        grounded = [m for m in ctx.organism.nodes if not ctx.states[m].carried]
        if not grounded:
            return Rejected("protocol", "organism has no ground contact")
        cap = min(ctx.specs[m].max_speed for m in grounded)
    if speed > cap:
        vx, vy = vx * cap / speed, vy * cap / speed
    h = math.radians(st.pose.heading)
    wx = vx * math.cos(h) - vy * math.sin(h)
    wy = vx * math.sin(h) + vy * math.cos(h)
    moved = math.hypot(wx, wy) * ctx.dt
    if moved > 0:
        members = [st.id] if solo else ctx.organism.sorted_nodes()
        for mid in members:
            p = ctx.states[mid].pose
            mc = ctx.states[mid].module_class
            if not _path_clear(p.x, p.y, p.x + wx * ctx.dt, p.y + wy * ctx.dt,
                               mc, ctx.terrain_at):
                return Rejected("collision",
                                f"path of module {mid} is blocked")
    return action


def _guard_actuate(action: Actuate, ctx: GuardContext) -> Action | Rejected:
    st, spec = ctx.state, ctx.spec
    try:
        limit = dof_range(spec, action.dof_index)
    except ValueError:
        return Rejected("protocol",
                        f"{spec.module_class.value} has no dof {action.dof_index}")
    clamped = max(-limit, min(limit, action.target_deg))
    if ctx.organism is not None:
        chain = worst_case_chain(ctx.organism, st.id)
        load = lift_torque_nm(LiftQuery(st.id, action.dof_index, chain), ctx.specs)
        if load > spec.max_torque:
            return Rejected("overload",
                            f"lifting {len(chain)} modules needs "
                            f"{load:.2f} N*m, joint rated {spec.max_torque}")
    if clamped != action.target_deg:
        return Actuate(action.dof_index, clamped)
    return action


def _guard_dock(action: Dock, ctx: GuardContext) -> Action | Rejected:
    st = ctx.state
    if action.target_id == st.id:
        return Rejected("protocol", "cannot dock to self")
    other = ctx.states.get(action.target_id)
    if other is None:
        return Rejected("protocol", f"unknown module {action.target_id}")
    if other.health is not Health.OK and not isinstance(action, Tow):
        return Rejected("protocol",
                        f"module {action.target_id} is {other.health.value}; "
                        f"towing requires a tow dock")
    from .docking import DockPhase
    mine = st.port(action.face)
    theirs = other.port(action.target_face)
    if mine.phase is not DockPhase.FREE:
        return Rejected("protocol",
                        f"own face {action.face.value} is {mine.phase.value}")
    if theirs.phase is not DockPhase.FREE:
        return Rejected("protocol",
                        f"target face {action.target_face.value} is "
                        f"{theirs.phase.value}")
    return action


# -- fitness --------------------------------------------------------------


@dataclass(frozen=True)
class FitnessVector:
    """Per-module wellbeing summary, all components in [0, 1]."""

    coverage: float            # fraction of the arena this module has visited
    energy_proximity: float    # 1 / (1 + metres to nearest known active socket)
    docking: float             # docked faces / 4
    battery: float             # charge fraction

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.coverage, self.energy_proximity, self.docking, self.battery)

    def weighted(self, w_cov=0.25, w_prox=0.25, w_dock=0.25, w_batt=0.25) -> float:
        return (w_cov * self.coverage + w_prox * self.energy_proximity
                + w_dock * self.docking + w_batt * self.battery)


def fitness(obs: Observation, coverage: float) -> FitnessVector:
    active = [s for s in obs.local.sockets if s.active]
    if active:
        d = min(s.distance for s in active)
        prox = 1.0 / (1.0 + d)
    else:
        prox = 0.0
    return FitnessVector(
        coverage=coverage,
        energy_proximity=prox,
        docking=len(obs.interaction.docked_faces) / 4.0,
        battery=obs.me.battery_fraction,
    )


# -- messaging ------------------------------------------------------------


@dataclass(frozen=True)
class Message:
    sender: int
    dest: int
    kind: str
    payload: tuple = ()


class Mailbox:
    """A module's fixed-sender handle on the radio, handed out in the
    observation so controllers can talk without touching the bus itself."""

    __slots__ = ("_bus", "sender")

    def __init__(self, bus: "MessageBus", sender: int):
        self._bus = bus
        self.sender = sender

    def post(self, dest: int, kind: str, payload: tuple = ()) -> bool:
        return self._bus.post(Message(self.sender, dest, kind, payload))


class MessageBus:
    """Store-and-forward radio with per-destination backpressure.

    Messages posted during tick t arrive at t+1, and only if sender and
    receiver are within radio range at delivery time. A destination accepts
    at most 64 pending messages per tick; the newest overflowing message is
    the one dropped.
    """

    PER_DEST_LIMIT = 64

    def __init__(self, range_m: float):
        if range_m < 0:
            raise ValueError("radio range must be >= 0")
        self.range_m = range_m
        self._pending: dict[int, list[Message]] = {}
        self.dropped = 0
        self.posted = 0

    @property
    def load(self) -> int:
        return sum(len(v) for v in self._pending.values())

    def post(self, msg: Message) -> bool:
        box = self._pending.setdefault(msg.dest, [])
        if len(box) >= self.PER_DEST_LIMIT:
            self.dropped += 1
            return False
        box.append(msg)
        self.posted += 1
        return True

    def deliver(self, positions: dict[int, Pose]) -> dict[int, list[Message]]:
        """Flush last tick's traffic; distance is the only obstacle radio
        cares about."""
        out: dict[int, list[Message]] = {}
        for dest in sorted(self._pending):
            dest_pos = positions.get(dest)
            if dest_pos is None:
                continue
            kept = []
            for msg in self._pending[dest]:
                src_pos = positions.get(msg.sender)
                if src_pos is None:
                    continue
                if src_pos.distance_to(dest_pos) <= self.range_m:
                    kept.append(msg)
            if kept:
                out[dest] = kept
        self._pending.clear()
        return out
