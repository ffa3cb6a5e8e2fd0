"""Organism topology: docked modules acting as one rigid body.

An organism is a connected graph of modules joined by docked port pairs. The
registry tracks every organism in the run; registering an edge merges, a
removed bridge edge splits, and modules left alone fall back to being plain
singletons. Organism ids equal the smallest member id, which keeps them
stable and reproducible without a counter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .docking import DockPhase, DockPort
from .errors import CommandError, ProtocolError
from .geometry import Pose, rotate_about, norm_deg
from .robot_model import (DriveKind, Health, ModuleClass, ModuleSpec, ModuleState,
                          can_traverse, _path_clear)
from .world import TerrainClass

G = 9.81  # m/s^2

Endpoint = tuple[int, str]          # (module id, face letter)
EdgeKey = tuple[Endpoint, Endpoint]


def edge_key(port_a: DockPort, port_b: DockPort) -> EdgeKey:
    ea = (port_a.owner, port_a.face.value)
    eb = (port_b.owner, port_b.face.value)
    return (ea, eb) if ea <= eb else (eb, ea)


@dataclass
class Organism:
    id: int
    nodes: set[int] = field(default_factory=set)
    edges: set[EdgeKey] = field(default_factory=set)

    def sorted_nodes(self) -> list[int]:
        return sorted(self.nodes)

    def sorted_edges(self) -> list[EdgeKey]:
        return sorted(self.edges)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n: [] for n in self.sorted_nodes()}
        for (a, _), (b, _) in self.sorted_edges():
            adj[a].append(b)
            adj[b].append(a)
        return adj


@dataclass(frozen=True)
class MergeEvent:
    organism_id: int
    absorbed: tuple[int, ...]   # previous organism ids folded in, if any
    nodes: tuple[int, ...]


@dataclass(frozen=True)
class SplitEvent:
    organism_id: int            # organism the edge was removed from
    survivors: tuple[int, ...]  # organism ids existing afterwards
    dissolved: tuple[int, ...]  # modules that became singletons


class OrganismRegistry:
    """All organisms of a run, updated as docked edges come and go."""

    def __init__(self):
        self.organisms: dict[int, Organism] = {}
        self._member_of: dict[int, int] = {}

    def organism_of(self, module_id: int) -> Organism | None:
        org_id = self._member_of.get(module_id)
        return self.organisms[org_id] if org_id is not None else None

    def register_edge(self, port_a: DockPort, port_b: DockPort) -> MergeEvent:
        """Record a freshly docked connection, merging organisms as needed."""
        if port_a.phase is not DockPhase.DOCKED or port_b.phase is not DockPhase.DOCKED:
            raise ProtocolError("register_edge wants two docked ports")
        if port_a.peer is not port_b or port_b.peer is not port_a:
            raise ProtocolError("register_edge wants mutually peered ports")
        key = edge_key(port_a, port_b)
        a, b = port_a.owner, port_b.owner
        org_a = self.organism_of(a)
        org_b = self.organism_of(b)
        absorbed = []
        if org_a is None and org_b is None:
            org = Organism(id=min(a, b), nodes={a, b}, edges={key})
        elif org_a is org_b:
            org = org_a
            org.edges.add(key)  # extra edge closing a loop
        else:
            parts = [o for o in (org_a, org_b) if o is not None]
            nodes = {a, b}
            edges = {key}
            for o in parts:
                nodes |= o.nodes
                edges |= o.edges
                absorbed.append(o.id)
                del self.organisms[o.id]
            org = Organism(id=min(nodes), nodes=nodes, edges=edges)
        self.organisms.pop(org.id, None)
        org.id = min(org.nodes)
        self.organisms[org.id] = org
        for n in org.nodes:
            self._member_of[n] = org.id
        return MergeEvent(org.id, tuple(sorted(set(absorbed) - {org.id})),
                          tuple(org.sorted_nodes()))

    def remove_edge(self, key: EdgeKey) -> SplitEvent:
        """Drop a separated connection; may split the organism apart."""
        (a, _), (b, _) = key
        org = self.organism_of(a)
        if org is None or key not in org.edges:
            raise ValueError(f"edge {key} is not registered")
        old_id = org.id
        org.edges.discard(key)
        del self.organisms[old_id]
        for n in org.nodes:
            del self._member_of[n]

        components = _components(org.nodes, org.edges)
        survivors = []
        dissolved = []
        for comp in components:
            if len(comp) == 1:
                dissolved.append(next(iter(comp)))
                continue
            new_org = Organism(
                id=min(comp), nodes=set(comp),
                edges={e for e in org.edges if e[0][0] in comp and e[1][0] in comp})
            self.organisms[new_org.id] = new_org
            for n in comp:
                self._member_of[n] = new_org.id
            survivors.append(new_org.id)
        return SplitEvent(old_id, tuple(sorted(survivors)), tuple(sorted(dissolved)))

    def drop_module(self, module_id: int) -> list[SplitEvent]:
        """Remove every edge touching a module (used when it is terminally
        detached); returns the splits in deterministic order."""
        events = []
        while True:
            org = self.organism_of(module_id)
            if org is None:
                break
            touching = sorted(e for e in org.edges
                              if e[0][0] == module_id or e[1][0] == module_id)
            if not touching:
                break
            events.append(self.remove_edge(touching[0]))
        return events


def _components(nodes: set[int], edges: set[EdgeKey]) -> list[set[int]]:
    adj: dict[int, set[int]] = {n: set() for n in nodes}
    for (a, _), (b, _) in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen: set[int] = set()
    out = []
    for start in sorted(nodes):
        if start in seen:
            continue
        comp = {start}
        frontier = [start]
        while frontier:
            n = frontier.pop()
            for m in adj[n]:
                if m not in comp:
                    comp.add(m)
                    frontier.append(m)
        seen |= comp
        out.append(comp)
    return out


# -- mass and lift queries ------------------------------------------------


def center_of_mass(members, states: dict[int, ModuleState],
                   specs: dict[int, ModuleSpec]) -> tuple[float, float]:
    """Mass-weighted mean position of the given module ids."""
    members = list(members)
    if not members:
        raise ValueError("center_of_mass of no modules")
    total = 0.0
    sx = sy = 0.0
    for mid in members:
        m = specs[mid].mass
        p = states[mid].pose
        total += m
        sx += m * p.x
        sy += m * p.y
    return sx / total, sy / total


@dataclass(frozen=True)
class LiftQuery:
    """Can `pivot` raise `chain` (ordered outward) with one joint?"""

    pivot: int
    pivot_dof: int
    chain: tuple[int, ...]


def lift_torque_nm(query: LiftQuery, specs: dict[int, ModuleSpec]) -> float:
    """Gravity torque of the hanging chain about the pivot joint.

    Link i (1-based) hangs i edge lengths out, so the requirement is
    g * sum(mass_i * i * edge)."""
    edge = specs[query.pivot].edge_length
    torque = 0.0
    for i, mid in enumerate(query.chain, start=1):
        torque += specs[mid].mass * G * i * edge
    return torque


def lift_feasible(query: LiftQuery, specs: dict[int, ModuleSpec]) -> bool:
    pivot_spec = specs[query.pivot]
    if not 0 <= query.pivot_dof < pivot_spec.dof_count:
        raise ValueError(
            f"pivot dof {query.pivot_dof} invalid for {pivot_spec.module_class.value}")
    return lift_torque_nm(query, specs) <= pivot_spec.max_torque


def _simple_paths(adj: dict[int, list[int]], start: int, limit: int = 24):
    """All simple paths from start, longest first exploration not required;
    yields every path (including the trivial one)."""
    path = [start]
    on_path = {start}

    def walk():
        yield tuple(path)
        if len(path) >= limit:
            return
        for nxt in sorted(adj[path[-1]]):
            if nxt in on_path:
                continue
            path.append(nxt)
            on_path.add(nxt)
            yield from walk()
            on_path.discard(nxt)
            path.pop()

    yield from walk()


def reach_height(org: Organism | None, specs: dict[int, ModuleSpec],
                 stack: tuple[int, ...] | None = None,
                 singleton: int | None = None) -> float:
    """Vertical reach in metres.

    With a designated stack (base first) the answer is all or nothing: if the
    base joint can lift everything above it the stack stands n * edge tall,
    otherwise the modules stay on the ground at one edge length. Without a
    designated stack the organism gets credit for the tallest chain any of
    its simple paths could erect. A lone module reaches its own height.
    """
    if org is None:
        if singleton is None:
            raise ValueError("reach_height needs an organism or a singleton id")
        return specs[singleton].edge_length

    edge = specs[org.sorted_nodes()[0]].edge_length
    if stack is not None:
        if not stack:
            raise ValueError("designated stack is empty")
        base = stack[0]
        q = LiftQuery(pivot=base, pivot_dof=0, chain=tuple(stack[1:]))
        return len(stack) * edge if lift_feasible(q, specs) else edge

    adj = org.adjacency()
    best = 1
    for start in org.sorted_nodes():
        for path in _simple_paths(adj, start):
            if len(path) <= best:
                continue
            q = LiftQuery(pivot=path[0], pivot_dof=0, chain=tuple(path[1:]))
            if lift_feasible(q, specs):
                best = len(path)
    return best * edge


def worst_case_chain(org: Organism, module_id: int) -> tuple[int, ...]:
    """Longest simple path hanging off a module, the load its joint might
    have to swing. Used by the action guard's torque check."""
    adj = org.adjacency()
    best: tuple[int, ...] = ()
    for nb in sorted(adj[module_id]):
        trimmed = {k: [v for v in vs if v != module_id]
                   for k, vs in adj.items() if k != module_id}
        for path in _simple_paths(trimmed, nb):
            if len(path) > len(best):
                best = path
    return best


# -- rigid body motion ----------------------------------------------------


@dataclass(frozen=True)
class Translate:
    """World-frame translation request in m/s."""
    vx: float
    vy: float


@dataclass(frozen=True)
class Turn:
    """Rotation about the organism's center of mass, deg/s."""
    rate: float


@dataclass(frozen=True)
class OrganismMoveResult:
    poses: dict[int, Pose]
    energy_j: dict[int, float]
    blocked: bool


def scout_carry_configuration(org: Organism, states: dict[int, ModuleState]) -> bool:
    """Scouts doing the walking with every other class riding on top."""
    ground_scouts = 0
    for mid in org.nodes:
        st = states[mid]
        if st.module_class is ModuleClass.SCOUT:
            if not st.carried:
                ground_scouts += 1
        elif not st.carried:
            return False
    return ground_scouts >= 2


def organism_move(org: Organism, states: dict[int, ModuleState],
                  specs: dict[int, ModuleSpec], cmd, dt: float,
                  terrain_at, tariff) -> OrganismMoveResult:
    """Move the whole organism rigidly.

    Speed is capped by the slowest ground-contact member. Translation with a
    sideways component against a tracked ground member is refused unless the
    organism is in the scout-carry configuration. If any member's swept path
    is impassable nothing moves at all; rigid bodies do not partially move.
    Motion energy is the locomotion tariff over each member's displacement
    and mass, with carried members' share billed to the ground crew.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    members = org.sorted_nodes()
    ground = []
    for mid in members:
        st = states[mid]
        if st.health is not Health.OK and not st.carried:
            raise CommandError(
                f"module {mid} is {st.health.value} and not carried; "
                f"the organism cannot move")
        if not st.carried:
            ground.append(mid)
    if not ground:
        raise CommandError("organism has no ground-contact members")
    cap = min(specs[mid].max_speed for mid in ground)

    old = {mid: states[mid].pose for mid in members}
    if isinstance(cmd, Translate):
        vx, vy = cmd.vx, cmd.vy
        speed = math.hypot(vx, vy)
        if speed == 0.0:
            return OrganismMoveResult(dict(old), {m: 0.0 for m in members}, False)
        if speed > cap:
            vx *= cap / speed
            vy *= cap / speed
        move_dir = math.degrees(math.atan2(vy, vx))
        carry = scout_carry_configuration(org, states)
        for mid in ground:
            if specs[mid].drive_kind is DriveKind.TRACKED and not carry:
                rel = abs(math.sin(math.radians(move_dir - old[mid].heading)))
                if rel > 1e-9:
                    raise CommandError(
                        f"sideways translation against tracked module {mid} "
                        f"outside a scout-carry configuration")
        dx, dy = vx * dt, vy * dt
        new = {mid: old[mid].translated(dx, dy) for mid in members}
    elif isinstance(cmd, Turn):
        theta = cmd.rate * dt
        if theta == 0.0:
            return OrganismMoveResult(dict(old), {m: 0.0 for m in members}, False)
        cx, cy = center_of_mass(members, states, specs)
        r_max = max(old[mid].distance_to(Pose(cx, cy)) for mid in members)
        if r_max > 0:
            arc_cap = math.degrees(cap * dt / r_max)
            theta = max(-arc_cap, min(arc_cap, theta))
        new = {}
        for mid in members:
            px, py = rotate_about(old[mid].x, old[mid].y, cx, cy, theta)
            new[mid] = Pose(px, py, norm_deg(old[mid].heading + theta))
    else:
        raise CommandError(f"unknown organism command {cmd!r}")

    for mid in members:
        st = states[mid]
        if st.carried:
            # riding modules only collide with solid walls
            clear = _carried_path_clear(old[mid], new[mid], terrain_at)
        else:
            clear = _path_clear(old[mid].x, old[mid].y, new[mid].x, new[mid].y,
                                st.module_class, terrain_at)
        if not clear:
            return OrganismMoveResult(dict(old), {m: 0.0 for m in members}, True)

    raw = {mid: tariff.locomotion_j_per_m_kg * old[mid].distance_to(new[mid])
           * specs[mid].mass for mid in members}
    carried_total = sum(raw[mid] for mid in members if states[mid].carried)
    per_ground_extra = carried_total / len(ground)
    energy = {}
    for mid in members:
        if states[mid].carried:
            energy[mid] = 0.0
        else:
            energy[mid] = raw[mid] + per_ground_extra
    return OrganismMoveResult(new, energy, False)


def _carried_path_clear(a: Pose, b: Pose, terrain_at) -> bool:
    dist = a.distance_to(b)
    steps = max(1, math.ceil(dist / 0.05))
    for i in range(1, steps + 1):
        t = i / steps
        terrain = terrain_at(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
        if terrain is None or terrain is TerrainClass.OBSTACLE:
            return False
    return True
