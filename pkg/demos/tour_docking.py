"""Walk two modules through the whole docking handshake, one tick at a time.

The pair only advances past Aligning once the faces actually oppose within
tolerance, so the script drags module B into place to make that happen.
"""

from orgsim.docking import (ROUGH_TOLERANCE, DockPhase, Face, TickInput,
                            advance_dock, attempt_align, face_center,
                            make_ports, undock)
from orgsim.geometry import Pose

EDGE = 0.10


def show(tick, note, pa, pb, gap):
    print(f"t={tick:2d}  {pa.phase.value:>11s} / {pb.phase.value:<11s}"
          f"  gap={gap:.3f} m  {note}")


def main():
    a_pose = Pose(1.00, 1.00, 0.0)
    b_pose = Pose(1.30, 1.02, 180.0)   # 20 cm out, slightly off axis
    pa = make_ports(0)[list(Face).index(Face.NORTH)]
    pb = make_ports(1)[list(Face).index(Face.NORTH)]

    print("module 0 offers its north face, module 1 approaches nose first\n")
    for tick in range(1, 12):
        # module B creeps 5 cm per tick until the faces kiss
        if b_pose.x > 1.10:
            b_pose = Pose(max(1.10, b_pose.x - 0.05), 1.00, 180.0)
            note = "B drives closer"
        else:
            note = ""
        ax, ay = face_center(a_pose, pa.face, EDGE)
        bx, by = face_center(b_pose, pb.face, EDGE)
        gap = ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5
        aligned = attempt_align(a_pose, pa.face, b_pose, pb.face,
                                ROUGH_TOLERANCE, EDGE)
        advance_dock(pa, pb, TickInput(aligned=aligned))
        show(tick, note, pa, pb, gap)
        if pa.phase is DockPhase.DOCKED:
            break

    print("\nnow module 0 lets go and B backs away\n")
    undock(pa)
    for tick in range(1, 6):
        if pa.phase is DockPhase.SEPARATING:
            b_pose = Pose(b_pose.x + 0.05, b_pose.y, 180.0)
        ax, ay = face_center(a_pose, pa.face, EDGE)
        bx, by = face_center(b_pose, pb.face, EDGE)
        gap = ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5
        advance_dock(pa, pb, TickInput(separated=gap >= EDGE))
        show(tick, "", pa, pb, gap)
        if pa.phase is DockPhase.FREE:
            break
    print("\nboth ports free again; peers cleared:",
          pa.peer is None and pb.peer is None)


if __name__ == "__main__":
    main()
