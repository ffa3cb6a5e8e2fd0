"""Charge levelling across a docked chain, with the books kept exact.

Three modules start at wildly different charge. Each round of sharing moves
at most share_rate_w * dt joules per link toward the emptier side, and the
integer picojoule ledger guarantees nothing leaks, ever.
"""

from orgsim.energy import EnergyLedger, Tariff, share_energy
from orgsim.geometry import Pose
from orgsim.robot_model import ModuleClass, make_module_spec, new_module_state


def main():
    spec = make_module_spec(ModuleClass.SCOUT)
    fractions = {0: 0.95, 1: 0.10, 2: 0.40}
    states = {i: new_module_state(i, spec, Pose(0.1 * i, 0.0, 0.0),
                                  battery_fraction=f)
              for i, f in fractions.items()}
    ledger = EnergyLedger()
    for st in states.values():
        ledger.note_initial(st.battery_pj)
    edges = [((0, "N"), (1, "S")), ((1, "N"), (2, "S"))]
    tariff = Tariff()   # 50 W per link
    dt = 10.0

    total0 = sum(st.battery_pj for st in states.values())
    print("tick   module0  module1  module2   (battery fraction)")
    for tick in range(60):
        if tick < 8 or tick % 4 == 0:
            row = "  ".join(f"{states[i].battery_fraction:7.4f}"
                            for i in range(3))
            print(f"{tick:4d}   {row}")
        moved = share_energy(edges, states, dt, tariff, ledger)
        if not moved:
            row = "  ".join(f"{states[i].battery_fraction:7.4f}"
                            for i in range(3))
            print(f"{tick:4d}   {row}")
            print("\nno transfer possible any more; the chain is level")
            break

    total1 = sum(st.battery_pj for st in states.values())
    print(f"picojoules before: {total0}")
    print(f"picojoules after:  {total1}  (difference {total1 - total0})")
    print(f"ledger residual:   {ledger.residual_j(total1)!r} J")


if __name__ == "__main__":
    main()
