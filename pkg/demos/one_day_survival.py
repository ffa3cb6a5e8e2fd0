"""One simulated day of the ample-socket colony, with the story retold
from the event log afterwards.

Sockets hang at 0.30 m, one edge above anything a lone module can touch,
so the colony has to stack three high before anyone gets to drink.
"""

from collections import Counter

from orgsim.config import load_scenario_file
from orgsim.harness import Simulation


def main():
    cfg = load_scenario_file("configs/survival_ample.cfg")
    sim = Simulation(cfg)
    print(f"running {cfg.name}: {cfg.module_count} modules, 1 day "
          f"({cfg.ticks_per_day} ticks) ...")
    metrics = sim.run(cfg.ticks_per_day)

    kinds = Counter(line.split()[2] for line in sim.log.lines
                    if not line.startswith("#"))
    print("\nevent mix:")
    for kind, count in kinds.most_common():
        print(f"  {kind:10s} {count}")

    first_merge = next(l for l in sim.log.lines if " merge " in l)
    first_grant = next(l for l in sim.log.lines
                       if " recharge " in l and "state=granted" in l)
    print(f"\nfirst merge:           {first_merge}")
    print(f"first granted recharge: {first_grant}")

    print(f"\nsurvivors {metrics.survivors}/{cfg.module_count}, "
          f"{metrics.merges} merges, {metrics.splits} splits")
    print(f"drawn from the wall {metrics.drawn_j:.0f} J, "
          f"banked {metrics.charged_j:.0f} J "
          f"(charger efficiency {cfg.tariff.recharge_efficiency})")
    print(f"ledger residual {metrics.residual_j!r} J")
    print(f"log digest {metrics.digest}")


if __name__ == "__main__":
    main()
