"""A run log defends itself: replay re-runs the embedded scenario and
compares every line, so a single flipped character gets caught.
"""

import tempfile
from pathlib import Path

from orgsim.config import load_scenario_file
from orgsim.errors import ReplayError
from orgsim.harness import replay_file, run_scenario


def main():
    cfg = load_scenario_file("configs/survival_zero.cfg")
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        print("running survival_zero for 300 ticks ...")
        metrics = run_scenario(cfg, ticks=300, out_dir=out)
        log = out / "events.log"
        size = log.stat().st_size
        print(f"log: {size} bytes, {metrics.events} events, "
              f"digest {metrics.digest}\n")

        again = replay_file(log)
        print(f"honest replay:   ok, digest {again.digest}")

        # now nudge one module's spawn heading and try again
        text = log.read_text()
        tampered = text.replace("heading=90.0", "heading=91.0", 1)
        log.write_text(tampered)
        try:
            replay_file(log)
        except ReplayError as exc:
            print(f"tampered replay: {exc}")

        # chopping off the tail is also caught
        log.write_text("\n".join(text.splitlines()[:-5]) + "\n")
        try:
            replay_file(log)
        except ReplayError as exc:
            print(f"truncated replay: {exc}")


if __name__ == "__main__":
    main()
