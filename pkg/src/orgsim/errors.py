"""Exception types shared across the simulator.

The split matters for callers: configuration problems are reported before a
run starts, command errors reject a single bad request, protocol errors mean
a docking or organism rule was violated, and an invariant breach aborts the
whole run because internal state went inconsistent.
"""


class SimulationError(Exception):
    """Base class for everything raised by this package on purpose."""


class ConfigError(SimulationError):
    """Bad scenario configuration, map file, or module spec override."""


class CommandError(SimulationError, ValueError):
    """A drive or actuation request the addressed hardware cannot accept."""


class ProtocolError(SimulationError):
    """Illegal docking transition or organism bookkeeping request."""


class FrameworkError(SimulationError):
    """A controller broke its contract with the framework (e.g. proposal budget)."""


class InvariantBreach(SimulationError, RuntimeError):
    """Internal state check failed mid-run. Carries the tick and check name."""

    def __init__(self, tick: int, name: str, detail: str = ""):
        self.tick = tick
        self.name = name
        msg = f"invariant breached at tick {tick}: {name}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ReplayError(SimulationError, ValueError):
    """Event log cannot be parsed or is internally inconsistent."""
