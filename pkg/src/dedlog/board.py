"""Virtual board: pins, clock, scripted inputs, and the event log.

The board stands in for the microcontroller environment.  Input pin levels
come from a trace script; output activity is recorded in an append-only
event log whose text rendering is the observable behavior of a run.

A digitalWrite only produces a log event when it changes the pin's driven
level (an unchanged line is electrically unobservable); switching a pin to
OUTPUT drives it LOW, as the hardware does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

HIGH = 1
LOW = 0
INPUT = 0
OUTPUT = 1

DEFAULT_TICK_MS = 10
DEFAULT_CONSTANTS = {"HIGH": HIGH, "LOW": LOW, "INPUT": INPUT, "OUTPUT": OUTPUT}

_MODE_NAMES = {INPUT: "INPUT", OUTPUT: "OUTPUT"}
_LEVEL_NAMES = {LOW: "LOW", HIGH: "HIGH"}


# ---------------------------------------------------------------------------
# Trace scripts


@dataclass
class TraceScript:
    tick_ms: int = DEFAULT_TICK_MS
    end_ms: int | None = None
    initial_levels: dict[int, int] = field(default_factory=dict)
    events: list[tuple[int, int, int]] = field(default_factory=list)  # (ms, pin, level)


class TraceError(ValueError):
    pass


def parse_trace(text: str, filename: str = "<trace>") -> TraceScript:
    """Parse the line-oriented trace format:

        tick <ms>
        pin <n> <high|low>        initial level
        at <ms> pin <n> <high|low>
        end <ms>
        # comment
    """
    script = TraceScript()

    def fail(lineno: int, message: str) -> None:
        raise TraceError(f"{filename}:{lineno}: {message}")

    def level(lineno: int, word: str) -> int:
        if word == "high":
            return HIGH
        if word == "low":
            return LOW
        fail(lineno, f"expected 'high' or 'low', got {word!r}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "tick" and len(parts) == 2 and parts[1].isdigit():
            script.tick_ms = int(parts[1])
            if script.tick_ms <= 0:
                fail(lineno, "tick must be positive")
        elif parts[0] == "pin" and len(parts) == 3 and parts[1].isdigit():
            script.initial_levels[int(parts[1])] = level(lineno, parts[2])
        elif (
            parts[0] == "at"
            and len(parts) == 5
            and parts[1].isdigit()
            and parts[2] == "pin"
            and parts[3].isdigit()
        ):
            script.events.append((int(parts[1]), int(parts[3]), level(lineno, parts[4])))
        elif parts[0] == "end" and len(parts) == 2 and parts[1].isdigit():
            script.end_ms = int(parts[1])
        else:
            fail(lineno, f"unrecognized trace line {line!r}")
    script.events.sort(key=lambda e: e[0])
    return script


# ---------------------------------------------------------------------------
# Event log


@dataclass(frozen=True)
class PinModeEvent:
    t: int
    pin: int
    mode: int

    def render(self) -> str:
        name = _MODE_NAMES.get(self.mode, str(self.mode))
        return f"[t={self.t}] pinMode({self.pin}, {name})"


@dataclass(frozen=True)
class DigitalWriteEvent:
    t: int
    pin: int
    level: int

    def render(self) -> str:
        return f"[t={self.t}] digitalWrite({self.pin}, {_LEVEL_NAMES[self.level]})"


@dataclass(frozen=True)
class WarningEvent:
    t: int
    text: str

    def render(self) -> str:
        return f"[t={self.t}] WARN {self.text}"


@dataclass(frozen=True)
class FaultEvent:
    t: int
    text: str

    def render(self) -> str:
        return f"[t={self.t}] FAULT {self.text}"


@dataclass(frozen=True)
class StepMarker:
    step: int
    t: int

    def render(self) -> None:  # markers are internal, never printed
        return None


Event = PinModeEvent | DigitalWriteEvent | WarningEvent | FaultEvent | StepMarker


class EventLog:
    def __init__(self) -> None:
        self.events: list[Event] = []

    def append(self, event: Event) -> None:
        self.events.append(event)

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def lines(self) -> list[str]:
        out = []
        for e in self.events:
            text = e.render()
            if text is not None:
                out.append(text)
        return out

    def render(self) -> str:
        lines = self.lines()
        return "\n".join(lines) + ("\n" if lines else "")

    def of_type(self, cls) -> list[Event]:
        return [e for e in self.events if isinstance(e, cls)]

    def in_step(self, step: int) -> list[Event]:
        collected: list[Event] = []
        active = False
        for e in self.events:
            if isinstance(e, StepMarker):
                if e.step == step:
                    active = True
                    continue
                if active:
                    break
                continue
            if active:
                collected.append(e)
        return collected


# ---------------------------------------------------------------------------
# Virtual board


class VirtualBoard:
    def __init__(
        self,
        trace: TraceScript | None = None,
        log: EventLog | None = None,
        constants: dict[str, int] | None = None,
    ):
        trace = trace or TraceScript()
        self.log = log if log is not None else EventLog()
        self.tick_ms = trace.tick_ms
        self.end_ms = trace.end_ms
        self.total_ms = 0  # monotonic; clock_ms wraps like the target's millis
        self.pin_modes: dict[int, int] = {}
        self.input_levels: dict[int, int] = dict(trace.initial_levels)
        self.output_levels: dict[int, int] = {}
        self.constants = dict(DEFAULT_CONSTANTS)
        if constants:
            self.constants.update(constants)
        self._events = list(trace.events)
        self._next_event = 0

    @property
    def clock_ms(self) -> int:
        return self.total_ms & 0xFFFFFFFF

    def advance_clock(self) -> None:
        """Advance one tick and apply every scripted event now due."""
        self.total_ms += self.tick_ms
        while self._next_event < len(self._events):
            t, pin, lvl = self._events[self._next_event]
            if t > self.total_ms:
                break
            self.input_levels[pin & 0xFF] = lvl
            self._next_event += 1

    # -- pin interface (mirrors the target's core functions) --------------

    def pin_mode(self, pin: int, mode: int) -> None:
        pin &= 0xFF
        self.pin_modes[pin] = mode
        if mode == OUTPUT:
            self.output_levels[pin] = LOW
        self.log.append(PinModeEvent(self.clock_ms, pin, mode))

    def digital_write(self, pin: int, level: int) -> None:
        pin &= 0xFF
        level = HIGH if level else LOW
        if self.pin_modes.get(pin) != OUTPUT:
            self.log.append(
                WarningEvent(self.clock_ms, f"digitalWrite on pin {pin} not set to OUTPUT")
            )
        if self.output_levels.get(pin) != level:
            self.log.append(DigitalWriteEvent(self.clock_ms, pin, level))
            self.output_levels[pin] = level

    def digital_read(self, pin: int) -> int:
        pin &= 0xFF
        if self.pin_modes.get(pin) != INPUT:
            self.log.append(
                WarningEvent(self.clock_ms, f"digitalRead on pin {pin} not set to INPUT")
            )
        return self.input_levels.get(pin, LOW)

    def millis(self) -> int:
        return self.clock_ms
