"""Packed two-buffer fact storage.

Facts live in two fixed-size byte buffers, one for the current state and
one for the next.  A fact is its predicate number (one byte, numbered from
1) followed by its big-endian encoded arguments; facts are packed from
offset 0 and the free tail is all zeroes, so a zero tag marks the end of
the data.  There is no index: every access walks the buffer, which is the
point, since the store spends no memory on pointers.

`int` values are stored sign/magnitude (high bit sign, 15 bits magnitude)
so that -12 becomes 0x80 0x0C, which means -32768 is not representable.
"""

from __future__ import annotations

from .analyzer import CompileLayout
from .ast import ValueType, value_range, value_width

NOT_FOUND = None


class EncodeError(ValueError):
    pass


class StoreFault(Exception):
    """Buffer overflow while inserting; carries occupancy information.

    `log_text` is the short form used for fault events so the generated C,
    which reports through ded_fault() with a static string, can produce an
    identical log line.
    """

    def __init__(self, predicate: str, used: int, size: int):
        super().__init__(
            f"buffer overflow inserting {predicate} ({used}/{size} bytes used)"
        )
        self.predicate = predicate
        self.used = used
        self.size = size
        self.log_text = f"buffer overflow inserting {predicate}"


def encode_value(t: ValueType, v: int) -> bytes:
    lo, hi = value_range(t)
    if not (lo <= v <= hi):
        raise EncodeError(f"value {v} is out of range for {t}")
    if t is ValueType.BYTE:
        return bytes([v])
    if t is ValueType.INT:
        bits = (0x8000 | -v) if v < 0 else v
        return bits.to_bytes(2, "big")
    return v.to_bytes(4, "big")


def decode_value(t: ValueType, data: bytes) -> int:
    if t is ValueType.BYTE:
        return data[0]
    if t is ValueType.INT:
        bits = int.from_bytes(data, "big")
        magnitude = bits & 0x7FFF
        return -magnitude if bits & 0x8000 else magnitude
    return int.from_bytes(data, "big")


class FactStore:
    def __init__(self, layout: CompileLayout):
        self.layout = layout
        size = layout.buffer_size
        self.current_buffer = bytearray(size)
        self.next_buffer = bytearray(size)
        self._size_by_number = layout.size_by_number()

    # -- encoding helpers --------------------------------------------------

    def _encode_fact(self, predicate: str, args: tuple[int, ...]) -> bytes:
        decl = self.layout.declarations[predicate]
        if len(args) != decl.arity:
            raise ValueError(f"{predicate} takes {decl.arity} argument(s)")
        out = bytes([self.layout.number_of(predicate)])
        for t, v in zip(decl.arg_types, args):
            out += encode_value(t, v)
        return out

    def used_bytes(self, buffer: bytearray) -> int:
        return self._free_offset(buffer)

    def _free_offset(self, buffer: bytearray) -> int:
        off = 0
        size = len(buffer)
        while off < size and buffer[off] != 0:
            off += self._size_by_number[buffer[off]]
        return off

    # -- operations ----------------------------------------------------------

    def insert_fact(self, buffer: bytearray, predicate: str, args: tuple[int, ...]) -> bool:
        """Insert unless an identical fact exists; False means duplicate."""
        encoded = self._encode_fact(predicate, args)
        off = 0
        size = len(buffer)
        while off < size and buffer[off] != 0:
            step = self._size_by_number[buffer[off]]
            if buffer[off : off + step] == encoded:
                return False
            off += step
        if off + len(encoded) > size:
            raise StoreFault(predicate, off, size)
        buffer[off : off + len(encoded)] = encoded
        return True

    def find_fact(
        self,
        buffer: bytearray,
        predicate: str,
        pattern: str,
        bound_values: tuple[int, ...] = (),
        start_offset: int = 0,
    ) -> int | None:
        """Offset of the first fact at or after start_offset matching the
        bound positions of `pattern`, or NOT_FOUND."""
        decl = self.layout.declarations[predicate]
        assert len(pattern) == decl.arity and set(pattern) <= {"b", "f"}, (
            f"malformed pattern {pattern!r} for {predicate}"
        )
        num = self.layout.number_of(predicate)
        offsets = self.layout.arg_offsets(predicate)
        probes: list[tuple[int, bytes]] = []
        it = iter(bound_values)
        for i, flag in enumerate(pattern):
            if flag == "b":
                probes.append(
                    (offsets[i], encode_value(decl.arg_types[i], next(it)))
                )
        off = start_offset
        size = len(buffer)
        while off < size and buffer[off] != 0:
            if buffer[off] == num and all(
                buffer[off + pos : off + pos + len(val)] == val for pos, val in probes
            ):
                return off
            off += self._size_by_number[buffer[off]]
        return NOT_FOUND

    def read_arg(self, buffer: bytearray, offset: int, arg_index: int) -> int:
        num = buffer[offset]
        name = self.layout.names_by_number[num - 1]
        decl = self.layout.declarations[name]
        t = decl.arg_types[arg_index]
        pos = offset + self.layout.arg_offsets(name)[arg_index]
        return decode_value(t, bytes(buffer[pos : pos + value_width(t)]))

    def switch_buffers(self) -> None:
        self.current_buffer, self.next_buffer = self.next_buffer, self.current_buffer
        for i in range(len(self.next_buffer)):
            self.next_buffer[i] = 0

    # -- inspection ---------------------------------------------------------

    def facts_in(self, buffer: bytearray):
        """Yield (offset, predicate, args) for every live fact in order."""
        off = 0
        size = len(buffer)
        while off < size and buffer[off] != 0:
            num = buffer[off]
            name = self.layout.names_by_number[num - 1]
            decl = self.layout.declarations[name]
            args = tuple(
                self.read_arg(buffer, off, i) for i in range(decl.arity)
            )
            yield off, name, args
            off += self._size_by_number[num]

    def fact_set(self, buffer: bytearray) -> set[tuple[str, tuple[int, ...]]]:
        return {(name, args) for _, name, args in self.facts_in(buffer)}

    def dump_line(self, step: int) -> str:
        """Current-state facts as `step <n>: p(1000), q(42,12)`, sorted by
        (predicate number, argument bytes)."""
        entries = []
        for off, name, args in self.facts_in(self.current_buffer):
            size = self._size_by_number[self.current_buffer[off]]
            key = bytes(self.current_buffer[off : off + size])
            text = name + (f"({','.join(str(a) for a in args)})" if args else "")
            entries.append((key, text))
        entries.sort(key=lambda e: e[0])
        if not entries:
            return f"step {step}:"
        return f"step {step}: " + ", ".join(text for _, text in entries)
