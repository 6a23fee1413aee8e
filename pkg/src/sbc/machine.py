"""Simulated streaming machines with explicit tapes and a resource ledger.

Five machine flavours are supported, ordered roughly by capability:

* ``standard``   - one forward pass over the input, write-only output.
* ``multipass``  - the input tape is read-only but may be rewound; every
  rewind starts a new counted pass.
* ``wstreams``   - each pass may rewrite the tape, growing it by at most a
  configured constant factor.
* ``streamsort`` - rewriting plus oracle sort passes over the tape.
* ``readwrite``  - a read-write input tape, a configurable number of
  read-write work tapes, and a write-only output tape.

Algorithms in this package run against this interface so that their pass
counts and charged memory can be asserted by tests instead of trusted.

Memory accounting is explicit: algorithms register the bits of working
state they hold via :meth:`Machine.charge_memory` and release them when
done.  Host-language overhead (lists, dicts, interpreter frames) is
deliberately not counted; the budget models algorithmic state only.

A pass is one one-directional sweep of one tape head.  In the read-write
model every sweep of every tape is counted; in the other models the
write-only output head is free (output is produced "on the way" during the
single data pass).  A rewrite pass in wstreams/streamsort may grow the
tape by at most ``expansion_factor`` times, plus a one-record allowance so
that boundary markers (for example an appended terminator) are expressible
on tiny tapes.

Tapes store byte-string records.  Record framing is what makes expansion
accounting exact: the bit size of a tape is eight times the sum of its
record lengths.

Concurrency: a machine instance is single-threaded.  Distinct instances
may run on distinct threads, and an instance may be handed between threads
whenever no pass is open.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence


class MachineError(Exception):
    """Base class for streaming-model violations."""


class CapabilityError(MachineError):
    """The requested operation is not permitted by the configured model."""


class BudgetExceededError(MachineError):
    """Charged memory exceeded the configured budget."""


class ExpansionError(MachineError):
    """A rewrite pass grew the tape beyond the allowed expansion factor."""


class ModelKind(enum.Enum):
    STANDARD = "standard"
    MULTIPASS = "multipass"
    W_STREAMS = "wstreams"
    STREAM_SORT = "streamsort"
    READ_WRITE = "readwrite"


INPUT = "input"
OUTPUT = "output"

FORWARD = "fwd"
REVERSE = "rev"

READ = "read"
WRITE = "write"
REWRITE = "rewrite"

_REWRITE_MODELS = (ModelKind.W_STREAMS, ModelKind.STREAM_SORT, ModelKind.READ_WRITE)


@dataclass(frozen=True)
class MachineConfig:
    model: ModelKind
    memory_budget_bits: int
    expansion_factor: float = 2.0
    work_tapes: int = 0
    # Ledger passes charged per oracle sort pass; the model only promises
    # "a constant number", so the constant is configurable.
    sort_pass_cost: int = 1

    def __post_init__(self) -> None:
        if self.memory_budget_bits <= 0:
            raise ValueError("memory_budget_bits must be positive")
        if self.expansion_factor < 1:
            raise ValueError("expansion_factor must be >= 1")
        if self.work_tapes < 0:
            raise ValueError("work_tapes must be >= 0")
        if self.work_tapes and self.model is not ModelKind.READ_WRITE:
            raise ValueError("work tapes exist only in the read-write model")
        if self.sort_pass_cost < 1:
            raise ValueError("sort_pass_cost must be >= 1")


@dataclass
class MachineLedger:
    passes: int = 0
    sort_passes: int = 0
    peak_memory_bits: int = 0
    total_output_bits: int = 0
    per_pass_tape_bits: list = field(default_factory=list)

    def snapshot(self) -> "MachineLedger":
        return MachineLedger(
            self.passes,
            self.sort_passes,
            self.peak_memory_bits,
            self.total_output_bits,
            list(self.per_pass_tape_bits),
        )


class Tape:
    __slots__ = ("records",)

    def __init__(self, records: Optional[Sequence[bytes]] = None):
        self.records: list = list(records) if records else []

    def bits(self) -> int:
        return 8 * sum(map(len, self.records))


class TapePass:
    """One one-directional sweep of a single tape head.

    Use as a context manager, or call :meth:`close` explicitly; the sweep's
    effects (tape replacement, expansion check, trace line) happen at close.
    """

    __slots__ = (
        "machine", "tape_id", "direction", "mode", "index",
        "_pos", "_writes", "_bytes_read", "_bytes_written",
        "_bits_before", "_max_rec_bits", "closed",
    )

    def __init__(self, machine: "Machine", tape_id: str, direction: str, mode: str, index: int):
        self.machine = machine
        self.tape_id = tape_id
        self.direction = direction
        self.mode = mode
        self.index = index
        records = machine.tapes[tape_id].records
        self._pos = 0 if direction == FORWARD else len(records) - 1
        self._writes: list = []
        self._bytes_read = 0
        self._bytes_written = 0
        self._bits_before = machine.tapes[tape_id].bits()
        self._max_rec_bits = 0
        self.closed = False

    # -- reading ---------------------------------------------------------

    def read(self) -> Optional[bytes]:
        if self.mode == WRITE:
            raise MachineError("write pass cannot read")
        records = self.machine.tapes[self.tape_id].records
        if self.direction == FORWARD:
            if self._pos >= len(records):
                return None
            rec = records[self._pos]
            self._pos += 1
        else:
            if self._pos < 0:
                return None
            rec = records[self._pos]
            self._pos -= 1
        self._bytes_read += len(rec)
        return rec

    def read_all(self) -> list:
        """Sweep the head to the end, returning the remaining records."""
        if self.mode == WRITE:
            raise MachineError("write pass cannot read")
        records = self.machine.tapes[self.tape_id].records
        if self.direction == FORWARD:
            out = records[self._pos:]
            self._pos = len(records)
        else:
            out = records[self._pos::-1] if self._pos >= 0 else []
            self._pos = -1
        self._bytes_read += sum(map(len, out))
        return out

    def __iter__(self) -> Iterator[bytes]:
        while True:
            rec = self.read()
            if rec is None:
                return
            yield rec

    # -- writing ---------------------------------------------------------

    def write(self, rec: bytes) -> None:
        if self.mode == READ:
            raise MachineError("read pass cannot write")
        self._writes.append(rec)
        self._bytes_written += len(rec)
        if 8 * len(rec) > self._max_rec_bits:
            self._max_rec_bits = 8 * len(rec)

    def write_many(self, recs: Sequence[bytes]) -> None:
        if self.mode == READ:
            raise MachineError("read pass cannot write")
        if not recs:
            return
        self._writes.extend(recs)
        self._bytes_written += sum(map(len, recs))
        biggest = 8 * max(map(len, recs))
        if biggest > self._max_rec_bits:
            self._max_rec_bits = biggest

    # -- lifecycle -------------------------------------------------------

    def close(self) -> None:
        if self.closed:
            return
        self.closed = True
        machine = self.machine
        tape = machine.tapes[self.tape_id]
        if self.mode in (WRITE, REWRITE):
            if self.mode == REWRITE and machine.config.model in (
                ModelKind.W_STREAMS,
                ModelKind.STREAM_SORT,
            ):
                out_bits = 8 * self._bytes_written
                allowed = (
                    math.ceil(machine.config.expansion_factor * self._bits_before)
                    + self._max_rec_bits
                )
                if out_bits > allowed:
                    raise ExpansionError(
                        f"rewrite pass wrote {out_bits} bits from {self._bits_before}; "
                        f"allowed {allowed} at factor {machine.config.expansion_factor}"
                    )
            tape.records = self._writes
        del machine._open[self.tape_id]
        machine._ledger.per_pass_tape_bits.append(tape.bits())
        if machine.trace is not None:
            machine.trace(
                f"pass={self.index} tape={self.tape_id} dir={self.direction} "
                f"bytes_in={self._bytes_read} bytes_out={self._bytes_written} "
                f"mem_peak={machine._ledger.peak_memory_bits}"
            )

    def __enter__(self) -> "TapePass":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class Machine:
    def __init__(self, config: MachineConfig, input_data: bytes = b""):
        self.config = config
        self.tapes = {
            INPUT: Tape([input_data[i:i + 1] for i in range(len(input_data))]),
            OUTPUT: Tape(),
        }
        for w in range(config.work_tapes):
            self.tapes[f"work{w}"] = Tape()
        self._ledger = MachineLedger()
        self._charged = 0
        self._input_reads = 0
        self._open: dict = {}
        self.trace: Optional[Callable[[str], None]] = None

    # -- passes ----------------------------------------------------------

    def begin_pass(self, tape_id: str = INPUT, direction: str = FORWARD, mode: str = READ) -> TapePass:
        self._check_pass(tape_id, direction, mode)
        if tape_id in self._open:
            raise MachineError(f"tape {tape_id!r} already has an open pass")
        if mode == READ and tape_id == INPUT:
            self._input_reads += 1
        self._ledger.passes += 1
        handle = TapePass(self, tape_id, direction, mode, self._ledger.passes)
        self._open[tape_id] = handle
        return handle

    def _check_pass(self, tape_id: str, direction: str, mode: str) -> None:
        model = self.config.model
        if tape_id == OUTPUT:
            raise CapabilityError("the output tape is write-only; use write_output")
        if tape_id not in self.tapes:
            raise CapabilityError(f"no tape {tape_id!r} in model {model.value}")
        if direction not in (FORWARD, REVERSE):
            raise ValueError(f"unknown direction {direction!r}")
        if mode not in (READ, WRITE, REWRITE):
            raise ValueError(f"unknown mode {mode!r}")
        if direction == REVERSE and (model is not ModelKind.READ_WRITE or mode != READ):
            raise CapabilityError("reverse sweeps are read passes in the read-write model only")
        if mode == READ:
            if model is ModelKind.STANDARD and tape_id == INPUT and self._input_reads >= 1:
                raise CapabilityError("standard model permits exactly one input pass")
            return
        if mode == WRITE:
            if model is not ModelKind.READ_WRITE:
                raise CapabilityError("truncating write passes need the read-write model")
            return
        # mode == REWRITE
        if model not in _REWRITE_MODELS:
            raise CapabilityError(f"model {model.value} cannot rewrite tapes")

    def write_output(self, rec: bytes) -> None:
        self.tapes[OUTPUT].records.append(rec)
        self._ledger.total_output_bits += 8 * len(rec)

    def sort_pass(self, key: Callable[[bytes], object], stable: bool = True) -> None:
        """Oracle sort of the stream tape (streamsort model only)."""
        if self.config.model is not ModelKind.STREAM_SORT:
            raise CapabilityError("sort passes need the streamsort model")
        if self._open:
            raise MachineError("cannot sort while a pass is open")
        tape = self.tapes[INPUT]
        tape.records.sort(key=key)  # list.sort is stable; unstable requests get stability for free
        self._ledger.sort_passes += 1
        self._ledger.passes += self.config.sort_pass_cost
        self._ledger.per_pass_tape_bits.append(tape.bits())
        if self.trace is not None:
            self.trace(
                f"pass={self._ledger.passes} tape={INPUT} dir={FORWARD} "
                f"bytes_in={tape.bits() // 8} bytes_out={tape.bits() // 8} "
                f"mem_peak={self._ledger.peak_memory_bits}"
            )

    # -- memory ----------------------------------------------------------

    def charge_memory(self, bits: int) -> None:
        if bits < 0:
            raise ValueError("bits must be >= 0")
        new = self._charged + bits
        if new > self.config.memory_budget_bits:
            raise BudgetExceededError(
                f"charged {new} bits exceeds budget {self.config.memory_budget_bits}"
            )
        self._charged = new
        if new > self._ledger.peak_memory_bits:
            self._ledger.peak_memory_bits = new

    def release_memory(self, bits: int) -> None:
        if bits < 0:
            raise ValueError("bits must be >= 0")
        if bits > self._charged:
            raise ValueError("release below zero")
        self._charged -= bits

    # -- inspection --------------------------------------------------------

    def ledger(self) -> MachineLedger:
        return self._ledger.snapshot()


def new_machine(config: MachineConfig, input_data: bytes = b"") -> Machine:
    """Fresh machine with the input loaded one byte per record, ledger zeroed."""
    return Machine(config, input_data)


def _merge_runs(a: list, b: list, key) -> list:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    ka = key(a[0])
    kb = key(b[0])
    la, lb = len(a), len(b)
    while True:
        if ka <= kb:  # ties from the earlier run keep the merge stable
            out.append(a[i])
            i += 1
            if i == la:
                out.extend(b[j:])
                return out
            ka = key(a[i])
        else:
            out.append(b[j])
            j += 1
            if j == lb:
                out.extend(a[i:])
                return out
            kb = key(b[j])


def tape_merge_sort(machine: Machine, tape_id: str, key, scratch_a: str, scratch_b: str) -> None:
    """Stable bottom-up two-way merge sort of one tape (read-write model).

    Runs are distributed alternately onto the two scratch tapes and merged
    back, doubling the run length each level: ceil(log2 r) levels at six
    head sweeps per level.  Scratch tape contents are destroyed.
    """
    n = len(machine.tapes[tape_id].records)
    if n <= 1:
        return
    run = 1
    while run < n:
        with machine.begin_pass(tape_id) as src, \
                machine.begin_pass(scratch_a, mode=WRITE) as wa, \
                machine.begin_pass(scratch_b, mode=WRITE) as wb:
            records = src.read_all()
            outs = (wa, wb)
            for idx, start in enumerate(range(0, n, run)):
                outs[idx & 1].write_many(records[start:start + run])
        with machine.begin_pass(scratch_a) as ra, \
                machine.begin_pass(scratch_b) as rb, \
                machine.begin_pass(tape_id, mode=WRITE) as out:
            a = ra.read_all()
            b = rb.read_all()
            merged = []
            pos = 0
            while pos < len(a) or pos < len(b):
                merged.extend(_merge_runs(a[pos:pos + run], b[pos:pos + run], key))
                pos += run
            out.write_many(merged)
        run <<= 1
