"""Compressor pipelines and the byte-exact container format.

A container is::

    magic "SBC1" | pipeline (1) | sigma (1) | k (1) | n varint |
    block_len varint | payload_bits varint | alphabet (sigma bytes) | payload

Varints are unsigned little-endian base-128.  ``k`` is 255 when the
pipeline has no fixed context length (or selected it automatically); the
alphabet table maps ranks back to the caller's byte values so decoding
needs no side information.  All pipelines shift transform symbols up by
one before modelling so the inline end marker becomes symbol 0.

The block pipeline splits the input into blocks sized ``ceil(n**(c-e/2))``
and compresses each independently with the transform+distance+adaptive
stand-in coder, framing every block with its own varint lengths so
decoding is a single forward walk.  When the total length is unknown up
front, block sizes derive from a running estimate that starts at 16 and
doubles every time it is consumed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from .coders import FreqModel, SymbolDecoder, SymbolEncoder, kth_order_decode, kth_order_encode
from .machine import INPUT, Machine
from .transforms import _dc_reconstruct, bwt, bwt_inverse, dc_encode, st


class FormatError(Exception):
    """Container or payload data is malformed."""


class PipelineId(enum.IntEnum):
    BWT_MTF_RLE_AC = 1
    BWT_DC_AC = 2
    ST_DC_AC = 3
    BLOCK_KTH = 4
    KTH_ORDER = 5


K_AUTO = 255
MAGIC = b"SBC1"

#: Pipelines with no decode procedure (the length-k sort is one-way).
ENCODE_ONLY = frozenset({PipelineId.ST_DC_AC})


def write_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varints are unsigned")
    out = bytearray()
    while True:
        b = value & 0x7F
        value >>= 7
        out.append(b | (0x80 if value else 0))
        if not value:
            return bytes(out)


def read_varint(data: bytes, pos: int) -> Tuple[int, int]:
    value = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise FormatError("truncated varint")
        b = data[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise FormatError("varint too long")


@dataclass(frozen=True)
class ContainerHeader:
    pipeline: PipelineId
    sigma: int
    k: int
    n: int
    block_len: int
    payload_bits: int

    def serialize(self) -> bytes:
        if not 0 <= self.sigma <= 255:
            raise ValueError("sigma must fit one byte")
        if not 0 <= self.k <= 255:
            raise ValueError("k must fit one byte")
        return (
            MAGIC
            + bytes([int(self.pipeline), self.sigma, self.k])
            + write_varint(self.n)
            + write_varint(self.block_len)
            + write_varint(self.payload_bits)
        )


def parse_header(data: bytes, pos: int = 0) -> Tuple[ContainerHeader, int]:
    if data[pos:pos + 4] != MAGIC:
        raise FormatError("bad magic")
    pos += 4
    if pos + 3 > len(data):
        raise FormatError("truncated header")
    try:
        pipeline = PipelineId(data[pos])
    except ValueError:
        raise FormatError(f"unknown pipeline id {data[pos]}") from None
    sigma = data[pos + 1]
    k = data[pos + 2]
    pos += 3
    n, pos = read_varint(data, pos)
    block_len, pos = read_varint(data, pos)
    payload_bits, pos = read_varint(data, pos)
    return ContainerHeader(pipeline, sigma, k, n, block_len, payload_bits), pos


def build_container(header: ContainerHeader, alphabet: bytes, payload: bytes) -> bytes:
    if len(alphabet) != header.sigma:
        raise ValueError("alphabet table must have sigma entries")
    if (header.payload_bits + 7) // 8 != len(payload):
        raise ValueError("payload_bits inconsistent with payload")
    return header.serialize() + alphabet + payload


def parse_container(data: bytes) -> Tuple[ContainerHeader, bytes, bytes]:
    header, pos = parse_header(data)
    alphabet = data[pos:pos + header.sigma]
    if len(alphabet) != header.sigma:
        raise FormatError("truncated alphabet table")
    payload = data[pos + header.sigma:]
    if (header.payload_bits + 7) // 8 != len(payload):
        raise FormatError("payload length mismatch")
    return header, alphabet, payload


def _identity_alphabet(sigma: int) -> bytes:
    return bytes(range(sigma))


def _ceil_log2(x: int) -> int:
    return (x - 1).bit_length() if x > 1 else 0


def _charge(machine: Optional[Machine], bits: int) -> int:
    if machine is not None and bits:
        machine.charge_memory(bits)
    return bits


def _release(machine: Optional[Machine], bits: int) -> None:
    if machine is not None and bits:
        machine.release_memory(bits)


# -- move-to-front + run-length + adaptive payload -------------------------


def _mtf_rle_ac_payload(symbols: Iterable[int], sigma_total: int, machine=None) -> bytes:
    """One streaming pass: per-symbol list index, maximal runs, then coding.

    ``symbols`` are shifted values 0..sigma_total-1 (end marker already 0).
    """
    sym_model = FreqModel(sigma_total)
    run_model = FreqModel(2)
    charged = _charge(
        machine,
        sym_model.state_bits() + run_model.state_bits()
        + sigma_total * max(1, _ceil_log2(max(sigma_total, 2)))  # the self-organizing list
        + 128 + 64,  # coder registers and run bookkeeping
    )
    enc = SymbolEncoder()
    table = list(range(sigma_total))
    prev_index = -1
    run = 0
    for c in symbols:
        i = table.index(c)
        if i:
            table.insert(0, table.pop(i))
        if i == prev_index:
            run += 1
        else:
            if run:
                enc.put(sym_model, prev_index)
                enc.put_delta(run_model, run)
            prev_index = i
            run = 1
    payload = b""
    if run:
        enc.put(sym_model, prev_index)
        enc.put_delta(run_model, run)
        payload = enc.finish()
    _release(machine, charged)
    return payload


def _mtf_rle_ac_decode(payload: bytes, count: int, sigma_total: int) -> List[int]:
    if count == 0:
        return []
    sym_model = FreqModel(sigma_total)
    run_model = FreqModel(2)
    dec = SymbolDecoder(payload)
    table = list(range(sigma_total))
    out: List[int] = []
    while len(out) < count:
        index = dec.get(sym_model)
        run = dec.get_delta(run_model)
        if len(out) + run > count:
            raise FormatError("run overflows declared length")
        for _ in range(run):
            c = table[index]
            out.append(c)
            if index:
                table.insert(0, table.pop(index))
        # After the first emission the repeated index keeps resolving
        # against the updated list, mirroring the encoder exactly.
    return out


def mtf_rle_ac_encode_stream(machine: Machine, sigma: int) -> bytes:
    """Standard-model pass over an already-transformed stream on the input tape.

    Tape records are single shifted symbols (end marker 0, rank r at r+1).
    The payload is written to the output tape and returned.
    """
    with machine.begin_pass(INPUT) as p:
        payload = _mtf_rle_ac_payload((rec[0] for rec in p), sigma + 1, machine)
    machine.write_output(payload)
    return payload


# -- distance coding + adaptive payload ------------------------------------


def _dc_ac_payload(body_shifted: Sequence[int], sigma_total: int, machine=None) -> bytes:
    """First-occurrence table then per-run gaps, all delta-coded adaptively."""
    n = len(body_shifted)
    fo_model = FreqModel(2)
    gap_model = FreqModel(2)
    charged = _charge(
        machine,
        fo_model.state_bits() + gap_model.state_bits()
        + sigma_total * _ceil_log2(n + 2)  # last-occurrence register per symbol
        + 2 * _ceil_log2(n + 2) + 128,
    )
    stream = dc_encode(body_shifted, alphabet=range(sigma_total))
    enc = SymbolEncoder()
    for sym in range(sigma_total):
        pos = stream.first_occurrence[sym]
        enc.put_delta(fo_model, 1 if pos is None else pos + 2)
    for gap in stream.gaps:
        enc.put_delta(gap_model, gap + 1)
    _release(machine, charged)
    return enc.finish()


def _dc_ac_decode(payload: bytes, count: int, sigma_total: int) -> List[int]:
    dec = SymbolDecoder(payload)
    fo_model = FreqModel(2)
    gap_model = FreqModel(2)
    first = {}
    for sym in range(sigma_total):
        v = dec.get_delta(fo_model) - 1
        first[sym] = None if v == 0 else v - 1
    try:
        return _dc_reconstruct(first, count, lambda: dec.get_delta(gap_model) - 1)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def dc_ac_encode_stream(machine: Machine, sigma: int) -> bytes:
    """Distance-code a transformed stream using read-write tape passes.

    Gap emission looks forward to each symbol's next occurrence, so the
    machine realization scans the input tape backwards with one
    last-seen register per symbol, parks the per-run records on a work
    tape, and replays them in forward order; constant passes, logarithmic
    memory.  Requires a read-write machine with at least one work tape.
    """
    from .machine import REVERSE, WRITE, CapabilityError, ModelKind

    if machine.config.model is not ModelKind.READ_WRITE:
        raise CapabilityError("streaming distance coding needs the read-write model")
    if machine.config.work_tapes < 1:
        raise CapabilityError("streaming distance coding needs a work tape")
    n = len(machine.tapes[INPUT].records)
    sigma_total = sigma + 1
    charged = _charge(machine, sigma_total * _ceil_log2(n + 2) * 2 + 256)
    # Reverse sweep: per maximal run, the distance from its end to the
    # symbol's next occurrence (0 when it never recurs), emitted last run
    # first, plus each symbol's first occurrence as a side product.
    next_start: dict = {}
    first: dict = {sym: None for sym in range(sigma_total)}
    run_end = None
    run_sym = None
    pos = n
    with machine.begin_pass(INPUT, direction=REVERSE) as rp, \
            machine.begin_pass("work0", mode=WRITE) as wp:
        for rec in rp:
            pos -= 1
            sym = rec[0]
            first[sym] = pos
            if sym != run_sym:
                if run_sym is not None:
                    nxt = next_start.get(run_sym)
                    gap = 0 if nxt is None else nxt - run_end
                    wp.write(write_varint(gap))
                    next_start[run_sym] = pos + 1
                run_sym = sym
                run_end = pos
        if run_sym is not None:
            nxt = next_start.get(run_sym)
            wp.write(write_varint(0 if nxt is None else nxt - run_end))
    # Replay reversed run records forward and code everything.
    enc = SymbolEncoder()
    fo_model = FreqModel(2)
    gap_model = FreqModel(2)
    for sym in range(sigma_total):
        p = first[sym]
        enc.put_delta(fo_model, 1 if p is None else p + 2)
    with machine.begin_pass("work0", direction=REVERSE) as rp:
        for rec in rp.read_all():
            gap, _ = read_varint(rec, 0)
            enc.put_delta(gap_model, gap + 1)
    payload = enc.finish()
    _release(machine, charged)
    machine.write_output(payload)
    return payload


# -- whole-string pipelines -------------------------------------------------


def encode_bwt_mtf_rle_ac(s: Sequence[int], sigma: int, alphabet: Optional[bytes] = None) -> bytes:
    body = bwt(s, sigma)
    payload = _mtf_rle_ac_payload((c + 1 for c in body), sigma + 1)
    header = ContainerHeader(PipelineId.BWT_MTF_RLE_AC, sigma, K_AUTO, len(s), 0, 8 * len(payload))
    return build_container(header, alphabet or _identity_alphabet(sigma), payload)


def encode_bwt_dc_ac(s: Sequence[int], sigma: int, alphabet: Optional[bytes] = None) -> bytes:
    body = bwt(s, sigma)
    payload = _dc_ac_payload([c + 1 for c in body], sigma + 1)
    header = ContainerHeader(PipelineId.BWT_DC_AC, sigma, K_AUTO, len(s), 0, 8 * len(payload))
    return build_container(header, alphabet or _identity_alphabet(sigma), payload)


def encode_st_dc_ac(s: Sequence[int], sigma: int, k_max: int,
                    alphabet: Optional[bytes] = None) -> bytes:
    """Try every context length up to k_max and keep the shortest payload.

    Encode-only: the length-k sort has no known inverse in these models, so
    no decode procedure exists for this pipeline.
    """
    if not 0 <= k_max < K_AUTO:
        raise ValueError("k_max must be in 0..254")
    best_payload = None
    best_k = 0
    for k in range(k_max + 1):
        body = st(s, k, sigma)
        payload = _dc_ac_payload([c + 1 for c in body], sigma + 1)
        if best_payload is None or len(payload) < len(best_payload):
            best_payload = payload
            best_k = k
    header = ContainerHeader(PipelineId.ST_DC_AC, sigma, best_k, len(s), 0, 8 * len(best_payload))
    return build_container(header, alphabet or _identity_alphabet(sigma), best_payload)


def encode_kth_order(s: Sequence[int], sigma: int, k: int,
                     alphabet: Optional[bytes] = None, machine: Optional[Machine] = None) -> bytes:
    if not 0 <= k < K_AUTO:  # 255 is the header's auto marker
        raise ValueError("k must be in 0..254")
    if machine is not None:
        if len(machine.tapes[INPUT].records) != len(s):
            raise ValueError("machine input does not match the string")
        with machine.begin_pass(INPUT) as p:
            payload = kth_order_encode([rec[0] for rec in p], sigma, k, machine)
    else:
        payload = kth_order_encode(list(s), sigma, k)
    header = ContainerHeader(PipelineId.KTH_ORDER, sigma, k, len(s), 0, 8 * len(payload))
    return build_container(header, alphabet or _identity_alphabet(sigma), payload)


# -- block scheme ------------------------------------------------------------


@dataclass(frozen=True)
class BlockPlan:
    """Exponents for the memory/redundancy tradeoff and the block size."""

    c: float
    epsilon: float
    block_len: int

    def __post_init__(self) -> None:
        if not 0 < self.epsilon < self.c < 1 - self.epsilon:
            raise ValueError("need 1 - epsilon > c > epsilon > 0")
        if self.block_len < 1:
            raise ValueError("block_len must be >= 1")

    @classmethod
    def for_length(cls, n: int, c: float, epsilon: float) -> "BlockPlan":
        return cls(c, epsilon, block_length(n, c, epsilon))


def block_length(n: int, c: float, epsilon: float) -> int:
    return max(1, math.ceil(n ** (c - epsilon / 2)))


INITIAL_LENGTH_ESTIMATE = 16


def block_boundaries(n: int, plan: BlockPlan, known_n: bool) -> List[int]:
    """Block lengths the encoder will use, in order.

    With the total length unknown, each block is sized from the running
    estimate current at its start; the estimate starts at 16 and doubles
    whenever that many characters have been consumed.
    """
    if n == 0:
        return []
    if known_n:
        full, rest = divmod(n, plan.block_len)
        return [plan.block_len] * full + ([rest] if rest else [])
    out = []
    consumed = 0
    estimate = INITIAL_LENGTH_ESTIMATE
    while consumed < n:
        length = min(block_length(estimate, plan.c, plan.epsilon), n - consumed)
        out.append(length)
        consumed += length
        while consumed >= estimate:
            estimate *= 2
    return out


def _encode_block(block: List[int], sigma: int, machine: Optional[Machine]) -> bytes:
    length = len(block)
    charged = _charge(
        machine,
        length * max(1, _ceil_log2(max(sigma, 2)))        # the buffered block
        + 2 * (length + 1) * _ceil_log2(length + 2),      # context-sort rank arrays
    )
    body = bwt(block, sigma)
    payload = _dc_ac_payload([c + 1 for c in body], sigma + 1, machine)
    _release(machine, charged)
    return write_varint(length) + write_varint(len(payload)) + payload


def block_encode(s: Sequence[int], sigma: int, plan: BlockPlan, known_n: bool = True,
                 alphabet: Optional[bytes] = None, machine: Optional[Machine] = None) -> bytes:
    """Split into independently coded blocks; single pass over the input."""
    s = list(s)
    n = len(s)
    lengths = block_boundaries(n, plan, known_n)
    frames: List[bytes] = []

    def run(symbols: Iterator[int]) -> None:
        for length in lengths:
            block = [next(symbols) for _ in range(length)]
            frames.append(_encode_block(block, sigma, machine))

    if machine is not None:
        if len(machine.tapes[INPUT].records) != n:
            raise ValueError("machine input does not match the string")
        with machine.begin_pass(INPUT) as p:
            run(rec[0] for rec in p)
            for frame in frames:
                machine.write_output(frame)
    else:
        run(iter(s))
    payload = b"".join(frames)
    header = ContainerHeader(
        PipelineId.BLOCK_KTH, sigma, K_AUTO, n,
        plan.block_len if known_n else 0, 8 * len(payload),
    )
    return build_container(header, alphabet or _identity_alphabet(sigma), payload)


def _block_decode_payload(payload: bytes, n: int, sigma: int) -> List[int]:
    out: List[int] = []
    pos = 0
    while len(out) < n:
        block_n, pos = read_varint(payload, pos)
        plen, pos = read_varint(payload, pos)
        if pos + plen > len(payload):
            raise FormatError("truncated block frame")
        body = _dc_ac_decode(payload[pos:pos + plen], block_n + 1, sigma + 1)
        pos += plen
        try:
            block = bwt_inverse([c - 1 for c in body])
        except ValueError as exc:
            raise FormatError(str(exc)) from None
        if len(block) != block_n:
            raise FormatError("block length mismatch")
        out.extend(block)
    if pos != len(payload):
        raise FormatError("trailing bytes after final block")
    if len(out) != n:
        raise FormatError("decoded length mismatch")
    return out


# -- decoding ----------------------------------------------------------------


def decode_container(data: bytes) -> Tuple[List[int], ContainerHeader, bytes]:
    """Decode any decodable container to (ranks, header, alphabet)."""
    header, alphabet, payload = parse_container(data)
    sigma = header.sigma
    n = header.n
    if header.pipeline in ENCODE_ONLY:
        raise FormatError(f"pipeline {header.pipeline.name} is encode-only")
    try:
        if header.pipeline is PipelineId.BWT_MTF_RLE_AC:
            body = _mtf_rle_ac_decode(payload, n + 1, sigma + 1)
            ranks = bwt_inverse([c - 1 for c in body])
        elif header.pipeline is PipelineId.BWT_DC_AC:
            body = _dc_ac_decode(payload, n + 1, sigma + 1)
            ranks = bwt_inverse([c - 1 for c in body])
        elif header.pipeline is PipelineId.BLOCK_KTH:
            ranks = _block_decode_payload(payload, n, sigma)
        elif header.pipeline is PipelineId.KTH_ORDER:
            k = 0 if header.k == K_AUTO else header.k
            ranks = kth_order_decode(payload, n, sigma, k)
        else:  # pragma: no cover - parse_header rejects unknown ids
            raise FormatError(f"unknown pipeline {header.pipeline}")
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    if len(ranks) != n:
        raise FormatError("decoded length mismatch")
    return ranks, header, alphabet
