"""Adaptive arithmetic coding and the order-k per-context coder.

The entropy stage is a 32-bit range coder with carry propagation
(byte-oriented, cache + pending-0xFF scheme).  Frequencies adapt from
all-ones counts and are halved, rounding up, whenever the total reaches
2^15, so totals stay far below the coder's precision floor.  Everything is
pure integer arithmetic, hence bit-exact across platforms and runs.

Payloads are byte strings; within a byte, bits are most significant first,
and a final partial byte would be zero padded.  That framing is normative
for the container format.  Symbol counts travel out of band (in container
headers), so no end-of-stream symbol is ever coded.

The order-k coder keeps one adaptive model per observed length-k context,
creating models lazily so the memory charge grows with the number of
contexts actually seen, bounded by sigma^k.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

from .transforms import elias_delta_encode

RESCALE_TOTAL = 1 << 15
_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF


def _charge(machine, bits: int) -> None:
    if machine is not None:
        machine.charge_memory(bits)


class FreqModel:
    """Adaptive symbol frequencies; counts stay >= 1, total stays < 2^16."""

    __slots__ = ("counts", "total", "rescale_threshold")

    def __init__(self, num_symbols: int, rescale_threshold: int = RESCALE_TOTAL):
        if num_symbols < 1:
            raise ValueError("need at least one symbol")
        if rescale_threshold <= 2 * num_symbols:
            raise ValueError("rescale threshold too small for this alphabet")
        self.counts = [1] * num_symbols
        self.total = num_symbols
        self.rescale_threshold = rescale_threshold

    def interval(self, sym: int) -> Tuple[int, int, int]:
        if not 0 <= sym < len(self.counts):
            raise ValueError(f"symbol {sym} out of range")
        lo = sum(self.counts[:sym])
        return lo, lo + self.counts[sym], self.total

    def locate(self, value: int) -> Tuple[int, int, int]:
        acc = 0
        for sym, c in enumerate(self.counts):
            if value < acc + c:
                return sym, acc, acc + c
            acc += c
        raise ValueError("decode target out of range")

    def update(self, sym: int) -> None:
        self.counts[sym] += 1
        self.total += 1
        if self.total >= self.rescale_threshold:
            self.counts = [(c + 1) >> 1 for c in self.counts]
            self.total = sum(self.counts)

    def state_bits(self) -> int:
        # 16-bit counters per symbol plus the running total.
        return 16 * (len(self.counts) + 1)


class RangeEncoder:
    __slots__ = ("_low", "_range", "_cache", "_cache_size", "_out")

    def __init__(self):
        self._low = 0
        self._range = _MASK32
        self._cache = 0
        self._cache_size = 1  # leading dummy byte; the decoder skips it
        self._out = bytearray()

    def encode(self, cum_lo: int, cum_hi: int, total: int) -> None:
        assert 0 <= cum_lo < cum_hi <= total <= self._range, "coder precision violated"
        r = self._range // total
        self._low += r * cum_lo
        self._range = r * (cum_hi - cum_lo)
        assert self._low < (1 << 33)
        while self._range < _TOP:
            self._shift_low()
            self._range = (self._range << 8) & _MASK32

    def _shift_low(self) -> None:
        if self._low < 0xFF000000 or self._low > _MASK32:
            carry = self._low >> 32
            self._out.append((self._cache + carry) & 0xFF)
            filler = (0xFF + carry) & 0xFF
            for _ in range(self._cache_size - 1):
                self._out.append(filler)
            self._cache_size = 0
            self._cache = (self._low >> 24) & 0xFF
        self._cache_size += 1
        self._low = (self._low << 8) & _MASK32

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self._out)


class RangeDecoder:
    __slots__ = ("_data", "_pos", "_range", "_code")

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 1  # skip the encoder's dummy byte
        self._range = _MASK32
        self._code = 0
        for _ in range(4):
            self._code = (self._code << 8) | self._next_byte()

    def _next_byte(self) -> int:
        if self._pos >= len(self._data):
            # A well-formed stream never reads past its flush bytes.
            raise ValueError("truncated payload")
        b = self._data[self._pos]
        self._pos += 1
        return b

    def target(self, total: int) -> int:
        r = self._range // total
        v = self._code // r
        return v if v < total else total - 1

    def consume(self, cum_lo: int, cum_hi: int, total: int) -> None:
        r = self._range // total
        self._code -= r * cum_lo
        self._range = r * (cum_hi - cum_lo)
        while self._range < _TOP:
            self._code = ((self._code << 8) | self._next_byte()) & _MASK32
            self._range = (self._range << 8) & _MASK32


class SymbolEncoder:
    """Range encoder driving per-call adaptive models."""

    __slots__ = ("_rc",)

    def __init__(self):
        self._rc = RangeEncoder()

    def put(self, model: FreqModel, sym: int) -> None:
        lo, hi, total = model.interval(sym)
        self._rc.encode(lo, hi, total)
        model.update(sym)

    def put_delta(self, model: FreqModel, value: int) -> None:
        """Delta-code value >= 1, each bit through an adaptive binary model."""
        for ch in elias_delta_encode(value):
            self.put(model, 1 if ch == "1" else 0)

    def finish(self) -> bytes:
        return self._rc.finish()


class SymbolDecoder:
    __slots__ = ("_rc",)

    def __init__(self, data: bytes):
        self._rc = RangeDecoder(data)

    def get(self, model: FreqModel) -> int:
        sym, lo, hi = model.locate(self._rc.target(model.total))
        self._rc.consume(lo, hi, model.total)
        model.update(sym)
        return sym

    def get_delta(self, model: FreqModel) -> int:
        zeros = 0
        while self.get(model) == 0:
            zeros += 1
        nbits = 1
        for _ in range(zeros):
            nbits = (nbits << 1) | self.get(model)
        value = 1
        for _ in range(nbits - 1):
            value = (value << 1) | self.get(model)
        return value


def ac_encode(symbols: Sequence[int], sigma: int, machine=None) -> bytes:
    """Adaptively code symbols in 0..sigma-1.  Empty input yields b''."""
    if len(symbols) == 0:
        return b""
    model = FreqModel(sigma)
    _charge(machine, model.state_bits() + 128)
    enc = SymbolEncoder()
    for sym in symbols:
        enc.put(model, sym)
    return enc.finish()


def ac_decode(data: bytes, count: int, sigma: int) -> List[int]:
    if count == 0:
        return []
    model = FreqModel(sigma)
    dec = SymbolDecoder(data)
    return [dec.get(model) for _ in range(count)]


class ContextModelBank:
    """Lazily instantiated per-context models plus an order-0 fallback."""

    def __init__(self, k: int, sigma: int, machine=None):
        if k < 0:
            raise ValueError("context length must be >= 0")
        self.k = k
        self.sigma = sigma
        self.machine = machine
        self.models: Dict[tuple, FreqModel] = {}
        self.fallback = FreqModel(sigma)
        _charge(machine, self.fallback.state_bits())

    def model_for(self, ctx: tuple) -> FreqModel:
        model = self.models.get(ctx)
        if model is None:
            model = FreqModel(self.sigma)
            self.models[ctx] = model
            key_bits = self.k * max(1, (max(self.sigma, 2) - 1).bit_length())
            _charge(self.machine, model.state_bits() + key_bits)
        return model


def kth_order_encode(symbols: Sequence[int], sigma: int, k: int, machine=None) -> bytes:
    """Code each symbol with the model of its preceding k-tuple.

    The first k symbols, which have no full context yet, go through the
    order-0 fallback model.  Single pass; decoding mirrors the context
    tracking exactly.
    """
    symbols = list(symbols)
    if not symbols:
        return b""
    bank = ContextModelBank(k, sigma, machine)
    _charge(machine, 128 + 8 * k)
    enc = SymbolEncoder()
    ctx: tuple = ()
    for sym in symbols:
        if not 0 <= sym < sigma:
            raise ValueError(f"symbol {sym} out of alphabet")
        model = bank.model_for(ctx) if len(ctx) == k else bank.fallback
        enc.put(model, sym)
        if k:
            ctx = (ctx + (sym,))[-k:]
    return enc.finish()


def kth_order_decode(data: bytes, count: int, sigma: int, k: int) -> List[int]:
    if count == 0:
        return []
    bank = ContextModelBank(k, sigma)
    dec = SymbolDecoder(data)
    out: List[int] = []
    ctx: tuple = ()
    for _ in range(count):
        model = bank.model_for(ctx) if len(ctx) == k else bank.fallback
        sym = dec.get(model)
        out.append(sym)
        if k:
            ctx = (ctx + (sym,))[-k:]
    return out
