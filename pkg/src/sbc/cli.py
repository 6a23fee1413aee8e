"""Command-line interface.

Subcommands: compress, decompress, entropy, transform, simulate,
adversary, bench.  Input comes from a positional path or stdin, output
goes to --output or stdout; output is buffered fully and written once, so
error paths never leave partial files.  Exit codes: 0 success, 1 usage
error, 2 malformed container or input, 3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import List, Optional, Sequence

from . import adversary as adv
from . import entropy as ent
from . import pipelines as pl
from . import stream_bwt as sbwt
from . import stream_st as sst
from . import transforms as tr
from .machine import (
    BudgetExceededError,
    CapabilityError,
    ExpansionError,
    Machine,
    MachineConfig,
    MachineError,
    ModelKind,
)

_MODELS = {m.value: m for m in ModelKind}
_PIPELINES = {
    "bwt-mtf-rle-ac": pl.PipelineId.BWT_MTF_RLE_AC,
    "bwt-dc-ac": pl.PipelineId.BWT_DC_AC,
    "st-dc-ac": pl.PipelineId.ST_DC_AC,
    "block-kth": pl.PipelineId.BLOCK_KTH,
    "kth-order": pl.PipelineId.KTH_ORDER,
}
_DEFAULT_BUDGET = 1 << 40


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(message)


def _read_input(path: Optional[str]) -> bytes:
    if path is None or path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_output(path: Optional[str], data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)


def _ranks_of(data: bytes, sigma: Optional[int]):
    """Map input bytes to dense ranks; returns (ranks, sigma, alphabet bytes)."""
    if sigma is not None:
        if not 1 <= sigma <= 255:
            raise _UsageError("sigma must be in 1..255")
        if data and max(data) >= sigma:
            raise ValueError("input byte outside the declared alphabet")
        return list(data), sigma, bytes(range(sigma))
    alphabet = sorted(set(data))
    if len(alphabet) > 255:
        raise ValueError("more than 255 distinct bytes; not representable")
    rank = {b: i for i, b in enumerate(alphabet)}
    return [rank[b] for b in data], len(alphabet), bytes(alphabet)


def _emit_json(args, payload: dict) -> None:
    if getattr(args, "json", False):
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def _trace_enabled(args) -> bool:
    return getattr(args, "trace", False) or os.environ.get("SBC_TRACE") == "1"


def _machine_for(args, model: ModelKind, input_data: bytes, work_tapes: int = 0) -> Machine:
    cfg = MachineConfig(
        model,
        memory_budget_bits=args.memory_budget_bits or _DEFAULT_BUDGET,
        work_tapes=work_tapes,
    )
    machine = Machine(cfg, input_data)
    if _trace_enabled(args):
        machine.trace = lambda line: sys.stderr.write(line + "\n")
    return machine


def _ledger_payload(machine: Optional[Machine]) -> dict:
    if machine is None:
        return {"passes": 0, "sort_passes": 0, "peak_memory_bits": 0, "total_output_bits": 0}
    led = machine.ledger()
    return {
        "passes": led.passes,
        "sort_passes": led.sort_passes,
        "peak_memory_bits": led.peak_memory_bits,
        "total_output_bits": led.total_output_bits,
    }


# -- subcommands ------------------------------------------------------------


def _cmd_compress(args) -> int:
    data = _read_input(args.input)
    ranks, sigma, alphabet = _ranks_of(data, args.sigma)
    model = _MODELS[args.model] if args.model else None
    machine = None
    name = args.pipeline
    if name == "bwt-mtf-rle-ac":
        if model is None:
            container = pl.encode_bwt_mtf_rle_ac(ranks, sigma, alphabet)
        elif model is ModelKind.STANDARD:
            body = tr.bwt(ranks, sigma)
            machine = _machine_for(args, model, bytes(c + 1 for c in body))
            payload = pl.mtf_rle_ac_encode_stream(machine, sigma)
            header = pl.ContainerHeader(pl.PipelineId.BWT_MTF_RLE_AC, sigma, pl.K_AUTO,
                                        len(ranks), 0, 8 * len(payload))
            container = pl.build_container(header, alphabet, payload)
        else:
            raise CapabilityError("bwt-mtf-rle-ac streams on the standard model")
    elif name == "bwt-dc-ac":
        if model is None:
            container = pl.encode_bwt_dc_ac(ranks, sigma, alphabet)
        elif model is ModelKind.READ_WRITE:
            body = tr.bwt(ranks, sigma)
            machine = _machine_for(args, model, bytes(c + 1 for c in body), work_tapes=1)
            payload = pl.dc_ac_encode_stream(machine, sigma)
            header = pl.ContainerHeader(pl.PipelineId.BWT_DC_AC, sigma, pl.K_AUTO,
                                        len(ranks), 0, 8 * len(payload))
            container = pl.build_container(header, alphabet, payload)
        else:
            raise CapabilityError("bwt-dc-ac streams on the read-write model")
    elif name == "st-dc-ac":
        k_max = args.k if args.k is not None else min(4, max(1, len(ranks)).bit_length())
        if model is None:
            container = pl.encode_st_dc_ac(ranks, sigma, k_max, alphabet)
        elif model is ModelKind.STREAM_SORT:
            machine = _machine_for(args, model, b"")
            container = sst.streamsort_st_best_k(ranks, k_max, machine=machine,
                                                 sigma=sigma, alphabet=alphabet)
        else:
            raise CapabilityError("st-dc-ac streams on the streamsort model")
    elif name == "block-kth":
        plan = pl.BlockPlan.for_length(len(ranks), args.c, args.epsilon) if ranks else None
        if model is None:
            container = (pl.block_encode(ranks, sigma, plan, alphabet=alphabet)
                         if plan else _empty_block_container(sigma, alphabet))
        elif model is ModelKind.STANDARD:
            machine = _machine_for(args, model, bytes(ranks))
            container = (pl.block_encode(ranks, sigma, plan, machine=machine, alphabet=alphabet)
                         if plan else _empty_block_container(sigma, alphabet))
        else:
            raise CapabilityError("block-kth streams on the standard model")
    elif name == "kth-order":
        k = args.k if args.k is not None else 2
        if model is None:
            container = pl.encode_kth_order(ranks, sigma, k, alphabet)
        elif model is ModelKind.STANDARD:
            machine = _machine_for(args, model, bytes(ranks))
            container = pl.encode_kth_order(ranks, sigma, k, alphabet, machine=machine)
        else:
            raise CapabilityError("kth-order streams on the standard model")
    else:  # pragma: no cover - argparse restricts choices
        raise _UsageError(f"unknown pipeline {name}")
    _write_output(args.output, container)
    report = {"pipeline": name, "n": len(ranks), "sigma": sigma, "size_bits": 8 * len(container)}
    report.update(_ledger_payload(machine))
    _emit_json(args, report)
    return 0


def _empty_block_container(sigma: int, alphabet: bytes) -> bytes:
    header = pl.ContainerHeader(pl.PipelineId.BLOCK_KTH, sigma, pl.K_AUTO, 0, 0, 0)
    return pl.build_container(header, alphabet, b"")


def _cmd_decompress(args) -> int:
    data = _read_input(args.input)
    ranks, header, alphabet = pl.decode_container(data)
    out = bytes(alphabet[r] for r in ranks)
    _write_output(args.output, out)
    _emit_json(args, {
        "pipeline": header.pipeline.name.lower().replace("_", "-"),
        "n": header.n, "sigma": header.sigma, "size_bits": 8 * len(data),
    })
    return 0


def _cmd_entropy(args) -> int:
    paths = args.inputs or [None]
    lines = []
    for path in paths:
        data = _read_input(path)
        if not data:
            raise ValueError("entropy of an empty input is undefined")
        report = ent.entropy_report(data, args.kmax)
        lines.append(json.dumps({
            "n": report.n,
            "sigma": report.sigma,
            "h": [report.hk_by_k[k] for k in sorted(report.hk_by_k)],
        }))
    _write_output(args.output, ("\n".join(lines) + "\n").encode())
    return 0


def _cmd_transform(args) -> int:
    data = _read_input(args.input)
    if args.op in ("bwt", "st", "dc") and 0xFF in data:
        raise ValueError("byte 0xff is reserved for the end marker")
    if args.op == "bwt":
        body = tr.bwt(list(data))
        out = bytes(0xFF if c == tr.SENTINEL else c for c in body)
    elif args.op == "unbwt":
        body = [tr.SENTINEL if b == 0xFF else b for b in data]
        out = bytes(tr.bwt_inverse(body))
    elif args.op == "st":
        body = tr.st(list(data), args.k if args.k is not None else 1)
        out = bytes(0xFF if c == tr.SENTINEL else c for c in body)
    elif args.op == "mtf":
        out = bytes(tr.mtf_encode(data, list(range(256))))
    elif args.op == "dc":
        stream = tr.dc_encode(list(data), alphabet=range(256))
        parts = [pl.write_varint(stream.length)]
        parts += [pl.write_varint(0 if stream.first_occurrence[a] is None
                                  else stream.first_occurrence[a] + 1) for a in range(256)]
        parts.append(pl.write_varint(len(stream.gaps)))
        parts += [pl.write_varint(g) for g in stream.gaps]
        out = b"".join(parts)
    else:  # pragma: no cover
        raise _UsageError(f"unknown op {args.op}")
    _write_output(args.output, out)
    return 0


def _render_char(c: int) -> str:
    if c == tr.SENTINEL:
        return "#"
    return chr(c) if 33 <= c <= 126 else f"\\x{c:02x}"


def _render_triples(triples) -> str:
    lines = []
    for lc, lid, mid, rc, rid in triples:
        mid_s = "?" if mid is None else str(mid)
        lines.append(f"{_render_char(lc)}{lid}\t{mid_s}\t{_render_char(rc)}{rid}")
    return "\n".join(lines)


def _cmd_simulate(args) -> int:
    data = _read_input(args.input)
    out_lines: List[str] = []
    trace = _trace_enabled(args)

    def on_round(triples):
        if trace:
            out_lines.append(_render_triples(triples))
            out_lines.append("")

    if args.algo == "rw-bwt":
        if 0xFF in data:
            raise ValueError("byte 0xff is reserved for the end marker")
        machine = _machine_for(args, ModelKind.READ_WRITE, data, work_tapes=4)
        result = sbwt.rw_bwt_encode(list(data), machine, on_round=on_round)
        out_lines.append("".join(_render_char(c) for c in result))
    elif args.algo == "rw-unbwt":
        marker = 0xFF if 0xFF in data else ord("#")
        body = [tr.SENTINEL if b == marker else b for b in data]
        machine = _machine_for(args, ModelKind.READ_WRITE,
                               bytes(c + 1 for c in body), work_tapes=4)
        result = sbwt.rw_bwt_invert(body, machine, on_round=on_round)
        out_lines.append("".join(_render_char(c) for c in result))
    elif args.algo == "rw-sa":
        if 0xFF in data:
            raise ValueError("byte 0xff is reserved for the end marker")
        machine = _machine_for(args, ModelKind.READ_WRITE, data, work_tapes=4)
        result = sbwt.rw_suffix_array(list(data), machine)
        out_lines.append(" ".join(map(str, result)))
    elif args.algo == "sort-chars":
        result = sbwt.sort_chars_via_bwt(list(data))
        out_lines.append("".join(_render_char(c) for c in result))
        machine = None
    elif args.algo == "sort-numbers":
        xs = [int(tok) for tok in data.split()]
        result = sbwt.sort_numbers_via_bwt(xs)
        out_lines.append(" ".join(map(str, result)))
        machine = None
    else:  # pragma: no cover
        raise _UsageError(f"unknown algorithm {args.algo}")
    _write_output(args.output, ("\n".join(out_lines) + "\n").encode())
    _emit_json(args, _ledger_payload(machine))
    return 0


def _cmd_adversary(args) -> int:
    if args.experiment:
        if args.n is None or args.c is None or args.epsilon is None:
            raise _UsageError("--experiment needs --n, --c and --epsilon")
        report = adv.separation_experiment(args.n, args.c, args.epsilon)
        payload = {
            "n": report.n, "c": report.c, "epsilon": report.epsilon, "k": report.k,
            "size_block_bits": report.size_block_bits,
            "size_full_bits": report.size_full_bits,
            "ratio": report.ratio,
        }
        _write_output(args.output, (json.dumps(payload, sort_keys=True) + "\n").encode())
        return 0
    if args.sigma is None or args.k is None:
        raise _UsageError("need --sigma and --k (or --experiment)")
    prefix = adv.de_bruijn(args.sigma, args.k)
    s = adv.db_power(prefix, args.power)
    if args.sigma <= 26:
        out = "".join(chr(ord("a") + c) for c in s).encode()
    else:
        out = bytes(s)
    _write_output(args.output, out)
    return 0


_BENCH_COLUMNS = [
    "file", "pipeline", "k", "c", "epsilon", "model",
    "n", "sigma", "h0", "h1", "h2", "h3", "h4",
    "size_bits", "passes", "sort_passes", "peak_mem_bits", "wall_time",
]


def _bench_cell(data: bytes, pipeline: str, k: int, c: float, epsilon: float) -> dict:
    ranks, sigma, alphabet = _ranks_of(data, None)
    started = time.perf_counter()
    machine: Optional[Machine] = None
    if pipeline == "bwt-mtf-rle-ac":
        body = tr.bwt(ranks, sigma)
        machine = Machine(MachineConfig(ModelKind.STANDARD, _DEFAULT_BUDGET),
                          bytes(x + 1 for x in body))
        payload = pl.mtf_rle_ac_encode_stream(machine, sigma)
        size_bits = 8 * len(pl.build_container(
            pl.ContainerHeader(pl.PipelineId.BWT_MTF_RLE_AC, sigma, pl.K_AUTO,
                               len(ranks), 0, 8 * len(payload)), alphabet, payload))
        model = "standard"
    elif pipeline == "bwt-dc-ac":
        body = tr.bwt(ranks, sigma)
        machine = Machine(MachineConfig(ModelKind.READ_WRITE, _DEFAULT_BUDGET, work_tapes=1),
                          bytes(x + 1 for x in body))
        payload = pl.dc_ac_encode_stream(machine, sigma)
        size_bits = 8 * len(pl.build_container(
            pl.ContainerHeader(pl.PipelineId.BWT_DC_AC, sigma, pl.K_AUTO,
                               len(ranks), 0, 8 * len(payload)), alphabet, payload))
        model = "readwrite"
    elif pipeline == "st-dc-ac":
        machine = Machine(MachineConfig(ModelKind.STREAM_SORT, _DEFAULT_BUDGET))
        container = sst.streamsort_st_best_k(ranks, k, machine=machine,
                                             sigma=sigma, alphabet=alphabet)
        size_bits = 8 * len(container)
        model = "streamsort"
    elif pipeline == "block-kth":
        machine = Machine(MachineConfig(ModelKind.STANDARD, _DEFAULT_BUDGET), bytes(ranks))
        plan = pl.BlockPlan.for_length(len(ranks), c, epsilon)
        container = pl.block_encode(ranks, sigma, plan, machine=machine, alphabet=alphabet)
        size_bits = 8 * len(container)
        model = "standard"
    elif pipeline == "kth-order":
        machine = Machine(MachineConfig(ModelKind.STANDARD, _DEFAULT_BUDGET), bytes(ranks))
        container = pl.encode_kth_order(ranks, sigma, k, alphabet, machine=machine)
        size_bits = 8 * len(container)
        model = "standard"
    else:
        raise _UsageError(f"unknown pipeline {pipeline}")
    wall = time.perf_counter() - started
    led = machine.ledger()
    row = {
        "pipeline": pipeline, "k": k, "c": c, "epsilon": epsilon, "model": model,
        "n": len(ranks), "sigma": sigma,
        "size_bits": size_bits, "passes": led.passes, "sort_passes": led.sort_passes,
        "peak_mem_bits": led.peak_memory_bits, "wall_time": f"{wall:.6f}",
    }
    for kk in range(5):
        row[f"h{kk}"] = f"{ent.hk(data, kk):.6f}" if data else ""
    return row


def _cmd_bench(args) -> int:
    pipelines = args.pipelines.split(",")
    for name in pipelines:
        if name not in _PIPELINES:
            raise _UsageError(f"unknown pipeline {name}")
    try:
        files = sorted(
            f for f in os.listdir(args.corpus)
            if os.path.isfile(os.path.join(args.corpus, f))
        )
    except OSError as exc:
        raise _UsageError(f"cannot read corpus directory: {exc}") from None
    rows = []
    skipped = 0
    for fname in files:
        try:
            with open(os.path.join(args.corpus, fname), "rb") as fh:
                data = fh.read()
        except OSError as exc:
            sys.stderr.write(f"warning: skipping {fname}: {exc}\n")
            skipped += 1
            continue
        for pipeline in pipelines:
            row = _bench_cell(data, pipeline, args.k if args.k is not None else 2,
                              args.c, args.epsilon)
            row["file"] = fname
            rows.append(row)
    rows.sort(key=lambda r: (r["file"], r["pipeline"], r["k"], r["c"], r["epsilon"], r["model"]))
    lines = [",".join(_BENCH_COLUMNS)]
    for row in rows:
        lines.append(",".join(str(row.get(col, "")) for col in _BENCH_COLUMNS))
    _write_output(args.output, ("\n".join(lines) + "\n").encode())
    return 1 if skipped else 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sbc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, with_input=True):
        if with_input:
            p.add_argument("input", nargs="?", default=None,
                           help="input file (default: stdin)")
        p.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
        p.add_argument("--json", action="store_true",
                       help="write a one-line JSON ledger/report to stderr")
        p.add_argument("--trace", action="store_true",
                       help="emit per-pass trace lines (SBC_TRACE=1 does the same)")

    p = sub.add_parser("compress", help="compress a byte stream into a container")
    add_io(p)
    p.add_argument("--pipeline", choices=sorted(_PIPELINES), default="bwt-dc-ac")
    p.add_argument("--k", type=int, default=None,
                   help="context length (kth-order) or maximum context length (st-dc-ac)")
    p.add_argument("--c", type=float, default=0.5, help="memory exponent for block-kth")
    p.add_argument("--epsilon", type=float, default=0.25, help="redundancy exponent for block-kth")
    p.add_argument("--memory-budget-bits", type=int, default=None)
    p.add_argument("--model", choices=sorted(_MODELS), default=None,
                   help="run the streaming variant on this machine model")
    p.add_argument("--sigma", type=int, default=None,
                   help="declare the alphabet size instead of inferring it")

    p = sub.add_parser("decompress", help="decode a container back to bytes")
    add_io(p)

    p = sub.add_parser("entropy", help="order-0..k entropy report as JSON")
    p.add_argument("inputs", nargs="*", default=None, help="input files (default: stdin)")
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--kmax", type=int, default=4)

    p = sub.add_parser("transform", help="raw transforms on byte streams")
    add_io(p)
    p.add_argument("--op", choices=["bwt", "unbwt", "st", "mtf", "dc"], required=True)
    p.add_argument("--k", type=int, default=None, help="context length for st")

    p = sub.add_parser("simulate", help="run a tape-machine algorithm")
    add_io(p)
    p.add_argument("--algo", choices=["rw-bwt", "rw-unbwt", "rw-sa", "sort-chars", "sort-numbers"],
                   required=True)
    p.add_argument("--memory-budget-bits", type=int, default=None)

    p = sub.add_parser("adversary", help="emit covering-sequence powers or run the experiment")
    add_io(p, with_input=False)
    p.add_argument("--sigma", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--power", type=int, default=1)
    p.add_argument("--experiment", action="store_true")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)

    p = sub.add_parser("bench", help="benchmark a corpus directory to CSV")
    p.add_argument("corpus")
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--pipelines", default="bwt-dc-ac")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=0.25)
    return parser


_HANDLERS = {
    "compress": _cmd_compress,
    "decompress": _cmd_decompress,
    "entropy": _cmd_entropy,
    "transform": _cmd_transform,
    "simulate": _cmd_simulate,
    "adversary": _cmd_adversary,
    "bench": _cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except (BudgetExceededError, ExpansionError) as exc:
        sys.stderr.write(f"resource error: {exc}\n")
        return 3
    except CapabilityError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except pl.FormatError as exc:
        sys.stderr.write(f"format error: {exc}\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2
    except MachineError as exc:
        sys.stderr.write(f"machine error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"io error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
