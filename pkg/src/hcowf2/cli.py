"""Command-line entry point.

Exit codes: 0 success/accept, 1 verify-reject or no preimage, 2 usage or
parameter error, 3 runtime error.  Every flag can also be defaulted from an
environment variable ``HCOWF2_<FLAG>`` (``--node-memory`` ->
``HCOWF2_NODE_MEMORY``).
"""

from __future__ import annotations

import argparse
import logging
import os
import socket
import sys
import threading
from pathlib import Path
from typing import Optional, Sequence

from .circuit_core import default_k
from .errors import (
    Hcowf2Error,
    InsufficientCluster,
    ParameterError,
    Rejected,
    ScaleRefused,
    WidthMismatch,
)
from .inversion import (
    ClusterModel,
    MachineModel,
    Strategy,
    formula_stats,
    invert_small,
    inversion_cost,
    partition_plan,
    report_items,
)
from .inversion.circuit import DEFAULT_CIRCUIT_CAP
from .oneway import MacTag, derive_input, evaluate, generate_fd
from .protocol import FdCache, ReceiverServer, decode_fd, read_header, save_fd, sender_session

ENV_PREFIX = "HCOWF2_"
EVALUATE_CAP = 512
EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

USAGE_ERRORS = (ParameterError, ScaleRefused, WidthMismatch, InsufficientCluster)


class Output:
    def __init__(self, machine_readable: bool):
        self.machine_readable = machine_readable

    def emit(self, items: dict, text: Optional[str] = None) -> None:
        if self.machine_readable or text is None:
            for key, value in items.items():
                print(f"{key}={_fmt(value)}")
        else:
            print(text)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_seed(text: str) -> int:
    text = text.strip()
    if len(text) == 64 and not text.startswith("0x"):
        value = int(text, 16)
    else:
        value = int(text, 0)
    if not 0 <= value < 1 << 256:
        raise argparse.ArgumentTypeError("seed must be a 256-bit non-negative value")
    return value


def parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _add(parser: argparse.ArgumentParser, flag: str, **kwargs) -> None:
    env_value = _env(flag.lstrip("-"))
    if env_value is not None:
        kwargs["default"] = env_value
        kwargs.pop("required", None)
    parser.add_argument(flag, **kwargs)


def _read_fd_checked(path: str, override: bool):
    data = Path(path).read_bytes()
    _, n, _ = read_header(data)
    if n > EVALUATE_CAP and not override:
        raise ScaleRefused(
            f"n={n} exceeds the software evaluate cap {EVALUATE_CAP}; pass --cap-override to run anyway"
        )
    return decode_fd(data)


def cmd_fdgen(args, out: Output) -> int:
    k = args.k if args.k is not None else default_k(args.n)
    fd = generate_fd(args.seed, args.n, k)
    sig = save_fd(fd, args.fd)
    out.emit(
        {"n": fd.n, "k": fd.k, "signature": sig.hex(), "bytes": Path(args.fd).stat().st_size},
        f"wrote {args.fd} (n={fd.n}, k={fd.k})\nsignature {sig.hex()}",
    )
    return EXIT_OK


def cmd_mac(args, out: Output) -> int:
    fd = _read_fd_checked(args.fd, args.cap_override)
    tag, _ = evaluate(fd, derive_input(Path(args.message).read_bytes(), fd.n))
    out.emit({"n": fd.n, "tag": tag.hex()}, tag.hex())
    return EXIT_OK


def cmd_verify(args, out: Output) -> int:
    fd = _read_fd_checked(args.fd, args.cap_override)
    try:
        claimed = MacTag.from_hex(args.tag, fd.n)
    except ValueError as exc:
        raise WidthMismatch(f"tag is not {fd.n} bits of LSB-first hex: {exc}") from exc
    tag, _ = evaluate(fd, derive_input(Path(args.message).read_bytes(), fd.n))
    ok = tag == claimed
    out.emit({"accepted": int(ok)}, "accepted" if ok else "rejected")
    return EXIT_OK if ok else EXIT_REJECT


def cmd_analyze(args, out: Output) -> int:
    machine = MachineModel(args.clock_hz, args.bytes_per_cycle, args.node_memory)
    cluster = ClusterModel(args.nodes, machine)
    size = formula_stats(args.n, args.ceil_log)
    cost = inversion_cost(args.n, machine, args.ceil_log)
    plan = partition_plan(size, cluster, args.strategy)
    items = report_items(size, cost, plan)
    text = "\n".join(
        [
            f"3-CNF formula for n={args.n} ({'ceil' if args.ceil_log else 'real'} log2)",
            f"  variables            {size.variables:.6g}",
            f"  clauses              {size.clauses:.6g}",
            f"  bits per literal     {size.bits_per_literal:.6g}",
            f"  bits per clause      {size.bits_per_clause:.6g}",
            f"  total                {size.total_bits:.4g} bits = {size.total_bytes:.4g} bytes"
            f" = {items['formula_total_tb']:.4g} TB = {items['formula_total_tib']:.4g} TiB",
            f"single scan at {machine.clock_hz:.3g} Hz x {machine.bytes_per_cycle:g} B/cycle",
            f"  {cost.single_scan_seconds:.4g} s = {cost.single_scan_hours:.4g} h",
            f"self-reduction: {cost.sat_calls:.4g} SAT decisions",
            f"  {cost.total_hours:.4g} h = {cost.total_years:.4g} years",
            f"{plan.strategy.value} partitioning on {cluster.nodes} nodes",
            f"  partitions {plan.partitions}, {plan.bytes_per_node:.4g} bytes per node",
            f"  minimum wall time {plan.min_wall_seconds:.4g} s ({plan.notes})",
        ]
    )
    out.emit(items, text)
    return EXIT_OK


def cmd_invert(args, out: Output) -> int:
    fd = decode_fd(Path(args.fd).read_bytes())
    try:
        target = MacTag.from_hex(args.tag, fd.n)
    except ValueError as exc:
        raise WidthMismatch(f"tag is not {fd.n} bits of LSB-first hex: {exc}") from exc
    cap = args.circuit_cap if args.circuit_cap is not None else DEFAULT_CIRCUIT_CAP
    result = invert_small(fd, target, circuit_cap=cap)
    s = result.stats
    items = {
        "found": int(result.found),
        "preimage": result.preimage.hex() if result.found else "",
        "sat_calls": result.sat_calls,
        "recovery_sat_calls": result.recovery_calls,
        "model_sat_calls": result.model_sat_calls,
        "circuit_gates": s.gates,
        "cnf_aux_vars": s.aux_vars,
        "cnf_clauses": s.clauses,
        "accounting_aux_vars_3m": s.accounting_aux_vars,
        "accounting_clauses_3m": s.accounting_clauses,
    }
    head = f"preimage {result.preimage.hex()}" if result.found else "no preimage"
    text = "\n".join(
        [
            head,
            f"SAT calls: {result.sat_calls} made ({result.recovery_calls} recovering input bits);"
            f" cost model counts 3n^4 = {result.model_sat_calls}",
            f"circuit gates m = {s.gates}",
            f"CNF auxiliary variables {s.aux_vars} (3m accounting: {s.accounting_aux_vars})",
            f"CNF clauses {s.clauses} (3m accounting: {s.accounting_clauses})",
        ]
    )
    out.emit(items, text)
    return EXIT_OK if result.found else EXIT_REJECT


def cmd_send(args, out: Output) -> int:
    fd = _read_fd_checked(args.fd, args.cap_override)
    message = Path(args.message).read_bytes()
    with socket.create_connection(args.addr) as sock:
        try:
            outcome = sender_session(sock, fd, message, decision_timeout=args.decision_timeout)
        except Rejected:
            out.emit({"accepted": 0}, "rejected")
            return EXIT_REJECT
    out.emit(
        {"accepted": 1, "fd_sent": int(outcome.fd_sent), "tag": outcome.tag.hex()},
        f"accepted (description {'sent' if outcome.fd_sent else 'cached at receiver'}), tag {outcome.tag.hex()}",
    )
    return EXIT_OK


def cmd_recv(args, out: Output) -> int:
    cache = FdCache(directory=args.cache_dir)
    done = threading.Event()
    served = [0]
    lock = threading.Lock()

    def on_result(outcome, error):
        if outcome is not None:
            out.emit(
                {"accepted": int(outcome.accepted), "fd_requested": int(outcome.fd_requested),
                 "signature": outcome.signature.hex()},
                f"{'accepted' if outcome.accepted else 'rejected'} message under {outcome.signature.hex()}"
                f"{' (description fetched)' if outcome.fd_requested else ''}",
            )
        else:
            print(f"session failed: {error}", file=sys.stderr)
        sys.stdout.flush()
        with lock:
            served[0] += 1
            if args.max_sessions and served[0] >= args.max_sessions:
                done.set()

    cap = EVALUATE_CAP if not args.cap_override else 1 << 31
    with ReceiverServer(args.addr, cache, evaluate_cap=cap, on_result=on_result) as server:
        host, port = server.server_address[:2]
        print(f"listening on {host}:{port}", file=sys.stderr, flush=True)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            done.wait() if args.max_sessions else thread.join()
        except KeyboardInterrupt:
            pass
        server.shutdown()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--machine-readable", action="store_true", help="key=value output")
    common.add_argument(
        "--cap-override", action="store_true", default=_env("cap-override") in ("1", "true", "yes"),
        help="allow evaluation beyond the software size cap",
    )
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hcowf2", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fdgen", parents=[common], help="generate a function description file")
    _add(p, "--seed", type=parse_seed, default=0, help="256-bit seed (decimal, 0x-hex or 64 hex digits)")
    _add(p, "--n", type=int, required=True)
    _add(p, "--k", type=int, default=None, help="clause width (default: round(log2(n/ln 2)), at least 3)")
    _add(p, "--fd", required=True, help="output .hcw2 path")
    p.set_defaults(func=cmd_fdgen)

    p = sub.add_parser("mac", parents=[common], help="compute the tag of a message")
    _add(p, "--fd", required=True)
    _add(p, "--message", required=True, help="path to the message bytes")
    p.set_defaults(func=cmd_mac)

    p = sub.add_parser("verify", parents=[common], help="check a tag; exit 0 on match, 1 otherwise")
    _add(p, "--fd", required=True)
    _add(p, "--message", required=True)
    _add(p, "--tag", required=True, help="lowercase hex, LSB-first packing")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", parents=[common], help="formula size, inversion time and partitioning")
    _add(p, "--n", type=int, default=2048)
    _add(p, "--clock-hz", type=float, default=4e9)
    _add(p, "--bytes-per-cycle", type=float, default=1.0)
    _add(p, "--node-memory", type=float, default=1e12, help="bytes of memory per node")
    _add(p, "--nodes", type=int, default=1000)
    _add(p, "--strategy", choices=[s.value for s in Strategy], default=Strategy.FORMULA.value)
    p.add_argument("--ceil-log", action="store_true", help="round log2 up when sizing literals")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("invert", parents=[common], help="find a preimage of a tag with SAT (small n)")
    _add(p, "--fd", required=True)
    _add(p, "--tag", required=True)
    _add(p, "--circuit-cap", type=int, default=None)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("send", parents=[common], help="deliver a message and its tag to a receiver")
    _add(p, "--addr", type=parse_addr, required=True)
    _add(p, "--fd", required=True)
    _add(p, "--message", required=True)
    _add(p, "--decision-timeout", type=float, default=0.2)
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("recv", parents=[common], help="run a receiver")
    _add(p, "--addr", type=parse_addr, default=("127.0.0.1", 7878))
    _add(p, "--cache-dir", default="hcw2-cache")
    _add(p, "--max-sessions", type=int, default=0, help="exit after this many sessions (0: serve forever)")
    p.set_defaults(func=cmd_recv)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Output(args.machine_readable)
    try:
        return args.func(args, out)
    except USAGE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (Hcowf2Error, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
