"""Elaboration and event-driven simulation.

Scheduling model per time slot: run processes and zero-delay combinational
updates to quiescence, then commit the nonblocking-assignment batch, and
repeat until the slot is quiet. Edge-triggered processes therefore read
pre-commit values of signals driven with nonblocking assignments at the same
edge, which is the behavior self-checking benches rely on.
"""

from __future__ import annotations

import heapq
import itertools
import os
from collections import deque
from dataclasses import dataclass, field

from . import ast
from . import values as V
from .errors import SimulationLimitError, VerilogSemanticError, VsimError
from .parser import parse_text

DEFAULT_MAX_TIME = 10_000_000  # ns
DEFAULT_MAX_SLOT_ACTIVATIONS = 200_000


class _Finish(Exception):
    pass


class Signal:
    __slots__ = (
        "name", "width", "is_reg", "value",
        "cont_ids", "comb_ids", "edge_waiters",
        "dumped", "vcd_id", "last_dump",
    )

    def __init__(self, name: str, width: int, is_reg: bool):
        self.name = name
        self.width = width
        self.is_reg = is_reg
        self.value = V.all_x(width)
        self.cont_ids: list[int] = []
        self.comb_ids: list[int] = []
        self.edge_waiters: list[tuple] = []  # (generator, wanted-edge-kind)
        self.dumped = False
        self.vcd_id = ""
        self.last_dump: V.Val | None = None


def _bit_state(val: V.Val) -> str:
    return val.bit(0)


def _is_posedge(old: str, new: str) -> bool:
    return (old == "0" and new in ("1", "x")) or (old == "x" and new == "1")


def _is_negedge(old: str, new: str) -> bool:
    return (old == "1" and new in ("0", "x")) or (old == "x" and new == "0")


@dataclass
class SimResult:
    display_lines: list[str]
    sim_time: int
    finished: bool
    vcd_filename: str | None
    vcd_text: str | None

    @property
    def stdout(self) -> str:
        return "".join(line + "\n" for line in self.display_lines)


@dataclass
class _Comb:
    body: ast.Stmt
    env: dict


@dataclass
class _Cont:
    lvalue: ast.LValue
    expr: ast.Expr
    env: dict


def parse_sources(sources: dict[str, str]) -> list[ast.Module]:
    """Parse {filename: text} into module definitions, checking name clashes."""
    modules: list[ast.Module] = []
    seen: set[str] = set()
    for filename, text in sources.items():
        for module in parse_text(text, filename):
            if module.name in seen:
                raise VerilogSemanticError(f"duplicate module {module.name!r}")
            seen.add(module.name)
            modules.append(module)
    return modules


class Simulator:
    def __init__(self, modules: list[ast.Module], top: str | None = None):
        self.defs = {m.name: m for m in modules}
        if top is None:
            top = self._pick_top(modules)
        if top not in self.defs:
            raise VerilogSemanticError(f"top module {top!r} not found")
        self.top_name = top

        self.signals: list[Signal] = []
        self.conts: list[_Cont] = []
        self.combs: list[_Comb] = []
        self._procs: list[tuple[str, object, dict]] = []  # (kind, item, env)
        self._elaborate(self.defs[top], prefix="", bindings={})

        self.time = 0
        self.display_lines: list[str] = []
        self._queue: list[tuple[int, int, object]] = []
        self._seq = itertools.count()
        self._active: deque = deque()
        self._nba: list[tuple[Signal, int | None, V.Val]] = []
        self._comb_queue: deque[int] = deque()
        self._comb_pending: set[int] = set()
        self._finished = False
        self._dump_file: str | None = None
        self._dump_order: list[Signal] = []
        self._dump_started = False
        self._dump_dirty: set[int] = set()
        self._vcd_chunks: list[str] = []

    # -- elaboration --------------------------------------------------------

    @staticmethod
    def _pick_top(modules: list[ast.Module]) -> str:
        instantiated = set()
        for m in modules:
            for item in m.items:
                if isinstance(item, ast.Instance):
                    instantiated.add(item.module_name)
        tops = [m.name for m in modules if m.name not in instantiated]
        if len(tops) == 1:
            return tops[0]
        unported = [m.name for m in modules if m.name in tops and not m.ports]
        if len(unported) == 1:
            return unported[0]
        raise VerilogSemanticError(
            f"cannot determine a unique top module among {sorted(tops)}"
        )

    def _new_signal(self, name: str, width: int, is_reg: bool) -> Signal:
        sig = Signal(name, width, is_reg)
        self.signals.append(sig)
        return sig

    def _elaborate(self, module: ast.Module, prefix: str, bindings: dict[str, Signal]) -> None:
        env: dict[str, object] = {}
        for port in module.ports:
            if port.name in bindings:
                sig = bindings[port.name]
                if sig.width != port.width:
                    raise VerilogSemanticError(
                        f"port width mismatch on {prefix}{port.name}: "
                        f"{sig.width} vs {port.width}"
                    )
            else:
                sig = self._new_signal(prefix + port.name, port.width, port.is_reg)
            env[port.name] = sig

        for item in module.items:
            if isinstance(item, ast.ParamDecl):
                for name, expr in item.pairs:
                    if name in env:
                        raise VerilogSemanticError(f"redeclaration of {name!r}")
                    env[name] = self._eval(expr, env)
            elif isinstance(item, ast.NetDecl):
                for name in item.names:
                    if name in env:
                        raise VerilogSemanticError(f"redeclaration of {name!r}")
                    env[name] = self._new_signal(
                        prefix + name, item.width, item.kind != "wire"
                    )

        for item in module.items:
            if isinstance(item, (ast.ParamDecl, ast.NetDecl)):
                continue
            if isinstance(item, ast.ContAssign):
                cid = len(self.conts)
                self.conts.append(_Cont(item.lvalue, item.expr, env))
                for sig in self._expr_reads(item.expr, env):
                    sig.cont_ids.append(cid)
                if item.lvalue.index is not None:
                    for sig in self._expr_reads(item.lvalue.index, env):
                        sig.cont_ids.append(cid)
            elif isinstance(item, ast.AlwaysComb):
                bid = len(self.combs)
                self.combs.append(_Comb(item.body, env))
                for sig in self._stmt_reads(item.body, env):
                    sig.comb_ids.append(bid)
            elif isinstance(item, (ast.AlwaysEdge, ast.AlwaysDelay, ast.Initial)):
                kind = {
                    ast.AlwaysEdge: "edge",
                    ast.AlwaysDelay: "delay",
                    ast.Initial: "initial",
                }[type(item)]
                self._procs.append((kind, item, env))
            elif isinstance(item, ast.Instance):
                child = self.defs.get(item.module_name)
                if child is None:
                    raise VerilogSemanticError(
                        f"unknown module {item.module_name!r} instantiated as "
                        f"{prefix}{item.instance_name}"
                    )
                child_ports = {p.name for p in child.ports}
                child_bindings: dict[str, Signal] = {}
                for port, signal_name in item.connections:
                    if port not in child_ports:
                        raise VerilogSemanticError(
                            f"{item.module_name} has no port {port!r}"
                        )
                    if not signal_name:
                        continue
                    target = env.get(signal_name)
                    if not isinstance(target, Signal):
                        raise VerilogSemanticError(
                            f"connection {signal_name!r} is not a signal"
                        )
                    child_bindings[port] = target
                self._elaborate(
                    child, prefix + item.instance_name + ".", child_bindings
                )
            else:
                raise VerilogSemanticError(f"unsupported item {item!r}")

    # Dependency scans (reads only; parameters are constants and drop out).

    def _expr_reads(self, expr: ast.Expr, env: dict) -> list[Signal]:
        out: list[Signal] = []

        def walk(e: ast.Expr) -> None:
            if isinstance(e, ast.Ident):
                sig = env.get(e.name)
                if isinstance(sig, Signal):
                    out.append(sig)
            elif isinstance(e, ast.Index):
                sig = env.get(e.name)
                if isinstance(sig, Signal):
                    out.append(sig)
                walk(e.index)
            elif isinstance(e, ast.Unary):
                walk(e.operand)
            elif isinstance(e, ast.Binary):
                walk(e.left)
                walk(e.right)
            elif isinstance(e, ast.Ternary):
                walk(e.cond)
                walk(e.if_true)
                walk(e.if_false)

        walk(expr)
        return out

    def _stmt_reads(self, stmt: ast.Stmt, env: dict) -> list[Signal]:
        out: list[Signal] = []
        if isinstance(stmt, ast.Block):
            for s in stmt.statements:
                out.extend(self._stmt_reads(s, env))
        elif isinstance(stmt, ast.Assign):
            out.extend(self._expr_reads(stmt.expr, env))
            if stmt.lvalue.index is not None:
                out.extend(self._expr_reads(stmt.lvalue.index, env))
        elif isinstance(stmt, ast.If):
            out.extend(self._expr_reads(stmt.cond, env))
            out.extend(self._stmt_reads(stmt.then_stmt, env))
            if stmt.else_stmt is not None:
                out.extend(self._stmt_reads(stmt.else_stmt, env))
        elif isinstance(stmt, ast.Case):
            out.extend(self._expr_reads(stmt.subject, env))
            for arm in stmt.arms:
                for label in arm.labels:
                    out.extend(self._expr_reads(label, env))
                out.extend(self._stmt_reads(arm.stmt, env))
        elif isinstance(stmt, ast.SysCall):
            for arg in stmt.args:
                if not isinstance(arg, ast.Str):
                    out.extend(self._expr_reads(arg, env))
        elif isinstance(stmt, (ast.Delay, ast.EventWait)):
            raise VerilogSemanticError(
                "delays and event waits are not allowed in combinational blocks"
            )
        return out

    # -- expression evaluation ----------------------------------------------

    def _eval(self, expr: ast.Expr, env: dict) -> V.Val:
        if isinstance(expr, ast.Num):
            if expr.width is not None:
                return V.Val(expr.value, expr.xmask, expr.width)
            if expr.xmask:  # unbased 'x: width comes from the assignment target
                return V.all_x(64)
            if expr.value < 0:
                return V.make(expr.value, 64)
            return V.make(expr.value, 32)
        if isinstance(expr, ast.Ident):
            entry = env.get(expr.name)
            if entry is None:
                raise VerilogSemanticError(f"unknown identifier {expr.name!r}")
            return entry.value if isinstance(entry, Signal) else entry
        if isinstance(expr, ast.Index):
            entry = env.get(expr.name)
            if entry is None:
                raise VerilogSemanticError(f"unknown identifier {expr.name!r}")
            base = entry.value if isinstance(entry, Signal) else entry
            idx = self._eval(expr.index, env)
            if idx.x:
                return V.XBIT
            bit = base.bit(idx.v)
            return {"0": V.FALSE, "1": V.TRUE, "x": V.XBIT}[bit]
        if isinstance(expr, ast.Unary):
            operand = self._eval(expr.operand, env)
            if expr.op == "~":
                return V.bit_not(operand)
            if expr.op == "!":
                return V.logical_not(operand)
            if expr.op == "-":
                return V.negate(operand)
            raise VerilogSemanticError(f"unsupported unary {expr.op!r}")
        if isinstance(expr, ast.Binary):
            a = self._eval(expr.left, env)
            b = self._eval(expr.right, env)
            op = expr.op
            if op == "&":
                return V.bit_and(a, b)
            if op == "|":
                return V.bit_or(a, b)
            if op == "^":
                return V.bit_xor(a, b)
            if op == "&&":
                return V.logical_and(a, b)
            if op == "||":
                return V.logical_or(a, b)
            if op == "==":
                return V.eq(a, b)
            if op == "!=":
                return V.neq(a, b)
            if op == "===":
                return V.case_eq(a, b)
            if op == "!==":
                return V.case_neq(a, b)
            if op == "+":
                return V.add(a, b)
            if op == "-":
                return V.sub(a, b)
            if op in ("<", "<=", ">", ">="):
                return V.compare(op, a, b)
            if op in ("<<", ">>", "<<<", ">>>"):
                return V.shift(op, a, b)
            raise VerilogSemanticError(f"unsupported operator {op!r}")
        if isinstance(expr, ast.Ternary):
            return V.ternary(
                self._eval(expr.cond, env),
                self._eval(expr.if_true, env),
                self._eval(expr.if_false, env),
            )
        raise VerilogSemanticError(f"cannot evaluate {expr!r} as a value")

    # -- signal updates and propagation --------------------------------------

    def _write_lvalue(self, lvalue: ast.LValue, val: V.Val, env: dict) -> None:
        entry = env.get(lvalue.name)
        if not isinstance(entry, Signal):
            raise VerilogSemanticError(f"cannot assign to {lvalue.name!r}")
        if lvalue.index is None:
            self._set_signal(entry, V.resize(val, entry.width))
            return
        idx = self._eval(lvalue.index, env)
        if idx.x or idx.v >= entry.width:
            return  # unknown or out-of-range index writes nothing
        self._set_bit(entry, idx.v, val)

    def _set_bit(self, sig: Signal, index: int, val: V.Val) -> None:
        bit = V.resize(val, 1)
        old = sig.value
        mask = 1 << index
        new_v = (old.v & ~mask) | (bit.v << index)
        new_x = (old.x & ~mask) | (bit.x << index)
        self._set_signal(sig, V.Val(new_v & ~new_x, new_x, old.w))

    def _set_signal(self, sig: Signal, new: V.Val) -> None:
        old = sig.value
        if old.v == new.v and old.x == new.x:
            return
        sig.value = new
        if sig.dumped:
            self._dump_dirty.add(id(sig))
        old_bit, new_bit = old.bit(0), new.bit(0)
        if sig.edge_waiters:
            fired = []
            kept = []
            for waiter in sig.edge_waiters:
                gen, kind = waiter
                if (
                    kind == "any"
                    or (kind == "pos" and _is_posedge(old_bit, new_bit))
                    or (kind == "neg" and _is_negedge(old_bit, new_bit))
                ):
                    fired.append(gen)
                else:
                    kept.append(waiter)
            if fired:
                sig.edge_waiters = kept
                for gen in fired:
                    self._unsubscribe(gen)
                    self._active.append(gen)
        for cid in sig.cont_ids:
            if cid + len(self.combs) not in self._comb_pending:
                self._comb_pending.add(cid + len(self.combs))
                self._comb_queue.append(cid + len(self.combs))
        for bid in sig.comb_ids:
            if bid not in self._comb_pending:
                self._comb_pending.add(bid)
                self._comb_queue.append(bid)

    def _unsubscribe(self, gen) -> None:
        # A process waiting on several edges resumes once; drop its other waits.
        for sig in self.signals:
            if sig.edge_waiters:
                sig.edge_waiters = [w for w in sig.edge_waiters if w[0] is not gen]

    # -- process execution ----------------------------------------------------

    def _exec(self, stmt: ast.Stmt, env: dict):
        if isinstance(stmt, ast.Block):
            for s in stmt.statements:
                yield from self._exec(s, env)
        elif isinstance(stmt, ast.Assign):
            val = self._eval(stmt.expr, env)
            if stmt.nonblocking:
                entry = env.get(stmt.lvalue.name)
                if not isinstance(entry, Signal):
                    raise VerilogSemanticError(
                        f"cannot assign to {stmt.lvalue.name!r}"
                    )
                if stmt.lvalue.index is None:
                    self._nba.append((entry, None, V.resize(val, entry.width)))
                else:
                    idx = self._eval(stmt.lvalue.index, env)
                    if not idx.x and idx.v < entry.width:
                        self._nba.append((entry, idx.v, V.resize(val, 1)))
            else:
                self._write_lvalue(stmt.lvalue, val, env)
        elif isinstance(stmt, ast.If):
            if V.truthiness(self._eval(stmt.cond, env)) == "1":
                yield from self._exec(stmt.then_stmt, env)
            elif stmt.else_stmt is not None:
                yield from self._exec(stmt.else_stmt, env)
        elif isinstance(stmt, ast.Case):
            subject = self._eval(stmt.subject, env)
            default_arm = None
            taken = False
            for arm in stmt.arms:
                if not arm.labels:
                    default_arm = arm
                    continue
                for label in arm.labels:
                    if V.case_eq(subject, self._eval(label, env)) is V.TRUE:
                        yield from self._exec(arm.stmt, env)
                        taken = True
                        break
                if taken:
                    break
            if not taken and default_arm is not None:
                yield from self._exec(default_arm.stmt, env)
        elif isinstance(stmt, ast.Delay):
            yield ("delay", stmt.amount)
            if stmt.stmt is not None:
                yield from self._exec(stmt.stmt, env)
        elif isinstance(stmt, ast.EventWait):
            yield ("edges", self._resolve_edges(stmt.edges, env))
            if stmt.stmt is not None:
                yield from self._exec(stmt.stmt, env)
        elif isinstance(stmt, ast.SysCall):
            self._syscall(stmt, env)
        else:
            raise VerilogSemanticError(f"unsupported statement {stmt!r}")

    def _resolve_edges(self, edges, env) -> list[tuple[Signal, str]]:
        resolved = []
        for kind, name in edges:
            if name == "*":
                raise VerilogSemanticError("@(*) is only supported on always blocks")
            sig = env.get(name)
            if not isinstance(sig, Signal):
                raise VerilogSemanticError(f"cannot wait on {name!r}")
            resolved.append((sig, kind))
        return resolved

    def _edge_process(self, item: ast.AlwaysEdge, env: dict):
        edges = self._resolve_edges(item.edges, env)
        while True:
            yield ("edges", edges)
            yield from self._exec(item.body, env)

    def _delay_process(self, item: ast.AlwaysDelay, env: dict):
        while True:
            yield ("delay", item.amount)
            yield from self._exec(item.body, env)

    def _initial_process(self, item: ast.Initial, env: dict):
        yield from self._exec(item.body, env)

    def _run_gen(self, gen) -> None:
        try:
            request = next(gen)
        except StopIteration:
            return
        except _Finish:
            self._finished = True
            return
        if request[0] == "delay":
            heapq.heappush(
                self._queue, (self.time + request[1], next(self._seq), gen)
            )
        else:
            for sig, kind in request[1]:
                sig.edge_waiters.append((gen, kind))

    def _eval_comb_entry(self, entry_id: int) -> None:
        if entry_id < len(self.combs):
            comb = self.combs[entry_id]
            try:
                for _step in self._exec(comb.body, comb.env):
                    raise VerilogSemanticError(
                        "combinational block attempted to wait"
                    )
            except _Finish:
                self._finished = True
        else:
            cont = self.conts[entry_id - len(self.combs)]
            val = self._eval(cont.expr, cont.env)
            self._write_lvalue(cont.lvalue, val, cont.env)

    def _settle(self, max_activations: int) -> None:
        activations = 0
        while not self._finished:
            if self._comb_queue:
                entry_id = self._comb_queue.popleft()
                self._comb_pending.discard(entry_id)
                self._eval_comb_entry(entry_id)
            elif self._active:
                gen = self._active.popleft()
                self._run_gen(gen)
            elif self._nba:
                batch = self._nba
                self._nba = []
                for sig, index, val in batch:
                    if index is None:
                        self._set_signal(sig, val)
                    else:
                        self._set_bit(sig, index, val)
            else:
                return
            activations += 1
            if activations > max_activations:
                raise SimulationLimitError(
                    f"time slot at t={self.time} did not settle after "
                    f"{max_activations} activations"
                )

    # -- system tasks ---------------------------------------------------------

    def _syscall(self, stmt: ast.SysCall, env: dict) -> None:
        name = stmt.name
        if name == "$finish":
            raise _Finish()
        if name == "$display":
            self.display_lines.append(self._format_display(stmt.args, env))
            return
        if name == "$dumpfile":
            if not stmt.args or not isinstance(stmt.args[0], ast.Str):
                raise VerilogSemanticError("$dumpfile needs a string literal")
            self._dump_file = stmt.args[0].text
            return
        if name == "$dumpvars":
            for arg in stmt.args:
                if isinstance(arg, ast.Num):
                    continue  # depth argument: everything listed is dumped
                if isinstance(arg, ast.Ident):
                    sig = env.get(arg.name)
                    if not isinstance(sig, Signal):
                        raise VerilogSemanticError(
                            f"$dumpvars argument {arg.name!r} is not a signal"
                        )
                    if not sig.dumped:
                        sig.dumped = True
                        self._dump_order.append(sig)
                else:
                    raise VerilogSemanticError(
                        "$dumpvars accepts a depth and signal names"
                    )
            self._dump_started = True
            return
        if name in ("$monitor", "$strobe", "$time", "$stop"):
            raise VerilogSemanticError(f"{name} is not supported")
        raise VerilogSemanticError(f"unknown system task {name}")

    def _format_display(self, args: tuple[ast.Expr, ...], env: dict) -> str:
        if not args:
            return ""
        if not isinstance(args[0], ast.Str):
            val = self._eval(args[0], env)
            return str(val.v) if not val.x else "x"
        fmt = args[0].text
        fmt = (
            fmt.replace("\\n", "\n")
            .replace("\\t", "\t")
            .replace('\\"', '"')
            .replace("\\\\", "\\")
        )
        out = []
        arg_iter = iter(args[1:])
        i = 0
        while i < len(fmt):
            ch = fmt[i]
            if ch != "%":
                out.append(ch)
                i += 1
                continue
            spec = ""
            i += 1
            while i < len(fmt) and fmt[i] in "0123456789":
                spec += fmt[i]
                i += 1
            if i >= len(fmt):
                raise VerilogSemanticError("dangling % in format string")
            conv = fmt[i]
            i += 1
            if conv == "%":
                out.append("%")
                continue
            try:
                val = self._eval(next(arg_iter), env)
            except StopIteration:
                raise VerilogSemanticError("missing argument for format string")
            if conv == "b":
                out.append(val.to_bin())
            elif conv == "d":
                out.append("x" if val.x else str(val.v))
            elif conv == "h":
                out.append("x" if val.x else format(val.v, "x"))
            else:
                raise VerilogSemanticError(f"unsupported format %{conv}")
        return "".join(out)

    # -- VCD ------------------------------------------------------------------

    def _vcd_header(self) -> None:
        chunks = ["$timescale 1ns $end\n", f"$scope module {self.top_name} $end\n"]
        for i, sig in enumerate(self._dump_order):
            sig.vcd_id = _vcd_identifier(i)
            kind = "reg" if sig.is_reg else "wire"
            if sig.width == 1:
                chunks.append(f"$var {kind} 1 {sig.vcd_id} {sig.name} $end\n")
            else:
                chunks.append(
                    f"$var {kind} {sig.width} {sig.vcd_id} "
                    f"{sig.name} [{sig.width - 1}:0] $end\n"
                )
        chunks.append("$upscope $end\n")
        chunks.append("$enddefinitions $end\n")
        chunks.append(f"#{self.time}\n$dumpvars\n")
        for sig in self._dump_order:
            chunks.append(self._vcd_change(sig))
            sig.last_dump = sig.value
        chunks.append("$end\n")
        self._vcd_chunks.extend(chunks)

    @staticmethod
    def _vcd_value(sig: Signal) -> str:
        return sig.value.to_bin()

    def _vcd_change(self, sig: Signal) -> str:
        if sig.width == 1:
            return f"{sig.value.bit(0)}{sig.vcd_id}\n"
        return f"b{sig.value.to_bin()} {sig.vcd_id}\n"

    def _flush_vcd(self) -> None:
        if not self._dump_started:
            self._dump_dirty.clear()
            return
        if not self._vcd_chunks:
            self._vcd_header()
            self._dump_dirty.clear()
            return
        changed = [
            sig
            for sig in self._dump_order
            if id(sig) in self._dump_dirty and sig.last_dump != sig.value
        ]
        self._dump_dirty.clear()
        if not changed:
            return
        self._vcd_chunks.append(f"#{self.time}\n")
        for sig in changed:
            self._vcd_chunks.append(self._vcd_change(sig))
            sig.last_dump = sig.value

    # -- main loop --------------------------------------------------------------

    def run(
        self,
        max_time: int = DEFAULT_MAX_TIME,
        max_slot_activations: int = DEFAULT_MAX_SLOT_ACTIVATIONS,
        vcd_dir: str | None = None,
    ) -> SimResult:
        # Edge processes arm their waits before any initial block runs, so
        # time-zero initializations are observed as x -> value transitions.
        initial_gens = []
        for kind, item, env in self._procs:
            if kind == "edge":
                gen = self._edge_process(item, env)
                self._run_gen(gen)
            elif kind == "delay":
                gen = self._delay_process(item, env)
                self._run_gen(gen)
            else:
                initial_gens.append(self._initial_process(item, env))
        for i in range(len(self.combs) + len(self.conts)):
            self._comb_pending.add(i)
            self._comb_queue.append(i)
        for gen in initial_gens:
            self._active.append(gen)

        self._settle(max_slot_activations)
        self._flush_vcd()
        while self._queue and not self._finished:
            t, _, gen = heapq.heappop(self._queue)
            if t > max_time:
                raise SimulationLimitError(f"simulation exceeded {max_time} ns")
            self.time = t
            self._active.append(gen)
            while self._queue and self._queue[0][0] == t:
                self._active.append(heapq.heappop(self._queue)[2])
            self._settle(max_slot_activations)
            self._flush_vcd()

        vcd_text = "".join(self._vcd_chunks) if self._dump_started else None
        if vcd_text is not None and vcd_dir is not None and self._dump_file:
            path = os.path.join(vcd_dir, self._dump_file)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(vcd_text)
        return SimResult(
            display_lines=self.display_lines,
            sim_time=self.time,
            finished=self._finished,
            vcd_filename=self._dump_file,
            vcd_text=vcd_text,
        )


def _vcd_identifier(index: int) -> str:
    # Printable ASCII 33..126, shortest-first.
    chars = [chr(c) for c in range(33, 127)]
    if index < len(chars):
        return chars[index]
    out = []
    index -= len(chars)
    while True:
        out.append(chars[index % len(chars)])
        index //= len(chars)
        if index == 0:
            break
    return "".join(out) + chars[0]
