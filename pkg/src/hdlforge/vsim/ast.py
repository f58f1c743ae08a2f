"""AST for the supported subset. Widths are [msb:0] ranges only."""

from __future__ import annotations

from dataclasses import dataclass, field


# --- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int
    xmask: int
    width: int | None  # None: unsized (context-determined)


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Index:
    name: str
    index: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Ternary:
    cond: "Expr"
    if_true: "Expr"
    if_false: "Expr"


@dataclass(frozen=True)
class Str:
    text: str


Expr = Num | Ident | Index | Unary | Binary | Ternary | Str


# --- statements ------------------------------------------------------------


@dataclass(frozen=True)
class LValue:
    name: str
    index: Expr | None = None


@dataclass(frozen=True)
class Assign:
    lvalue: LValue
    expr: Expr
    nonblocking: bool


@dataclass(frozen=True)
class Block:
    statements: tuple


@dataclass(frozen=True)
class If:
    cond: Expr
    then_stmt: "Stmt"
    else_stmt: "Stmt | None"


@dataclass(frozen=True)
class CaseArm:
    labels: tuple[Expr, ...]  # empty tuple marks the default arm
    stmt: "Stmt"


@dataclass(frozen=True)
class Case:
    subject: Expr
    arms: tuple[CaseArm, ...]


@dataclass(frozen=True)
class Delay:
    amount: int
    stmt: "Stmt | None"


@dataclass(frozen=True)
class EventWait:
    edges: tuple[tuple[str, str], ...]  # (edge-kind 'pos'/'neg'/'any', signal)
    stmt: "Stmt | None"


@dataclass(frozen=True)
class SysCall:
    name: str
    args: tuple[Expr, ...]


Stmt = Assign | Block | If | Case | Delay | EventWait | SysCall


# --- module items ----------------------------------------------------------


@dataclass(frozen=True)
class PortDecl:
    direction: str  # 'input' | 'output'
    is_reg: bool
    width: int
    name: str


@dataclass(frozen=True)
class NetDecl:
    kind: str  # 'wire' | 'reg' | 'integer'
    width: int
    names: tuple[str, ...]


@dataclass(frozen=True)
class ParamDecl:
    pairs: tuple[tuple[str, Expr], ...]


@dataclass(frozen=True)
class ContAssign:
    lvalue: LValue
    expr: Expr


@dataclass(frozen=True)
class AlwaysComb:
    body: Stmt


@dataclass(frozen=True)
class AlwaysEdge:
    edges: tuple[tuple[str, str], ...]
    body: Stmt


@dataclass(frozen=True)
class AlwaysDelay:
    amount: int
    body: Stmt


@dataclass(frozen=True)
class Initial:
    body: Stmt


@dataclass(frozen=True)
class Instance:
    module_name: str
    instance_name: str
    connections: tuple[tuple[str, str], ...]  # (port, parent signal name)


Item = NetDecl | ParamDecl | ContAssign | AlwaysComb | AlwaysEdge | AlwaysDelay | Initial | Instance


@dataclass(frozen=True)
class Module:
    name: str
    ports: tuple[PortDecl, ...]
    items: tuple[Item, ...] = field(default_factory=tuple)
