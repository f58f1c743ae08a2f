"""Recursive-descent parser for the supported Verilog subset."""

from __future__ import annotations

import re

from . import ast
from .errors import VerilogSyntaxError
from .lexer import Token, tokenize

_KEYWORDS = {
    "module", "endmodule", "input", "output", "wire", "reg", "integer",
    "parameter", "assign", "always", "always_comb", "always_ff", "initial",
    "begin", "end", "if", "else", "case", "casez", "endcase", "default",
    "posedge", "negedge", "or",
}

_SIZED_RE = re.compile(r"(\d*)\s*'\s*([sS]?)([bBdDhHoO])\s*([0-9a-fA-F_xXzZ?]+)")

_BASES = {"b": 2, "d": 10, "h": 16, "o": 8}


def parse_sized_literal(text: str) -> ast.Num:
    m = _SIZED_RE.fullmatch(text)
    if m is None:
        raise VerilogSyntaxError(f"bad literal {text!r}")
    width_text, _signed, base_ch, digits = m.groups()
    base = _BASES[base_ch.lower()]
    digits = digits.replace("_", "")
    bits_per_digit = {2: 1, 8: 3, 16: 4}.get(base)
    value = 0
    xmask = 0
    if base == 10:
        if any(ch in "xXzZ?" for ch in digits):
            width = int(width_text) if width_text else 32
            return ast.Num(0, (1 << width) - 1, width)
        value = int(digits, 10)
        width = int(width_text) if width_text else 32
    else:
        for ch in digits:
            value <<= bits_per_digit
            xmask <<= bits_per_digit
            if ch in "xXzZ?":
                xmask |= (1 << bits_per_digit) - 1
            else:
                value |= int(ch, base)
        width = int(width_text) if width_text else 32
    mask = (1 << width) - 1
    return ast.Num(value & mask & ~xmask, xmask & mask, width)


class Parser:
    def __init__(self, tokens: list[Token], filename: str):
        self.tokens = tokens
        self.pos = 0
        self.filename = filename

    # -- token plumbing --

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise self.error(f"expected {text!r}, found {tok.text!r}", tok)
        return tok

    def expect_ident(self) -> str:
        tok = self.next()
        if tok.kind != "ident" or tok.text in _KEYWORDS:
            raise self.error(f"expected identifier, found {tok.text!r}", tok)
        return tok.text

    def error(self, message: str, tok: Token | None = None) -> VerilogSyntaxError:
        tok = tok or self.peek()
        return VerilogSyntaxError(f"{self.filename}:{tok.line}: {message}")

    # -- top level --

    def parse_modules(self) -> list[ast.Module]:
        modules = []
        while self.peek().kind != "eof":
            modules.append(self.parse_module())
        return modules

    def parse_module(self) -> ast.Module:
        self.expect("module")
        name = self.expect_ident()
        ports: list[ast.PortDecl] = []
        if self.accept("("):
            if not self.at(")"):
                ports.append(self.parse_port_decl())
                while self.accept(","):
                    ports.append(self.parse_port_decl())
            self.expect(")")
        self.expect(";")
        items: list[ast.Item] = []
        while not self.at("endmodule"):
            if self.peek().kind == "eof":
                raise self.error("missing endmodule")
            item = self.parse_item()
            if item is not None:
                items.append(item)
        self.expect("endmodule")
        return ast.Module(name, tuple(ports), tuple(items))

    def parse_port_decl(self) -> ast.PortDecl:
        tok = self.next()
        if tok.text not in ("input", "output"):
            raise self.error(f"expected port direction, found {tok.text!r}", tok)
        is_reg = False
        if self.peek().text in ("wire", "reg"):
            is_reg = self.next().text == "reg"
        width = self.parse_optional_range()
        name = self.expect_ident()
        return ast.PortDecl(tok.text, is_reg, width, name)

    def parse_optional_range(self) -> int:
        if not self.accept("["):
            return 1
        msb = self.parse_const_int()
        self.expect(":")
        lsb = self.parse_const_int()
        self.expect("]")
        if lsb != 0 or msb < 0:
            raise self.error(f"only [msb:0] ranges are supported, got [{msb}:{lsb}]")
        return msb + 1

    def parse_const_int(self) -> int:
        tok = self.next()
        if tok.kind == "number":
            return int(tok.text.replace("_", ""))
        if tok.kind == "sized":
            num = parse_sized_literal(tok.text)
            if num.xmask:
                raise self.error("x/z not allowed in a range bound", tok)
            return num.value
        raise self.error(f"expected integer constant, found {tok.text!r}", tok)

    # -- module items --

    def parse_item(self) -> ast.Item | None:
        tok = self.peek()
        text = tok.text
        if text in ("wire", "reg", "integer"):
            return self.parse_net_decl()
        if text == "parameter":
            return self.parse_param_decl()
        if text == "assign":
            return self.parse_cont_assign()
        if text in ("always_comb", "always_ff", "always"):
            return self.parse_always()
        if text == "initial":
            self.next()
            return ast.Initial(self.parse_statement())
        if text == ";":
            self.next()
            return None
        if tok.kind == "ident" and text not in _KEYWORDS:
            return self.parse_instance()
        raise self.error(f"unsupported module item at {text!r}", tok)

    def parse_net_decl(self) -> ast.NetDecl:
        kind = self.next().text
        width = 32 if kind == "integer" else self.parse_optional_range()
        names = [self.expect_ident()]
        while self.accept(","):
            names.append(self.expect_ident())
        self.expect(";")
        return ast.NetDecl(kind, width, tuple(names))

    def parse_param_decl(self) -> ast.ParamDecl:
        self.expect("parameter")
        pairs = []
        while True:
            name = self.expect_ident()
            self.expect("=")
            pairs.append((name, self.parse_expression()))
            if not self.accept(","):
                break
        self.expect(";")
        return ast.ParamDecl(tuple(pairs))

    def parse_cont_assign(self) -> ast.ContAssign:
        self.expect("assign")
        lvalue = self.parse_lvalue()
        self.expect("=")
        expr = self.parse_expression()
        self.expect(";")
        return ast.ContAssign(lvalue, expr)

    def parse_always(self) -> ast.Item:
        tok = self.next()
        if tok.text == "always_comb":
            return ast.AlwaysComb(self.parse_statement())
        if tok.text == "always_ff":
            self.expect("@")
            edges = self.parse_sensitivity()
            return ast.AlwaysEdge(edges, self.parse_statement())
        if self.accept("#"):
            amount = self.parse_const_int()
            return ast.AlwaysDelay(amount, self.parse_statement())
        self.expect("@")
        if self.accept("*"):
            return ast.AlwaysComb(self.parse_statement())
        edges = self.parse_sensitivity()
        if all(kind == "any" for kind, _ in edges):
            # Plain sensitivity list: treat as combinational.
            return ast.AlwaysComb(self.parse_statement())
        return ast.AlwaysEdge(edges, self.parse_statement())

    def parse_sensitivity(self) -> tuple[tuple[str, str], ...]:
        self.expect("(")
        if self.accept("*"):
            self.expect(")")
            return (("any", "*"),)
        edges = [self.parse_edge_item()]
        while self.peek().text in (",", "or"):
            self.next()
            edges.append(self.parse_edge_item())
        self.expect(")")
        return tuple(edges)

    def parse_edge_item(self) -> tuple[str, str]:
        if self.accept("posedge"):
            return ("pos", self.expect_ident())
        if self.accept("negedge"):
            return ("neg", self.expect_ident())
        return ("any", self.expect_ident())

    def parse_instance(self) -> ast.Instance:
        module_name = self.expect_ident()
        instance_name = self.expect_ident()
        self.expect("(")
        connections = []
        if not self.at(")"):
            while True:
                self.expect(".")
                port = self.expect_ident()
                self.expect("(")
                signal = "" if self.at(")") else self.expect_ident()
                self.expect(")")
                connections.append((port, signal))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect(";")
        return ast.Instance(module_name, instance_name, tuple(connections))

    # -- statements --

    def parse_statement(self) -> ast.Stmt:
        tok = self.peek()
        text = tok.text
        if text == "begin":
            self.next()
            statements = []
            while not self.at("end"):
                if self.peek().kind == "eof":
                    raise self.error("missing end")
                statements.append(self.parse_statement())
            self.expect("end")
            return ast.Block(tuple(statements))
        if text == "if":
            self.next()
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            then_stmt = self.parse_statement()
            else_stmt = self.parse_statement() if self.accept("else") else None
            return ast.If(cond, then_stmt, else_stmt)
        if text in ("case", "casez"):
            return self.parse_case()
        if text == "#":
            self.next()
            amount = self.parse_const_int()
            if self.accept(";"):
                return ast.Delay(amount, None)
            return ast.Delay(amount, self.parse_statement())
        if text == "@":
            self.next()
            edges = self.parse_sensitivity()
            if self.accept(";"):
                return ast.EventWait(edges, None)
            return ast.EventWait(edges, self.parse_statement())
        if text == ";":
            self.next()
            return ast.Block(())
        if text.startswith("$"):
            return self.parse_syscall()
        if tok.kind == "ident" and text not in _KEYWORDS:
            lvalue = self.parse_lvalue()
            if self.accept("<="):
                nonblocking = True
            else:
                self.expect("=")
                nonblocking = False
            expr = self.parse_expression()
            self.expect(";")
            return ast.Assign(lvalue, expr, nonblocking)
        raise self.error(f"unsupported statement at {text!r}", tok)

    def parse_case(self) -> ast.Case:
        self.next()  # case / casez
        self.expect("(")
        subject = self.parse_expression()
        self.expect(")")
        arms = []
        while not self.at("endcase"):
            if self.peek().kind == "eof":
                raise self.error("missing endcase")
            if self.accept("default"):
                self.accept(":")
                arms.append(ast.CaseArm((), self.parse_statement()))
                continue
            labels = [self.parse_expression()]
            while self.accept(","):
                labels.append(self.parse_expression())
            self.expect(":")
            arms.append(ast.CaseArm(tuple(labels), self.parse_statement()))
        self.expect("endcase")
        return ast.Case(subject, tuple(arms))

    def parse_syscall(self) -> ast.SysCall:
        name = self.next().text
        args: list[ast.Expr] = []
        if self.accept("("):
            if not self.at(")"):
                args.append(self.parse_expression())
                while self.accept(","):
                    args.append(self.parse_expression())
            self.expect(")")
        self.expect(";")
        return ast.SysCall(name, tuple(args))

    def parse_lvalue(self) -> ast.LValue:
        name = self.expect_ident()
        index = None
        if self.accept("["):
            index = self.parse_expression()
            self.expect("]")
        return ast.LValue(name, index)

    # -- expressions (precedence climbing) --

    def parse_expression(self) -> ast.Expr:
        return self.parse_ternary()

    def parse_ternary(self) -> ast.Expr:
        cond = self.parse_logical_or()
        if self.accept("?"):
            if_true = self.parse_expression()
            self.expect(":")
            if_false = self.parse_expression()
            return ast.Ternary(cond, if_true, if_false)
        return cond

    def _parse_binary(self, ops: list[str], next_level: str) -> ast.Expr:
        parse_next = getattr(self, next_level)
        left = parse_next()
        while self.peek().text in ops:
            op = self.next().text
            left = ast.Binary(op, left, parse_next())
        return left

    def parse_logical_or(self) -> ast.Expr:
        return self._parse_binary(["||"], "parse_logical_and")

    def parse_logical_and(self) -> ast.Expr:
        return self._parse_binary(["&&"], "parse_bit_or")

    def parse_bit_or(self) -> ast.Expr:
        return self._parse_binary(["|"], "parse_bit_xor")

    def parse_bit_xor(self) -> ast.Expr:
        return self._parse_binary(["^"], "parse_bit_and")

    def parse_bit_and(self) -> ast.Expr:
        return self._parse_binary(["&"], "parse_equality")

    def parse_equality(self) -> ast.Expr:
        return self._parse_binary(["==", "!=", "===", "!=="], "parse_relational")

    def parse_relational(self) -> ast.Expr:
        return self._parse_binary(["<", "<=", ">", ">="], "parse_shift")

    def parse_shift(self) -> ast.Expr:
        return self._parse_binary(["<<", ">>", "<<<", ">>>"], "parse_additive")

    def parse_additive(self) -> ast.Expr:
        return self._parse_binary(["+", "-"], "parse_unary")

    def parse_unary(self) -> ast.Expr:
        tok = self.peek()
        if tok.text in ("~", "!", "-", "+"):
            self.next()
            operand = self.parse_unary()
            if tok.text == "+":
                return operand
            return ast.Unary(tok.text, operand)
        return self.parse_primary()

    def parse_primary(self) -> ast.Expr:
        tok = self.next()
        if tok.text == "(":
            expr = self.parse_expression()
            self.expect(")")
            return expr
        if tok.kind == "number":
            return ast.Num(int(tok.text.replace("_", "")), 0, None)
        if tok.kind == "sized":
            return parse_sized_literal(tok.text)
        if tok.kind == "unbased":
            ch = tok.text[1].lower()
            if ch in "xz":
                return ast.Num(0, -1, None)  # all-x, width from context
            bit = int(ch)
            return ast.Num(-1 if bit else 0, 0, None) if bit else ast.Num(0, 0, None)
        if tok.kind == "string":
            return ast.Str(tok.text[1:-1])
        if tok.kind == "ident" and tok.text not in _KEYWORDS:
            if self.accept("["):
                index = self.parse_expression()
                self.expect("]")
                return ast.Index(tok.text, index)
            return ast.Ident(tok.text)
        raise self.error(f"unsupported expression at {tok.text!r}", tok)


def parse_text(source: str, filename: str = "<source>") -> list[ast.Module]:
    return Parser(tokenize(source, filename), filename).parse_modules()
