"""Render a syntax tree back to MTC text.

Binary and unary expressions are fully parenthesized, so parsing the output
yields the same tree regardless of operator precedence.
"""

from __future__ import annotations

from . import ast as A

INDENT = "    "


def expr_str(e: A.Expr) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.Name):
        return e.ident
    if isinstance(e, A.Index):
        return f"{e.base.ident}[{expr_str(e.index)}]"
    if isinstance(e, A.Unary):
        return f"{e.op}({expr_str(e.operand)})"
    if isinstance(e, A.Binary):
        return f"({expr_str(e.left)} {e.op} {expr_str(e.right)})"
    if isinstance(e, A.Call):
        return f"{e.name}({', '.join(expr_str(a) for a in e.args)})"
    if isinstance(e, A.AssignExpr):
        return f"({expr_str(e.target)} = {expr_str(e.value)})"
    raise TypeError(f"cannot print {type(e).__name__}")


def _decl_head(ty: A.MtcType, name: str) -> str:
    if ty.kind == "array":
        return f"int {name}[{ty.length}]"
    return f"{ty.kind} {name}"


def _stmt_lines(s: A.Stmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, A.Block):
        return [pad + "{", *_body_lines(s, depth + 1), pad + "}"]
    if isinstance(s, A.Atomic):
        return [pad + "atomic {", *_body_lines(s.body, depth + 1), pad + "}"]
    if isinstance(s, A.VarDecl):
        init = "" if s.init is None else f" = {expr_str(s.init)}"
        return [f"{pad}{_decl_head(s.type, s.name)}{init};"]
    if isinstance(s, A.Assign):
        return [f"{pad}{expr_str(s.target)} = {expr_str(s.value)};"]
    if isinstance(s, A.CallStmt):
        return [f"{pad}{s.name}({', '.join(expr_str(a) for a in s.args)});"]
    if isinstance(s, A.Empty):
        return [pad + ";"]
    if isinstance(s, A.If):
        lines = _headed(f"if ({expr_str(s.cond)})", s.then, depth)
        if s.orelse is not None:
            lines += _headed("else", s.orelse, depth)
        return lines
    if isinstance(s, A.While):
        return _headed(f"while ({expr_str(s.cond)})", s.body, depth)
    raise TypeError(f"cannot print {type(s).__name__}")


def _headed(head: str, body: A.Stmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(body, A.Block):
        return [f"{pad}{head} {{", *_body_lines(body, depth + 1), pad + "}"]
    return [pad + head, *_stmt_lines(body, depth + 1)]


def _body_lines(block: A.Block, depth: int) -> list[str]:
    out: list[str] = []
    for s in block.stmts:
        out.extend(_stmt_lines(s, depth))
    return out


def stmt_str(s: A.Stmt) -> str:
    """Single-line rendering used in traces and CFG dumps."""
    return " ".join(line.strip() for line in _stmt_lines(s, 0))


def pretty(p: A.Program) -> str:
    lines: list[str] = []
    for g in p.globals:
        init = "" if g.init is None else f" = {expr_str(g.init)}"
        lines.append(f"{_decl_head(g.type, g.name)}{init};")
    for t in p.threads:
        params = ", ".join(f"{prm.type.kind} {prm.name}" for prm in t.params)
        lines.append(f"thread {t.name}({params}) {{")
        lines.extend(_body_lines(t.body, 1))
        lines.append("}")
    lines.append("main {")
    lines.extend(_body_lines(p.main, 1))
    lines.append("}")
    return "\n".join(lines) + "\n"
