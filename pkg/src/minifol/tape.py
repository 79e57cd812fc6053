"""Flat instruction tapes compiled from expression trees.

Both evaluation backends (the compiled extension and the numpy fallback)
execute the same tape with the same operation order, so their results are
bit-comparable. Each instruction writes one slot; arg1/arg2 are slot
indices except where noted below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mapdef import Binary, Constant, ExprNode, Unary, Variable

OP_CONST = 0  # slot = consts[arg1]
OP_VAR = 1  # slot = point[arg1]
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_POWC = 6  # slot = slots[arg1] ** consts[arg2]
OP_POW = 7  # general power, base must be positive
OP_NEG = 8
OP_SIN = 9
OP_COS = 10
OP_SINH = 11
OP_COSH = 12
OP_TANH = 13
OP_EXP = 14
OP_LOG = 15
OP_SQRT = 16
OP_ATAN2 = 17

_UNARY_OPS = {
    "neg": OP_NEG,
    "sin": OP_SIN,
    "cos": OP_COS,
    "sinh": OP_SINH,
    "cosh": OP_COSH,
    "tanh": OP_TANH,
    "exp": OP_EXP,
    "log": OP_LOG,
    "sqrt": OP_SQRT,
}

_BINARY_OPS = {
    "+": OP_ADD,
    "-": OP_SUB,
    "*": OP_MUL,
    "/": OP_DIV,
    "^": OP_POW,
    "atan2": OP_ATAN2,
}

OP_NAMES = {
    OP_CONST: "const",
    OP_VAR: "var",
    OP_ADD: "+",
    OP_SUB: "-",
    OP_MUL: "*",
    OP_DIV: "/",
    OP_POWC: "^const",
    OP_POW: "^",
    OP_NEG: "neg",
    OP_SIN: "sin",
    OP_COS: "cos",
    OP_SINH: "sinh",
    OP_COSH: "cosh",
    OP_TANH: "tanh",
    OP_EXP: "exp",
    OP_LOG: "log",
    OP_SQRT: "sqrt",
    OP_ATAN2: "atan2",
}


@dataclass(frozen=True, eq=False)
class Tape:
    ops: np.ndarray  # int32, one opcode per instruction
    arg1: np.ndarray  # int32
    arg2: np.ndarray  # int32, -1 where unused
    consts: np.ndarray  # float64 constant pool
    n_vars: int
    nodes: tuple  # source ExprNode per instruction, for error reports

    @property
    def n_slots(self) -> int:
        return len(self.ops)


def compile_expr(expr: ExprNode, n_vars: int) -> Tape:
    """Lower a tree to a tape, merging repeated subexpressions and constants."""
    ops = []
    arg1 = []
    arg2 = []
    consts = []
    nodes = []
    const_index = {}
    slot_of = {}  # value numbering on (opcode, a, b)

    def emit(op, a, b, node):
        key = (op, a, b)
        slot = slot_of.get(key)
        if slot is None:
            slot = len(ops)
            slot_of[key] = slot
            ops.append(op)
            arg1.append(a)
            arg2.append(b)
            nodes.append(node)
        return slot

    def intern_const(value):
        # -0.0 and 0.0 are kept distinct for atan2
        key = (value, np.signbit(value).item())
        idx = const_index.get(key)
        if idx is None:
            idx = len(consts)
            const_index[key] = idx
            consts.append(value)
        return idx

    def rec(node):
        if isinstance(node, Constant):
            return emit(OP_CONST, intern_const(float(node.value)), -1, node)
        if isinstance(node, Variable):
            return emit(OP_VAR, node.index - 1, -1, node)
        if isinstance(node, Unary):
            return emit(_UNARY_OPS[node.op], rec(node.child), -1, node)
        if node.op == "^" and isinstance(node.right, Constant):
            base = rec(node.left)
            return emit(OP_POWC, base, intern_const(float(node.right.value)), node)
        left = rec(node.left)
        right = rec(node.right)
        return emit(_BINARY_OPS[node.op], left, right, node)

    root = rec(expr)
    # the kernels read their result from the last slot; a root can never be
    # merged into an earlier slot because it is no strict subtree of itself
    assert root == len(ops) - 1
    return Tape(
        ops=np.asarray(ops, dtype=np.int32),
        arg1=np.asarray(arg1, dtype=np.int32),
        arg2=np.asarray(arg2, dtype=np.int32),
        consts=np.asarray(consts, dtype=np.float64),
        n_vars=n_vars,
        nodes=tuple(nodes),
    )
