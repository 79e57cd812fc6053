"""Forward-mode second order jets and finite-difference checks.

eval_jet / eval_jet_batch run on the tape kernels. The fd_* functions
differentiate the plain tree-walking evaluator instead, so the two routes
share no code beyond the parsed tree itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .kernels import evaluate_jets, evaluate_jets_status, evaluate_values
from .mapdef import ExprNode, MapDefinition, eval_expr
from .tape import Tape, compile_expr


@dataclass(frozen=True, eq=False)
class Jet2:
    """Value, gradient and dense symmetric Hessian of a scalar expression."""

    value: float
    gradient: np.ndarray  # (n,)
    hessian: np.ndarray  # (n, n)


@lru_cache(maxsize=512)
def compiled(node: ExprNode, n_vars: int) -> Tape:
    return compile_expr(node, n_vars)


def packed_to_full(packed, n):
    """Expand packed upper-triangular rows (..., n*(n+1)//2) to (..., n, n)."""
    packed = np.asarray(packed)
    jj, kk = np.triu_indices(n)
    full = np.zeros(packed.shape[:-1] + (n, n))
    full[..., jj, kk] = packed
    full[..., kk, jj] = packed
    return full


def eval_value(node: ExprNode, point, n: int) -> float:
    return float(evaluate_values(compiled(node, n), np.asarray(point)[None, :])[0])


def eval_value_batch(node: ExprNode, points, n: int) -> np.ndarray:
    return evaluate_values(compiled(node, n), points)


def eval_jet(node: ExprNode, point, n: int) -> Jet2:
    values, grads, hess = evaluate_jets(compiled(node, n), np.asarray(point)[None, :])
    return Jet2(
        value=float(values[0]),
        gradient=grads[0],
        hessian=packed_to_full(hess[0], n),
    )


def eval_jet_batch(node: ExprNode, points, n: int):
    """Returns (values, grads, hessians) shaped (b,), (b, n), (b, n, n)."""
    values, grads, hess = evaluate_jets(compiled(node, n), points)
    return values, grads, packed_to_full(hess, n)


def map_values(definition: MapDefinition, points) -> np.ndarray:
    """Evaluate all m components, returning (batch, m)."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    out = np.empty((pts.shape[0], definition.m))
    for k, node in enumerate(definition.components):
        out[:, k] = eval_value_batch(node, pts, definition.n)
    return out


def map_jets(definition: MapDefinition, points):
    """Evaluate jets of all components: (batch, m), (batch, m, n), (batch, m, n, n)."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    b, n = pts.shape
    m = definition.m
    values = np.empty((b, m))
    grads = np.empty((b, m, n))
    hessians = np.empty((b, m, n, n))
    for k, node in enumerate(definition.components):
        v, g, h = eval_jet_batch(node, pts, n)
        values[:, k] = v
        grads[:, k] = g
        hessians[:, k] = h
    return values, grads, hessians


def map_jets_status(definition: MapDefinition, points):
    """Like map_jets plus a per-point boolean mask of clean evaluations.

    Points where any component hits a singularity are masked False and carry
    garbage values instead of raising, so callers can continue a sweep.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    b, n = pts.shape
    m = definition.m
    values = np.empty((b, m))
    grads = np.empty((b, m, n))
    hessians = np.empty((b, m, n, n))
    ok = np.ones(b, dtype=bool)
    for k, node in enumerate(definition.components):
        v, g, h, bad = evaluate_jets_status(compiled(node, n), pts)
        values[:, k] = v
        grads[:, k] = g
        hessians[:, k] = packed_to_full(h, n)
        ok &= bad < 0
    return values, grads, hessians, ok


# ---------------------------------------------------------------------------
# Central-difference oracles over the reference evaluator


def fd_gradient(node: ExprNode, point, h: float = 1e-5) -> np.ndarray:
    point = np.asarray(point, dtype=np.float64)
    n = len(point)
    out = np.empty(n)
    for i in range(n):
        shift = np.zeros(n)
        shift[i] = h
        out[i] = (eval_expr(node, point + shift) - eval_expr(node, point - shift)) / (
            2.0 * h
        )
    return out


def fd_hessian(node: ExprNode, point, h: float = 1e-4) -> np.ndarray:
    point = np.asarray(point, dtype=np.float64)
    n = len(point)
    out = np.empty((n, n))
    center = eval_expr(node, point)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        out[i, i] = (
            eval_expr(node, point + ei) - 2.0 * center + eval_expr(node, point - ei)
        ) / (h * h)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            out[i, j] = out[j, i] = (
                eval_expr(node, point + ei + ej)
                - eval_expr(node, point + ei - ej)
                - eval_expr(node, point - ei + ej)
                + eval_expr(node, point - ei - ej)
            ) / (4.0 * h * h)
    return out
