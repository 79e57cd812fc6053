"""Backend selection and chunked batch evaluation of expression tapes.

The compiled extension and the numpy interpreter implement the same tape
contract; which one runs is decided once at import time. Set
MINIFOL_KERNELS=python or MINIFOL_KERNELS=compiled to override the default
(compiled when available, numpy otherwise).
"""

from __future__ import annotations

import os

import numpy as np

from . import _core_py
from .errors import EvaluationError
from .mapdef import pretty_print
from .tape import Tape

VALUES_CHUNK = 65536
JETS_CHUNK = 4096


def _pick_backend():
    choice = os.environ.get("MINIFOL_KERNELS", "auto").strip().lower()
    if choice in ("", "auto"):
        try:
            from . import _core

            return _core, "compiled"
        except ImportError:
            return _core_py, "python"
    if choice == "compiled":
        from . import _core

        return _core, "compiled"
    if choice == "python":
        return _core_py, "python"
    raise ValueError(
        f"MINIFOL_KERNELS must be 'auto', 'compiled' or 'python', got {choice!r}"
    )


_IMPL, _BACKEND_NAME = _pick_backend()


def active_backend() -> str:
    return _BACKEND_NAME


def _prepare_points(points, n_vars):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != n_vars:
        raise ValueError(f"points must have shape (batch, {n_vars})")
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    return pts


def _raise_first_failure(tape, pts, first_bad, base_index):
    lanes = np.flatnonzero(first_bad >= 0)
    lane = int(lanes[0])
    instr = int(first_bad[lane])
    point = tuple(float(v) for v in pts[lane])
    sub = pretty_print(tape.nodes[instr])
    raise EvaluationError(
        f"evaluation failed at point index {base_index + lane} "
        f"in subexpression {sub}",
        point=point,
        subexpr=sub,
    )


def evaluate_values_status(tape: Tape, points):
    """Like evaluate_values but returns (values, first_bad) instead of raising.

    first_bad[i] is the index of the first failing instruction for point i,
    or -1 when the evaluation was clean; values at failed points are garbage.
    """
    pts = _prepare_points(points, tape.n_vars)
    n_pts = pts.shape[0]
    out = np.empty(n_pts)
    first_bad = np.empty(n_pts, dtype=np.int32)
    for start in range(0, n_pts, VALUES_CHUNK):
        stop = min(start + VALUES_CHUNK, n_pts)
        _IMPL.eval_values(
            tape.ops,
            tape.arg1,
            tape.arg2,
            tape.consts,
            pts[start:stop],
            out[start:stop],
            first_bad[start:stop],
        )
    return out, first_bad


def evaluate_values(tape: Tape, points) -> np.ndarray:
    """Evaluate the tape at each row of points, returning a (batch,) array."""
    pts = _prepare_points(points, tape.n_vars)
    values, first_bad = evaluate_values_status(tape, pts)
    if (first_bad >= 0).any():
        _raise_first_failure(tape, pts, first_bad, 0)
    return values


def evaluate_jets_status(tape: Tape, points):
    """Like evaluate_jets but returns (values, grads, hess, first_bad)."""
    pts = _prepare_points(points, tape.n_vars)
    n_pts, n = pts.shape
    n_packed = n * (n + 1) // 2
    values = np.empty(n_pts)
    grads = np.empty((n_pts, n))
    hess = np.empty((n_pts, n_packed))
    first_bad = np.empty(n_pts, dtype=np.int32)
    for start in range(0, n_pts, JETS_CHUNK):
        stop = min(start + JETS_CHUNK, n_pts)
        _IMPL.eval_jets(
            tape.ops,
            tape.arg1,
            tape.arg2,
            tape.consts,
            pts[start:stop],
            values[start:stop],
            grads[start:stop],
            hess[start:stop],
            first_bad[start:stop],
        )
    return values, grads, hess, first_bad


def evaluate_jets(tape: Tape, points):
    """Evaluate value, gradient and packed Hessian at each row of points.

    Returns (values, grads, hess) of shapes (batch,), (batch, n) and
    (batch, n*(n+1)//2).
    """
    pts = _prepare_points(points, tape.n_vars)
    values, grads, hess, first_bad = evaluate_jets_status(tape, pts)
    if (first_bad >= 0).any():
        _raise_first_failure(tape, pts, first_bad, 0)
    return values, grads, hess
