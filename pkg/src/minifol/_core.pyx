# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tape interpreter; same contract as _core_py.

Per-point scalar loops over the instruction stream. Operation order inside
every rule matches the numpy fallback so the backends stay comparable.
"""

import numpy as np

from libc.math cimport (
    atan2,
    cos,
    cosh,
    exp,
    isfinite,
    log,
    pow,
    sin,
    sinh,
    sqrt,
    tanh,
)

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_DIV = 5
    OP_POWC = 6
    OP_POW = 7
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


def eval_values(
    int[::1] ops,
    int[::1] arg1,
    int[::1] arg2,
    double[::1] consts,
    double[:, ::1] points,
    double[::1] out_values,
    int[::1] first_bad,
):
    cdef Py_ssize_t n_instr = ops.shape[0]
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef double[::1] slots = np.empty(n_instr)
    cdef Py_ssize_t p, i
    cdef int op, a, b, bad
    cdef double r, ya, xb

    with nogil:
        for p in range(n_pts):
            bad = -1
            for i in range(n_instr):
                op = ops[i]
                a = arg1[i]
                b = arg2[i]
                if op == OP_CONST:
                    r = consts[a]
                elif op == OP_VAR:
                    r = points[p, a]
                elif op == OP_ADD:
                    r = slots[a] + slots[b]
                elif op == OP_SUB:
                    r = slots[a] - slots[b]
                elif op == OP_MUL:
                    r = slots[a] * slots[b]
                elif op == OP_DIV:
                    r = slots[a] / slots[b]
                elif op == OP_POWC:
                    r = pow(slots[a], consts[b])
                elif op == OP_POW:
                    r = pow(slots[a], slots[b])
                elif op == OP_NEG:
                    r = -slots[a]
                elif op == OP_SIN:
                    r = sin(slots[a])
                elif op == OP_COS:
                    r = cos(slots[a])
                elif op == OP_SINH:
                    r = sinh(slots[a])
                elif op == OP_COSH:
                    r = cosh(slots[a])
                elif op == OP_TANH:
                    r = tanh(slots[a])
                elif op == OP_EXP:
                    r = exp(slots[a])
                elif op == OP_LOG:
                    r = log(slots[a])
                elif op == OP_SQRT:
                    r = sqrt(slots[a])
                else:
                    ya = slots[a]
                    xb = slots[b]
                    if ya == 0.0 and xb == 0.0 and bad < 0:
                        bad = <int> i
                    r = atan2(ya, xb)
                if bad < 0 and not isfinite(r):
                    bad = <int> i
                slots[i] = r
            out_values[p] = slots[n_instr - 1]
            first_bad[p] = bad


def eval_jets(
    int[::1] ops,
    int[::1] arg1,
    int[::1] arg2,
    double[::1] consts,
    double[:, ::1] points,
    double[::1] out_values,
    double[:, ::1] out_grads,
    double[:, ::1] out_hess,
    int[::1] first_bad,
):
    cdef Py_ssize_t n_instr = ops.shape[0]
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef Py_ssize_t n = points.shape[1]
    cdef Py_ssize_t n_packed = n * (n + 1) // 2

    jj_np, kk_np = np.triu_indices(n)
    cdef int[::1] jj = np.ascontiguousarray(jj_np, dtype=np.int32)
    cdef int[::1] kk = np.ascontiguousarray(kk_np, dtype=np.int32)

    cdef double[::1] val = np.empty(n_instr)
    cdef double[:, ::1] grad = np.empty((n_instr, n))
    cdef double[:, ::1] hess = np.empty((n_instr, n_packed))
    cdef double[::1] gw = np.empty(n)
    cdef double[::1] hw = np.empty(n_packed)

    cdef Py_ssize_t p, i, t, j, k
    cdef int op, a, b, bad
    cdef double va, vb, v, d1, d2, c, u, w, lu, ru
    cdef double y, x, q, xy2, c1, c2

    with nogil:
        for p in range(n_pts):
            bad = -1
            for i in range(n_instr):
                op = ops[i]
                a = arg1[i]
                b = arg2[i]
                if op == OP_CONST:
                    val[i] = consts[a]
                    for t in range(n):
                        grad[i, t] = 0.0
                    for t in range(n_packed):
                        hess[i, t] = 0.0
                elif op == OP_VAR:
                    val[i] = points[p, a]
                    for t in range(n):
                        grad[i, t] = 0.0
                    grad[i, a] = 1.0
                    for t in range(n_packed):
                        hess[i, t] = 0.0
                elif op == OP_ADD:
                    val[i] = val[a] + val[b]
                    for t in range(n):
                        grad[i, t] = grad[a, t] + grad[b, t]
                    for t in range(n_packed):
                        hess[i, t] = hess[a, t] + hess[b, t]
                elif op == OP_SUB:
                    val[i] = val[a] - val[b]
                    for t in range(n):
                        grad[i, t] = grad[a, t] - grad[b, t]
                    for t in range(n_packed):
                        hess[i, t] = hess[a, t] - hess[b, t]
                elif op == OP_MUL:
                    va = val[a]
                    vb = val[b]
                    val[i] = va * vb
                    for t in range(n):
                        grad[i, t] = grad[a, t] * vb + va * grad[b, t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = hess[a, t] * vb + va * hess[b, t] + (
                            grad[a, j] * grad[b, k] + grad[b, j] * grad[a, k]
                        )
                elif op == OP_DIV:
                    vb = val[b]
                    v = val[a] / vb
                    val[i] = v
                    for t in range(n):
                        grad[i, t] = (grad[a, t] - v * grad[b, t]) / vb
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = (
                            hess[a, t] - v * hess[b, t] - (
                                grad[i, j] * grad[b, k] + grad[b, j] * grad[i, k]
                            )
                        ) / vb
                elif op == OP_POWC:
                    c = consts[b]
                    u = val[a]
                    v = pow(u, c)
                    val[i] = v
                    if c == 0.0:
                        for t in range(n):
                            grad[i, t] = 0.0
                        for t in range(n_packed):
                            hess[i, t] = 0.0
                    elif c == 1.0:
                        for t in range(n):
                            grad[i, t] = grad[a, t]
                        for t in range(n_packed):
                            hess[i, t] = hess[a, t]
                    else:
                        d1 = c * pow(u, c - 1.0)
                        d2 = c * (c - 1.0) * pow(u, c - 2.0)
                        for t in range(n):
                            grad[i, t] = d1 * grad[a, t]
                        for t in range(n_packed):
                            j = jj[t]
                            k = kk[t]
                            hess[i, t] = d1 * hess[a, t] + d2 * (
                                grad[a, j] * grad[a, k]
                            )
                elif op == OP_POW:
                    u = val[a]
                    w = val[b]
                    v = pow(u, w)
                    val[i] = v
                    lu = log(u)
                    ru = w / u
                    for t in range(n):
                        gw[t] = grad[b, t] * lu + ru * grad[a, t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hw[t] = (
                            hess[b, t] * lu
                            + (grad[b, j] * grad[a, k] + grad[a, j] * grad[b, k]) / u
                            + ru * hess[a, t]
                            - (ru / u) * (grad[a, j] * grad[a, k])
                        )
                    for t in range(n):
                        grad[i, t] = v * gw[t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = v * (hw[t] + gw[j] * gw[k])
                elif op == OP_NEG:
                    val[i] = -val[a]
                    for t in range(n):
                        grad[i, t] = -grad[a, t]
                    for t in range(n_packed):
                        hess[i, t] = -hess[a, t]
                elif op == OP_SIN:
                    v = sin(val[a])
                    d1 = cos(val[a])
                    val[i] = v
                    for t in range(n):
                        grad[i, t] = d1 * grad[a, t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = d1 * hess[a, t] - v * (grad[a, j] * grad[a, k])
                elif op == OP_COS:
                    v = cos(val[a])
                    d1 = sin(val[a])
                    val[i] = v
                    for t in range(n):
                        grad[i, t] = (-d1) * grad[a, t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = (-d1) * hess[a, t] - v * (
                            grad[a, j] * grad[a, k]
                        )
                elif op == OP_SINH:
                    v = sinh(val[a])
                    d1 = cosh(val[a])
                    val[i] = v
                    for t in range(n):
                        grad[i, t] = d1 * grad[a, t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = d1 * hess[a, t] + v * (grad[a, j] * grad[a, k])
                elif op == OP_COSH:
                    v = cosh(val[a])
                    d1 = sinh(val[a])
                    val[i] = v
                    for t in range(n):
                        grad[i, t] = d1 * grad[a, t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = d1 * hess[a, t] + v * (grad[a, j] * grad[a, k])
                elif op == OP_TANH:
                    v = tanh(val[a])
                    d1 = 1.0 - v * v
                    val[i] = v
                    for t in range(n):
                        grad[i, t] = d1 * grad[a, t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = d1 * hess[a, t] - (2.0 * v * d1) * (
                            grad[a, j] * grad[a, k]
                        )
                elif op == OP_EXP:
                    v = exp(val[a])
                    val[i] = v
                    for t in range(n):
                        grad[i, t] = v * grad[a, t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = v * (hess[a, t] + grad[a, j] * grad[a, k])
                elif op == OP_LOG:
                    u = val[a]
                    val[i] = log(u)
                    for t in range(n):
                        grad[i, t] = grad[a, t] / u
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = hess[a, t] / u - grad[i, j] * grad[i, k]
                elif op == OP_SQRT:
                    v = sqrt(val[a])
                    d1 = 0.5 / v
                    val[i] = v
                    for t in range(n):
                        grad[i, t] = d1 * grad[a, t]
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = d1 * hess[a, t] - (0.25 / (v * v * v)) * (
                            grad[a, j] * grad[a, k]
                        )
                else:
                    y = val[a]
                    x = val[b]
                    if y == 0.0 and x == 0.0 and bad < 0:
                        bad = <int> i
                    q = x * x + y * y
                    val[i] = atan2(y, x)
                    for t in range(n):
                        grad[i, t] = (x * grad[a, t] - y * grad[b, t]) / q
                    xy2 = 2.0 * x * y
                    c1 = xy2 / (q * q)
                    c2 = (y * y - x * x) / (q * q)
                    for t in range(n_packed):
                        j = jj[t]
                        k = kk[t]
                        hess[i, t] = (
                            (x * hess[a, t] - y * hess[b, t]) / q
                            - c1 * (grad[a, j] * grad[a, k])
                            + c2 * (
                                grad[a, j] * grad[b, k] + grad[b, j] * grad[a, k]
                            )
                            + c1 * (grad[b, j] * grad[b, k])
                        )
                if bad < 0:
                    if not isfinite(val[i]):
                        bad = <int> i
                    else:
                        for t in range(n):
                            if not isfinite(grad[i, t]):
                                bad = <int> i
                                break
                        if bad < 0:
                            for t in range(n_packed):
                                if not isfinite(hess[i, t]):
                                    bad = <int> i
                                    break
            out_values[p] = val[n_instr - 1]
            for t in range(n):
                out_grads[p, t] = grad[n_instr - 1, t]
            for t in range(n_packed):
                out_hess[p, t] = hess[n_instr - 1, t]
            first_bad[p] = bad
