"""Pure numpy tape interpreter, the fallback when the extension is absent.

Both entry points fill caller-allocated output arrays and record, per point,
the index of the first instruction whose result (value, gradient or Hessian
entry) was nonfinite or out of domain; -1 marks a clean point. Execution
continues past failures so one bad lane never hides results for the others.

Hessians are stored packed, upper triangle row by row:
p = j*n - j*(j-1)//2 + (k-j) for j <= k.
"""

from __future__ import annotations

import numpy as np

from . import tape as T


def _mark(first_bad, bad, instr):
    hit = bad & (first_bad < 0)
    if hit.any():
        first_bad[hit] = instr


def eval_values(ops, arg1, arg2, consts, points, out_values, first_bad):
    n_instr = len(ops)
    n_pts = points.shape[0]
    slots = [None] * n_instr
    first_bad[:] = -1
    with np.errstate(all="ignore"):
        for i in range(n_instr):
            op = ops[i]
            a = arg1[i]
            b = arg2[i]
            if op == T.OP_CONST:
                res = np.full(n_pts, consts[a])
            elif op == T.OP_VAR:
                res = points[:, a].copy()
            elif op == T.OP_ADD:
                res = slots[a] + slots[b]
            elif op == T.OP_SUB:
                res = slots[a] - slots[b]
            elif op == T.OP_MUL:
                res = slots[a] * slots[b]
            elif op == T.OP_DIV:
                res = slots[a] / slots[b]
            elif op == T.OP_POWC:
                res = np.power(slots[a], consts[b])
            elif op == T.OP_POW:
                res = np.power(slots[a], slots[b])
            elif op == T.OP_NEG:
                res = -slots[a]
            elif op == T.OP_SIN:
                res = np.sin(slots[a])
            elif op == T.OP_COS:
                res = np.cos(slots[a])
            elif op == T.OP_SINH:
                res = np.sinh(slots[a])
            elif op == T.OP_COSH:
                res = np.cosh(slots[a])
            elif op == T.OP_TANH:
                res = np.tanh(slots[a])
            elif op == T.OP_EXP:
                res = np.exp(slots[a])
            elif op == T.OP_LOG:
                res = np.log(slots[a])
            elif op == T.OP_SQRT:
                res = np.sqrt(slots[a])
            elif op == T.OP_ATAN2:
                res = np.arctan2(slots[a], slots[b])
                _mark(first_bad, (slots[a] == 0.0) & (slots[b] == 0.0), i)
            else:
                raise AssertionError(f"unknown opcode {op}")
            _mark(first_bad, ~np.isfinite(res), i)
            slots[i] = res
    out_values[:] = slots[n_instr - 1]


def eval_jets(ops, arg1, arg2, consts, points, out_values, out_grads, out_hess, first_bad):
    n_instr = len(ops)
    n_pts, n = points.shape
    jj, kk = np.triu_indices(n)
    val = [None] * n_instr
    grad = [None] * n_instr
    hess = [None] * n_instr
    first_bad[:] = -1

    def outer(ga, gb):
        return ga[:, jj] * gb[:, kk]

    def sym_outer(ga, gb):
        return ga[:, jj] * gb[:, kk] + gb[:, jj] * ga[:, kk]

    with np.errstate(all="ignore"):
        for i in range(n_instr):
            op = ops[i]
            a = arg1[i]
            b = arg2[i]
            if op == T.OP_CONST:
                v = np.full(n_pts, consts[a])
                g = np.zeros((n_pts, n))
                h = np.zeros((n_pts, len(jj)))
            elif op == T.OP_VAR:
                v = points[:, a].copy()
                g = np.zeros((n_pts, n))
                g[:, a] = 1.0
                h = np.zeros((n_pts, len(jj)))
            elif op == T.OP_ADD:
                v = val[a] + val[b]
                g = grad[a] + grad[b]
                h = hess[a] + hess[b]
            elif op == T.OP_SUB:
                v = val[a] - val[b]
                g = grad[a] - grad[b]
                h = hess[a] - hess[b]
            elif op == T.OP_MUL:
                va, vb = val[a][:, None], val[b][:, None]
                v = val[a] * val[b]
                g = grad[a] * vb + va * grad[b]
                h = hess[a] * vb + va * hess[b] + sym_outer(grad[a], grad[b])
            elif op == T.OP_DIV:
                vb = val[b][:, None]
                v = val[a] / val[b]
                g = (grad[a] - v[:, None] * grad[b]) / vb
                h = (
                    hess[a] - v[:, None] * hess[b] - sym_outer(g, grad[b])
                ) / vb
            elif op == T.OP_POWC:
                c = consts[b]
                u = val[a]
                v = np.power(u, c)
                if c == 0.0:
                    g = np.zeros((n_pts, n))
                    h = np.zeros((n_pts, len(jj)))
                elif c == 1.0:
                    g = grad[a].copy()
                    h = hess[a].copy()
                else:
                    d1 = c * np.power(u, c - 1.0)
                    d2 = c * (c - 1.0) * np.power(u, c - 2.0)
                    g = d1[:, None] * grad[a]
                    h = d1[:, None] * hess[a] + d2[:, None] * outer(grad[a], grad[a])
            elif op == T.OP_POW:
                # derivatives need log of the base, so only positive bases
                u, w = val[a], val[b]
                v = np.power(u, w)
                lu = np.log(u)
                ru = w / u
                gw = grad[b] * lu[:, None] + ru[:, None] * grad[a]
                hw = (
                    hess[b] * lu[:, None]
                    + sym_outer(grad[b], grad[a]) / u[:, None]
                    + ru[:, None] * hess[a]
                    - (ru / u)[:, None] * outer(grad[a], grad[a])
                )
                g = v[:, None] * gw
                h = v[:, None] * (hw + outer(gw, gw))
            elif op == T.OP_NEG:
                v = -val[a]
                g = -grad[a]
                h = -hess[a]
            elif op == T.OP_SIN:
                v = np.sin(val[a])
                d1 = np.cos(val[a])
                g = d1[:, None] * grad[a]
                h = d1[:, None] * hess[a] - v[:, None] * outer(grad[a], grad[a])
            elif op == T.OP_COS:
                v = np.cos(val[a])
                s = np.sin(val[a])
                g = -s[:, None] * grad[a]
                h = -s[:, None] * hess[a] - v[:, None] * outer(grad[a], grad[a])
            elif op == T.OP_SINH:
                v = np.sinh(val[a])
                d1 = np.cosh(val[a])
                g = d1[:, None] * grad[a]
                h = d1[:, None] * hess[a] + v[:, None] * outer(grad[a], grad[a])
            elif op == T.OP_COSH:
                v = np.cosh(val[a])
                d1 = np.sinh(val[a])
                g = d1[:, None] * grad[a]
                h = d1[:, None] * hess[a] + v[:, None] * outer(grad[a], grad[a])
            elif op == T.OP_TANH:
                v = np.tanh(val[a])
                d1 = 1.0 - v * v
                g = d1[:, None] * grad[a]
                h = d1[:, None] * hess[a] - (2.0 * v * d1)[:, None] * outer(
                    grad[a], grad[a]
                )
            elif op == T.OP_EXP:
                v = np.exp(val[a])
                g = v[:, None] * grad[a]
                h = v[:, None] * (hess[a] + outer(grad[a], grad[a]))
            elif op == T.OP_LOG:
                u = val[a]
                v = np.log(u)
                g = grad[a] / u[:, None]
                h = hess[a] / u[:, None] - outer(g, g)
            elif op == T.OP_SQRT:
                v = np.sqrt(val[a])
                d1 = 0.5 / v
                g = d1[:, None] * grad[a]
                h = d1[:, None] * hess[a] - (0.25 / (v * v * v))[:, None] * outer(
                    grad[a], grad[a]
                )
            elif op == T.OP_ATAN2:
                y, x = val[a], val[b]
                gy, gx = grad[a], grad[b]
                q = x * x + y * y
                v = np.arctan2(y, x)
                g = (x[:, None] * gy - y[:, None] * gx) / q[:, None]
                xy2 = 2.0 * x * y
                mixed = (y * y - x * x) / (q * q)
                h = (
                    (x[:, None] * hess[a] - y[:, None] * hess[b]) / q[:, None]
                    - (xy2 / (q * q))[:, None] * outer(gy, gy)
                    + mixed[:, None] * sym_outer(gy, gx)
                    + (xy2 / (q * q))[:, None] * outer(gx, gx)
                )
                _mark(first_bad, (y == 0.0) & (x == 0.0), i)
            else:
                raise AssertionError(f"unknown opcode {op}")
            bad = (
                ~np.isfinite(v)
                | ~np.isfinite(g).all(axis=1)
                | ~np.isfinite(h).all(axis=1)
            )
            _mark(first_bad, bad, i)
            val[i], grad[i], hess[i] = v, g, h
    last = n_instr - 1
    out_values[:] = val[last]
    out_grads[:] = grad[last]
    out_hess[:] = hess[last]
