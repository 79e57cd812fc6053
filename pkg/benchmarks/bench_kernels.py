"""Compare the compiled tape kernels against the numpy fallback.

Times batched value and jet evaluation over the shipped corpus expressions
for each backend, plus the recursive reference evaluator, and checks that
the two backends agree to machine precision on the same inputs.

Usage: python3 benchmarks/bench_kernels.py [--batch 20000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from minifol import load_corpus
from minifol.autodiff import compiled
from minifol.mapdef import eval_expr

try:
    from minifol import _core

    HAVE_COMPILED = True
except ImportError:
    _core = None
    HAVE_COMPILED = False
from minifol import _core_py


def sample_points(definition, batch, rng):
    lo = np.asarray(definition.domain_min)
    hi = np.asarray(definition.domain_max)
    inset = 0.01 * (hi - lo)
    return rng.uniform(lo + inset, hi - inset, size=(batch, definition.n))


def run_values(impl, tape, pts):
    out = np.empty(len(pts))
    first_bad = np.empty(len(pts), dtype=np.int32)
    impl.eval_values(tape.ops, tape.arg1, tape.arg2, tape.consts, pts, out, first_bad)
    return out


def run_jets(impl, tape, pts):
    n = pts.shape[1]
    values = np.empty(len(pts))
    grads = np.empty((len(pts), n))
    hess = np.empty((len(pts), n * (n + 1) // 2))
    first_bad = np.empty(len(pts), dtype=np.int32)
    impl.eval_jets(
        tape.ops, tape.arg1, tape.arg2, tape.consts, pts, values, grads, hess, first_bad
    )
    return values, grads, hess


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=20000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    workload = []
    for definition in load_corpus():
        pts = sample_points(definition, args.batch, rng)
        for k, node in enumerate(definition.components):
            workload.append(
                (f"{definition.name}[{k}]", compiled(node, definition.n), pts)
            )

    total_evals = args.batch * len(workload)
    print(f"workload: {len(workload)} expressions x {args.batch} points")
    print(f"compiled backend available: {HAVE_COMPILED}")
    print()

    if HAVE_COMPILED:
        worst_value = 0.0
        worst_jet = 0.0
        for _, tape, pts in workload:
            va = run_values(_core, tape, pts)
            vb = run_values(_core_py, tape, pts)
            worst_value = max(worst_value, np.abs(va - vb).max())
            ja = run_jets(_core, tape, pts)
            jb = run_jets(_core_py, tape, pts)
            for a, b in zip(ja, jb):
                scale = 1.0 + np.abs(a).max()
                worst_jet = max(worst_jet, np.abs(a - b).max() / scale)
        print(f"cross-backend value disagreement: {worst_value:.3e}")
        print(f"cross-backend jet disagreement (relative): {worst_jet:.3e}")
        print()

    impls = [("numpy fallback", _core_py)]
    if HAVE_COMPILED:
        impls.insert(0, ("compiled", _core))

    timings = {}
    for label, impl in impls:
        timings[(label, "values")] = best_time(
            lambda: [run_values(impl, tape, pts) for _, tape, pts in workload],
            args.repeats,
        )
        timings[(label, "jets")] = best_time(
            lambda: [run_jets(impl, tape, pts) for _, tape, pts in workload],
            args.repeats,
        )

    tree_pts = 200
    nodes = [n for d in load_corpus() for n in d.components]
    dt = best_time(
        lambda: [
            [eval_expr(node, p) for p in pts[:tree_pts]]
            for (_, _, pts), node in zip(workload, nodes)
        ],
        max(1, args.repeats // 2),
    )
    timings[("tree walk", "values")] = dt * (args.batch / tree_pts)

    print(f"{'op':7s} {'route':16s} {'time':>9s} {'Mevals/s':>9s} {'vs fallback':>12s}")
    for op in ("values", "jets"):
        base = timings[("numpy fallback", op)]
        for label, _ in impls + [("tree walk", None)]:
            if (label, op) not in timings:
                continue
            dt = timings[(label, op)]
            rate = total_evals / dt / 1e6
            print(f"{op:7s} {label:16s} {dt:8.3f}s {rate:9.2f} {base / dt:11.2f}x")


if __name__ == "__main__":
    main()
