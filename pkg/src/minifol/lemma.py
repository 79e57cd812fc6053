"""Closedness, potential reconstruction, harmonicity, and the
reading-vs-oracle agreement matrix over the shipped map corpus.

Differential-form checks run on numeric samples: the exterior derivative
and codifferential are assembled from central differences of the form's
components, and potentials are rebuilt by axis-parallel composite Simpson
integration. The agreement harness compares trace-style minimality
readings against the variational stationarity oracle, map by map.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import __version__
from .autodiff import eval_value_batch, map_jets_status
from .diffgeo import (
    default_readings,
    exterior_differential_batch,
    implicit_mean_curvature_batch,
    minimality_residual_batch,
    multi_indices,
    regularity_check,
)
from .errors import DimensionError
from .levelset import extract_level_set, sample_foliation
from .mapdef import MapDefinition, load_map_file, parse
from .variational import (
    DEFAULT_FIELD_COUNT,
    DEFAULT_STATIONARY_TOL,
    stationarity_sweep,
)

DEFAULT_FD_STEP = 1e-3
READING_RESIDUAL_TOL = 1e-6
SIMPSON_NODES = 257
NONEXACT_DISAGREEMENT = 1e-3
READING_SAMPLE_COUNT = 200


@dataclass(frozen=True, eq=False)
class FormSample:
    """An m-form on a box: probe points, component values there, and an
    evaluator for arbitrary points. Components follow the lexicographic
    ascending multi-index order, C(n, m) of them."""

    n: int
    m: int
    box_min: tuple
    box_max: tuple
    points: np.ndarray  # (P, n) probe grid, inset from the boundary
    components: np.ndarray  # (P, C(n, m))
    evaluate: object  # callable (Q, n) -> (Q, C(n, m))
    source: str


def _probe_grid(box_min, box_max, count, inset):
    axes = [
        np.linspace(lo + inset * (hi - lo), hi - inset * (hi - lo), count)
        for lo, hi in zip(box_min, box_max)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def form_from_map(
    definition: MapDefinition, probe_count: int = 5, inset: float = 0.05
) -> FormSample:
    """The exterior differential of a map, sampled on an interior grid."""

    def evaluate(points):
        return exterior_differential_batch(definition, points)

    points = _probe_grid(
        definition.domain_min, definition.domain_max, probe_count, inset
    )
    return FormSample(
        n=definition.n,
        m=definition.m,
        box_min=definition.domain_min,
        box_max=definition.domain_max,
        points=points,
        components=evaluate(points),
        evaluate=evaluate,
        source=f"exterior_differential({definition.name})",
    )


def form_from_components(
    n: int,
    m: int,
    sources,
    box_min,
    box_max,
    probe_count: int = 5,
    inset: float = 0.05,
    name: str = "user",
) -> FormSample:
    """A form given by one expression string per component."""
    expected = math.comb(n, m)
    if len(sources) != expected:
        raise DimensionError(
            f"an {m}-form on R^{n} needs {expected} components, got {len(sources)}"
        )
    nodes = [parse(src, n) for src in sources]

    def evaluate(points):
        points = np.asarray(points, dtype=np.float64)
        return np.stack(
            [eval_value_batch(node, points, n) for node in nodes], axis=-1
        )

    points = _probe_grid(box_min, box_max, probe_count, inset)
    return FormSample(
        n=n,
        m=m,
        box_min=tuple(float(v) for v in box_min),
        box_max=tuple(float(v) for v in box_max),
        points=points,
        components=evaluate(points),
        evaluate=evaluate,
        source=f"components({name})",
    )


def _interior_points(form: FormSample, h: float) -> np.ndarray:
    lo = np.asarray(form.box_min) + 2.0 * h
    hi = np.asarray(form.box_max) - 2.0 * h
    keep = ((form.points >= lo) & (form.points <= hi)).all(axis=1)
    pts = form.points[keep]
    if len(pts) == 0:
        raise ValueError("no probe points lie 2h inside the box")
    return pts


def _component_derivatives(form: FormSample, points: np.ndarray, h: float):
    """Central differences d(component_c)/d(x_j) -> (P, n, C)."""
    p, n = points.shape
    displaced = np.broadcast_to(points[:, None, None, :], (p, n, 2, n)).copy()
    for j in range(n):
        displaced[:, j, 0, j] += h
        displaced[:, j, 1, j] -= h
    flat = form.evaluate(displaced.reshape(-1, n))
    flat = flat.reshape(p, n, 2, -1)
    return (flat[:, :, 0, :] - flat[:, :, 1, :]) / (2.0 * h)


def check_closedness(form: FormSample, h: float = DEFAULT_FD_STEP) -> float:
    """Max-norm of the numeric exterior derivative over interior probes."""
    if form.m >= form.n:
        return 0.0  # every (n+1)-form on R^n vanishes
    points = _interior_points(form, h)
    partials = _component_derivatives(form, points, h)
    comp_index = {idx: k for k, idx in enumerate(multi_indices(form.m, form.n))}
    worst = 0.0
    for big in multi_indices(form.m + 1, form.n):
        total = np.zeros(len(points))
        for t, j in enumerate(big):
            rest = big[:t] + big[t + 1 :]
            sign = -1.0 if t % 2 else 1.0
            total += sign * partials[:, j - 1, comp_index[rest]]
        worst = max(worst, float(np.abs(total).max()))
    return worst


def check_linear_harmonicity(form: FormSample, h: float = DEFAULT_FD_STEP) -> dict:
    """Residuals of d and of the flat codifferential (delta on a 1-form is
    -div; in general the signed divergence contraction), max-norm over
    interior probes."""
    d_residual = check_closedness(form, h)
    points = _interior_points(form, h)
    partials = _component_derivatives(form, points, h)
    comp_index = {idx: k for k, idx in enumerate(multi_indices(form.m, form.n))}
    delta_residual = 0.0
    # delta of an m-form is an (m-1)-form; a 0-form has the single empty index
    smalls = [()] if form.m == 1 else multi_indices(form.m - 1, form.n)
    for small in smalls:
        total = np.zeros(len(points))
        for k in range(1, form.n + 1):
            if k in small:
                continue
            pos = sum(1 for j in small if j < k)
            merged = tuple(sorted(small + (k,)))
            sign = -1.0 if pos % 2 else 1.0
            total -= sign * partials[:, k - 1, comp_index[merged]]
        delta_residual = max(delta_residual, float(np.abs(total).max()))
    return {
        "d_residual": d_residual,
        "delta_residual": delta_residual,
        "hodge_residual": max(d_residual, delta_residual),
    }


# ---------------------------------------------------------------------------
# Potential reconstruction (m = 1)


def _simpson_weights(nodes: int) -> np.ndarray:
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("composite Simpson needs an odd node count >= 3")
    w = np.full(nodes, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w / (3.0 * (nodes - 1))


def _path_potential(form, base, probes, order, nodes=SIMPSON_NODES):
    """Integrate component a along axis a, visiting axes in the given
    order; each leg is composite Simpson on [start, target]."""
    probes = np.asarray(probes, dtype=np.float64)
    q = len(probes)
    weights = _simpson_weights(nodes)
    t = np.linspace(0.0, 1.0, nodes)
    current = np.tile(np.asarray(base, dtype=np.float64), (q, 1))
    total = np.zeros(q)
    for axis in order:
        seg = np.repeat(current[:, None, :], nodes, axis=1)
        seg[:, :, axis] = current[:, axis, None] * (1.0 - t) + probes[
            :, axis, None
        ] * t
        vals = form.evaluate(seg.reshape(-1, form.n))[:, axis].reshape(q, nodes)
        total += (vals @ weights) * (probes[:, axis] - current[:, axis])
        current[:, axis] = probes[:, axis]
    return total


@dataclass(frozen=True, eq=False)
class PotentialReconstruction:
    base_point: tuple
    probe_points: np.ndarray
    values: np.ndarray  # potential at the probes, 0 at the base point
    max_gradient_error: float  # max |grad(potential) - form| over probes
    order_disagreement: float  # axis-order path dependence, ~0 iff exact
    exact: bool


def reconstruct_potential(
    form: FormSample, base_point, nodes: int = SIMPSON_NODES
) -> PotentialReconstruction:
    """Axis-parallel path integral from the base point; path dependence
    (checked with the reversed axis order) flags a closed-but-not-exact
    form. Only 1-forms are reconstructible this way."""
    if form.m != 1:
        raise DimensionError("potential reconstruction needs a 1-form")
    base = np.asarray(base_point, dtype=np.float64)
    probes = form.points
    forward = list(range(form.n))
    values = _path_potential(form, base, probes, forward, nodes)
    swapped = _path_potential(form, base, probes, forward[::-1], nodes)
    disagreement = float(np.abs(values - swapped).max())

    h = DEFAULT_FD_STEP
    p, n = probes.shape
    displaced = np.broadcast_to(probes[:, None, None, :], (p, n, 2, n)).copy()
    for j in range(n):
        displaced[:, j, 0, j] += h
        displaced[:, j, 1, j] -= h
    flat = _path_potential(form, base, displaced.reshape(-1, n), forward, nodes)
    flat = flat.reshape(p, n, 2)
    grad = (flat[:, :, 0] - flat[:, :, 1]) / (2.0 * h)
    gradient_error = float(np.abs(grad - form.components).max())

    return PotentialReconstruction(
        base_point=tuple(float(v) for v in base),
        probe_points=probes,
        values=values,
        max_gradient_error=gradient_error,
        order_disagreement=disagreement,
        exact=bool(disagreement <= NONEXACT_DISAGREEMENT),
    )


def rectangle_loop_integral(
    form: FormSample, corner_min, corner_max, nodes: int = SIMPSON_NODES
) -> float:
    """Circulation of a 1-form on R^2 around an axis-aligned rectangle,
    counterclockwise; ~2pi per enclosed vortex, ~0 for exact forms."""
    if form.n != 2 or form.m != 1:
        raise DimensionError("loop integral needs a 1-form on R^2")
    a1, a2 = (float(v) for v in corner_min)
    b1, b2 = (float(v) for v in corner_max)
    weights = _simpson_weights(nodes)
    t = np.linspace(0.0, 1.0, nodes)

    def leg(start, stop, component):
        pts = np.outer(1.0 - t, start) + np.outer(t, stop)
        vals = form.evaluate(pts)[:, component]
        span = stop[component] - start[component]
        return float((vals @ weights) * span)

    corners = [
        np.array([a1, a2]),
        np.array([b1, a2]),
        np.array([b1, b2]),
        np.array([a1, b2]),
    ]
    return (
        leg(corners[0], corners[1], 0)
        + leg(corners[1], corners[2], 1)
        + leg(corners[2], corners[3], 0)
        + leg(corners[3], corners[0], 1)
    )


# ---------------------------------------------------------------------------
# Corpus and the agreement harness


def load_corpus() -> tuple:
    """The eight shipped maps, in fixed order."""
    root = resources.files("minifol") / "corpus"
    paths = sorted(p for p in root.iterdir() if p.name.endswith(".json"))
    return tuple(load_map_file(p) for p in paths)


@dataclass(frozen=True, eq=False)
class AgreementReport:
    entries: tuple  # one JSON-ready dict per map
    confusion: dict  # reading label -> verdict-vs-oracle counts
    readings: tuple  # labels in report order
    grid: int
    seed: int
    tolerances: dict

    def to_document(self) -> dict:
        return {
            "version": __version__,
            "grid": self.grid,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "readings": list(self.readings),
            "maps": list(self.entries),
            "confusion": self.confusion,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"


def _reading_sample_points(definition, seed, count=READING_SAMPLE_COUNT):
    rng = np.random.default_rng(seed)
    lo = np.asarray(definition.domain_min)
    hi = np.asarray(definition.domain_max)
    pts = lo + rng.random((count, definition.n)) * (hi - lo)
    _, _, _, ok = map_jets_status(definition, pts)
    return pts[ok]


def _zero_level_entry(definition, grid, seed, tol):
    """Extra diagnostics for the zero level of a scalar map, when the zero
    level actually cuts through the observed range."""
    from .autodiff import map_values
    from .diffgeo import grid_points

    values = map_values(definition, grid_points(definition, 17))[:, 0]
    if not (values.min() < 0.0 < values.max()):
        return None
    leaf = extract_level_set(definition, 0.0, grid)
    if leaf.is_empty:
        return None
    curvature = implicit_mean_curvature_batch(definition, leaf.vertices)
    sweep = stationarity_sweep(definition, 0.0, grid, seed=seed, tol=tol)
    return {
        "stationary": bool(sweep.stationary),
        "max_first_variation": float(sweep.max_first_variation),
        "max_mean_curvature": float(np.abs(curvature).max()),
    }


def _map_entry(definition, readings, grid, seed, tol, field_count):
    entry = {"map": definition.name}
    report = regularity_check(definition, {"kind": "grid", "count": 9})

    level_count = 3 if definition.m == 1 else 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        foliation = sample_foliation(definition, level_count, grid)
    picked = [
        (level, leaf)
        for level, leaf in zip(foliation.levels, foliation.leaves)
        if not leaf.is_empty
    ][:3]
    if not picked:
        raise ValueError("no nonempty foliation leaves")
    sweeps = [
        stationarity_sweep(
            definition, list(level), grid, field_count=field_count, seed=seed, tol=tol
        )
        for level, _ in picked
    ]
    worst = max((abs(s.max_first_variation), s.max_first_variation) for s in sweeps)
    entry["oracle"] = {
        "stationary": all(s.stationary for s in sweeps),
        "max_first_variation": float(worst[1]),
        "levels": [[float(v) for v in level] for level, _ in picked],
        "regular": bool(report.regular),
        "min_singular_value": float(report.min_singular_value),
    }

    points = _reading_sample_points(definition, seed)
    entry["readings"] = {}
    for reading in readings:
        residual = float(
            np.abs(minimality_residual_batch(definition, points, reading)).max()
        )
        entry["readings"][reading.label()] = {
            "verdict": "minimal" if residual <= READING_RESIDUAL_TOL else "not_minimal",
            "max_residual": residual,
        }
    entry["sample_count"] = int(len(points))
    if definition.m == 1:
        zero = _zero_level_entry(definition, grid, seed, tol)
        if zero is not None:
            entry["zero_level"] = zero
    return entry


def minimality_agreement(
    corpus=None,
    readings=None,
    grid: int = 65,
    seed: int = 0,
    tol: float = DEFAULT_STATIONARY_TOL,
    field_count: int = DEFAULT_FIELD_COUNT,
) -> AgreementReport:
    """Per-map oracle verdicts vs per-reading trace verdicts.

    Map failures are recorded in the entry rather than raised, and the
    report is deterministic given (corpus, readings, grid, seed).
    """
    if corpus is None:
        corpus = load_corpus()
    label_list = []
    confusion = {}
    entries = []
    for definition in corpus:
        chosen = readings if readings is not None else default_readings(definition.n)
        chosen = [
            r for r in chosen if r.size is None or r.size <= definition.n
        ]
        for r in chosen:
            if r.label() not in label_list:
                label_list.append(r.label())
        try:
            entry = _map_entry(definition, chosen, grid, seed, tol, field_count)
        except Exception as exc:  # recorded, not fatal
            entry = {"map": definition.name, "error": f"{type(exc).__name__}: {exc}"}
        entry["grid"] = grid
        entry["seed"] = seed
        entry["tolerances"] = {
            "reading_residual": READING_RESIDUAL_TOL,
            "stationary": tol,
        }
        entries.append(entry)
        if "error" in entry:
            continue
        oracle_stationary = entry["oracle"]["stationary"]
        for label, verdict in entry["readings"].items():
            counts = confusion.setdefault(
                label,
                {
                    "agree_minimal": 0,
                    "agree_not_minimal": 0,
                    "oracle_stationary_reading_not": 0,
                    "reading_minimal_oracle_not": 0,
                },
            )
            minimal = verdict["verdict"] == "minimal"
            if minimal and oracle_stationary:
                counts["agree_minimal"] += 1
            elif not minimal and not oracle_stationary:
                counts["agree_not_minimal"] += 1
            elif oracle_stationary:
                counts["oracle_stationary_reading_not"] += 1
            else:
                counts["reading_minimal_oracle_not"] += 1
    return AgreementReport(
        entries=tuple(entries),
        confusion=confusion,
        readings=tuple(label_list or ()),
        grid=grid,
        seed=seed,
        tolerances={
            "reading_residual": READING_RESIDUAL_TOL,
            "stationary": tol,
        },
    )
