"""Discrete area-stationarity oracle.

A level set is perturbed by displacing its extracted vertices along a
compactly supported bump field (Lagrangian variation on a fixed base mesh,
so vertex correspondence is exact and central differences are noise-free).
The first variation of area (or length) is a Richardson-extrapolated
central difference; a leaf is stationary when every probe field moves the
measure by less than tol*(1 + measure).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SupportOutsideDomainError
from .levelset import Mesh, Polyline, extract_level_set, measure
from .mapdef import MapDefinition

EPSILON_SCHEDULE = (1e-2, 5e-3, 2.5e-3)
DEFAULT_FIELD_COUNT = 16
DEFAULT_STATIONARY_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class VariationField:
    """Compactly supported bump: vertices move by
    epsilon * amplitude * psi(|v - center|) * direction(v), where
    psi(r) = (1 - (r/radius)^2)^3 inside the support ball and 0 outside.

    direction is the string "normal" (use the geometry's per-vertex
    normals) or a fixed vector (normalized before use).
    """

    center: np.ndarray
    radius: float
    amplitude: float
    direction: object = "normal"

    def __post_init__(self):
        object.__setattr__(
            self, "center", np.asarray(self.center, dtype=np.float64)
        )
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if isinstance(self.direction, str):
            if self.direction != "normal":
                raise ValueError(f"unknown direction {self.direction!r}")
        else:
            vec = np.asarray(self.direction, dtype=np.float64)
            norm = np.linalg.norm(vec)
            if norm == 0.0:
                raise ValueError("fixed direction must be nonzero")
            object.__setattr__(self, "direction", vec / norm)

    def weights(self, vertices: np.ndarray) -> np.ndarray:
        r2 = ((vertices - self.center) ** 2).sum(axis=1) / self.radius**2
        return np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)

    def check_support(self, domain_min, domain_max) -> None:
        lo = np.asarray(domain_min, dtype=np.float64)
        hi = np.asarray(domain_max, dtype=np.float64)
        if ((self.center - self.radius <= lo) | (self.center + self.radius >= hi)).any():
            raise SupportOutsideDomainError(
                f"support ball (center {self.center.tolist()}, radius "
                f"{self.radius}) must lie strictly inside the domain box"
            )


@dataclass(frozen=True, eq=False)
class VariationResult:
    first_variation: float  # d(measure)/d(epsilon) at 0, Richardson-extrapolated
    second_variation: float
    epsilons_used: tuple
    stationary: bool
    base_measure: float


@dataclass(frozen=True, eq=False)
class SweepResult:
    stationary: bool
    worst_field: VariationField
    max_first_variation: float  # signed value of the worst field
    first_variations: tuple
    fields: tuple
    seed: int
    tolerance: float
    base_measure: float


def _directions(geometry, field: VariationField) -> np.ndarray:
    if isinstance(field.direction, str):
        normals = getattr(geometry, "normals", None)
        if normals is None:
            raise ValueError(
                "direction 'normal' needs geometry with per-vertex normals"
            )
        return normals
    return np.broadcast_to(field.direction, geometry.vertices.shape)


def perturb(geometry, field: VariationField, epsilon: float, box=None):
    """Displace vertices along the bump field; connectivity unchanged.

    box, when given as a (min, max) pair, enables the strictly-inside
    support check. Normals are carried over from the base geometry.
    """
    if box is not None:
        field.check_support(*box)
    if epsilon == 0.0:
        return geometry
    displacement = (
        epsilon
        * field.amplitude
        * field.weights(geometry.vertices)[:, None]
        * _directions(geometry, field)
    )
    return replace(geometry, vertices=geometry.vertices + displacement)


def first_variation(
    geometry,
    field: VariationField,
    tol: float = DEFAULT_STATIONARY_TOL,
    box=None,
) -> VariationResult:
    """Richardson-extrapolated central difference of the measure."""
    if box is not None:
        field.check_support(*box)
    base = measure(geometry)
    diffs = []
    plus = minus = base
    for eps in EPSILON_SCHEDULE:
        plus = measure(perturb(geometry, field, +eps))
        minus = measure(perturb(geometry, field, -eps))
        diffs.append((plus - minus) / (2.0 * eps))
    r1 = (4.0 * diffs[1] - diffs[0]) / 3.0
    r2 = (4.0 * diffs[2] - diffs[1]) / 3.0
    fv = (16.0 * r2 - r1) / 15.0
    eps = EPSILON_SCHEDULE[-1]
    second = (plus - 2.0 * base + minus) / eps**2
    return VariationResult(
        first_variation=fv,
        second_variation=second,
        epsilons_used=EPSILON_SCHEDULE,
        stationary=bool(abs(fv) <= tol * (1.0 + abs(base))),
        base_measure=base,
    )


def random_fields(
    definition: MapDefinition,
    geometry,
    field_count: int = DEFAULT_FIELD_COUNT,
    seed: int = 0,
) -> tuple:
    """Seeded probe fields with centers on the extracted leaf.

    Radius starts at 0.2*box_diagonal and shrinks so the support ball
    stays strictly inside the box; vertices hugging the boundary are
    skipped. Geometry without normals gets fixed random unit directions.
    """
    lo = np.asarray(definition.domain_min)
    hi = np.asarray(definition.domain_max)
    diag = definition.box_diagonal()
    rng = np.random.default_rng(seed)
    has_normals = getattr(geometry, "normals", None) is not None
    fields = []
    attempts = 0
    while len(fields) < field_count and attempts < 50 * field_count:
        attempts += 1
        idx = int(rng.integers(len(geometry.vertices)))
        center = geometry.vertices[idx]
        margin = min((center - lo).min(), (hi - center).min())
        if margin <= 1e-6 * diag:
            continue
        radius = min(0.2 * diag, 0.95 * margin)
        if has_normals:
            direction = "normal"
        else:
            vec = rng.normal(size=definition.n)
            while np.linalg.norm(vec) < 1e-12:
                vec = rng.normal(size=definition.n)
            direction = vec
        fields.append(
            VariationField(
                center=center, radius=radius, amplitude=1.0, direction=direction
            )
        )
    if not fields:
        raise ValueError("no admissible variation fields found on the leaf")
    return tuple(fields)


def stationarity_sweep(
    definition: MapDefinition,
    c,
    grid,
    field_count: int = DEFAULT_FIELD_COUNT,
    seed: int = 0,
    tol: float = DEFAULT_STATIONARY_TOL,
    fields=None,
) -> SweepResult:
    """Probe a level set with seeded random bump fields.

    The leaf is stationary when every field's first variation is within
    tol*(1 + measure); results reduce in field-index order.
    """
    leaf = extract_level_set(definition, c, grid)
    if leaf.is_empty:
        raise ValueError(f"level {c!r} produced an empty leaf")
    if fields is None:
        fields = random_fields(definition, leaf, field_count, seed)
    box = (definition.domain_min, definition.domain_max)
    results = [first_variation(leaf, f, tol, box=box) for f in fields]
    values = [r.first_variation for r in results]
    worst = int(np.argmax(np.abs(values)))
    return SweepResult(
        stationary=all(r.stationary for r in results),
        worst_field=fields[worst],
        max_first_variation=values[worst],
        first_variations=tuple(values),
        fields=tuple(fields),
        seed=seed,
        tolerance=tol,
        base_measure=results[0].base_measure,
    )


def curvature_pairing(definition: MapDefinition, geometry, field: VariationField) -> float:
    """Analytic cross-check: -integral of H*psi over the leaf, computed
    from the implicit mean curvature at the extracted vertices. Matches
    first_variation for amplitude -1 normal bumps on m=1 leaves."""
    from .diffgeo import implicit_mean_curvature_batch

    h = implicit_mean_curvature_batch(definition, geometry.vertices)
    psi = field.weights(geometry.vertices)
    integrand = h * psi
    if isinstance(geometry, Mesh):
        tri = geometry.triangles
        a = geometry.vertices[tri[:, 0]]
        b = geometry.vertices[tri[:, 1]]
        c = geometry.vertices[tri[:, 2]]
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        per_tri = integrand[tri].mean(axis=1)
        return float(-(areas * per_tri).sum())
    if isinstance(geometry, Polyline):
        seg = geometry.segments
        lengths = np.linalg.norm(
            geometry.vertices[seg[:, 1]] - geometry.vertices[seg[:, 0]], axis=1
        )
        per_seg = 0.5 * (integrand[seg[:, 0]] + integrand[seg[:, 1]])
        return float(-(lengths * per_seg).sum())
    raise TypeError(f"expected Mesh or Polyline, got {type(geometry).__name__}")
