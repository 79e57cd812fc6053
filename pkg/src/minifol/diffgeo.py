"""Jacobi matrices, regularity, minor m-forms, Hesse traces, mean curvature.

Multi-indices are strictly ascending 1-based tuples; every enumeration is
lexicographic, so m-form components line up with multi_indices(m, n)
position by position.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .autodiff import eval_jet, map_jets, map_jets_status
from .errors import DegenerateGradientError, UnsupportedSignatureError
from .mapdef import MapDefinition


def multi_indices(m: int, n: int):
    """All ascending multi-indices of length m in [1, n], lexicographic."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    return tuple(itertools.combinations(range(1, n + 1), m))


def permutation_sign(indices) -> int:
    """Sign of the permutation sorting indices ascending; 0 on repeats."""
    indices = tuple(indices)
    if len(set(indices)) != len(indices):
        return 0
    inversions = sum(
        1
        for a in range(len(indices))
        for b in range(a + 1, len(indices))
        if indices[a] > indices[b]
    )
    return -1 if inversions % 2 else 1


@dataclass(frozen=True, eq=False)
class JacobianValue:
    point: tuple
    matrix: np.ndarray  # (m, n), row i is the gradient of component i


@dataclass(frozen=True, eq=False)
class MFormValue:
    point: tuple
    indices: tuple  # multi_indices(m, n)
    components: np.ndarray  # (C(n,m),) aligned with indices


@dataclass(frozen=True)
class MinimalityReading:
    """Trace condition to test: the full Laplacian or all sectional traces."""

    tag: str  # "FULL_TRACE" | "SECTIONAL_ALL"
    size: int | None = None

    def label(self) -> str:
        if self.tag == "FULL_TRACE":
            return "FULL_TRACE"
        return f"SECTIONAL_ALL({self.size})"

    def validate(self, n: int):
        if self.tag == "FULL_TRACE":
            if self.size is not None:
                raise ValueError("FULL_TRACE takes no section size")
            return
        if self.tag != "SECTIONAL_ALL":
            raise ValueError(f"unknown reading tag {self.tag!r}")
        if self.size is None or not 1 <= self.size <= n:
            raise ValueError(f"section size must lie in [1, {n}], got {self.size}")


FULL_TRACE = MinimalityReading("FULL_TRACE")


def sectional_all(size: int) -> MinimalityReading:
    return MinimalityReading("SECTIONAL_ALL", size)


def reading_from_label(label: str) -> MinimalityReading:
    text = label.strip()
    if text == "FULL_TRACE":
        return FULL_TRACE
    if text.startswith("SECTIONAL_ALL(") and text.endswith(")"):
        return sectional_all(int(text[len("SECTIONAL_ALL(") : -1]))
    raise ValueError(f"unknown reading {label!r}")


def default_readings(n: int):
    return (FULL_TRACE,) + tuple(sectional_all(s) for s in range(1, n + 1))


# ---------------------------------------------------------------------------
# Jacobians and regularity


def jacobi_matrix(definition: MapDefinition, point) -> JacobianValue:
    matrix = np.empty((definition.m, definition.n))
    for i, node in enumerate(definition.components):
        matrix[i] = eval_jet(node, point, definition.n).gradient
    return JacobianValue(point=tuple(float(v) for v in point), matrix=matrix)


def jacobi_matrix_batch(definition: MapDefinition, points) -> np.ndarray:
    _, grads, _ = map_jets(definition, points)
    return grads


def grid_points(definition: MapDefinition, count: int) -> np.ndarray:
    """Uniform inclusive grid over the domain box, points in lexicographic
    axis order (last axis fastest); count samples per axis."""
    axes = [
        np.linspace(definition.domain_min[i], definition.domain_max[i], count)
        for i in range(definition.n)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


@dataclass(frozen=True, eq=False)
class RegularityReport:
    regular: bool
    min_singular_value: float
    witnesses: tuple  # up to 10 points where rank < m or evaluation failed
    samples_checked: int


RANK_TOLERANCE_SCALE = 2.0**-40


def numerical_ranks(matrices) -> np.ndarray:
    """Rank of each (m, n) matrix: singular values above max(n,m)*s_max*2^-40."""
    matrices = np.asarray(matrices)
    sigma = np.linalg.svd(matrices, compute_uv=False)
    tau = (
        max(matrices.shape[-1], matrices.shape[-2])
        * sigma[..., 0]
        * RANK_TOLERANCE_SCALE
    )
    return (sigma > tau[..., None]).sum(axis=-1)


def regularity_check(definition: MapDefinition, sampler=None) -> RegularityReport:
    """Sample the box and test rank(Jacobian) == m at every sample.

    sampler: {"kind": "grid", "count": per-axis resolution} or
    {"kind": "random", "count": total points, "seed": int}. Sample points
    where some component cannot be evaluated count as failures and show up
    as witnesses; the check continues past them.
    """
    if sampler is None:
        sampler = {"kind": "grid", "count": 17}
    kind = sampler.get("kind", "grid")
    count = int(sampler.get("count", 17))
    if kind == "grid":
        points = grid_points(definition, count)
    elif kind == "random":
        rng = np.random.default_rng(sampler.get("seed", 0))
        points = rng.uniform(
            definition.domain_min, definition.domain_max, size=(count, definition.n)
        )
    else:
        raise ValueError(f"unknown sampler kind {kind!r}")

    _, grads, _, ok = map_jets_status(definition, points)
    m = definition.m
    witnesses = []
    min_sigma = math.inf
    regular = True

    bad_eval = np.flatnonzero(~ok)
    good = np.flatnonzero(ok)
    if good.size:
        sigma = np.linalg.svd(grads[good], compute_uv=False)
        tau = max(definition.n, m) * sigma[:, 0] * RANK_TOLERANCE_SCALE
        deficient = sigma[:, m - 1] <= tau
        min_sigma = float(sigma[:, m - 1].min())
        failing = good[deficient]
    else:
        failing = np.array([], dtype=int)

    bad_order = np.sort(np.concatenate([bad_eval, failing]))
    if bad_order.size:
        regular = False
        for idx in bad_order[:10]:
            witnesses.append(tuple(float(v) for v in points[idx]))
    return RegularityReport(
        regular=regular,
        min_singular_value=min_sigma if good.size else math.nan,
        witnesses=tuple(witnesses),
        samples_checked=int(points.shape[0]),
    )


# ---------------------------------------------------------------------------
# Exterior differential (minor m-forms)


def _batched_det(matrices: np.ndarray) -> np.ndarray:
    """Determinants of (..., m, m); small sizes use closed forms so that a
    1x1 minor is the matrix entry itself, exactly."""
    m = matrices.shape[-1]
    if m == 1:
        return matrices[..., 0, 0].copy()
    if m == 2:
        return (
            matrices[..., 0, 0] * matrices[..., 1, 1]
            - matrices[..., 0, 1] * matrices[..., 1, 0]
        )
    if m == 3:
        a = matrices
        return (
            a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1]
            * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2]
            * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0])
        )
    return np.linalg.det(matrices)


def minor_components(matrix, indices=None) -> np.ndarray:
    """Minors det(matrix[:, J-1]) for every ascending J, lexicographic."""
    matrix = np.asarray(matrix, dtype=np.float64)
    m = matrix.shape[-2]
    n = matrix.shape[-1]
    if indices is None:
        indices = multi_indices(m, n)
    out = np.empty(matrix.shape[:-2] + (len(indices),))
    for k, index in enumerate(indices):
        cols = [j - 1 for j in index]
        out[..., k] = _batched_det(matrix[..., :, cols])
    return out


def form_coefficient(matrix, indices) -> float:
    """Alternating coefficient for an arbitrary index order.

    The value is permutation_sign(indices) times the ascending minor, so
    swapping two indices flips the sign exactly.
    """
    indices = tuple(int(j) for j in indices)
    matrix = np.asarray(matrix, dtype=np.float64)
    m, n = matrix.shape
    if len(indices) != m:
        raise ValueError(f"need {m} column indices, got {len(indices)}")
    if not all(1 <= j <= n for j in indices):
        raise ValueError(f"column indices must lie in [1, {n}]")
    sign = permutation_sign(indices)
    if sign == 0:
        return 0.0
    cols = [j - 1 for j in sorted(indices)]
    return sign * float(_batched_det(matrix[:, cols]))


def exterior_differential(definition: MapDefinition, point) -> MFormValue:
    jac = jacobi_matrix(definition, point)
    indices = multi_indices(definition.m, definition.n)
    return MFormValue(
        point=jac.point,
        indices=indices,
        components=minor_components(jac.matrix, indices),
    )


def exterior_differential_batch(definition: MapDefinition, points) -> np.ndarray:
    grads = jacobi_matrix_batch(definition, points)
    return minor_components(grads)


# ---------------------------------------------------------------------------
# Hesse matrices and trace readings


def hessians(definition: MapDefinition, point) -> np.ndarray:
    """Hessians of all components at one point, shape (m, n, n)."""
    _, _, hess = map_jets(definition, np.asarray(point, dtype=np.float64)[None, :])
    return hess[0]


def sectional_hessian(definition: MapDefinition, component_index: int, J, point):
    """Principal submatrix of one component's Hessian over multi-index J."""
    if not 1 <= component_index <= definition.m:
        raise ValueError(f"component index must lie in [1, {definition.m}]")
    J = tuple(int(j) for j in J)
    if list(J) != sorted(set(J)) or not J:
        raise ValueError("J must be strictly ascending and nonempty")
    if J[0] < 1 or J[-1] > definition.n:
        raise ValueError(f"J entries must lie in [1, {definition.n}]")
    full = hessians(definition, point)[component_index - 1]
    sel = [j - 1 for j in J]
    return full[np.ix_(sel, sel)]


def minimality_residual_batch(
    definition: MapDefinition, points, reading: MinimalityReading
) -> np.ndarray:
    """Trace residuals at each point; zero rows mean minimal under the reading.

    FULL_TRACE: (batch, m) Laplacians. SECTIONAL_ALL(s): (batch, m*C(n,s))
    sectional traces, component-major with J lexicographic inside each
    component.
    """
    reading.validate(definition.n)
    _, _, hess = map_jets(definition, points)
    if reading.tag == "FULL_TRACE":
        return np.trace(hess, axis1=-2, axis2=-1)
    sections = multi_indices(reading.size, definition.n)
    batch = hess.shape[0]
    out = np.empty((batch, definition.m * len(sections)))
    col = 0
    for i in range(definition.m):
        for J in sections:
            sel = [j - 1 for j in J]
            out[:, col] = hess[:, i, sel, sel].sum(axis=-1)
            col += 1
    return out


def minimality_residual(
    definition: MapDefinition, point, reading: MinimalityReading
) -> np.ndarray:
    return minimality_residual_batch(
        definition, np.asarray(point, dtype=np.float64)[None, :], reading
    )[0]


# ---------------------------------------------------------------------------
# Implicit mean curvature for hypersurface level sets

DEGENERATE_GRADIENT_FLOOR = 1e-100


def implicit_mean_curvature_batch(
    definition: MapDefinition, points, component: int = 1
) -> np.ndarray:
    """H = div(grad/|grad|) of one component at each point.

    Sum-of-principal-curvatures convention with respect to the normal
    grad/|grad| (unit sphere with outward normal gives +2).
    """
    if not 1 <= component <= definition.m:
        raise UnsupportedSignatureError(
            f"component must lie in [1, {definition.m}], got {component}"
        )
    pts = np.ascontiguousarray(points, dtype=np.float64)
    _, grads, hess = map_jets(definition, pts)
    g = grads[:, component - 1, :]
    h = hess[:, component - 1, :, :]
    norm2 = (g * g).sum(axis=1)
    norm = np.sqrt(norm2)
    tiny = norm <= DEGENERATE_GRADIENT_FLOOR
    if tiny.any():
        idx = int(np.flatnonzero(tiny)[0])
        raise DegenerateGradientError(
            f"gradient vanishes at {tuple(float(v) for v in pts[idx])}"
        )
    trace = np.trace(h, axis1=-2, axis2=-1)
    ghg = np.einsum("bi,bij,bj->b", g, h, g)
    return (trace * norm2 - ghg) / (norm2 * norm)


def implicit_mean_curvature(
    definition: MapDefinition, point, component: int = 1
) -> float:
    return float(
        implicit_mean_curvature_batch(
            definition, np.asarray(point, dtype=np.float64)[None, :], component
        )[0]
    )
