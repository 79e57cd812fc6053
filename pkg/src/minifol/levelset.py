"""Level-set extraction and foliation sampling.

Supported signatures: (n=2, m=1) marching squares to a polyline, (n=3, m=1)
marching cubes to a triangle mesh, (n=3, m=2) predictor-corrector curve
continuation to a polyline. Grid vertices are an inclusive per-axis lattice
over the domain box; a point is "inside" where phi(x) >= c, and mesh normals
point toward increasing phi.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from ._mc_tables import EDGE_AXIS_OFFSET, EDGE_TABLE, TRI_TABLE
from .autodiff import map_jets, map_values
from .errors import UnsupportedSignatureError
from .mapdef import MapDefinition
from .diffgeo import regularity_check


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (V, 3)
    triangles: np.ndarray  # (T, 3) int
    normals: np.ndarray  # (V, 3), unit, toward increasing phi

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: np.ndarray  # (V, n)
    segments: np.ndarray  # (S, 2) int
    closed: bool  # every chain is a closed loop
    normals: np.ndarray | None = None  # (V, n) for n=2 level curves

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0


@dataclass(frozen=True, eq=False)
class Foliation:
    levels: tuple  # of level tuples, length m each
    leaves: tuple  # of Mesh | Polyline, aligned with levels
    map_regular: bool


def _axes(definition: MapDefinition, grid):
    n = definition.n
    if np.isscalar(grid):
        counts = [int(grid)] * n
    else:
        counts = [int(g) for g in grid]
        if len(counts) != n:
            raise ValueError(f"grid must have {n} entries")
    if min(counts) < 2:
        raise ValueError("grid needs at least 2 samples per axis")
    return [
        np.linspace(definition.domain_min[i], definition.domain_max[i], counts[i])
        for i in range(n)
    ]


def _grid_values(definition, axes, component):
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([g.ravel() for g in mesh], axis=-1)
    values = map_values(definition, points)[:, component]
    return values.reshape([len(a) for a in axes])


def _level_vector(definition, c):
    c = np.atleast_1d(np.asarray(c, dtype=np.float64))
    if c.shape != (definition.m,):
        raise ValueError(f"level must have {definition.m} entries")
    return c


def _vertex_normals(definition, vertices, component=0):
    if len(vertices) == 0:
        return np.zeros((0, definition.n))
    _, grads, _ = map_jets(definition, vertices)
    g = grads[:, component, :]
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return g / norms


# ---------------------------------------------------------------------------
# Marching squares (n=2, m=1)

# local edges: 0 bottom (v00-v10), 1 right (v10-v11), 2 top (v01-v11),
# 3 left (v00-v01); case bits v00=1, v10=2, v11=4, v01=8 set where phi >= c.
# Cases 16/17 are the two saddles when the cell center is also inside.
_SEGMENT_TABLE = {
    0: (),
    1: ((3, 0),),
    2: ((0, 1),),
    3: ((3, 1),),
    4: ((1, 2),),
    5: ((3, 0), (1, 2)),
    6: ((0, 2),),
    7: ((3, 2),),
    8: ((2, 3),),
    9: ((0, 2),),
    10: ((0, 1), (2, 3)),
    11: ((1, 2),),
    12: ((1, 3),),
    13: ((0, 1),),
    14: ((0, 3),),
    15: (),
    16: ((0, 1), (2, 3)),
    17: ((3, 0), (1, 2)),
}


def _marching_squares(definition, c, axes):
    ax1, ax2 = axes
    r1, r2 = len(ax1), len(ax2)
    f = _grid_values(definition, axes, 0) - c
    inside = f >= 0.0

    case = (
        inside[:-1, :-1] * 1
        + inside[1:, :-1] * 2
        + inside[1:, 1:] * 4
        + inside[:-1, 1:] * 8
    ).astype(np.int32)
    # saddle disambiguation: the mean of the four corners stands in for the
    # center sample
    center_in = (f[:-1, :-1] + f[1:, :-1] + f[1:, 1:] + f[:-1, 1:]) >= 0.0
    case[(case == 5) & center_in] = 16
    case[(case == 10) & center_in] = 17

    # global edge ids: horizontal family first, then vertical
    e_h = (r1 - 1) * r2
    ci, cj = np.meshgrid(np.arange(r1 - 1), np.arange(r2 - 1), indexing="ij")
    local_gid = np.stack(
        [
            ci * r2 + cj,  # edge 0: horizontal at (i, j)
            e_h + (ci + 1) * (r2 - 1) + cj,  # edge 1: vertical at (i+1, j)
            ci * r2 + (cj + 1),  # edge 2: horizontal at (i, j+1)
            e_h + ci * (r2 - 1) + cj,  # edge 3: vertical at (i, j)
        ],
        axis=-1,
    ).reshape(-1, 4)

    flat_case = case.ravel()
    seg_gids = []
    for cell in np.flatnonzero((flat_case != 0) & (flat_case != 15)):
        for ea, eb in _SEGMENT_TABLE[int(flat_case[cell])]:
            seg_gids.append((local_gid[cell, ea], local_gid[cell, eb]))
    if not seg_gids:
        return Polyline(
            vertices=np.zeros((0, 2)),
            segments=np.zeros((0, 2), dtype=np.int32),
            closed=False,
            normals=np.zeros((0, 2)),
        )
    seg_gids = np.asarray(seg_gids, dtype=np.int64)
    used, segments = np.unique(seg_gids, return_inverse=True)
    segments = segments.reshape(-1, 2).astype(np.int32)

    horizontal = used < e_h
    vi = np.where(horizontal, used // r2, (used - e_h) // (r2 - 1))
    vj = np.where(horizontal, used % r2, (used - e_h) % (r2 - 1))
    ni = vi + horizontal
    nj = vj + ~horizontal
    fa = f[vi, vj]
    fb = f[ni, nj]
    t = fa / (fa - fb)
    pa = np.stack([ax1[vi], ax2[vj]], axis=-1)
    pb = np.stack([ax1[ni], ax2[nj]], axis=-1)
    vertices = pa + t[:, None] * (pb - pa)

    degree = np.bincount(segments.ravel(), minlength=len(vertices))
    closed = bool(len(segments) > 0 and (degree == 2).all())
    return Polyline(
        vertices=vertices,
        segments=segments,
        closed=closed,
        normals=_vertex_normals(definition, vertices),
    )


# ---------------------------------------------------------------------------
# Marching cubes (n=3, m=1)


def _marching_cubes(definition, c, axes):
    ax1, ax2, ax3 = axes
    r1, r2, r3 = len(ax1), len(ax2), len(ax3)
    f = _grid_values(definition, axes, 0) - c
    below = f < 0.0

    cube_index = (
        below[:-1, :-1, :-1] * 1
        + below[1:, :-1, :-1] * 2
        + below[1:, 1:, :-1] * 4
        + below[:-1, 1:, :-1] * 8
        + below[:-1, :-1, 1:] * 16
        + below[1:, :-1, 1:] * 32
        + below[1:, 1:, 1:] * 64
        + below[:-1, 1:, 1:] * 128
    ).astype(np.int32)

    flat = cube_index.ravel()
    active = np.flatnonzero(EDGE_TABLE[flat] != 0)
    if active.size == 0:
        empty = np.zeros((0, 3))
        return Mesh(vertices=empty, triangles=np.zeros((0, 3), dtype=np.int32), normals=empty)

    ci, cj, ck = np.unravel_index(active, (r1 - 1, r2 - 1, r3 - 1))
    # global edge ids per active cell for all 12 local edges
    e0_count = (r1 - 1) * r2 * r3
    e1_count = r1 * (r2 - 1) * r3
    gids = np.empty((active.size, 12), dtype=np.int64)
    for e in range(12):
        axis, di, dj, dk = EDGE_AXIS_OFFSET[e]
        bi, bj, bk = ci + di, cj + dj, ck + dk
        if axis == 0:
            gids[:, e] = (bi * r2 + bj) * r3 + bk
        elif axis == 1:
            gids[:, e] = e0_count + (bi * (r2 - 1) + bj) * r3 + bk
        else:
            gids[:, e] = e0_count + e1_count + (bi * r2 + bj) * (r3 - 1) + bk

    tri_rows = TRI_TABLE[flat[active]]  # (A, 16), -1 padded
    tri_edges = tri_rows[:, :15].reshape(active.size, 5, 3)
    valid = tri_edges[:, :, 0] >= 0
    cell_of_tri, slot = np.nonzero(valid)
    local = tri_edges[cell_of_tri, slot]  # (T, 3) local edge ids
    tri_gids = gids[cell_of_tri[:, None], local]

    used, inverse = np.unique(tri_gids.ravel(), return_inverse=True)
    triangles = inverse.reshape(-1, 3).astype(np.int32)

    # decode edge ids back to base lattice point + axis, then interpolate
    axis0 = used < e0_count
    axis1 = (used >= e0_count) & (used < e0_count + e1_count)
    vi = np.empty(used.size, dtype=np.int64)
    vj = np.empty_like(vi)
    vk = np.empty_like(vi)
    rem = used[axis0]
    vi[axis0], rem = rem // (r2 * r3), rem % (r2 * r3)
    vj[axis0], vk[axis0] = rem // r3, rem % r3
    rem = used[axis1] - e0_count
    vi[axis1], rem = rem // ((r2 - 1) * r3), rem % ((r2 - 1) * r3)
    vj[axis1], vk[axis1] = rem // r3, rem % r3
    axis2 = ~(axis0 | axis1)
    rem = used[axis2] - e0_count - e1_count
    vi[axis2], rem = rem // (r2 * (r3 - 1)), rem % (r2 * (r3 - 1))
    vj[axis2], vk[axis2] = rem // (r3 - 1), rem % (r3 - 1)

    fa = f[vi, vj, vk]
    ni = vi + axis0
    nj = vj + axis1
    nk = vk + axis2
    fb = f[ni, nj, nk]
    t = fa / (fa - fb)
    pa = np.stack([ax1[vi], ax2[vj], ax3[vk]], axis=-1)
    pb = np.stack([ax1[ni], ax2[nj], ax3[nk]], axis=-1)
    vertices = pa + t[:, None] * (pb - pa)

    return Mesh(
        vertices=vertices,
        triangles=triangles,
        normals=_vertex_normals(definition, vertices),
    )


# ---------------------------------------------------------------------------
# Curve continuation (n=3, m=2)

_MAX_TRACE_STEPS = 40000


def _newton_project(definition, point, c, box_lo, box_hi, tol):
    """Pull a point onto both level sets with least-squares Newton steps."""
    p = point.copy()
    for _ in range(12):
        if (p < box_lo).any() or (p > box_hi).any():
            return p, False
        values, grads, _ = map_jets(definition, p[None, :])
        residual = values[0] - c
        if np.abs(residual).max() <= tol:
            return p, True
        jac = grads[0]
        try:
            step = jac.T @ np.linalg.solve(jac @ jac.T, residual)
        except np.linalg.LinAlgError:
            return p, False
        p = p - step
    values = map_values(definition, p[None, :])[0]
    return p, bool(np.abs(values - c).max() <= tol * 10)


def _tangent(definition, point):
    _, grads, _ = map_jets(definition, point[None, :])
    t = np.cross(grads[0, 0], grads[0, 1])
    norm = np.linalg.norm(t)
    if norm == 0.0:
        return None
    return t / norm


def _trace_direction(definition, start, direction, c, box_lo, box_hi, step, tol):
    """Walk one direction; returns (points, hit_loop)."""
    points = []
    p = start
    t_prev = direction
    for _ in range(_MAX_TRACE_STEPS):
        predictor = p + step * t_prev
        corrected, ok = _newton_project(definition, predictor, c, box_lo, box_hi, tol)
        if not ok:
            break
        if len(points) > 2 and np.linalg.norm(corrected - start) < 0.75 * step:
            return points, True
        points.append(corrected)
        t_new = _tangent(definition, corrected)
        if t_new is None:
            break
        if np.dot(t_new, t_prev) < 0:
            t_new = -t_new
        p, t_prev = corrected, t_new
    return points, False


def _curve_continuation(definition, c, axes):
    ax1, ax2, ax3 = axes
    shape = (len(ax1) - 1, len(ax2) - 1, len(ax3) - 1)
    f1 = _grid_values(definition, axes, 0) - c[0]
    f2 = _grid_values(definition, axes, 1) - c[1]

    def straddles(f):
        lo = f[:-1, :-1, :-1]
        hi = lo.copy()
        for di, dj, dk in itertools.product((0, 1), repeat=3):
            corner = f[di : di + shape[0], dj : dj + shape[1], dk : dk + shape[2]]
            lo = np.minimum(lo, corner)
            hi = np.maximum(hi, corner)
        return (lo <= 0.0) & (hi >= 0.0)

    seeds = np.argwhere(straddles(f1) & straddles(f2))
    box_lo = np.asarray(definition.domain_min)
    box_hi = np.asarray(definition.domain_max)
    cell = np.array(
        [ax1[1] - ax1[0], ax2[1] - ax2[0], ax3[1] - ax3[0]]
    )
    step = 0.25 * cell.min()
    tol = 1e-10 * (1.0 + np.abs(c).max())

    visited = np.zeros(shape, dtype=bool)

    def cell_of(point):
        idx = [
            int(np.clip((point[d] - box_lo[d]) / cell[d], 0, shape[d] - 1))
            for d in range(3)
        ]
        return tuple(idx)

    all_vertices = []
    all_segments = []
    chains_closed = []
    for seed_cell in seeds:
        if visited[tuple(seed_cell)]:
            continue
        center = np.array(
            [
                ax1[seed_cell[0]] + 0.5 * cell[0],
                ax2[seed_cell[1]] + 0.5 * cell[1],
                ax3[seed_cell[2]] + 0.5 * cell[2],
            ]
        )
        start, ok = _newton_project(definition, center, c, box_lo, box_hi, tol)
        if not ok or visited[cell_of(start)]:
            continue
        direction = _tangent(definition, start)
        if direction is None:
            continue
        # deterministic initial orientation
        pivot = int(np.argmax(np.abs(direction)))
        if direction[pivot] < 0:
            direction = -direction
        forward, looped = _trace_direction(
            definition, start, direction, c, box_lo, box_hi, step, tol
        )
        if looped:
            chain = [start] + forward
        else:
            backward, _ = _trace_direction(
                definition, start, -direction, c, box_lo, box_hi, step, tol
            )
            chain = backward[::-1] + [start] + forward
        if len(chain) < 2:
            continue
        base = len(all_vertices)
        all_vertices.extend(chain)
        for k in range(len(chain) - 1):
            all_segments.append((base + k, base + k + 1))
        if looped:
            all_segments.append((base + len(chain) - 1, base))
        chains_closed.append(looped)
        for q in chain:
            visited[cell_of(q)] = True

    if not all_vertices:
        return Polyline(
            vertices=np.zeros((0, 3)),
            segments=np.zeros((0, 2), dtype=np.int32),
            closed=False,
        )
    return Polyline(
        vertices=np.asarray(all_vertices),
        segments=np.asarray(all_segments, dtype=np.int32),
        closed=bool(chains_closed and all(chains_closed)),
    )


# ---------------------------------------------------------------------------
# Public entry points


def extract_level_set(definition: MapDefinition, c, grid):
    """Extract the level set phi^-1(c) over the domain box.

    c is a scalar (m=1) or length-m vector; grid is an int or per-axis
    resolution list (vertex counts). A level outside the observed range
    returns empty geometry rather than raising.
    """
    c = _level_vector(definition, c)
    axes = _axes(definition, grid)
    n, m = definition.n, definition.m
    if (n, m) == (2, 1):
        return _marching_squares(definition, float(c[0]), axes)
    if (n, m) == (3, 1):
        return _marching_cubes(definition, float(c[0]), axes)
    if (n, m) == (3, 2):
        return _curve_continuation(definition, c, axes)
    raise UnsupportedSignatureError(
        f"level-set extraction supports (n,m) in (2,1), (3,1), (3,2); "
        f"got ({n},{m})"
    )


def sample_foliation(definition: MapDefinition, level_count: int, grid) -> Foliation:
    """Extract level_count leaves per component, levels spread uniformly
    across the observed range of each component (midpoints of equal bins,
    so the degenerate extremes are avoided)."""
    if level_count < 1:
        raise ValueError("level_count must be >= 1")
    n, m = definition.n, definition.m
    if (n, m) not in ((2, 1), (3, 1), (3, 2)):
        raise UnsupportedSignatureError(
            f"foliation sampling supports (n,m) in (2,1), (3,1), (3,2); "
            f"got ({n},{m})"
        )
    report = regularity_check(definition, {"kind": "grid", "count": 9})
    if not report.regular:
        warnings.warn(
            f"map {definition.name!r} fails the regularity check on its box; "
            "leaves may intersect",
            stacklevel=2,
        )
    axes = _axes(definition, grid)
    per_component = []
    for k in range(m):
        values = _grid_values(definition, axes, k)
        lo, hi = float(values.min()), float(values.max())
        span = hi - lo
        per_component.append(
            [lo + span * (j + 0.5) / level_count for j in range(level_count)]
        )
    levels = tuple(itertools.product(*per_component))
    leaves = tuple(extract_level_set(definition, level, grid) for level in levels)
    return Foliation(levels=levels, leaves=leaves, map_regular=report.regular)


def mesh_area(mesh: Mesh) -> float:
    if mesh.is_empty:
        return 0.0
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    cross = np.cross(b - a, c - a)
    return float(0.5 * np.linalg.norm(cross, axis=1).sum())


def polyline_length(polyline: Polyline) -> float:
    if polyline.is_empty or len(polyline.segments) == 0:
        return 0.0
    a = polyline.vertices[polyline.segments[:, 0]]
    b = polyline.vertices[polyline.segments[:, 1]]
    return float(np.linalg.norm(b - a, axis=1).sum())


def measure(geometry) -> float:
    """Area of a mesh or length of a polyline."""
    if isinstance(geometry, Mesh):
        return mesh_area(geometry)
    if isinstance(geometry, Polyline):
        return polyline_length(geometry)
    raise TypeError(f"expected Mesh or Polyline, got {type(geometry).__name__}")


# ---------------------------------------------------------------------------
# OBJ export


def _fmt(value: float) -> str:
    return repr(float(value))


def export_obj(geometry, stream) -> None:
    """Write Wavefront OBJ: v/vn/f for meshes, v/l for polylines.

    Vertices in R^2 are padded with a zero third coordinate. Floats use
    shortest round-trip formatting; indices are 1-based.
    """
    if isinstance(geometry, Mesh):
        for v in geometry.vertices:
            stream.write(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        for nrm in geometry.normals:
            stream.write(f"vn {_fmt(nrm[0])} {_fmt(nrm[1])} {_fmt(nrm[2])}\n")
        for tri in geometry.triangles:
            stream.write(
                f"f {tri[0] + 1}//{tri[0] + 1} {tri[1] + 1}//{tri[1] + 1} "
                f"{tri[2] + 1}//{tri[2] + 1}\n"
            )
        return
    if isinstance(geometry, Polyline):
        for v in geometry.vertices:
            coords = list(v) + [0.0] * (3 - len(v))
            stream.write(f"v {_fmt(coords[0])} {_fmt(coords[1])} {_fmt(coords[2])}\n")
        for seg in geometry.segments:
            stream.write(f"l {seg[0] + 1} {seg[1] + 1}\n")
        return
    raise TypeError(f"expected Mesh or Polyline, got {type(geometry).__name__}")


def export_obj_path(geometry, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        export_obj(geometry, fh)
