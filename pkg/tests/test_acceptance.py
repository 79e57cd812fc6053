"""End-to-end acceptance checks, one test per criterion.

Run with -v for one pass/fail line per criterion; each test also prints
its measured numbers (visible with -s) and enforces a wall-clock cap.
"""

import json
import math
import time

import numpy as np
import pytest

from minifol import (
    VariationField,
    check_closedness,
    check_linear_harmonicity,
    exterior_differential,
    extract_level_set,
    fd_gradient,
    fd_hessian,
    first_variation,
    form_coefficient,
    form_from_components,
    form_from_map,
    load_corpus,
    load_map,
    mesh_area,
    multi_indices,
    polyline_length,
    reconstruct_potential,
    rectangle_loop_integral,
    regularity_check,
)
from minifol import MapDefinition, parse
from minifol.autodiff import map_jets, map_values
from minifol.cli import main as cli_main


def corpus_by_name():
    return {d.name: d for d in load_corpus()}


def make_map(name, n, m, components, lo, hi):
    return load_map(
        {
            "name": name,
            "n": n,
            "m": m,
            "components": components,
            "domain": {"min": list(lo), "max": list(hi)},
        }
    )


def angular_form():
    return form_from_components(
        2,
        1,
        ["-x2/(x1^2 + x2^2)", "x1/(x1^2 + x2^2)"],
        [-2, -2],
        [2, 2],
        probe_count=6,
        name="angular",
    )


def sample_box(definition, count, rng):
    lo = np.asarray(definition.domain_min)
    hi = np.asarray(definition.domain_max)
    inset = 0.01 * (hi - lo)
    return rng.uniform(lo + inset, hi - inset, size=(count, definition.n))


def test_ac1_autodiff_gradients_and_hessians():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    grad_err = 0.0
    hess_err = 0.0
    for definition in load_corpus():
        points = sample_box(definition, 50, rng)
        _, grads, hessians = map_jets(definition, points)
        for p, point in enumerate(points):
            for k, node in enumerate(definition.components):
                g_fd = fd_gradient(node, point)
                h_fd = fd_hessian(node, point)
                g_rel = np.abs(grads[p, k] - g_fd).max() / (1.0 + np.abs(g_fd).max())
                h_rel = np.abs(hessians[p, k] - h_fd).max() / (
                    1.0 + np.abs(h_fd).max()
                )
                grad_err = max(grad_err, g_rel)
                hess_err = max(hess_err, h_rel)
    elapsed = time.perf_counter() - start
    assert grad_err <= 1e-6
    assert hess_err <= 1e-4
    assert elapsed <= 5.0
    print(
        f"AC1 PASS: grad rel err {grad_err:.3e} <= 1e-6, "
        f"hess rel err {hess_err:.3e} <= 1e-4, {elapsed:.2f}s <= 5s"
    )


def test_ac2_regularity_verdicts():
    start = time.perf_counter()
    maps = corpus_by_name()
    helicoid = regularity_check(maps["helicoid"])
    assert helicoid.regular
    assert helicoid.min_singular_value > 0

    paraboloid = maps["concentric_circles"]
    report = regularity_check(paraboloid)
    assert not report.regular
    assert report.witnesses
    lo = np.asarray(paraboloid.domain_min)
    hi = np.asarray(paraboloid.domain_max)
    cell = (hi - lo) / 16
    nearest = min(
        np.max(np.abs(np.asarray(w) / cell)) for w in report.witnesses
    )
    assert nearest <= 2.0
    elapsed = time.perf_counter() - start
    assert elapsed <= 5.0
    print(
        f"AC2 PASS: helicoid regular (sigma_min {helicoid.min_singular_value:.3f}), "
        f"paraboloid witness {nearest:.2f} cells from origin <= 2, "
        f"{elapsed:.2f}s <= 5s"
    )


def test_ac3_exterior_differential_alternation():
    start = time.perf_counter()
    # Map documents require m < n; top-degree forms are built directly.
    identity = MapDefinition(
        name="identity",
        n=2,
        m=2,
        components=(parse("x1", 2), parse("x2", 2)),
        component_sources=("x1", "x2"),
        domain_min=(-1.0, -1.0),
        domain_max=(1.0, 1.0),
    )
    rng = np.random.default_rng(3)
    for point in rng.uniform(-1, 1, size=(20, 2)):
        value = exterior_differential(identity, point)
        assert value.components.shape == (1,)
        assert value.components[0] == pytest.approx(1.0, abs=1e-14)

    for _ in range(100):
        m = int(rng.integers(2, 4))
        n = int(rng.integers(m, 6))
        matrix = rng.standard_normal((m, n))
        choices = multi_indices(m, n)
        base = list(choices[rng.integers(len(choices))])
        i, j = sorted(rng.choice(m, size=2, replace=False))
        swapped = list(base)
        swapped[i], swapped[j] = swapped[j], swapped[i]
        assert form_coefficient(matrix, swapped) == -form_coefficient(matrix, base)
    elapsed = time.perf_counter() - start
    assert elapsed <= 1.0
    print(
        f"AC3 PASS: identity component exactly 1, exact sign flips on "
        f"100 random matrices, {elapsed:.2f}s <= 1s"
    )


def test_ac4_closedness_and_exactness():
    start = time.perf_counter()
    regular_maps = [d for d in load_corpus() if regularity_check(d).regular]
    assert regular_maps
    worst_closedness = 0.0
    for definition in regular_maps:
        residual = check_closedness(form_from_map(definition), h=1e-3)
        worst_closedness = max(worst_closedness, residual)
    assert worst_closedness <= 1e-4

    worst_roundtrip = 0.0
    for definition in regular_maps:
        if definition.m != 1:
            continue
        lo = np.asarray(definition.domain_min)
        hi = np.asarray(definition.domain_max)
        base = lo + 0.1 * (hi - lo)
        rec = reconstruct_potential(form_from_map(definition), base)
        assert rec.exact
        phi = map_values(definition, rec.probe_points)[:, 0]
        phi0 = map_values(definition, base[None, :])[0, 0]
        value_err = float(np.abs(rec.values - (phi - phi0)).max())
        worst_roundtrip = max(worst_roundtrip, value_err, rec.max_gradient_error)
    assert worst_roundtrip <= 1e-5

    angular = angular_form()
    rec = reconstruct_potential(angular, [-1.5, -1.5])
    assert not rec.exact
    loop = rectangle_loop_integral(angular, [-1.5, -1.5], [1.5, 1.5])
    assert loop == pytest.approx(2 * math.pi, rel=0.01)
    elapsed = time.perf_counter() - start
    assert elapsed <= 30.0
    print(
        f"AC4 PASS: closedness {worst_closedness:.3e} <= 1e-4 over "
        f"{len(regular_maps)} regular maps, round trip {worst_roundtrip:.3e} "
        f"<= 1e-5, angular loop {loop:.6f} ~ 2pi, {elapsed:.2f}s <= 30s"
    )


def test_ac5_linear_harmonicity():
    start = time.perf_counter()
    maps = corpus_by_name()
    residuals = {}
    for name in ("hyperplanes", "rotated_hyperplanes", "helicoid"):
        checks = check_linear_harmonicity(form_from_map(maps[name]))
        residuals[name] = checks["hodge_residual"]
        assert checks["hodge_residual"] <= 1e-3

    bowl = make_map("bowl", 2, 1, ["x1^2 + x2^2"], [-2, -2], [2, 2])
    checks = check_linear_harmonicity(form_from_map(bowl))
    assert checks["hodge_residual"] == pytest.approx(4.0, abs=1e-6)
    elapsed = time.perf_counter() - start
    assert elapsed <= 10.0
    print(
        f"AC5 PASS: helicoid hodge residual {residuals['helicoid']:.3e} <= 1e-3, "
        f"bowl residual {checks['hodge_residual']:.12f} = 4 +- 1e-6, "
        f"{elapsed:.2f}s <= 10s"
    )


def test_ac6_geometry_fidelity():
    start = time.perf_counter()
    circles = corpus_by_name()["concentric_circles"]
    errors = {}
    for grid in (128, 256):
        leaf = extract_level_set(circles, 1.0, grid)
        errors[grid] = abs(polyline_length(leaf) - 2 * math.pi) / (2 * math.pi)
    assert errors[256] <= 0.005
    assert errors[256] <= 0.5 * errors[128]

    sphere = make_map(
        "sphere", 3, 1, ["x1^2 + x2^2 + x3^2 - 1"], [-2, -2, -2], [2, 2, 2]
    )
    mesh = extract_level_set(sphere, 0.0, 64)
    sphere_err = abs(mesh_area(mesh) - 4 * math.pi) / (4 * math.pi)
    assert sphere_err <= 0.02
    elapsed = time.perf_counter() - start
    assert elapsed <= 20.0
    print(
        f"AC6 PASS: circle err {errors[256]:.3e} <= 0.5% at 256^2, "
        f"refinement ratio {errors[128] / errors[256]:.1f}x >= 2x, "
        f"sphere err {sphere_err:.3e} <= 2% at 64^3, {elapsed:.2f}s <= 20s"
    )


def psi_line_integral(polyline, field):
    w = field.weights(polyline.vertices)
    seg = polyline.segments
    ends = polyline.vertices[seg[:, 1]] - polyline.vertices[seg[:, 0]]
    lengths = np.linalg.norm(ends, axis=1)
    return float(np.sum(0.5 * (w[seg[:, 0]] + w[seg[:, 1]]) * lengths))


def psi_area_integral(mesh, field):
    w = field.weights(mesh.vertices)
    tri = mesh.triangles
    a = mesh.vertices[tri[:, 0]]
    b = mesh.vertices[tri[:, 1]]
    c = mesh.vertices[tri[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    return float(np.sum(areas * w[tri].mean(axis=1)))


def test_ac7_variational_calibration():
    start = time.perf_counter()
    plane = extract_level_set(corpus_by_name()["hyperplanes"], 0.0, 33)
    area = mesh_area(plane)
    field = VariationField(center=[0.0, 0.0, 0.0], radius=0.9, amplitude=1.0)
    plane_fv = first_variation(plane, field).first_variation
    assert abs(plane_fv) <= 1e-8 * area

    circle = extract_level_set(corpus_by_name()["concentric_circles"], 1.0, 256)
    bump = VariationField(center=[1.0, 0.0], radius=0.9, amplitude=-1.0)
    circle_fv = first_variation(circle, bump).first_variation
    circle_oracle = -psi_line_integral(circle, bump)
    assert circle_fv == pytest.approx(circle_oracle, rel=0.05)

    sphere = make_map(
        "sphere", 3, 1, ["x1^2 + x2^2 + x3^2 - 1"], [-2, -2, -2], [2, 2, 2]
    )
    mesh = extract_level_set(sphere, 0.0, 64)
    bump3 = VariationField(center=[1.0, 0.0, 0.0], radius=0.9, amplitude=-1.0)
    sphere_fv = first_variation(mesh, bump3).first_variation
    sphere_oracle = -2.0 * psi_area_integral(mesh, bump3)
    assert sphere_fv == pytest.approx(sphere_oracle, rel=0.05)
    elapsed = time.perf_counter() - start
    assert elapsed <= 60.0
    print(
        f"AC7 PASS: plane fv {plane_fv:.3e} <= {1e-8 * area:.0e}, "
        f"circle fv {circle_fv:.6f} vs -loop(kappa psi) {circle_oracle:.6f}, "
        f"sphere fv {sphere_fv:.6f} vs -2*area(psi) {sphere_oracle:.6f}, "
        f"{elapsed:.2f}s <= 60s"
    )


def test_ac8_agreement_harness(tmp_path):
    start = time.perf_counter()
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert cli_main(["verify-lemma", "--out", str(out1)]) == 0
    assert cli_main(["verify-lemma", "--out", str(out2)]) == 0
    first = (out1 / "agreement.json").read_bytes()
    assert first == (out2 / "agreement.json").read_bytes()

    doc = json.loads(first)
    assert doc["passed"] is True
    entries = {e["map"]: e for e in doc["maps"]}

    hyper = entries["hyperplanes"]
    assert hyper["oracle"]["stationary"]
    assert all(r["verdict"] == "minimal" for r in hyper["readings"].values())

    assert not entries["concentric_circles"]["oracle"]["stationary"]

    zero = entries["helicoid"]["zero_level"]
    assert zero["stationary"]
    assert zero["max_mean_curvature"] <= 1e-8

    scherk = entries["scherk_translation"]
    assert scherk["oracle"]["stationary"]
    assert any(r["verdict"] == "not_minimal" for r in scherk["readings"].values())
    assert doc["confusion"]["FULL_TRACE"]["oracle_stationary_reading_not"] >= 1

    elapsed = time.perf_counter() - start
    assert elapsed <= 180.0
    print(
        f"AC8 PASS: verify-lemma exit 0, byte-identical reruns, hyperplanes "
        f"minimal, circles non-stationary, helicoid zero-level |H| "
        f"{zero['max_mean_curvature']:.2e} <= 1e-8, scherk disagreement "
        f"recorded, {elapsed:.1f}s <= 180s"
    )
