"""Configuration-driven experiment runner.

Every subcommand reads a JSON config document, writes deterministic
artifacts into --out, and finishes with a manifest.json echoing the
resolved inputs together with package versions, timings and the list
of files written. Failures print a machine-readable JSON object to
stderr and exit 2 (config error), 3 (domain violation) or 4
(numerical failure); CSV outputs are byte-identical across repeated
runs with the same config.

Conventions shared by all schemas: unknown keys are rejected; complex
numbers are [re, im] pairs; grids are {x_min, x_max, nx, y_min,
y_max, ny}; geometry is {center, delta_c, delta_d?, n_dev?, phase?,
n_int?}; sources are {location, amplitude?}. Complex fields are
written as x,y,re,im columns and time snapshots as x,y,value.

Subcommands and their config keys (all keys optional unless a
builder above calls them required):

* selftest {n_max, n_radial, n_angular, k1_radius, k2_inner,
  k2_outer, k2_sector}: special-function identity residuals, the
  remainder-bound verification and a kernel backend cross-check;
  writes selftest.json and fails with exit 4 when a check fails.
* graf-error {x, y, x_j, nu, families, n_samples, theta_min,
  theta_max, m_fit, m_min, m_max}: translation truncation errors and
  fitted bounds, one CSV per wavenumber family with columns
  M,actual_monopole,bound_monopole,actual_dipole,bound_dipole.
* cloak-field {geometry, source, k, m_max, grid, cutoff}: one CSV
  per field in {incident, interior_cloak, exterior_cloak}; the
  manifest carries the divergence-region radii.
* bounds {geometry, source, family | k_values, n_samples, theta_min,
  theta_max, m_fit, m_ref, m_eval, margin}: measured device-series
  truncation error at the extremal audit points with two fitted
  predictions per wavenumber in bounds.csv -- "predicted" refits the
  constant at that wavenumber alone (it tracks the error trend but
  does not certify domination), "bound" uses the one constant fitted
  across the whole wavenumber grid (it dominates everywhere the fit
  saw).
* scatter-field {obstacle, source, k, eta, grid, cutoff}:
  scattered.csv and total.csv; the manifest carries eta, the
  boundary residual norm and the condition estimate.
* heat-sim {geometry, medium, source, contour, grid, m_max,
  obstacle, cloak_active, subsample, cutoff, u_max_factor,
  write_times, long_csv, value_range}: one CSV per output time step
  per component plus contour parameters, u_max and safe radii in the
  manifest; optionally a single long-format CSV with a time column.
* sweep-circles {center, delta_c_values, sigma, rho_c, source,
  contour, grid, m_max, n_dev, phase, n_int, u_max_factor,
  subsample, cutoff}: safe standoff radii across cloak sizes in
  sweep.csv; grids whose nodes fall on a device center are widened
  by one column until clear, recorded per entry in the manifest.
"""

import argparse
import json
import math
import os
import platform
import sys
import time
import warnings

import jsonschema
import numpy as np

from . import __version__, cloak, graf, heat, kernels, scatter, specfun
from .errors import DomainError, NumericalError


class ConfigError(Exception):
    """Config file missing, unparseable, or off-schema."""


_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_INTEGER = {"type": "integer"}
_COMPLEX = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}
_POINT = _COMPLEX


def _object(properties, required=()):
    return {"type": "object", "properties": properties,
            "required": list(required), "additionalProperties": False}


_GRID_SCHEMA = _object(
    {"x_min": _NUMBER, "x_max": _NUMBER, "nx": {"type": "integer",
                                                "minimum": 2},
     "y_min": _NUMBER, "y_max": _NUMBER, "ny": {"type": "integer",
                                                "minimum": 2}},
    required=("x_min", "x_max", "nx", "y_min", "y_max", "ny"))

_GEOMETRY_SCHEMA = _object(
    {"center": _POINT, "delta_c": _POSITIVE, "delta_d": _POSITIVE,
     "n_dev": {"type": "integer", "minimum": 3}, "phase": _NUMBER,
     "n_int": {"type": "integer", "minimum": 3}},
    required=("center", "delta_c"))

_SOURCE_SCHEMA = _object({"location": _POINT, "amplitude": _COMPLEX},
                         required=("location",))

_OBSTACLE_SCHEMA = _object(
    {"center": _POINT, "scale": _POSITIVE,
     "n_nodes": {"type": "integer", "minimum": 16}},
    required=("center", "scale", "n_nodes"))

_CONTOUR_SCHEMA = _object(
    {"t_final": _POSITIVE, "n_steps": {"type": "integer", "minimum": 2},
     "alpha": {"type": "number", "minimum": 0}},
    required=("t_final", "n_steps"))

_FAMILY_NAME = {"type": "string", "enum": sorted(graf.WAVENUMBER_FAMILIES)}

_SCHEMAS = {
    "selftest": _object(
        {"n_max": {"type": "integer", "minimum": 2},
         "n_radial": {"type": "integer", "minimum": 2},
         "n_angular": {"type": "integer", "minimum": 2},
         "k1_radius": _POSITIVE, "k2_inner": _POSITIVE,
         "k2_outer": _POSITIVE,
         "k2_sector": {"type": "number", "exclusiveMinimum": 0,
                       "exclusiveMaximum": math.pi}}),
    "graf-error": _object(
        {"x": _POINT, "y": _POINT, "x_j": _POINT, "nu": _POINT,
         "families": {"type": "array", "items": _FAMILY_NAME,
                      "minItems": 1},
         "n_samples": {"type": "integer", "minimum": 1},
         "theta_min": _POSITIVE, "theta_max": _POSITIVE,
         "m_fit": {"type": "integer", "minimum": 0},
         "m_min": {"type": "integer", "minimum": 0},
         "m_max": {"type": "integer", "minimum": 0}}),
    "cloak-field": _object(
        {"geometry": _GEOMETRY_SCHEMA, "source": _SOURCE_SCHEMA,
         "k": _COMPLEX, "m_max": {"type": "integer", "minimum": 0},
         "grid": _GRID_SCHEMA, "cutoff": _POSITIVE},
        required=("geometry", "source", "k", "m_max", "grid")),
    "bounds": _object(
        {"geometry": _GEOMETRY_SCHEMA, "source": _SOURCE_SCHEMA,
         "family": _FAMILY_NAME,
         "k_values": {"type": "array", "items": _COMPLEX, "minItems": 1},
         "n_samples": {"type": "integer", "minimum": 1},
         "theta_min": _POSITIVE, "theta_max": _POSITIVE,
         "m_fit": {"type": "integer", "minimum": 0},
         "m_ref": {"type": "integer", "minimum": 1},
         "m_eval": {"type": "integer", "minimum": 0},
         "margin": _POSITIVE},
        required=("geometry", "source")),
    "scatter-field": _object(
        {"obstacle": _OBSTACLE_SCHEMA, "source": _SOURCE_SCHEMA,
         "k": _COMPLEX, "eta": _NUMBER, "grid": _GRID_SCHEMA,
         "cutoff": _POSITIVE},
        required=("obstacle", "source", "k", "grid")),
    "heat-sim": _object(
        {"geometry": _GEOMETRY_SCHEMA, "medium": _object(
            {"sigma": _POSITIVE, "rho_c": _POSITIVE},
            required=("sigma",)),
         "source": _SOURCE_SCHEMA, "contour": _CONTOUR_SCHEMA,
         "grid": _GRID_SCHEMA, "m_max": {"type": "integer", "minimum": 0},
         "obstacle": _OBSTACLE_SCHEMA,
         "cloak_active": {"type": "boolean"},
         "subsample": {"type": "integer", "minimum": 2},
         "cutoff": _POSITIVE, "u_max_factor": _POSITIVE,
         "write_times": {"type": "array",
                         "items": {"type": "integer", "minimum": 0}},
         "long_csv": {"type": "boolean"}, "value_range": _COMPLEX},
        required=("geometry", "medium", "source", "contour", "grid")),
    "sweep-circles": _object(
        {"center": _POINT,
         "delta_c_values": {"type": "array", "items": _POSITIVE,
                            "minItems": 1},
         "sigma": _POSITIVE, "rho_c": _POSITIVE,
         "source": _SOURCE_SCHEMA, "contour": _CONTOUR_SCHEMA,
         "grid": _GRID_SCHEMA, "m_max": {"type": "integer", "minimum": 0},
         "n_dev": {"type": "integer", "minimum": 3}, "phase": _NUMBER,
         "n_int": {"type": "integer", "minimum": 3},
         "u_max_factor": _POSITIVE,
         "subsample": {"type": "integer", "minimum": 2},
         "cutoff": _POSITIVE},
        required=("center", "delta_c_values", "sigma", "source",
                  "contour", "grid")),
}


def _load_config(path, schema):
    if path is None:
        cfg = {}
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config {path} is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "top level"
        raise ConfigError(f"config {where}: {exc.message}") from None
    return cfg


def _complex(pair):
    return complex(pair[0], pair[1])


def _jsonable(obj):
    """Manifest-safe copy: numpy scalars/arrays to plain Python,
    complex numbers to [re, im] pairs."""
    if isinstance(obj, dict):
        return {key: _jsonable(obj[key]) for key in obj}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [obj.real, obj.imag]
    return obj


def _format(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, rows):
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format(v) for v in row) + "\n")


def _write_field_csv(path, points, values):
    _write_csv(path, ("x", "y", "re", "im"),
               zip(points[:, 0], points[:, 1], values.real, values.imag))


def _write_time_csv(path, points, values):
    _write_csv(path, ("x", "y", "value"),
               zip(points[:, 0], points[:, 1], values))


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(_jsonable(obj), indent=2, sort_keys=True))
        fh.write("\n")


def _build_geometry(cfg):
    return cloak.build_geometry(
        tuple(cfg["center"]), cfg["delta_c"], cfg.get("delta_d"),
        n_dev=cfg.get("n_dev", 4), phase=cfg.get("phase", math.pi / 4),
        n_int=cfg.get("n_int", 128))


def _build_source(cfg):
    amplitude = cfg.get("amplitude")
    return cloak.PointSource(
        tuple(cfg["location"]),
        _complex(amplitude) if amplitude is not None else 1.0)


def _build_grid(cfg):
    return heat.GridSpec(cfg["x_min"], cfg["x_max"], cfg["nx"],
                         cfg["y_min"], cfg["y_max"], cfg["ny"])


def _geometry_meta(geom):
    return {"center": list(geom.center), "delta_c": geom.delta_c,
            "delta_d": geom.delta_d, "n_dev": geom.n_dev,
            "phase": geom.phase, "n_int": geom.n_int,
            "device_centers": geom.device_centers}


def _grid_meta(gs):
    return {"x_min": gs.x_min, "x_max": gs.x_max, "nx": gs.nx,
            "y_min": gs.y_min, "y_max": gs.y_max, "ny": gs.ny}


def _divergence_meta(region):
    return {"centers": region.centers, "radii": region.radii,
            "r_ci": region.r_ci, "r_co": region.r_co}


def _check_grid_clear(points, spots):
    """Reject grids with a node exactly on a field singularity."""
    for label, p in spots:
        hit = (points[:, 0] == p[0]) & (points[:, 1] == p[1])
        if hit.any():
            raise DomainError(
                f"grid node coincides with {label} at "
                f"({p[0]!r}, {p[1]!r}); perturb the grid extents or "
                f"point counts")


def _grid_columns(points):
    return points[:, 0].copy(), points[:, 1].copy()


def _run_selftest(config, args, out_dir):
    n_max = config.get("n_max", 12)
    n_radial = config.get("n_radial", 16)
    n_angular = config.get("n_angular", 24)
    k1 = specfun.disk(config.get("k1_radius", 5.0))
    k2 = specfun.Annulus(config.get("k2_inner", 0.5),
                         config.get("k2_outer", 10.0),
                         math.pi - config.get("k2_sector", math.pi / 8))
    z = k2.grid(n_radial, n_angular)
    jt = specfun.bessel_j_table(n_max + 1, z)
    ht = specfun.hankel1_table(n_max + 1, z)
    yt = (ht - jt) / 1j

    target = 2.0 / (math.pi * z)
    lhs = jt[:, 1] * yt[:, 0] - jt[:, 0] * yt[:, 1]
    scale = np.maximum(np.abs(target),
                       np.maximum(np.abs(jt[:, 1] * yt[:, 0]),
                                  np.abs(jt[:, 0] * yt[:, 1])))
    wronskian = float(np.max(np.abs(lhs - target) / scale))

    recurrence = 0.0
    for table in (jt, ht):
        for n in range(1, n_max + 1):
            a, b = table[:, n - 1], table[:, n + 1]
            c = table[:, n] * (2.0 * n / z)
            scale = np.maximum(np.abs(c),
                               np.maximum(np.abs(a), np.abs(b)))
            recurrence = max(recurrence,
                             float(np.max(np.abs(a + b - c) / scale)))

    lemma = specfun.verify_lemma_bounds(n_max, k1, k2, n_radial, n_angular)

    sample = z[:: max(1, z.size // 64)]
    h0k, h1k = kernels.hankel01(sample)
    backend = 0.0
    for i, w in enumerate(sample):
        h0s, h1s = specfun.hankel01(complex(w))
        backend = max(backend, abs(h0k[i] - h0s) / abs(h0s),
                      abs(h1k[i] - h1s) / abs(h1s))

    checks = [
        {"name": "wronskian", "worst": wronskian, "tolerance": 1e-10},
        {"name": "recurrence", "worst": recurrence, "tolerance": 1e-10},
        {"name": "lemma_bounds", "worst": lemma.worst_ratio,
         "tolerance": 1.0},
        {"name": "kernel_backend", "worst": backend, "tolerance": 1e-11},
    ]
    for check in checks:
        check["passed"] = check["worst"] <= check["tolerance"]
    passed = all(c["passed"] for c in checks) and lemma.passed
    report = {"passed": passed, "checks": checks,
              "constants": {
                  "c_k1": lemma.constants.c_k1,
                  "c_k1_tilde": lemma.constants.c_k1_tilde,
                  "c_k2_tilde": lemma.constants.c_k2_tilde,
                  "b_k1": lemma.constants.b_k1,
                  "b_k1_tilde": lemma.constants.b_k1_tilde,
                  "b_k2_tilde": lemma.constants.b_k2_tilde}}
    _write_json(os.path.join(out_dir, "selftest.json"), report)
    if not passed:
        failed = ", ".join(c["name"] for c in checks if not c["passed"])
        raise NumericalError(f"selftest checks failed: {failed}")
    resolved = {"n_max": n_max, "n_radial": n_radial,
                "n_angular": n_angular, "k1_radius": k1.r_max,
                "k2_inner": k2.r_min, "k2_outer": k2.r_max,
                "k2_sector": math.pi - k2.arg_max}
    return resolved, {"report": report}, ["selftest.json"]


_GRAF_HEADER = ("M", "actual_monopole", "bound_monopole",
                "actual_dipole", "bound_dipole")


def _run_graf_error(config, args, out_dir):
    x = tuple(config.get("x", (0.0, 0.43)))
    y = tuple(config.get("y", (0.0, 0.0)))
    x_j = tuple(config.get("x_j", (0.0, 0.2)))
    nu = tuple(config.get("nu", (0.0, 1.0)))
    families = config.get("families", sorted(graf.WAVENUMBER_FAMILIES))
    n_samples = config.get("n_samples", 8)
    theta_min = config.get("theta_min", 0.5)
    theta_max = config.get("theta_max", 20.0)
    m_fit = config.get("m_fit", 4)
    m_min = config.get("m_min", 5)
    m_max = config.get("m_max", 20)
    if theta_min > theta_max:
        raise ConfigError("theta_min must not exceed theta_max")
    if m_min > m_max:
        raise ConfigError("m_min must not exceed m_max")
    st = graf.SourceTranslation(y, x_j, nu)
    thetas = np.linspace(theta_min, theta_max, n_samples)
    outputs = []
    models = {}
    for name in families:
        ks = graf.wavenumber_family(name, thetas)
        model = graf.fit_bound_constant([x], ks, st, m_fit)
        rows = []
        for m in range(m_min, m_max + 1):
            errors = [graf.truncation_errors(x, st, complex(k), m)
                      for k in ks]
            bound_mono, bound_di = graf.theoretical_bounds(model, m)
            rows.append((m, max(e[0] for e in errors), bound_mono,
                         max(e[1] for e in errors), bound_di))
        filename = f"graf_error_{name}.csv"
        _write_csv(os.path.join(out_dir, filename), _GRAF_HEADER, rows)
        outputs.append(filename)
        models[name] = {"direction": graf.WAVENUMBER_FAMILIES[name],
                        "a": model.a, "c1": model.c1, "c2": model.c2}
    resolved = {"x": list(x), "y": list(y), "x_j": list(x_j),
                "nu": list(nu), "families": list(families),
                "n_samples": n_samples, "theta_min": theta_min,
                "theta_max": theta_max, "m_fit": m_fit, "m_min": m_min,
                "m_max": m_max}
    extra = {"thetas": thetas, "models": models}
    return resolved, extra, outputs


def _run_cloak_field(config, args, out_dir):
    geom, quad = _build_geometry(config["geometry"])
    source = _build_source(config["source"])
    k = _complex(config["k"])
    m_max = config["m_max"]
    gs = _build_grid(config["grid"])
    cutoff = config.get("cutoff", math.inf)
    points = gs.points()
    spots = [("the source", source.location)]
    spots += [(f"device center {j}", c)
              for j, c in enumerate(geom.device_centers)]
    _check_grid_clear(points, spots)
    px, py = _grid_columns(points)
    incident = source.values(px, py, k, cutoff)
    interior = cloak.interior_cloak_field(points, geom, quad, source, k,
                                          cutoff)
    coeffs = cloak.multipole_coefficients(geom, quad, source, k, m_max)
    exterior = cloak.exterior_cloak_field(points, coeffs, geom, cutoff)
    region = cloak.divergence_region(geom, quad)
    outputs = []
    for filename, values in (("incident.csv", incident),
                             ("interior_cloak.csv", interior),
                             ("exterior_cloak.csv", exterior)):
        _write_field_csv(os.path.join(out_dir, filename), points, values)
        outputs.append(filename)
    resolved = {"geometry": _geometry_meta(geom),
                "source": {"location": list(source.location),
                           "amplitude": complex(source.amplitude)},
                "k": k, "m_max": m_max, "grid": _grid_meta(gs),
                "cutoff": cutoff}
    extra = {"divergence": _divergence_meta(region)}
    return resolved, extra, outputs


def _run_bounds(config, args, out_dir):
    geom, quad = _build_geometry(config["geometry"])
    source = _build_source(config["source"])
    m_fit = config.get("m_fit", 3)
    m_ref = config.get("m_ref", 60)
    m_eval = config.get("m_eval", 22)
    margin = config.get("margin", 0.1)
    if not m_fit < m_eval <= m_ref:
        raise ConfigError("need m_fit < m_eval <= m_ref")
    if "k_values" in config:
        ks = [_complex(v) for v in config["k_values"]]
        thetas = [abs(k) for k in ks]
        family = None
    else:
        family = config.get("family", "dissipative")
        n_samples = config.get("n_samples", 8)
        theta_min = config.get("theta_min", 0.5)
        theta_max = config.get("theta_max", 20.0)
        if theta_min > theta_max:
            raise ConfigError("theta_min must not exceed theta_max")
        thetas = np.linspace(theta_min, theta_max, n_samples)
        ks = graf.wavenumber_family(family, thetas)
    audit = cloak.audit_points(geom, quad, margin)
    joint = cloak.cloak_error_bound(geom, quad, source,
                                    [complex(k) for k in ks], m_fit,
                                    m_ref, x_eval=audit)
    rows = []
    for theta, k in zip(thetas, ks):
        k = complex(k)
        local = cloak.cloak_error_bound(geom, quad, source, [k], m_fit,
                                        m_ref, x_eval=audit)
        coeffs = cloak.multipole_coefficients(geom, quad, source, k, m_ref)
        measured = cloak.measured_truncation_error(audit, coeffs, geom,
                                                   m_eval)
        rows.append((float(theta), k.real, k.imag, measured,
                     local.predict(m_eval), joint.predict(m_eval)))
    _write_csv(os.path.join(out_dir, "bounds.csv"),
               ("theta", "re_k", "im_k", "measured", "predicted",
                "bound"), rows)
    resolved = {"geometry": _geometry_meta(geom),
                "source": {"location": list(source.location),
                           "amplitude": complex(source.amplitude)},
                "family": family,
                "k_values": [complex(k) for k in ks],
                "m_fit": m_fit, "m_ref": m_ref, "m_eval": m_eval,
                "margin": margin}
    extra = {"audit_points": audit, "ratio_a": joint.a,
             "joint_constant": joint.c,
             "divergence": _divergence_meta(
                 cloak.divergence_region(geom, quad))}
    return resolved, extra, ["bounds.csv"]


def _run_scatter_field(config, args, out_dir):
    oc = config["obstacle"]
    obst = scatter.kite_obstacle(tuple(oc["center"]), oc["scale"],
                                 oc["n_nodes"])
    source = _build_source(config["source"])
    k = _complex(config["k"])
    gs = _build_grid(config["grid"])
    cutoff = config.get("cutoff", math.inf)
    points = gs.points()
    spots = [("the source", source.location)]
    spots += [(f"obstacle node {i}", q) for i, q in enumerate(obst.q)]
    _check_grid_clear(points, spots)
    trace = source.values(obst.q[:, 0].copy(), obst.q[:, 1].copy(), k)
    solution = scatter.solve_density(obst, trace, k,
                                     eta=config.get("eta"),
                                     estimate_condition=True)
    residual = scatter.boundary_residual(obst, solution, source)
    px, py = _grid_columns(points)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        scattered = scatter.scattered_field(points, obst, solution, cutoff)
    total = source.values(px, py, k, cutoff) + scattered
    _write_field_csv(os.path.join(out_dir, "scattered.csv"), points,
                     scattered)
    _write_field_csv(os.path.join(out_dir, "total.csv"), points, total)
    resolved = {"obstacle": {"center": list(oc["center"]),
                             "scale": oc["scale"],
                             "n_nodes": oc["n_nodes"]},
                "source": {"location": list(source.location),
                           "amplitude": complex(source.amplitude)},
                "k": k, "eta": solution.eta, "grid": _grid_meta(gs),
                "cutoff": cutoff}
    extra = {"residual_norm": float(np.max(np.abs(residual))),
             "solve_residual": solution.solve_residual,
             "condition_estimate": solution.condition_estimate,
             "interior_grid_points": int(np.sum(obst.contains(points)))}
    return resolved, extra, ["scattered.csv", "total.csv"]


def _heat_scenario(config, geom, quad):
    medium = heat.HeatMedium(config["medium"]["sigma"],
                             config["medium"].get("rho_c", 1.0))
    source = _build_source(config["source"])
    cc = config["contour"]
    contour = heat.build_contour(cc["t_final"], cc["n_steps"],
                                 cc.get("alpha", 0.0))
    obstacle = None
    if "obstacle" in config:
        oc = config["obstacle"]
        obstacle = scatter.kite_obstacle(tuple(oc["center"]), oc["scale"],
                                         oc["n_nodes"])
    return heat.HeatScenario(
        geometry=geom, quadrature=quad, medium=medium, source=source,
        contour=contour, grid=_build_grid(config["grid"]),
        m_max=config.get("m_max", 22), obstacle=obstacle,
        cloak_active=config.get("cloak_active", True),
        subsample=config.get("subsample"),
        cutoff=config.get("cutoff", 40.0))


def _contour_meta(contour, alpha):
    return {"t_final": contour.t_final, "n_steps": contour.n_steps,
            "n_samples": contour.n_samples, "dt": contour.dt,
            "big_t": contour.big_t, "dw": contour.dw,
            "shift": contour.shift, "alpha": alpha}


def _heat_resolved(scenario, alpha, factor):
    src = scenario.source
    return {"geometry": _geometry_meta(scenario.geometry),
            "medium": {"sigma": scenario.medium.sigma,
                       "rho_c": scenario.medium.rho_c},
            "source": {"location": list(src.location),
                       "amplitude": complex(src.amplitude)},
            "contour": _contour_meta(scenario.contour, alpha),
            "grid": _grid_meta(scenario.grid), "m_max": scenario.m_max,
            "cloak_active": scenario.cloak_active,
            "subsample": scenario.subsample, "cutoff": scenario.cutoff,
            "u_max_factor": factor}


def _run_heat_sim(config, args, out_dir):
    geom, quad = _build_geometry(config["geometry"])
    scenario = _heat_scenario(config, geom, quad)
    contour = scenario.contour
    factor = config.get("u_max_factor", 100.0)
    write_times = config.get("write_times",
                             list(range(contour.n_steps + 1)))
    if any(idx > contour.n_steps for idx in write_times):
        raise ConfigError(
            f"write_times indices must lie in 0..{contour.n_steps}")
    fields = heat.simulate_scenario(scenario, workers=args.workers)
    points = scenario.grid.points()
    width = len(str(contour.n_steps))
    outputs = []
    for name in sorted(fields):
        values = fields[name].values
        for idx in write_times:
            filename = f"heat_{name}_t{idx:0{width}d}.csv"
            _write_time_csv(os.path.join(out_dir, filename), points,
                            values[:, idx])
            outputs.append(filename)
    if config.get("long_csv", False):
        rows = []
        times = contour.times
        for name in sorted(fields):
            values = fields[name].values
            for idx in write_times:
                t = times[idx]
                for p, v in zip(points, values[:, idx]):
                    rows.append((name, t, p[0], p[1], v))
        header = ("component", "t", "x", "y", "value")
        with open(os.path.join(out_dir, "heat_long.csv"), "w",
                  encoding="ascii", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(row[0] + "," +
                         ",".join(_format(v) for v in row[1:]) + "\n")
        outputs.append("heat_long.csv")
    u_max = None
    radii = None
    if scenario.cloak_active:
        u_max = heat.temperature_cap(fields["incident"], geom, factor)
        safe = heat.safe_radius(fields["cloak"], geom, u_max)
        radii = {"radii": safe.radii, "saturated": safe.saturated,
                 "u_max": safe.u_max}
    resolved = _heat_resolved(scenario, config["contour"].get("alpha", 0.0),
                              factor)
    if "obstacle" in config:
        resolved["obstacle"] = dict(config["obstacle"])
    extra = {"sigma": scenario.medium.sigma, "u_max": u_max,
             "safe_radii": radii, "times": contour.times,
             "write_times": list(write_times),
             "value_range": config.get("value_range"),
             "divergence": _divergence_meta(
                 cloak.divergence_region(geom, quad))}
    return resolved, extra, outputs


def _clear_grid_spec(cfg, geom):
    """Widen nx until no node sits on a device center, where the
    series for the device field has a genuine singularity."""
    gs = _build_grid(cfg)
    centers = geom.device_centers
    perturbed = 0
    while True:
        points = gs.points()
        dist = np.hypot(points[:, 0, None] - centers[None, :, 0],
                        points[:, 1, None] - centers[None, :, 1])
        if float(dist.min()) > 1e-9 * max(1.0, geom.delta_d):
            return gs, perturbed
        perturbed += 1
        gs = heat.GridSpec(gs.x_min, gs.x_max, gs.nx + 1,
                           gs.y_min, gs.y_max, gs.ny)


def _run_sweep_circles(config, args, out_dir):
    center = tuple(config["center"])
    source_cfg = config["source"]
    cc = config["contour"]
    factor = config.get("u_max_factor", 100.0)
    rows = []
    entries = []
    source = _build_source(source_cfg)
    for delta_c in config["delta_c_values"]:
        geom, quad = cloak.build_geometry(
            center, delta_c, n_dev=config.get("n_dev", 4),
            phase=config.get("phase", math.pi / 4),
            n_int=config.get("n_int", 128))
        gs, perturbed = _clear_grid_spec(config["grid"], geom)
        scenario = heat.HeatScenario(
            geometry=geom, quadrature=quad,
            medium=heat.HeatMedium(config["sigma"],
                                   config.get("rho_c", 1.0)),
            source=source,
            contour=heat.build_contour(cc["t_final"], cc["n_steps"],
                                       cc.get("alpha", 0.0)),
            grid=gs, m_max=config.get("m_max", 22),
            subsample=config.get("subsample"),
            cutoff=config.get("cutoff", 40.0))
        fields = heat.simulate_scenario(scenario, workers=args.workers)
        u_max = heat.temperature_cap(fields["incident"], geom, factor)
        safe = heat.safe_radius(fields["cloak"], geom, u_max)
        region = cloak.divergence_region(geom, quad)
        for j in range(geom.n_dev):
            rows.append((delta_c, j, safe.radii[j], region.radii[j],
                         u_max, bool(safe.saturated[j])))
        entries.append({
            "delta_c": delta_c, "nx": gs.nx, "grid_perturbed": perturbed,
            "touch_limit": geom.delta_d / math.sqrt(2.0),
            "u_max": u_max, "radii": safe.radii,
            "saturated": safe.saturated,
            "divergence_radii": region.radii,
            "source_in_divergence_region": region.contains(
                source.location)})
    _write_csv(os.path.join(out_dir, "sweep.csv"),
               ("delta_c", "device", "rho", "r_divergence", "u_max",
                "saturated"), rows)
    resolved = {"center": list(center),
                "delta_c_values": list(config["delta_c_values"]),
                "sigma": config["sigma"],
                "rho_c": config.get("rho_c", 1.0),
                "source": {"location": list(source.location),
                           "amplitude": complex(source.amplitude)},
                "contour": {"t_final": cc["t_final"],
                            "n_steps": cc["n_steps"],
                            "alpha": cc.get("alpha", 0.0)},
                "grid": dict(config["grid"]),
                "m_max": config.get("m_max", 22),
                "n_dev": config.get("n_dev", 4),
                "phase": config.get("phase", math.pi / 4),
                "n_int": config.get("n_int", 128),
                "u_max_factor": factor,
                "subsample": config.get("subsample"),
                "cutoff": config.get("cutoff", 40.0)}
    extra = {"entries": entries}
    return resolved, extra, ["sweep.csv"]


_COMMANDS = {
    "selftest": (_run_selftest, False,
                 "run special-function and bound self-checks"),
    "graf-error": (_run_graf_error, True,
                   "translation truncation errors and fitted bounds"),
    "cloak-field": (_run_cloak_field, True,
                    "incident, interior and exterior cloak fields"),
    "bounds": (_run_bounds, True,
               "device-series truncation error audit"),
    "scatter-field": (_run_scatter_field, True,
                      "sound-soft scattered and total fields"),
    "heat-sim": (_run_heat_sim, True,
                 "transient thermal cloaking simulation"),
    "sweep-circles": (_run_sweep_circles, True,
                      "safe standoff radii across cloak sizes"),
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="extcloak",
        description="active exterior cloaking experiment runner")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")
    for name, (_, config_required, description) in _COMMANDS.items():
        p = sub.add_parser(name, help=description, description=description)
        p.add_argument("--config", required=config_required,
                       help="JSON config document")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--workers", type=int,
                       default=os.cpu_count() or 1,
                       help="parallel worker cap (default: CPU count)")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; echoed in the manifest")
    return parser


def _fail(code, kind, exc):
    payload = {"error": {"type": kind, "exit_code": code,
                         "message": str(exc)}}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    handler, _, _ = _COMMANDS[args.command]
    started = time.perf_counter()
    try:
        if args.workers < 1:
            raise ConfigError("workers must be >= 1")
        config = _load_config(args.config, _SCHEMAS[args.command])
        os.makedirs(args.out, exist_ok=True)
        resolved, extra, outputs = handler(config, args, args.out)
        manifest = {"command": args.command, "config": resolved,
                    "workers": args.workers, "seed": args.seed,
                    "versions": {"extcloak": __version__,
                                 "python": platform.python_version(),
                                 "numpy": np.__version__},
                    "backend": kernels.BACKEND,
                    "timings": {"total_seconds":
                                time.perf_counter() - started},
                    "outputs": outputs}
        manifest.update(extra)
        _write_json(os.path.join(args.out, "manifest.json"), manifest)
    except ConfigError as exc:
        return _fail(2, "config", exc)
    except DomainError as exc:
        return _fail(3, "domain", exc)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        return _fail(4, "numerical", exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
