"""Command-line front end: ``surfpoisson <command> --config run.json``.

Exit codes: 0 success, 1 configuration error, 2 geometry error,
3 incompatible load (strict mode), 4 solver non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, assembly, divfield, verify
from .errors import ConfigError, GeometryError, IncompatibleLoad, MeshFailure, SolverError
from .functions import manufactured_cos_r2, scalar_from_spec, vector_from_spec, zero_manufactured
from .geometry import DomainSpec, make_chart, validate_chart
from .mesh import export_csv, generate_mesh, quadrature, refinement_sequence
from .solver import solve_conormal_problem

log = logging.getLogger("surfpoisson")

EXIT_OK, EXIT_CONFIG, EXIT_GEOMETRY, EXIT_COMPAT, EXIT_SOLVER = 0, 1, 2, 3, 4

DEFAULT_IDENTITIES = [
    {"type": "divergence", "f": {"id": "position_xy"}},
    {"type": "divergence", "f": {"id": "rotation"}},
    {"type": "divergence", "f": {"id": "constant", "params": {"value": [0.0, 0.0, 1.0]}}},
    {"type": "integration_by_parts", "f": {"id": "exp_sin"}, "psi": {"id": "x1"}, "j": 1},
    {"type": "integration_by_parts", "f": {"id": "exp_sin"}, "psi": {"id": "x1"}, "j": 2},
    {"type": "integration_by_parts", "f": {"id": "exp_sin"}, "psi": {"id": "x2"}, "j": 3},
]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def load_schema():
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


def load_config(path):
    """Parse and validate a run configuration; raises ConfigError."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message} at {list(exc.absolute_path)}") from exc
    return cfg


class Run:
    """Objects derived from a validated config."""

    def __init__(self, cfg, seed=None, out=None):
        self.cfg = cfg
        self.seed = cfg.get("seed", 0) if seed is None else seed
        self.out = Path(out or cfg.get("output", {}).get("directory", "out"))
        d = cfg["domain"]
        center = tuple(d.get("center", (0.0, 0.0)))
        if d["kind"] == "disk":
            self.domain = DomainSpec.disk(d.get("radius", 1.0), center)
        else:
            if "a" not in d or "b" not in d:
                raise ConfigError("ellipse domain needs semi-axes a and b")
            self.domain = DomainSpec.ellipse(d["a"], d["b"], center)
        c = cfg["chart"]
        params = dict(c.get("params", {}))
        if c["kind"] == "hemisphere" and self.domain.kind != "disk":
            raise ConfigError("the hemisphere chart is defined over a disk")
        self.chart = make_chart(c["kind"], params, self.domain)
        self.h = cfg["mesh"]["h"]
        self.levels = cfg["mesh"].get("levels", 4)
        try:
            self.quad = quadrature(cfg.get("quadrature", {}).get("order", 4))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        s = cfg.get("solver", {})
        self.tol = s.get("tol", 1e-10)
        self.max_iter = s.get("max_iter")
        self.strict = s.get("strict_compatibility", False)
        self.threshold = s.get("compatibility_threshold", 1e-8)
        self.problem = cfg.get("problem", {})

    @property
    def digest(self):
        blob = json.dumps({"config": self.cfg, "seed": self.seed}, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def header(self):
        return f"surfpoisson {__version__} config-sha256 {self.digest} seed {self.seed}"

    def mesh(self):
        return generate_mesh(self.domain, self.h)

    def scalar(self, key):
        spec = self.problem.get(key)
        return None if spec is None else _catalog(scalar_from_spec, spec, self.domain)

    def manufactured(self):
        name = self.problem.get("manufactured", "cos_r2")
        if name == "zero":
            return zero_manufactured()
        if self.domain.kind != "disk":
            raise ConfigError("the cos_r2 manufactured solution needs a disk domain")
        return manufactured_cos_r2(self.domain.radius, self.domain.center)

    def forcing(self):
        F = self.scalar("F")
        return F if F is not None else self.manufactured().forcing(self.chart)

    # -- artifacts ---------------------------------------------------------
    def path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def write_json(self, name, payload):
        doc = {"comment": self.header}
        doc.update(payload)
        with open(self.path(name), "w") as fh:
            json.dump(_plain(doc), fh, indent=2, allow_nan=True)
            fh.write("\n")


def _catalog(builder, spec, domain):
    try:
        return builder(spec, domain)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad field spec {spec}: {exc}") from exc


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _write_nodal_csv(path, header, mesh, values):
    """Rows (vertex_id, X1, X2, value)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header}\n")
        w = csv.writer(fh)
        w.writerow(["vertex_id", "X1", "X2", "value"])
        for i, (X, v) in enumerate(zip(mesh.vertices, values)):
            w.writerow([i, repr(float(X[0])), repr(float(X[1])), repr(float(v))])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(run):
    report = validate_chart(run.chart)
    run.write_json("validation.json", {"chart": run.cfg["chart"], "domain": run.domain.to_dict(),
                                       **report.to_dict()})
    run.summary = (f"lambda_min={report.lambda_min_est:.6g} lambda_max={report.lambda_max_est:.6g} "
                   f"passed={report.passed}")
    return EXIT_OK if report.passed else EXIT_GEOMETRY


def cmd_solve(run):
    mesh = run.mesh()
    F = run.forcing()
    rep = solve_conormal_problem(run.chart, mesh, F, run.quad, run.tol, run.max_iter,
                                 strict=run.strict, compatibility_threshold=run.threshold)
    _write_nodal_csv(run.path("solution.csv"), run.header, mesh, rep.solution)
    export_csv(mesh, run.out / "mesh", run.header)
    run.write_json("report.json", {"n_vertices": mesh.n_vertices, "mesh_h": mesh.h, **rep.to_dict()})
    run.summary = (f"iterations={rep.iterations} residual={rep.algebraic_residual:.3g} "
                   f"flux_residual={rep.flux_residual:.3g} defect={rep.compatibility_defect:.3g}")
    return EXIT_OK if rep.converged else EXIT_SOLVER


def cmd_divfield(run):
    mesh = run.mesh()
    F = run.scalar("F")
    chi = run.scalar("chi")
    rep = divfield.solve_div_system(run.chart, mesh, run.quad, F, chi, run.tol, strict=run.strict,
                                    compatibility_threshold=run.threshold, max_iter=run.max_iter)
    divfield.export_vector_csv(rep.V, run.path("vector.csv"), run.header)
    run.write_json("divfield.json", {"n_vertices": mesh.n_vertices, "mesh_h": mesh.h, **rep.to_dict()})
    run.summary = (f"div_residual={rep.div_residual:.3g} normal_residual={rep.normal_residual:.3g} "
                   f"conormal_residual={rep.conormal_residual:.3g} "
                   f"defect={rep.compatibility_defect:.3g}")
    return EXIT_OK


def cmd_identities(run):
    mesh = run.mesh()
    reports = []
    for case in run.cfg.get("identities", DEFAULT_IDENTITIES):
        if case["type"] == "divergence":
            f = _catalog(vector_from_spec, case["f"], run.domain)
            r = verify.check_divergence_theorem(run.chart, mesh, run.quad, f)
            r.name = f"divergence:{f.name}"
        else:
            f = _catalog(scalar_from_spec, case["f"], run.domain)
            psi = _catalog(scalar_from_spec, case["psi"], run.domain)
            r = verify.check_integration_by_parts(run.chart, mesh, run.quad, f, psi, case["j"])
            r.name = f"integration_by_parts:{f.name}:{psi.name}:j{case['j']}"
        reports.append(r)
    verify.write_identity_csv(reports, run.path("identities.csv"), run.header)
    run.write_json("identities.json", {"reports": [r.to_dict() for r in reports]})
    run.summary = "max rel_defect=%.3g" % max(r.rel_defect for r in reports)
    return EXIT_OK


def cmd_convergence(run):
    meshes = refinement_sequence(run.domain, run.h, run.levels)
    table = verify.convergence_study(run.chart, run.domain, run.manufactured(), quad=run.quad,
                                     tol=run.tol, meshes=meshes)
    table.write_csv(run.path("convergence.csv"), run.header)
    run.write_json("convergence.json", {"rows": [vars(r) for r in table.rows],
                                        "l2_rate": table.l2_rate, "h1_rate": table.h1_rate})
    run.summary = f"levels={len(table.rows)} l2_rate={table.l2_rate:.3f} h1_rate={table.h1_rate:.3f}"
    return EXIT_OK


def cmd_eigen(run):
    mesh = run.mesh()
    A = assembly.stiffness(run.chart, mesh, run.quad)
    M = assembly.mass(run.chart, mesh, run.quad)
    e = run.cfg.get("eigen", {})
    est = verify.estimate_poincare_constant(A, M, tol=e.get("tol", 1e-8), seed=run.seed)
    samples = e.get("samples", 100)
    worst = verify.check_coercivity(A, M, est.C_star, samples, seed=run.seed) if samples else None
    run.write_json("eigen.json", {"n_vertices": mesh.n_vertices, "mesh_h": mesh.h,
                                  "lambda1": est.lambda1, "C_star": est.C_star,
                                  "iterations": est.iterations, "coercivity_samples": samples,
                                  "coercivity_worst_ratio": worst})
    run.summary = f"lambda1={est.lambda1:.6g} C_star={est.C_star:.6g}"
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "divfield": cmd_divfield,
    "identities": cmd_identities,
    "convergence": cmd_convergence,
    "eigen": cmd_eigen,
}


def build_parser():
    p = argparse.ArgumentParser(prog="surfpoisson", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        s = sub.add_parser(name, help=fn.__name__.replace("cmd_", ""))
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", help="output directory (overrides output.directory)")
        s.add_argument("--seed", type=int, help="random seed (overrides the config)")
        s.add_argument("--quiet", action="store_true", help="print nothing on success")
    return p


def _thread_cap():
    """Validate SURFPOISSON_THREADS and forward it to the BLAS/OpenMP variables."""
    value = os.environ.get("SURFPOISSON_THREADS")
    if value is None:
        return None
    try:
        n = int(value)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(f"SURFPOISSON_THREADS must be a positive integer, got {value!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    return n


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s")

    def fail(code, exc):
        print(f"error: {exc}", file=sys.stderr)
        return code

    try:
        _thread_cap()
        try:
            run = Run(load_config(args.config), args.seed, args.out)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        code = COMMANDS[args.command](run)
    except ConfigError as exc:
        return fail(EXIT_CONFIG, exc)
    except (GeometryError, MeshFailure) as exc:
        return fail(EXIT_GEOMETRY, exc)
    except IncompatibleLoad as exc:
        return fail(EXIT_COMPAT, exc)
    except SolverError as exc:
        return fail(EXIT_SOLVER, exc)
    if not args.quiet:
        print(f"{args.command}: {run.summary} -> {run.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
