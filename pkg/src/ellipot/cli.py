"""Command-line front end.

Subcommands: solve, exhaust, majorant, blowup, potential, checks,
dichotomy.  Every run reads one config file, writes its artifacts (CSV
tables with 17-significant-digit floats, JSON summaries) into the output
directory, and finishes with a manifest listing each artifact with its
SHA-256 checksum.  Exit codes: 0 success, 1 configuration error, 2
hypothesis-check failure, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import (
    ConfigError,
    EllipticityError,
    ExprError,
    LinearSolveError,
    MajorantError,
    MaskError,
    NestingError,
    NonConvergenceError,
    SolverBreakdownError,
    StencilError,
)
from .expressions import compile_point_function, parse_expr, validate_vars, evaluate
from .experiments import (
    blowup_sweep,
    check_sup_identity,
    cube_truncation_study,
    dichotomy_report,
    green_potential_diagnostic,
    run_exhaustion,
)
from .geometry import box_mask, build_exhaustion, build_grid, mask_from_predicate
from .nonlinearity import (
    AffinePhi,
    Mollifier,
    ProductPhi,
    build_concave_majorant,
    capped_linear_phi,
    check_hypotheses,
    domination_defect,
    power_phi,
)
from .operators import CoefficientSet, SchemeOptions, assemble, check_ellipticity, check_m_matrix
from .potentials import kato_limit_scan, save_field
from .solver import SemilinearParams, solve_semilinear_dirichlet

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_HYPOTHESIS = 2
EXIT_NUMERIC = 3

DEFAULT_SEED = 1234

log = logging.getLogger("ellipot")


# ---------------------------------------------------------------- builders

def _build_mask(cfg):
    dim = cfg.get("geometry", "dim", kind="int")
    shape = cfg.get("geometry", "shape")
    if isinstance(shape, list):
        shape = [int(s) for s in shape]
    bounds = np.asarray(cfg.get("geometry", "bounds", kind="list"), dtype=float)
    grid = build_grid(dim, shape, bounds)
    expr = cfg.get("geometry", "mask", default=None)
    if expr is None:
        return box_mask(grid)
    fn = compile_point_function(str(expr), dim)
    return mask_from_predicate(grid, lambda pts: fn(pts) < 0.0)


def _scalar_or_expr(value, dim, where):
    """A config value as a float or a compiled point function."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number or expression")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return compile_point_function(value, dim)
    raise ConfigError(f"{where}: expected a number or expression, got {value!r}")


def _build_coeffs(cfg, dim):
    if not cfg.has("operator"):
        return CoefficientSet(), SchemeOptions()
    a_raw = cfg.get("operator", "a", default=1.0)
    if isinstance(a_raw, list):
        arr = np.asarray(a_raw, dtype=float)
        if arr.size == dim:
            a = arr
        elif arr.size == dim * dim:
            a = arr.reshape(dim, dim)
        else:
            raise ConfigError(
                f"[operator] a: expected {dim} or {dim * dim} entries"
            )
    else:
        a = _scalar_or_expr(a_raw, dim, "[operator] a")

    b_parts = []
    for k in range(dim):
        key = f"b{k + 1}"
        if cfg.has("operator", key):
            b_parts.append(
                _scalar_or_expr(cfg.get("operator", key), dim, f"[operator] {key}")
            )
        else:
            b_parts.append(0.0)
    if any(callable(p) for p in b_parts):
        parts = list(b_parts)

        def b_fn(points):
            points = np.atleast_2d(np.asarray(points, dtype=float))
            cols = []
            for p in parts:
                if callable(p):
                    cols.append(p(points))
                else:
                    cols.append(np.full(len(points), p))
            return np.stack(cols, axis=1)

        b = b_fn
    elif any(abs(p) > 0 for p in b_parts):
        b = np.asarray(b_parts, dtype=float)
    else:
        b = None

    c_raw = cfg.get("operator", "c", default=None)
    c = None if c_raw is None else _scalar_or_expr(c_raw, dim, "[operator] c")

    scheme = SchemeOptions(
        drift=cfg.get("operator", "drift", default="upwind", kind="str"),
        cross=cfg.get("operator", "cross", default="corner", kind="str"),
    )
    return CoefficientSet(a=a, b=b, c=c), scheme


def _compile_profile(text):
    """Expression in t alone -> vectorized profile rho(t)."""
    node = parse_expr(text)
    validate_vars(node, 0, allow_t=True)

    def rho(t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(evaluate(node, {"t": t}), dtype=float)
        return np.broadcast_to(out, t.shape).copy()

    return rho


def _build_phi(cfg, dim, mask=None):
    """Reaction and its density from the [phi] section.

    Returns (phi, p) where p is the density used by hypothesis checks.
    """
    family = cfg.get("phi", "family", default="zero", kind="str")
    p = _scalar_or_expr(cfg.get("phi", "p", default=1.0), dim, "[phi] p")
    if family == "zero":
        phi = AffinePhi(0.0, 0.0, 0.0, name="zero")
    elif family == "power":
        phi = power_phi(p, cfg.get("phi", "gamma", default=0.5, kind="float"))
    elif family == "capped":
        phi = capped_linear_phi(p, cfg.get("phi", "cap", default=1.0, kind="float"))
    elif family == "affine":
        phi = AffinePhi(
            p,
            cfg.get("phi", "slope", default=1.0, kind="float"),
            cfg.get("phi", "offset", default=0.0, kind="float"),
        )
    elif family == "expr":
        rho = _compile_profile(cfg.get("phi", "rho", kind="str"))
        phi = ProductPhi(p, rho, name="p*" + cfg.get("phi", "rho", kind="str"))
    else:
        raise ConfigError(f"[phi] family: unknown family {family!r}")
    if cfg.get("phi", "use_majorant", default=False, kind="bool"):
        if mask is None:
            raise ConfigError("[phi] use_majorant needs a single-domain geometry")
        phi = build_concave_majorant(phi, p, mask)
    return phi, p


def _build_params(cfg):
    return SemilinearParams(
        tol=cfg.get("solver", "tol", default=1e-10, kind="float"),
        max_iterations=cfg.get("solver", "max_iterations", default=200000, kind="int"),
        lambda_safety=cfg.get("solver", "safety", default=1.1, kind="float"),
        t_floor=cfg.get("solver", "t_floor", default=1e-8, kind="float"),
        ladder_size=cfg.get("solver", "ladder", default=64, kind="int"),
        refresh_every=cfg.get("solver", "refresh_every", default=50, kind="int"),
    )


def _boundary_data(cfg, dim):
    raw = cfg.get("experiment", "boundary", default=1.0)
    return _scalar_or_expr(raw, dim, "[experiment] boundary")


def _sup_bands(cfg):
    bands = {}
    for key, name in (
        ("trivial_fraction", "trivial_fraction"),
        ("band_fraction", "band_fraction"),
        ("core_fraction", "core_fraction"),
    ):
        if cfg.has("experiment", key):
            bands[name] = cfg.get("experiment", key, kind="float")
    return bands


def _m_values(cfg):
    if cfg.has("experiment", "m_values"):
        return np.asarray(cfg.get("experiment", "m_values", kind="list"), dtype=float)
    lo = cfg.get("experiment", "m_min", default=1.0, kind="float")
    hi = cfg.get("experiment", "m_max", default=100.0 * lo, kind="float")
    n = cfg.get("experiment", "m_count", default=9, kind="int")
    return np.geomspace(lo, hi, n)


# ---------------------------------------------------------------- emission

class Emitter:
    """Writes artifacts and finishes with a checksum manifest."""

    def __init__(self, outdir):
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.artifacts = []

    def _register(self, path):
        self.artifacts.append(path)
        log.info("wrote %s", path)

    @staticmethod
    def _fmt(value):
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return f"{float(value):.17g}"
        return str(value)

    def write_csv(self, name, header, rows):
        path = self.outdir / name
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(self._fmt(v) for v in row) + "\n")
        self._register(path)
        return path

    def write_json(self, name, obj):
        path = self.outdir / name
        path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
        self._register(path)
        return path

    def write_field(self, name, field):
        path = self.outdir / name
        save_field(field, path)
        self._register(path)
        return path

    def finish(self, command, config_path, seed):
        entries = []
        for path in sorted(self.artifacts):
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            entries.append(
                {
                    "name": path.name,
                    "sha256": digest,
                    "bytes": path.stat().st_size,
                }
            )
        manifest = {
            "command": command,
            "config": str(config_path),
            "config_sha256": hashlib.sha256(
                Path(config_path).read_bytes()
            ).hexdigest(),
            "seed": seed,
            "generated_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "artifacts": entries,
        }
        path = self.outdir / "manifest.json"
        path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        log.info("wrote %s", path)
        return manifest


# ---------------------------------------------------------------- commands

def cmd_solve(cfg, emit):
    mask = _build_mask(cfg)
    dim = mask.grid.dim
    coeffs, scheme = _build_coeffs(cfg, dim)
    op = assemble(mask, coeffs, scheme)
    phi, _ = _build_phi(cfg, dim, mask)
    params = _build_params(cfg)
    boundary = _boundary_data(cfg, dim)
    field, report = solve_semilinear_dirichlet(op, phi, boundary, params)
    emit.write_field("solution.csv", field)
    summary = report.as_dict()
    summary.update(
        {
            "phi": phi.name,
            "dim": dim,
            "shape": list(mask.grid.shape),
            "n_interior": mask.n_interior,
        }
    )
    emit.write_json("report.json", summary)
    log.info(
        "solve: converged=%s iterations=%d sup=%.6g identity=%.3e",
        report.converged,
        report.iterations,
        report.sup_solution,
        report.identity_residual,
    )
    return EXIT_OK


def cmd_exhaust(cfg, emit):
    mask = _build_mask(cfg)
    dim = mask.grid.dim
    coeffs, scheme = _build_coeffs(cfg, dim)
    phi, _ = _build_phi(cfg, dim, mask)
    params = _build_params(cfg)
    n_levels = cfg.get("geometry", "levels", default=3, kind="int")
    c = cfg.get("experiment", "c", default=1.0, kind="float")
    exh = build_exhaustion(mask, n_levels)
    run = run_exhaustion(
        exh, phi, c, params=params, coeffs=coeffs, scheme=scheme, keep_fields=False
    )
    rep = check_sup_identity(run, **_sup_bands(cfg))
    header, rows = run.tables()["levels"]
    emit.write_csv("levels.csv", header, rows)
    emit.write_field("vc.csv", run.v_c)
    emit.write_json(
        "report.json",
        {"run": run.summary_dict(), "sup_identity": rep.summary_dict()},
    )
    log.info(
        "exhaust: decreasing=%s sup=%.6g verdict=%s",
        run.decreasing_ok,
        run.sup_estimate,
        rep.verdict,
    )
    return EXIT_OK


def cmd_majorant(cfg, emit):
    mask = _build_mask(cfg)
    dim = mask.grid.dim
    phi, p = _build_phi(cfg, dim)
    moll = Mollifier()
    maj = build_concave_majorant(phi, p, mask, mollifier=moll)
    pts = mask.grid.points()[maj.table_flat]
    defect = domination_defect(phi, maj, pts)
    concavity = maj.concavity_defect()
    monotone = maj.monotone_defect()
    bound_c = maj.linear_bound_constant()
    zero_row = float(np.max(np.abs(maj.psi_table[:, 0])))

    n_pts = len(maj.table_flat)
    stride = max(1, n_pts // 8)
    sample = np.arange(0, n_pts, stride)[:8]
    header = ["t"] + [f"psi_point{j + 1}" for j in range(len(sample))]
    rows = []
    for jt, t in enumerate(maj.t_grid):
        rows.append([float(t)] + [float(maj.psi_table[s, jt]) for s in sample])
    emit.write_csv("psi_table.csv", header, rows)
    pheader = [f"x{k + 1}" for k in range(dim)] + ["p"]
    prow = [
        [*(float(x) for x in pts[s]), float(maj.p_values[s])] for s in sample
    ]
    emit.write_csv("psi_points.csv", pheader, prow)
    summary = {
        "phi": phi.name,
        "slope_constant": moll.slope_constant(),
        "domination_defect": defect,
        "concavity_defect": concavity,
        "monotone_defect": monotone,
        "value_at_zero": zero_row,
        "linear_bound_constant": bound_c,
        "n_points": n_pts,
        "n_t_nodes": len(maj.t_grid),
    }
    emit.write_json("report.json", summary)
    ok = defect >= -1e-12 and concavity >= -1e-9 and zero_row == 0.0
    log.info(
        "majorant: domination=%.3e concavity=%.3e C=%.4g -> %s",
        defect,
        concavity,
        bound_c,
        "ok" if ok else "FAILED",
    )
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def cmd_blowup(cfg, emit):
    mask = _build_mask(cfg)
    dim = mask.grid.dim
    coeffs, scheme = _build_coeffs(cfg, dim)
    op = assemble(mask, coeffs, scheme)
    phi, p = _build_phi(cfg, dim, mask)
    params = _build_params(cfg)
    probes = None
    if cfg.has("experiment", "probe"):
        probes = [np.asarray(cfg.get("experiment", "probe", kind="list"), dtype=float)]
    sweep = blowup_sweep(op, phi, _m_values(cfg), probes, params)
    header, rows = sweep.tables()["sweep"]
    emit.write_csv("sweep.csv", header, rows)
    hyp = check_hypotheses(phi, p, mask.interior_points()[:: max(1, mask.n_interior // 256)])
    emit.write_json(
        "report.json",
        {"sweep": sweep.summary_dict(), "hypotheses": _hyp_dict(hyp)},
    )
    log.info("blowup: verdict=%s", sweep.verdict)
    if np.all(np.isnan(sweep.values)):
        return EXIT_NUMERIC
    return EXIT_OK


def _truncation_ops(cfg, dim, coeffs, scheme):
    shape = cfg.get("geometry", "shape", default=33)
    if isinstance(shape, list):
        raise ConfigError("truncation families use a single odd shape value")
    half_widths = [
        float(v) for v in cfg.get("geometry", "half_widths", kind="list")
    ]
    ops = []
    for R in half_widths:
        grid = build_grid(dim, int(shape), (-R, R))
        ops.append(assemble(box_mask(grid), coeffs, scheme))
    return half_widths, ops


def cmd_potential(cfg, emit):
    dim = cfg.get("geometry", "dim", kind="int")
    coeffs, scheme = _build_coeffs(cfg, dim)
    _, p = _build_phi(cfg, dim)
    half_widths, ops = _truncation_ops(cfg, dim, coeffs, scheme)
    excluded = None
    if cfg.has("experiment", "excluded"):
        fn = compile_point_function(
            cfg.get("experiment", "excluded", kind="str"), dim
        )
        excluded = lambda pts: fn(pts) < 0.0
    probe = None
    if cfg.has("experiment", "probe"):
        probe = np.asarray(cfg.get("experiment", "probe", kind="list"), dtype=float)
    diag = green_potential_diagnostic(ops, half_widths, p, excluded, probe)
    header, rows = diag.tables()["partial_sums"]
    emit.write_csv("partial_sums.csv", header, rows)
    emit.write_json("report.json", diag.summary_dict())
    log.info(
        "potential: verdict=%s exponent=%.3g", diag.verdict, diag.exponent
    )
    return EXIT_OK


def _hyp_dict(hyp):
    return {
        "vanishes_nonpositive": bool(hyp.vanishes_nonpositive),
        "nondecreasing": bool(hyp.nondecreasing),
        "min_step": hyp.min_step,
        "concave": bool(hyp.concave),
        "concavity_defect": hyp.concavity_defect,
        "linear_bound_constant": hyp.linear_bound_constant,
        "linearly_bounded": bool(hyp.linearly_bounded),
    }


def cmd_checks(cfg, emit):
    mask = _build_mask(cfg)
    dim = mask.grid.dim
    coeffs, scheme = _build_coeffs(cfg, dim)
    ell = check_ellipticity(coeffs, mask)
    failures = list(ell.messages)
    mm_dict = None
    if ell.ok:
        op = assemble(mask, coeffs, scheme, validate=False)
        mm = check_m_matrix(op)
        mm_dict = {
            "is_m_matrix": bool(mm.is_m_matrix),
            "notes": mm.notes,
        }
        if not mm.is_m_matrix:
            failures.append("interior block is not an M-matrix")

    phi, p = _build_phi(cfg, dim, mask)
    sample = mask.interior_points()[:: max(1, mask.n_interior // 512)]
    hyp = check_hypotheses(phi, p, sample)
    if not hyp.vanishes_nonpositive:
        failures.append("reaction does not vanish for t <= 0")
    if not hyp.nondecreasing:
        failures.append("reaction is not nondecreasing in t")
    growth_ok = hyp.linear_bound_constant <= 1.0 + 1e-9
    if not growth_ok:
        failures.append(
            "linear growth bound fails with the given density "
            f"(constant {hyp.linear_bound_constant:.4g} > 1)"
        )
    if cfg.get("experiment", "require_concave", default=False, kind="bool"):
        if not hyp.concave:
            failures.append("reaction is not concave in t")

    kato = None
    if dim in (2, 3):
        alphas = cfg.get(
            "experiment", "alpha", default=[0.25, 0.125, 0.0625], kind="list"
        )
        try:
            a_arr, k_vals = kato_limit_scan(mask, p, alphas)
            kato = {
                "alpha": [float(a) for a in a_arr],
                "estimate": [float(v) for v in k_vals],
                "decreasing": bool(np.all(np.diff(k_vals) <= 1e-12)),
            }
            emit.write_csv(
                "kato.csv",
                ["alpha", "estimate"],
                [[float(a), float(v)] for a, v in zip(a_arr, k_vals)],
            )
        except ValueError as exc:
            kato = {"skipped": str(exc)}

    report = {
        "ellipticity": {
            "ok": bool(ell.ok),
            "min_eigenvalue": ell.min_eigenvalue,
            "max_c": ell.max_c,
            "messages": ell.messages,
        },
        "m_matrix": mm_dict,
        "hypotheses": _hyp_dict(hyp),
        "growth_bound_with_given_density": bool(growth_ok),
        "kato": kato,
        "failures": failures,
    }
    emit.write_json("checks.json", report)
    if failures:
        log.info("checks: FAILED (%s)", "; ".join(failures))
        return EXIT_HYPOTHESIS
    log.info("checks: all hypothesis checks passed")
    return EXIT_OK


def cmd_dichotomy(cfg, emit):
    dim = cfg.get("geometry", "dim", kind="int")
    shape = cfg.get("geometry", "shape", default=33)
    if isinstance(shape, list):
        raise ConfigError("truncation families use a single odd shape value")
    half_widths = [
        float(v) for v in cfg.get("geometry", "half_widths", kind="list")
    ]
    n_levels = cfg.get("geometry", "levels", default=3, kind="int")
    coeffs, scheme = _build_coeffs(cfg, dim)
    phi, p = _build_phi(cfg, dim)
    params = _build_params(cfg)
    c = cfg.get("experiment", "c", default=1.0, kind="float")

    study = cube_truncation_study(
        half_widths,
        phi,
        c,
        dim=dim,
        shape=int(shape),
        n_levels=n_levels,
        coeffs=coeffs,
        scheme=scheme,
        params=params,
        sup_bands=_sup_bands(cfg),
    )

    sweep_R = cfg.get("experiment", "sweep_half_width", default=half_widths[0],
                      kind="float")
    grid = build_grid(dim, int(shape), (-sweep_R, sweep_R))
    op = assemble(box_mask(grid), coeffs, scheme)
    sweep = blowup_sweep(op, phi, _m_values(cfg), None, params)

    _, ops = _truncation_ops(cfg, dim, coeffs, scheme)
    diag = green_potential_diagnostic(ops, half_widths, p)

    sample = op.mask.interior_points()[:: max(1, op.mask.n_interior // 256)]
    hyp = check_hypotheses(phi, p, sample)
    hypotheses_ok = (
        hyp.vanishes_nonpositive
        and hyp.nondecreasing
        and hyp.linear_bound_constant <= 1.0 + 1e-9
    )
    report = dichotomy_report(study, sweep, diag, hypotheses_ok)

    header, rows = study.tables()["truncations"]
    emit.write_csv("truncations.csv", header, rows)
    header, rows = sweep.tables()["sweep"]
    emit.write_csv("sweep.csv", header, rows)
    header, rows = diag.tables()["partial_sums"]
    emit.write_csv("partial_sums.csv", header, rows)
    emit.write_json(
        "dichotomy.json",
        {
            "verdict": report.summary_dict(),
            "study": study.summary_dict(),
            "sweep": sweep.summary_dict(),
            "diagnostic": diag.summary_dict(),
            "hypotheses": _hyp_dict(hyp),
        },
    )
    log.info("%s", report.render())
    return EXIT_OK if report.consistent else EXIT_HYPOTHESIS


_COMMANDS = {
    "solve": cmd_solve,
    "exhaust": cmd_exhaust,
    "majorant": cmd_majorant,
    "blowup": cmd_blowup,
    "potential": cmd_potential,
    "checks": cmd_checks,
    "dichotomy": cmd_dichotomy,
}


def _parse_args(argv):
    ap = argparse.ArgumentParser(
        prog="ellipot",
        description=(
            "numerical laboratory for semilinear elliptic Dirichlet problems"
        ),
    )
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=True, help="path to the run configuration")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="seed recorded in the manifest")
    ap.add_argument("--verbose", action="store_true", help="chatty progress on stderr")
    return ap.parse_args(argv)


def main(argv=None):
    args = _parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(message)s",
    )
    try:
        cfg = RunConfig.from_file(args.config)
        seed = args.seed
        if seed is None:
            seed = cfg.get("experiment", "seed", default=DEFAULT_SEED, kind="int")
        np.random.seed(seed)
        outdir = args.out or cfg.get("output", "dir", default="out", kind="str")
        emit = Emitter(outdir)
        code = _COMMANDS[args.command](cfg, emit)
        emit.finish(args.command, args.config, seed)
        return code
    except (ConfigError, ExprError, MaskError, NestingError, StencilError,
            ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (EllipticityError, MajorantError) as exc:
        log.error("hypothesis check failed: %s", exc)
        return EXIT_HYPOTHESIS
    except (NonConvergenceError, LinearSolveError, SolverBreakdownError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
