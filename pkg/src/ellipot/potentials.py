"""Fields on masked grids, Dirichlet solves, Green operators, Kato sums.

Sign conventions.  The linear problem solved here is  L u = -g  in D with
u = f on the boundary, so nonnegative sources produce nonnegative
potentials whenever minus the interior block is an M-matrix.  The discrete
Green kernel is normalized so that lattice sums weighted by the cell
volume approximate the continuum integral operator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

from .errors import LinearSolveError, MaskError
from .geometry import BOUNDARY, EXTERIOR, INTERIOR, DomainMask, Grid

# cell averages of the Kato kernels over one lattice cell, used for the
# self term of the singular sums:
#   d=3 kernel 1/|z|:  3 * int_0^1 int_0^1 du dv / sqrt(1+u^2+v^2)
#   d=2 kernel -log|z|: 3/2 + log(2)/2 - pi/4
_CELL_AVG_INV = 2.3800773639795536
_CELL_AVG_LOG = 1.5 + 0.5 * math.log(2.0) - math.pi / 4.0


class Field:
    """Grid function defined on the active points of a mask.

    Values are stored on the full lattice with NaN at exterior points, so
    plotting and serialization stay shape-faithful while arithmetic only
    ever trusts active entries.
    """

    def __init__(self, mask, values):
        values = np.asarray(values, dtype=float)
        if values.shape == (mask.grid.size,):
            values = values.reshape(mask.grid.shape)
        if values.shape != mask.grid.shape:
            raise ValueError("values shape does not match grid")
        self.mask = mask
        self.values = values.copy()
        flat = self.values.ravel()
        flat[mask.classes.ravel() == EXTERIOR] = np.nan

    # -- constructors -------------------------------------------------
    @classmethod
    def zeros(cls, mask):
        return cls(mask, np.zeros(mask.grid.shape))

    @classmethod
    def constant(cls, mask, value):
        return cls(mask, np.full(mask.grid.shape, float(value)))

    @classmethod
    def from_function(cls, mask, fn):
        vals = np.full(mask.grid.size, np.nan)
        active = np.concatenate([mask.interior_flat, mask.boundary_flat])
        vals[active] = _evaluate_pointwise(fn, mask.grid.points()[active])
        return cls(mask, vals)

    @classmethod
    def from_active(cls, mask, interior_values, boundary_values=None):
        vals = np.full(mask.grid.size, np.nan)
        vals[mask.interior_flat] = np.asarray(interior_values, dtype=float)
        if boundary_values is None:
            vals[mask.boundary_flat] = 0.0
        else:
            vals[mask.boundary_flat] = np.asarray(boundary_values, dtype=float)
        return cls(mask, vals)

    # -- access -------------------------------------------------------
    def interior(self):
        return self.values.ravel()[self.mask.interior_flat]

    def boundary(self):
        return self.values.ravel()[self.mask.boundary_flat]

    def active(self):
        return np.concatenate([self.interior(), self.boundary()])

    def at(self, coords):
        """Value at an exact lattice point given by coordinates."""
        idx = self.mask.grid.flat_index_of(coords)
        out = self.values.ravel()[idx]
        return float(out[0]) if out.size == 1 else out

    def sup_interior(self):
        vals = self.interior()
        return float(vals.max()) if vals.size else float("nan")

    def inf_interior(self):
        vals = self.interior()
        return float(vals.min()) if vals.size else float("nan")

    def sup_active(self):
        return float(np.nanmax(self.values))

    def restrict_to(self, submask):
        """Same values viewed on a subdomain of the same grid."""
        if submask.grid != self.mask.grid:
            raise MaskError("restriction requires the same grid")
        return Field(submask, self.values)

    # -- arithmetic ---------------------------------------------------
    def copy(self):
        return Field(self.mask, self.values)

    def __add__(self, other):
        return Field(self.mask, self.values + _vals(other, self))

    def __sub__(self, other):
        return Field(self.mask, self.values - _vals(other, self))

    def __mul__(self, scalar):
        return Field(self.mask, self.values * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return (
            f"Field(sup={self.sup_active():.6g}, "
            f"interior={self.mask.n_interior})"
        )


def _vals(other, like):
    if isinstance(other, Field):
        if not other.mask.same_as(like.mask):
            raise MaskError("field arithmetic requires identical masks")
        return other.values
    return float(other)


def _evaluate_pointwise(fn, pts):
    if np.isscalar(fn) or isinstance(fn, (int, float)):
        return np.full(len(pts), float(fn))
    try:
        out = np.asarray(fn(pts), dtype=float)
        if out.shape != (len(pts),):
            raise TypeError
        return out
    except (TypeError, ValueError):
        return np.fromiter((float(fn(p)) for p in pts), dtype=float, count=len(pts))


def boundary_values(mask, f):
    """Dirichlet data as a vector over boundary points.

    ``f`` may be a constant, an array of length n_boundary, or a callable
    on points.
    """
    if isinstance(f, Field):
        return f.boundary()
    if callable(f):
        return _evaluate_pointwise(f, mask.boundary_points())
    arr = np.atleast_1d(np.asarray(f, dtype=float))
    if arr.size == 1:
        return np.full(mask.n_boundary, float(arr[0]))
    if arr.size != mask.n_boundary:
        raise ValueError(
            f"boundary data has {arr.size} values, expected {mask.n_boundary}"
        )
    return arr.astype(float)


def interior_values(mask, g):
    """Source data as a vector over interior points (same conventions)."""
    if isinstance(g, Field):
        return g.interior()
    if callable(g):
        return _evaluate_pointwise(g, mask.interior_points())
    arr = np.atleast_1d(np.asarray(g, dtype=float))
    if arr.size == 1:
        return np.full(mask.n_interior, float(arr[0]))
    if arr.size != mask.n_interior:
        raise ValueError(
            f"source data has {arr.size} values, expected {mask.n_interior}"
        )
    return arr.astype(float)


@dataclass
class LinearSolverParams:
    """How interior linear systems are solved.

    method : 'direct' (sparse LU, cached on the operator) or 'cg' /
        'bicgstab' (matrix-free Krylov with an incomplete-LU preconditioner).
    """

    method: str = "direct"
    tol: float = 1e-12
    maxiter: int = 2000


def solve_interior(op, source=0.0, boundary=0.0, params=None):
    """Solve  L u = -g  in the interior with u = f on the boundary.

    Returns a :class:`Field`.  ``source`` is g (so nonnegative g gives a
    nonnegative potential on sign-safe discretizations).
    """
    if params is None:
        params = LinearSolverParams()
    mask = op.mask
    g = interior_values(mask, source)
    f = boundary_values(mask, boundary)
    rhs = g + op.boundary_matrix @ f
    B = -op.interior_matrix

    if params.method == "direct":
        u = op.factor().solve(rhs)
    elif params.method in ("cg", "bicgstab"):
        krylov = spla.cg if params.method == "cg" else spla.bicgstab
        try:
            ilu = spla.spilu(B.tocsc(), drop_tol=1e-5, fill_factor=10)
            M = spla.LinearOperator(B.shape, ilu.solve)
        except RuntimeError:
            M = None
        u, info = krylov(B, rhs, rtol=params.tol, maxiter=params.maxiter, M=M)
        if info != 0:
            raise LinearSolveError(
                f"{params.method} failed to converge (info={info})"
            )
    else:
        raise ValueError(f"unknown linear solver {params.method!r}")

    if not np.all(np.isfinite(u)):
        raise LinearSolveError("linear solve produced non-finite values")
    res = B @ u - rhs
    scale = max(1.0, float(np.max(np.abs(rhs))) if rhs.size else 0.0)
    if np.max(np.abs(res)) > 1e-8 * scale:
        raise LinearSolveError(
            f"linear residual {np.max(np.abs(res)):.3e} exceeds tolerance"
        )
    return Field.from_active(mask, u, f)


def harmonic_extension(op, boundary, params=None):
    """Solution of  L u = 0  with the given boundary data."""
    return solve_interior(op, 0.0, boundary, params)


def green_apply(op, density, params=None):
    """Green operator applied to a density: solve L u = -g, u = 0."""
    return solve_interior(op, density, 0.0, params)


def green_kernel_column(op, source_point, params=None):
    """Discrete Green kernel G(., y) for a fixed lattice source point y.

    Normalized by the cell volume so lattice sums against it approximate
    continuum integrals; equals the response to a unit point mass.
    """
    mask = op.mask
    flat = mask.grid.flat_index_of(source_point)[0]
    where = np.flatnonzero(mask.interior_flat == flat)
    if where.size == 0:
        raise ValueError("source point must be an interior lattice point")
    g = np.zeros(mask.n_interior)
    g[where[0]] = 1.0 / mask.grid.cell_volume()
    return green_apply(op, g, params)


def green_row(op, eval_point):
    """Discrete Green kernel G(x, .) for a fixed evaluation point x.

    Uses one transposed solve, so sweeping over all source points costs a
    single factorization.
    """
    mask = op.mask
    flat = mask.grid.flat_index_of(eval_point)[0]
    where = np.flatnonzero(mask.interior_flat == flat)
    if where.size == 0:
        raise ValueError("evaluation point must be an interior lattice point")
    e = np.zeros(mask.n_interior)
    e[where[0]] = 1.0
    row = op.factor().solve(e, trans="T") / mask.grid.cell_volume()
    return Field.from_active(mask, row, np.zeros(mask.n_boundary))


@dataclass
class KatoEstimate:
    """Result of the truncated singular sum sup_x sum_{|y-x|<=alpha} p k."""

    value: float
    alpha: float
    n_centers: int
    argmax_point: np.ndarray


def kato_norm_estimate(mask, p, alpha, max_centers=4096):
    """Lattice estimate of the Kato modulus of a density at radius alpha.

    Sums  h^d * p(y) * k(x - y)  over active points y within distance
    alpha of x, where k is 1/|z| in dimension 3 and log(alpha/|z|) in
    dimension 2; the y = x term uses the cell average of the kernel.  The
    supremum is taken over interior centers (an evenly strided subset when
    the interior is larger than ``max_centers``).  A density is locally of
    Kato class exactly when this quantity vanishes as alpha -> 0, which
    :func:`kato_limit_scan` probes.
    """
    grid = mask.grid
    d = grid.dim
    if d not in (2, 3):
        raise ValueError("Kato estimate is defined for dimensions 2 and 3")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    h = grid.spacing
    vol = grid.cell_volume()
    hbar = float(np.mean(h))
    hmin = float(np.min(h))

    active = np.concatenate([mask.interior_flat, mask.boundary_flat])
    pts = grid.points()[active]
    pvals = np.abs(_evaluate_pointwise(p, pts))
    tree = cKDTree(pts)

    centers_flat = mask.interior_flat
    if centers_flat.size > max_centers:
        stride = int(np.ceil(centers_flat.size / max_centers))
        centers_flat = centers_flat[::stride]
    centers = grid.points()[centers_flat]

    best = -np.inf
    best_pt = centers[0]
    neighbor_lists = tree.query_ball_point(centers, alpha + 1e-12 * alpha)
    for x, nbrs in zip(centers, neighbor_lists):
        nbrs = np.asarray(nbrs, dtype=np.int64)
        r = np.linalg.norm(pts[nbrs] - x, axis=1)
        k = np.empty(len(nbrs))
        self_mask = r < 0.49 * hmin
        rr = r[~self_mask]
        if d == 3:
            k[~self_mask] = 1.0 / rr
            k[self_mask] = _CELL_AVG_INV / hbar
        else:
            k[~self_mask] = np.log(alpha / rr)
            k[self_mask] = math.log(alpha / hbar) + _CELL_AVG_LOG
        total = vol * float(np.dot(pvals[nbrs], np.maximum(k, 0.0)))
        if total > best:
            best = total
            best_pt = x
    return KatoEstimate(best, float(alpha), len(centers), best_pt)


def kato_limit_scan(mask, p, alphas, max_centers=4096):
    """Kato estimates over a decreasing ladder of radii.

    Returns (alphas, values) arrays; a vanishing tail indicates the local
    Kato property at the resolution of the grid.
    """
    alphas = np.asarray(sorted(alphas, reverse=True), dtype=float)
    vals = np.array(
        [kato_norm_estimate(mask, p, a, max_centers).value for a in alphas]
    )
    return alphas, vals


@dataclass
class MinorantLevel:
    level: int
    boundary_sup: float
    extension_sup: float
    value_at_ref: float


@dataclass
class MinorantReport:
    """Greatest-harmonic-minorant probe of a nonnegative superharmonic field.

    For each exhaustion level the field's trace on the level boundary is
    extended harmonically inside; the reference values decrease along the
    levels and their limit estimates the greatest harmonic minorant at the
    reference point.  Values collapsing toward zero certify potential-like
    behaviour.
    """

    levels: list
    ref_point: np.ndarray
    decreasing: bool
    final_value: float
    initial_value: float

    @property
    def is_potential_like(self):
        base = max(abs(self.initial_value), 1e-300)
        return self.decreasing and self.final_value <= 0.05 * base + 1e-12


def harmonic_minorant_report(assemble_fn, exhaustion, field, ref_point=None):
    """Probe whether ``field`` behaves like a potential on an exhaustion.

    ``assemble_fn`` maps a mask to an assembled operator (so the caller
    fixes coefficients and scheme).  ``field`` lives on the ambient mask of
    the exhaustion.
    """
    if ref_point is None:
        # deepest interior point of the first level
        lead = exhaustion.levels[0]
        ref_point = lead.interior_points()[lead.n_interior // 2]
    ref_point = np.asarray(ref_point, dtype=float)

    rows = []
    prev = None
    decreasing = True
    for i, level in enumerate(exhaustion.levels):
        op = assemble_fn(level)
        trace = field.values.ravel()[level.boundary_flat]
        ext = harmonic_extension(op, trace)
        val = ext.at(ref_point)
        if prev is not None and val > prev + 1e-10 * max(1.0, abs(prev)):
            decreasing = False
        prev = val
        rows.append(
            MinorantLevel(
                i + 1,
                float(np.max(trace)) if trace.size else 0.0,
                ext.sup_active(),
                val,
            )
        )
    # levels grow outward, so the harmonic majorization weakens monotonely;
    # read the ladder from the outermost level inward
    vals = [r.value_at_ref for r in rows]
    return MinorantReport(rows, ref_point, decreasing, vals[-1], vals[0])


# -- serialization ----------------------------------------------------

def save_field(field, path):
    """Write a field as CSV with a mask-describing header.

    Header comments carry dim/shape/bounds; rows list every active point
    as flat index, class character, coordinates, and value at full
    precision.
    """
    g = field.mask.grid
    classes = field.mask.classes.ravel()
    vals = field.values.ravel()
    with open(path, "w", newline="") as fh:
        fh.write("# field v1\n")
        fh.write(f"# dim {g.dim}\n")
        fh.write("# shape " + " ".join(str(n) for n in g.shape) + "\n")
        fh.write(
            "# bounds "
            + " ".join(f"{v:.17g}" for pair in g.bounds for v in pair)
            + "\n"
        )
        writer = csv.writer(fh)
        writer.writerow(
            [f"x{k + 1}" for k in range(g.dim)] + ["index", "class", "value"]
        )
        active = np.concatenate(
            [field.mask.interior_flat, field.mask.boundary_flat]
        )
        active.sort()
        pts = g.points()
        for idx in active:
            ch = "i" if classes[idx] == INTERIOR else "b"
            writer.writerow(
                [f"{x:.17g}" for x in pts[idx]]
                + [int(idx), ch, f"{vals[idx]:.17g}"]
            )


def load_field(path):
    """Read a field written by :func:`save_field`."""
    header = {}
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) >= 2:
                    header[parts[0]] = parts[1:]
                continue
            rows.append(line)
    if "dim" not in header or "shape" not in header or "bounds" not in header:
        raise MaskError(f"not a field file: {path}")
    dim = int(header["dim"][0])
    shape = [int(t) for t in header["shape"]]
    bounds = np.array([float(t) for t in header["bounds"]]).reshape(dim, 2)
    grid = Grid(dim, shape, bounds)

    classes = np.full(grid.size, EXTERIOR, dtype=np.int8)
    vals = np.full(grid.size, np.nan)
    reader = csv.reader(rows)
    head = next(reader)
    try:
        idx_col = head.index("index")
        class_col = head.index("class")
        value_col = head.index("value")
    except ValueError:
        raise MaskError("field file is missing its column header")
    for rec in reader:
        if not rec:
            continue
        idx = int(rec[idx_col])
        classes[idx] = INTERIOR if rec[class_col] == "i" else BOUNDARY
        vals[idx] = float(rec[value_col])
    mask = DomainMask(grid, classes.reshape(grid.shape))
    return Field(mask, vals)


def save_field_npz(field, path):
    """Binary twin of :func:`save_field` (exact round trip)."""
    g = field.mask.grid
    np.savez_compressed(
        path,
        dim=g.dim,
        shape=np.array(g.shape),
        bounds=np.array(g.bounds),
        classes=field.mask.classes,
        values=field.values,
    )


def load_field_npz(path):
    with np.load(path) as data:
        grid = Grid(int(data["dim"]), data["shape"], data["bounds"])
        mask = DomainMask(grid, data["classes"])
        return Field(mask, data["values"])
