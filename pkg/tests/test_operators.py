import numpy as np
import numpy.testing as npt
import pytest

import ellipot as ep
from ellipot.errors import EllipticityError, StencilError


def _interior_coords(mask):
    return mask.grid.points()[mask.interior_flat]


def test_laplacian_1d_matrix_entries(unit_interval_65):
    op = ep.assemble(unit_interval_65)
    h = unit_interval_65.grid.spacing[0]
    B = (-op.interior_matrix).toarray()
    npt.assert_allclose(np.diag(B), 2.0 / h**2)
    npt.assert_allclose(np.diag(B, 1), -1.0 / h**2)
    npt.assert_allclose(np.diag(B, -1), -1.0 / h**2)
    assert np.count_nonzero(B) == 3 * 63 - 2


def test_manufactured_solution_second_order():
    # u = sin(pi x) sin(pi y), Laplacian(u) = -2 pi^2 u, zero boundary data
    errs = []
    for n in (17, 33):
        grid = ep.build_grid(2, n, (0.0, 1.0))
        mask = ep.box_mask(grid)
        op = ep.assemble(mask)
        pts = _interior_coords(mask)
        exact = np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])
        u = ep.solve_interior(op, 2.0 * np.pi**2 * exact, 0.0)
        errs.append(np.max(np.abs(u.interior() - exact)))
    ratio = errs[0] / errs[1]
    assert 3.5 < ratio < 4.5


def test_variable_coefficients_exact_on_quadratics():
    # a(x) = 1 + x1, b = (-1, 0), u = x1^2: a u_{11} + b . grad u = 2 exactly
    grid = ep.build_grid(2, 13, (0.0, 1.0))
    mask = ep.box_mask(grid)
    coeffs = ep.CoefficientSet(
        a=lambda pts: np.stack(
            [np.stack([1.0 + pts[:, 0], np.zeros(len(pts))], axis=1),
             np.stack([np.zeros(len(pts)), np.ones(len(pts))], axis=1)],
            axis=1,
        ),
        b=np.array([-1.0, 0.0]),
    )
    op = ep.assemble(mask, coeffs, ep.SchemeOptions(drift="centered"))
    f = lambda pts: pts[:, 0] ** 2
    u = ep.solve_interior(op, -2.0 * np.ones(mask.n_interior), f)
    pts = _interior_coords(mask)
    npt.assert_allclose(u.interior(), pts[:, 0] ** 2, atol=1e-10)


@pytest.mark.parametrize("cross", ["corner", "tilted"])
def test_cross_terms_exact_on_bilinear(cross):
    # u = x1 x2 with a12 = 0.3: L u = 2 a12 = 0.6
    grid = ep.build_grid(2, 11, (0.0, 1.0))
    mask = ep.box_mask(grid)
    coeffs = ep.CoefficientSet(a=np.array([[1.0, 0.3], [0.3, 1.0]]))
    op = ep.assemble(mask, coeffs, ep.SchemeOptions(cross=cross))
    f = lambda pts: pts[:, 0] * pts[:, 1]
    u = ep.solve_interior(op, -0.6 * np.ones(mask.n_interior), f)
    pts = _interior_coords(mask)
    npt.assert_allclose(u.interior(), pts[:, 0] * pts[:, 1], atol=1e-10)


def test_upwind_preserves_m_matrix_under_strong_drift():
    grid = ep.build_grid(2, 11, (0.0, 1.0))
    mask = ep.box_mask(grid)
    coeffs = ep.CoefficientSet(b=np.array([50.0, -50.0]))
    up = ep.check_m_matrix(ep.assemble(mask, coeffs))
    assert up.is_m_matrix
    centered = ep.check_m_matrix(
        ep.assemble(mask, coeffs, ep.SchemeOptions(drift="centered"))
    )
    assert not centered.is_m_matrix
    assert any("upwind" in note for note in centered.notes)


def test_tilted_cross_keeps_m_matrix_where_corner_fails():
    grid = ep.build_grid(2, 11, (0.0, 1.0))
    mask = ep.box_mask(grid)
    coeffs = ep.CoefficientSet(a=np.array([[1.0, 0.8], [0.8, 1.0]]))
    corner = ep.check_m_matrix(ep.assemble(mask, coeffs))
    tilted = ep.check_m_matrix(
        ep.assemble(mask, coeffs, ep.SchemeOptions(cross="tilted"))
    )
    assert not corner.is_m_matrix
    assert tilted.is_m_matrix


def test_cross_terms_need_diagonal_neighbors(disc_mask):
    coeffs = ep.CoefficientSet(a=np.array([[1.0, 0.4], [0.4, 1.0]]))
    with pytest.raises(StencilError):
        ep.assemble(disc_mask, coeffs)


def test_ellipticity_rejects_indefinite_a(unit_square_17):
    coeffs = ep.CoefficientSet(a=np.array([[1.0, 2.0], [2.0, 1.0]]))
    rep = ep.check_ellipticity(coeffs, unit_square_17)
    assert not rep.ok
    # eigenvalues of [[1, 2], [2, 1]] are -1 and 3
    assert rep.min_eigenvalue == pytest.approx(-1.0)
    assert rep.max_eigenvalue == pytest.approx(3.0)
    with pytest.raises(EllipticityError):
        ep.assemble(unit_square_17, coeffs)


def test_ellipticity_rejects_positive_c(unit_square_17):
    rep = ep.check_ellipticity(ep.CoefficientSet(c=0.5), unit_square_17)
    assert not rep.ok
    assert rep.max_c == pytest.approx(0.5)


def test_zero_order_term_enters_diagonal(unit_square_17):
    op0 = ep.assemble(unit_square_17)
    opc = ep.assemble(unit_square_17, ep.CoefficientSet(c=-2.0))
    diff = (opc.interior_matrix - op0.interior_matrix).toarray()
    npt.assert_allclose(diff, -2.0 * np.eye(unit_square_17.n_interior), atol=1e-14)


def test_apply_matches_matrix_action(rng, unit_square_17):
    mask = unit_square_17
    coeffs = ep.CoefficientSet(a=np.array([1.0, 2.0]), b=np.array([0.5, 0.0]), c=-0.3)
    op = ep.assemble(mask, coeffs)
    vals = rng.normal(size=mask.grid.size).reshape(mask.grid.shape)
    field = ep.Field(mask, vals)
    out = op.apply(field)
    u_int = vals.ravel()[mask.interior_flat]
    u_bnd = vals.ravel()[mask.boundary_flat]
    expected = op.interior_matrix @ u_int + op.boundary_matrix @ u_bnd
    npt.assert_allclose(out, expected, atol=1e-12)


def test_m_matrix_report_on_laplacian(unit_square_17):
    rep = ep.check_m_matrix(ep.assemble(unit_square_17))
    assert rep.is_m_matrix
    assert rep.positive_diagonal
    assert rep.nonpositive_offdiagonal
    assert rep.weakly_dominant
    assert rep.has_strict_row
    assert rep.connected
