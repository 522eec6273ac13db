import numpy as np
import numpy.testing as npt
import pytest

import ellipot as ep
from ellipot.errors import MajorantError

import oracles


PTS2 = np.array([[0.0, 0.0], [0.5, 0.0], [0.3, 0.4], [1.0, 1.0]])


def test_reactions_vanish_for_nonpositive_t():
    reactions = [
        ep.power_phi(1.0, 0.5),
        ep.power_phi(2.0, 3.0),
        ep.capped_linear_phi(1.0, 0.7),
        ep.AffinePhi(1.0, 2.0, 0.5),
        ep.GenericPhi(lambda pts, t: np.exp(t) - 1.0),
    ]
    for phi in reactions:
        out = phi(PTS2, np.array([-2.0, -1e-12, 0.0, -5.0]))
        npt.assert_array_equal(out, 0.0)


def test_power_phi_values():
    phi = ep.power_phi(2.0, 0.5)
    out = phi(PTS2, np.array([4.0, 1.0, 0.25, 9.0]))
    npt.assert_allclose(out, [4.0, 2.0, 1.0, 6.0])


def test_product_phi_with_spatial_density():
    p = lambda pts: pts[:, 0] + 1.0
    phi = ep.ProductPhi(p, lambda t: t**2)
    out = phi(PTS2, np.array([1.0, 2.0, 3.0, 1.0]))
    npt.assert_allclose(out, [1.0, 6.0, 11.7, 2.0])


def test_bind_fast_path_matches_call(rng):
    p = lambda pts: 1.0 / (1.0 + np.sum(pts**2, axis=1))
    phi = ep.power_phi(p, 0.5)
    bound = phi.bind(PTS2)
    for _ in range(5):
        t = rng.uniform(-1.0, 3.0, size=len(PTS2))
        npt.assert_array_equal(bound(t), phi(PTS2, t))


def test_tabulated_phi_interpolates_and_extends():
    phi = ep.TabulatedPhi([0.0, 1.0, 2.0], [0.0, 1.0, 1.5])
    out = phi(PTS2, np.array([0.5, 1.5, 3.0, -1.0]))
    npt.assert_allclose(out, [0.5, 1.25, 1.5, 0.0])


def test_tabulated_phi_monotone_repair():
    phi = ep.TabulatedPhi([0.0, 1.0, 2.0], [0.0, 1.0, 0.5], nondecreasing=True)
    out = phi(PTS2, np.array([2.0, 1.0, 1.5, 0.0]))
    npt.assert_allclose(out, [1.0, 1.0, 1.0, 0.0])


# ----------------------------------------------------------- mollifier

def test_mollifier_frozen_constants():
    m = ep.Mollifier()
    # independent adaptive quadrature of the bump profile over (-1, 1)
    raw = 2.0 * oracles.quad(lambda s: float(oracles.bump_raw(s)), 0.0, 1.0)
    assert raw == pytest.approx(0.4439938161680794, abs=1e-12)
    # the package constants come from fixed-order quadrature, which agrees
    # with the adaptive values to ~1e-11
    assert m.height() == pytest.approx(0.8285688398674459, abs=1e-10)
    assert m.abs_derivative_integral() == pytest.approx(
        1.6571376797348918, abs=2e-10
    )
    assert m.slope_constant() == pytest.approx(6.628550718939567, abs=1e-9)
    # the even mollifier has unit mass: twice the half-line integral of eta
    half_mass = oracles.quad(lambda s: float(m(np.array([s]))[0]), 0.0, 1.0)
    assert 2.0 * half_mass == pytest.approx(1.0, abs=1e-9)


def test_mollifier_height_is_value_at_zero():
    m = ep.Mollifier()
    assert m(np.array([0.0]))[0] == pytest.approx(m.height(), rel=1e-14)
    # symmetric and supported in (-1, 1)
    assert m(np.array([0.7]))[0] == pytest.approx(m(np.array([-0.7]))[0])
    assert m(np.array([1.0]))[0] == 0.0


def test_mollified_at_zero_linear_reaction_identity():
    # for phi = p * t:  (phi_x * eta_delta)(0) = p * delta * int s eta(s) ds
    m = ep.Mollifier()
    p = lambda pts: 2.0 + pts[:, 0]
    phi = ep.power_phi(p, 1.0)
    delta = 0.35
    got = ep.mollified_at_zero(phi, PTS2, delta, m)
    expected = p(PTS2) * delta * m.first_moment01()
    npt.assert_allclose(got, expected, rtol=1e-12)


# ------------------------------------------------------------- majorant

@pytest.mark.parametrize(
    "make_phi",
    [
        lambda p: ep.power_phi(p, 0.5),
        lambda p: ep.power_phi(p, 0.9),
        lambda p: ep.capped_linear_phi(p, 1.0),
    ],
    ids=["sqrt", "pow09", "capped"],
)
def test_majorant_properties(unit_square_17, make_phi):
    p = lambda pts: 1.0 / (1.0 + np.sum(pts**2, axis=1))
    phi = make_phi(p)
    maj = ep.build_concave_majorant(phi, p, unit_square_17)
    pts = unit_square_17.grid.points()[maj.table_flat]
    assert ep.domination_defect(phi, maj, pts) >= -1e-12
    assert maj.concavity_defect() >= -1e-9
    assert maj.monotone_defect() >= -1e-12
    npt.assert_array_equal(maj.psi_table[:, 0], 0.0)
    t0 = maj(pts, np.zeros(len(pts)))
    npt.assert_array_equal(t0, 0.0)
    assert np.isfinite(maj.linear_bound_constant())


def test_majorant_rejects_off_table_points(unit_square_17):
    phi = ep.power_phi(1.0, 0.5)
    maj = ep.build_concave_majorant(phi, 1.0, unit_square_17)
    with pytest.raises(MajorantError):
        maj(np.array([[17.0, -4.0]]), np.array([0.5]))


def test_majorant_beats_reaction_above_table_range(unit_square_17):
    # domination persists for t far beyond the table because the linear
    # branch grows while the capped reaction saturates
    p = 1.0
    phi = ep.capped_linear_phi(p, 1.0)
    maj = ep.build_concave_majorant(phi, p, unit_square_17)
    pts = unit_square_17.grid.points()[maj.table_flat][:5]
    t = np.full(5, 50.0)
    assert np.all(maj(pts, t) >= phi(pts, t) - 1e-12)


# ------------------------------------------------------- hypothesis audit

def test_check_hypotheses_sqrt():
    phi = ep.power_phi(1.0, 0.5)
    rep = ep.check_hypotheses(phi, 1.0, PTS2)
    assert rep.vanishes_nonpositive
    assert rep.nondecreasing
    assert rep.concave
    # sup of sqrt(t)/(t+1) is 1/2, attained at t = 1
    assert rep.linear_bound_constant == pytest.approx(0.5, abs=1e-6)
    assert rep.linearly_bounded
    assert rep.ok


def test_check_hypotheses_supercritical_power():
    phi = ep.power_phi(1.0, 2.0)
    rep = ep.check_hypotheses(phi, 1.0, PTS2)
    assert not rep.concave
    # max of t^2/(t+1) over the probed range [0, 2] is 4/3
    assert rep.linear_bound_constant == pytest.approx(4.0 / 3.0, rel=1e-6)


def test_check_hypotheses_flags_decreasing_reaction():
    phi = ep.TabulatedPhi([0.0, 1.0, 2.0], [0.0, 1.0, 0.2])
    rep = ep.check_hypotheses(phi, 1.0, PTS2)
    assert not rep.nondecreasing
    assert rep.min_step < 0
    assert not rep.ok
    assert "nondecreasing" in rep.summary()


def test_linear_reaction_bound_constant_is_one():
    phi = ep.power_phi(3.0, 1.0)  # p = 3, phi = 3t, bound p(t+1) gives C -> 1
    rep = ep.check_hypotheses(phi, 3.0, PTS2)
    assert rep.linear_bound_constant == pytest.approx(2.0 / 3.0, rel=1e-6)
    # with density p the reaction p*t sits under p*(t+1) with constant
    # sup t/(t+1) = 2/3 over the probed range [0, 2]
