import numpy as np
import pytest

import oracles
from kktrace import dynamics as dyn
from kktrace import geometry as geo
from kktrace import lie
from kktrace import reduction as red
from kktrace.errors import ConditioningError


@pytest.fixture(scope="module")
def flux_orbits():
    m = geo.flat_model("U(1)", lambda0=[1.0], connection=[1 / 3])
    return m, red.find_periodic_orbits(m, 2.0)


@pytest.fixture(scope="module")
def lapse_model():
    return geo.flat_model("U(1)", lambda0=[1.0], lapse={"const": 1.0, "cos": [0.1]})


@pytest.fixture(scope="module")
def su2_fixed():
    # connection along a fixed algebra direction, so the charge axis is preserved
    return geo.flat_model("SU(2)", lapse={"const": 1.0, "cos": [0.1]},
                          connection=[0.0, 0.0, {"const": 0.2, "cos": [0.3]}])


# ------------------------------------------------------------- moment map

def test_moment_map_is_charge():
    pt = geo.PhasePoint(0.3, 1.0, [0.0, 0.0, 0.7])
    assert np.array_equal(red.moment_map(pt), [0.0, 0.0, 0.7])
    assert np.array_equal(red.moment_map(geo.PhasePoint(0.0, 1.0, [2.0])), [2.0])


def test_moment_map_conserved_in_norm():
    m = geo.flat_model("SU(2)", connection=[{"cos": [0.3]}, 0.2, {"sin": [0.1]}])
    q = m.charge([0.2, 0.5, 0.8])
    st = dyn.integrate(m, geo.PhasePoint(0.0, 1.0, q), 50.0, tol=1e-12)
    assert abs(np.linalg.norm(red.moment_map(st.point)) - np.linalg.norm(q)) < 1e-9


# ----------------------------------------------------------------- orbits

@pytest.mark.parametrize("E,q0", [(2.0, 1.0), (3.0, 2.0)])
def test_flat_periods_match_closed_form(E, q0):
    m = geo.flat_model("U(1)", lambda0=[q0])
    orbits = red.find_periodic_orbits(m, E)
    assert sorted(o.winding for o in orbits) == [-1, 1]
    xdot = np.sqrt(E**2 - q0**2) / E
    for o in orbits:
        assert o.T == pytest.approx(2 * np.pi / xdot, rel=1e-9)
        assert o.det_I_minus_P == 1.0


def test_flux_holonomy_matches_action(flux_orbits):
    m, orbits = flux_orbits
    E, q0, alpha = 2.0, 1.0, 1 / 3
    for o in orbits:
        u = np.sign(o.winding) * np.sqrt(E**2 - q0**2)
        p = u + alpha * q0
        expected = np.exp(1j * 2 * np.pi * o.winding * p)
        assert abs(o.holonomy - expected) < 1e-9


def test_zero_flux_holonomy_is_action_not_te():
    m = geo.flat_model("U(1)", lambda0=[1.0])
    o = red.find_periodic_orbits(m, 2.0)[0]
    assert abs(o.holonomy - np.exp(2j * np.pi * np.sqrt(3.0))) < 1e-9


def test_holonomy_identity_and_doubling(flux_orbits):
    m, orbits = flux_orbits
    o = orbits[0]
    triv = red.PeriodicOrbit(0.0, 0.0, o.start, np.zeros(1), 1.0, 1.0, "zero-time")
    assert red.orbit_holonomy(triv, 2.0, m.group, m.weight) == 1
    twice = o.repeat(2)
    assert abs(twice.holonomy - o.holonomy**2) < 1e-10
    direct = red.orbit_holonomy(twice, 2.0, m.group, m.weight)
    assert abs(direct - o.holonomy**2) < 1e-10


def test_holonomy_invariant_under_start_phase(lapse_model):
    o = red.find_periodic_orbits(lapse_model, 1.0, winding_range=(0, 0))[0]
    vals = []
    for s in np.linspace(0, o.T, 8, endpoint=False):
        z = dyn.integrate(lapse_model, o.start, s, tol=1e-12).point.as_state()
        orb = red.build_orbit(lapse_model, z, o.T, 0, 1.0, tol=1e-12)
        vals.append(orb.holonomy)
    assert np.ptp(np.angle(np.array(vals) / vals[0])) < 1e-8


def test_variable_lapse_single_librating_orbit(lapse_model):
    orbits = red.find_periodic_orbits(lapse_model, 1.0, winding_range=(0, 0))
    assert len(orbits) == 1
    o = orbits[0]
    assert o.component_kind == "isolated-nondegenerate"
    assert o.det_I_minus_P == 1.0
    # oracle: T = 2 int dx / xdot between the turning points where N = 1
    from scipy.integrate import quad
    N = lambda x: 1 + 0.1 * np.cos(x)
    xdot = lambda x: np.sqrt(1 - N(x) ** 2) * N(x)  # N p / sqrt(p^2 + 1) with N sqrt(p^2+1) = 1
    T = 2 * quad(lambda x: 1 / xdot(x), np.pi / 2, 3 * np.pi / 2, limit=200)[0]
    assert o.T == pytest.approx(T, rel=1e-8)


def test_unreachable_energy_gives_no_orbits():
    m = geo.flat_model("U(1)", lambda0=[1.0])
    assert red.find_periodic_orbits(m, 0.5) == []


def test_su2_orbit_and_transversal_independence(su2_fixed):
    orbits = red.find_periodic_orbits(su2_fixed, 2.0, winding_range=(1, 1))
    assert orbits
    for o in orbits:
        assert o.det_spread < 1e-6
        assert o.residual < 1e-8


# -------------------------------------------------------- Poincare quotient

@pytest.mark.parametrize("a", [np.pi / 3, np.pi / 2, 2.0])
def test_rotation_quotient_determinant(a):
    rng = np.random.default_rng(5)
    M, f, g, P = oracles.rotation_monodromy(a, rng)
    da, db = red.quotient_determinant(M, f, g, P)
    assert da == pytest.approx(2 - 2 * np.cos(a), abs=1e-8)
    assert abs(da - db) < 1e-6


def test_identity_quotient_is_degenerate():
    M, f, g, P = oracles.rotation_monodromy(0.0, np.random.default_rng(2))
    da, _ = red.quotient_determinant(M, f, g, P)
    assert abs(da) < 1e-10


def test_two_dimensional_quotient_is_empty():
    assert red.quotient_determinant(np.eye(2), [1.0, 0], [0, 1.0], np.array([[0, 1.0], [-1, 0]])) == (1.0, 1.0)


def test_vanishing_flow_raises():
    with pytest.raises(ConditioningError):
        red.quotient_determinant(np.eye(4), np.zeros(4), [0, 0, 1.0, 0], np.eye(4))


# ------------------------------------------------------------------ volume

def test_flat_volume_closed_form_and_quadrature():
    m = geo.flat_model("U(1)", lambda0=[1.0])
    est = red.energy_surface_volume(m, 2.0, seed=1)
    exact = red.flat_u1_volume(2.0, 1.0)
    assert exact == pytest.approx(8 * np.pi / np.sqrt(3))
    assert exact == pytest.approx(oracles.u1_volume_quadrature(m, 2.0), rel=1e-9)
    assert est.value == pytest.approx(exact, rel=1e-3)


def test_variable_lapse_volume_against_quadrature(lapse_model):
    est = red.energy_surface_volume(lapse_model, 1.2, seed=3, rel_error=2e-3)
    ref = oracles.u1_volume_quadrature(lapse_model, 1.2)
    assert abs(est.value - ref) < 3 * est.stderr + 1e-3 * ref


def test_su2_volume_factorizes():
    m = geo.flat_model("SU(2)")
    r = m.orbit_radius
    est = red.energy_surface_volume(m, 2.0, seed=4)
    expected = red.flat_u1_volume(2.0, r) * 4 * np.pi * r
    assert est.value == pytest.approx(expected, rel=1e-3)


def test_volume_seeds_agree(lapse_model):
    a = red.energy_surface_volume(lapse_model, 1.2, seed=10, n_samples=20000)
    b = red.energy_surface_volume(lapse_model, 1.2, seed=11, n_samples=20000)
    assert abs(a.value - b.value) <= 3 * np.hypot(a.stderr, b.stderr)


def test_volume_deterministic(lapse_model):
    a = red.energy_surface_volume(lapse_model, 1.2, seed=10, n_samples=5000)
    b = red.energy_surface_volume(lapse_model, 1.2, seed=10, n_samples=5000)
    assert a.value == b.value


def test_volume_divergence_near_threshold():
    m = geo.flat_model("U(1)", lambda0=[1.0])
    Es = np.array([1.001, 1.004, 1.016])
    vols = np.array([red.energy_surface_volume(m, E, seed=0).value for E in Es])
    slope = np.polyfit(np.log(Es**2 - 1), np.log(vols), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.01)


def test_orbit_record_fields(flux_orbits):
    rec = flux_orbits[1][0].to_record()
    for key in ("T", "T_primitive", "start", "drift_angles", "det_I_minus_P", "holonomy",
                "component_kind", "residual"):
        assert key in rec
