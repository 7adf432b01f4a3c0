import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kktrace import geometry as geo
from kktrace import reduction as red
from kktrace import spectrum as sp
from kktrace import trace as tr
from kktrace.errors import DomainError, IncompleteWindowError


def gauss_hat(xi, sigma):
    return sigma * np.sqrt(2 * np.pi) * np.exp(-(sigma * xi) ** 2 / 2)


def flat_series(model, E, phi, ms):
    tabs = [sp.flat_spectrum(model, m, tr.required_window(m, E, phi)) for m in ms]
    return tr.mu(tabs, E, phi)


def table(m, lams, window):
    lams = np.asarray(lams, float)
    return sp.SpectrumTable(m, lams, np.ones(len(lams), int), window, "closed-form")


@pytest.fixture(scope="module")
def flux_series():
    model = geo.flat_model("U(1)", lambda0=[1.0], connection=[1 / 3])
    phi = tr.TestFunction(sigma=1.0, t0=2 * np.pi * 2 / np.sqrt(3), symmetric=True)
    return model, phi, flat_series(model, 2.0, phi, range(50, 306))


# ----------------------------------------------------------------------- mu

def test_single_eigenvalue_at_center():
    phi = tr.TestFunction(sigma=1.3)
    s = tr.mu([table(3, [6.0], (-10, 20))], 2.0, phi)
    assert s.values[0] == pytest.approx(phi.hat(0.0).real, abs=1e-14)
    assert phi.hat(0.0).real == pytest.approx(1.3 * np.sqrt(2 * np.pi))


def test_far_eigenvalue_decays():
    s = tr.mu([table(3, [30.0], (-10, 40))], 2.0, tr.TestFunction(sigma=1.0))
    assert abs(s.values[0]) < 1e-12


def test_window_too_small_names_level():
    with pytest.raises(IncompleteWindowError) as exc:
        tr.mu([table(5, [10.0], (9, 11))], 2.0, tr.TestFunction(sigma=1.0))
    assert exc.value.m == 5


def test_flat_u1_plateau_riemann_sum():
    E, sigma = 2.0, 1.0
    phi = tr.TestFunction(sigma=sigma)
    model = geo.flat_model("U(1)", lambda0=[1.0])
    ms = [100, 200, 400]
    s = flat_series(model, E, phi, ms)
    for m, v in zip(ms, s.values):
        k = np.arange(-4 * m, 4 * m + 1)
        lam = np.sqrt(k**2 + m**2)
        direct = np.sum(gauss_hat(lam - m * E, sigma)) + np.sum(gauss_hat(-lam - m * E, sigma))
        assert v == pytest.approx(direct, rel=1e-12)
    # m-independent limit: phi(0) times the energy-surface volume
    plateau = red.flat_u1_volume(E, 1.0) * phi(0.0).real
    assert s.values[-1] == pytest.approx(plateau, rel=2e-3)
    assert abs(s.values[-1] - s.values[-2]) < abs(s.values[1] - s.values[0]) + 1e-3


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.6, 2.0), st.floats(0.6, 2.0))
def test_mu_linear_in_phi(a, b, s1, s2):
    model = geo.flat_model("U(1)", lambda0=[1.0], connection=[0.2])
    p1, p2 = tr.TestFunction(sigma=s1, t0=0.5), tr.TestFunction(sigma=s2)
    # the combination lives on the wider window
    win = lambda m: (m * 2.0 - 20, m * 2.0 + 20)
    tabs = [sp.flat_spectrum(model, m, win(m)) for m in (3, 7)]
    combo = np.array([np.sum(t.copies * (a * p1.hat(t.eigenvalues - 2.0 * t.m) + b * p2.hat(t.eigenvalues - 2.0 * t.m)))
                      for t in tabs])
    v1, v2 = tr.mu(tabs, 2.0, p1).values, tr.mu(tabs, 2.0, p2).values
    assert np.allclose(a * v1 + b * v2, combo, atol=1e-12 * (1 + np.abs(combo).max()))


def test_symmetric_test_function_transform():
    phi = tr.TestFunction(sigma=0.8, t0=3.0, symmetric=True)
    xi = np.linspace(-4, 4, 9)
    t = np.linspace(-20, 20, 40001)
    num = np.array([np.trapezoid(phi(t) * np.exp(-1j * t * x), t) for x in xi])
    assert np.allclose(phi.hat(xi), num, atol=1e-10)
    assert phi.support_radius == pytest.approx(4.8)


def test_sigma_must_be_positive():
    with pytest.raises(DomainError):
        tr.TestFunction(sigma=0.0)


# ----------------------------------------------------------------- Weyl fit

def test_weyl_fit_synthetic_power():
    m = np.arange(10, 60)
    fit = tr.weyl_fit(tr.TraceSeries(1.0, m, 7.0 * m**2.0))
    assert fit.exponent == pytest.approx(2.0, abs=1e-10)
    assert fit.coefficient == pytest.approx(7.0, rel=1e-10)
    assert fit.residual < 1e-12 and fit.reliable


def test_weyl_fit_needs_twenty_levels():
    with pytest.raises(DomainError):
        tr.weyl_fit(tr.TraceSeries(1.0, np.arange(1, 10), np.ones(9)))


def test_weyl_fit_flags_oscillation():
    m = np.arange(1, 80)
    fit = tr.weyl_fit(tr.TraceSeries(1.0, m, 0.1 + np.cos(2.0 * m)))
    assert not fit.reliable


def test_flat_u1_exponent_zero():
    phi = tr.TestFunction(sigma=1.0)
    s = flat_series(geo.flat_model("U(1)", lambda0=[1.0]), 2.0, phi, range(50, 250, 5))
    assert abs(tr.weyl_fit(s).exponent) < 0.05


def test_flat_su2_exponent_one():
    phi = tr.TestFunction(sigma=1.0)
    s = flat_series(geo.flat_model("SU(2)"), 2.0, phi, range(40, 200, 4))
    assert tr.weyl_fit(s).exponent == pytest.approx(1.0, abs=0.05)


def test_calibration_invariant_under_scaling():
    model = geo.flat_model("U(1)", lambda0=[1.0])
    vol = red.flat_u1_volume(2.0, 1.0)
    phi = tr.TestFunction(sigma=1.0)
    phi3 = tr.TestFunction(sigma=1.0, scale=3.0)
    ms = range(100, 300, 5)
    c1 = tr.calibrate_cnd(flat_series(model, 2.0, phi, ms), vol, phi)
    c3 = tr.calibrate_cnd(flat_series(model, 2.0, phi3, ms), vol, phi3)
    assert c3 == pytest.approx(c1, rel=1e-12)
    assert c1 == pytest.approx(1.0, rel=0.01)


# ------------------------------------------------------------------ DFT, fits

def test_dft_single_cosine():
    M = 256
    m = np.arange(M)
    th0 = 2 * np.pi * 37 / M
    vals = 3.0 * np.cos(m * th0)
    # on-grid frequency: the transform is exactly c/2 at +-th0 and zero on other bins
    X = tr.dft(m, vals, 2 * np.pi * m / M)
    assert abs(X[37] - 1.5) < 1e-12 and abs(X[M - 37] - 1.5) < 1e-12
    assert np.max(np.abs(np.delete(X, [37, M - 37]))) < 1e-12
    peaks = sorted(tr.find_peaks(m, vals), key=lambda p: -p.amplitude)[:2]
    angles = sorted(p.angle for p in peaks)
    assert angles[0] == pytest.approx(th0, abs=1e-3)
    assert angles[1] == pytest.approx(2 * np.pi - th0, abs=1e-3)
    assert all(p.amplitude == pytest.approx(1.5, rel=1e-4) for p in peaks)


def test_flux_peak_at_holonomy_angle(flux_series):
    model, phi, s = flux_series
    orbits = red.find_periodic_orbits(model, 2.0)
    fit = tr.weyl_fit(s, 0)
    matches, peaks = tr.gutzwiller_fit(s, fit, orbits, phi)
    bin_width = 2 * np.pi / len(s.m)
    w1 = next(mt for mt, o in zip(matches, orbits) if o.winding == 1)
    assert w1.matched
    assert tr._angle_dist(w1.peak_angle, w1.predicted_angle) < bin_width
    # the winding-1 holonomy angle is the reduced action of the loop
    assert w1.predicted_angle % (2 * np.pi) == pytest.approx(
        (w1.orientation * 2 * np.pi * (np.sqrt(3) + 1 / 3)) % (2 * np.pi), abs=1e-8)


def test_zero_flux_peak_at_action_angle():
    model = geo.flat_model("U(1)", lambda0=[1.0])
    T = 2 * np.pi * 2 / np.sqrt(3)
    phi = tr.TestFunction(sigma=1.0, t0=T, symmetric=True)
    s = flat_series(model, 2.0, phi, range(50, 306))
    res = s.values - tr.weyl_fit(s, 0).predict(s.m)
    top = max(tr.find_peaks(s.m, res), key=lambda p: p.amplitude)
    action = (2 * np.pi * np.sqrt(3)) % (2 * np.pi)
    assert min(tr._angle_dist(top.angle, action), tr._angle_dist(top.angle, -action)) < 2 * np.pi / 256
    # T E is a different angle and carries no peak
    assert tr._angle_dist(top.angle, (T * 2.0) % (2 * np.pi)) > 0.5


def test_peak_stable_under_doubling(flux_series):
    model, phi, s = flux_series
    s2 = flat_series(model, 2.0, phi, range(50, 562))
    top = lambda ser: max(tr.find_peaks(ser.m, ser.values - tr.weyl_fit(ser, 0).predict(ser.m)),
                          key=lambda p: p.amplitude).angle
    assert tr._angle_dist(top(s), top(s2)) < 2 * np.pi / len(s.m)


# ------------------------------------------------------- generating function

def test_generating_function_geometric_series():
    m = np.arange(1, 3000)
    s = tr.TraceSeries(1.0, m, np.ones(len(m)))
    th = np.linspace(-np.pi, np.pi, 13)
    r = 0.9
    z = r * np.exp(1j * th)
    assert np.allclose(tr.generating_function(s, th, r), z / (1 - z), atol=1e-10)
    grid = np.linspace(-np.pi, np.pi, 1001)
    assert abs(grid[np.argmax(np.abs(tr.generating_function(s, grid, r)))]) < 1e-12


def test_r_sweep_exponent_linear_series():
    m = np.arange(1, 4000)
    s = tr.TraceSeries(1.0, m, m.astype(float))
    assert tr.r_sweep_exponent(s, 0.0) == pytest.approx(2.0, rel=0.1)


def test_damping_range():
    with pytest.raises(DomainError):
        tr.generating_function(tr.TraceSeries(1.0, [1], [1.0]), [0.0], 1.0)


def test_fourier_coefficients_reproduce_series(flux_series):
    _, _, s = flux_series
    r = 0.97
    n = 1024
    th = np.arange(n) * 2 * np.pi / n
    Y = tr.generating_function(s, th, r)
    for i in (0, 17, 255):
        m = s.m[i]
        assert tr.fourier_coefficient(Y, th, m) == pytest.approx(r**m * s.values[i], abs=1e-12)


def test_plateau_cutoff_shape():
    u = np.linspace(-2, 2, 401)
    rho = tr.plateau_cutoff(u, 1.0)
    assert np.all(rho[np.abs(u) <= 0.5] == 1) and np.all(rho[np.abs(u) >= 1] == 0)
    assert np.all((rho >= 0) & (rho <= 1))


@pytest.mark.parametrize("k", [0, 1, 2])
def test_extract_singularity_homogeneous(k):
    m = np.arange(1, 1025)
    s = tr.TraceSeries(1.0, m, m.astype(float) ** k)
    fit = tr.extract_singularity(s, 0.0, 0.5)
    assert fit.degree == pytest.approx(k, abs=0.1)
    assert fit.classical
    # the transform normalization makes the leading coefficient 1
    assert abs(fit.c0) == pytest.approx(1.0, rel=0.05)


def test_flat_su2_zero_time_degree():
    phi = tr.TestFunction(sigma=1.0)
    s = flat_series(geo.flat_model("SU(2)"), 2.0, phi, range(1, 257))
    fit = tr.extract_singularity(s, 0.0, 0.3)
    assert fit.degree == pytest.approx(1.0, abs=0.1)
