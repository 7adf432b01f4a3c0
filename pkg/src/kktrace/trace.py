"""Multiplicity distributions, generating functions and the trace-formula fits.

Conventions: ``phihat(xi) = int phi(t) exp(-i t xi) dt`` and

    mu(E, m, phi) = sum over bundle eigenvalues of phihat(lam - m E),

counting each bundle eigenvalue once (H_m multiplicity divided by d_m).  With
this choice the flat U(1) model has ``mu -> phi(0) Vol`` exactly, so the
calibrated constant there is 1.  An orbit of period T contributes an
oscillation ``Hol^m T# phi(T) / |det(I-P)|^{1/2}`` times a unit phase; the
weight ``2 pi phi(T)`` is the transform of the spectral weight at T, hence the
``T#/2pi`` normalization with ``2 pi phi(T)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erfc

from .errors import DomainError, IncompleteWindowError
from .spectrum import SpectrumTable

TAIL_SIGMAS = 8.0


@dataclass(frozen=True)
class TestFunction:
    """Gaussian ``exp(-(t - t0)^2 / 2 sigma^2) exp(i omega0 t)``, optionally mirrored at ``-t0``."""

    __test__ = False  # not a pytest class

    sigma: float = 1.0
    t0: float = 0.0
    omega0: float = 0.0
    symmetric: bool = False
    scale: float = 1.0
    family: str = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if self.family != "gaussian":
            raise DomainError(f"unsupported test-function family {self.family!r}")

    @property
    def support_radius(self) -> float:
        return 6 * self.sigma

    @property
    def hat_width(self) -> float:
        """Half-width of the window in frequency that holds all but a Gaussian tail."""
        return TAIL_SIGMAS / self.sigma

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        g = np.exp(-((t - self.t0) ** 2) / (2 * self.sigma**2))
        if self.symmetric:
            g = g + np.exp(-((t + self.t0) ** 2) / (2 * self.sigma**2))
        return self.scale * g * np.exp(1j * self.omega0 * t)

    def hat(self, xi):
        xi = np.asarray(xi, dtype=float) - self.omega0
        base = self.sigma * np.sqrt(2 * np.pi) * np.exp(-(self.sigma * xi) ** 2 / 2)
        phase = np.exp(-1j * self.t0 * xi)
        if self.symmetric:
            phase = phase + np.conj(phase)
        return self.scale * base * phase

    def tail_bound(self, density: float) -> float:
        """Bound on the omitted sum beyond ``hat_width`` for eigenvalue density ``density``."""
        amp = self.scale * self.sigma * np.sqrt(2 * np.pi) * (2 if self.symmetric else 1)
        # sum over both sides of amp * exp(-sigma^2 xi^2 / 2) with spacing 1/density
        integral = amp * np.sqrt(np.pi / 2) / self.sigma * erfc(TAIL_SIGMAS / np.sqrt(2))
        return 2 * (density * integral + amp * np.exp(-TAIL_SIGMAS**2 / 2))


@dataclass
class TraceSeries:
    E: float
    m: np.ndarray
    values: np.ndarray
    n: int = 1
    ell: int = 0
    d: int = 1
    tail: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=int)
        self.values = np.asarray(self.values)
        if not np.all(np.isfinite(self.values)):
            raise DomainError("trace series has non-finite values")

    @property
    def weyl_exponent(self) -> int:
        return self.n + self.ell - 1


def required_window(m: int, E: float, phi: TestFunction):
    return (m * E - phi.hat_width, m * E + phi.hat_width)


def mu(spectra: Sequence[SpectrumTable], E: float, phi: TestFunction, n: int = 1,
       ell: Optional[int] = None, d: Optional[int] = None) -> TraceSeries:
    """``mu(E, m, phi)`` for every table; each window must cover ``mE +- 8/sigma``."""
    ms, vals, tails = [], [], []
    for tab in spectra:
        lo, hi = required_window(tab.m, E, phi)
        if tab.window[0] > lo + 1e-12 or tab.window[1] < hi - 1e-12:
            raise IncompleteWindowError(
                f"m={tab.m}: window {tab.window} does not cover [{lo:.6g}, {hi:.6g}]", tab.m)
        sel = (tab.eigenvalues >= lo) & (tab.eigenvalues <= hi)
        lam = tab.eigenvalues[sel]
        w = tab.copies[sel]
        terms = w * phi.hat(lam - tab.m * E)
        value = np.sum(terms)
        density = np.sum(w) / (hi - lo) if len(lam) else 1.0
        tail = phi.tail_bound(2 * density)
        scale = max(abs(value), np.sum(np.abs(terms)), 1e-300)
        if tail > 1e-10 * scale and scale > 1e-12:
            raise IncompleteWindowError(f"m={tab.m}: tail bound {tail:.3g} too large", tab.m)
        ms.append(tab.m)
        vals.append(value)
        tails.append(tail)
    values = np.array(vals)
    if np.all(np.abs(values.imag) <= 1e-12 * np.maximum(1, np.abs(values.real))):
        values = values.real
    first = spectra[0]
    return TraceSeries(E, np.array(ms), values, n, 0 if ell is None else ell,
                       first.d_m if d is None else d, np.array(tails))


# ---------------------------------------------------------------- Weyl fit

@dataclass
class WeylFit:
    exponent: float
    coefficient: float
    residual: float
    halfwidth: float
    reliable: bool
    m_fit: np.ndarray = field(repr=False, default=None)

    def predict(self, m):
        return self.coefficient * np.asarray(m, dtype=float) ** self.exponent


def weyl_fit(series: TraceSeries, exponent: Optional[float] = None) -> WeylFit:
    """Least-squares fit ``mu ~ c m^e`` over the top half of the m-range."""
    m = series.m.astype(float)
    if len(m) < 20:
        raise DomainError("Weyl fit needs at least 20 levels")
    y = np.real(series.values)
    top = m >= np.median(m)
    mm, yy = m[top], y[top]
    if exponent is None:
        if np.any(yy <= 0):
            return WeylFit(np.nan, np.nan, np.inf, np.inf, False, mm)
        X = np.column_stack([np.ones(len(mm)), np.log(mm)])
        coef, res, *_ = np.linalg.lstsq(X, np.log(yy), rcond=None)
        pred = X @ coef
        dof = max(len(mm) - 2, 1)
        s2 = np.sum((np.log(yy) - pred) ** 2) / dof
        cov = s2 * np.linalg.inv(X.T @ X)
        e, c = float(coef[1]), float(np.exp(coef[0]))
        half = float(1.96 * np.sqrt(cov[1, 1]))
    else:
        e = float(exponent)
        c = float(np.mean(yy * mm ** (-e)))
        half = 0.0
    fit = c * mm**e
    rel = float(np.sqrt(np.mean((yy - fit) ** 2)) / max(np.sqrt(np.mean(yy**2)), 1e-300))
    return WeylFit(e, c, rel, half, rel <= 0.5, mm)


def calibrate_cnd(series: TraceSeries, vol: float, phi: TestFunction,
                  exponent: Optional[float] = None) -> float:
    """``C = coefficient / (phi(0) Vol)`` with the exponent fixed at ``n + ell - 1``."""
    e = series.weyl_exponent if exponent is None else exponent
    fit = weyl_fit(series, e)
    if not fit.reliable:
        raise DomainError("Weyl fit unreliable; calibration refused")
    return fit.coefficient / (np.real(phi(0.0)) * vol)


# ------------------------------------------------------- oscillatory part

def dft(m, values, thetas):
    """``X(theta) = (1/M) sum_m values_m exp(-i m theta)``."""
    m = np.asarray(m, dtype=float)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    return np.exp(-1j * np.outer(thetas, m)) @ np.asarray(values) / len(m)


@dataclass
class Peak:
    angle: float
    amplitude: float
    phase: float


def find_peaks(m, values, n_peaks: int = 6, oversample: int = 16, rel_threshold: float = 0.05):
    """Local maxima of ``|X(theta)|`` refined on the continuous transform."""
    M = len(m)
    grid = np.arange(oversample * M) * 2 * np.pi / (oversample * M)
    X = np.abs(dft(m, values, grid))
    peaks = []
    idx = np.nonzero((X >= np.roll(X, 1)) & (X > np.roll(X, -1)))[0]
    idx = idx[np.argsort(-X[idx])]
    for i in idx[:n_peaks]:
        if X[i] < rel_threshold * X.max():
            break
        th = _refine_peak(m, values, grid[i], 2 * np.pi / (oversample * M))
        val = dft(m, values, th)[0]
        peaks.append(Peak(float(th % (2 * np.pi)), float(abs(val)), float(np.angle(val))))
    return peaks


def _refine_peak(m, values, th, h):
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda t: -abs(dft(m, values, t)[0]), bounds=(th - h, th + h),
                          method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def _angle_dist(a, b):
    return abs((a - b + np.pi) % (2 * np.pi) - np.pi)


@dataclass
class OrbitMatch:
    orbit_id: int
    orientation: int  # +1: peak at arg Hol, -1: peak at -arg Hol
    predicted_angle: float
    peak_angle: float
    amplitude: float
    predicted_amplitude: float
    ratio: float
    maslov_phase: float
    matched: bool


def orbit_amplitude(orbit, phi: TestFunction) -> float:
    """``(T#/2pi) |2 pi phi(T)| / |det(I-P)|^{1/2}``."""
    det = orbit.det_I_minus_P
    return float(orbit.T_primitive / (2 * np.pi) * abs(2 * np.pi * phi(orbit.T)) / np.sqrt(abs(det)))


def gutzwiller_fit(series: TraceSeries, weyl: Optional[WeylFit], orbits, phi: TestFunction,
                   n_peaks: int = 8) -> tuple:
    """Match DFT peaks of the Weyl-subtracted residual to orbit holonomy angles.

    Returns ``(matches, peaks)``; each orbit is tested at both ``+arg Hol`` and
    ``-arg Hol`` and the orientation with the nearer peak is reported.
    """
    m = series.m
    y = np.real(series.values)
    res = y - (weyl.predict(m) if weyl is not None else 0.0)
    peaks = find_peaks(m, res, n_peaks)
    width = 2 * np.pi / len(m)
    matches = []
    for j, orb in enumerate(orbits):
        base = float(np.angle(orb.holonomy)) % (2 * np.pi)
        best = None
        for orient in (1, -1):
            target = (orient * base) % (2 * np.pi)
            # evaluate the transform at the nearest peak, or at the target itself
            near = min(peaks, key=lambda p: _angle_dist(p.angle, target)) if peaks else None
            if near is not None and _angle_dist(near.angle, target) <= width:
                ang, val = near.angle, dft(m, res, near.angle)[0]
            else:
                ang, val = target, dft(m, res, target)[0]
            dist = _angle_dist(ang, target)
            pred = orbit_amplitude(orb, phi)
            cand = OrbitMatch(j, orient, target, ang, float(abs(val)), pred,
                              float(abs(val) / pred) if pred else np.inf,
                              float(np.angle(val)), dist <= width and near is not None)
            if best is None or (cand.matched and not best.matched) or \
                    (cand.matched == best.matched and dist < _angle_dist(best.peak_angle, best.predicted_angle)):
                best = cand
        matches.append(best)
    return matches, peaks


# ------------------------------------------------------ generating function

def generating_function(series: TraceSeries, thetas, r: float):
    """Abel-damped ``sum_m mu_m r^m exp(i m theta)``."""
    if not 0 < r < 1:
        raise DomainError("damping r must lie in (0, 1)")
    m = series.m.astype(float)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    return np.exp(1j * np.outer(thetas, m)) @ (np.asarray(series.values) * r**m)


def fourier_coefficient(samples, thetas, m):
    """``(1/2pi) int exp(-i m theta) Y(theta) dtheta`` by the periodic trapezoid rule."""
    thetas = np.asarray(thetas, dtype=float)
    return np.mean(samples * np.exp(-1j * m * thetas))


def plateau_cutoff(u, width):
    """Smooth bump equal to 1 on ``|u| <= width/2`` and 0 beyond ``width``."""
    u = np.abs(np.asarray(u, dtype=float))
    out = np.zeros_like(u)
    inner = u <= width / 2
    out[inner] = 1.0
    mid = (u > width / 2) & (u < width)
    s = (u[mid] - width / 2) / (width / 2)
    f = lambda t: np.where(t > 0, np.exp(-1 / np.maximum(t, 1e-300)), 0.0)
    out[mid] = f(1 - s) / (f(1 - s) + f(s))
    return out


@dataclass
class SingularityFit:
    degree: float
    c0: complex
    residual: float
    classical: bool
    xi: np.ndarray = field(repr=False, default=None)
    transform: np.ndarray = field(repr=False, default=None)


def extract_singularity(series: TraceSeries, s0: float, width: float, r: float = 0.999,
                        n_theta: Optional[int] = None, xi_range=None) -> SingularityFit:
    """Degree and leading coefficient of the singularity of Y at ``s0``.

    Samples ``Y_r`` on a fine grid, localizes with a plateau cutoff, takes
    ``F(xi) = (1/2pi) int rho Y_r exp(-i xi theta) dtheta`` at integer ``xi``,
    undoes the damping, and fits ``|F| ~ |c0| xi^k``.
    """
    m_max = int(series.m.max())
    n_theta = n_theta or 1 << int(np.ceil(np.log2(8 * (m_max + 1))))
    thetas = np.arange(n_theta) * 2 * np.pi / n_theta
    Y = generating_function(series, thetas, r)
    rho = plateau_cutoff(_angle_dist(thetas, s0), width)
    F_all = np.fft.fft(rho * Y) / n_theta  # F(xi) at xi = 0..n_theta-1
    if xi_range is None:
        xi_range = (max(int(series.m.min()), m_max // 4), int(0.9 * m_max))
    xi = np.arange(xi_range[0], xi_range[1] + 1)
    F = F_all[xi] * r ** (-xi.astype(float)) * np.exp(1j * xi * s0)
    mag = np.abs(F)
    X = np.column_stack([np.ones(len(xi)), np.log(xi)])
    coef = np.linalg.lstsq(X, np.log(np.maximum(mag, 1e-300)), rcond=None)[0]
    k = float(coef[1])
    k_round = round(k)
    if abs(k - k_round) < 0.1:
        k_use = k_round
    else:
        k_use = k
    c0 = complex(np.mean(F * xi ** (-float(k_use))))
    pred = np.abs(c0) * xi**k_use
    rel = float(np.sqrt(np.mean((mag - pred) ** 2)) / max(np.sqrt(np.mean(mag**2)), 1e-300))
    return SingularityFit(k, c0, rel, rel <= 0.2, xi, F)


def r_sweep_exponent(series: TraceSeries, theta: float, rs=(0.9, 0.95, 0.99)) -> float:
    """Slope of ``log|Y_r(theta)|`` against ``log(1/(1-r))``."""
    vals = [abs(generating_function(series, [theta], r)[0]) for r in rs]
    x = np.log(1 / (1 - np.asarray(rs)))
    return float(np.polyfit(x, np.log(vals), 1)[0])
