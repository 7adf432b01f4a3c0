"""Frequency spectrum of the charged wave operator on the isotypic space H_m.

A stationary mode ``exp(-i lam t) v(x)`` of weight ``w`` (eigenvalue of the
charge along the connection direction) solves the quadratic problem

    lam^2 M v + lam B v - L v = 0,
    M = sqrt(h)/N,   B = i (g D + D g) with g = sqrt(h) beta / N,
    L = D^* (sqrt(h)/N)(N^2/h - beta^2) D + N sqrt(h) (c_m + V),

with ``D = d/dx - i a(x) w`` and ``c_m`` the Casimir value.  For constant
coefficients this gives ``lam = beta k~ +- sqrt(k~^2 + c_m + V)`` with
``k~ = k - alpha w``, matching the reduced Hamiltonian.

Solvers: a Hermitian eigenproblem when ``B = 0``, a Hermitian-definite
linearization in ``1/lam`` when ``L`` is positive definite, and a Cholesky
companion form otherwise.

Multiplicities in a :class:`SpectrumTable` are multiplicities on H_m, which
carries ``d_m`` copies of every bundle eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from . import geometry as geo
from . import lie
from .errors import (ConfigurationError, IncompleteWindowError, ResolutionError,
                     ThresholdNotFound)

CLUSTER_TOL = 1e-7
NONREAL_TOL = 1e-6


@dataclass(frozen=True)
class ModeFunction:
    m: int
    k: int
    lam: complex
    coeffs: np.ndarray  # Fourier coefficients on modes kvec
    kvec: np.ndarray
    weight: float

    def values(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.outer(x, self.kvec)) @ self.coeffs

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.outer(x, self.kvec)) @ (1j * self.kvec * self.coeffs)


@dataclass
class SpectrumTable:
    m: int
    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    window: tuple
    method: str
    d_m: int = 1
    nonreal: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    resolution_params: dict = field(default_factory=dict)
    modes: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        order = np.argsort(self.eigenvalues, kind="stable")
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)[order]
        self.multiplicities = np.asarray(self.multiplicities, dtype=int)[order]

    @property
    def copies(self) -> np.ndarray:
        """Bundle multiplicities (H_m multiplicity divided by d_m)."""
        return self.multiplicities // self.d_m

    @property
    def count(self) -> int:
        return int(self.multiplicities.sum())

    def rows(self):
        return [(self.m, float(l), int(k), self.method)
                for l, k in zip(self.eigenvalues, self.multiplicities)]


# ------------------------------------------------------------------ helpers

def _connection_direction(model: geo.Model):
    """Unit direction ``e`` and scalar series ``a`` with ``A(x) = a(x) e``."""
    conn = model.connection
    if model.abelian:
        return np.ones(1), conn.components[0]
    e = conn.fixed_direction()
    if e is None:
        if not any(np.any(c.to_dict()["cos"]) or np.any(c.to_dict()["sin"]) or c.const
                   for c in conn.components):
            e = np.eye(model.dim)[-1]
        else:
            raise ConfigurationError("spectrum needs a connection with a fixed Lie-algebra direction")
    L = model.circumference
    comps = conn.components
    const = sum(ei * c.const for ei, c in zip(e, comps))
    nc = max(len(c.cos) for c in comps)
    ns = max(len(c.sin) for c in comps)
    cos = [sum(ei * (c.cos[k] if k < len(c.cos) else 0.0) for ei, c in zip(e, comps)) for k in range(nc)]
    sin = [sum(ei * (c.sin[k] if k < len(c.sin) else 0.0) for ei, c in zip(e, comps)) for k in range(ns)]
    return e, geo.TrigSeries(const, cos, sin, L)


def level_data(model: geo.Model, m: int):
    """``(d_m, c_m, weights)`` at level ``m``."""
    g = model.group
    w = lie.OrbitWeight(model.lambda0, m)
    return lie.weyl_dimension(g, w), lie.casimir_eigenvalue(g, w), lie.fiber_weights(g, w)


def _cluster(values, tol=CLUSTER_TOL):
    values = np.sort(np.asarray(values, dtype=float))
    if len(values) == 0:
        return np.zeros(0), np.zeros(0, dtype=int)
    groups = [[values[0]]]
    for v in values[1:]:
        if v - groups[-1][-1] <= tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return np.array([np.mean(g) for g in groups]), np.array([len(g) for g in groups])


# -------------------------------------------------------------- flat models

def flat_parameters(model: geo.Model):
    """``(beta, alpha, V)`` for a constant-coefficient model with N = h = 1."""
    geom = model.geometry
    for name, s, val in (("lapse", geom.lapse, 1.0), ("metric", geom.metric, 1.0)):
        if not s.is_constant or abs(s.const - val) > 1e-15:
            raise ConfigurationError(f"flat spectrum needs constant {name} = 1")
    if not geom.shift.is_constant or not geom.potential.is_constant or not model.connection.is_constant:
        raise ConfigurationError("flat spectrum needs constant shift, potential and connection")
    beta = geom.shift.const
    if abs(beta) >= 1:
        raise ConfigurationError("|beta| must be below 1")
    e, a = _connection_direction(model)
    return beta, a.const, geom.potential.const


def _plus_band(beta, c, lo, hi):
    """Intervals of ``kt`` with ``lo <= beta kt + sqrt(kt^2 + c) <= hi`` (c > 0)."""
    def sublevel(lam):
        # (1 - beta^2) kt^2 + 2 beta lam kt + c - lam^2 <= 0 and lam >= beta kt
        a2 = 1 - beta**2
        disc = (beta * lam) ** 2 - a2 * (c - lam**2)
        if disc < 0:
            return None
        r = np.sqrt(disc)
        k1, k2 = (-beta * lam - r) / a2, (-beta * lam + r) / a2
        if lam < beta * k1 or lam < beta * k2:
            return None
        return k1, k2
    top = sublevel(hi)
    if top is None:
        return []
    bot = sublevel(lo)
    if bot is None:
        return [top]
    return [(top[0], bot[0]), (bot[1], top[1])]


def flat_spectrum(model: geo.Model, m: int, window, k_cutoff: Optional[int] = None) -> SpectrumTable:
    """Closed-form spectrum of a constant-coefficient model, with exact degeneracy counts."""
    beta, alpha, V = flat_parameters(model)
    lo, hi = float(window[0]), float(window[1])
    d_m, c_m, weights = level_data(model, m)
    c = c_m + V
    L = model.circumference
    scale = 2 * np.pi / L
    found_k, found_kt, found_sign, found_lam = [], [], [], []
    nonreal = []

    def accept(k, sign):
        kt = (k - shift) * scale
        lam = beta * kt + sign * np.sqrt(np.maximum(kt**2 + c, 0.0))
        ok = (kt**2 + c >= 0) & (lam >= lo) & (lam <= hi)
        found_k.append(k[ok])
        found_kt.append(kt[ok])
        found_sign.append(np.full(int(ok.sum()), sign))
        found_lam.append(lam[ok])

    for w in weights:
        shift = alpha * w
        if c > 0:
            for sign in (1, -1):
                # the minus branch at kt is minus the plus branch at -kt
                bands = _plus_band(beta, c, lo, hi) if sign == 1 else \
                    [(-k2, -k1) for k1, k2 in _plus_band(beta, c, -hi, -lo)]
                for k1, k2 in bands:
                    accept(np.arange(np.ceil(k1 / scale + shift - 1e-9),
                                     np.floor(k2 / scale + shift + 1e-9) + 1), sign)
        else:
            kb_hi = (max(abs(lo), abs(hi)) + np.sqrt(-c)) / ((1 - abs(beta)) * scale) + 2
            k = np.arange(np.floor(shift - kb_hi), np.ceil(shift + kb_hi) + 1)
            kt = (k - shift) * scale
            neg = kt**2 + c < 0
            val = beta * kt[neg] + 1j * np.sqrt(-(kt[neg] ** 2 + c))
            inwin = (val.real >= lo) & (val.real <= hi)
            nonreal.extend(val[inwin])
            nonreal.extend(np.conj(val[inwin]))
            accept(k, 1)
            accept(k, -1)
    k_all = np.concatenate(found_k) if found_k else np.zeros(0)
    kt_all = np.concatenate(found_kt) if found_kt else np.zeros(0)
    sign_all = np.concatenate(found_sign) if found_sign else np.zeros(0)
    lam_all = np.concatenate(found_lam) if found_lam else np.zeros(0)
    kmax_needed = int(np.max(np.abs(k_all))) if len(k_all) else 0
    # exact degeneracy classes: same |kt| (beta = 0) or same kt, same branch
    kkey = np.abs(kt_all) if beta == 0 else kt_all
    keys = np.column_stack([np.round(kkey * 1e9), sign_all])
    _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    if k_cutoff is not None and kmax_needed > k_cutoff:
        raise IncompleteWindowError(f"window needs |k| up to {kmax_needed} > cutoff {k_cutoff}", m)
    lams = lam_all[first]
    mult = counts.astype(int) * d_m
    return SpectrumTable(m, lams, mult, (lo, hi), "closed-form", d_m,
                         np.array(nonreal, dtype=complex),
                         {"k_max": kmax_needed, "beta": beta, "alpha": alpha, "casimir": c_m})


# --------------------------------------------------------- discretization

def _fourier_coeffs(values, n):
    """Coefficients c_{-n..n} of samples on a uniform periodic grid."""
    N = len(values)
    if N < 2 * n + 1:
        raise ResolutionError("sampling grid too coarse for requested coefficients")
    c = np.fft.fft(values) / N
    idx = np.arange(-n, n + 1)
    return c[idx % N]


def _toeplitz(coeffs, K):
    n = (len(coeffs) - 1) // 2
    kvec = np.arange(K)
    diff = kvec[:, None] - kvec[None, :]
    return coeffs[n + diff]


@dataclass
class _Operators:
    M: np.ndarray
    B: np.ndarray
    L: np.ndarray
    kvec: np.ndarray
    weight: float


def assemble(model: geo.Model, m: int, weight: float, K: int) -> _Operators:
    """Galerkin matrices on the Fourier modes ``-K/2 .. K/2 - 1``."""
    geom = model.geometry
    Lc = model.circumference
    scale = 2 * np.pi / Lc
    kvec = np.arange(-(K // 2), K - K // 2)
    ng = 4 * K
    xs = np.arange(ng) * Lc / ng
    N, h, beta, V = geom.lapse(xs), geom.metric(xs), geom.beta(xs), geom.potential(xs)
    _, a = _connection_direction(model)
    _, c_m, _ = level_data(model, m)
    sh = np.sqrt(h)
    T = lambda f: _toeplitz(_fourier_coeffs(f, K), K)
    Mm = T(sh / N)
    G = T(sh * beta / N)
    C = T(sh / N * (N**2 / h - beta**2))
    P = T(N * sh * (c_m + V))
    av = a(xs)
    if np.ptp(av) == 0:
        # constant connection: D is diagonal, so products reduce to scalings
        d = 1j * (scale * kvec - weight * av[0])
        B = 1j * (G * d[None, :] + d[:, None] * G)
        Lop = d.conj()[:, None] * C * d[None, :] + P
    else:
        Dm = np.diag(1j * scale * kvec) - 1j * weight * T(av)
        B = 1j * (G @ Dm + Dm @ G)
        Lop = Dm.conj().T @ C @ Dm + P
    herm = lambda X: (X + X.conj().T) / 2
    return _Operators(herm(Mm), herm(B), herm(Lop), kvec, weight)


def _solve(ops: _Operators, need_vectors: bool, window=None):
    M, B, L = ops.M, ops.B, ops.L
    K = len(ops.kvec)
    if np.max(np.abs(B)) < 1e-14 * max(1.0, np.max(np.abs(L))):
        subset = None
        if window is not None and (window[0] > 0 or window[1] < 0):
            # lambda^2 = mu, so only this mu band can land in the window
            a, b = sorted((window[0] ** 2, window[1] ** 2))
            subset = (a * (1 - 1e-9), b * (1 + 1e-9))
        if need_vectors:
            mu, vec = sla.eigh(L, M, subset_by_value=subset)
        else:
            mu = sla.eigh(L, M, subset_by_value=subset, eigvals_only=True)
        root = np.sqrt(mu.astype(complex))
        lam = np.concatenate([root, -root])
        vecs = np.concatenate([vec, vec], axis=1) if need_vectors else None
        return lam, vecs
    try:
        sla.cho_factor(L)
        definite = True
    except sla.LinAlgError:
        definite = False
    if definite:
        # [[B, M], [M, 0]] z = (1/lam) diag(L, M) z is a Hermitian-definite pencil
        Z = np.zeros((K, K))
        A = np.block([[B, M], [M, Z]])
        Bd = np.block([[L, Z], [Z, M]])
        if need_vectors:
            mu, vec = sla.eigh(A, Bd)
            vec = vec[:K]
            vec = vec / np.linalg.norm(vec, axis=0)
        else:
            mu = sla.eigh(A, Bd, eigvals_only=True)
            vec = None
        return (1.0 / mu).astype(complex), vec
    # companion form with M^{-1} applied: [v; lam v] -> [lam v; M^{-1}(L v - B lam v)]
    cho = sla.cho_factor(M)
    A = np.block([[np.zeros((K, K)), np.eye(K)],
                  [sla.cho_solve(cho, L), -sla.cho_solve(cho, B)]])
    if need_vectors:
        lam, vec = np.linalg.eig(A)
        vec = vec[:K]
        vec = vec / np.linalg.norm(vec, axis=0)
    else:
        lam = np.linalg.eigvals(A)
        vec = None
    return lam, vec


def _window_split(lam, lo, hi):
    real = np.abs(lam.imag) <= NONREAL_TOL
    inwin = (lam.real >= lo) & (lam.real <= hi)
    return real & inwin, (~real) & inwin


def generic_spectrum_1d(model: geo.Model, m: int, window, grid_size: int = 256,
                        refine: bool = True, return_modes: bool = False) -> SpectrumTable:
    """Discretized spectrum via Fourier-Galerkin assembly and a dense eigensolve.

    With ``refine`` the window is recomputed at twice the grid; differing
    eigenvalue counts raise :class:`IncompleteWindowError`.
    """
    lo, hi = float(window[0]), float(window[1])
    d_m, c_m, weights = level_data(model, m)
    grids = [grid_size, 2 * grid_size] if refine else [grid_size]
    results = []
    for K in grids:
        reals, nonreals, modes = [], [], []
        for w in weights:
            ops = assemble(model, m, w, K)
            lam, vecs = _solve(ops, return_modes and K == grids[-1], (lo, hi))
            rmask, nmask = _window_split(lam, lo, hi)
            reals.append(lam[rmask].real)
            nonreals.append(lam[nmask])
            if vecs is not None:
                for i in np.nonzero(rmask | nmask)[0]:
                    modes.append(ModeFunction(m, int(ops.kvec[np.argmax(np.abs(vecs[:, i]))]),
                                              complex(lam[i]), vecs[:, i].copy(), ops.kvec, w))
        results.append((np.sort(np.concatenate(reals)),
                        np.concatenate(nonreals) if nonreals else np.zeros(0, complex), modes))
    fine = results[-1]
    params = {"grid_size": grids[-1], "casimir": c_m, "certified": refine}
    if refine:
        coarse = results[0]
        if len(coarse[0]) != len(fine[0]) or len(coarse[1]) != len(fine[1]):
            raise IncompleteWindowError(
                f"m={m}: window count changes under refinement ({len(coarse[0])} vs {len(fine[0])})", m)
        err = float(np.max(np.abs(coarse[0] - fine[0]))) if len(fine[0]) else 0.0
        params["refinement_error"] = err
    lams, mult = _cluster(fine[0])
    return SpectrumTable(m, lams, mult * d_m, (lo, hi), "discretized", d_m, fine[1], params,
                         fine[2] if return_modes else None)


# --------------------------------------------------------------- energy form

def _energy_on_grid(model, mode, c_m, ng):
    geom = model.geometry
    Lc = model.circumference
    xs = np.arange(ng) * Lc / ng
    N, h, beta, V = geom.lapse(xs), geom.metric(xs), geom.beta(xs), geom.potential(xs)
    _, a = _connection_direction(model)
    scale = 2 * np.pi / Lc
    E = np.exp(1j * scale * np.outer(xs, mode.kvec))
    v = E @ mode.coeffs
    dv = E @ (1j * scale * mode.kvec * mode.coeffs) - 1j * mode.weight * a(xs) * v
    sh = np.sqrt(h)
    lam = mode.lam
    dens = (abs(lam) ** 2 * sh / N * abs(v) ** 2
            + sh / N * (N**2 / h - beta**2) * abs(dv) ** 2
            + N * sh * (c_m + V) * abs(v) ** 2)
    return float(np.sum(dens) * Lc / ng)


def energy_form(model: geo.Model, mode: ModeFunction) -> float:
    """Conserved energy of a real-frequency mode; zero for non-real frequencies."""
    if abs(np.imag(mode.lam)) > NONREAL_TOL:
        return 0.0
    if not np.any(mode.coeffs):
        return 0.0
    _, c_m, _ = level_data(model, mode.m)
    K = len(mode.kvec)
    q1 = _energy_on_grid(model, mode, c_m, 2 * K)
    q2 = _energy_on_grid(model, mode, c_m, 4 * K)
    if abs(q1 - q2) > 1e-8 * max(1.0, abs(q2)):
        raise ResolutionError(f"energy quadrature unconverged ({q1} vs {q2})")
    return q2


def normalize_mode(model: geo.Model, mode: ModeFunction) -> ModeFunction:
    Q = energy_form(model, mode)
    if Q <= 0:
        return mode
    return ModeFunction(mode.m, mode.k, mode.lam, mode.coeffs / np.sqrt(Q), mode.kvec, mode.weight)


@dataclass
class ThresholdReport:
    m0: int
    per_level: dict
    witness: Optional[dict]


def positivity_threshold(model: geo.Model, m_max: int, window=None, grid_size: int = 64,
                         m_min: int = 1) -> ThresholdReport:
    """Smallest m such that every level in ``[m, m_max]`` has real frequencies and Q > 0."""
    per = {}
    for m in range(m_min, m_max + 1):
        d_m, c_m, _ = level_data(model, m)
        win = window if window is not None else (-np.sqrt(c_m) - 10, np.sqrt(c_m) + 10)
        tab = generic_spectrum_1d(model, m, win, grid_size, refine=True, return_modes=True)
        Qs = [energy_form(model, md) for md in tab.modes if abs(md.lam.imag) <= NONREAL_TOL]
        per[m] = {"n_nonreal": int(len(tab.nonreal)), "min_Q": float(min(Qs)) if Qs else np.inf,
                  "n_modes": len(tab.modes), "ok": len(tab.nonreal) == 0 and (not Qs or min(Qs) > 0)}
    if not per[m_max]["ok"]:
        raise ThresholdNotFound(f"level {m_max} still fails positivity", per)
    m0 = m_max
    while m0 - 1 >= m_min and per[m0 - 1]["ok"]:
        m0 -= 1
    witness = None
    if m0 > m_min:
        witness = {"m": m0 - 1, **per[m0 - 1]}
    return ThresholdReport(m0, per, witness)


# ----------------------------------------------------------- factorization

@dataclass
class FactorizationReport:
    m: int
    d_m: int
    exact: bool
    rows: list  # (lam, H_m multiplicity, bundle multiplicity)
    offending: list


def hm_spectrum_enumerated(model: geo.Model, m: int, window) -> SpectrumTable:
    """H_m spectrum of a flat model by enumerating Peter-Weyl modes (k, left weight, right weight).

    The wave operator acts through the left weight only, so each right weight
    contributes an identical copy.
    """
    beta, alpha, V = flat_parameters(model)
    d_m, c_m, weights = level_data(model, m)
    lo, hi = window
    scale = 2 * np.pi / model.circumference
    c = c_m + V
    kmax = int(np.ceil((max(abs(lo), abs(hi)) / (1 - abs(beta)) + abs(alpha) * np.max(np.abs(weights))) / scale)) + 2
    k = np.arange(-kmax, kmax + 1)
    lams = []
    for w in weights:
        kt = (k - alpha * w) * scale
        for sign in (1, -1):
            lam = beta * kt + sign * np.sqrt(kt**2 + c + 0j)
            ok = (np.abs(lam.imag) < 1e-14) & (lam.real >= lo) & (lam.real <= hi)
            for _right in range(d_m):
                lams.append(lam.real[ok])
    vals, mult = _cluster(np.concatenate(lams), 1e-9)
    return SpectrumTable(m, vals, mult, (lo, hi), "enumerated", d_m)


def factorization_check(model: geo.Model, m: int, window=None, grid_size: int = 64) -> FactorizationReport:
    """Compare H_m multiplicities with ``d_m`` times the scalar bundle-problem multiplicities."""
    d_m, c_m, _ = level_data(model, m)
    if window is None:
        window = (-np.sqrt(c_m) - 6, np.sqrt(c_m) + 6)
    hm = hm_spectrum_enumerated(model, m, window)
    bundle = generic_spectrum_1d(model, m, window, grid_size, refine=True)
    rows, bad = [], []
    bl, bm = bundle.eigenvalues, bundle.copies
    used = np.zeros(len(bl), dtype=bool)
    for lam, mult in zip(hm.eigenvalues, hm.multiplicities):
        j = np.argmin(np.abs(bl - lam)) if len(bl) else -1
        bmult = int(bm[j]) if j >= 0 and abs(bl[j] - lam) < 1e-6 else 0
        if j >= 0 and bmult:
            used[j] = True
        rows.append((float(lam), int(mult), bmult))
        if mult != d_m * bmult:
            bad.append(float(lam))
    for j in np.nonzero(~used)[0]:
        rows.append((float(bl[j]), 0, int(bm[j])))
        bad.append(float(bl[j]))
    return FactorizationReport(m, d_m, not bad, rows, bad)
