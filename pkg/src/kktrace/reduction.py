"""Periodic orbits, Poincare data, energy-surface volume and holonomy.

Orbits live on the reduced phase space ``T*S^1 x O``.  A periodic orbit of
winding ``w`` satisfies ``Phi_T(z0) = z0 + w L e_x``; the fiber drift ``g`` is
the stabilizer element accumulated along it.  The fiber coordinate used by the
flow is the inverse group coordinate, so the drift angle enters the holonomy
with a minus sign: for U(1) the holonomy is ``exp(i (T E - q0 dtheta))``,
which equals ``exp(i oint p dx)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import dynamics as dyn
from . import geometry as geo
from . import lie
from .errors import ConditioningError, DomainError, PrecisionNotReached

RESIDUAL_TOL = 1e-8
DEDUP_TOL = 1e-6
FAMILY_TOL = 1e-7
DEGENERATE_TOL = 1e-10


def moment_map(pt: geo.PhasePoint) -> np.ndarray:
    """Charge covector of a phase point (the fiber momentum in the trivialized gauge)."""
    return np.array(pt.q, dtype=float, copy=True)


@dataclass
class PeriodicOrbit:
    T: float
    T_primitive: float
    start: geo.PhasePoint
    drift_g: np.ndarray
    det_I_minus_P: float
    holonomy: complex
    component_kind: str
    winding: int = 0
    energy: float = 0.0
    residual: float = 0.0
    fiber_drift: float = 0.0
    det_spread: float = 0.0
    family_dimension: int = 1
    degenerate: bool = False
    warnings: list = field(default_factory=list)
    monodromy: Optional[np.ndarray] = field(default=None, repr=False)
    model: Optional[geo.Model] = field(default=None, repr=False)

    @property
    def repetition(self) -> int:
        return int(round(self.T / self.T_primitive)) if self.T_primitive > 0 else 1

    def repeat(self, k: int) -> "PeriodicOrbit":
        """The k-fold traversal: ``T -> kT``, ``g -> g^k``, holonomy to the k-th power."""
        if k < 1:
            raise DomainError("repetition count must be positive")
        M = np.linalg.matrix_power(self.monodromy, k) if self.monodromy is not None else None
        orb = PeriodicOrbit(
            T=k * self.T, T_primitive=self.T_primitive, start=self.start,
            drift_g=k * np.asarray(self.drift_g), det_I_minus_P=np.nan,
            holonomy=self.holonomy**k, component_kind=self.component_kind,
            winding=k * self.winding, energy=self.energy, residual=self.residual,
            fiber_drift=k * self.fiber_drift, family_dimension=self.family_dimension,
            monodromy=M, model=self.model)
        if M is not None and self.model is not None:
            det, spread = poincare_det_pair(orb, M)
            orb.det_I_minus_P, orb.det_spread = det, spread
            orb.degenerate = abs(det) < DEGENERATE_TOL and _reduced_dim(self.model) > 2
        return orb

    def to_record(self) -> dict:
        return {
            "T": self.T, "T_primitive": self.T_primitive,
            "start": {"x": self.start.x, "p": self.start.p, "q": self.start.q.tolist()},
            "winding": self.winding, "energy": self.energy,
            "drift_angles": np.atleast_1d(self.drift_g).tolist(),
            "det_I_minus_P": self.det_I_minus_P,
            "holonomy": [float(np.real(self.holonomy)), float(np.imag(self.holonomy))],
            "component_kind": self.component_kind, "residual": self.residual,
            "warnings": list(self.warnings),
        }


# ----------------------------------------------------------------- holonomy

def drift_to_torus(model: geo.Model, psi: float) -> np.ndarray:
    """Stabilizer torus angles of the drift element for an accumulated axis angle ``psi``."""
    g = model.group
    w = model.weight
    r = model.orbit_radius
    hw = w.highest_weight
    if g.abelian:
        label = hw[0]
    else:
        label = lie.coroot_pairing(g, hw, g.positive_roots[0])
    if label == 0:
        raise DomainError("zero charge has no stabilizer torus phase")
    return np.array([-r * psi / label])


def orbit_holonomy(orbit: PeriodicOrbit, E: float, group: lie.GroupData,
                   weight: lie.OrbitWeight) -> complex:
    """``chi(g) exp(i T E)`` for the drift element ``g`` of the orbit."""
    angles = np.atleast_1d(np.asarray(orbit.drift_g, dtype=float))
    if angles.shape != (group.rank,):
        raise DomainError("drift element is not a stabilizer torus element")
    return lie.stabilizer_character(group, weight, angles) * np.exp(1j * orbit.T * E)


# -------------------------------------------------------- Poincare quotient

def _reduced_dim(model: geo.Model) -> int:
    return 2 if model.abelian else 4


def leaf_basis(model: geo.Model, z) -> np.ndarray:
    """Orthonormal basis (columns) of the symplectic leaf tangent space at ``z``."""
    z = np.asarray(z, dtype=float)
    n = len(z)
    cols = [np.eye(n)[0], np.eye(n)[1]]
    if not model.abelian:
        q = z[2:] / np.linalg.norm(z[2:])
        t1 = np.cross(q, [1.0, 0.0, 0.0])
        if np.linalg.norm(t1) < 0.5:
            t1 = np.cross(q, [0.0, 1.0, 0.0])
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(q, t1)
        for t in (t1, t2):
            v = np.zeros(n)
            v[2:] = t
            cols.append(v)
    return np.column_stack(cols)


def quotient_determinant(M, flow, grad, poisson, rng=None):
    """``det(I - P)`` of ``M`` on ``ker(grad) / span(flow)`` by two constructions.

    ``M`` maps a symplectic vector space to itself (coordinates with invertible
    Poisson matrix ``poisson``), fixes ``flow`` and preserves ``grad``.
    Returns ``(det_a, det_b)`` from the symplectic complement and from a random
    complement; they agree for an exact monodromy.
    """
    M = np.asarray(M, dtype=float)
    f = np.asarray(flow, dtype=float)
    g = np.asarray(grad, dtype=float)
    k = len(f)
    if k == 2:
        return 1.0, 1.0
    nf, ng = np.linalg.norm(f), np.linalg.norm(g)
    if nf < 1e-8 or ng < 1e-8:
        raise ConditioningError("flow or gradient vanishes; quotient undefined")
    omega = np.linalg.inv(poisson)
    # a) symplectic complement of span(flow, gradient direction)
    C = np.vstack([omega @ f, omega @ g])
    _, s, vt = np.linalg.svd(C)
    if s[-1] < 1e-8 * s[0]:
        raise ConditioningError("flow and gradient spans are nearly parallel")
    S1 = vt[2:].T
    det_a = _projected_det(M, f, g, S1)
    # b) random complement of the flow inside ker(grad)
    rng = np.random.default_rng(2024) if rng is None else rng
    _, _, vt = np.linalg.svd(g[None, :])
    kerg = vt[1:].T
    R = kerg @ rng.normal(size=(k - 1, k - 2))
    S2 = np.linalg.qr(R)[0]
    det_b = _projected_det(M, f, g, S2)
    return det_a, det_b


def _projected_det(M, f, g, S):
    """Matrix of ``a -> M a`` on ``S`` modulo ``f``, then ``det(I - P)``."""
    basis = np.column_stack([S, f])
    cond = np.linalg.cond(basis)
    if cond > 1e8:
        raise ConditioningError("complement is nearly parallel to the flow")
    coords = np.linalg.lstsq(basis, M @ S, rcond=None)[0]
    P = coords[:-1]
    return float(np.linalg.det(np.eye(P.shape[0]) - P))


def poincare_det_pair(orbit: PeriodicOrbit, monodromy=None):
    model = orbit.model
    M = orbit.monodromy if monodromy is None else np.asarray(monodromy, dtype=float)
    if model is None or M is None:
        raise DomainError("orbit needs its model and a monodromy matrix")
    if _reduced_dim(model) == 2:
        return 1.0, 0.0
    z0 = orbit.start.as_state()
    B = leaf_basis(model, z0)
    MB = B.T @ M @ B
    PiB = B.T @ dyn.poisson_tensor(model, z0) @ B
    f = B.T @ dyn.vector_field(model, z0)
    g = B.T @ geo.gradient_vector(model, z0)
    a, b = quotient_determinant(MB, f, g, PiB)
    return a, abs(a - b)


def poincare_det(orbit: PeriodicOrbit, monodromy=None) -> float:
    """``det(I - P)`` of the linearized Poincare map on the reduced energy surface."""
    return poincare_det_pair(orbit, monodromy)[0]


# ------------------------------------------------------------ orbit finding

def _momentum_roots(model: geo.Model, x, q, E):
    """Base momenta ``p`` with ``H(x, p, q) = E`` (vectorized over x and q)."""
    geom = model.geometry
    N, a, b = geom.lapse(x), geom.inv_metric(x), geom.beta(x)
    A = model.connection(x)
    q = np.asarray(q, dtype=float)
    Aq = np.sum(A * q, axis=-1)
    Q2 = np.sum(q * q, axis=-1)
    c2 = N**2 * a - b**2
    c1 = 2 * E * b
    c0 = N**2 * Q2 - E**2
    disc = c1**2 - 4 * c2 * c0
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    um = (-c1 - sq) / (2 * c2)
    up = (-c1 + sq) / (2 * c2)
    return np.where(ok, um + Aq, np.nan), np.where(ok, up + Aq, np.nan)


def _xdot(model, z):
    return geo.gradient_vector(model, z)[1]


def return_time(model: geo.Model, z0, winding: int, T_max: float, tol=1e-11):
    """First time the flow from ``z0`` returns to ``x0 + w L`` moving in the starting x-direction."""
    z0 = np.asarray(z0, dtype=float)
    L = model.circumference
    target = z0[0] + winding * L
    direction = np.sign(_xdot(model, z0))
    if direction == 0:
        return None
    t_total = 0.0
    z = z0
    for _ in range(64):
        ev = lambda y: y[0] - target
        try:
            st = dyn.integrate(model, geo.PhasePoint.from_state(z), T_max - t_total, tol,
                               event=ev)
        except Exception:
            return None
        if st.event_time is None:
            return None
        t_total += st.event_time
        z = st.point.as_state()
        if np.sign(_xdot(model, z)) == direction:
            return t_total
        if t_total >= T_max:
            return None
    return None


def _shoot(model, unknowns, winding, qfix, E, zref, fref, tol):
    abelian = model.abelian
    if abelian:
        z0 = np.concatenate([unknowns[:2], qfix])
    else:
        z0 = unknowns[:-1].copy()
    T = unknowns[-1]
    st = dyn.integrate(model, geo.PhasePoint.from_state(z0), T, tol,
                       track_monodromy=True, project=False)
    zT = st.point.as_state()
    n = len(z0)
    shift = np.zeros(n)
    shift[0] = winding * model.circumference
    R1 = zT - z0 - shift
    gH = geo.gradient_vector(model, z0)
    R2 = geo.hamiltonian(model, z0[0], z0[1], z0[2:]) - E
    R3 = (z0 - zref) @ fref
    FT = dyn.vector_field(model, zT)
    M = st.monodromy
    J1 = np.column_stack([M - np.eye(n), FT])
    J2 = np.concatenate([gH, [0.0]])
    J3 = np.concatenate([fref, [0.0]])
    rows_R = [R1, [R2], [R3]]
    rows_J = [J1, J2[None], J3[None]]
    if not abelian:
        rows_R.append([z0[2:] @ z0[2:] - model.orbit_radius**2])
        rows_J.append(np.concatenate([[0.0, 0.0], 2 * z0[2:], [0.0]])[None])
    R = np.concatenate([np.atleast_1d(r) for r in rows_R])
    Jf = np.vstack(rows_J)
    if abelian:
        # the charge is frozen: drop its rows and columns
        R = np.delete(R, range(2, n))
        Jf = np.delete(Jf[:, [0, 1, n]], range(2, n), axis=0)
    return R, Jf, st


def _newton(model, z0, T0, winding, E, tol, newton_tol, max_iter=40):
    z0 = np.asarray(z0, dtype=float)
    qfix = z0[2:].copy()
    zref = z0.copy()
    fref = dyn.vector_field(model, zref)
    if model.abelian:
        v = np.array([z0[0], z0[1], T0])
    else:
        v = np.concatenate([z0, [T0]])
    R, J, st = _shoot(model, v, winding, qfix, E, zref, fref, tol)
    for _ in range(max_iter):
        rn = np.linalg.norm(R)
        if rn < newton_tol:
            break
        step = np.linalg.lstsq(J, -R, rcond=None)[0]
        lam = 1.0
        while lam > 1e-4:
            trial = v + lam * step
            if trial[-1] <= 0:
                lam /= 2
                continue
            try:
                R2, J2, st2 = _shoot(model, trial, winding, qfix, E, zref, fref, tol)
            except Exception:
                lam /= 2
                continue
            if np.linalg.norm(R2) < (1 - 1e-4 * lam) * rn or np.linalg.norm(R2) < newton_tol:
                v, R, J, st = trial, R2, J2, st2
                break
            lam /= 2
        else:
            return None
    if np.linalg.norm(R) >= max(newton_tol, RESIDUAL_TOL):
        return None
    z = np.concatenate([v[:2], qfix]) if model.abelian else v[:-1]
    return z, v[-1], J, st, float(np.linalg.norm(R))


def _canonical_start(model, z, T, winding, tol):
    """Move the start to a deterministic section so duplicates coincide.

    Rotating orbits start on ``x = 0 mod L``; librating ones at the turning
    point where ``xdot`` changes from positive to negative.
    """
    L = model.circumference
    xdot = lambda y: _xdot(model, y)
    if winding != 0:
        k = np.round(z[0] / L)
        if abs(z[0] - k * L) < 1e-12:
            zc = z.copy()
            zc[0] = 0.0
            return zc, 0.0
        k = np.floor(z[0] / L)
        target = (k + 1) * L if xdot(z) > 0 else k * L
        st = dyn.integrate(model, geo.PhasePoint.from_state(z), T, tol,
                           event=lambda y: y[0] - target)
        t = st.event_time
    else:
        # step off a possible turning point first
        z = dyn.integrate(model, geo.PhasePoint.from_state(z), 0.1234 * T, tol).point.as_state()
        st = dyn.integrate(model, geo.PhasePoint.from_state(z), T, tol, event=xdot)
        t = st.event_time
        if t is not None and xdot(z) < 0:
            # wrong turning point: step clear of it and search again
            st = dyn.integrate(model, st.point, 0.05 * T, tol)
            st = dyn.integrate(model, st.point, T, tol, event=xdot)
            t = None if st.event_time is None else t + 0.05 * T + st.event_time
    if t is None:
        return z, 0.0
    zc = st.point.as_state()
    zc[0] = zc[0] - L * np.round(zc[0] / L) if winding else zc[0] - L * np.floor(zc[0] / L)
    return zc, t


def _primitive_period(model, z, T, winding, tol):
    L = model.circumference
    for k in range(max(abs(winding), 1) if winding else 8, 1, -1):
        if winding and winding % k:
            continue
        Tk = T / k
        try:
            st = dyn.integrate(model, geo.PhasePoint.from_state(z), Tk, tol)
        except Exception:
            continue
        zk = st.point.as_state()
        shift = np.zeros_like(z)
        shift[0] = (winding // k) * L if winding else 0.0
        if np.linalg.norm(zk - z - shift) < 1e-6:
            return Tk
    return T


def _classify(model, J):
    s = np.linalg.svd(J, compute_uv=False)
    n_unknown = J.shape[1]
    small = int(np.sum(s < FAMILY_TOL * s[0])) + max(0, n_unknown - len(s))
    near = int(np.sum((s >= FAMILY_TOL * s[0]) & (s < 1e-4 * s[0])))
    return small, near


def build_orbit(model: geo.Model, z, T, winding, E, tol=1e-11, residual=0.0,
                nullity=0, near=0) -> PeriodicOrbit:
    """Assemble orbit data (monodromy, drift, holonomy, det) for a converged orbit."""
    st = dyn.integrate(model, geo.PhasePoint.from_state(z), T, tol, track_monodromy=True)
    zT = st.point.as_state()
    shift = np.zeros_like(z)
    shift[0] = winding * model.circumference
    res = float(np.linalg.norm(zT - z - shift))
    drift = drift_to_torus(model, st.fiber_drift)
    orb = PeriodicOrbit(
        T=float(T), T_primitive=float(T), start=geo.PhasePoint.from_state(z), drift_g=drift,
        det_I_minus_P=1.0, holonomy=1.0 + 0j,
        component_kind="family" if nullity > 0 else "isolated-nondegenerate",
        winding=int(winding), energy=float(E), residual=max(res, residual),
        fiber_drift=st.fiber_drift, family_dimension=1 + nullity,
        monodromy=st.monodromy, model=model)
    orb.holonomy = orbit_holonomy(orb, E, model.group, model.weight)
    det, spread = poincare_det_pair(orb)
    orb.det_I_minus_P, orb.det_spread = det, spread
    if _reduced_dim(model) > 2 and abs(det) < DEGENERATE_TOL and nullity == 0:
        orb.degenerate = True
        orb.warnings.append("degenerate: det(I-P) vanishes")
    if near:
        orb.warnings.append("degeneracy: shooting Jacobian nearly rank deficient")
    if np.linalg.norm(geo.gradient_vector(model, z)) < 1e-6:
        orb.warnings.append("energy is not a regular value along the orbit")
    return orb


def zero_time_component(model: geo.Model, E: float) -> PeriodicOrbit:
    """The T = 0 component (the whole energy surface, drift = identity)."""
    return PeriodicOrbit(T=0.0, T_primitive=0.0, start=geo.PhasePoint(0.0, 0.0, model.charge()),
                         drift_g=np.zeros(model.group.rank), det_I_minus_P=1.0,
                         holonomy=1.0 + 0j, component_kind="zero-time", energy=E, model=model)


def seed_points(model: geo.Model, E: float, n_x: int = 16, direction=None):
    """Points on H = E from a coarse x-grid, both momentum roots."""
    q = model.charge(direction)
    xs = np.arange(n_x) * model.circumference / n_x
    qq = np.broadcast_to(q, (n_x, len(q)))
    pm, pp = _momentum_roots(model, xs, qq, E)
    seeds = []
    for x, a, b in zip(xs, pm, pp):
        for p in (a, b):
            if np.isfinite(p):
                seeds.append(np.concatenate([[x, p], q]))
    return seeds


def find_periodic_orbits(model: geo.Model, E: float, winding_range=(-1, 1), seeds=None,
                         newton_tol: float = 1e-10, T_max: float = 200.0, n_x: int = 16,
                         tol: float = 1e-11, primitive_only: bool = True) -> list:
    """Locate periodic orbits of the reduced flow on ``H = E`` by damped Newton shooting.

    Seeds come from a coarse x-grid on the energy surface plus user ``seeds``
    (state vectors).  Returns deduplicated orbits; an empty list if none converge.
    """
    if E <= 0:
        return []
    all_seeds = list(seed_points(model, E, n_x))
    if seeds is not None:
        all_seeds += [np.asarray(s, dtype=float) for s in seeds]
    if not all_seeds:
        return []
    lo, hi = winding_range
    found: list[PeriodicOrbit] = []
    for z0 in all_seeds:
        for w in range(lo, hi + 1):
            T0 = return_time(model, z0, w, T_max)
            if T0 is None or T0 <= 0:
                continue
            try:
                sol = _newton(model, z0, T0, w, E, tol, newton_tol)
            except Exception:
                sol = None
            if sol is None:
                continue
            z, T, J, _, res = sol
            zc, _ = _canonical_start(model, z, T, w, tol)
            if any(abs(o.T - T) < DEDUP_TOL * max(1, T) and o.winding == w
                   and _same_orbit(model, o.start.as_state(), zc) for o in found):
                continue
            Tp = _primitive_period(model, zc, T, w, tol)
            if primitive_only and Tp < T * (1 - 1e-8):
                continue
            nullity, near = _classify(model, J)
            orb = build_orbit(model, zc, T, w, E, tol, res, nullity, near)
            orb.T_primitive = Tp
            if orb.residual >= RESIDUAL_TOL:
                continue
            found.append(orb)
    found.sort(key=lambda o: (o.T, o.winding))
    return found


def _same_orbit(model, a, b):
    d = np.array(a) - np.array(b)
    L = model.circumference
    d[0] = (d[0] + L / 2) % L - L / 2
    return np.linalg.norm(d) < DEDUP_TOL * 10


# ------------------------------------------------------------------ volume

@dataclass
class VolumeEstimate:
    value: float
    stderr: float
    n_samples: int
    method: str

    @property
    def rel_error(self):
        return self.stderr / abs(self.value) if self.value else np.inf


def _orbit_area(model):
    return 1.0 if model.abelian else 4 * np.pi * model.orbit_radius


def _sample_charges(model, rng, n):
    if model.abelian:
        return np.broadcast_to(model.charge(), (n, 1))
    v = rng.normal(size=(n, 3))
    return model.orbit_radius * v / np.linalg.norm(v, axis=1, keepdims=True)


def _shell_length(model, x, q, E, delta):
    """Liouville p-length of ``{E <= H <= E + delta}`` at fixed ``(x, q)``."""
    def length(c):
        a, b = _momentum_roots(model, x, q, c)
        return np.where(np.isfinite(a), b - a, 0.0)
    return length(E + delta) - length(E)


def _local_delta(model, x, q, E):
    """Shell width ``1e-3 min(E, gap)`` where ``gap`` is the distance to the band bottom in p."""
    geom = model.geometry
    N, a, b = geom.lapse(x), geom.inv_metric(x), geom.beta(x)
    qn = np.sqrt(np.sum(np.asarray(q) ** 2, axis=-1))
    gap = E - qn * np.sqrt((N**2 * a - b**2) / a)
    return 1e-3 * np.where(gap > 0, np.minimum(E, gap), E)


def energy_surface_volume(model: geo.Model, E: float, n_samples: int = 20000,
                          seed: int = 0, rel_error: Optional[float] = None,
                          max_samples: int = 2_000_000, method: str = "conditional",
                          delta: Optional[float] = None) -> VolumeEstimate:
    """Monte Carlo estimate of the invariant volume of ``H = E``.

    ``conditional`` samples base points and charges and measures the momentum
    shell exactly; ``hitmiss`` samples the full phase-space box.  Both use the
    thin-shell limit with Richardson extrapolation over ``delta`` and ``delta/2``.
    By default the conditional shell width is ``1e-3 E``, shrunk near the band
    bottom so that it never exceeds a thousandth of the local gap.
    """
    rng = np.random.default_rng(seed)
    L = model.circumference
    area = _orbit_area(model)
    vals = []
    total = 0
    batch = n_samples
    while True:
        x = rng.uniform(0, L, batch)
        q = _sample_charges(model, rng, batch)
        if method == "conditional":
            dl = _local_delta(model, x, q, E) if delta is None else delta
            d1 = _shell_length(model, x, q, E, dl) / dl
            d2 = _shell_length(model, x, q, E, dl / 2) / (dl / 2)
            vals.append(L * area * (2 * d2 - d1))
        elif method == "hitmiss":
            vals.append(_hitmiss_batch(model, rng, x, q, E, 1e-3 * E if delta is None else delta) * area)
        else:
            raise DomainError(f"unknown volume method {method!r}")
        total += batch
        allv = np.concatenate(vals)
        mean = float(allv.mean())
        se = float(allv.std(ddof=1) / np.sqrt(len(allv)))
        est = VolumeEstimate(mean, se, total, method)
        if rel_error is None or est.rel_error <= rel_error:
            return est
        if total >= max_samples:
            raise PrecisionNotReached(
                f"relative error {est.rel_error:.3g} above {rel_error:.3g} after {total} samples", est)
        batch = min(batch * 2, max_samples - total)


def _hitmiss_batch(model, rng, x, q, E, delta):
    L = model.circumference
    xs = np.linspace(0, L, 257)
    qq = _sample_charges(model, np.random.default_rng(1), 64)
    lo, hi = [], []
    for qi in qq:
        a, b = _momentum_roots(model, xs, np.broadcast_to(qi, (len(xs), len(qi))), E + delta)
        lo.append(np.nanmin(a))
        hi.append(np.nanmax(b))
    pad = 0.05 * (max(hi) - min(lo))
    pmin, pmax = min(lo) - pad, max(hi) + pad
    p = rng.uniform(pmin, pmax, len(x))
    H = geo.hamiltonian(model, x, p, q)
    h1 = (H >= E) & (H <= E + delta)
    h2 = (H >= E) & (H <= E + delta / 2)
    box = L * (pmax - pmin)
    return box * (2 * h2 / (delta / 2) - h1 / delta)


def flat_u1_volume(E: float, q0: float, L: float = 2 * np.pi, beta: float = 0.0) -> float:
    """Closed-form volume for constant ``N = h = 1`` and constant shift ``beta``."""
    c2 = 1 - beta**2
    return L * 2 * E / (c2 * np.sqrt(E**2 - c2 * q0**2))
