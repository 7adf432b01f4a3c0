"""Reduced Hamiltonian flow (Wong's equations) and its variational flow.

The state vector is ``z = (x, p, q_1..q_d)``.  The Poisson tensor is canonical
on ``(x, p)`` and Lie-Poisson on the charge: ``qdot = q x dH/dq`` for SU(2)-type
charges, ``qdot = 0`` for U(1).  With ``H`` depending on ``q`` through
``u = p - <A, q>`` and ``|q|``, this is ``qdot = xdot (A x q)``, the covariant
constancy of the charge along the base path.

The fiber drift is the angle ``psi = int <qhat, dH/dq> dt`` accumulated along
the charge axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from . import geometry as geo
from .errors import ConfigurationError, IntegrationError

TOL_RANGE = (1e-13, 1e-6)


def _cross_matrix(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def poisson_tensor(model: geo.Model, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    n = len(z)
    P = np.zeros((n, n))
    P[0, 1], P[1, 0] = 1.0, -1.0
    if not model.abelian:
        P[2:, 2:] = _cross_matrix(z[2:])
    return P


def vector_field(model: geo.Model, z, g=None) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if g is None:
        g = geo.gradient_vector(model, z)
    out = np.empty_like(z)
    out[0] = g[1]
    out[1] = -g[0]
    if model.abelian:
        out[2:] = 0.0
    else:
        out[2:] = np.cross(z[2:], g[2:])
    return out


def vector_field_jacobian(model: geo.Model, z, g=None) -> np.ndarray:
    """Analytic derivative of :func:`vector_field`."""
    z = np.asarray(z, dtype=float)
    Hess = geo.hessian(model, z)
    DF = poisson_tensor(model, z) @ Hess
    if not model.abelian:
        if g is None:
            g = geo.gradient_vector(model, z)
        DF[2:, 2:] -= _cross_matrix(g[2:])
    return DF


def drift_rate(model: geo.Model, z, g=None) -> float:
    z = np.asarray(z, dtype=float)
    q = z[2:]
    qn = np.linalg.norm(q)
    if qn == 0:
        return 0.0
    if g is None:
        g = geo.gradient_vector(model, z)
    return float(q @ g[2:] / qn)


def wong_rhs(model: geo.Model, pt: geo.PhasePoint):
    """Tangent vector ``(xdot, pdot, qdot)`` at a phase point."""
    model.check_point(pt)
    f = vector_field(model, pt.as_state())
    return float(f[0]), float(f[1]), f[2:].copy()


@dataclass
class FlowState:
    point: geo.PhasePoint
    time: float
    monodromy: Optional[np.ndarray] = None
    fiber_drift: float = 0.0  # psi, angle along the charge axis
    start: Optional[geo.PhasePoint] = None
    energy_drift: float = 0.0
    radius_drift: float = 0.0
    steps: int = 0
    trajectory: Optional[np.ndarray] = None  # rows (t, z...)
    event_time: Optional[float] = None

    @property
    def drift_report(self):
        return {"energy_drift": self.energy_drift, "radius_drift": self.radius_drift,
                "steps": self.steps}

    def symplectic_defect(self, model: geo.Model) -> float:
        """``|M Pi(z0) M^T - Pi(zT)|``, zero for an exact Poisson map."""
        if self.monodromy is None:
            raise ConfigurationError("monodromy was not tracked")
        M = self.monodromy
        P0 = poisson_tensor(model, self.start.as_state())
        P1 = poisson_tensor(model, self.point.as_state())
        return float(np.max(np.abs(M @ P0 @ M.T - P1)))


def integrate(model: geo.Model, start: geo.PhasePoint, T: float, tol: float = 1e-10,
              track_monodromy: bool = False, record: bool = False,
              event: Optional[Callable] = None, project: bool = True,
              max_steps: int = 2_000_000) -> FlowState:
    """Integrate the flow for time ``T`` (negative allowed) with an adaptive DOP853 scheme.

    ``event(z)`` is an optional scalar function; integration stops at its first
    sign change after the initial step, located by root-finding on the dense
    output, and ``event_time`` is set.  An event that vanishes at the start
    arms itself on the first step.
    """
    if not (TOL_RANGE[0] <= tol <= TOL_RANGE[1]):
        raise ConfigurationError(f"tol must lie in [{TOL_RANGE[0]}, {TOL_RANGE[1]}]")
    model.check_point(start)
    z0 = start.as_state()
    n = len(z0)
    radius = np.linalg.norm(z0[2:])
    H0 = float(geo.hamiltonian(model, z0[0], z0[1], z0[2:]))

    def rhs(t, y):
        z = y[:n]
        out = np.empty_like(y)
        g = geo.gradient_vector(model, z)
        out[:n] = vector_field(model, z, g)
        out[n] = drift_rate(model, z, g)
        if track_monodromy:
            M = y[n + 1:].reshape(n, n)
            out[n + 1:] = (vector_field_jacobian(model, z, g) @ M).ravel()
        return out

    y0 = np.concatenate([z0, [0.0]])
    if track_monodromy:
        y0 = np.concatenate([y0, np.eye(n).ravel()])
    if T == 0:
        return _finish(model, start, y0, n, 0.0, H0, radius, 0, track_monodromy,
                       [np.concatenate([[0.0], z0])] if record else None, None)

    solver = DOP853(rhs, 0.0, y0, T, rtol=tol, atol=tol * 1e-2)
    rows = [np.concatenate([[0.0], z0])] if record else None
    steps = 0
    ev_prev = event(z0) if event is not None else None
    event_time = None
    while solver.status == "running":
        t_old = solver.t
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integration failed at t={solver.t:.6g}: {msg}",
                                   blowup_time=solver.t)
        steps += 1
        if not np.all(np.isfinite(solver.y)):
            raise IntegrationError("non-finite state", blowup_time=t_old)
        if event is not None:
            ev_new = event(solver.y[:n])
            if ev_prev != 0 and np.sign(ev_new) != np.sign(ev_prev):
                dense = solver.dense_output()
                tc = brentq(lambda t: event(dense(t)[:n]), t_old, solver.t, xtol=1e-14, rtol=1e-15)
                y = dense(tc)
                event_time = tc
                if project and not model.abelian:
                    y[2:n] *= radius / np.linalg.norm(y[2:n])
                if record:
                    rows.append(np.concatenate([[tc], y[:n]]))
                return _finish(model, start, y, n, tc, H0, radius, steps, track_monodromy,
                               rows, event_time)
            ev_prev = ev_new
        if project and not model.abelian:
            qn = np.linalg.norm(solver.y[2:n])
            solver.y[2:n] *= radius / qn
        if record:
            rows.append(np.concatenate([[solver.t], solver.y[:n]]))
        if steps > max_steps:
            raise IntegrationError("step budget exhausted", blowup_time=solver.t)
    return _finish(model, start, solver.y.copy(), n, solver.t, H0, radius, steps,
                   track_monodromy, rows, event_time)


def _finish(model, start, y, n, t, H0, radius, steps, track, rows, event_time):
    z = y[:n]
    H1 = float(geo.hamiltonian(model, z[0], z[1], z[2:]))
    M = y[n + 1:].reshape(n, n).copy() if track else None
    return FlowState(
        point=geo.PhasePoint.from_state(z), time=float(t), monodromy=M,
        fiber_drift=float(y[n]), start=start,
        energy_drift=abs(H1 - H0), radius_drift=abs(np.linalg.norm(z[2:]) - radius),
        steps=steps, trajectory=np.array(rows) if rows is not None else None,
        event_time=event_time)


def trajectory_table(model: geo.Model, state: FlowState):
    """Rows ``t, x, p, q..., H, |q|`` for CSV dumps."""
    if state.trajectory is None:
        raise ConfigurationError("trajectory was not recorded")
    tr = state.trajectory
    z = tr[:, 1:]
    H = geo.hamiltonian(model, z[:, 0], z[:, 1], z[:, 2:])
    qn = np.linalg.norm(z[:, 2:], axis=1)
    header = ["t", "x", "p"] + [f"q{i + 1}" for i in range(z.shape[1] - 2)] + ["H", "abs_q"]
    return header, np.column_stack([tr, H, qn])
