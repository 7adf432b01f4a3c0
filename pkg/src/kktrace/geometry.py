"""Stationary Kaluza-Klein base geometry and the reduced Hamiltonian.

The base is a circle of length ``L``.  Spacetime carries the metric
``-N^2 dt^2 + h (dx + beta dt)^2`` (shift one-form ``eta = h beta``) and the
bundle connection is ``A(x) dx`` in a global gauge.  Phase points carry the
base covector ``p`` and the charge ``q`` in orthonormal coordinates of the
dual Lie algebra, so ``|q|`` is Euclidean and ``<A, q>`` is a dot product.
The horizontal momentum is ``u = p - <A(x), q>`` and the reduced Hamiltonian

    H = N sqrt(u^2 / h + |q|^2) + beta u

is the future root ``tau = -H`` of the null condition for ``tau dt + p dx + q``.

All evaluators broadcast: ``x``, ``p`` have shape ``(...)`` and ``q`` has shape
``(..., d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, SchemaError
from . import lie

DEFAULT_GRID = 256
ORBIT_TOL = 1e-9


@dataclass(frozen=True)
class TrigSeries:
    """``const + sum_k cos[k-1] cos(k w x) + sin[k-1] sin(k w x)`` with ``w = 2 pi / period``."""

    const: float = 0.0
    cos: tuple = ()
    sin: tuple = ()
    period: float = 2 * np.pi

    def __post_init__(self):
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(c) for c in self.sin))
        object.__setattr__(self, "const", float(self.const))
        vals = (self.const,) + self.cos + self.sin
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("trigonometric coefficients must be finite")
        if not self.period > 0:
            raise ConfigurationError("period must be positive")

    @classmethod
    def constant(cls, value, period=2 * np.pi):
        return cls(value, (), (), period)

    @classmethod
    def from_dict(cls, raw, period):
        if isinstance(raw, (int, float)):
            return cls.constant(raw, period)
        if not isinstance(raw, dict):
            raise SchemaError(f"expected a number or coefficient table, got {raw!r}")
        unknown = set(raw) - {"const", "cos", "sin"}
        if unknown:
            raise SchemaError(f"unknown series keys {sorted(unknown)}")
        return cls(raw.get("const", 0.0), raw.get("cos", ()), raw.get("sin", ()), period)

    def to_dict(self):
        return {"const": self.const, "cos": list(self.cos), "sin": list(self.sin)}

    @property
    def omega(self):
        return 2 * np.pi / self.period

    @property
    def is_constant(self):
        return not any(self.cos) and not any(self.sin)

    @property
    def degree(self):
        return max(len(self.cos), len(self.sin))

    def __call__(self, x, deriv: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.const if deriv == 0 else 0.0)
        w = self.omega
        # d^n/dx^n cos(kwx) = (kw)^n cos(kwx + n pi/2)
        shift = deriv * np.pi / 2
        for k, c in enumerate(self.cos, start=1):
            if c:
                out = out + c * (k * w) ** deriv * np.cos(k * w * x + shift)
        for k, s in enumerate(self.sin, start=1):
            if s:
                out = out + s * (k * w) ** deriv * np.sin(k * w * x + shift)
        return out

    def fourier(self, n):
        """Complex Fourier coefficients c_{-n..n} with f = sum c_k exp(i k w x)."""
        c = np.zeros(2 * n + 1, dtype=complex)
        c[n] = self.const
        for k, a in enumerate(self.cos, start=1):
            if k <= n:
                c[n + k] += a / 2
                c[n - k] += a / 2
        for k, b in enumerate(self.sin, start=1):
            if k <= n:
                c[n + k] += b / 2j
                c[n - k] -= b / 2j
        return c


def _series(value, period):
    if isinstance(value, TrigSeries):
        if not np.isclose(value.period, period):
            raise ConfigurationError("series period does not match the circumference")
        return value
    return TrigSeries.from_dict(value, period)


@dataclass(frozen=True)
class BaseGeometry:
    circumference: float = 2 * np.pi
    lapse: TrigSeries = None
    shift: TrigSeries = None  # eta, the shift one-form coefficient
    metric: TrigSeries = None
    potential: TrigSeries = None
    grid: int = DEFAULT_GRID

    def __post_init__(self):
        L = float(self.circumference)
        if not L > 0:
            raise ConfigurationError("circumference must be positive")
        defaults = {"lapse": 1.0, "shift": 0.0, "metric": 1.0, "potential": 0.0}
        for name, d in defaults.items():
            val = getattr(self, name)
            object.__setattr__(self, name, _series(d if val is None else val, L))
        if int(self.grid) < 8:
            raise ConfigurationError("grid must have at least 8 points")
        xs = self.sample_points()
        N, eta, h = self.lapse(xs), self.shift(xs), self.metric(xs)
        if np.any(N <= 0):
            raise ConfigurationError("lapse must be positive")
        if np.any(h <= 0):
            raise ConfigurationError("spatial metric must be positive")
        if np.any(N**2 <= eta**2 / h):
            bad = xs[np.argmax(eta**2 / h - N**2)]
            raise ConfigurationError(f"causality bound N^2 > |eta|^2_h fails near x={bad:.4g}")

    def sample_points(self, n=None):
        n = self.grid if n is None else n
        return np.arange(n) * (self.circumference / n)

    def beta(self, x, deriv=0):
        """Shift vector ``beta = eta / h`` and its first two derivatives."""
        e0, e1, e2 = (self.shift(x, k) for k in range(3))
        h0, h1, h2 = (self.metric(x, k) for k in range(3))
        if deriv == 0:
            return e0 / h0
        if deriv == 1:
            return e1 / h0 - e0 * h1 / h0**2
        return e2 / h0 - 2 * e1 * h1 / h0**2 - e0 * h2 / h0**2 + 2 * e0 * h1**2 / h0**3

    def inv_metric(self, x, deriv=0):
        h0, h1, h2 = (self.metric(x, k) for k in range(3))
        if deriv == 0:
            return 1 / h0
        if deriv == 1:
            return -h1 / h0**2
        return -h2 / h0**2 + 2 * h1**2 / h0**3

    @property
    def is_stationary_flat(self):
        return all(s.is_constant for s in (self.lapse, self.shift, self.metric))

    def to_dict(self):
        return {
            "circumference": self.circumference,
            "lapse": self.lapse.to_dict(),
            "shift": self.shift.to_dict(),
            "metric": self.metric.to_dict(),
            "potential": self.potential.to_dict(),
            "grid": self.grid,
        }


@dataclass(frozen=True)
class ConnectionSpec:
    """Connection coefficient ``A(x)``, one series per Lie-algebra coordinate."""

    components: tuple
    group: lie.GroupData

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.group.dim:
            raise ConfigurationError(
                f"connection needs {self.group.dim} components for {self.group.name}, got {len(comps)}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, group, period=2 * np.pi):
        return cls(tuple(TrigSeries.constant(0.0, period) for _ in range(group.dim)), group)

    @classmethod
    def constant(cls, values, group, period=2 * np.pi):
        values = np.atleast_1d(np.asarray(values, dtype=float))
        return cls(tuple(TrigSeries.constant(v, period) for v in values), group)

    def __call__(self, x, deriv=0):
        """Values with shape ``x.shape + (d,)``."""
        x = np.asarray(x, dtype=float)
        return np.stack([c(x, deriv) for c in self.components], axis=-1)

    def curvature(self, x):
        return self(x, 1)

    @property
    def is_constant(self):
        return all(c.is_constant for c in self.components)

    def fixed_direction(self, tol=1e-12):
        """Unit vector ``e`` with ``A(x) = a(x) e`` for all x, or None."""
        mat = np.array([[c.const, *c.cos, *c.sin] for c in _pad(self.components)])
        if not np.any(mat):
            return None
        u, s, _ = np.linalg.svd(mat)
        if len(s) > 1 and s[1] > tol * s[0]:
            return None
        e = u[:, 0]
        return e * np.sign(e[np.argmax(np.abs(e))])

    def flux(self):
        """Mean value of ``A`` (its integral over the circle divided by the length)."""
        return np.array([c.const for c in self.components])


def _pad(comps):
    nc = max(len(c.cos) for c in comps)
    ns = max(len(c.sin) for c in comps)
    return [TrigSeries(c.const, c.cos + (0.0,) * (nc - len(c.cos)),
                       c.sin + (0.0,) * (ns - len(c.sin)), c.period) for c in comps]


@dataclass(frozen=True)
class PhasePoint:
    x: float
    p: float
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.atleast_1d(np.asarray(self.q, dtype=float)))

    def as_state(self):
        return np.concatenate([[self.x, self.p], self.q])

    @classmethod
    def from_state(cls, z):
        z = np.asarray(z, dtype=float)
        return cls(float(z[0]), float(z[1]), z[2:].copy())


@dataclass(frozen=True)
class Model:
    """Base geometry, connection, and the coadjoint orbit through ``lambda0``."""

    geometry: BaseGeometry
    connection: ConnectionSpec
    lambda0: np.ndarray
    charge_level: int = 1
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "lambda0", np.atleast_1d(np.asarray(self.lambda0, dtype=float)))
        lie.validate_weight(self.group, self.weight)
        for c in self.connection.components:
            if not np.isclose(c.period, self.geometry.circumference):
                raise ConfigurationError("connection period does not match the circumference")
        if self.group.rank != 1 and self.group.dim != self.group.rank:
            raise ConfigurationError("classical dynamics supports U(1)-type and SU(2)-type groups")

    @property
    def group(self):
        return self.connection.group

    @property
    def weight(self):
        return lie.OrbitWeight(self.lambda0, self.charge_level)

    @property
    def dim(self):
        return self.group.dim

    @property
    def circumference(self):
        return self.geometry.circumference

    @property
    def orbit_radius(self):
        return lie.orbit_radius(self.group, self.weight)

    @property
    def abelian(self):
        return self.group.abelian

    def charge(self, direction=None):
        """Charge covector on the orbit; for U(1) the signed charge ``q0``."""
        r = self.orbit_radius
        if self.abelian:
            lam = np.sqrt(self.group.inner_norm) * self.charge_level * self.lambda0
            return lam.copy()
        if direction is None:
            direction = np.eye(self.dim)[-1]
        direction = np.asarray(direction, dtype=float)
        n = np.linalg.norm(direction)
        if n == 0:
            raise DomainError("charge direction must be nonzero")
        return r * direction / n

    def check_point(self, pt: PhasePoint):
        if pt.q.shape != (self.dim,):
            raise DomainError(f"charge must have {self.dim} coordinates")
        if abs(np.linalg.norm(pt.q) - self.orbit_radius) > ORBIT_TOL * max(1.0, self.orbit_radius):
            raise DomainError("charge is off the coadjoint orbit")
        if not np.isfinite(pt.x) or not np.isfinite(pt.p):
            raise DomainError("non-finite phase point")

    @cached_property
    def _jet_table(self):
        series = [self.geometry.lapse, self.geometry.shift, self.geometry.metric,
                  *self.connection.components]
        K = max(1, max(f.degree for f in series))
        C = np.zeros((len(series), K))
        S = np.zeros((len(series), K))
        for i, f in enumerate(series):
            C[i, :len(f.cos)] = f.cos
            S[i, :len(f.sin)] = f.sin
        return {"const": np.array([f.const for f in series]), "C": C, "S": S,
                "kw": np.arange(1, K + 1) * (2 * np.pi / self.circumference)}

    def with_level(self, level):
        return Model(self.geometry, self.connection, self.lambda0, level, self.name)

    def to_dict(self):
        g = self.group
        return {
            "name": self.name,
            **self.geometry.to_dict(),
            "group": {"name": g.name, "rank": g.rank, "positive_roots": g.positive_roots.tolist(),
                      "inner_norm": g.inner_norm, "dim": g.dim},
            "connection": [c.to_dict() for c in self.connection.components],
            "lambda0": self.lambda0.tolist(),
            "charge_level": self.charge_level,
        }


def flat_model(group="U(1)", lambda0=None, lapse=1.0, shift=0.0, metric=1.0, potential=0.0,
               connection=None, circumference=2 * np.pi, grid=DEFAULT_GRID, name="flat"):
    """Convenience constructor; scalars give constant coefficients."""
    g = lie.builtin_group(group) if isinstance(group, str) else group
    if lambda0 is None:
        lambda0 = [1.0] if g.abelian else lie.fundamental_weights(g)[0]
    geom = BaseGeometry(circumference, lapse, shift, metric, potential, grid)
    if connection is None:
        conn = ConnectionSpec.zero(g, circumference)
    elif isinstance(connection, ConnectionSpec):
        conn = connection
    else:
        conn = ConnectionSpec(tuple(_series(c, circumference) for c in connection), g)
    return Model(geom, conn, lambda0, 1, name)


# --------------------------------------------------------------- Hamiltonian

def _parts(model: Model, x, p, q):
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    A = model.connection(x)
    u = p - np.sum(A * q, axis=-1)
    a = model.geometry.inv_metric(x)
    qq = np.sum(q * q, axis=-1)
    s = np.sqrt(a * u**2 + qq)
    return A, u, a, qq, s


def hamiltonian(model: Model, x, p, q):
    _, u, _, _, s = _parts(model, x, p, q)
    return model.geometry.lapse(x) * s + model.geometry.beta(x) * u


def hamiltonian_hz(model: Model, pt: PhasePoint) -> float:
    """Reduced Hamiltonian at a phase point (degree-1 homogeneous in ``(p, q)``)."""
    model.check_point(pt)
    return float(hamiltonian(model, pt.x, pt.p, pt.q))


def horizontal_momentum(model: Model, x, p, q):
    return np.asarray(p) - np.sum(model.connection(x) * np.asarray(q), axis=-1)


def null_defect(model: Model, covector) -> float:
    """Inverse Kaluza-Klein metric on ``(tau, x, p, q)``; the point ``x`` is the base position."""
    tau, x, p, q = covector
    q = np.atleast_1d(np.asarray(q, dtype=float))
    geo = model.geometry
    u = horizontal_momentum(model, x, p, q)
    N = geo.lapse(x)
    beta = geo.beta(x)
    return float(-((tau + beta * u) ** 2) / N**2 + geo.inv_metric(x) * u**2 + q @ q)


def future_root(model: Model, x, p, q) -> tuple[float, float]:
    """Both roots of ``tau -> null_defect``; the first is ``-H``."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    geo = model.geometry
    u = float(horizontal_momentum(model, x, p, q))
    N, beta = float(geo.lapse(x)), float(geo.beta(x))
    s = np.sqrt(geo.inv_metric(x) * u**2 + q @ q)
    return -N * s - beta * u, N * s - beta * u


def gradient(model: Model, x, p, q):
    """Analytic ``(dH/dx, dH/dp, dH/dq)``; ``dH/dq`` has shape ``(..., d)``."""
    geo = model.geometry
    A, u, a, qq, s = _parts(model, x, p, q)
    q = np.asarray(q, dtype=float)
    A1 = model.connection(x, 1)
    N, N1 = geo.lapse(x), geo.lapse(x, 1)
    b, b1 = geo.beta(x), geo.beta(x, 1)
    a1 = geo.inv_metric(x, 1)
    ux = -np.sum(A1 * q, axis=-1)
    sx = (a1 * u**2 + 2 * a * u * ux) / (2 * s)
    Hx = N1 * s + N * sx + b1 * u + b * ux
    Hp = N * a * u / s + b
    coef = (N * a * u / s + b)[..., None]
    Hq = -coef * A + (N / s)[..., None] * q
    return Hx, Hp, Hq


def gradient_hz(model: Model, pt: PhasePoint):
    Hx, Hp, Hq = gradient(model, pt.x, pt.p, pt.q)
    return float(Hx), float(Hp), np.asarray(Hq, dtype=float)


def _jet(model: Model, x: float):
    """Values and two derivatives of ``(N, eta, h, A_1..A_d)`` at a scalar ``x``."""
    tab = model._jet_table
    kw = tab["kw"]
    c, s = np.cos(kw * x), np.sin(kw * x)
    f0 = tab["const"] + tab["C"] @ c + tab["S"] @ s
    f1 = (tab["S"] @ (kw * c)) - (tab["C"] @ (kw * s))
    f2 = -(tab["C"] @ (kw**2 * c) + tab["S"] @ (kw**2 * s))
    return f0, f1, f2


def _local(model: Model, z):
    """Shared scalar quantities for the gradient and Hessian at state ``z``."""
    x, p, q = z[0], z[1], z[2:]
    f0, f1, f2 = _jet(model, x)
    N, N1, N2 = f0[0], f1[0], f2[0]
    e0, e1, e2 = f0[1], f1[1], f2[1]
    h0, h1, h2 = f0[2], f1[2], f2[2]
    A, A1, A2 = f0[3:], f1[3:], f2[3:]
    a = 1 / h0
    a1 = -h1 / h0**2
    a2 = -h2 / h0**2 + 2 * h1**2 / h0**3
    b = e0 * a
    b1 = e1 * a + e0 * a1
    b2 = e2 * a + 2 * e1 * a1 + e0 * a2
    u = p - A @ q
    s = np.sqrt(a * u**2 + q @ q)
    return dict(N=N, N1=N1, N2=N2, a=a, a1=a1, a2=a2, b=b, b1=b1, b2=b2,
                A=A, A1=A1, A2=A2, u=u, s=s, q=q)


def gradient_vector(model: Model, z):
    """Gradient of H in the state coordinates ``(x, p, q_1..q_d)``."""
    z = np.asarray(z, dtype=float)
    L = _local(model, z)
    N, a, b, u, s, q = L["N"], L["a"], L["b"], L["u"], L["s"], L["q"]
    ux = -L["A1"] @ q
    sx = (L["a1"] * u**2 + 2 * a * u * ux) / (2 * s)
    Hx = L["N1"] * s + N * sx + L["b1"] * u + b * ux
    Hu = N * a * u / s + b
    return np.concatenate([[Hx, Hu], -Hu * L["A"] + (N / s) * q])


def hessian(model: Model, z):
    """Hessian of H in the state coordinates ``(x, p, q_1..q_d)``."""
    z = np.asarray(z, dtype=float)
    L = _local(model, z)
    q = L["q"]
    d = len(q)
    n = d + 2
    A, A1, A2, u, s = L["A"], L["A1"], L["A2"], L["u"], L["s"]
    a, a1, a2 = L["a"], L["a1"], L["a2"]
    N, N1, N2 = L["N"], L["N1"], L["N2"]
    b, b1, b2 = L["b"], L["b1"], L["b2"]

    ex = np.zeros(n)
    ex[0] = 1.0
    gu = np.concatenate([[-A1 @ q, 1.0], -A])
    Hu = np.zeros((n, n))
    Hu[0, 0] = -A2 @ q
    Hu[0, 2:] = -A1
    Hu[2:, 0] = -A1

    Iq = np.zeros((n, n))
    Iq[2:, 2:] = np.eye(d)
    gq = np.concatenate([[0.0, 0.0], q])

    gw = a1 * u**2 * ex + 2 * a * u * gu + 2 * gq
    Hw = (a2 * u**2 * np.outer(ex, ex) + 2 * a1 * u * (np.outer(ex, gu) + np.outer(gu, ex))
          + 2 * a * np.outer(gu, gu) + 2 * a * u * Hu + 2 * Iq)
    gs = gw / (2 * s)
    Hs = Hw / (2 * s) - np.outer(gw, gw) / (4 * s**3)

    HH = (N2 * s * np.outer(ex, ex) + N1 * (np.outer(ex, gs) + np.outer(gs, ex)) + N * Hs
          + b2 * u * np.outer(ex, ex) + b1 * (np.outer(ex, gu) + np.outer(gu, ex)) + b * Hu)
    return HH
