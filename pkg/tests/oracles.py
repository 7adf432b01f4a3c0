"""Independent reference computations used by the tests.

Nothing here calls into the code under test beyond reading root data and
model coefficients; each oracle reaches its answer by a different route.
"""

import itertools

import numpy as np
from scipy import integrate, linalg, optimize


# ------------------------------------------------------------ representations

def freudenthal_multiplicities(positive_roots, simple_roots, highest):
    """Weight multiplicities of the irreducible module with highest weight ``highest``.

    Freudenthal's recursion over weights ``highest - sum n_i alpha_i``.
    """
    pos = [np.asarray(a, float) for a in positive_roots]
    simple = [np.asarray(a, float) for a in simple_roots]
    lam = np.asarray(highest, float)
    delta = 0.5 * np.sum(pos, axis=0)
    norm_top = np.dot(lam + delta, lam + delta)
    key = lambda v: tuple(np.round(v, 8))
    mult = {key(lam): 1}
    depth_max = 0
    # every weight satisfies |mu| <= |lam|, which bounds the depth
    while True:
        depth_max += 1
        level = [c for c in itertools.product(range(depth_max + 1), repeat=len(simple))
                 if sum(c) == depth_max]
        any_in_ball = False
        for c in level:
            mu = lam - sum(ci * a for ci, a in zip(c, simple))
            if np.dot(mu, mu) > np.dot(lam, lam) + 1e-9:
                continue
            any_in_ball = True
            denom = norm_top - np.dot(mu + delta, mu + delta)
            if abs(denom) < 1e-9:
                continue
            total = 0.0
            for a in pos:
                k = 1
                nu = mu + a
                while np.dot(nu, nu) <= np.dot(lam, lam) + 1e-9:
                    total += mult.get(key(nu), 0) * np.dot(nu, a)
                    k += 1
                    nu = mu + k * a
            val = 2 * total / denom
            if round(val) > 0:
                mult[key(mu)] = int(round(val))
        if not any_in_ball:
            break
    return mult


def brute_dimension(g, lam):
    if len(g.positive_roots) == 0:
        return 1
    from kktrace.lie import simple_roots
    return sum(freudenthal_multiplicities(g.positive_roots, simple_roots(g), lam).values())


def spin_matrices(j2):
    """Spin-``j2/2`` matrices ``(Jx, Jy, Jz)`` in the standard weight basis."""
    j = j2 / 2
    ms = np.arange(j, -j - 1, -1)
    n = len(ms)
    Jp = np.zeros((n, n))
    for i in range(1, n):
        Jp[i - 1, i] = np.sqrt(j * (j + 1) - ms[i] * (ms[i] + 1))
    Jm = Jp.T
    return (Jp + Jm) / 2, (Jp - Jm) / 2j, np.diag(ms)


def su2_weight_character(m, theta):
    k = np.arange(-m, m + 1, 2)
    return np.sum(np.exp(1j * k * theta))


# ------------------------------------------------------------------ spectra

def flat_dispersion(beta, alpha, c, window, kmax=2000):
    """Eigenvalues ``beta kt +- sqrt(kt^2 + c)`` with ``kt = k - alpha`` by direct enumeration."""
    out = []
    for k in range(-kmax, kmax + 1):
        kt = k - alpha
        disc = kt * kt + c
        if disc < 0:
            continue
        for s in (1, -1):
            lam = beta * kt + s * np.sqrt(disc)
            if window[0] <= lam <= window[1]:
                out.append(lam)
    return np.sort(out)


def _fourier_d1(n, L=2 * np.pi):
    h = 2 * np.pi / n
    j = np.arange(1, n)
    col = np.zeros(n)
    col[1:] = 0.5 * (-1.0) ** j / np.sin(j * h / 2)
    return linalg.toeplitz(col, -col) * (2 * np.pi / L)


def torus_frequencies(charge, alpha=0.0, n=15, penalty=1e4):
    """Squared frequencies of the flat wave operator on the 2-torus with fiber charge ``charge``.

    The operator ``-(d_x - alpha d_t)^2 - d_t^2`` is discretized on an odd
    Fourier grid in both directions; the isotypic component is selected by a
    penalty on ``(-i d_t - charge)^2``, which commutes with the operator.
    """
    D = _fourier_d1(n)
    I = np.eye(n)
    Dx, Dt = np.kron(D, I), np.kron(I, D)
    hor = Dx - alpha * Dt
    A = -hor @ hor - Dt @ Dt
    P = -1j * Dt - charge * np.eye(n * n)
    vals = linalg.eigvalsh(A + penalty * (P.conj().T @ P))
    return np.sort(vals[vals < penalty / 2])


def collocation_spectrum(lapse, metric, shift, potential, a, weight, c_m, n=97, L=2 * np.pi):
    """Quadratic eigenvalues from Fourier collocation (differentiation matrix on a grid).

    Solves ``lam^2 (sqrt h / N) v + lam B v - L v = 0`` written in
    conservative collocation form, independent of Galerkin assembly.  ``n``
    must be odd so that no Nyquist mode is present.
    """
    if n % 2 == 0:
        raise ValueError("use an odd collocation grid")
    x = np.arange(n) * L / n
    D1 = _fourier_d1(n, L)
    N, hh, eta, V, av = lapse(x), metric(x), shift(x), potential(x), a(x)
    beta = eta / hh
    sh = np.sqrt(hh)
    Dc = D1 - 1j * weight * np.diag(av)
    M = np.diag(sh / N)
    G = np.diag(sh * beta / N)
    C = np.diag(sh / N * (N**2 / hh - beta**2))
    B = 1j * (G @ Dc + Dc @ G)
    Lop = -Dc @ C @ Dc + np.diag(N * sh * (c_m + V))
    # note -D C D equals D^* C D for the skew collocation derivative
    Z, I = np.zeros((n, n)), np.eye(n)
    A = np.block([[Z, I], [Lop, -B]])
    Bm = np.block([[I, Z], [Z, M]])
    lam = linalg.eig(A, Bm, right=False)
    return lam


# ----------------------------------------------------------------- volumes

def u1_volume_quadrature(model, E):
    """``int dx sum_roots 1/|dH/dp|`` by adaptive quadrature and bracketing root search."""
    from kktrace import geometry as geo
    q = model.charge()
    L = model.circumference

    def integrand(x):
        f = lambda p: float(geo.hamiltonian(model, x, p, q)) - E
        # H is convex in p with a single minimum
        pmin = optimize.minimize_scalar(lambda p: f(p)).x
        if f(pmin) >= 0:
            return 0.0
        tot = 0.0
        for side in (1, -1):
            hi = pmin + side
            while f(hi) < 0:
                hi = pmin + 2 * (hi - pmin)
            root = optimize.brentq(f, min(pmin, hi), max(pmin, hi), xtol=1e-14)
            eps = 1e-6
            dH = (f(root + eps) - f(root - eps)) / (2 * eps)
            tot += 1 / abs(dH)
        return tot

    return integrate.quad(integrand, 0, L, limit=200, epsabs=1e-11, epsrel=1e-11)[0]


# --------------------------------------------------------------- dynamics

def finite_difference_gradient(f, z, h=1e-6):
    z = np.asarray(z, float)
    out = np.zeros_like(z)
    for i in range(len(z)):
        e = np.zeros_like(z)
        e[i] = h
        out[i] = (f(z + e) - f(z - e)) / (2 * h)
    return out


def random_symplectic(n2, rng):
    """A random linear symplectomorphism of R^{n2} with the canonical form."""
    n = n2 // 2
    A = rng.normal(size=(n, n)) + 2 * np.eye(n)
    Sym1 = rng.normal(size=(n, n))
    Sym1 = Sym1 + Sym1.T
    Sym2 = rng.normal(size=(n, n))
    Sym2 = (Sym2 + Sym2.T) * 0.3
    I, Z = np.eye(n), np.zeros((n, n))
    S1 = np.block([[A, Z], [Z, np.linalg.inv(A).T]])
    S2 = np.block([[I, Sym1 * 0.3], [Z, I]])
    S3 = np.block([[I, Z], [Sym2, I]])
    return S1 @ S2 @ S3


def rotation_monodromy(a, rng):
    """Conjugated monodromy of a rotation by ``a`` in one transverse plane, plus a flow shear.

    Coordinates before conjugation are ``(x1, x2, p1, p2)`` with ``x1`` the
    flow direction and ``p1`` the energy.  Returns ``(M, flow, grad, Poisson)``.
    """
    R = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    M = np.eye(4)
    M[np.ix_([1, 3], [1, 3])] = R
    M[0, 2] = 0.7  # shear along the flow, invisible in the quotient
    J = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    S = random_symplectic(4, rng)
    flow, grad = np.array([1.0, 0, 0, 0]), np.array([0, 0, 1.0, 0])
    return S @ M @ np.linalg.inv(S), S @ flow, np.linalg.inv(S).T @ grad, S @ J @ S.T
