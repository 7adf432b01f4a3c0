"""Representation data for compact structure groups.

Weights and roots are vectors in a fixed orthonormal basis of the dual
Cartan subalgebra.  The Ad-invariant inner product is ``inner_norm`` times
the Euclidean one, so Casimir values scale with ``inner_norm`` while
dimensions and characters do not.

Torus elements are given by angles along the simple coroots, so a weight
``mu`` evaluates on ``theta`` as ``sum_i theta_i <mu, alpha_i^vee>``.  For an
abelian group (no roots) the angles pair directly with the weight
coordinates; for U(1) the character of charge ``q`` is ``exp(i q theta)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, InvalidWeightError, SchemaError

_INT_TOL = 1e-9
# |Weyl denominator| below this switches to the mean-value limit path
DENOMINATOR_TOL = 1e-10


@dataclass(frozen=True)
class GroupData:
    name: str
    rank: int
    positive_roots: np.ndarray
    inner_norm: float = 1.0
    dim: int = 1

    def __post_init__(self):
        roots = np.asarray(self.positive_roots, dtype=float).reshape(-1, self.rank)
        object.__setattr__(self, "positive_roots", roots)
        if self.rank < 1:
            raise DomainError("rank must be a positive integer")
        if not self.inner_norm > 0:
            raise DomainError("inner_norm must be positive")
        if roots.size and np.any(np.linalg.norm(roots, axis=1) == 0):
            raise DomainError("positive roots must be nonzero")
        if self.dim < self.rank + 2 * len(roots):
            raise DomainError("dim must be at least rank + 2 * #positive roots")

    @property
    def abelian(self) -> bool:
        return len(self.positive_roots) == 0

    @property
    def rho(self) -> np.ndarray:
        """Sum of the positive roots (not the half-sum)."""
        return self.positive_roots.sum(axis=0) if not self.abelian else np.zeros(self.rank)

    def inner(self, a, b) -> float:
        return float(self.inner_norm * np.dot(a, b))


@dataclass(frozen=True)
class OrbitWeight:
    lambda0: np.ndarray
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lambda0", np.atleast_1d(np.asarray(self.lambda0, dtype=float)))

    def at_level(self, m: int) -> "OrbitWeight":
        return OrbitWeight(self.lambda0, m)

    @property
    def highest_weight(self) -> np.ndarray:
        return self.m * self.lambda0


# ----------------------------------------------------------------- built-ins

def u1() -> GroupData:
    return GroupData("U(1)", 1, np.zeros((0, 1)), 1.0, 1)


def su2() -> GroupData:
    # <alpha, alpha> = 2
    return GroupData("SU(2)", 1, np.array([[np.sqrt(2.0)]]), 1.0, 3)


def su3() -> GroupData:
    a1 = np.array([np.sqrt(2.0), 0.0])
    a2 = np.array([-1 / np.sqrt(2.0), np.sqrt(1.5)])
    return GroupData("SU(3)", 2, np.array([a1, a2, a1 + a2]), 1.0, 8)


BUILTIN_GROUPS = {"U(1)": u1, "U1": u1, "SU(2)": su2, "SU2": su2, "SU(3)": su3, "SU3": su3}


def builtin_group(name: str) -> GroupData:
    try:
        return BUILTIN_GROUPS[name.upper().replace(" ", "")]()
    except KeyError:
        raise DomainError(f"unknown built-in group {name!r}") from None


def load_group(path) -> GroupData:
    """Read root data from a JSON file (see docs/file-formats.md)."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, exc.lineno) from None
    return group_from_dict(raw)


def group_from_dict(raw: dict) -> GroupData:
    if "builtin" in raw:
        return builtin_group(raw["builtin"])
    for key in ("rank", "positive_roots"):
        if key not in raw:
            raise SchemaError(f"root data is missing {key!r}")
    rank = int(raw["rank"])
    roots = np.asarray(raw["positive_roots"], dtype=float).reshape(-1, rank)
    dim = int(raw.get("dim", rank + 2 * len(roots)))
    return GroupData(raw.get("name", "custom"), rank, roots, float(raw.get("inner_norm", 1.0)), dim)


# ------------------------------------------------------------ root utilities

def coroot_pairing(g: GroupData, mu, alpha) -> float:
    alpha = np.asarray(alpha, dtype=float)
    return 2.0 * float(np.dot(mu, alpha)) / float(np.dot(alpha, alpha))


def simple_roots(g: GroupData) -> np.ndarray:
    roots = g.positive_roots
    if len(roots) == 0:
        return roots
    simple = []
    for i, a in enumerate(roots):
        decomposable = False
        for j, b in enumerate(roots):
            if j == i:
                continue
            diff = a - b
            if np.any(np.all(np.isclose(roots, diff, atol=1e-9), axis=1)):
                decomposable = True
                break
        if not decomposable:
            simple.append(a)
    return np.array(simple)


def fundamental_weights(g: GroupData) -> np.ndarray:
    simple = simple_roots(g)
    coroots = np.array([2 * a / np.dot(a, a) for a in simple])
    # rows w_i with <w_i, coroot_j> = delta_ij
    return np.linalg.solve(coroots, np.eye(len(simple))).T


def weight_from_dynkin(g: GroupData, labels) -> np.ndarray:
    return np.asarray(labels, dtype=float) @ fundamental_weights(g)


def dynkin_labels(g: GroupData, mu) -> np.ndarray:
    return np.array([coroot_pairing(g, mu, a) for a in simple_roots(g)])


def validate_weight(g: GroupData, w: OrbitWeight) -> None:
    lam = w.lambda0
    if lam.shape != (g.rank,):
        raise InvalidWeightError(f"weight must have {g.rank} coordinates, got {lam.shape}")
    if not np.all(np.isfinite(lam)):
        raise InvalidWeightError("weight has non-finite coordinates")
    if int(w.m) != w.m or w.m < 0:
        raise InvalidWeightError("level m must be a nonnegative integer")
    for alpha in g.positive_roots:
        pairing = coroot_pairing(g, lam, alpha)
        if pairing < -_INT_TOL:
            raise InvalidWeightError(f"weight {lam} is not dominant")
        if abs(pairing - round(pairing)) > _INT_TOL:
            raise InvalidWeightError(f"weight {lam} is not integral")


# ---------------------------------------------------------------- invariants

def weyl_dimension(g: GroupData, w: OrbitWeight) -> int:
    validate_weight(g, w)
    if g.abelian:
        return 1
    half_rho = 0.5 * g.rho
    lam = w.highest_weight
    num = np.prod([np.dot(a, lam + half_rho) for a in g.positive_roots])
    den = np.prod([np.dot(a, half_rho) for a in g.positive_roots])
    value = num / den
    d = int(round(value))
    if abs(value - d) > 1e-6 * max(1.0, abs(value)):
        raise InvalidWeightError(f"non-integral dimension {value}")
    return d


def casimir_eigenvalue(g: GroupData, w: OrbitWeight) -> float:
    """Eigenvalue ``<m L0, m L0 + rho>`` of the quadratic Casimir (rho = sum of positive roots)."""
    validate_weight(g, w)
    lam = w.highest_weight
    return g.inner(lam, lam + g.rho)


def orbit_half_dimension(g: GroupData, w: OrbitWeight) -> int:
    validate_weight(g, w)
    lam = w.lambda0
    return int(sum(abs(np.dot(a, lam)) > _INT_TOL for a in g.positive_roots))


def orbit_radius(g: GroupData, w: OrbitWeight) -> float:
    """Norm of the charge covector at level ``w.m`` in the dual inner product."""
    lam = w.highest_weight
    return float(np.sqrt(g.inner(lam, lam)))


def weyl_group(g: GroupData) -> list[tuple[np.ndarray, int]]:
    """All Weyl group elements as (matrix, sign) pairs, generated by simple reflections."""
    simple = simple_roots(g)
    gens = [np.eye(g.rank) - 2 * np.outer(a, a) / np.dot(a, a) for a in simple]
    elements = {tuple(np.round(np.eye(g.rank), 8).ravel()): (np.eye(g.rank), 1)}
    frontier = [(np.eye(g.rank), 1)]
    while frontier:
        nxt = []
        for mat, sign in frontier:
            for s in gens:
                prod = s @ mat
                key = tuple(np.round(prod, 8).ravel())
                if key not in elements:
                    elements[key] = (prod, -sign)
                    nxt.append((prod, -sign))
        frontier = nxt
        if len(elements) > 100000:
            raise DomainError("Weyl group generation did not terminate")
    return list(elements.values())


def _phase(g: GroupData, mu: np.ndarray, angles: np.ndarray) -> complex:
    if g.abelian:
        return complex(np.dot(mu, angles))
    return complex(np.dot(dynkin_labels(g, mu), angles))


def _alternating_sum(g, weyl, vec, angles):
    return sum(sign * np.exp(1j * _phase(g, mat @ vec, angles)) for mat, sign in weyl)


def character(g: GroupData, w: OrbitWeight, torus_angles) -> complex:
    """Character of the level-``m`` irreducible representation on a torus element."""
    validate_weight(g, w)
    angles = np.atleast_1d(np.asarray(torus_angles, dtype=complex))
    if angles.shape != (g.rank,):
        raise DomainError(f"expected {g.rank} torus angles")
    lam = w.highest_weight
    if g.abelian:
        return complex(np.exp(1j * _phase(g, lam, angles)))
    if g.rank == 1 and len(g.positive_roots) == 1:
        n = int(round(coroot_pairing(g, lam, g.positive_roots[0])))
        k = np.arange(n, -n - 1, -2)
        return complex(np.sum(np.exp(1j * k * angles[0])))
    return _weyl_character(g, lam, angles)


def _weyl_character(g, lam, angles, circle_points=32, radius=0.3):
    weyl = weyl_group(g)
    delta = 0.5 * g.rho
    den = _alternating_sum(g, weyl, delta, angles)
    if abs(den) >= DENOMINATOR_TOL:
        return complex(_alternating_sum(g, weyl, lam + delta, angles) / den)
    # The character is a trigonometric polynomial, hence entire in the angles:
    # its value at the singular point is the mean over a small complex circle.
    rng = np.random.default_rng(12345)
    direction = rng.normal(size=g.rank)
    direction /= np.linalg.norm(direction)
    total = 0.0 + 0.0j
    for j in range(circle_points):
        z = radius * np.exp(2j * np.pi * (j + 0.5) / circle_points)
        pt = angles + z * direction
        total += _alternating_sum(g, weyl, lam + delta, pt) / _alternating_sum(g, weyl, delta, pt)
    return complex(total / circle_points)


def stabilizer_character(g: GroupData, w: OrbitWeight, stab_element, charge=None) -> complex:
    """Character ``chi`` of the stabilizer of the charge ``m Lambda_0``.

    ``stab_element`` is either a vector of torus angles (length ``rank``) or,
    when ``charge`` is given, a Lie-algebra vector ``X`` (length ``dim``) whose
    exponential must fix ``charge``; then ``chi(exp X) = exp(i <xi_0, X>)``.
    """
    validate_weight(g, w)
    elem = np.atleast_1d(np.asarray(stab_element, dtype=float))
    if not np.all(np.isfinite(elem)):
        raise DomainError("non-finite stabilizer element")
    if elem.shape == (g.rank,) and charge is None:
        return complex(np.exp(1j * _phase(g, w.highest_weight, elem).real))
    if charge is None:
        raise DomainError("algebra-vector elements need the charge direction")
    charge = np.asarray(charge, dtype=float)
    if elem.shape != charge.shape:
        raise DomainError("element and charge live in different spaces")
    cn = np.linalg.norm(charge)
    if cn == 0:
        raise DomainError("zero charge has the whole group as stabilizer")
    unit = charge / cn
    perp = elem - np.dot(elem, unit) * unit
    if np.linalg.norm(perp) > 1e-9 * max(1.0, np.linalg.norm(elem)):
        raise DomainError("element does not lie in the stabilizer of the charge")
    xi0 = orbit_radius(g, w) * unit
    return complex(np.exp(1j * np.dot(xi0, elem)))


def fiber_weights(g: GroupData, w: OrbitWeight) -> np.ndarray:
    """Weights of the level-``m`` representation projected on the unit charge axis.

    Only rank-one groups are supported: U(1) gives the single charge ``m q0``;
    SU(2)-type groups give the ``d_m`` equally spaced weights of the spin
    representation, in the orthonormal coordinates of the charge.
    """
    validate_weight(g, w)
    if g.rank != 1:
        raise DomainError("fiber weights need a rank-one group")
    lam = float(w.highest_weight[0]) * np.sqrt(g.inner_norm)
    if g.abelian:
        return np.array([lam])
    alpha = g.positive_roots[0]
    n = int(round(coroot_pairing(g, w.highest_weight, alpha)))
    step = float(alpha[0]) * np.sqrt(g.inner_norm)
    return lam - step * np.arange(n + 1)
