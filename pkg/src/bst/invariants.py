"""Trace prefactor and the normalized wave-invariant combinations.

The combinatorial weights of the invariants are not computed here; they are
injected through :class:`InvariantConstants` (all 1 by default) together with
an optional remainder term, a polynomial in the lower-order jet. Every
structural statement checked by the package is independent of these choices.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BadSetSingular, DegenerateDenominator, DegenerateOrbit, InputError, InsufficientJet
from .hessian import HessianData


def zero_remainder(jet, r, j):
    return 0.0


def polynomial_remainder(scale: float = 1.0, weights: dict | None = None):
    """A sample remainder plug-in: a polynomial in the (2j-2)-jet that is
    invariant under x -> -x, as any geometric remainder must be.

    The value is multiplied by ``scale * r * weights[r]**j``. Passing the
    h^{11} entries of the two iterates as weights gives the remainder the
    same size as the leading terms; an O(1) remainder next to leading terms
    of size (h^{11})^j makes the recursion lose digits geometrically in j,
    since later stages evaluate it on recovered derivatives.
    """
    weights = weights or {}

    def R(jet, r, j):
        jet = np.asarray(jet, dtype=float)
        even = jet[2 : 2 * j - 1 : 2]
        total = float(np.sum(even**2)) + float(np.prod(even[:2]))
        if j >= 3:
            total += jet[3] * jet[2 * j - 3]
        return scale * r * weights.get(r, 1.0) ** j * total

    return R


@dataclass(frozen=True)
class InvariantConstants:
    C_tilde: dict = field(default_factory=dict)
    C: dict = field(default_factory=dict)
    C_hat: dict = field(default_factory=dict)
    A: dict = field(default_factory=dict)
    remainder: Callable = zero_remainder

    @staticmethod
    def _get(table, key, name):
        v = float(table.get(key, table.get(str(key), 1.0)))
        if v == 0.0 or not math.isfinite(v):
            raise InputError(f"constant {name}[{key}] must be finite and nonzero")
        return v

    def c_tilde(self, j):
        return self._get(self.C_tilde, j, "C_tilde")

    def c(self, j):
        return self._get(self.C, j, "C")

    def c_hat(self, j):
        return self._get(self.C_hat, j, "C_hat")

    def a_factor(self, r):
        return self._get(self.A, r, "A")

    def scaled_A(self, factor: float) -> "InvariantConstants":
        A = {int(k): factor * self.a_factor(int(k)) for k in (self.A or {1: 1.0, 2: 1.0})}
        for r in (1, 2):
            A.setdefault(r, factor)
        return InvariantConstants(self.C_tilde, self.C, self.C_hat, A, self.remainder)

    @classmethod
    def from_dict(cls, d: dict, remainder: Callable = zero_remainder) -> "InvariantConstants":
        try:
            tabs = [{int(k): float(v) for k, v in (d.get(name) or {}).items()}
                    for name in ("C_tilde", "C", "C_hat", "A")]
        except (TypeError, ValueError, AttributeError) as exc:
            raise InputError(f"malformed constants: {exc}") from exc
        return cls(*tabs, remainder=remainder)

    def to_dict(self) -> dict:
        return {name: {str(k): v for k, v in getattr(self, name).items()}
                for name in ("C_tilde", "C", "C_hat", "A")}


# prefactor


@dataclass(frozen=True)
class PrefactorData:
    boundary_condition: str
    epsilon_B: int
    maslov_m: int
    length: float
    det_factor: float
    k: float
    value: complex

    def to_dict(self) -> dict:
        return {
            "boundary_condition": self.boundary_condition,
            "epsilon_B": self.epsilon_B,
            "maslov_m": self.maslov_m,
            "length": self.length,
            "det_factor": self.det_factor,
            "k": self.k,
            "value": {"re": self.value.real, "im": self.value.imag},
            "abs": abs(self.value),
        }


def prefactor(stability, r: int, bc: str, maslov_m: int, k: float, L: float) -> PrefactorData:
    """Leading coefficient of the trace contribution of the r-th iterate.

    (-1)^eps e^{i k 2 L r} e^{i pi m / 4} / sqrt|det(I - P^r)| with unit
    amplitude; Dirichlet counts one sign per bounce, Neumann none.
    """
    bc = bc.lower()
    if bc not in ("dirichlet", "neumann"):
        raise InputError("boundary condition must be Dirichlet or Neumann")
    det = stability.det_formula(r)
    if abs(det) < 1e-12 or stability.kind == "degenerate":
        raise DegenerateOrbit(f"det(I - P^{r}) vanishes")
    eps = 2 * r if bc == "dirichlet" else 0
    length = 2 * L * r
    value = (-1) ** eps * cmath.exp(1j * k * length) * cmath.exp(1j * math.pi * maslov_m / 4) / math.sqrt(abs(det))
    return PrefactorData(bc, eps, maslov_m, length, abs(det), k, value)


# invariants


@dataclass
class InvariantData:
    r: int
    j: int
    b: float  # raw invariant
    b_prime: float  # normalized, with the row sum replaced by -L/(a+2)
    b_prime_direct: float  # normalized, with the row sum summed directly
    coefficients: tuple  # ((h^{11})^2, sum_q (h^{1q})^3)
    row: tuple  # coefficients of (f^(2j), f3 f^(2j-1)) in b_prime
    remainder_term: float  # normalized remainder contribution to b_prime

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "j": self.j,
            "b": self.b,
            "b_prime": self.b_prime,
            "b_prime_direct": self.b_prime_direct,
            "h11_squared": self.coefficients[0],
            "cube_sum": self.coefficients[1],
            "row": list(self.row),
            "remainder_term": self.remainder_term,
        }


def normalizer(hess: HessianData, consts: InvariantConstants, j: int) -> float:
    """8 L r^2 A(r) (h^{11})^{j-2}."""
    h11 = hess.h11
    if j > 2 and abs(h11) < 1e-12 * hess.L:
        raise DegenerateDenominator(f"h^11 vanishes at r={hess.r}; invariants of order {j} cannot be normalized")
    return 8 * hess.L * hess.r**2 * consts.a_factor(hess.r) * h11 ** (j - 2)


def row_coefficients(hess: HessianData, consts: InvariantConstants, j: int):
    """Coefficients of f^(2j) and f3 f^(2j-1) in the normalized invariant."""
    a, L = hess.a, hess.L
    h2 = hess.h11**2
    return (consts.c_tilde(j) * h2,
            -4 * L / (a + 2) * consts.c(j) * h2 + 4 * consts.c_hat(j) * hess.cube_sum)


def b_invariant(jet, hess: HessianData, consts: InvariantConstants, r: int, j: int) -> InvariantData:
    """Invariant of the r-th iterate at order j from the jet of f_+.

    ``jet`` holds f_+^(k)(0), k = 0..K with K >= 2j.
    """
    if j < 2:
        raise ValueError("j must be at least 2")
    if hess.r != r:
        raise ValueError("Hessian data is for a different iterate")
    jet = np.asarray(jet, dtype=float)
    if len(jet) < 2 * j + 1:
        raise InsufficientJet(f"order {2 * j} needed, jet has order {len(jet) - 1}")
    L = hess.L
    h11, S1, S3 = hess.h11, hess.row_sum, hess.cube_sum
    f3, fodd, feven = jet[3], jet[2 * j - 1], jet[2 * j]
    Ar = consts.a_factor(r)
    R = float(consts.remainder(jet[: 2 * j - 1].copy(), r, j))
    b = 4 * L * r * Ar * (
        2 * r * consts.c_tilde(j) * h11**j * feven
        + 8 * r * consts.c(j) * h11**j * S1 * f3 * fodd
        + 8 * r * consts.c_hat(j) * h11 ** (j - 2) * S3 * f3 * fodd
    ) + R
    norm = normalizer(hess, consts, j)
    row = row_coefficients(hess, consts, j)
    rem = R / norm
    b_prime = row[0] * feven + row[1] * f3 * fodd + rem
    return InvariantData(r, j, float(b), float(b_prime), float(b / norm),
                         (h11**2, S3), row, rem)


@dataclass
class DecouplingSystem:
    j: int
    matrix: np.ndarray
    det: float
    rel_det: float
    cond: float

    def to_dict(self) -> dict:
        return {"j": self.j, "matrix": self.matrix.tolist(), "det": self.det,
                "rel_det": self.rel_det, "cond": self.cond}


def decoupling_system(hess_r1: HessianData, hess_r2: HessianData, consts: InvariantConstants, j: int,
                      tol: float = 1e-12) -> DecouplingSystem:
    """2x2 system for (f^(2j), f3 f^(2j-1)) from the r = 1 and r = 2 invariants.

    The determinant is 4 C_tilde C_hat (h_1^{11} h_2^{11})^2 (G(2) - G(1)).
    """
    M = np.array([row_coefficients(hess_r1, consts, j), row_coefficients(hess_r2, consts, j)])
    det = float(np.linalg.det(M))
    rel = abs(det) / max(np.linalg.norm(M[0]) * np.linalg.norm(M[1]), 1e-300)
    if rel < tol:
        raise BadSetSingular(f"decoupling determinant {det:.3g} (relative {rel:.3g}) vanishes: a is in the bad set")
    return DecouplingSystem(j, M, det, float(rel), float(np.linalg.cond(M)))
