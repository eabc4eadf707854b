"""Hessian of the iterated bouncing-ball length functional and its closed forms.

Near the orbit the boundary is two graphs ``y = f_+(x)`` (top) and
``y = f_-(x)`` (bottom). The 2r-fold iterate is a critical point at x = 0 of

    L_{+,2r}(x_1, ..., x_2r) = sum_i |(x_{i+1}, f_{w(i+1)}(x_{i+1})) - (x_i, f_{w(i)}(x_i))|

with the word w alternating +, -, +, -, ... The Hessian there depends only on
the vertex separation L and on

    a = -2 (1 + L f_+''(0)),

through ``-L * H = a I + (cyclic neighbour matrix)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DegenerateDenominator, ZeroEigenvalue

ZERO_EIG_TOL = 1e-10
_NEAR_ONE = 1e-4


# Chebyshev polynomials


def _cheb_recurrence(n, x, first):
    p0, p1 = 1.0, (x if first else 2 * x)
    if n == 0:
        return p0
    for _ in range(n - 1):
        p0, p1 = p1, 2 * x * p1 - p0
    return p1


def chebyshev_T(n: int, x: float) -> float:
    """T_n(x) by cos(n acos x) on [-1, 1] and cosh(n acosh x) outside."""
    if n < 0:
        n = -n
    if abs(abs(x) - 1) < _NEAR_ONE:
        return _cheb_recurrence(n, x, True)
    if abs(x) < 1:
        return math.cos(n * math.acos(x))
    sgn = 1.0 if x > 0 or n % 2 == 0 else -1.0
    return sgn * math.cosh(n * math.acosh(abs(x)))


def chebyshev_U(n: int, x: float) -> float:
    """U_n(x), with U_{-1} = 0; trigonometric or hyperbolic closed form."""
    if n == -1:
        return 0.0
    if n < -1:
        return -chebyshev_U(-n - 2, x)
    if abs(abs(x) - 1) < _NEAR_ONE:
        return _cheb_recurrence(n, x, False)
    if abs(x) < 1:
        th = math.acos(x)
        return math.sin((n + 1) * th) / math.sin(th)
    t = math.acosh(abs(x))
    sgn = 1.0 if x > 0 or n % 2 == 0 else -1.0
    return sgn * math.sinh((n + 1) * t) / math.sinh(t)


# direct Hessian


def _poly(jet, x, deriv=0):
    """Taylor polynomial of a jet (array of derivatives) and its derivatives at x."""
    d = np.asarray(jet, dtype=float)[deriv:]
    k = np.arange(len(d))
    fact = np.array([math.factorial(i) for i in k], dtype=float)
    return np.polyval((d / fact)[::-1], x)


def cartesian_length(jets, L: float, r: int, x):
    """Value, gradient and Hessian of L_{+,2r} at x, using the jets as the graphs.

    ``jets`` is a pair of derivative arrays (f_+, f_-); their constant terms
    are replaced by +-L/2 so the vertices sit at (0, +-L/2).
    """
    fp = np.array(jets[0], dtype=float)
    fm = np.array(jets[1], dtype=float)
    fp[0], fm[0] = L / 2, -L / 2
    n = 2 * r
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"expected {n} coordinates")
    F = [fp if i % 2 == 0 else fm for i in range(n)]
    X = np.array([[x[i], _poly(F[i], x[i])] for i in range(n)])
    T = np.array([[1.0, _poly(F[i], x[i], 1)] for i in range(n)])
    A2 = np.array([[0.0, _poly(F[i], x[i], 2)] for i in range(n)])
    idx = np.arange(n)
    nxt = np.roll(idx, -1)
    D = X[nxt] - X
    ell = np.linalg.norm(D, axis=1)
    u = D / ell[:, None]
    uT0 = np.einsum("ij,ij->i", u, T)
    uT1 = np.einsum("ij,ij->i", u, T[nxt])
    TT0 = np.einsum("ij,ij->i", T, T)
    value = float(ell.sum())
    grad = -uT0 + np.roll(uT1, 1)
    H = np.zeros((n, n))
    np.add.at(H, (idx, idx), (TT0 - uT0**2) / ell - np.einsum("ij,ij->i", u, A2))
    np.add.at(H, (nxt, nxt), (TT0[nxt] - uT1**2) / ell + np.einsum("ij,ij->i", u, A2[nxt]))
    mixed = -(np.einsum("ij,ij->i", T, T[nxt]) - uT0 * uT1) / ell
    np.add.at(H, (idx, nxt), mixed)
    np.add.at(H, (nxt, idx), mixed)
    return value, grad, H


def hessian_direct(jets, L: float, r: int) -> np.ndarray:
    """Hessian of L_{+,2r} at x = 0 from exact chord-length second derivatives."""
    if len(jets[0]) < 3 or len(jets[1]) < 3:
        raise ValueError("jets must reach order 2")
    return cartesian_length(jets, L, r, np.zeros(2 * r))[2]


def jets_for(a: float, L: float):
    """Quadratic jets (f_+, f_-) realizing the parameter a."""
    f2 = -(1 + a / 2) / L
    return np.array([L / 2, 0.0, f2]), np.array([-L / 2, 0.0, -f2])


# closed forms


def _branch_a(a, branch):
    if branch in ("+", "plus"):
        return a
    if branch in ("-", "minus"):
        return -a
    raise ValueError("branch must be '+' or '-'")


def inverse_entries(a: float, L: float, r: int, branch: str = "+") -> np.ndarray:
    """Closed-form inverse of the Hessian of L_{+,2r} at 0.

    For p <= q (1-based)

        h^{pq} = L (U_{2r-q+p-1}(-a/2) + U_{q-p-1}(-a/2)) / (2 (T_{2r}(-a/2) - 1)),

    extended symmetrically. ``branch='-'`` gives the entries of the dual
    germ, whose parameter is -a; they equal -(-1)^(p-q) times the '+' ones.
    """
    b = _branch_a(a, branch)
    x = -b / 2
    T2r = chebyshev_T(2 * r, x)
    den = 2 * (T2r - 1)
    if abs(den) <= 1e-13 * max(1.0, abs(T2r)):
        raise DegenerateDenominator(f"T_{2 * r}({x:.6g}) = 1: the {r}-th iterate is degenerate")
    n = 2 * r
    h = np.empty((n, n))
    for p in range(1, n + 1):
        for q in range(p, n + 1):
            v = L * (chebyshev_U(n - q + p - 1, x) + chebyshev_U(q - p - 1, x)) / den
            h[p - 1, q - 1] = h[q - 1, p - 1] = v
    return h


def inverse_entries_trig(alpha: float, kind: str, L: float, r: int) -> np.ndarray:
    """Same entries through the rotation angle, for a = -2 cos(alpha/2) (elliptic)
    or a = -2 cosh(alpha/2) (hyperbolic)."""
    n = 2 * r
    t = alpha / 2
    h = np.empty((n, n))
    for p in range(1, n + 1):
        for q in range(p, n + 1):
            m = r - q + p
            if kind == "elliptic":
                v = -L * math.cos(m * t) / (2 * math.sin(t) * math.sin(r * t))
            else:
                v = L * math.cosh(m * t) / (2 * math.sinh(t) * math.sinh(r * t))
            h[p - 1, q - 1] = h[q - 1, p - 1] = v
    return h


def eigenvalue_formula(a: float, r: int) -> np.ndarray:
    """Eigenvalues of -L * Hessian: a + 2 cos(k pi / r), k = 0..2r-1."""
    k = np.arange(2 * r)
    return a + 2 * np.cos(k * np.pi / r)


def row_sum(a: float, L: float, r: int, branch: str = "+") -> float:
    """sum_q h^{1q}; equals -L/(a+2) for the '+' parameter."""
    b = _branch_a(a, branch)
    if b == -2.0:
        raise DegenerateDenominator("a = -2")
    return float(math.fsum(inverse_entries(a, L, r, branch)[0]))


@dataclass(frozen=True)
class MaslovData:
    signature: int
    n_plus: int
    n_minus: int
    ell_r: int
    m: int
    factor: complex
    alt_m: int
    alt_factor: complex

    @property
    def alt_agrees(self) -> bool:
        return (self.m - self.alt_m) % 8 == 0

    def to_dict(self) -> dict:
        return {
            "signature": self.signature,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "ell_r": self.ell_r,
            "m": self.m,
            "factor": {"re": self.factor.real, "im": self.factor.imag},
            "alt_m": self.alt_m,
            "alt_factor": {"re": self.alt_factor.real, "im": self.alt_factor.imag},
            "alt_agrees": self.alt_agrees,
        }


def signature_and_maslov(eigenvalues, r: int, tol: float = ZERO_EIG_TOL) -> MaslovData:
    """Signature and Maslov phase of the 2r-fold iterate.

    ``eigenvalues`` are those of -L * Hessian. The phase
    (-i)^{2r} (e^{-3 pi i/4})^{2r} e^{i pi sgn/4} gives m = 6r + sgn (mod 8).
    The alternative m = 2 n_+ (mod 8), i.e. factor i^{n_+}, is reported
    next to it; the two agree only for even r.
    """
    ev = np.asarray(eigenvalues, dtype=float)
    scale = max(float(np.abs(ev).max()), 1e-300)
    if np.any(np.abs(ev) <= tol * scale):
        raise ZeroEigenvalue("zero eigenvalue: the iterate is degenerate")
    n_plus = int(np.sum(ev > 0))
    n_minus = int(np.sum(ev < 0))
    sgn = n_plus - n_minus
    ell = (6 * r) % 8
    m = (ell + sgn) % 8
    alt = (2 * n_plus) % 8
    return MaslovData(sgn, n_plus, n_minus, ell, m, cmath.exp(1j * math.pi * m / 4), alt, 1j**n_plus)


def G_function(a: float, L: float, r: int, branch: str = "+") -> float:
    """G(r) = sum_q (h^{1q})^3 / (h^{11})^2."""
    h = inverse_entries(a, L, r, branch)
    h11 = h[0, 0]
    if abs(h11) <= 1e-14 * max(1.0, float(np.abs(h).max())):
        raise DegenerateDenominator("h^{11} vanishes")
    return float(math.fsum(h[0] ** 3) / h11**2)


@dataclass
class HessianData:
    r: int
    a: float
    L: float
    branch: str
    H: np.ndarray
    h_inv: np.ndarray
    eigenvalues: np.ndarray  # formula, for -L * H
    eigenvalues_numeric: np.ndarray
    maslov: MaslovData
    G: float | None

    @property
    def signature(self) -> int:
        return self.maslov.signature

    @property
    def n_plus(self) -> int:
        return self.maslov.n_plus

    @property
    def n_minus(self) -> int:
        return self.maslov.n_minus

    @property
    def h11(self) -> float:
        return float(self.h_inv[0, 0])

    @property
    def row_sum(self) -> float:
        return float(math.fsum(self.h_inv[0]))

    @property
    def cube_sum(self) -> float:
        return float(math.fsum(self.h_inv[0] ** 3))

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "a": self.a,
            "L": self.L,
            "branch": self.branch,
            "H": self.H.tolist(),
            "h_inv": self.h_inv.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenvalues_numeric": self.eigenvalues_numeric.tolist(),
            "signature": self.signature,
            "maslov": self.maslov.to_dict(),
            "G": self.G,
            "row_sum": self.row_sum,
            "row_sum_expected": -self.L / (self.a + 2) if self.a != -2 else None,
        }


def hessian_data(a: float, L: float, r: int, branch: str = "+") -> HessianData:
    """All Hessian data of the 2r-fold iterate. For branch '-' the stored
    ``a`` is the dual parameter -a."""
    b = _branch_a(a, branch)
    H = hessian_direct(jets_for(b, L), L, r)
    h = inverse_entries(b, L, r, "+")
    ev = eigenvalue_formula(b, r)
    ev_num = np.linalg.eigvalsh(-L * H)
    maslov = signature_and_maslov(ev_num, r)
    try:
        G = G_function(b, L, r)
    except DegenerateDenominator:
        G = None
    return HessianData(r, b, L, "+" if branch in ("+", "plus") else "-", H, h, ev, ev_num, maslov, G)


def hessian_data_from_jets(jets, L: float, r: int) -> HessianData:
    a = -2.0 * (1.0 + L * float(jets[0][2]))
    out = hessian_data(a, L, r)
    out.H = hessian_direct(jets, L, r)
    return out


# bad set


def bad_set_lhs(a):
    return (a**3 - 2 * a) ** 2 * (a**3 - 8) - (a**9 - 6 * a**7 - 2 * a**6 + 12 * a**5)


def bad_set_rhs(a):
    return 2 * a**2 * (a + 1) * (a - 2) ** 3 * (a + 2)


BAD_SET_ROOTS = (-2.0, -1.0, 0.0, 2.0)


def G_difference(a: float, L: float = 1.0, branch: str = "+") -> float:
    return G_function(a, L, 1, branch) - G_function(a, L, 2, branch)


def sign_change_roots(func, lo: float, hi: float, n: int = 40001, root_tol: float = 1e-8):
    """Zeros of func on (lo, hi) located by sign changes and Brent refinement.

    Sign changes across poles are told apart from roots by the size of func
    at the refined point. Points where func raises are skipped.
    """
    xs = np.linspace(lo, hi, n)[1:-1]
    vals = []
    for x in xs:
        try:
            vals.append(func(x))
        except (DegenerateDenominator, ZeroDivisionError):
            vals.append(np.nan)
    vals = np.array(vals)
    roots, poles = [], []
    for i in range(len(xs) - 1):
        v0, v1 = vals[i], vals[i + 1]
        if not (np.isfinite(v0) and np.isfinite(v1)):
            continue
        if v0 == 0.0:
            roots.append(float(xs[i]))
            continue
        if v0 * v1 < 0:
            x = optimize.brentq(func, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15)
            scale = max(abs(v0), abs(v1), 1.0)
            if abs(func(x)) <= root_tol * scale:
                roots.append(float(x))
            else:
                poles.append(float(x))
    return roots, poles


def bad_set_polynomial_check(n_points: int = 20, seed: int = 0, tol: float = 1e-10,
                             root_tol: float = 1e-8, grid: int = 40001) -> dict:
    """Check the degree-9 polynomial identity behind the bad set and compare
    its roots with the numeric zeros of G(1) - G(2) on (-2, 2)."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-3.0, 3.0, n_points)
    resid = [abs(bad_set_lhs(x) - bad_set_rhs(x)) / max(1.0, abs(bad_set_rhs(x))) for x in pts]
    poly_roots_ok = all(bad_set_lhs(x) == 0.0 for x in BAD_SET_ROOTS)

    roots, poles = sign_change_roots(lambda x: G_difference(x, 1.0), -2.0, 2.0, grid, root_tol)
    expected = sorted(x for x in BAD_SET_ROOTS if -2 < x < 2)
    match = len(roots) == len(expected) and all(abs(x - y) <= root_tol for x, y in zip(sorted(roots), expected))
    return {
        "identity_max_residual": float(max(resid)),
        "identity_passed": bool(max(resid) <= tol),
        "polynomial_roots": list(BAD_SET_ROOTS),
        "polynomial_roots_verified": poly_roots_ok,
        "G_difference_roots": roots,
        "G_difference_poles": poles,
        "expected_interior_roots": expected,
        "roots_match": match,
        "endpoints_excluded": [-2.0, 2.0],
    }
