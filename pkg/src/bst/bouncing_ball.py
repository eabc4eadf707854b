"""Bouncing ball orbits through the center of symmetry and their stability."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .billiard import PhasePoint, _wrap, billiard_map, check_condition4
from .boundary import BoundaryGeometry, GraphJet, extract_graph_jet
from .errors import DegenerateOrbit, NoneFound

DEGENERACY_TOL = 1e-8
JET_ORDER = 12


@dataclass
class StabilityData:
    matrix: np.ndarray  # linearized second iterate of the billiard map in (s, phi)
    trace: float
    det: float
    kind: str  # elliptic, hyperbolic or degenerate
    alpha: float | None
    a: float
    jet_trace: float  # 2 (2 (1 + L f'')^2 - 1)
    det_I_minus_P: dict = field(default_factory=dict)

    @property
    def half_angle_cos(self) -> float | None:
        """cos(alpha/2) (elliptic) or cosh(alpha/2) (hyperbolic)."""
        if self.alpha is None:
            return None
        return math.cos(self.alpha / 2) if self.kind == "elliptic" else math.cosh(self.alpha / 2)

    def det_formula(self, r: int) -> float:
        if self.kind == "elliptic":
            return 2 - 2 * math.cos(r * self.alpha)
        if self.kind == "hyperbolic":
            return 2 - 2 * math.cosh(r * self.alpha)
        return 0.0

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "trace": self.trace,
            "det": self.det,
            "kind": self.kind,
            "alpha": self.alpha,
            "a": self.a,
            "half_angle_cos": self.half_angle_cos,
            "jet_trace": self.jet_trace,
            "det_I_minus_P": {str(r): v for r, v in self.det_I_minus_P.items()},
        }


@dataclass
class BouncingBallData:
    geom: BoundaryGeometry
    theta: float  # polar angle of the vertex A in the input frame
    L: float  # vertex separation; the orbit has length 2L
    s_A: float
    s_B: float
    jets: tuple  # (f_plus, f_minus)
    family: bool = False  # every diameter is an orbit (circle)
    stability: StabilityData | None = None

    @property
    def rotation(self) -> float:
        """Angle that puts A on the positive y-axis."""
        return math.pi / 2 - self.theta

    @property
    def vertices(self):
        return (0.0, self.L / 2), (0.0, -self.L / 2)

    @property
    def length(self) -> float:
        return 2 * self.L

    @property
    def f_plus(self) -> GraphJet:
        return self.jets[0]

    @property
    def f_minus(self) -> GraphJet:
        return self.jets[1]

    @property
    def a(self) -> float:
        return -2.0 * (1.0 + self.L * self.f_plus[2])

    def orthogonality(self) -> float:
        """Largest |<chord, tangent>| at the two vertices."""
        X, T, _, _ = self.geom.frame(np.array([self.s_A, self.s_B]))
        u = (X[1] - X[0]) / np.linalg.norm(X[1] - X[0])
        return float(np.abs(T @ u).max())

    def to_dict(self) -> dict:
        out = {
            "theta": self.theta,
            "rotation": self.rotation,
            "L": self.L,
            "orbit_length": self.length,
            "s_A": self.s_A,
            "s_B": self.s_B,
            "vertices": [list(v) for v in self.vertices],
            "a": self.a,
            "degenerate_family": self.family,
            "orthogonality": self.orthogonality(),
            "f_plus": self.f_plus.derivatives.tolist(),
            "f_minus": self.f_minus.derivatives.tolist(),
        }
        if self.stability is not None:
            out["stability"] = self.stability.to_dict()
        return out


def _make(geom, theta, order, family=False):
    theta = float(theta % np.pi)
    P = geom.perimeter
    jets = (extract_graph_jet(geom, theta, order, "+"), extract_graph_jet(geom, theta, order, "-"))
    return BouncingBallData(
        geom, theta, float(2 * geom.radius(theta)),
        float(geom.arclength(theta)) % P, float(geom.arclength(theta + np.pi)) % P,
        jets, family,
    )


def detect_bouncing_balls(geom: BoundaryGeometry, jet_order: int = JET_ORDER, n_grid: int = 4096):
    """All orbits through the origin: zeros of r'(theta) on [0, pi).

    A circle has r' identically zero; it is returned as a single
    representative flagged as a degenerate family.
    """
    nonconst = geom.freqs != 0
    scale = max(geom.r_max, 1e-300)
    if not np.any(np.abs(geom.cos_coeffs[nonconst]) + np.abs(geom.sin_coeffs[nonconst]) > 1e-14 * scale):
        return [_make(geom, np.pi / 2, jet_order, family=True)]

    def dr(t):
        return geom.radius(t, 1)

    grid = np.pi * np.arange(n_grid + 1) / n_grid
    vals = dr(grid)
    roots = []
    for i in range(n_grid):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(optimize.brentq(dr, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
    out = []
    for t in roots:
        t = t % np.pi
        if all(abs(_wrap(t - o.theta, np.pi)) > 1e-9 for o in out):
            out.append(_make(geom, t, jet_order))
    if not out:
        raise NoneFound("no critical radius found; the input is not a valid domain")
    return out


def _second_iterate(geom, s, phi):
    y = billiard_map(geom, billiard_map(geom, PhasePoint(s, phi)))
    return y.s, y.phi


def poincare_map(geom: BoundaryGeometry, bb: BouncingBallData, rel_step: float = 1e-5,
                 strict: bool = True) -> StabilityData:
    """Linearized return map of the orbit from finite differences of the flow.

    Central differences of the second iterate in (s, phi) about
    (s_A, pi/2) with steps rel_step * P and rel_step * 2 pi, improved by two
    Richardson levels (one is not enough for strongly hyperbolic orbits,
    whose return map is far from linear on the step scale). Independent of
    the jets except for the reported ``a`` and ``jet_trace`` cross-check.
    """
    P = geom.perimeter
    x0 = np.array([bb.s_A, np.pi / 2])
    f0 = np.array(_second_iterate(geom, *x0))

    def jac(h):
        J = np.empty((2, 2))
        for k, hk in enumerate(h):
            e = np.zeros(2)
            e[k] = hk
            fp = np.array(_second_iterate(geom, *(x0 + e)))
            fm = np.array(_second_iterate(geom, *(x0 - e)))
            d = fp - fm
            d[0] = _wrap(d[0], P)
            J[:, k] = d / (2 * hk)
        return J

    h = np.array([rel_step * P, rel_step * 2 * np.pi])
    D1, D2, D4 = jac(h), jac(h / 2), jac(h / 4)
    # Richardson on the h^2 then h^4 error terms
    R1, R2 = (4 * D2 - D1) / 3, (4 * D4 - D2) / 3
    M = (16 * R2 - R1) / 15
    if abs(_wrap(f0[0] - x0[0], P)) > 1e-8 * P or abs(f0[1] - x0[1]) > 1e-8:
        raise DegenerateOrbit("the vertex pair is not a 2-periodic orbit")
    tr = float(np.trace(M))
    det = float(np.linalg.det(M))
    c = 1.0 + bb.L * bb.f_plus[2]
    jet_trace = 2 * (2 * c * c - 1)
    if abs(2 - abs(tr)) < DEGENERACY_TOL:
        kind, alpha = "degenerate", None
    elif abs(tr) < 2:
        kind, alpha = "elliptic", math.acos(tr / 2)
    else:
        kind, alpha = "hyperbolic", math.acosh(abs(tr) / 2)
    st = StabilityData(M, tr, det, kind, alpha, -2.0 * c, jet_trace)
    I = np.eye(2)
    for r in range(1, 5):
        st.det_I_minus_P[r] = float(np.linalg.det(I - np.linalg.matrix_power(M, r)))
    bb.stability = st
    if kind == "degenerate" and strict:
        err = DegenerateOrbit(f"|trace| = {abs(tr):.12g} is 2 within {DEGENERACY_TOL}")
        err.stability = st
        raise err
    return st


def curvature_branches(alpha: float, kind: str, L: float):
    """The two values of f''(0) sharing the Poincare eigenvalues of angle alpha.

    The first has 1 + L f'' = +cos(alpha/2) (or +cosh), the second the
    opposite sign.
    """
    c = math.cos(alpha / 2) if kind == "elliptic" else math.cosh(alpha / 2)
    return (-1 + c) / L, (-1 - c) / L


def check_DL_conditions(geom: BoundaryGeometry, bb: BouncingBallData, q_max: int = 6,
                        tol: float = 1e-8, spectrum=None) -> dict:
    """Pass/fail with margins for the four genericity conditions on one orbit."""
    report = {"L": bb.L, "orbit_length": bb.length, "theta": bb.theta}
    st = bb.stability
    if st is None:
        st = poincare_map(geom, bb, strict=False)
    margin1 = abs(2 - abs(st.trace))
    report["condition_1"] = {
        "name": "nondegenerate",
        "passed": st.kind != "degenerate",
        "margin": margin1,
        "trace": st.trace,
        "kind": st.kind,
    }
    if st.kind == "elliptic":
        c = st.half_angle_cos
        dists = {str(b): abs(c - b) for b in (0.0, 0.5, 1.0)}
        m2 = min(dists.values())
        report["condition_2"] = {
            "name": "cos(alpha/2) not in {0, 1/2, 1}",
            "passed": m2 > tol,
            "margin": m2,
            "cos_half_alpha": c,
            "distances": dists,
        }
    else:
        report["condition_2"] = {
            "name": "cos(alpha/2) not in {0, 1/2, 1}",
            "passed": st.kind == "hyperbolic",
            "margin": None,
            "applicable": st.kind == "elliptic",
        }
    f3 = float(bb.f_plus[3])
    report["condition_3"] = {
        "name": "third derivative nonzero",
        "passed": abs(f3) > tol,
        "margin": abs(f3),
        "f3": f3,
    }
    c4 = check_condition4(geom, bb, q_max, spectrum=spectrum)
    report["condition_4"] = {"name": "2L, 4L simple, 4L != P", **c4, "margin": None}
    report["passed"] = all(report[f"condition_{i}"]["passed"] for i in range(1, 5))
    return report
