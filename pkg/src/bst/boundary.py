"""Centrally symmetric star-shaped boundaries given by a radial Fourier series.

The boundary is ``alpha(theta) = r(theta) * (cos theta, sin theta)`` with

    r(theta) = sum_n  A_n cos(n (theta - rot)) + B_n sin(n (theta - rot)),

and only even ``n`` allowed, which makes the curve invariant under
``(x, y) -> (-x, -y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import InputError, NotAGraph, NotEmbedded, NotStarShaped, OddModePresent
from .series import Series

CURVATURE_SAMPLES = 4096
CURVATURE_REFINEMENTS = 3


@dataclass(frozen=True)
class BoundarySpec:
    """Input description of a domain.

    ``radial_coeffs`` is a sequence of ``(freq, cos_coeff, sin_coeff)``.
    """

    radial_coeffs: tuple
    rotation: float = 0.0
    label: str = ""

    def __post_init__(self):
        coeffs = tuple((int(round(float(f))), float(c), float(s)) for f, c, s in self.radial_coeffs)
        for (f, _, _), raw in zip(coeffs, self.radial_coeffs):
            if float(raw[0]) != f or f < 0:
                raise InputError(f"frequency {raw[0]!r} is not a non-negative integer")
        object.__setattr__(self, "radial_coeffs", coeffs)
        object.__setattr__(self, "rotation", float(self.rotation))

    @classmethod
    def from_dict(cls, d: dict) -> "BoundarySpec":
        try:
            coeffs = [tuple(row) for row in d["radial_coeffs"]]
            if any(len(row) != 3 for row in coeffs):
                raise InputError("each radial_coeffs row must be [freq, cos, sin]")
            return cls(tuple(coeffs), float(d.get("rotation", 0.0)), str(d.get("label", "")))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed domain spec: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "radial_coeffs": [list(row) for row in self.radial_coeffs],
            "rotation": self.rotation,
        }

    def rotated(self, angle: float) -> "BoundarySpec":
        return BoundarySpec(self.radial_coeffs, self.rotation + angle, self.label)


def circle_spec(radius: float = 1.0) -> BoundarySpec:
    return BoundarySpec(((0, radius, 0.0),), 0.0, f"circle R={radius:g}")


def ellipse_spec(a: float, b: float, max_modes: int = 400) -> BoundarySpec:
    """Even-mode Fourier truncation of the ellipse x^2/a^2 + y^2/b^2 = 1.

    Writes r(theta)^-2 = C (1 - 2 rho cos 2theta + rho^2) and uses the
    hypergeometric Fourier coefficients of (1 - 2 rho cos phi + rho^2)^(-1/2),
    so every retained coefficient is accurate to relative rounding.
    """
    A, B = (a * a + b * b) / 2, (a * a - b * b) / 2
    if B == 0.0:
        return BoundarySpec(((0, a, 0.0),), 0.0, f"ellipse a={a:g} b={b:g}")
    rho = (A - math.sqrt(A * A - B * B)) / B
    C = B / (2 * rho)
    scale = a * b / math.sqrt(C)
    rows = []
    poch = 1.0  # (1/2)_n / n!
    for n in range(max_modes):
        c = poch * rho**n * special.hyp2f1(0.5, 0.5 + n, n + 1, rho * rho)
        coef = scale * (c if n == 0 else 2 * c)
        if n > 0 and abs(coef) < 1e-22 * max(a, b):
            break
        rows.append((2 * n, float(coef), 0.0))
        poch *= (n + 0.5) / (n + 1)
    return BoundarySpec(tuple(rows), 0.0, f"ellipse a={a:g} b={b:g}")


@dataclass(frozen=True)
class GraphJet:
    """Derivatives ``f^(k)(0)``, k = 0..K, of the local graph y = f(x)."""

    side: str
    derivatives: np.ndarray

    @property
    def K(self) -> int:
        return len(self.derivatives) - 1

    def __getitem__(self, k):
        return self.derivatives[k]

    def reflected(self) -> "GraphJet":
        """Jet of x -> f(-x)."""
        k = np.arange(len(self.derivatives))
        return GraphJet(self.side, self.derivatives * (-1.0) ** k)


@dataclass(frozen=True, eq=False)
class BoundaryGeometry:
    spec: BoundarySpec
    freqs: np.ndarray
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray
    perimeter: float
    kappa_min: float
    kappa_max: float
    r_min: float
    r_max: float
    # Fourier data of the speed |alpha'(theta)| used by the arclength map
    _speed_mean: float = field(repr=False, default=0.0)
    _speed_modes: np.ndarray = field(repr=False, default=None)
    _speed_cos: np.ndarray = field(repr=False, default=None)
    _speed_sin: np.ndarray = field(repr=False, default=None)

    @property
    def convex(self) -> bool:
        return self.kappa_min > 0.0

    @property
    def curvature_bounds(self) -> tuple:
        return self.kappa_min, self.kappa_max

    # radial function

    def radius(self, theta, deriv: int = 0):
        theta = np.asarray(theta, dtype=float)
        ph = np.multiply.outer(theta, self.freqs) + deriv * np.pi / 2
        w = self.freqs.astype(float) ** deriv
        return np.cos(ph) @ (w * self.cos_coeffs) + np.sin(ph) @ (w * self.sin_coeffs)

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        r = self.radius(theta)
        return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def _theta_derivs(self, theta):
        """alpha, alpha_theta, alpha_thetatheta at theta."""
        theta = np.asarray(theta, dtype=float)
        r0, r1, r2 = (self.radius(theta, k) for k in range(3))
        c, s = np.cos(theta), np.sin(theta)
        e_r = np.stack([c, s], axis=-1)
        e_t = np.stack([-s, c], axis=-1)
        a0 = r0[..., None] * e_r
        a1 = r1[..., None] * e_r + r0[..., None] * e_t
        a2 = (r2 - r0)[..., None] * e_r + 2 * r1[..., None] * e_t
        return a0, a1, a2

    def speed(self, theta):
        return np.hypot(self.radius(theta), self.radius(theta, 1))

    def curvature_theta(self, theta):
        r0, r1, r2 = (self.radius(theta, k) for k in range(3))
        return (r0**2 + 2 * r1**2 - r0 * r2) / (r0**2 + r1**2) ** 1.5

    # arclength

    def arclength(self, theta):
        """Lifted arclength s(theta) with s(0) = 0 and s(theta + 2 pi) = s(theta) + P."""
        theta = np.asarray(theta, dtype=float)
        m = self._speed_modes
        ph = np.multiply.outer(theta, m)
        return (
            self._speed_mean * theta
            + np.sin(ph) @ (self._speed_cos / m)
            + (1.0 - np.cos(ph)) @ (self._speed_sin / m)
        )

    def theta_of_s(self, s):
        """Inverse of :meth:`arclength` on the lift."""
        s = np.asarray(s, dtype=float)
        P = self.perimeter
        k = np.floor(s / P)
        s0 = s - k * P
        theta = 2 * np.pi * s0 / P
        for _ in range(60):
            step = (self.arclength(theta) - s0) / self.speed(theta)
            theta = theta - step
            if np.all(np.abs(step) < 1e-15):
                break
        return theta + 2 * np.pi * k

    def frame(self, s):
        """Position, unit tangent, second arclength derivative and curvature at s."""
        theta = self.theta_of_s(s)
        a0, a1, a2 = self._theta_derivs(theta)
        v = np.linalg.norm(a1, axis=-1)
        T = a1 / v[..., None]
        kappa = (a1[..., 0] * a2[..., 1] - a1[..., 1] * a2[..., 0]) / v**3
        N = np.stack([-T[..., 1], T[..., 0]], axis=-1)
        return a0, T, kappa[..., None] * N, kappa

    def curvature(self, s):
        return self.curvature_theta(self.theta_of_s(s))

    def arclength_of_angle(self, theta):
        return self.arclength(theta)

    def rotated(self, angle: float) -> "BoundaryGeometry":
        return validate_spec(self.spec.rotated(angle))


def _effective_coeffs(spec: BoundarySpec):
    freqs = np.array([f for f, _, _ in spec.radial_coeffs], dtype=int)
    a = np.array([c for _, c, _ in spec.radial_coeffs])
    b = np.array([s for _, _, s in spec.radial_coeffs])
    rho = spec.rotation * freqs
    ca = a * np.cos(rho) - b * np.sin(rho)
    sb = a * np.sin(rho) + b * np.cos(rho)
    # merge duplicate frequencies
    uniq = np.unique(freqs)
    A = np.array([ca[freqs == f].sum() for f in uniq])
    B = np.array([sb[freqs == f].sum() for f in uniq])
    B[uniq == 0] = 0.0
    return uniq, A, B


def _refined_extrema(func, n_samples=CURVATURE_SAMPLES, rounds=CURVATURE_REFINEMENTS):
    """Min and max of a 2pi-periodic function by sampling plus local regridding."""
    grid = 2 * np.pi * np.arange(n_samples) / n_samples
    vals = func(grid)
    out = []
    for pick in (np.argmin, np.argmax):
        i = pick(vals)
        center, half = grid[i], 2 * np.pi / n_samples
        best = vals[i]
        for _ in range(rounds):
            local = np.linspace(center - half, center + half, 65)
            lv = func(local)
            j = pick(lv)
            center, best = local[j], lv[j]
            half /= 16
        out.append(float(best))
    return out[0], out[1]


def validate_spec(spec: BoundarySpec) -> BoundaryGeometry:
    """Check the symmetry and star-shape hypotheses and build the geometry.

    Raises
    ------
    OddModePresent
        a frequency is odd, so the curve is not centrally symmetric
    NotStarShaped
        r(theta) <= 0 somewhere
    NotEmbedded
        the parametrization has vanishing speed
    """
    if not spec.radial_coeffs:
        raise InputError("radial_coeffs is empty")
    for f, c, s in spec.radial_coeffs:
        if f % 2 and (c != 0.0 or s != 0.0):
            raise OddModePresent(f"odd frequency {f} breaks central symmetry")
        if not (math.isfinite(c) and math.isfinite(s)):
            raise InputError("non-finite coefficient")
    freqs, A, B = _effective_coeffs(spec)
    keep = (freqs % 2 == 0)
    freqs, A, B = freqs[keep], A[keep], B[keep]

    proto = BoundaryGeometry(spec, freqs, A, B, np.nan, np.nan, np.nan, np.nan, np.nan)
    r_min, r_max = _refined_extrema(proto.radius)
    if r_min <= 0.0:
        raise NotStarShaped(f"r(theta) reaches {r_min:.3g} <= 0")
    v_min, _ = _refined_extrema(proto.speed)
    if v_min <= 1e-12 * r_max:
        raise NotEmbedded("parametrization speed vanishes")

    # speed is smooth and periodic, so the trapezoid rule converges
    # geometrically and its DFT integrates to a closed-form arclength map
    nmax = int(freqs.max()) if len(freqs) else 0
    M = max(256, 8 * nmax)
    while True:
        th = 2 * np.pi * np.arange(M) / M
        F = np.fft.rfft(proto.speed(th)) / M
        if np.abs(F[M // 4 :]).max() < 1e-15 * abs(F[0]) or M >= 1 << 16:
            break
        M *= 2
    # beyond M/4 only rounding noise remains
    modes = np.arange(1, M // 4)
    sc, ss = 2 * F[1 : M // 4].real, -2 * F[1 : M // 4].imag
    sig = (np.abs(sc) > 1e-17 * F[0].real) | (np.abs(ss) > 1e-17 * F[0].real)
    modes, sc, ss = modes[sig], sc[sig], ss[sig]
    if len(modes) == 0:
        modes, sc, ss = np.array([2]), np.zeros(1), np.zeros(1)
    speed_mean = float(F[0].real)
    perimeter = 2 * np.pi * speed_mean

    geom = BoundaryGeometry(
        spec, freqs, A, B, perimeter, np.nan, np.nan, r_min, r_max,
        speed_mean, modes.astype(float), sc, ss,
    )
    k_min, k_max = _refined_extrema(geom.curvature_theta)
    object.__setattr__(geom, "kappa_min", k_min)
    object.__setattr__(geom, "kappa_max", k_max)
    return geom


def polygon_perimeter(geom: BoundaryGeometry, n: int) -> float:
    pts = geom.point(2 * np.pi * np.arange(n) / n)
    return float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())


def extract_graph_jet(geom: BoundaryGeometry, vertex: float, order: int, side: str = "+") -> GraphJet:
    """Taylor jet of the boundary as a graph over the tangent line at a vertex.

    ``vertex`` is the polar angle of the point A. The frame is rotated so
    that A sits on the positive y-axis; ``side="+"`` returns the graph near
    A and ``side="-"`` the graph near the antipodal point B = -A, in the same
    frame. Computed by truncated power series, so the result is exact up to
    rounding.
    """
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    K = int(order)
    center = vertex if side == "+" else vertex + np.pi
    R = Series(np.zeros(K + 1))
    for n, a, b in zip(geom.freqs, geom.cos_coeffs, geom.sin_coeffs):
        R = R + a * Series.cos_affine(n, n * center, K) + b * Series.sin_affine(n, n * center, K)
    sin_t = Series.sin_affine(1.0, 0.0, K)
    cos_t = Series.cos_affine(1.0, 0.0, K)
    if side == "+":
        x, y = -(R * sin_t), R * cos_t
    else:
        x, y = R * sin_t, -(R * cos_t)
    if abs(x.c[1]) < 1e-12 * geom.r_max:
        raise NotAGraph("tangent is vertical at the vertex")
    f = y.compose(x.revert())
    return GraphJet(side, f.derivatives())
