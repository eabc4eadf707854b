"""Billiard map, length functionals and periodic orbit search.

Configurations are tuples of arclength positions ``(s_1, ..., s_q)`` on the
boundary; the q-link length functional is the sum of chord lengths between
consecutive points (cyclically). Its critical points are the q-bounce
periodic billiard trajectories.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .boundary import BoundaryGeometry
from .errors import ConditionViolated, GrazingRay, OnCoincidenceSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhasePoint:
    """Boundary point ``s`` and angle ``phi`` in (0, pi) from the tangent to the outgoing ray."""

    s: float
    phi: float

    @property
    def u(self) -> float:
        return math.sin(self.phi)

    @property
    def p(self) -> float:
        # symplectic momentum: the map preserves ds ^ d(cos phi)
        return math.cos(self.phi)


def _wrap(x, P):
    """Signed representative of x modulo P in [-P/2, P/2)."""
    return (np.asarray(x) + P / 2) % P - P / 2


@dataclass(frozen=True, eq=False)
class ConfigurationPoint:
    params: np.ndarray
    clearance: float

    @classmethod
    def make(cls, params, P: float) -> "ConfigurationPoint":
        params = np.asarray(params, dtype=float) % P
        gaps = np.abs(_wrap(np.roll(params, -1) - params, P))
        return cls(params, float(gaps.min()))

    @property
    def q(self) -> int:
        return len(self.params)


def length_functional(geom: BoundaryGeometry, config):
    """Value, gradient and Hessian of the q-link length functional.

    Derivatives are exact: first and second derivatives of the Euclidean
    distance composed with the unit-speed parametrization, whose second
    derivative is curvature times the inward normal.
    """
    s = np.asarray(config.params if isinstance(config, ConfigurationPoint) else config, dtype=float)
    q = len(s)
    X, T, A2, _ = geom.frame(s)
    nxt = np.roll(np.arange(q), -1)
    D = X[nxt] - X
    ell = np.linalg.norm(D, axis=1)
    if np.any(ell == 0.0):
        raise OnCoincidenceSet("two consecutive configuration points coincide")
    u = D / ell[:, None]
    uT0 = np.einsum("ij,ij->i", u, T)
    uT1 = np.einsum("ij,ij->i", u, T[nxt])

    value = float(ell.sum())
    grad = -uT0 + np.roll(uT1, 1)

    H = np.zeros((q, q))
    idx = np.arange(q)
    np.add.at(H, (idx, idx), (1 - uT0**2) / ell - np.einsum("ij,ij->i", u, A2))
    np.add.at(H, (nxt, nxt), (1 - uT1**2) / ell + np.einsum("ij,ij->i", u, A2[nxt]))
    mixed = -(np.einsum("ij,ij->i", T, T[nxt]) - uT0 * uT1) / ell
    np.add.at(H, (idx, nxt), mixed)
    np.add.at(H, (nxt, idx), mixed)
    return value, grad, H


def winding_number(params, P: float) -> int:
    """p with sum of forward lifted gaps = p P."""
    params = np.asarray(params, dtype=float)
    gaps = (np.roll(params, -1) - params) % P
    return int(round(gaps.sum() / P))


def reflection_angles(geom: BoundaryGeometry, params) -> np.ndarray:
    """Angle in (0, pi) between the tangent at each vertex and the outgoing link."""
    X, T, _, _ = geom.frame(np.asarray(params, dtype=float))
    D = np.roll(X, -1, axis=0) - X
    N = np.stack([-T[:, 1], T[:, 0]], axis=1)
    return np.arctan2(np.einsum("ij,ij->i", D, N), np.einsum("ij,ij->i", D, T))


# billiard map


def billiard_map(geom: BoundaryGeometry, x: PhasePoint, grazing_tol: float = 1e-8,
                 n_bracket: int = 2048) -> PhasePoint:
    """One reflection: follow the ray leaving ``x`` to the boundary and reflect.

    The hit point is the nearest positive-distance root of the cross product
    between the ray direction and the boundary point, bracketed on a polar
    grid and refined with Brent's method.
    """
    if not (grazing_tol < x.phi < math.pi - grazing_tol):
        raise GrazingRay(f"phi = {x.phi!r} is within {grazing_tol} of tangential")
    X0, T0, _, _ = geom.frame(x.s)
    N0 = np.array([-T0[1], T0[0]])
    v = math.cos(x.phi) * T0 + math.sin(x.phi) * N0
    theta0 = float(geom.theta_of_s(x.s))

    def g(theta):
        Y = geom.point(theta) - X0
        return v[0] * Y[..., 1] - v[1] * Y[..., 0]

    grid = theta0 + 2 * np.pi * np.arange(1, n_bracket) / n_bracket
    vals = g(grid)
    best = None
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        th = optimize.brentq(g, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15, maxiter=200)
        t = float(np.dot(geom.point(th) - X0, v))
        if t > 1e-12 * geom.perimeter and (best is None or t < best[1]):
            best = (th, t)
    if best is None:
        raise GrazingRay("no transversal intersection found")
    s1 = float(geom.arclength(best[0])) % geom.perimeter
    _, T1, _, _ = geom.frame(s1)
    N1 = np.array([-T1[1], T1[0]])
    w = v - 2 * np.dot(v, N1) * N1
    phi1 = math.atan2(np.dot(w, N1), np.dot(w, T1))
    if not (grazing_tol < phi1 < math.pi - grazing_tol):
        raise GrazingRay("reflected ray is tangential")
    return PhasePoint(s1, phi1)


def phase_of_config(geom: BoundaryGeometry, params) -> PhasePoint:
    """Phase point leaving the first vertex toward the second."""
    phi = reflection_angles(geom, params)
    return PhasePoint(float(np.asarray(params)[0] % geom.perimeter), float(phi[0]))


# periodic orbit search


@dataclass
class SearchConfig:
    n_starts: int = 16
    seed: int = 20211
    clearance_C: float | None = None
    grad_tol: float = 1e-11
    degeneracy_tol: float = 1e-7
    jitter: float = 0.3
    max_iter: int = 40
    deflation: bool = True

    def floor(self, geom: BoundaryGeometry, q: int) -> float:
        C = self.clearance_C
        if C is None:
            C = min(0.1 * geom.perimeter, 1.0 / geom.kappa_max) if geom.kappa_max > 0 else 0.1 * geom.perimeter
        return C / q


@dataclass(eq=False)
class PeriodicOrbit:
    config: ConfigurationPoint
    length: float
    p: int
    grad_norm: float
    hess_det: float
    min_eig_rel: float
    nondegenerate: bool
    family: bool = False
    orbit_class: int = -1

    @property
    def q(self) -> int:
        return self.config.q

    @property
    def degenerate(self) -> bool:
        return not self.nondegenerate

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "p": self.p,
            "length": self.length,
            "params": self.config.params.tolist(),
            "clearance": self.config.clearance,
            "grad_norm": self.grad_norm,
            "hess_det": self.hess_det,
            "min_eig_rel": self.min_eig_rel,
            "nondegenerate": self.nondegenerate,
            "degenerate_family": self.family,
            "orbit_class": self.orbit_class,
        }


class OrbitList(list):
    """List of orbits that also carries per-start warnings and the search settings."""

    def __init__(self, items=(), warnings=(), search=None):
        super().__init__(items)
        self.warnings = list(warnings)
        self.search = search


def _dihedral_images(params, P):
    x = np.asarray(params)
    q = len(x)
    out = []
    for seq in (x, x[::-1]):
        for k in range(q):
            out.append(np.roll(seq, k))
    return out


def dihedral_distance(a, b, P: float) -> float:
    """Max-norm periodic distance between two configurations, minimized over
    cyclic relabelling and reversal."""
    return min(float(np.abs(_wrap(np.asarray(a) - img, P)).max()) for img in _dihedral_images(b, P))


def _closest_image(x, root, P):
    best, bd = None, np.inf
    for img in _dihedral_images(root, P):
        d = _wrap(x - img, P)
        n = float(np.linalg.norm(d))
        if n < bd:
            best, bd = d, n
    return best, bd


def _levenberg_marquardt(fun, x0, tol, max_iter, max_step):
    """Drive ``G(x) = 0`` where ``fun`` returns (G, J); steps clipped to max_step."""
    x = np.array(x0, dtype=float)
    G, J = fun(x)
    nrm = float(np.linalg.norm(G))
    mu = 1e-6
    n = len(x)
    for _ in range(max_iter):
        if nrm <= tol:
            return x, nrm, True
        JTJ = J.T @ J
        scale = max(float(np.trace(JTJ)) / n, 1e-300)
        while True:
            step = np.linalg.solve(JTJ + mu * scale * np.eye(n), -J.T @ G)
            big = np.abs(step).max()
            if big > max_step:
                step *= max_step / big
            xn = x + step
            try:
                Gn, Jn = fun(xn)
            except OnCoincidenceSet:
                Gn = None
            if Gn is not None and np.linalg.norm(Gn) < nrm:
                x, G, J, nrm = xn, Gn, Jn, float(np.linalg.norm(Gn))
                mu = max(mu / 10, 1e-15)
                break
            mu *= 10
            if mu > 1e12:
                return x, nrm, nrm <= tol
    return x, nrm, nrm <= tol


def find_orbits(geom: BoundaryGeometry, q: int, p_filter=None, search: SearchConfig | None = None) -> OrbitList:
    """Critical points of the q-link length functional, one per dihedral class.

    Starts are (p, q) star polygons perturbed by a scrambled Halton sequence.
    Each start runs Levenberg-Marquardt on a deflated gradient (found roots
    and all their relabellings are divided out), then is polished on the
    plain gradient. Degenerate critical points (one-parameter families, as in
    the circle and ellipse) are merged into one representative per length.
    """
    if q < 2:
        raise ValueError("q must be at least 2")
    search = search or SearchConfig()
    P = geom.perimeter
    tol = search.grad_tol * P
    floor = search.floor(geom, q)
    ps = sorted(set(p_filter)) if p_filter else list(range(1, q // 2 + 1))
    roots: list[np.ndarray] = []
    found: list[PeriodicOrbit] = []
    warnings = []

    def plain(x):
        _, g, H = length_functional(geom, x)
        return g, H

    def deflated(x):
        _, g, H = length_functional(geom, x)
        if not roots:
            return g, H
        M = 1.0
        dlog = np.zeros_like(x)
        for r in roots:
            d, dist = _closest_image(x, r, P)
            dn = dist / P
            if dn == 0.0:
                dn = 1e-300
            M *= 1.0 / dn**2 + 1.0
            dlog += -2.0 * d / P**2 / (dn**2 * (1.0 + dn**2))
        return M * g, M * H + np.outer(g, M * dlog)

    for p in ps:
        sampler = qmc.Halton(d=q, scramble=True, seed=search.seed + 7919 * q + p)
        U = sampler.random(search.n_starts)
        for k, u in enumerate(U):
            x0 = u[0] * P + np.arange(q) * p * P / q
            x0[1:] += search.jitter * (P / q) * (u[1:] - 0.5)
            fun = deflated if search.deflation else plain
            x, nrm, ok = _levenberg_marquardt(fun, x0, tol, search.max_iter, 0.25 * P / q)
            x, nrm, ok = _levenberg_marquardt(plain, x, tol, 30, 0.25 * P / q)
            if not ok:
                warnings.append(f"NoConvergence: q={q} p={p} start={k} |grad|={nrm:.3g}")
                continue
            cfg = ConfigurationPoint.make(x, P)
            if cfg.clearance < floor:
                warnings.append(f"rejected: q={q} p={p} start={k} clearance {cfg.clearance:.3g} < {floor:.3g}")
                continue
            _add_root(geom, cfg, nrm, search, roots, found)

    out = [o for o in found if o.p in ps]
    out.sort(key=lambda o: (round(o.length, 9), o.p, tuple(np.round(_canonical(o.config.params, P), 9))))
    for i, o in enumerate(out):
        o.orbit_class = i
    return OrbitList(out, warnings, search)


def _canonical(params, P):
    imgs = [np.sort(img % P) for img in _dihedral_images(params, P)[:1]]
    return imgs[0]


def _add_root(geom, cfg, grad_norm, search, roots, found):
    P = geom.perimeter
    x = cfg.params
    for o in found:
        if dihedral_distance(x, o.config.params, P) < 1e-7 * P:
            return
    value, g, H = length_functional(geom, x)
    eig = np.linalg.eigvalsh(H)
    rel = float(np.abs(eig).min() / max(np.abs(eig).max(), 1e-300))
    nondeg = rel > search.degeneracy_tol
    p = winding_number(x, P)
    q = len(x)
    if p > q / 2:
        x = x[::-1].copy()
        p = q - p
        cfg = ConfigurationPoint.make(x, P)
    roots.append(cfg.params.copy())
    if not nondeg:
        for o in found:
            if o.family and o.p == p and abs(o.length - value) <= 1e-9 * P:
                return
    found.append(PeriodicOrbit(cfg, value, p, float(np.linalg.norm(g)), float(np.prod(eig)),
                               rel, nondeg, family=not nondeg))


# length spectrum


@dataclass
class SpectrumEntry:
    length: float
    multiplicity: int
    orbits: list

    @property
    def degenerate(self) -> bool:
        return any(o.family for o in self.orbits)


@dataclass
class LengthSpectrum:
    entries: list
    tolerance: float
    q_max: int
    search: SearchConfig
    warnings: list = field(default_factory=list)

    def lengths(self):
        return [e.length for e in self.entries]

    def near(self, length: float, tol: float | None = None):
        tol = self.tolerance if tol is None else tol
        return [e for e in self.entries if abs(e.length - length) <= tol]

    def rows(self):
        """One CSV row per orbit class: length, multiplicity, p, q, degenerate_flag."""
        out = []
        for e in self.entries:
            for o in e.orbits:
                out.append((e.length, e.multiplicity, o.p, o.q, int(o.family)))
        return out


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("BST_THREADS", "1")))
    except ValueError:
        return 1


def length_spectrum(geom: BoundaryGeometry, q_max: int, tolerance: float = 1e-9,
                    search: SearchConfig | None = None) -> LengthSpectrum:
    """All orbits with 2 <= q <= q_max, clustered by length.

    Multiplicity counts dihedral classes; a degenerate family counts once.
    """
    if q_max < 2:
        raise ValueError("q_max must be at least 2")
    search = search or SearchConfig()
    qs = list(range(2, q_max + 1))
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        results = list(pool.map(lambda q: find_orbits(geom, q, None, search), qs))
    orbits, warnings = [], []
    for res in results:
        orbits.extend(res)
        warnings.extend(res.warnings)
    orbits.sort(key=lambda o: (o.length, o.q, o.p))
    entries: list[SpectrumEntry] = []
    for o in orbits:
        if entries and o.length - entries[-1].orbits[-1].length <= tolerance:
            entries[-1].orbits.append(o)
        else:
            entries.append(SpectrumEntry(o.length, 0, [o]))
    for e in entries:
        e.multiplicity = len(e.orbits)
        e.length = float(np.mean([o.length for o in e.orbits]))
    return LengthSpectrum(entries, tolerance, q_max, search, warnings)


# condition (4)


def _is_iterate_of(orbit: PeriodicOrbit, vertices, P, tol=1e-6) -> bool:
    """True when the orbit only visits the given boundary points."""
    pts = orbit.config.params
    return all(min(abs(_wrap(x - v, P)) for v in vertices) < tol * P for x in pts)


def check_condition4(geom: BoundaryGeometry, bb, q_max: int = 6, spectrum: LengthSpectrum | None = None,
                     length_tol: float = 1e-8, lazutkin_slack: float = 1e-9, strict: bool = False) -> dict:
    """Simplicity of 2L and 4L in the computed spectrum, 4L != P, plus diagnostics.

    ``bb`` is a bouncing ball orbit with vertex separation ``bb.L``. Orbits
    that only visit the two vertices of ``bb`` (the orbit itself and its
    iterates) are not counted as collisions.
    """
    if spectrum is None:
        spectrum = length_spectrum(geom, q_max)
    P = geom.perimeter
    L = bb.L
    vertices = [bb.s_A, bb.s_B]
    tol = length_tol * max(1.0, P)
    collisions = {}
    for name, target in (("2L", 2 * L), ("4L", 4 * L)):
        hits = []
        for e in spectrum.entries:
            for o in e.orbits:
                if abs(o.length - target) <= tol and not _is_iterate_of(o, vertices, P):
                    hits.append({"p": o.p, "q": o.q, "length": o.length, "params": o.config.params.tolist()})
        collisions[name] = hits
    perimeter_ok = abs(4 * L - P) > tol

    laz = lazutkin_check(geom, [o for e in spectrum.entries for o in e.orbits], lazutkin_slack)
    bound = bounce_bound_diagnostic(geom, L, spectrum)
    passed = not collisions["2L"] and not collisions["4L"] and perimeter_ok
    report = {
        "passed": passed,
        "length_2L": 2 * L,
        "length_4L": 4 * L,
        "perimeter": P,
        "four_L_neq_perimeter": perimeter_ok,
        "collisions": collisions,
        "q_max": spectrum.q_max,
        "lazutkin": laz,
        "bounce_bound": bound,
        "search_warnings": len(spectrum.warnings),
    }
    if strict and not passed:
        first = collisions["2L"] or collisions["4L"]
        what = f"length coincidence {first[0]}" if first else "4L equals the perimeter"
        raise ConditionViolated(f"condition (4) fails: {what}", report)
    return report


def lazutkin_check(geom: BoundaryGeometry, orbits, slack: float = 1e-9) -> dict:
    """Check 2 phi / kappa_max <= |s' - s| <= 2 phi / kappa_min on every link."""
    if not geom.convex:
        return {"applicable": False}
    P = geom.perimeter
    kmin, kmax = geom.kappa_min, geom.kappa_max
    worst_low, worst_high, n, bad = np.inf, np.inf, 0, 0
    for o in orbits:
        s = o.config.params
        phi = reflection_angles(geom, s)
        arc = (np.roll(s, -1) - s) % P
        low = arc - 2 * phi / kmax
        high = 2 * phi / kmin - arc
        worst_low = min(worst_low, float(low.min()))
        worst_high = min(worst_high, float(high.min()))
        bad += int(np.sum((low < -slack) | (high < -slack)))
        n += len(s)
    return {
        "applicable": True,
        "links": n,
        "violations": bad,
        "min_margin_lower": worst_low if n else None,
        "min_margin_upper": worst_high if n else None,
        "passed": bad == 0,
    }


def bounce_bound_diagnostic(geom: BoundaryGeometry, L: float, spectrum: LengthSpectrum | None = None) -> dict:
    """Heuristic bounce-count thresholds from the curvature bounds.

    An orbit of length at most 4L with q links has a link of length <= 4L/q.
    Long-arc short links are excluded once 12 L kappa_max < q, and short-arc
    links force reflection angles below 4 L kappa_max / q. These are
    diagnostics only; the constants in the existence argument are not
    computable, so no certified bound is claimed.
    """
    kmax = geom.kappa_max
    out = {
        "kappa_min": geom.kappa_min,
        "kappa_max": kmax,
        "q_long_arc_excluded": int(math.ceil(12 * L * kmax)) if kmax > 0 else None,
        "certified": False,
    }
    if spectrum is not None:
        short = []
        for e in spectrum.entries:
            for o in e.orbits:
                if o.length <= 4 * L * (1 + 1e-12):
                    s = o.config.params
                    X = geom.point(geom.theta_of_s(s))
                    link = float(np.linalg.norm(np.roll(X, -1, axis=0) - X, axis=1).min())
                    phi = reflection_angles(geom, s)
                    short.append({
                        "q": o.q, "p": o.p,
                        "min_link": link,
                        "link_bound": 4 * L / o.q,
                        "max_phi": float(np.minimum(phi, np.pi - phi).max()),
                        "phi_bound": 4 * L * kmax / o.q,
                    })
        out["orbits_up_to_4L"] = short
    return out
