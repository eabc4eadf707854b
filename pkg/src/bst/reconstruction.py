"""Recovery of the boundary jet at a bouncing ball vertex from its invariants.

Input is what the trace at lengths 2L and 4L determines: L, the stability
class and angle, the Hessian signatures of the first two iterates, and the
raw invariants b(r, j) for r = 1, 2 and j = 2..J. The curvature comes from
the stability angle up to a two-fold ambiguity, resolved by the signature;
the higher derivatives follow by induction on j, two at a time, from a 2x2
linear system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bouncing_ball import curvature_branches
from .errors import (DegenerateDenominator, InconsistentSignature, InputError, VanishingThirdDerivative,
                     ZeroEigenvalue)
from .hessian import eigenvalue_formula, hessian_data, hessian_direct, signature_and_maslov
from .invariants import InvariantConstants, b_invariant, decoupling_system, normalizer

F3_TOL = 1e-12


@dataclass
class SpectralData:
    L: float
    kind: str
    alpha: float
    signatures: dict  # r -> signature, r in {1, 2}
    b: dict  # (r, j) -> raw invariant

    @property
    def J(self) -> int:
        return max(j for _, j in self.b)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "kind": self.kind,
            "alpha": self.alpha,
            "signatures": {str(r): s for r, s in self.signatures.items()},
            "b": [{"r": r, "j": j, "value": v} for (r, j), v in sorted(self.b.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralData":
        try:
            kind = str(d["kind"])
            if kind not in ("elliptic", "hyperbolic"):
                raise InputError("kind must be elliptic or hyperbolic")
            b = {(int(e["r"]), int(e["j"])): float(e["value"]) for e in d["b"]}
            return cls(float(d["L"]), kind, float(d["alpha"]),
                       {int(k): int(v) for k, v in d["signatures"].items()}, b)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed spectral data: {exc}") from exc


@dataclass
class ReconstructionResult:
    jets: np.ndarray  # f^(k)(0), k = 0..2J
    branch: str
    a: float
    sign_convention: bool = True  # f3 > 0 enforced
    stages: list = field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.jets) - 1

    def to_dict(self) -> dict:
        return {
            "jets": self.jets.tolist(),
            "branch": self.branch,
            "a": self.a,
            "f3_positive": self.sign_convention,
            "stages": self.stages,
        }


def predicted_signature(a: float, r: int) -> int | None:
    try:
        return signature_and_maslov(eigenvalue_formula(a, r), r).signature
    except ZeroEigenvalue:
        return None


def disambiguate_curvature(alpha: float, kind: str, L: float, signatures: dict):
    """Pick the root of the curvature quadratic whose Hessian signature matches.

    Elliptic orbits are decided by the second iterate (both roots give
    signature 0 at r = 1), hyperbolic ones by the first.
    Returns (f2, branch, a).
    """
    r = 2 if kind == "elliptic" else 1
    if r not in signatures:
        raise InputError(f"signature of iterate r={r} is required")
    observed = int(signatures[r])
    f_plus, f_minus = curvature_branches(alpha, kind, L)
    if f_plus == f_minus:
        return f_plus, "+", -2.0 * (1 + L * f_plus)
    matches = []
    for f2, branch in ((f_plus, "+"), (f_minus, "-")):
        a = -2.0 * (1 + L * f2)
        if predicted_signature(a, r) == observed:
            matches.append((f2, branch, a))
    if len(matches) != 1:
        raise InconsistentSignature(f"signature {observed} at r={r} matches {len(matches)} branches")
    return matches[0]


def recover_jet(data: SpectralData, consts: InvariantConstants | None = None, J: int | None = None,
                f3_tol: float = F3_TOL) -> ReconstructionResult:
    """Recover f^(k)(0) for k <= 2J by induction on j.

    Stage j = 2 solves for (f^(4), (f^(3))^2) and takes the positive root;
    stage j >= 3 removes the remainder evaluated on the known (2j-2)-jet and
    solves for (f^(2j), f^(3) f^(2j-1)).
    """
    consts = consts or InvariantConstants()
    J = data.J if J is None else J
    if J < 2:
        raise InputError("J must be at least 2")
    for r in (1, 2):
        for j in range(2, J + 1):
            if (r, j) not in data.b:
                raise InputError(f"invariant b({r}, {j}) missing")
    L = data.L
    f2, branch, a = disambiguate_curvature(data.alpha, data.kind, L, data.signatures)
    hess = {r: hessian_data(a, L, r) for r in (1, 2)}
    jet = np.zeros(2 * J + 1)
    jet[0], jet[2] = L / 2, f2
    stages = []
    for j in range(2, J + 1):
        system = decoupling_system(hess[1], hess[2], consts, j)
        rhs = np.empty(2)
        for i, r in enumerate((1, 2)):
            R = float(consts.remainder(jet[: 2 * j - 1].copy(), r, j))
            rhs[i] = (data.b[(r, j)] - R) / normalizer(hess[r], consts, j)
        X, Y = np.linalg.solve(system.matrix, rhs)
        if j == 2:
            if Y <= f3_tol:
                raise VanishingThirdDerivative(f"(f3)^2 = {Y:.3g}; the recursion cannot proceed")
            jet[3] = math.sqrt(Y)
        else:
            jet[2 * j - 1] = Y / jet[3]
        jet[2 * j] = X
        stages.append({"j": j, "cond": system.cond, "rel_det": system.rel_det})
    return ReconstructionResult(jet, branch, a, True, stages)


def spectral_data_from_jets(f_plus, f_minus, L: float, consts: InvariantConstants | None, J: int) -> SpectralData:
    """Forward map: invariants and signatures of a germ given by its jets.

    The stability angle comes from the closed form cos(alpha/2) = |1 + L f''|
    (cosh for |1 + L f''| > 1), and the signatures from the numerically
    diagonalized Hessian of the length functional.
    """
    consts = consts or InvariantConstants()
    f_plus = np.asarray(f_plus, dtype=float)
    c = abs(1 + L * f_plus[2])
    if abs(c - 1) < 1e-14:
        raise DegenerateDenominator("parabolic orbit: |1 + L f''| = 1")
    kind = "elliptic" if c < 1 else "hyperbolic"
    alpha = 2 * (math.acos(c) if kind == "elliptic" else math.acosh(c))
    a = -2.0 * (1 + L * f_plus[2])
    sigs = {}
    for r in (1, 2):
        ev = np.linalg.eigvalsh(-L * hessian_direct((f_plus, f_minus), L, r))
        try:
            sigs[r] = signature_and_maslov(ev, r).signature
        except ZeroEigenvalue:
            pass
    b = {}
    for r in (1, 2):
        h = hessian_data(a, L, r)
        for j in range(2, J + 1):
            b[(r, j)] = b_invariant(f_plus, h, consts, r, j).b
    return SpectralData(L, kind, alpha, sigs, b)


def normalize_reflection(jet) -> np.ndarray:
    """Representative with f3 >= 0 of the jet modulo x -> -x."""
    jet = np.asarray(jet, dtype=float)
    if len(jet) > 3 and jet[3] < 0:
        return jet * (-1.0) ** np.arange(len(jet))
    return jet.copy()


def jet_error(true_jet, recovered, k_min: int = 2, relative_floor: float = 1.0) -> float:
    """max_k |recovered - true| / max(|true|, floor) after reflection normalization."""
    t = normalize_reflection(true_jet)
    r = np.asarray(recovered, dtype=float)
    n = min(len(t), len(r))
    err = np.abs(r[k_min:n] - t[k_min:n]) / np.maximum(np.abs(t[k_min:n]), relative_floor)
    return float(err.max())


def compare_domains(result_f, result_g, tol: float = 1e-8) -> str:
    """'equal', 'reflection-equivalent' or 'distinct' for two recovered jets."""
    f = np.asarray(getattr(result_f, "jets", result_f), dtype=float)
    g = np.asarray(getattr(result_g, "jets", result_g), dtype=float)
    n = min(len(f), len(g))
    f, g = f[:n], g[:n]
    scale = np.maximum(np.maximum(np.abs(f), np.abs(g)), 1.0)
    if np.all(np.abs(f - g) <= tol * scale):
        return "equal"
    sign = (-1.0) ** np.arange(n)
    if np.all(np.abs(f - sign * g) <= tol * scale):
        return "reflection-equivalent"
    return "distinct"


def duality_report(alpha: float, L: float, kind: str = "elliptic") -> dict:
    """The two germs sharing the stability angle and their Hessian signatures."""
    out = {"alpha": alpha, "L": L, "kind": kind, "branches": []}
    for f2, branch in zip(curvature_branches(alpha, kind, L), ("+", "-")):
        a = -2.0 * (1 + L * f2)
        sig = {str(r): predicted_signature(a, r) for r in (1, 2)}
        out["branches"].append({"branch": branch, "f2": f2, "a": a, "signatures": sig})
    r = "2" if kind == "elliptic" else "1"
    s = [b["signatures"][r] for b in out["branches"]]
    out["decisive_iterate"] = int(r)
    out["distinguished"] = s[0] is not None and s[1] is not None and s[0] != s[1]
    return out


def roundtrip_jets(f_plus, f_minus, L: float, J: int, consts: InvariantConstants | None = None) -> dict:
    """Invariants from a germ, then recovery; reports the largest jet error.

    The error of each derivative is |recovered - true| / max(|true|, 1), so
    derivatives that vanish by symmetry are measured absolutely.
    """
    sd = spectral_data_from_jets(f_plus, f_minus, L, consts, J)
    res = recover_jet(sd, consts, J)
    true = normalize_reflection(np.asarray(f_plus, dtype=float)[: 2 * J + 1])
    err = np.abs(res.jets - true) / np.maximum(np.abs(true), 1.0)
    return {
        "J": J,
        "L": L,
        "a": res.a,
        "kind": sd.kind,
        "alpha": sd.alpha,
        "branch": res.branch,
        "signatures": sd.signatures,
        "true_jets": true,
        "recovered_jets": res.jets,
        "errors": err,
        "max_jet_error": float(err[2:].max()),
        "stages": res.stages,
    }
