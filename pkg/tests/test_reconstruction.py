import math

import numpy as np
import pytest

from bst.bouncing_ball import curvature_branches, detect_bouncing_balls
from bst.errors import InconsistentSignature, InputError, VanishingThirdDerivative
from bst.hessian import hessian_data
from bst.invariants import InvariantConstants, polynomial_remainder
from bst.reconstruction import (SpectralData, compare_domains, disambiguate_curvature, duality_report,
                                predicted_signature, recover_jet, roundtrip_jets, spectral_data_from_jets)


def germ(L=1.5, f2=-0.3, f3=0.7, J=6, seed=11):
    rng = np.random.default_rng(seed)
    fp = np.empty(2 * J + 1)
    fp[0], fp[1], fp[2], fp[3] = L / 2, 0.0, f2, f3
    fp[4:] = rng.choice([-1, 1], 2 * J - 3) * rng.uniform(0.5, 2, 2 * J - 3)
    fm = np.array([-v if k % 2 == 0 else v for k, v in enumerate(fp)])
    return fp, fm


# curvature disambiguation


def test_elliptic_disambiguation():
    alpha = 2 * math.pi / 3
    f2, branch, a = disambiguate_curvature(alpha, "elliptic", 2.0, {2: -2})
    assert (f2, branch) == (pytest.approx(-0.25), "+") and a == pytest.approx(-1.0)
    f2, branch, a = disambiguate_curvature(alpha, "elliptic", 2.0, {2: 2})
    assert (f2, branch) == (pytest.approx(-0.75), "-") and a == pytest.approx(1.0)


def test_hyperbolic_disambiguation():
    alpha = 2 * math.acosh(7.0)
    f2, _, a = disambiguate_curvature(alpha, "hyperbolic", 4.0, {1: 2})
    assert f2 == pytest.approx(-2.0) and a == pytest.approx(14.0)
    f2, _, a = disambiguate_curvature(alpha, "hyperbolic", 4.0, {1: -2})
    assert f2 == pytest.approx(1.5) and a == pytest.approx(-14.0)


def test_inconsistent_or_missing_signature():
    with pytest.raises(InconsistentSignature):
        disambiguate_curvature(2 * math.pi / 3, "elliptic", 2.0, {2: 4})
    with pytest.raises(InputError):
        disambiguate_curvature(2 * math.pi / 3, "elliptic", 2.0, {1: 0})


def test_disambiguation_is_total():
    for kind in ("elliptic", "hyperbolic"):
        r = 2 if kind == "elliptic" else 1
        for alpha in np.linspace(0.1, math.pi - 0.1, 23):
            for L in (0.5, 1.0, 2.5):
                branches = curvature_branches(alpha, kind, L)
                sigs = [predicted_signature(-2 * (1 + L * f2), r) for f2 in branches]
                assert len(set(sigs)) == 2
                for f2, s in zip(branches, sigs):
                    got = disambiguate_curvature(alpha, kind, L, {r: s})[0]
                    assert got == pytest.approx(f2, abs=1e-14)
                    c = math.cos(alpha / 2) if kind == "elliptic" else math.cosh(alpha / 2)
                    assert (1 + L * got) ** 2 == pytest.approx(c * c, rel=1e-13)


def test_duality_report():
    rep = duality_report(2 * math.pi / 3, 2.0)
    assert rep["distinguished"]
    assert [b["signatures"]["2"] for b in rep["branches"]] == [-2, 2]
    assert [b["signatures"]["1"] for b in rep["branches"]] == [0, 0]


# recovery


def test_roundtrip_example():
    fp, fm = germ()
    out = roundtrip_jets(fp, fm, 1.5, 6)
    assert out["max_jet_error"] <= 1e-8
    assert out["branch"] == "+"


def test_roundtrip_with_remainder():
    fp, fm = germ()
    L, a = 1.5, -2 * (1 - 1.5 * 0.3)
    plain = roundtrip_jets(fp, fm, L, 6)["recovered_jets"]
    weights = {r: hessian_data(a, L, r).h11 for r in (1, 2)}
    for scale in (1.0, 2.0):
        consts = InvariantConstants(remainder=polynomial_remainder(scale, weights))
        out = roundtrip_jets(fp, fm, L, 6, consts)
        assert out["max_jet_error"] <= 1e-8
        assert np.allclose(out["recovered_jets"], plain, rtol=1e-8, atol=1e-8)


def test_doubling_remainder_changes_invariants():
    fp, fm = germ()
    one = spectral_data_from_jets(fp, fm, 1.5, InvariantConstants(remainder=polynomial_remainder(1.0)), 4)
    two = spectral_data_from_jets(fp, fm, 1.5, InvariantConstants(remainder=polynomial_remainder(2.0)), 4)
    assert any(abs(one.b[k] - two.b[k]) > 1e-6 * abs(one.b[k]) for k in one.b)


def test_reflection_normalization():
    fp, fm = germ(f3=-0.7)
    out = roundtrip_jets(fp, fm, 1.5, 6)
    assert out["recovered_jets"][3] > 0
    assert out["max_jet_error"] <= 1e-8
    assert compare_domains(out["recovered_jets"], fp, 1e-8) == "reflection-equivalent"


def test_vanishing_third_derivative():
    fp, fm = germ(f3=0.0)
    with pytest.raises(VanishingThirdDerivative):
        roundtrip_jets(fp, fm, 1.5, 4)


def test_scaling_absorbed_into_A():
    fp, fm = germ()
    consts = InvariantConstants(C={3: 1.4}, A={1: 0.8, 2: 1.9})
    data = spectral_data_from_jets(fp, fm, 1.5, consts, 6)
    c = -3.25
    scaled = SpectralData(data.L, data.kind, data.alpha, data.signatures, {k: c * v for k, v in data.b.items()})
    base = recover_jet(data, consts).jets
    other = recover_jet(scaled, consts.scaled_A(c)).jets
    assert np.allclose(base, other, rtol=1e-12, atol=1e-12)


def test_compare_domains():
    fp, _ = germ()
    assert compare_domains(fp, fp.copy()) == "equal"
    assert compare_domains(fp, fp * (-1.0) ** np.arange(len(fp))) == "reflection-equivalent"
    g = fp.copy()
    g[4] += 10 * 1e-8 * max(1.0, abs(g[4]))
    assert compare_domains(fp, g, 1e-8) == "distinct"


def test_spectral_data_serialization():
    fp, fm = germ()
    data = spectral_data_from_jets(fp, fm, 1.5, None, 4)
    back = SpectralData.from_dict(data.to_dict())
    assert back.b == data.b and back.signatures == data.signatures and back.alpha == data.alpha
    with pytest.raises(InputError):
        SpectralData.from_dict({"L": 1.0, "kind": "parabolic", "alpha": 1.0, "signatures": {}, "b": []})
    with pytest.raises(InputError):
        recover_jet(SpectralData(1.0, "elliptic", 1.0, {2: 0}, {(1, 2): 1.0}), J=2)


def test_domain_roundtrip(generic):
    for bb in detect_bouncing_balls(generic):
        out = roundtrip_jets(bb.f_plus.derivatives, bb.f_minus.derivatives, bb.L, 6)
        assert out["max_jet_error"] <= 1e-8
