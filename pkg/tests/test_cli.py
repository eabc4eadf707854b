import json
import math

import numpy as np
import pytest

from bst.boundary import validate_spec
from bst.bouncing_ball import detect_bouncing_balls
from bst.cli import main
from bst.errors import InputError
from bst.io import RunManifest, dumps, load_domain, manifest_path, read_csv, read_json, to_jsonable
from bst.reconstruction import jet_error

from conftest import DOMAINS


def strict_load(path):
    def reject(token):
        raise AssertionError(f"non-finite number {token} in JSON")

    return json.loads(open(path).read(), parse_constant=reject)


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys else None
    return code, out


def test_validate(tmp_path):
    out = tmp_path / "v.json"
    assert run(["validate", "--domain", DOMAINS / "circle.json", "--out", out])[0] == 0
    d = strict_load(out)
    assert d["perimeter"] == pytest.approx(2 * math.pi, abs=1e-14)
    m = strict_load(manifest_path(out))
    assert m["command"] == "validate" and len(m["domain_sha256"]) == 64


def test_unreadable_and_malformed_inputs(tmp_path, capsys):
    assert run(["validate", "--domain", tmp_path / "missing.json"], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["validate", "--domain", bad], capsys)[0] == 2
    odd = tmp_path / "odd.json"
    odd.write_text(json.dumps({"radial_coeffs": [[0, 1.0, 0.0], [3, 0.1, 0.0]]}))
    code, out = run(["validate", "--domain", odd], capsys)
    assert code == 2 and "error" in out.err


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["hessian", "--a", "1"])
    assert exc.value.code == 2


def test_hessian_output(tmp_path):
    out = tmp_path / "h.json"
    assert run(["hessian", "--a", -1, "--L", 2, "--r", 2, "--branch", "plus", "--out", out])[0] == 0
    d = strict_load(out)
    assert d["signature"] == -2
    assert d["maslov"]["m"] == (12 - 2) % 8
    assert np.allclose(np.array(d["H"]) @ np.array(d["h_inv"]), np.eye(4), atol=1e-12)


def test_hessian_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        run(["hessian", "--a", 0.37, "--L", 1.1, "--r", 3, "--branch", "minus", "--out", out])
    assert a.read_bytes() == b.read_bytes()


def test_duality(tmp_path):
    out = tmp_path / "d.json"
    assert run(["duality", "--alpha", 2 * math.pi / 3, "--L", 2, "--out", out])[0] == 0
    d = strict_load(out)
    assert d["distinguished"]
    assert [b["f2"] for b in d["branches"]] == [pytest.approx(-0.25), pytest.approx(-0.75)]


def test_roundtrip_generic(capsys):
    code, out = run(["roundtrip", "--domain", DOMAINS / "generic.json", "--J", 6], capsys)
    assert code == 0
    line = [s for s in out.out.splitlines() if s.startswith("max_jet_error")][0]
    assert float(line.split()[1]) <= 1e-8


def test_roundtrip_ellipse_has_no_usable_orbit(capsys):
    # both axes have f''' = 0 by symmetry, so condition (3) fails
    assert run(["roundtrip", "--domain", DOMAINS / "ellipse21.json", "--J", 4], capsys)[0] == 1


def test_invariants_then_reconstruct(tmp_path):
    inv = tmp_path / "inv.json"
    consts = tmp_path / "c.json"
    consts.write_text(json.dumps({"C_tilde": {"3": 1.5}, "A": {"2": 0.7}}))
    assert run(["invariants", "--domain", DOMAINS / "generic.json", "--jmax", 5, "--constants", consts,
                "--out", inv])[0] == 0
    d = strict_load(inv)
    assert len(d["invariants"]) == 8 and len(d["prefactors"]) == 4
    jets = tmp_path / "jets.json"
    assert run(["reconstruct", "--spectral", inv, "--constants", consts, "--out", jets])[0] == 0
    rec = np.array(strict_load(jets)["jets"])
    assert len(rec) == 11 and rec[3] > 0
    geom = validate_spec(load_domain(DOMAINS / "generic.json"))
    bb = [b for b in detect_bouncing_balls(geom, 10) if abs(b.theta - d["orbit"]["theta"]) < 1e-12][0]
    assert jet_error(bb.f_plus.derivatives, rec) <= 1e-8


def test_bouncing_ball_output(tmp_path):
    out = tmp_path / "bb.json"
    assert run(["bouncing-ball", "--domain", DOMAINS / "ellipse21.json", "--out", out])[0] == 0
    orbits = strict_load(out)["orbits"]
    assert sorted(round(o["L"], 9) for o in orbits) == [2.0, 4.0]
    kinds = {round(o["L"]): o["stability"]["kind"] for o in orbits}
    assert kinds == {2: "elliptic", 4: "hyperbolic"}


def test_check_ellipse_fails(tmp_path):
    out = tmp_path / "check.json"
    assert run(["check", "--domain", DOMAINS / "ellipse21.json", "--qmax", 4, "--out", out])[0] == 1
    reports = {round(r["L"]): r for r in strict_load(out)["reports"]}
    minor = reports[2]
    assert not minor["condition_2"]["passed"] and not minor["condition_3"]["passed"]
    assert [[c["p"], c["q"]] for c in minor["condition_4"]["collisions"]["4L"]] == [[1, 2]]


def test_spectrum_and_orbits_outputs(tmp_path):
    csv_path = tmp_path / "spec.csv"
    assert run(["spectrum", "--domain", DOMAINS / "nearcircle.json", "--qmax", 3, "--out", csv_path])[0] == 0
    rows = read_csv(csv_path)
    assert list(rows[0]) == ["length", "multiplicity", "p", "q", "degenerate_flag"]
    assert float(rows[0]["length"]) == pytest.approx(4 * 0.95, abs=1e-10)
    assert (tmp_path / "spec.png").stat().st_size > 0
    assert strict_load(manifest_path(csv_path))["seed"] == 20211

    a, b = tmp_path / "o1.json", tmp_path / "o2.json"
    for out in (a, b):
        assert run(["orbits", "--domain", DOMAINS / "nearcircle.json", "--q", "2..3", "--out", out])[0] == 0
    assert a.read_bytes() == b.read_bytes()
    orbits = strict_load(a)["orbits"]
    assert {o["q"] for o in orbits} == {2, 3}


def test_to_jsonable_handles_nonfinite():
    d = to_jsonable({"x": float("nan"), "y": np.float64(np.inf), "z": 1 + 2j, 3: np.arange(2)})
    assert d == {"x": None, "y": None, "z": {"re": 1.0, "im": 2.0}, "3": [0, 1]}
    json.loads(dumps(d), parse_constant=lambda t: pytest.fail(t))


def test_read_json_errors(tmp_path):
    with pytest.raises(InputError):
        read_json(tmp_path / "nope.json")


def test_manifest_fields():
    m = RunManifest("x", ["--a"]).finish().to_dict()
    assert set(m) == {"command", "argv", "domain_sha256", "seed", "tolerances", "version", "python", "numpy",
                      "elapsed_s"}
