import json

import numpy as np
import pytest

import morph

SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]


def test_bundled_examples_load():
    names = morph.bundled_example_names()
    assert names == ["airfoil", "armadillo", "dinosaur", "gingerbread"]
    for name in names:
        p = morph.bundled_example(name)
        assert p.num_states >= 2
        assert p.area > 0
        assert morph.load_problem(p.to_dict()).to_dict() == p.to_dict()


def test_invalid_problem_raises_value_error():
    doc = morph.bundled_example("airfoil").to_dict()
    doc["domain"] = [[0, 0], [1, 1]]
    with pytest.raises(ValueError, match="/domain"):
        morph.load_problem(json.dumps(doc))
    with pytest.raises(morph.ValidationError):
        morph.load_problem("not json")


def test_material_endpoints():
    m = morph.builtin_material("AG50")
    assert morph.interpolate_modulus(1.0, 0.0, m) == 120.0
    assert morph.interpolate_modulus(1.0, 1.0, m) == 2.9
    sweep = [morph.interpolate_modulus(1.0, e, m) for e in np.linspace(0, 1, 100)]
    assert all(b < a for a, b in zip(sweep, sweep[1:]))


def test_regularization_and_projection():
    assert morph.regularization(0.2, 0.2, 0.8, 3.0) == 0.0
    assert morph.regularization(0.8, 0.2, 0.8, 3.0) == 0.0
    assert morph.regularization(0.5, 0.2, 0.8, 3.0) == pytest.approx(3.0, rel=1e-15)
    assert morph.project(0.6, 0.5, 0.001, 1.0) == 1.0
    assert morph.project(0.4, 0.5, 0.001, 1.0) == 0.001


def test_tessellate_unit_square():
    r = morph.tessellate(SQUARE, 16, seed=2)
    assert r["converged"]
    assert np.max(np.abs(r["areas"] - 1 / 16)) < 1e-6
    assert r["gradient_norm"] < r["threshold"]
    assert r["sites"].shape == (16, 2)
    assert r["svg"].startswith("<?xml")


def test_tessellate_relative_volumes():
    r = morph.tessellate(SQUARE, 3, phi=[1, 2, 1])
    assert np.allclose(r["areas"], [0.25, 0.5, 0.25], atol=1e-6)
    with pytest.raises(ValueError):
        morph.tessellate(SQUARE, 3, phi=[1, 2])


def test_equal_weights_give_voronoi():
    rng = np.random.default_rng(4)
    sites = rng.uniform(0, 1, size=(10, 2))
    d = morph.power_diagram(sites, np.zeros(10), SQUARE)
    assert d["areas"].sum() == pytest.approx(1.0, rel=1e-12)
    for x in rng.uniform(0, 1, size=(200, 2)):
        owner = np.argmin(np.linalg.norm(sites - x, axis=1))
        c = d["centroids"][owner]
        # The owner's cell must contain x: check against the cell polygons.
        inside = False
        for piece in d["cells"][owner]:
            n = len(piece)
            crossings = 0
            for i in range(n):
                (x0, y0), (x1, y1) = piece[i], piece[(i + 1) % n]
                if (y0 > x[1]) != (y1 > x[1]):
                    if x[0] < x0 + (x[1] - y0) * (x1 - x0) / (y1 - y0):
                        crossings += 1
            inside |= crossings % 2 == 1
        assert inside, (x, owner, c)


def test_gradient_check():
    p = morph.random_problem(1)
    r = morph.gradient_check(p)
    assert r["passed"]
    assert [f["family"] for f in r["families"]] == ["rho", "eta1", "eta2"]
    assert 3.5 <= r["richardson_ratio"] <= 4.5
    bad = morph.gradient_check(p, corrupt=True)
    assert not bad["passed"]
    assert bad["families"][0]["worst_index"] == 0


def test_optimize_and_simulate_round_trip():
    p = morph.random_problem(3)
    p.cells = 8
    r = morph.optimize(p, max_iter_phase1=3, max_iter_phase2=5)
    floor = p.material.rho_floor
    assert set(np.unique(r["rho"])) <= {floor, 1.0}
    assert set(np.unique(r["eta"])) <= {0.0, 1.0}
    assert r["eta"].shape == (2, 8)
    assert len(r["log"]) >= 2
    again = morph.optimize(p, max_iter_phase1=3, max_iter_phase2=5)
    assert again["design"] == r["design"]

    design = r["design"]
    for state in (1, 2):
        s = morph.simulate(design, state=state)
        assert s["targets"][0]["u"] == pytest.approx(r["states"][state - 1][0]["u"], abs=1e-12)
    zero = morph.simulate(design, u_p=(0.0, 0.0))
    assert np.all(zero["u"] == 0.0)
    with pytest.raises(ValueError):
        morph.simulate(design, eta=[0.0, 1.0])
    with pytest.raises(ValueError):
        morph.simulate(design, state=3)
