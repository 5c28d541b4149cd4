"""Core representation tests: winding numbers, conversions, rotation machinery."""

import math

import numpy as np
import pytest

from lensdist.poly import (
    MAX_DEGREE,
    ComplexPoly,
    RealPolyModel,
    load_model,
    model_from_json,
    model_to_json,
    monomial_rotation,
    monomial_vector,
    save_model,
    winding_number,
    winding_table,
)


def random_poly(rng, max_degree=7, max_terms=20):
    n_terms = rng.integers(1, max_terms + 1)
    terms = {}
    for _ in range(n_terms):
        n = rng.integers(2, max_degree + 1)
        k = rng.integers(0, n + 1)
        terms[(int(k), int(n - k))] = complex(rng.normal(), rng.normal())
    return ComplexPoly(terms)


# -- winding numbers --------------------------------------------------------


def test_winding_examples():
    assert winding_number(2, 0) == 1
    assert winding_number(1, 1) == -1
    assert winding_number(0, 2) == -3


def test_winding_invariant_monomials():
    for k in range(1, 8):
        assert winding_number(k + 1, k) == 0


TABLE_DEGREES_2_TO_5 = {
    (2, 0): 1, (1, 1): -1, (0, 2): -3,
    (3, 0): 2, (2, 1): 0, (1, 2): -2, (0, 3): -4,
    (4, 0): 3, (3, 1): 1, (2, 2): -1, (1, 3): -3, (0, 4): -5,
    (5, 0): 4, (4, 1): 2, (3, 2): 0, (2, 3): -2, (1, 4): -4, (0, 5): -6,
}


def test_winding_table_degrees_2_to_5():
    table = winding_table(range(2, 6))
    assert len(table) == 18
    assert table == TABLE_DEGREES_2_TO_5


# -- construction invariants -------------------------------------------------


def test_rejects_low_degree_keys():
    for bad in [(0, 0), (1, 0), (0, 1)]:
        with pytest.raises(ValueError):
            ComplexPoly({bad: 1.0})


def test_rejects_negative_and_oversized_keys():
    with pytest.raises(ValueError):
        ComplexPoly({(-1, 3): 1.0})
    with pytest.raises(ValueError):
        ComplexPoly({(MAX_DEGREE, 1): 1.0})


def test_zero_coefficients_pruned():
    f = ComplexPoly({(2, 0): 0.0, (1, 1): 2.0})
    assert set(f.terms) == {(1, 1)}
    assert ComplexPoly({(2, 0): 0.0}).is_zero()


def test_real_model_shape_validation():
    with pytest.raises(ValueError):
        RealPolyModel({2: np.zeros((2, 4))})
    with pytest.raises(ValueError):
        RealPolyModel({1: np.zeros((2, 2))})
    assert RealPolyModel({2: np.zeros((2, 3))}).is_zero()


# -- evaluation --------------------------------------------------------------


def test_eval_examples():
    assert ComplexPoly({(2, 0): 1}).evaluate(1 + 1j) == pytest.approx(2j)
    assert ComplexPoly({}).evaluate(0.3 - 0.7j) == 0
    assert ComplexPoly({(1, 1): 1}).evaluate(2 + 0j) == pytest.approx(4)


def test_eval_vectorized_matches_scalar():
    rng = np.random.default_rng(0)
    f = random_poly(rng)
    zs = rng.normal(size=10) + 1j * rng.normal(size=10)
    vec = f.evaluate(zs)
    for z, w in zip(zs, vec):
        assert abs(f.evaluate(complex(z)) - w) <= 1e-12 * max(1.0, abs(w))


# -- complex <-> real conversion ---------------------------------------------


def test_to_real_examples():
    blocks = ComplexPoly({(2, 0): 1}).to_real().blocks
    assert np.array_equal(blocks[2], [[1, 0, -1], [0, 2, 0]])
    blocks = ComplexPoly({(1, 1): 1}).to_real().blocks
    assert np.array_equal(blocks[2], [[1, 0, 1], [0, 0, 0]])


def test_degree2_transfer_matrix_and_determinant():
    # Columns: image of the unit gamma for z^2, z zbar, zbar^2 as c = a + i b.
    expected = np.array([[1, 1, 1], [2j, 0, -2j], [-1, 1, -1]], dtype=complex)
    cols = []
    for key in [(2, 0), (1, 1), (0, 2)]:
        block = ComplexPoly({key: 1}).to_real().blocks[2]
        cols.append(block[0] + 1j * block[1])
    C = np.stack(cols, axis=1)
    assert np.array_equal(C, expected)
    assert np.linalg.det(C) == pytest.approx(8j)


def test_degree2_real_rows_follow_c_gamma(subtests=None):
    rng = np.random.default_rng(3)
    C = np.array([[1, 1, 1], [2j, 0, -2j], [-1, 1, -1]], dtype=complex)
    for _ in range(20):
        gamma = rng.normal(size=3) + 1j * rng.normal(size=3)
        f = ComplexPoly({(2, 0): gamma[0], (1, 1): gamma[1], (0, 2): gamma[2]})
        block = f.to_real().blocks.get(2, np.zeros((2, 3)))
        c = C @ gamma
        assert np.allclose(block[0], c.real, atol=1e-14)
        assert np.allclose(block[1], c.imag, atol=1e-14)


def test_from_real_examples():
    f = RealPolyModel({2: [[1, 0, -1], [0, 2, 0]]}).to_complex()
    assert dict(f.terms) == {(2, 0): 1 + 0j}
    assert RealPolyModel({}).to_complex().is_zero()


def test_from_real_random_cubic_round_trip():
    rng = np.random.default_rng(4)
    for _ in range(50):
        block = rng.normal(size=(2, 4))
        model = RealPolyModel({3: block})
        back = model.to_complex().to_real()
        assert back.isclose(model, tol=1e-12)


def test_from_real_multi_degree_round_trip():
    rng = np.random.default_rng(15)
    for _ in range(50):
        degrees = rng.choice(range(2, 8), size=3, replace=False)
        model = RealPolyModel({int(n): rng.normal(size=(2, n + 1)) for n in degrees})
        back = model.to_complex().to_real()
        assert back.isclose(model, tol=1e-12)


def test_round_trip_complex_to_real_to_complex():
    rng = np.random.default_rng(5)
    for _ in range(200):
        f = random_poly(rng)
        g = f.to_real().to_complex()
        assert g.isclose(f, tol=1e-12)


def test_evaluation_consistency_complex_vs_real():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        f = random_poly(rng, max_degree=7, max_terms=8)
        model = f.to_real()
        r = math.sqrt(rng.uniform(0, 1))
        a = rng.uniform(0, 2 * math.pi)
        x, y = r * math.cos(a), r * math.sin(a)
        w = f.evaluate(complex(x, y))
        dx, dy = model.evaluate(x, y)
        assert abs(w - complex(dx, dy)) < 1e-10


# -- rotation of coefficients -------------------------------------------------


def test_rotate_degree2_matches_phase_map():
    rng = np.random.default_rng(7)
    for _ in range(20):
        g20, g11, g02 = rng.normal(size=3) + 1j * rng.normal(size=3)
        theta = rng.uniform(-7, 7)
        f = ComplexPoly({(2, 0): g20, (1, 1): g11, (0, 2): g02})
        r = f.rotated(theta)
        assert abs(r.terms[(2, 0)] - np.exp(1j * theta) * g20) < 1e-12
        assert abs(r.terms[(1, 1)] - np.exp(-1j * theta) * g11) < 1e-12
        assert abs(r.terms[(0, 2)] - np.exp(-3j * theta) * g02) < 1e-12


def test_rotate_zero_angle_is_identity():
    rng = np.random.default_rng(8)
    f = random_poly(rng)
    assert f.rotated(0.0) == f


def test_invariant_monomial_fixed_by_rotation():
    f = ComplexPoly({(2, 1): 1})
    for theta in np.linspace(-6, 6, 17):
        assert f.rotated(theta).isclose(f, tol=1e-15)


def test_rotation_commutation_property():
    # evaluate(rotated(f, t), w) == exp(-i t) * evaluate(f, exp(i t) w)
    rng = np.random.default_rng(9)
    for _ in range(100):
        f = random_poly(rng, max_degree=6, max_terms=6)
        theta = rng.uniform(-8, 8)
        w = complex(rng.normal(), rng.normal())
        lhs = f.rotated(theta).evaluate(w)
        rhs = np.exp(-1j * theta) * f.evaluate(np.exp(1j * theta) * w)
        assert abs(lhs - rhs) < 1e-10


# -- monomial vector and its rotation matrix ----------------------------------


def test_monomial_vector_examples():
    assert np.array_equal(monomial_vector(2, 1.0, 2.0), [1, 2, 4])
    assert np.array_equal(monomial_vector(1, 0.3, -0.4), [0.3, -0.4])
    assert np.array_equal(monomial_vector(3, 2.0, 1.0), [8, 4, 2, 1])


def test_monomial_rotation_identity_and_quarter_turn():
    assert np.array_equal(monomial_rotation(2, 0.0), np.eye(3))
    v = monomial_rotation(2, math.pi / 2)
    assert np.allclose(v, [[0, 0, 1], [0, -1, 0], [1, 0, 0]], atol=1e-15)


def test_monomial_rotation_defining_identity():
    rng = np.random.default_rng(10)
    for n in range(1, 8):
        for _ in range(100):
            theta = rng.uniform(-7, 7)
            x, y = rng.normal(size=2)
            c, s = math.cos(theta), math.sin(theta)
            rotated = monomial_vector(n, c * x - s * y, s * x + c * y)
            predicted = monomial_rotation(n, theta) @ monomial_vector(n, x, y)
            assert np.linalg.norm(rotated - predicted) < 1e-10


# -- whole-model rotation ------------------------------------------------------


def test_model_rotation_zero_angle():
    rng = np.random.default_rng(11)
    f = random_poly(rng)
    model = f.to_real()
    assert model.rotated(0.0).isclose(model, tol=0.0)


def test_model_rotation_decentering_half_turn():
    from lensdist.families import decentering

    s1, s2 = 0.37, -0.21
    rotated = decentering(s1, s2).real_form.rotated(math.pi)
    assert rotated.isclose(decentering(-s1, -s2).real_form, tol=1e-12)


def test_model_rotation_matches_complex_path():
    rng = np.random.default_rng(12)
    for _ in range(50):
        f = random_poly(rng, max_degree=6, max_terms=8)
        theta = rng.uniform(-7, 7)
        via_real = f.to_real().rotated(theta)
        via_complex = f.rotated(theta).to_real()
        assert via_real.isclose(via_complex, tol=1e-10)


# -- model JSON ----------------------------------------------------------------


def test_model_json_round_trip_both_forms(tmp_path):
    rng = np.random.default_rng(13)
    f = random_poly(rng)
    for form in ("complex", "real"):
        path = tmp_path / f"model_{form}.json"
        save_model(path, f, form=form)
        assert load_model(path).isclose(f, tol=1e-12)


def test_model_json_validation():
    with pytest.raises(ValueError):
        model_from_json({"format": "other", "version": 1, "complex": []})
    with pytest.raises(ValueError):
        model_from_json({"format": "lensdist-model", "version": 2, "complex": []})
    with pytest.raises(ValueError):
        model_from_json({"format": "lensdist-model", "version": 1})
    with pytest.raises(ValueError):
        model_from_json(
            {"format": "lensdist-model", "version": 1, "complex": [], "real": []}
        )


def test_load_model_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValueError):
        load_model(path)


def test_model_json_normalizes_real_to_complex():
    data = model_to_json(RealPolyModel({2: [[1, 0, -1], [0, 2, 0]]}), form="real")
    poly = model_from_json(data)
    assert dict(poly.terms) == {(2, 0): 1 + 0j}


def test_conversion_against_symbolic_expansion():
    sp = pytest.importorskip("sympy")
    x, y = sp.symbols("x y", real=True)
    z, zb = x + sp.I * y, x - sp.I * y
    rng = np.random.default_rng(14)
    for n in range(2, 5):
        for k in range(n + 1):
            gamma = complex(rng.normal(), rng.normal())
            expr = sp.expand(gamma * z**k * zb ** (n - k))
            re = sp.Poly(sp.re(expr), x, y)
            im = sp.Poly(sp.im(expr), x, y)
            block = ComplexPoly({(k, n - k): gamma}).to_real().blocks[n]
            for j in range(n + 1):
                mono = x ** (n - j) * y**j
                assert float(re.coeff_monomial(mono)) == block[0][j]
                assert float(im.coeff_monomial(mono)) == block[1][j]


def test_monomial_rotation_against_symbolic_expansion():
    sp = pytest.importorskip("sympy")
    x, y = sp.symbols("x y", real=True)
    theta = 0.8377
    c, s = math.cos(theta), math.sin(theta)
    xp, yp = c * x - s * y, s * x + c * y
    for n in range(1, 5):
        v = monomial_rotation(n, theta)
        for i in range(n + 1):
            poly = sp.Poly(sp.expand(xp ** (n - i) * yp**i), x, y)
            for j in range(n + 1):
                coeff = float(poly.coeff_monomial(x ** (n - j) * y**j))
                assert abs(coeff - v[i, j]) < 1e-14
