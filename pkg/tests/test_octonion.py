import numpy as np
import pytest

from octopsh import octonion as oc
from octopsh.errors import DomainError


def test_identity_element(rng):
    x = rng.normal(size=(50, 8))
    e0 = oc.basis(0)
    assert np.allclose(oc.mul(e0, x), x, atol=0, rtol=0)
    assert np.allclose(oc.mul(x, e0), x, atol=0, rtol=0)


@pytest.mark.parametrize("p", range(1, 8))
def test_imaginary_units_square_to_minus_one(p):
    e = oc.basis(p)
    assert np.array_equal(oc.mul(e, e), -oc.basis(0))


def test_pair_form_second_slot_unit():
    # (0, 1)(0, 1) = (-1, 0) in quaternion pairs; e4 is the second-slot unit
    assert np.array_equal(oc.mul(oc.basis(4), oc.basis(4)), -oc.basis(0))


def test_pair_formula_by_hand(rng):
    # (a, b)(c, d) = (ac - conj(d) b, da + b conj(c)) with quaternion helpers
    x, y = rng.normal(size=8), rng.normal(size=8)
    a, b, c, d = x[:4], x[4:], y[:4], y[4:]

    def hamilton(p, q):
        return np.r_[p[0] * q[0] - p[1:] @ q[1:], p[0] * q[1:] + q[0] * p[1:] + np.cross(p[1:], q[1:])]

    def qconj(p):
        return np.r_[p[0], -p[1:]]

    first = hamilton(a, c) - hamilton(qconj(d), b)
    second = hamilton(d, a) + hamilton(b, qconj(c))
    assert np.allclose(oc.mul(x, y), np.r_[first, second], atol=1e-14)


def test_quaternion_units_follow_hamilton():
    i, j, k = oc.basis(1), oc.basis(2), oc.basis(3)
    assert np.array_equal(oc.mul(i, j), k)
    assert np.array_equal(oc.mul(j, k), i)
    assert np.array_equal(oc.mul(k, i), j)


def test_conjugation_examples():
    assert np.array_equal(oc.conj(oc.basis(0)), oc.basis(0))
    assert np.array_equal(oc.conj(oc.basis(3)), -oc.basis(3))


def test_inverse_examples(rng):
    assert np.allclose(oc.inv(2 * oc.basis(0)), 0.5 * oc.basis(0))
    x = rng.normal(size=(20, 8))
    assert np.allclose(oc.mul(x, oc.inv(x)), oc.basis(0), atol=1e-14)
    with pytest.raises(DomainError):
        oc.inv(np.zeros(8))


def test_norm_consistency(rng):
    x = rng.normal(size=(100, 8))
    assert np.allclose(oc.norm2(x), np.sum(x * x, axis=-1))
    assert np.allclose(oc.re(oc.mul(x, oc.conj(x))), oc.norm2(x))
    assert np.allclose(oc.re(x)[:, None] * oc.basis(0) + oc.im(x), x)


def test_re_triple_examples(rng):
    e1, e2 = oc.basis(1), oc.basis(2)
    assert oc.re_triple(e1, e2, oc.conj(oc.mul(e1, e2))) == pytest.approx(1.0, abs=1e-15)
    b, c = rng.normal(size=8), rng.normal(size=8)
    assert oc.re_triple(oc.basis(0), b, c) == pytest.approx(oc.re(oc.mul(b, c)), abs=1e-14)
    a = rng.normal(size=8)
    left = oc.re(oc.mul(oc.mul(a, b), c))
    right = oc.re(oc.mul(a, oc.mul(b, c)))
    assert abs(left - right) <= 1e-12 * max(1.0, abs(left))


def test_table_is_signed_permutation():
    T = oc.MULT_TABLE
    assert set(np.unique(T)) <= {-1, 0, 1}
    assert np.all(np.abs(T).sum(axis=2) == 1)
    for p in range(1, 8):
        for q in range(1, 8):
            if p != q:
                assert np.array_equal(T[p, q], -T[q, p])


def test_table_is_read_only():
    with pytest.raises(ValueError):
        oc.MULT_TABLE[0, 0, 0] = 5


def test_table_product_matches_pairs(rng):
    x, y = rng.normal(size=(200, 8)), rng.normal(size=(200, 8))
    assert np.allclose(oc.table_mul(x, y), oc.mul(x, y), atol=1e-13)


def test_left_matrix(rng):
    a, t = rng.normal(size=8), rng.normal(size=8)
    assert np.allclose(oc.left_matrix(a) @ t, oc.mul(a, t), atol=1e-14)


def test_not_associative():
    e1, e2, e4 = oc.basis(1), oc.basis(2), oc.basis(4)
    assert np.linalg.norm(oc.associator(e1, e2, e4)) > 1.0


def test_wrapper_class():
    x = oc.Octonion.e(1) + 2
    y = oc.Octonion.e(2)
    assert (x * y) == oc.Octonion(oc.mul(x.c, y.c))
    assert np.allclose((x / x).c, oc.basis(0), atol=1e-15)
    assert x.conj().re == 2.0
    assert x.norm() == pytest.approx(np.sqrt(5))
