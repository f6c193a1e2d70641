import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radial_qec import gf2
from radial_qec.classical import AMatrix, random_a_matrix
from radial_qec.gf2 import BinaryMatrix, BinaryVector
from radial_qec.quantum import (
    ConstructionError,
    conjugate_transpose,
    lifted_product,
    logical_basis,
    preset,
    weight_reduction_fixture,
)

from conftest import STEP1, STEP2, STEP3, STEP4, vec

TOY_A = AMatrix.from_list([[0, 0], [1, 0]], 3)


def test_conjugate_transpose():
    assert conjugate_transpose(TOY_A) == AMatrix.from_list([[0, 2], [0, 0]], 3)
    zero = AMatrix.from_list([[0, 0], [0, 0]], 3)
    assert conjugate_transpose(zero) == zero
    A = AMatrix.from_list([[3, 2, 1], [4, 1, 4], [1, 2, 3]], 5)
    assert conjugate_transpose(conjugate_transpose(A)) == A


def test_toy_matches_appendix(toy_hx, toy_hz):
    code = preset("toy_2_3")
    assert code.H_X == toy_hx
    assert code.H_Z == toy_hz
    assert (code.n, code.k) == (24, 2)


def test_lifted_product_errors():
    other = AMatrix.from_list([[0, 0, 0], [0, 1, 2], [0, 2, 4]], 5)
    with pytest.raises(ConstructionError):
        lifted_product(TOY_A, other)
    with pytest.raises(ConstructionError):
        lifted_product(AMatrix.from_list([[0, 0], [0, 0]], 3), TOY_A)
    with pytest.raises(KeyError):
        preset("surface_17")


@pytest.mark.parametrize("name, n, k, s", [("qr_90_8_10", 90, 8, 5), ("qr_352_18_20", 352, 18, 11)])
def test_presets(name, n, k, s):
    code = preset(name)
    assert (code.n, code.k, code.d_upper) == (n, k, 2 * s)
    assert len(code.logical_x) == len(code.logical_z) == k
    assert all(lg.weight == 2 * s for lg in code.logical_x + code.logical_z)


def test_toy_logicals_equivalent_up_to_stabilisers():
    code = preset("toy_2_3")
    (a, b) = code.logical_x
    assert a.support() == list(range(6))
    assert b.support() == [12, 13, 14, 18, 19, 20]
    # the same operator on the other Z code, or on the other ring of the X codes,
    # differs from the basis element by X stabilisers only
    other_code = BinaryVector.from_support(code.n, range(6, 12))
    other_ring = BinaryVector.from_support(code.n, [15, 16, 17, 21, 22, 23])
    assert gf2.in_rowspace(code.H_X, a + other_code)
    assert gf2.in_rowspace(code.H_X, b + other_ring)
    assert not gf2.in_rowspace(code.H_X, a + b)


def symplectic_rank(code) -> int:
    lx = BinaryMatrix.from_rows(code.logical_x).to_dense().astype(np.int64)
    lz = BinaryMatrix.from_rows(code.logical_z).to_dense().astype(np.int64)
    return gf2.rank((lx @ lz.T) % 2)


@pytest.mark.parametrize("name", ["toy_2_3", "qr_90_8_10", "qr_352_18_20"])
def test_code_invariants(name):
    code = preset(name)
    r = code.r
    assert gf2.matmul(code.H_X, code.H_Z.T).is_zero()
    for H in (code.H_X, code.H_Z):
        assert (H.row_weights() == 2 * r).all()
        assert (H.col_weights() == r).all()
        assert gf2.rank(H) == code.half - (r - 1) ** 2
    # each logical pairs nontrivially with the opposite basis, and the pairing is invertible
    assert symplectic_rank(code) == code.k
    for lg in code.logical_x:
        assert gf2.matvec(code.H_Z, lg).weight == 0
        assert not gf2.in_rowspace(code.H_X, lg)


def test_coordinates_bijective():
    code = preset("qr_90_8_10")
    coords = code.qubit_coords
    assert len(set(coords)) == code.n
    for q, co in enumerate(coords):
        assert code.qubit_index(*co) == q
    for i, co in enumerate(code.x_stab_coords):
        assert code.stab_index(*co) == i


def test_weight_reduction_fixture():
    steps = weight_reduction_fixture()
    code = preset("toy_2_3")
    assert steps.step1 == vec(STEP1)
    assert steps.step2 == vec(STEP2)
    assert steps.step3 == vec(STEP3)
    assert steps.step4 == vec(STEP4)
    assert steps.step4.weight == 4
    assert gf2.matvec(code.H_Z, steps.step4).weight == 0
    assert not gf2.in_rowspace(code.H_X, steps.step4)
    x1, x2 = steps.logicals
    assert gf2.in_rowspace(code.H_X, steps.step4 + x1 + x2)


@pytest.mark.parametrize("r, s", [(2, 3), (3, 5), (3, 7)])
def test_css_commutation_random_instances(r, s):
    rng = np.random.default_rng(1000 * r + s)
    built = attempts = 0
    while built < 50:
        attempts += 1
        assert attempts < 500
        A1, A2 = random_a_matrix(r, s, rng), random_a_matrix(r, s, rng)
        try:
            code = lifted_product(A1, A2)
        except ConstructionError:
            continue
        built += 1
        assert gf2.matmul(code.H_X, code.H_Z.T).is_zero()
        assert code.k == 2 * (r - 1) ** 2
        assert symplectic_rank(code) == code.k


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_self_products_commute(seed):
    A = random_a_matrix(2, 5, seed)
    code = lifted_product(A, A)
    assert gf2.matmul(code.H_X, code.H_Z.T).is_zero()
    lx, lz = logical_basis(code)
    assert len(lx) == len(lz) == 2
