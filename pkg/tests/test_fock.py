import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsw_memory.fock import (
    BasisState,
    Flavor,
    InvalidParameterError,
    ShapeError,
    SparseOperator,
    StateVector,
    apply,
    enumerate_sector,
    inner,
    norm,
    op_adjoint,
    op_commutator,
    op_mul,
    sector_or_empty,
)


def brute_force_count(M, N=None):
    count = 0
    for p in range(M + 1):
        for x in range(M + 1):
            y = M - p - x
            if y < 0:
                continue
            if N is not None and x + y > N:
                continue
            count += 1
    return count


@pytest.mark.parametrize("M", range(0, 11))
def test_bosonic_dimension(M):
    assert enumerate_sector(Flavor.BOSONIC, M).dim == (M + 1) * (M + 2) // 2


@pytest.mark.parametrize("N,M", [(1, 0), (1, 1), (1, 2), (1, 5), (2, 3), (3, 3), (5, 8), (40, 6)])
def test_dicke_dimension_matches_count(N, M):
    assert enumerate_sector(Flavor.DICKE, M, N).dim == brute_force_count(M, N)


def test_dicke_single_atom_two_excitations():
    sec = enumerate_sector("dicke", 2, 1)
    # photon number 2, 1 or (with the atom excited) 1
    assert sec.dim == 3
    assert {s.occupations for s in sec.states} == {(2, 0, 0), (1, 1, 0), (1, 0, 1)}


def test_sector_states_sorted_and_indexed():
    sec = enumerate_sector(Flavor.BOSONIC, 3)
    occ = [s.occupations for s in sec.states]
    assert occ == sorted(occ)
    for i, s in enumerate(sec.states):
        assert sec.index[s.occupations] == i
        assert s.excitations == 3


def test_errors():
    with pytest.raises(InvalidParameterError):
        enumerate_sector(Flavor.BOSONIC, -1)
    with pytest.raises(InvalidParameterError):
        enumerate_sector(Flavor.DICKE, 2)
    with pytest.raises(InvalidParameterError):
        BasisState(Flavor.DICKE, 0, 2, 1, N=2)
    with pytest.raises(ValueError):
        Flavor.coerce("fermionic")
    assert sector_or_empty(Flavor.BOSONIC, -1).dim == 0


def test_operator_algebra(rng):
    sec = enumerate_sector(Flavor.BOSONIC, 3)
    X = rng.normal(size=(sec.dim, sec.dim)) + 1j * rng.normal(size=(sec.dim, sec.dim))
    Y = rng.normal(size=(sec.dim, sec.dim))
    x = SparseOperator(sec, sec, X)
    y = SparseOperator(sec, sec, Y)
    np.testing.assert_allclose((x + y).toarray(), X + Y)
    np.testing.assert_allclose((x - 2 * y).toarray(), X - 2 * Y)
    np.testing.assert_allclose(op_mul(x, y).toarray(), X @ Y)
    np.testing.assert_allclose(op_adjoint(x).toarray(), X.conj().T)
    np.testing.assert_allclose(op_commutator(x, y).toarray(), X @ Y - Y @ X, atol=1e-12)
    assert SparseOperator.identity(sec).max_abs() == 1.0


def test_shape_mismatch():
    a = SparseOperator.identity(enumerate_sector(Flavor.BOSONIC, 1))
    b = SparseOperator.identity(enumerate_sector(Flavor.BOSONIC, 2))
    with pytest.raises(ShapeError):
        a + b
    with pytest.raises(ShapeError):
        op_mul(a, b)


def test_state_vector_ops():
    sec = enumerate_sector(Flavor.BOSONIC, 1)
    e0 = StateVector.basis(sec, (1, 0, 0))
    e1 = StateVector.basis(sec, (0, 0, 1))
    psi = (e0 + 1j * e1).normalized()
    assert norm(psi) == pytest.approx(1.0)
    # conjugate-linear in the first slot
    assert inner(1j * e1, psi) == pytest.approx(1 / np.sqrt(2))
    flip = SparseOperator(sec, sec, np.ones((3, 3)))
    assert apply(flip, e0).amplitudes.tolist() == [1, 1, 1]


@settings(max_examples=30, deadline=None)
@given(M=st.integers(0, 9), N=st.integers(1, 12))
def test_dicke_is_subset_of_bosonic(M, N):
    bos = {s.occupations for s in enumerate_sector(Flavor.BOSONIC, M).states}
    dic = {s.occupations for s in enumerate_sector(Flavor.DICKE, M, N).states}
    assert dic <= bos
    assert dic == {o for o in bos if o[1] + o[2] <= N}
