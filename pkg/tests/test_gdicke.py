import warnings
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wlindblad import fullspace as fs, gdicke as gd, spectral
from wlindblad.gdicke import GDickeIndex
from wlindblad.twosite import JumpRates


# ------------------------------------------------------------------ basis

@pytest.mark.parametrize("n, count", [(1, 4), (2, 10), (5, 56), (80, 91881)])
def test_basis_counts(n, count):
    assert len(gd.enumerate_basis(n)) == count == (n + 1) * (n + 2) * (n + 3) // 6


@pytest.mark.parametrize("n", [2, 4, 10, 40])
def test_sector_zero_count(n):
    assert len(gd.enumerate_basis(n, 0)) == (n // 2 + 1) ** 2


def test_basis_ordering():
    b = gd.enumerate_basis(4)
    keys = [(-e.q2, e.qz2, e.sz2) for e in b.entries]
    assert keys == sorted(keys)
    assert b.entries[0] == GDickeIndex(4, -4, 0)


@pytest.mark.parametrize("idx, mult", [((4, 0, 0), 6), ((2, 0, 2), 12)])
def test_multiplicity_examples(idx, mult):
    assert gd.multiplicity(idx, 4) == mult


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 30))
def test_multiplicities_sum_to_hilbert_square(n):
    assert sum(gd.enumerate_basis(n).multiplicities()) == 4**n


def test_multiplicity_invalid():
    with pytest.raises(ValueError):
        gd.multiplicity((3, 0, 0), 4)


def test_enumerate_errors():
    with pytest.raises(ValueError):
        gd.enumerate_basis(0)
    with pytest.raises(ValueError):
        gd.enumerate_basis(4, 6)
    with pytest.raises(KeyError):
        gd.enumerate_basis(4, 0).find(4, 0, 2)


# ------------------------------------------------------------- Lindbladian

def test_element_examples():
    rates = JumpRates.alltoall(1, 0, 0)
    b, op = gd.build_alltoall_lindbladian(4, rates, sector=None)
    # gamma1 element from q=2 to q=1 at qz=0, sigma_z=0
    src, tgt = b.find(4, 0, 0), b.find(2, 0, 0)
    assert op[tgt, src] == pytest.approx(2.0)
    b, op = gd.build_alltoall_lindbladian(4, JumpRates.alltoall(0, 0, 1), sector=None)
    i = b.find(2, 0, 0)
    assert op[i, i] == pytest.approx(-4.0)


def test_requires_alltoall_and_equal_gamma3():
    with pytest.raises(ValueError):
        gd.build_alltoall_lindbladian(4, JumpRates.chain())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rates = JumpRates.alltoall(1, 1, 0.5, gamma3prime=0.1)
    with pytest.raises(ValueError):
        gd.build_alltoall_lindbladian(4, rates)


def _class_map(basis, n):
    d = 1 << n
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    both = np.zeros_like(i)
    neither = np.zeros_like(i)
    ket_only = np.zeros_like(i)
    bra_only = np.zeros_like(i)
    for s in range(n):
        a, b = (i >> s) & 1, (j >> s) & 1
        both += a & b
        neither += (1 - a) & (1 - b)
        ket_only += a & (1 - b)
        bra_only += (1 - a) & b
    q2, qz2, sz2 = both + neither, both - neither, ket_only - bra_only
    return np.vectorize(lambda x, y, z: basis.index_of[(x, y, z)])(q2, qz2, sz2)


@settings(max_examples=12, deadline=None)
@given(n=st.integers(2, 5),
       rates=st.tuples(*[st.floats(0, 2)] * 3),
       seed=st.integers(0, 2**32 - 1))
def test_matches_fullspace_on_symmetric_states(n, rates, seed):
    """Lifting a coefficient vector to a symmetric matrix commutes with the generator."""
    r = JumpRates.alltoall(*rates)
    basis, op = gd.build_alltoall_lindbladian(n, r, sector=None)
    lop = fs.build_alltoall_superoperator(n, r, block=None)
    keys = _class_map(basis, n)
    c = np.random.default_rng(seed).standard_normal(len(basis))
    lhs = lop.unvectorize(lop.matrix @ lop.vectorize(c[keys]))
    np.testing.assert_allclose(lhs, (op @ c)[keys], atol=1e-11 * max(1, np.abs(op).max()))


@settings(max_examples=15, deadline=None)
@given(n=st.integers(2, 30), rates=st.tuples(*[st.floats(0, 3)] * 3))
def test_trace_annihilated(n, rates):
    basis, op = gd.build_alltoall_lindbladian(n, JumpRates.alltoall(*rates), sector=None)
    t = gd.trace_functional(basis)
    scale = max(abs(op).max(), 1e-300)
    assert np.abs(op.T @ t).max() < 1e-10 * scale * t.max()


@settings(max_examples=15, deadline=None)
@given(n=st.integers(2, 30), rates=st.tuples(*[st.floats(0, 3)] * 3))
def test_dark_states_annihilated(n, rates):
    basis, op = gd.build_alltoall_lindbladian(n, JumpRates.alltoall(*rates), sector=0)
    for v in gd.kernel_vectors(n, basis):
        assert np.abs(op @ v).max() < 1e-10 * max(1, abs(op).max())


@pytest.mark.parametrize("n", [6, 10, 21])
def test_sector_zero_kernel_is_two_dimensional(n):
    basis, op = gd.build_alltoall_lindbladian(n, JumpRates.alltoall(1, 1, 0.7), sector=0)
    res = spectral.eig_dense(op, scaling=gd.similarity_scaling(basis))
    assert res.kernel_dim == 2


def test_similarity_scaling_needed_at_n40():
    basis, op = gd.build_alltoall_lindbladian(40, JumpRates.alltoall(1, 1, 3 / 40), sector=0)
    res = spectral.eig_dense(op, scaling=gd.similarity_scaling(basis))
    assert res.kernel_dim == 2
    assert np.all(res.nonzero.real < 0)


# ------------------------------------------------------------- observables

def test_w_state_correlator():
    basis = gd.enumerate_basis(10, 0)
    assert gd.xx_correlator(gd.w_state_vector(10, basis)) == pytest.approx(0.2)
    assert gd.xx_correlator(gd.mixed_vector(10, basis)) == 0.0


@pytest.mark.parametrize("n", range(4, 81, 4))
def test_w_state_correlator_two_over_n(n):
    assert abs(gd.xx_correlator(gd.w_state_vector(n)) - 2 / n) < 1e-10


def test_magnetization_examples():
    assert gd.magnetization_density(gd.polarized_up_vector(8)) == pytest.approx(1.0)
    assert gd.magnetization_density(gd.vacuum_vector(8)) == 0.0
    assert gd.magnetization_density(gd.w_state_vector(8)) == pytest.approx(1 / 8)


@pytest.mark.parametrize("make", [gd.vacuum_vector, gd.polarized_up_vector, gd.w_state_vector,
                                  gd.mixed_vector, gd.mixed_steady_vector])
def test_states_have_unit_trace(make):
    v = make(9)
    assert gd.trace_functional(v.basis) @ v.coeffs == pytest.approx(1.0)
    assert sum(gd.alpha_sz_distribution(v).values()) == pytest.approx(1.0)


def test_alpha_requires_trace_one():
    v = gd.vacuum_vector(5)
    v.coeffs *= 2
    with pytest.raises(ValueError):
        gd.alpha_sz_distribution(v)


def test_mixed_vector_weights():
    d = gd.alpha_sz_distribution(gd.mixed_vector(6))
    assert d[-3.0] == 0
    for ups in range(1, 7):
        assert d[ups - 3.0] == pytest.approx(comb(6, ups) / 63)


def test_observables_match_fullspace_on_w():
    n = 5
    basis = gd.enumerate_basis(n, 0)
    lop = fs.build_alltoall_superoperator(n, JumpRates.alltoall(), block=0)
    rho = lop.vectorize(fs.density(fs.w_state(n)))
    f_full = fs.observables(lop)
    f_dicke = gd.observables(basis)
    v = gd.w_state_vector(n, basis).coeffs
    assert set(f_full) == set(f_dicke)
    for k in f_dicke:
        assert f_dicke[k] @ v == pytest.approx(float(np.real(f_full[k] @ rho)), abs=1e-12)
