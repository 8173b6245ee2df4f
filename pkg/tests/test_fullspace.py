import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wlindblad import exact, fullspace as fs, spectral
from wlindblad.twosite import JumpFamily, JumpRates, embed_pair_operator, jump_matrix

pytestmark = pytest.mark.filterwarnings("ignore:gamma3 != gamma3prime")


def _quiet_rates(*args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return JumpRates.chain(*args, **kw)


def _kron_superop(n, rates, pairs, ham=None):
    """Independent oracle: dense Kronecker-product Lindbladian, row-major vectorization."""
    d = 1 << n
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for kind in JumpFamily:
        g = rates.rate(kind)
        if g == 0:
            continue
        for a, b in pairs:
            l = embed_pair_operator(jump_matrix(kind), a, b, n).toarray()
            k = l.conj().T @ l
            out += g * (np.kron(l, l.conj()) - 0.5 * (np.kron(k, eye) + np.kron(eye, k.T)))
    if ham is not None:
        out += -1j * (np.kron(ham, eye) - np.kron(eye, ham.T))
    return out


@settings(max_examples=10, deadline=None)
@given(n=st.integers(2, 4), rates=st.tuples(*[st.floats(0, 2)] * 4), periodic=st.booleans())
def test_full_space_matches_kron_oracle(n, rates, periodic):
    r = _quiet_rates(*rates[:3], gamma3prime=rates[3], periodic=periodic)
    lop = fs.build_nn_superoperator(n, r, block=None)
    ref = _kron_superop(n, r, fs.chain_pairs(n, periodic))
    sub = ref[np.ix_(lop.keys, lop.keys)]
    np.testing.assert_allclose(lop.matrix.toarray(), sub, atol=1e-13)
    assert lop.dim == 4**n


@pytest.mark.parametrize("block", range(-4, 5))
def test_blocks_match_oracle_n4(block):
    r = _quiet_rates(0.7, 1.1, 0.4, gamma3prime=0.9)
    lop = fs.build_nn_superoperator(4, r, block=block)
    ref = _kron_superop(4, r, fs.chain_pairs(4, True))
    np.testing.assert_allclose(lop.matrix.toarray(), ref[np.ix_(lop.keys, lop.keys)], atol=1e-13)


def test_block_closure():
    """Columns of a block never reach keys outside the block."""
    r = _quiet_rates(0.7, 1.1, 0.4, gamma3prime=0.9)
    ref = _kron_superop(4, r, fs.chain_pairs(4, True))
    pc = fs.popcounts(4)
    keys = np.arange(256)
    delta = pc[keys // 16] - pc[keys % 16]
    for b in range(-4, 5):
        inside = delta == b
        assert np.all(ref[np.ix_(~inside, inside)] == 0)


def test_coherent_term_matches_oracle():
    n = 4
    r = JumpRates.chain(1, 1, 0.3)
    lop = fs.build_nn_superoperator(n, r, block=None, coherent=True)
    ref = _kron_superop(n, r, fs.chain_pairs(n, True), fs.coherent_hamiltonian(n).toarray())
    np.testing.assert_allclose(lop.matrix.toarray(), ref[np.ix_(lop.keys, lop.keys)], atol=1e-13)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_coherent_term_keeps_w_dark(n):
    h = fs.coherent_hamiltonian(n)
    assert np.abs(h @ fs.w_state(n)).max() < 1e-12
    assert np.abs(h @ fs.vacuum_state(n)).max() > 0.1
    assert abs(h - h.T).max() == 0


def test_coherent_term_needs_full_space():
    with pytest.raises(ValueError):
        fs.build_nn_superoperator(4, JumpRates.chain(), block=0, coherent=True)


def test_coherent_term_unique_steady_state():
    lop = fs.build_nn_superoperator(4, JumpRates.chain(1, 1, 0), block=None, coherent=True)
    res = spectral.eig_dense(lop.matrix)
    assert res.kernel_dim == 1
    rho = lop.unvectorize(res.kernel_vectors[:, 0])
    rho /= np.trace(rho)
    w = fs.w_state(4)
    assert np.real(w @ rho @ w) == pytest.approx(1.0, abs=1e-8)


def test_caps_and_geometry_errors():
    with pytest.raises(ValueError):
        fs.build_nn_superoperator(11, JumpRates.chain())
    with pytest.raises(ValueError):
        fs.build_nn_superoperator(4, JumpRates.alltoall())
    with pytest.raises(ValueError):
        fs.build_alltoall_superoperator(7, JumpRates.alltoall())
    with pytest.raises(ValueError):
        fs.build_nn_superoperator(4, JumpRates.chain(), block=5)
    with pytest.raises(ValueError):
        fs.build_nn_superoperator(4, JumpRates.chain(), boundary="twisted")


# --------------------------------------------------------------- invariants

@settings(max_examples=8, deadline=None)
@given(rates=st.tuples(*[st.floats(0, 2)] * 3), seed=st.integers(0, 2**32 - 1))
def test_trace_and_hermiticity_preserved(rates, seed):
    n = 4
    r = JumpRates.chain(*rates)
    lop = fs.build_nn_superoperator(n, r, block=None)
    t = lop.trace_functional()
    assert np.abs(lop.matrix.T @ t).max() < 1e-10 * max(1, abs(lop.matrix).max())
    rho = fs.density(fs.haar_state(n, np.random.default_rng(seed), exclude_vacuum=False))
    d = lop.unvectorize(lop.matrix @ lop.vectorize(rho))
    assert np.abs(d - d.conj().T).max() < 1e-12


@pytest.mark.parametrize("boundary", ["open", "periodic"])
@pytest.mark.parametrize("n", [4, 6])
def test_dark_states(n, boundary):
    lop = fs.build_nn_superoperator(n, JumpRates.chain(1, 1, 0.8), boundary=boundary, block=0)
    for psi in (fs.vacuum_state(n), fs.w_state(n)):
        assert np.abs(lop.matrix @ lop.vectorize(fs.density(psi))).max() < 1e-12


def test_known_kernel_in_each_block():
    r = JumpRates.chain(1, 1, 0.5)
    for block, count in ((0, 2), (1, 1), (-1, 1), (2, 0)):
        lop = fs.build_nn_superoperator(5, r, block=block)
        ker = fs.known_kernel(lop)
        assert len(ker) == count
        for v in ker:
            assert np.abs(lop.matrix @ v).max() < 1e-12


# --------------------------------------------------------------- gaps

@pytest.mark.parametrize("n", range(4, 13))
def test_single_spinup_gap_closed_form(n):
    lop = fs.build_single_spinup(n, JumpRates.chain(1, 1, 0))
    g = spectral.eig_dense(lop.matrix).gap
    assert abs(g - exact.single_spinup_gap(n)) / exact.single_spinup_gap(n) < 1e-8


def test_project_single_spinup_examples():
    r = JumpRates.chain(1, 1, 0)
    lop3 = fs.project_single_spinup(fs.build_nn_superoperator(3, r, block=0))
    assert np.abs(np.linalg.eigvals(lop3.matrix.toarray())).min() < 1e-12
    lop5 = fs.project_single_spinup(fs.build_nn_superoperator(5, r, block=0))
    assert spectral.eig_dense(lop5.matrix).gap == pytest.approx(0.2928932, abs=1e-7)
    lop4 = fs.project_single_spinup(fs.build_nn_superoperator(4, r, block=0))
    ev = np.sort_complex(np.linalg.eigvals(lop4.matrix.toarray()))
    np.testing.assert_allclose(ev, np.sort_complex(exact.impurity_spectrum(4)), atol=1e-10)
    with pytest.raises(ValueError):
        fs.project_single_spinup(fs.build_alltoall_superoperator(3, JumpRates.alltoall()))


def test_relevant_gap_ordered_equals_single_spinup():
    res = fs.relevant_gap(8, JumpRates.chain(1, 1, 0))
    assert res.gap == pytest.approx(1 - np.cos(np.pi / 7), rel=1e-8)
    assert res.kernel_dim == 2


@pytest.mark.parametrize("n", [4, 5, 6])
@pytest.mark.parametrize("g3", [0.0, 0.5, 2.0])
def test_offdiag_gap_closed_form(n, g3):
    g = fs.offdiag_block_gap(n, JumpRates.chain(1, 1, g3))
    assert g == pytest.approx(exact.offdiag_gap(n, 1, g3), rel=1e-8)


def test_relevant_gap_skips_quasi_mode():
    r = JumpRates.chain(1, 1, 100)
    a = fs.relevant_gap(6, r, n_quasi=0)
    b = fs.relevant_gap(6, r, n_quasi=1)
    assert a.gap < 0.1 < b.gap
    assert b.info["skipped"][0].real == pytest.approx(-a.gap)


# --------------------------------------------------------------- states

def test_haar_state_reproducible_and_normalized():
    a = fs.haar_state(4, np.random.default_rng(7))
    b = fs.haar_state(4, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)
    assert np.linalg.norm(a) == pytest.approx(1)
    assert a[0] == 0
    assert fs.haar_state(4, np.random.default_rng(7), exclude_vacuum=False)[0] != 0


def test_w_state_phases():
    psi = fs.w_state(5, [0.1] * 5)
    assert np.linalg.norm(psi) == pytest.approx(1)
    assert np.allclose(psi[1 << np.arange(5)], np.exp(0.1j) / np.sqrt(5))


# ------------------------------------------------------------- order parameter

@pytest.mark.parametrize("n", [4, 6, 8])
def test_order_parameter_values(n):
    for psi in (fs.w_state(n), fs.vacuum_state(n)):
        assert fs.order_parameter_P(fs.density(psi), "open") == pytest.approx(1.0)
        # periodic chains have N bonds but keep the 1/(N-1) normalization
        assert fs.order_parameter_P(fs.density(psi), "periodic") == pytest.approx(n / (n - 1))
    assert fs.order_parameter_P(fs.density(fs.polarized_up_state(n))) == pytest.approx(0.0)


def test_dPdt_w_state():
    lhs, rhs = fs.check_dPdt_identity(fs.density(fs.w_state(6)), JumpRates.chain(1, 1, 0.5))
    assert abs(lhs) < 1e-12 and abs(rhs) < 1e-12


def test_dPdt_singlet_example():
    n = 6
    psi = np.zeros(1 << n)
    psi[1], psi[2] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    rho = fs.density(psi)
    r = JumpRates.chain(1, 1, 0)
    lhs, rhs = fs.check_dPdt_identity(rho, r)
    # bond (0,1) is a singlet; bonds (1,2) and (5,0) each carry singlet weight 1/4
    assert rhs == pytest.approx(1.5 / (n - 1))
    # the coherence between sites 0 and 1 shifts the rate
    corr = fs.dPdt_coherence_correction(rho, r)
    assert corr != pytest.approx(0, abs=1e-3)
    assert lhs == pytest.approx(rhs + corr, abs=1e-12)


def test_dPdt_zero_crossing():
    psi = fs.haar_state(6, np.random.default_rng(1))
    psi[fs.popcounts(6) != 1] = 0
    psi /= np.linalg.norm(psi)
    _, rhs = fs.check_dPdt_identity(fs.density(psi), JumpRates.chain(1, 1, 2.0))
    assert rhs == 0


def test_dPdt_rejects_outside_sector():
    with pytest.raises(ValueError):
        fs.check_dPdt_identity(fs.density(fs.polarized_up_state(4)), JumpRates.chain())


@settings(max_examples=15, deadline=None)
@given(n=st.integers(5, 7), rates=st.tuples(*[st.floats(0, 2)] * 4), seed=st.integers(0, 2**32 - 1))
def test_dPdt_with_coherence_term_is_exact(n, rates, seed):
    r = _quiet_rates(rates[0], rates[1], rates[2], gamma3prime=rates[3])
    rng = np.random.default_rng(seed)
    psi = np.zeros(1 << n, dtype=complex)
    psi[1 << np.arange(n)] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    rho = fs.density(psi / np.linalg.norm(psi))
    lhs, rhs = fs.check_dPdt_identity(rho, r)
    assert lhs == pytest.approx(rhs + fs.dPdt_coherence_correction(rho, r), abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(weights=st.lists(st.floats(0.01, 1), min_size=6, max_size=6),
       rates=st.tuples(*[st.floats(0, 2)] * 2))
def test_dPdt_exact_for_incoherent_states(weights, rates):
    rho = np.zeros((64, 64))
    idx = 1 << np.arange(6)
    rho[idx, idx] = np.array(weights) / sum(weights)
    lhs, rhs = fs.check_dPdt_identity(rho, JumpRates.chain(rates[0], 1, rates[1]))
    assert lhs == pytest.approx(rhs, abs=1e-12)


# ------------------------------------------------------------- correlations

@pytest.mark.parametrize("boundary", ["open", "periodic"])
def test_xx_profile_w_and_vacuum(boundary):
    n = 6
    np.testing.assert_allclose(fs.xx_distance_profile(fs.density(fs.w_state(n)), boundary), 2 / n)
    np.testing.assert_allclose(fs.xx_distance_profile(fs.density(fs.vacuum_state(n)), boundary), 0)


def test_constrained_mixed_state_small():
    n = 8
    lop = fs.build_nn_superoperator(n, JumpRates.chain(1, 1, 100, periodic=False), block=0)
    rho, info = fs.constrained_mixed_state(lop)
    assert np.trace(rho).real == pytest.approx(1)
    assert info["psd"]
    w, vac = fs.w_state(n), fs.vacuum_state(n)
    assert abs(w @ rho @ w) < 1e-12 and abs(rho[0, 0]) < 1e-12
    assert info["eigenvalue"].real < 0


def test_mixed_offset_matches_projected_identity():
    n = 5
    rho = (np.eye(32) - fs.density(fs.w_state(n)) - fs.density(fs.vacuum_state(n))) / 30
    np.testing.assert_allclose(fs.xx_distance_profile(rho), fs.mixed_offset_xx(n))


def test_observables_keys():
    lop = fs.build_alltoall_superoperator(3, JumpRates.alltoall(), block=0)
    obs = fs.observables(lop)
    assert {"trace", "M", "XX", "alpha[-1.5]", "alpha[1.5]"} <= set(obs)
