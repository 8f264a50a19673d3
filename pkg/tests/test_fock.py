import itertools
import math

import numpy as np
import pytest

from bogofluct.fock import (
    FockVector,
    SectorVector,
    annihilate_op,
    create_op,
    dense_to_sector,
    dgamma,
    enumerate_basis,
    hartree_block,
    load_vector,
    number_op,
    pairing_op,
    project_out_mode,
    save_vector,
    sector_to_dense,
    sym_tensor,
    two_body_op,
)


def random_unit(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------- enumeration

def test_enumeration_examples():
    b = enumerate_basis(2, 1)
    assert [tuple(s) for s in b.states] == [(0, 0), (1, 0), (0, 1)]
    assert enumerate_basis(2, 2).size == 6
    assert enumerate_basis(3, 2).size == 10


def test_enumeration_sector_counts():
    b = enumerate_basis(4, 5)
    for n in range(6):
        assert b.sector_dim(n) == math.comb(n + 3, 3)
    # sectors ordered, lexicographic first-mode-first inside each sector
    sl = b.sector_slice(2)
    assert tuple(b.states[sl.start]) == (2, 0, 0, 0)
    assert tuple(b.states[sl.stop - 1]) == (0, 0, 0, 2)


def test_enumeration_cap():
    with pytest.raises(ValueError):
        enumerate_basis(10, 30, max_states=1000)


# ---------------------------------------------------------------- ladder ops

def test_create_on_vacuum_and_enhancement():
    b = enumerate_basis(3, 3)
    e0 = np.eye(3)[0]
    c = create_op(e0, b)
    v = c.apply(FockVector.vacuum(b))
    assert abs(v.amplitudes[b.index((1, 0, 0))] - 1.0) < 1e-14
    v2 = c.apply(v)
    assert abs(v2.amplitudes[b.index((2, 0, 0))] - math.sqrt(2)) < 1e-14


def test_create_zero_vector_is_zero_operator():
    b = enumerate_basis(2, 2)
    assert create_op(np.zeros(2), b).mat.nnz == 0


def test_annihilate_is_exact_adjoint():
    b = enumerate_basis(3, 3)
    rng = np.random.default_rng(5)
    f = random_unit(rng, 3)
    diff = annihilate_op(f, b).mat - create_op(f, b).mat.conj().T
    assert diff.nnz == 0 or abs(diff).max() == 0.0


def test_annihilate_vacuum_and_two_quanta():
    b = enumerate_basis(2, 3)
    e0 = np.eye(2)[0]
    a = annihilate_op(e0, b)
    assert np.linalg.norm(a.apply(FockVector.vacuum(b)).amplitudes) == 0.0
    v = np.zeros(b.size, dtype=complex)
    v[b.index((2, 0))] = 1.0
    out = a.mat @ v
    assert abs(out[b.index((1, 0))] - math.sqrt(2)) < 1e-14


def test_ccr_on_truncation_safe_band():
    b = enumerate_basis(3, 4)
    rng = np.random.default_rng(11)
    eye = np.eye(b.size)
    safe = b.sector_offsets[b.n_max]  # states with total <= n_max - 1
    for _ in range(5):
        f = rng.normal(size=3) + 1j * rng.normal(size=3)
        g = rng.normal(size=3) + 1j * rng.normal(size=3)
        af, ag = annihilate_op(f, b).mat, annihilate_op(g, b).mat
        cg = create_op(g, b).mat
        comm = (af @ cg - cg @ af).toarray()
        assert np.max(np.abs(comm[:safe, :safe] - np.vdot(f, g) * eye[:safe, :safe])) < 1e-12
        comm2 = (af @ ag - ag @ af).toarray()
        assert np.max(np.abs(comm2)) < 1e-12


# --------------------------------------------------------------------- dgamma

def test_dgamma_identity_is_number_operator():
    b = enumerate_basis(3, 3)
    d = dgamma(np.eye(3), b).mat - number_op(b).mat
    assert d.nnz == 0 or abs(d).max() < 1e-14


def test_dgamma_zero_and_mode_occupation():
    b = enumerate_basis(3, 3)
    assert dgamma(np.zeros((3, 3)), b).mat.nnz == 0
    A = np.diag([1.0, 0.0, 0.0])
    v = np.zeros(b.size, dtype=complex)
    v[b.index((2, 1, 0))] = 1.0
    out = dgamma(A, b).mat @ v
    assert abs(out[b.index((2, 1, 0))] - 2.0) < 1e-14


def test_dgamma_adjoint_identity():
    b = enumerate_basis(3, 3)
    rng = np.random.default_rng(2)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    d = dgamma(A, b).dag().mat - dgamma(A.conj().T, b).mat
    assert d.nnz == 0 or abs(d).max() == 0.0


# -------------------------------------------------------------------- pairing

def test_pairing_zero_and_vacuum_amplitude():
    b = enumerate_basis(3, 3)
    assert pairing_op(np.zeros((3, 3)), b).mat.nnz == 0
    K = np.zeros((3, 3)); K[0, 0] = 1.0
    out = pairing_op(K, b).apply(FockVector.vacuum(b))
    assert abs(out.amplitudes[b.index((2, 0, 0))] - 0.5 * math.sqrt(2)) < 1e-14


def test_pairing_hermitian_and_rejects_asymmetric():
    b = enumerate_basis(3, 4)
    rng = np.random.default_rng(8)
    K = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    K = K + K.T
    assert pairing_op(K, b).is_hermitian(1e-13)
    with pytest.raises(ValueError):
        pairing_op(K + 1e-3 * np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]), b)


def test_pairing_number_bound_on_safe_sectors():
    # +-pairing(K) <= ||K||_F (N + 2) compressed to sectors <= n_max - 2
    b = enumerate_basis(3, 5)
    rng = np.random.default_rng(21)
    K = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    K = K + K.T
    P = pairing_op(K, b).toarray()
    kf = np.linalg.norm(K)
    bound = kf * np.diag(b.totals() + 2.0)
    cut = b.sector_offsets[b.n_max - 1]  # totals <= n_max - 2
    for sign in (+1, -1):
        mat = (bound + sign * P)[:cut, :cut]
        assert np.linalg.eigvalsh(mat)[0] >= -1e-10 * max(1.0, kf)


# ------------------------------------------------------------------- two body

def test_two_body_single_particle_and_constant():
    b = enumerate_basis(3, 3)
    W = np.full((3, 3), 1.3)
    tb = two_body_op(W, b).mat
    for i in range(3):
        v = np.zeros(b.size); v[b.index(tuple(np.eye(3, dtype=int)[i]))] = 1.0
        assert np.linalg.norm(tb @ v) < 1e-14 or abs((tb @ v) @ v) < 1e-14
    # constant kernel on sector n: c n(n-1)/2
    sl = b.sector_slice(3)
    block = tb[sl, sl].toarray()
    assert np.allclose(block, 1.3 * 3 * 2 / 2 * np.eye(b.sector_dim(3)))


def _dense_pair_sum_oracle(W, basis, n):
    """First-quantized oracle: sum over particle pairs of W on the product
    basis, compressed to the symmetric sector."""
    M = basis.M
    dim = basis.sector_dim(n)
    embed = np.zeros((M**n, dim), dtype=complex)
    for a in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[a] = 1.0
        embed[:, a] = sector_to_dense(SectorVector(basis, n, e)).reshape(-1)
    diag = np.zeros(M**n)
    for flat, tup in enumerate(itertools.product(range(M), repeat=n)):
        diag[flat] = sum(W[tup[j], tup[k]] for j in range(n) for k in range(j + 1, n))
    return embed.conj().T @ (diag[:, None] * embed)


@pytest.mark.parametrize("M,n", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_two_body_matches_first_quantized_oracle(M, n):
    from bogofluct.model import build_interaction, build_lattice, gaussian_profile

    lat = build_lattice(M, 1.0)
    W = build_interaction(lat, gaussian_profile(0.9, 1.1))
    b = enumerate_basis(M, n)
    sl = b.sector_slice(n)
    block = two_body_op(W, b).mat[sl, sl].toarray()
    oracle = _dense_pair_sum_oracle(W, b, n)
    assert np.max(np.abs(block - oracle)) < 1e-12


# ----------------------------------------------------------------- sym tensor

def _permutation_oracle(psi_k, psi_l):
    """The exponential-cost permutation-sum definition, evaluated literally."""
    basis = psi_k.basis
    k, l = psi_k.n, psi_l.n
    Tk = sector_to_dense(psi_k)
    Tl = sector_to_dense(psi_l)
    n = k + l
    out = np.zeros((basis.M,) * n, dtype=complex)
    pref = 1.0 / math.sqrt(math.factorial(k) * math.factorial(l) * math.factorial(n))
    for sigma in itertools.permutations(range(n)):
        def term(idx):
            left = tuple(idx[sigma[j]] for j in range(k))
            right = tuple(idx[sigma[k + j]] for j in range(l))
            return Tk[left] * Tl[right]
        for idx in itertools.product(range(basis.M), repeat=n):
            out[idx] += pref * term(idx)
    return dense_to_sector(out, basis, n)


def test_sym_tensor_self_product_norm():
    b = enumerate_basis(3, 2)
    rng = np.random.default_rng(4)
    u = random_unit(rng, 3)
    su = SectorVector(b, 1, u)
    uu = sym_tensor(su, su)
    assert abs(uu.norm() - math.sqrt(2)) < 1e-12


def test_sym_tensor_with_scalar_is_identity():
    b = enumerate_basis(2, 2)
    rng = np.random.default_rng(9)
    s = SectorVector(b, 2, rng.normal(size=b.sector_dim(2)) + 0j)
    one = SectorVector(b, 0, np.array([1.0 + 0j]))
    out = sym_tensor(s, one)
    assert np.allclose(out.amplitudes, s.amplitudes)


@pytest.mark.parametrize("k,l", [(1, 1), (1, 2), (2, 2)])
def test_sym_tensor_matches_permutation_sum(k, l):
    b = enumerate_basis(2, 4)
    rng = np.random.default_rng(10 * k + l)
    pk = SectorVector(b, k, rng.normal(size=b.sector_dim(k)) + 1j * rng.normal(size=b.sector_dim(k)))
    pl = SectorVector(b, l, rng.normal(size=b.sector_dim(l)) + 1j * rng.normal(size=b.sector_dim(l)))
    got = sym_tensor(pk, pl)
    want = _permutation_oracle(pk, pl)
    assert np.max(np.abs(got.amplitudes - want.amplitudes)) < 1e-12


def test_sym_tensor_orthogonal_excitation_unit_norm():
    # u^(N-1) x_s v for unit v orthogonal to u: unit norm, and equals
    # a^dag(u)^{N-1}/sqrt((N-1)!) v
    N = 4
    b = enumerate_basis(2, N)
    rng = np.random.default_rng(6)
    u = random_unit(rng, 2)
    v = np.array([-np.conj(u[1]), np.conj(u[0])])  # orthogonal unit vector
    su = SectorVector(b, 1, u)
    power = su
    for _ in range(N - 2):
        power = sym_tensor(power, su)
    power = SectorVector(b, N - 1, power.amplitudes / power.norm())  # u^{(N-1)}
    out = sym_tensor(power, SectorVector(b, 1, v))
    assert abs(out.norm() - 1.0) < 1e-12
    oracle = np.zeros(b.size, dtype=complex)
    oracle[b.sector_slice(1)] = v
    cu = create_op(u, b).mat
    for k in range(1, N):
        oracle = cu @ oracle / math.sqrt(k)
    assert np.max(np.abs(out.amplitudes - oracle[b.sector_slice(N)])) < 1e-12

def test_sym_tensor_rejects_overflow():
    b = enumerate_basis(2, 2)
    s = SectorVector(b, 2, np.ones(b.sector_dim(2), dtype=complex))
    with pytest.raises(ValueError):
        sym_tensor(s, s)


# -------------------------------------------------------------- hartree block

def test_hartree_block_pure_condensate():
    N = 3
    b = enumerate_basis(2, N)
    rng = np.random.default_rng(12)
    u = random_unit(rng, 2)
    phis = [SectorVector(b, 0, np.array([1.0 + 0j]))] + [None] * N
    psi = hartree_block(u, phis, b)
    su = SectorVector(b, 1, u)
    ref = sym_tensor(sym_tensor(su, su), su)
    ref_amp = ref.amplitudes / ref.norm()
    assert np.max(np.abs(psi.amplitudes - ref_amp)) < 1e-12


def test_hartree_block_one_excitation_norm_and_isometry():
    N = 4
    b = enumerate_basis(3, N)
    rng = np.random.default_rng(13)
    u = random_unit(rng, 3)
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    v -= u * np.vdot(u, v)
    v /= np.linalg.norm(v)
    phis = [None] * (N + 1)
    phis[1] = SectorVector(b, 1, v)
    psi = hartree_block(u, phis, b)
    assert abs(psi.norm() - 1.0) < 1e-12

    # norm^2 of a mixed block = sum of layer norms^2
    phis[0] = SectorVector(b, 0, np.array([0.4 + 0.3j]))
    raw2 = rng.normal(size=b.sector_dim(2)) + 1j * rng.normal(size=b.sector_dim(2))
    proj2 = project_out_mode(u, SectorVector(b, 2, raw2).embed())
    phis[2] = SectorVector(b, 2, proj2.sector(2))
    total = sum(p.norm() ** 2 for p in phis if p is not None)
    psi = hartree_block(u, phis, b)
    assert abs(psi.norm() ** 2 - total) < 1e-10 * total


def test_hartree_block_rejects_nonorthogonal():
    N = 2
    b = enumerate_basis(2, N)
    rng = np.random.default_rng(14)
    u = random_unit(rng, 2)
    phis = [None, SectorVector(b, 1, u.copy()), None]
    with pytest.raises(ValueError):
        hartree_block(u, phis, b)


# -------------------------------------------------------------- serialization

def test_vector_roundtrip(tmp_path):
    b = enumerate_basis(3, 3)
    rng = np.random.default_rng(15)
    v = FockVector(b, rng.normal(size=b.size) + 1j * rng.normal(size=b.size))
    path = tmp_path / "state.fv"
    save_vector(path, v)
    w = load_vector(path)
    assert w.basis.M == 3 and w.basis.n_max == 3
    assert np.array_equal(w.amplitudes, v.amplitudes)
    w2 = load_vector(path, basis=b)
    assert np.array_equal(w2.amplitudes, v.amplitudes)
    with pytest.raises(ValueError):
        load_vector(path, basis=enumerate_basis(3, 4))
