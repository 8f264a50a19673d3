import numpy as np
import pytest
import scipy.linalg as sla

from bogofluct.fock import SectorVector, dgamma, enumerate_basis, sym_tensor
from bogofluct.model import build_interaction, build_laplacian, build_lattice, constant_profile, gaussian_profile
from bogofluct.nbody import (
    ReducedDensity,
    build_hamiltonian,
    partial_trace_pair,
    propagate_exact,
    reduced_density,
    trace_distance,
)


def random_unit(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def condensate_state(u, N, basis):
    su = SectorVector(basis, 1, np.asarray(u, dtype=complex))
    out = su
    for _ in range(N - 1):
        out = sym_tensor(out, su)
    return SectorVector(basis, N, out.amplitudes / out.norm())


def test_free_case_is_dgamma():
    lat = build_lattice(3, 1.0)
    h0 = build_laplacian(lat)
    W = build_interaction(lat, constant_profile(0.0))
    b = enumerate_basis(3, 3)
    H = build_hamiltonian(h0, W, 3, b)
    sl = b.sector_slice(3)
    ref = dgamma(h0, b).mat[sl, sl]
    assert abs(H.mat - ref).max() < 1e-14


def test_pair_coupling_constants():
    lat = build_lattice(2, 1.0)
    h0 = np.zeros((2, 2), dtype=complex)
    c = 0.9
    W = build_interaction(lat, constant_profile(c))
    b = enumerate_basis(2, 3)
    # N=2: coupling exactly 1, interaction = c * 1 pair
    H2 = build_hamiltonian(h0, W, 2, b)
    assert np.allclose(H2.mat.toarray(), c * np.eye(b.sector_dim(2)))
    # N=3 constant kernel: (1/2) * c * 3 pairs = 3c/2 on the whole sector
    H3 = build_hamiltonian(h0, W, 3, b)
    assert np.allclose(H3.mat.toarray(), 1.5 * c * np.eye(b.sector_dim(3)))


def test_rejects_small_N_and_truncation():
    lat = build_lattice(2, 1.0)
    h0 = build_laplacian(lat)
    W = build_interaction(lat, constant_profile(1.0))
    with pytest.raises(ValueError):
        build_hamiltonian(h0, W, 1, enumerate_basis(2, 2))
    with pytest.raises(ValueError):
        build_hamiltonian(h0, W, 4, enumerate_basis(2, 2))


def test_propagate_zero_hamiltonian_and_eigenstate_phase():
    lat = build_lattice(2, 1.0)
    b = enumerate_basis(2, 2)
    W0 = build_interaction(lat, constant_profile(0.0))
    H = build_hamiltonian(np.zeros((2, 2), dtype=complex), W0, 2, b)
    rng = np.random.default_rng(3)
    psi0 = SectorVector(b, 2, random_unit(rng, b.sector_dim(2)))
    out = propagate_exact(H, psi0, [0.0, 0.7, 1.9])
    for st in out:
        assert np.max(np.abs(st.amplitudes - psi0.amplitudes)) < 1e-12

    # diagonal one-body, basis occupation state evolves by a phase
    h0 = np.diag([0.4, 1.1]).astype(complex)
    H = build_hamiltonian(h0, W0, 2, b)
    e = np.zeros(b.sector_dim(2), dtype=complex)
    e[0] = 1.0  # occupation (2, 0): energy 0.8
    psi0 = SectorVector(b, 2, e)
    (st,) = propagate_exact(H, psi0, [1.3])
    assert abs(st.amplitudes[0] - np.exp(-1j * 0.8 * 1.3)) < 1e-12
    assert np.max(np.abs(np.abs(st.amplitudes) - np.abs(e))) < 1e-12


def test_propagate_matches_dense_expm_oracle():
    lat = build_lattice(2, 1.0)
    h0 = build_laplacian(lat)
    W = build_interaction(lat, gaussian_profile(1.0, 1.0))
    b = enumerate_basis(2, 2)
    H = build_hamiltonian(h0, W, 2, b)
    rng = np.random.default_rng(4)
    psi0 = SectorVector(b, 2, random_unit(rng, b.sector_dim(2)))
    t = 0.9
    (st,) = propagate_exact(H, psi0, [t])
    oracle = sla.expm(-1j * t * H.mat.toarray()) @ psi0.amplitudes
    assert np.max(np.abs(st.amplitudes - oracle)) < 1e-9


def test_krylov_path_matches_dense_oracle():
    # a sector large enough to skip the dense fallback
    from bogofluct.linalg import propagate_substeps

    lat = build_lattice(4, 1.0)
    h0 = build_laplacian(lat)
    W = build_interaction(lat, gaussian_profile(1.5, 1.0))
    b = enumerate_basis(4, 12)
    H = build_hamiltonian(h0, W, 12, b)  # sector dim 455
    rng = np.random.default_rng(5)
    psi0 = SectorVector(b, 12, random_unit(rng, b.sector_dim(12)))
    t = 0.7
    kry = propagate_substeps(H.mat, psi0.amplitudes, t, dt_max=0.1)
    oracle = sla.expm(-1j * t * H.mat.toarray()) @ psi0.amplitudes
    assert np.max(np.abs(kry - oracle)) < 1e-9


def test_norm_and_energy_conservation():
    lat = build_lattice(3, 1.0)
    h0 = build_laplacian(lat)
    W = build_interaction(lat, gaussian_profile(1.2, 1.0))
    b = enumerate_basis(3, 4)
    H = build_hamiltonian(h0, W, 4, b)
    rng = np.random.default_rng(6)
    psi0 = SectorVector(b, 4, random_unit(rng, b.sector_dim(4)))
    times = [0.0, 0.5, 1.0, 2.0]
    states = propagate_exact(H, psi0, times)
    e0 = np.real(np.vdot(states[0].amplitudes, H.mat @ states[0].amplitudes))
    for st in states:
        assert abs(st.norm() - 1.0) < 1e-9
        e = np.real(np.vdot(st.amplitudes, H.mat @ st.amplitudes))
        assert abs(e - e0) <= 1e-8 * abs(e0)


# ----------------------------------------------------------- reduced densities

def test_reduced_density_pure_condensate():
    b = enumerate_basis(3, 4)
    rng = np.random.default_rng(7)
    u = random_unit(rng, 3)
    psi = condensate_state(u, 4, b)
    g1 = reduced_density(psi, 1).check()
    assert np.max(np.abs(g1.matrix - np.outer(u, np.conj(u)))) < 1e-12

    # gamma^(2) is the rank-one projector on the symmetrized pair state
    g2 = reduced_density(psi, 2).check()
    pair = sym_tensor(SectorVector(b, 1, u), SectorVector(b, 1, u))
    pair_amp = pair.amplitudes / pair.norm()
    assert np.max(np.abs(g2.matrix - np.outer(pair_amp, np.conj(pair_amp)))) < 1e-12


def test_reduced_density_one_excitation_oracle():
    # (N-1) particles in u, one in v orthogonal: gamma1 has weights (N-1)/N, 1/N
    N = 5
    b = enumerate_basis(2, N)
    rng = np.random.default_rng(8)
    u = random_unit(rng, 2)
    v = np.array([-np.conj(u[1]), np.conj(u[0])])
    from bogofluct.fock import hartree_block

    phis = [None] * (N + 1)
    phis[1] = SectorVector(b, 1, v)
    psi = hartree_block(u, phis, b)
    g1 = reduced_density(psi, 1).check()
    oracle = ((N - 1) / N) * np.outer(u, np.conj(u)) + (1 / N) * np.outer(v, np.conj(v))
    assert np.max(np.abs(g1.matrix - oracle)) < 1e-12


def test_partial_trace_consistency():
    b = enumerate_basis(3, 3)
    rng = np.random.default_rng(9)
    psi = SectorVector(b, 3, random_unit(rng, b.sector_dim(3)))
    g2 = reduced_density(psi, 2).check()
    g1 = reduced_density(psi, 1).check()
    traced = partial_trace_pair(g2, b)
    assert np.max(np.abs(traced - g1.matrix)) < 1e-10


def test_trace_distance_extremes_and_bound():
    b = enumerate_basis(2, 3)
    rng = np.random.default_rng(10)
    u = random_unit(rng, 2)
    v = np.array([-np.conj(u[1]), np.conj(u[0])])
    ru = ReducedDensity(1, np.outer(u, np.conj(u)))
    rv = ReducedDensity(1, np.outer(v, np.conj(v)))
    assert trace_distance(ru, ru) == 0.0
    assert abs(trace_distance(ru, rv) - 2.0) < 1e-12

    # the one-particle densities of nearby states stay within 2||psi - psi'||
    for _ in range(100):
        p = SectorVector(b, 3, random_unit(rng, b.sector_dim(3)))
        q_amp = p.amplitudes + 0.3 * (rng.normal(size=p.amplitudes.shape)
                                      + 1j * rng.normal(size=p.amplitudes.shape))
        q = SectorVector(b, 3, q_amp / np.linalg.norm(q_amp))
        lhs = trace_distance(reduced_density(p, 1), reduced_density(q, 1))
        rhs = 2.0 * float(np.linalg.norm(p.amplitudes - q.amplitudes))
        assert rhs - lhs >= -1e-10


def test_reduced_density_rejects_bad_order():
    b = enumerate_basis(2, 3)
    psi = SectorVector(b, 3, np.ones(b.sector_dim(3), dtype=complex))
    psi = SectorVector(b, 3, psi.amplitudes / psi.norm())
    with pytest.raises(ValueError):
        reduced_density(psi, 0)
    with pytest.raises(ValueError):
        reduced_density(psi, 4)
