"""Dense verification of the excitation-map algebra at small sizes.

Every identity the reduction to the quadratic dynamics rests on is checked as
a matrix statement: unitarity of the excitation map, the four conjugation
rules for quadratic monomials, the full conjugated-Hamiltonian identity, the
time-derivative generator, the remainder subtraction, and the agreement of
the low-sector coupled system with the assembled generator.
"""

import math
from dataclasses import dataclass

import numpy as np

from .bogoliubov import (
    bogoliubov_hamiltonian,
    build_kernels,
    hierarchy_rhs,
    mean_field_hamiltonian,
)
from .excitation import (
    ExcitationFrame,
    apply_u_n,
    apply_u_n_star,
    assemble_r1,
    assemble_r2,
    conjugated_hamiltonian,
    dense_u_n,
    du_generator,
    func_of_number_plus,
)
from .fock import (
    FockVector,
    SectorVector,
    annihilate_op,
    create_op,
    dgamma,
    enumerate_basis,
    pairing_raise,
    two_body_op,
)
from .hartree import solve_hartree
from .model import build_interaction, build_laplacian, build_lattice, gaussian_profile

__all__ = ["IdentityCheck", "verify_algebra", "DEFAULT_SIZES"]

DEFAULT_SIZES = ((2, 3, 4), (3, 3, 4))


@dataclass
class IdentityCheck:
    name: str
    context: str
    residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tol


def _setup(M, N, n_max, seed, strength=0.8):
    rng = np.random.default_rng(seed)
    lattice = build_lattice(M, 1.0)
    h0 = build_laplacian(lattice)
    W = build_interaction(lattice, gaussian_profile(strength, 1.0))
    basis = enumerate_basis(M, n_max)
    u = rng.normal(size=M) + 1j * rng.normal(size=M)
    u = u / np.linalg.norm(u)
    return rng, lattice, h0, W, basis, u


def verify_algebra(sizes=DEFAULT_SIZES, seed=20240601) -> list:
    """Run the identity suite and return one IdentityCheck per statement."""
    checks = []
    for M, N, n_max in sizes:
        ctx = f"M={M},N={N},n_max={n_max}"
        rng, lattice, h0, W, basis, u = _setup(M, N, n_max, seed + M + 7 * N)
        frame = ExcitationFrame(u, N)
        U = dense_u_n(frame, basis)
        sl = basis.sector_slice(N)

        gram = U.conj().T @ U
        checks.append(IdentityCheck(
            "unitarity U*U = 1", ctx,
            float(np.max(np.abs(gram - np.eye(gram.shape[0])))), 1e-10))

        psi = rng.normal(size=basis.sector_dim(N)) + 1j * rng.normal(size=basis.sector_dim(N))
        psi = SectorVector(basis, N, psi / np.linalg.norm(psi))
        round_trip = apply_u_n_star(frame, apply_u_n(frame, psi))
        checks.append(IdentityCheck(
            "round trip U* U = 1 on sector N", ctx,
            float(np.max(np.abs(round_trip.amplitudes - psi.amplitudes))), 1e-10))

        checks += _conjugation_identities(frame, basis, U, sl, rng, ctx)

        HN = (dgamma(h0, basis) + (1.0 / (N - 1)) * two_body_op(W, basis)).mat
        H_sector = HN[sl, sl].toarray()
        B = conjugated_hamiltonian(frame, h0, W, basis)
        checks.append(IdentityCheck(
            "conjugated Hamiltonian identity", ctx,
            float(np.max(np.abs(H_sector - U.conj().T @ B @ U))), 1e-10))

        checks.append(_remainder_subtraction(frame, h0, W, basis, U, H_sector, ctx))
        checks += _derivative_identity(M, N, n_max, h0, W, basis, ctx)
        checks += _hierarchy_identity(basis, h0, W, u, rng, ctx)
    return checks


def _conjugation_identities(frame, basis, U, sl, rng, ctx):
    u, N = frame.u, frame.N
    M = basis.M
    f = frame.q @ (rng.normal(size=M) + 1j * rng.normal(size=M))
    g = frame.q @ (rng.normal(size=M) + 1j * rng.normal(size=M))
    c_u = create_op(u, basis).toarray()
    a_u = annihilate_op(u, basis).toarray()
    c_f = create_op(f, basis).toarray()
    a_f = annihilate_op(f, basis).toarray()
    a_g = annihilate_op(g, basis).toarray()
    sqrtN = func_of_number_plus(u, basis, lambda k: math.sqrt(max(N - k, 0)))
    n_minus = func_of_number_plus(u, basis, lambda k: float(N - k))

    def resid(op, rhs):
        return float(np.max(np.abs(op[sl, sl] - U.conj().T @ rhs @ U)))

    pairs = [
        ("conjugation: condensate counter", c_u @ a_u, n_minus),
        ("conjugation: raise against condensate", c_f @ a_u, c_f @ sqrtN),
        ("conjugation: lower against condensate", c_u @ a_f, sqrtN @ a_f),
        ("conjugation: orthogonal quadratic", c_f @ a_g, c_f @ a_g),
    ]
    return [IdentityCheck(name, ctx, resid(op, rhs), 1e-10) for name, op, rhs in pairs]


def _remainder_subtraction(frame, h0, W, basis, U, H_sector, ctx):
    u, N, Q = frame.u, frame.N, frame.q
    kern = build_kernels(u, W)
    h = mean_field_hamiltonian(u, h0, W)
    e = float(np.vdot(u, h @ u).real)
    sqrtN = func_of_number_plus(u, basis, lambda k: math.sqrt(max(N - k, 0)))
    lead = N * e * np.eye(basis.size, dtype=complex)
    lead += dgamma(Q @ (h + kern.k1 - e * np.eye(basis.M)) @ Q, basis).toarray()
    c_qhu = create_op(Q @ (h @ u), basis).toarray()
    lead += c_qhu @ sqrtN + sqrtN @ c_qhu.conj().T
    pc = pairing_raise(kern.k2, basis).toarray()
    lead += pc + pc.conj().T
    remainder = assemble_r1(frame, h0, W, basis) + assemble_r2(frame, W, basis).toarray()
    # the conjugated difference defines R1 + R2 on the excitation layers
    lhs = U @ H_sector @ U.conj().T
    resid = float(np.max(np.abs(
        U.conj().T @ (lhs - lead - remainder) @ U
    )))
    return IdentityCheck("remainder subtraction R1 + R2", ctx, resid, 1e-10)


def _derivative_identity(M, N, n_max, h0, W, basis, ctx):
    u0 = np.exp(-np.linspace(0, 2, M) ** 2).astype(complex)
    u0 += 0.3 * np.roll(u0, 1)
    u0 /= np.linalg.norm(u0)
    dt = 1e-4
    traj = solve_hartree(u0, h0, W, 0.03, dt)
    center = len(traj.times) // 2
    uc = traj.u[center] / np.linalg.norm(traj.u[center])
    frame = ExcitationFrame(uc, N)
    G = du_generator(frame, traj.udot[center], basis)
    Uc = dense_u_n(frame, basis)
    residuals = []
    for steps in (40, 20):
        up = traj.u[center + steps] / np.linalg.norm(traj.u[center + steps])
        um = traj.u[center - steps] / np.linalg.norm(traj.u[center - steps])
        Up = dense_u_n(ExcitationFrame(up, N), basis)
        Um = dense_u_n(ExcitationFrame(um, N), basis)
        fd = (Up - Um) / (2 * steps * dt)
        residuals.append(float(np.max(np.abs(fd - (-1j) * G @ Uc))))
    ratio_check = IdentityCheck(
        "derivative identity O(delta^2) gain", ctx,
        # want residual(2*delta)/residual(delta) >= 3.5, i.e. zero margin left
        max(0.0, 3.5 - residuals[0] / max(residuals[1], 1e-300)), 0.0)
    delta = 20 * dt
    abs_check = IdentityCheck(
        "derivative identity residual at delta=2e-3", ctx, residuals[1],
        100.0 * delta**2)
    return [abs_check, ratio_check]


def _hierarchy_identity(basis, h0, W, u, rng, ctx):
    if basis.n_max < 4:
        return []
    kern = build_kernels(u, W)
    h = mean_field_hamiltonian(u, h0, W)
    bog = bogoliubov_hamiltonian(u, h0, W, basis)
    worst = 0.0
    for _ in range(100):
        v = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
        v = v / np.linalg.norm(v)
        rhs = hierarchy_rhs(FockVector(basis, v), kern, h + kern.k1)
        full = bog.op.mat @ v
        top = basis.sector_offsets[3]
        worst = max(worst, float(np.max(np.abs(rhs.amplitudes[:top] - full[:top]))))
    return [IdentityCheck("coupled system matches generator (sectors 0-2)", ctx, worst, 1e-10)]
