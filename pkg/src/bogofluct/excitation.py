"""The unitary identification between the N-particle sector and the truncated
excitation layers orthogonal to the condensate.

Provides the map itself and its inverse, the generator of its time
derivative, the conjugated N-body Hamiltonian split into its leading quadratic
part plus two remainder operators, and dense helpers for verifying all of the
algebraic identities at small sizes.

The forward map is applied frame-free: component j of the image is the
zero-condensate-occupation projection of a(u)^(N-j)/sqrt((N-j)!) applied to
the sector-N state, which is exact on the truncated basis.  Functions of the
excitation-number operator are realized by dense spectral calculus with the
eigenvalues rounded to integers, so weights like sqrt(N - n) carry no series
truncation error.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bogoliubov import build_kernels, mean_field_hamiltonian
from .fock import (
    FockVector,
    OccupationBasis,
    SectorVector,
    SparseOperator,
    annihilate_op,
    create_op,
    dgamma,
    hartree_block,
    number_op,
    pairing_raise,
    project_out_mode,
)
from .hartree import mean_field, mu_of
from .linalg import integer_spectral_function

__all__ = [
    "ExcitationFrame",
    "apply_u_n",
    "apply_u_n_star",
    "dense_u_n",
    "number_plus_op",
    "func_of_number_plus",
    "du_generator",
    "conjugated_hamiltonian",
    "assemble_r1",
    "assemble_r2",
    "orthogonal_sector_projector",
]


@dataclass
class ExcitationFrame:
    """Condensate mode, particle count and the orthogonal projector."""

    u: np.ndarray
    N: int

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        if abs(np.linalg.norm(self.u) - 1.0) > 1e-10:
            raise ValueError("condensate mode must be unit norm to 1e-10")
        if self.N < 1:
            raise ValueError("need at least one particle")
        self.q = np.eye(len(self.u)) - np.outer(self.u, np.conj(self.u))


def apply_u_n(frame: ExcitationFrame, psi: SectorVector) -> FockVector:
    """Map a sector-N state to its excitation decomposition.

    The output has support on sectors 0..N, each annihilated by a(u); its norm
    equals the input norm.
    """
    basis = psi.basis
    N = frame.N
    if psi.n != N:
        raise ValueError(f"expected a sector-{N} state, got sector {psi.n}")
    low = annihilate_op(frame.u, basis).mat
    out = np.zeros(basis.size, dtype=complex)
    cur = psi.embed().amplitudes
    # k = N - j condensate quanta removed before projecting sector j
    for k in range(N + 1):
        j = N - k
        if j <= basis.n_max:
            comp = project_out_mode(frame.u, FockVector(basis, cur / math.sqrt(math.factorial(k))))
            sl = basis.sector_slice(j)
            out[sl] = comp.amplitudes[sl]
        if k < N:
            cur = low @ cur
    return FockVector(basis, out)


def apply_u_n_star(frame: ExcitationFrame, phi: FockVector,
                   tangency_tol: float = 1e-8) -> SectorVector:
    """Inverse map: rebuild the sector-N state from excitation layers.

    Rejects inputs with weight above sector N or with a tangency defect beyond
    tangency_tol; on its domain this is the exact inverse of apply_u_n.
    """
    basis = phi.basis
    N = frame.N
    norms = phi.sector_norms()
    if basis.n_max > N and float(np.sum(norms[N + 1:] ** 2)) > 1e-24:
        raise ValueError("input has weight above sector N")
    low = annihilate_op(frame.u, basis).mat
    defect = np.linalg.norm(low @ phi.amplitudes)
    if defect > tangency_tol * max(1.0, phi.norm()):
        raise ValueError(f"input has tangency defect {defect:.3e} > {tangency_tol:.1e}")
    phis = [SectorVector(basis, n, phi.sector(n).copy()) for n in range(N + 1)]
    return hartree_block(frame.u, phis, basis, orth_tol=tangency_tol)


def dense_u_n(frame: ExcitationFrame, basis: OccupationBasis) -> np.ndarray:
    """Matrix of the excitation map from sector N into the full basis."""
    N = frame.N
    dim = basis.sector_dim(N)
    cols = np.empty((basis.size, dim), dtype=complex)
    for a in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[a] = 1.0
        cols[:, a] = apply_u_n(frame, SectorVector(basis, N, e)).amplitudes
    return cols


def number_plus_op(u: np.ndarray, basis: OccupationBasis) -> SparseOperator:
    """Excitation number operator: total number minus condensate occupation."""
    n_u = create_op(u, basis) @ annihilate_op(u, basis)
    return number_op(basis) - n_u


def func_of_number_plus(u, basis: OccupationBasis, func) -> np.ndarray:
    """Dense f(excitation number) via integer-rounded spectral calculus."""
    return integer_spectral_function(number_plus_op(u, basis).mat, func)


def orthogonal_sector_projector(u, basis: OccupationBasis, n_cut: int) -> np.ndarray:
    """Dense projector onto condensate-orthogonal layers with total <= n_cut."""
    # zero condensate occupation AND total below the cut
    zero_u = integer_spectral_function(
        (create_op(u, basis) @ annihilate_op(u, basis)).mat,
        lambda k: 1.0 if k == 0 else 0.0,
    )
    totals = basis.totals()
    cut = np.diag((totals <= n_cut).astype(float))
    return cut @ zero_u @ cut


def du_generator(frame: ExcitationFrame, udot: np.ndarray,
                 basis: OccupationBasis) -> np.ndarray:
    """Generator G with i dU/dt = G U along a norm-preserving condensate path.

    G = a^dag(u) a(v) - sqrt(N - Np) a(v) - a^dag(v) sqrt(N - Np)
        - <i du/dt, u> (N - Np),   v = Q (i du/dt),
    with Np the excitation number.  Dense, for verification sizes.
    """
    u = frame.u
    udot = np.asarray(udot, dtype=complex)
    if abs(np.vdot(u, udot).real) > 1e-8 * max(1.0, np.linalg.norm(udot)):
        raise ValueError("condensate path does not preserve norm")
    v = frame.q @ (1j * udot)
    N = frame.N
    sqrtN = func_of_number_plus(u, basis, lambda k: math.sqrt(max(N - k, 0)))
    n_minus = func_of_number_plus(u, basis, lambda k: float(N - k))
    a_v = annihilate_op(v, basis).toarray()
    c_v = a_v.conj().T
    c_u = create_op(u, basis).toarray()
    phase = np.vdot(1j * udot, u)
    return c_u @ a_v - sqrtN @ a_v - c_v @ sqrtN - phase * n_minus


def _projected_lowering(frame: ExcitationFrame, basis: OccupationBasis):
    # annihilators of the condensate-orthogonal components of each mode
    return [annihilate_op(frame.q[:, i], basis).mat for i in range(basis.M)]


def assemble_r1(frame: ExcitationFrame, h0, W, basis: OccupationBasis) -> np.ndarray:
    """First remainder of the conjugated N-body Hamiltonian (dense).

    Four term classes, each with its hermitian partner: the excess of the
    condensate-projected mean-field/exchange one-body piece, the cubic
    condensate current, the pairing weight correction, and the
    one-condensate-leg cubic interaction.  The operator orderings are the ones
    produced by conjugating the quartic interaction term class by term; the
    subtraction identity against the dense conjugation pins them down.
    """
    u, N, Q = frame.u, frame.N, frame.q
    m = mean_field(u, W)
    mu = mu_of(u, W)
    kern = build_kernels(u, W)

    def f_np(func):
        return func_of_number_plus(u, basis, func)

    # excess one-body piece: dGamma(Q (mean-field + exchange - gauge) Q) (1 - Np)/(N-1)
    one_body = Q @ (np.diag(m).astype(complex) + kern.k1_bare - mu * np.eye(basis.M)) @ Q
    d1 = f_np(lambda k: (1.0 - k) / (N - 1))
    r1 = dgamma(one_body, basis).toarray() @ d1

    # cubic condensate current: -(a^dag(Q m u) D + D a(Q m u)),
    # D = Np sqrt(N - Np)/(N-1)
    f_star = Q @ (m * u)
    d2 = f_np(lambda k: k * math.sqrt(max(N - k, 0)) / (N - 1))
    c_f = create_op(f_star, basis).toarray()
    r1 = r1 - (c_f @ d2 + d2 @ c_f.conj().T)

    # pairing weight correction: Pc (sqrt((N-Np)(N-Np-1))/(N-1) - 1) + h.c.
    pc = pairing_raise(kern.k2, basis).toarray()
    d3 = f_np(lambda k: math.sqrt(max((N - k) * (N - k - 1), 0)) / (N - 1) - 1.0)
    r1 = r1 + (pc @ d3 + d3 @ pc.conj().T)

    # cubic interaction with one condensate leg:
    # X = sum_ij W[i,j] u[j] b_i^dag b_j^dag b_i,  term X sqrt(N-Np)/(N-1) + h.c.
    lows = _projected_lowering(frame, basis)
    X = sp.csr_matrix((basis.size, basis.size), dtype=complex)
    for i in range(basis.M):
        bi_dag = lows[i].conj().T
        for j in range(basis.M):
            coeff = W[i, j] * u[j]
            if coeff == 0:
                continue
            X = X + coeff * (bi_dag @ lows[j].conj().T @ lows[i])
    d4 = f_np(lambda k: math.sqrt(max(N - k, 0)) / (N - 1))
    Xd = X.toarray()
    r1 = r1 + Xd @ d4 + d4 @ Xd.conj().T
    return r1


def assemble_r2(frame: ExcitationFrame, W, basis: OccupationBasis) -> SparseOperator:
    """Second remainder: the fully condensate-orthogonal quartic interaction,
    (1/(2(N-1))) sum_ij W[i,j] b_i^dag b_j^dag b_i b_j."""
    lows = _projected_lowering(frame, basis)
    mat = sp.csr_matrix((basis.size, basis.size), dtype=complex)
    for i in range(basis.M):
        for j in range(basis.M):
            if W[i, j] == 0:
                continue
            mat = mat + W[i, j] * (
                lows[i].conj().T @ lows[j].conj().T @ lows[i] @ lows[j]
            )
    mat = mat / (2.0 * (frame.N - 1))
    return SparseOperator(basis, mat.tocsr(), (0,))


def conjugated_hamiltonian(frame: ExcitationFrame, h0, W,
                           basis: OccupationBasis) -> np.ndarray:
    """Dense right side of the conjugation identity on the excitation layers.

    N e + dGamma(Q(h + k1 - e)Q) + [a^dag(Q h u) sqrt(N - Np) + h.c.]
    + pairing(k2) + R1 + R2; equals the conjugated N-body Hamiltonian on the
    condensate-orthogonal layers with total at most N.
    """
    u, N, Q = frame.u, frame.N, frame.q
    kern = build_kernels(u, W)
    h = mean_field_hamiltonian(u, h0, W)
    e = float(np.vdot(u, h @ u).real)

    out = N * e * np.eye(basis.size, dtype=complex)
    out += dgamma(Q @ (h + kern.k1 - e * np.eye(basis.M)) @ Q, basis).toarray()

    qhu = Q @ (h @ u)
    sqrtN = func_of_number_plus(u, basis, lambda k: math.sqrt(max(N - k, 0)))
    c_qhu = create_op(qhu, basis).toarray()
    out += c_qhu @ sqrtN + sqrtN @ c_qhu.conj().T

    pc = pairing_raise(kern.k2, basis).toarray()
    out += pc + pc.conj().T

    out += assemble_r1(frame, h0, W, basis)
    out += assemble_r2(frame, W, basis).toarray()
    return out
