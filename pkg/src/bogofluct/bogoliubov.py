"""Quadratic fluctuation dynamics around the condensate.

Builds the time-dependent one-body and pairing kernels from the condensate
mode, assembles the quadratic generator on the truncated Fock basis, steps the
fluctuation state with a midpoint-frozen Krylov exponential, exposes the
low-sector coupled system as an independent cross-check, and verifies the
finite-dimensional operator inequalities the dynamics relies on.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fock import (
    FockVector,
    OccupationBasis,
    SparseOperator,
    annihilate_op,
    dense_to_sector,
    dgamma,
    pairing_op,
    sector_to_dense,
)
from .hartree import HartreeTrajectory, mean_field, mu_of
from .linalg import krylov_expm

logger = logging.getLogger(__name__)

__all__ = [
    "Kernels",
    "build_kernels",
    "BogHamiltonian",
    "bogoliubov_hamiltonian",
    "mean_field_hamiltonian",
    "FluctuationRun",
    "solve_bogoliubov",
    "hierarchy_rhs",
    "tangency_defect",
    "verify_bog_bounds",
]


@dataclass
class Kernels:
    """Condensate-dressed kernels of the quadratic generator.

    k1 is the projected one-body exchange kernel Q k1_bare Q (hermitian), k2
    the projected pairing kernel Q k2_bare Q^T (symmetric); the bare versions
    keep the condensate directions.
    """

    k1: np.ndarray
    k2: np.ndarray
    k1_bare: np.ndarray
    k2_bare: np.ndarray
    q: np.ndarray

    @property
    def k2_frobenius(self) -> float:
        return float(np.linalg.norm(self.k2))


def build_kernels(u: np.ndarray, W: np.ndarray) -> Kernels:
    """Kernels from the condensate mode and interaction:
    k1_bare[x,y] = u[x] W[x,y] conj(u[y]), k2_bare[x,y] = u[x] W[x,y] u[y]."""
    u = np.asarray(u, dtype=complex)
    if abs(np.linalg.norm(u) - 1.0) > 1e-6:
        raise ValueError("condensate mode must be unit norm to 1e-6")
    k1_bare = u[:, None] * W * np.conj(u)[None, :]
    k2_bare = u[:, None] * W * u[None, :]
    q = np.eye(len(u)) - np.outer(u, np.conj(u))
    k1 = q @ k1_bare @ q
    k2 = q @ k2_bare @ q.T
    k2 = 0.5 * (k2 + k2.T)
    kern = Kernels(k1, k2, k1_bare, k2_bare, q)
    logger.debug("pairing kernel Frobenius norm %.6e", kern.k2_frobenius)
    return kern


@dataclass
class BogHamiltonian:
    """Quadratic generator dGamma(h + k1) + pairing(k2) on a truncated basis."""

    op: SparseOperator
    h: np.ndarray
    kernels: Kernels
    time: float | None = None


def mean_field_hamiltonian(u, h0, W) -> np.ndarray:
    """One-body part h = h0 + diag(W|u|^2) - mu(u)."""
    return h0 + np.diag(mean_field(u, W)).astype(complex) - mu_of(u, W) * np.eye(len(u))


def bogoliubov_hamiltonian(u, h0, W, basis: OccupationBasis,
                           projected: bool = True, time: float | None = None) -> BogHamiltonian:
    """Assemble the quadratic generator for fluctuations around u.

    With projected=True the condensate-projected kernels enter (the frame
    tied to an N-particle product state); projected=False keeps the bare
    kernels (the frame tied to a coherent state).
    """
    kern = build_kernels(u, W)
    h = mean_field_hamiltonian(u, h0, W)
    k1 = kern.k1 if projected else kern.k1_bare
    k2 = kern.k2 if projected else kern.k2_bare
    op = dgamma(h + k1, basis) + pairing_op(k2, basis)
    return BogHamiltonian(op, h, kern, time)


def tangency_defect(phi: FockVector, u: np.ndarray) -> float:
    """How far phi strays from the excitation space: ||a(u) phi||."""
    return float(np.linalg.norm(annihilate_op(u, phi.basis).mat @ phi.amplitudes))


@dataclass
class FluctuationRun:
    """States at the requested grid times plus per-step diagnostics rows."""

    times: np.ndarray
    states: list
    diagnostics: list = field(default_factory=list)

    DIAG_COLUMNS = (
        "time", "norm", "tangency", "expect_n", "expect_energy_form",
        "leakage", *[f"sector_norm_{n}" for n in range(7)],
    )

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.DIAG_COLUMNS) + "\n")
            for row in self.diagnostics:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _diag_row(t, phi: FockVector, u, h0, energy_form_diag):
    sector_norms = phi.sector_norms()
    n_max = phi.basis.n_max
    leakage = float(np.sum(sector_norms[max(0, n_max - 1):] ** 2))
    totals = phi.basis.totals()
    p = np.abs(phi.amplitudes) ** 2
    expect_n = float(totals @ p)
    expect_energy = float(np.real(np.vdot(phi.amplitudes, energy_form_diag @ phi.amplitudes)))
    profile = [float(sector_norms[n]) if n <= n_max else 0.0 for n in range(7)]
    return [t, phi.norm(), tangency_defect(phi, u), expect_n, expect_energy,
            leakage, *profile]


def solve_bogoliubov(phi0: FockVector, traj: HartreeTrajectory, h0, W, dt,
                     t_grid=None, projected: bool = True,
                     tangency_tol: float = 1e-4, krylov_tol: float = 1e-12,
                     check_tangency: bool = True) -> FluctuationRun:
    """Propagate the fluctuation state along the stored condensate history.

    One step freezes the generator at the interpolated midpoint condensate and
    applies its Krylov exponential (an order-2 scheme).  The run aborts if the
    norm drifts or, for the projected dynamics, if the tangency defect grows
    beyond tangency_tol, both of which signal truncation or step-size trouble.
    """
    basis = phi0.basis
    if abs(phi0.norm() - 1.0) > 1e-9:
        raise ValueError("initial fluctuation state must be unit norm to 1e-9")
    if check_tangency and projected:
        d0 = tangency_defect(phi0, traj.u[0])
        if d0 > 1e-8:
            raise ValueError(f"initial state has tangency defect {d0:.3e} > 1e-8")
    if t_grid is None:
        t_grid = np.array([traj.times[-1]])
    t_grid = np.asarray(t_grid, dtype=float)
    energy_form = dgamma(np.eye(basis.M) + h0, basis).mat
    phi = phi0.copy()
    t = 0.0
    states = []
    run = FluctuationRun(t_grid, states)
    run.diagnostics.append(_diag_row(0.0, phi, traj.u[0], h0, energy_form))
    for t_target in t_grid:
        if t_target < t - 1e-12:
            raise ValueError("t_grid must be nondecreasing from zero")
        span = t_target - t
        n_sub = max(1, int(round(span / dt))) if span > 1e-14 else 0
        step = span / n_sub if n_sub else 0.0
        for _ in range(n_sub):
            u_mid = traj.interpolate(t + 0.5 * step)
            gen = bogoliubov_hamiltonian(u_mid, h0, W, basis, projected=projected)
            phi = FockVector(basis, krylov_expm(gen.op.mat, phi.amplitudes,
                                                -1j * step, tol=krylov_tol))
            t += step
            u_now = traj.interpolate(t)
            row = _diag_row(t, phi, u_now, h0, energy_form)
            run.diagnostics.append(row)
            if check_tangency and projected and row[2] > tangency_tol:
                raise RuntimeError(
                    f"tangency defect {row[2]:.3e} at t={t:.4g} exceeds "
                    f"{tangency_tol:.1e}; increase n_max or reduce dt"
                )
        states.append(phi.copy())
    return run


def hierarchy_rhs(phi: FockVector, kern: Kernels, h_plus_k1: np.ndarray) -> FockVector:
    """Time derivative (times i) of the lowest three sectors, written directly
    from the coupled sector system.

    Each sector evolves with the one-body operator summed over its particles,
    is fed from two sectors above through conj(k2), and from two below through
    k2.  The coupling weights are the pair-counting square roots fixed by the
    quadratic generator itself: (1/2)sqrt((n+1)(n+2)) downward and the matching
    injection upward.  Needs sectors up to 4 present in the basis.
    """
    basis = phi.basis
    if basis.n_max < 4:
        raise ValueError("hierarchy needs sectors up to 4")
    k2 = kern.k2
    k2c = np.conj(k2)
    h1 = h_plus_k1

    psi1 = phi.sector(1).copy()
    psi2 = sector_to_dense(_sector_view(phi, 2))
    psi3 = sector_to_dense(_sector_view(phi, 3))
    psi4 = sector_to_dense(_sector_view(phi, 4))
    phi0 = phi.sector(0)[0]

    out0 = 0.5 * math.sqrt(2.0) * np.einsum("xy,xy->", k2c, psi2)

    out1 = h1 @ psi1
    out1 = out1 + 0.5 * math.sqrt(6.0) * np.einsum("yz,xyz->x", k2c, psi3)

    out2 = np.einsum("xa,ay->xy", h1, psi2) + np.einsum("yb,xb->xy", h1, psi2)
    out2 = out2 + 0.5 * math.sqrt(2.0) * k2 * phi0
    out2 = out2 + 0.5 * math.sqrt(12.0) * np.einsum("zw,xyzw->xy", k2c, psi4)

    amps = np.zeros(basis.size, dtype=complex)
    amps[basis.sector_slice(0)] = out0
    amps[basis.sector_slice(1)] = out1
    amps[basis.sector_slice(2)] = dense_to_sector(out2, basis, 2).amplitudes
    return FockVector(basis, amps)


def _sector_view(phi: FockVector, n: int):
    from .fock import SectorVector

    return SectorVector(phi.basis, n, phi.sector(n).copy())


def _bisect_smallest_constant(check, hi_start=1.0, rel=1e-4, max_doublings=60):
    # smallest c >= 0 with check(c) true, assuming monotonicity in c
    if check(0.0):
        return 0.0
    hi = hi_start
    doublings = 0
    while not check(hi):
        hi *= 2.0
        doublings += 1
        if doublings > max_doublings:
            raise RuntimeError("no finite constant found")
    lo = 0.0 if hi == hi_start else hi / 2.0
    while hi - lo > rel * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if check(mid):
            hi = mid
        else:
            lo = mid
    return hi


def verify_bog_bounds(u, h0, W, basis: OccupationBasis, psd_tol=1e-10) -> dict:
    """Finite-dimensional operator inequalities for the quadratic generator.

    Finds by bisection the smallest constants with
      c_up * dGamma(I + h0) - H >= 0   on the vacuum complement, and
      H - dGamma(h0) + c_low (N+1) >= 0,
    and checks the pairing and number-commutator bounds with the explicit
    Frobenius-norm constants.  The vacuum is excluded from the upper bound
    because the pairing term couples it to two-quantum states with a fixed
    amplitude while the energy form vanishes on it, so no finite multiple
    dominates there (the untruncated bound carries an additive constant for
    the same reason).  Dense eigensolves; refuses large bases.
    """
    if basis.size > 5000:
        raise ValueError("verification basis too large (limit 5000 states)")
    bog = bogoliubov_hamiltonian(u, h0, W, basis)
    Hd = bog.op.toarray()
    energy_form = dgamma(np.eye(basis.M) + h0, basis).toarray()
    kinetic_form = dgamma(h0, basis).toarray()
    nvals = basis.totals().astype(float)
    scale = max(1.0, np.abs(Hd).max())

    def psd(mat):
        return float(np.linalg.eigvalsh(mat)[0]) >= -psd_tol * scale

    c_up = _bisect_smallest_constant(
        lambda c: psd((c * energy_form - Hd)[1:, 1:])
    )
    c_low = _bisect_smallest_constant(
        lambda c: psd(Hd - kinetic_form + c * np.diag(nvals + 1.0))
    )

    k2_f = bog.kernels.k2_frobenius
    pair = pairing_op(bog.kernels.k2, basis).toarray()
    bound = k2_f * np.diag(nvals + 2.0)
    pairing_margin = min(
        float(np.linalg.eigvalsh(bound - pair)[0]),
        float(np.linalg.eigvalsh(bound + pair)[0]),
    )

    nmat = sp.diags(nvals).tocsr()
    comm = 1j * (bog.op.mat @ nmat - nmat @ bog.op.mat)
    commd = comm.toarray()
    cbound = 2.0 * k2_f * np.diag(nvals + 1.0)
    commutator_margin = min(
        float(np.linalg.eigvalsh(cbound - commd)[0]),
        float(np.linalg.eigvalsh(cbound + commd)[0]),
    )

    return {
        "c_up": c_up,
        "c_low": c_low,
        "k2_frobenius": k2_f,
        "pairing_margin": pairing_margin,
        "commutator_margin": commutator_margin,
        "pairing_ok": pairing_margin >= -psd_tol * max(1.0, k2_f * (basis.n_max + 2)),
        "commutator_ok": commutator_margin >= -psd_tol * max(1.0, 2 * k2_f * (basis.n_max + 1)),
    }
