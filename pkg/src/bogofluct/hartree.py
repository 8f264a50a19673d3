"""Gauged nonlinear Hartree dynamics for the condensate mode.

i u' = (h0 + diag(W |u|^2) - mu(u)) u with the gauge mu(u) chosen so the phase
of u tracks the per-particle energy.  Integrated with classical RK4; the norm
is measured, never enforced, so step-size problems surface as drift.
"""

import numpy as np

__all__ = [
    "mean_field",
    "mu_of",
    "hartree_energy",
    "solve_hartree",
    "HartreeTrajectory",
]


def mean_field(u: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Mean-field potential v[x] = sum_y W[x,y] |u[y]|^2."""
    return W @ np.abs(u) ** 2


def mu_of(u: np.ndarray, W: np.ndarray) -> float:
    """Gauge constant (1/2) sum_xy |u[x]|^2 W[x,y] |u[y]|^2."""
    d = np.abs(u) ** 2
    return 0.5 * float(d @ W @ d)


def hartree_energy(u: np.ndarray, h0: np.ndarray, W: np.ndarray) -> float:
    """Per-particle energy <u, h0 u> + (1/2) <u, (W|u|^2) u>; conserved."""
    kin = np.vdot(u, h0 @ u).real
    return kin + 0.5 * float(np.abs(u) ** 2 @ mean_field(u, W))


def _rhs(u, h0, W):
    # gauge re-evaluated from the stage's own u
    v = mean_field(u, W)
    return -1j * (h0 @ u + v * u - mu_of(u, W) * u)


class HartreeTrajectory:
    """Stored condensate history u(t) with gauges, energies and derivatives.

    Between stored times, u is interpolated by a componentwise cubic Hermite
    polynomial and renormalized; the derivative data for the Hermite form is
    the exact equation right-hand side at the stored points.
    """

    def __init__(self, times, u, udot, mu, energy, h0, W):
        self.times = np.asarray(times)
        self.u = np.asarray(u)
        self.udot = np.asarray(udot)
        self.mu = np.asarray(mu)
        self.energy = np.asarray(energy)
        self.h0 = h0
        self.W = W

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    def norms(self):
        return np.linalg.norm(self.u, axis=1)

    def interpolate(self, t: float) -> np.ndarray:
        """Unit-norm condensate at an arbitrary time in [0, T]."""
        times = self.times
        if t <= times[0]:
            return self.u[0].copy()
        if t >= times[-1]:
            return self.u[-1].copy()
        k = int(np.searchsorted(times, t, side="right") - 1)
        h = times[k + 1] - times[k]
        s = (t - times[k]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s**2 * (3 - 2 * s)
        h11 = s**2 * (s - 1)
        val = (
            h00 * self.u[k]
            + h10 * h * self.udot[k]
            + h01 * self.u[k + 1]
            + h11 * h * self.udot[k + 1]
        )
        return val / np.linalg.norm(val)

    def interpolation_defect(self, t: float) -> float:
        """Residual of the Hartree equation at an interpolated time.

        Compares the Hermite derivative against the equation right-hand side
        evaluated on the interpolated u; zero at stored points up to rounding.
        """
        times = self.times
        if not times[0] < t < times[-1]:
            return 0.0
        k = int(np.searchsorted(times, t, side="right") - 1)
        h = times[k + 1] - times[k]
        s = (t - times[k]) / h
        d00 = (6 * s**2 - 6 * s) / h
        d10 = 3 * s**2 - 4 * s + 1
        d01 = (6 * s - 6 * s**2) / h
        d11 = 3 * s**2 - 2 * s
        der = (
            d00 * self.u[k]
            + d10 * self.udot[k]
            + d01 * self.u[k + 1]
            + d11 * self.udot[k + 1]
        )
        ui = self.interpolate(t)
        return float(np.linalg.norm(der - _rhs(ui, self.h0, self.W)))

    def write_csv(self, path):
        """Columns: time, re/im of each amplitude, mu, energy, norm."""
        M = self.u.shape[1]
        header = ["time"]
        for i in range(M):
            header += [f"re_u{i}", f"im_u{i}"]
        header += ["mu", "energy", "norm"]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for k, t in enumerate(self.times):
                row = [f"{t:.17g}"]
                for i in range(M):
                    row += [f"{self.u[k, i].real:.17g}", f"{self.u[k, i].imag:.17g}"]
                row += [
                    f"{self.mu[k]:.17g}",
                    f"{self.energy[k]:.17g}",
                    f"{np.linalg.norm(self.u[k]):.17g}",
                ]
                fh.write(",".join(row) + "\n")


def solve_hartree(u0, h0, W, T, dt, norm_tol=1e-6) -> HartreeTrajectory:
    """RK4 integration of the gauged Hartree equation on [0, T].

    Stores u, mu, energy and the exact derivative at every step.  Fails if the
    measured norm drift exceeds norm_tol, which signals that dt is too large.
    """
    u0 = np.asarray(u0, dtype=complex)
    if abs(np.linalg.norm(u0) - 1.0) > 1e-10:
        raise ValueError("initial condensate must be normalized to 1e-10")
    if dt <= 0 or T <= 0:
        raise ValueError("need positive dt and horizon")
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-12 * max(1.0, T):
        n_steps = int(np.ceil(T / dt))
    dt = T / n_steps
    times = dt * np.arange(n_steps + 1)
    M = u0.shape[0]
    u_hist = np.empty((n_steps + 1, M), dtype=complex)
    udot_hist = np.empty_like(u_hist)
    mu_hist = np.empty(n_steps + 1)
    e_hist = np.empty(n_steps + 1)
    u = u0.copy()
    for k in range(n_steps + 1):
        u_hist[k] = u
        udot_hist[k] = _rhs(u, h0, W)
        mu_hist[k] = mu_of(u, W)
        e_hist[k] = hartree_energy(u, h0, W)
        if k == n_steps:
            break
        k1 = _rhs(u, h0, W)
        k2 = _rhs(u + 0.5 * dt * k1, h0, W)
        k3 = _rhs(u + 0.5 * dt * k2, h0, W)
        k4 = _rhs(u + dt * k3, h0, W)
        u = u + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = abs(np.linalg.norm(u) - 1.0)
        if drift > norm_tol:
            raise RuntimeError(
                f"norm drift {drift:.3e} at t={times[k + 1]:.4g} exceeds {norm_tol:.1e}; "
                f"reduce dt"
            )
    return HartreeTrajectory(times, u_hist, udot_hist, mu_hist, e_hist, h0, W)
