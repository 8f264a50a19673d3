"""Experiment orchestration: the main convergence measurement, single-run
diagnostics, the coherent-frame comparison, rate fitting and CSV emission.

Everything here is deterministic: no randomness, no wall-clock values, and
floats are written with repr-faithful precision, so identical configurations
produce bit-identical CSV files.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .bogoliubov import solve_bogoliubov
from .coherent import solve_coherent_fluct
from .config import ExperimentConfig
from .excitation import ExcitationFrame, apply_u_n
from .fock import FockVector, OccupationBasis, dgamma, enumerate_basis, hartree_block
from .hartree import solve_hartree
from .model import relative_bound_constant
from .nbody import ReducedDensity, build_hamiltonian, propagate_exact, reduced_density, trace_distance

__all__ = [
    "RateFit",
    "fit_rate",
    "ConvergenceReport",
    "run_convergence",
    "run_single",
    "compare_coherent",
]


@dataclass
class RateFit:
    slope: float
    r_squared: float
    stderr: float
    n_used: int
    excluded: list = field(default_factory=list)


def fit_rate(errs, N_list) -> RateFit:
    """Least-squares slope of log(err) against log(N).

    Nonpositive or nonfinite errors are excluded and reported; fewer than
    three usable points is an error.
    """
    errs = np.asarray(errs, dtype=float)
    N_arr = np.asarray(N_list, dtype=float)
    if errs.shape != N_arr.shape:
        raise ValueError("errors and N values must align")
    good = np.isfinite(errs) & (errs > 0.0)
    excluded = [int(n) for n in N_arr[~good]]
    if int(good.sum()) < 3:
        raise ValueError("need at least three positive error values to fit a rate")
    x = np.log(N_arr[good])
    y = np.log(errs[good])
    n = len(x)
    xbar, ybar = x.mean(), y.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - ybar)) / sxx)
    intercept = ybar - slope * xbar
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ybar) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else 0.0
    return RateFit(slope, r2, stderr, n, excluded)


REPORT_COLUMNS = (
    "N", "time", "err_norm", "err_energy_form", "trace_dist_k1",
    "expect_Nplus", "tangency", "leakage", "init_norm_deficit",
)


@dataclass
class ConvergenceReport:
    rows: list
    fits: dict
    gates: list
    failures: dict
    passed: bool

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(REPORT_COLUMNS) + "\n")
            for row in self.rows:
                fh.write(",".join(_fmt(row[c]) for c in REPORT_COLUMNS) + "\n")

    def write_rates_csv(self, path):
        with open(path, "w") as fh:
            fh.write("time,slope,stderr,r_squared,n_used\n")
            for t in sorted(self.fits):
                f = self.fits[t]
                fh.write(
                    f"{_fmt(t)},{_fmt(f.slope)},{_fmt(f.stderr)},"
                    f"{_fmt(f.r_squared)},{f.n_used}\n"
                )


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _condensate_density(u: np.ndarray) -> ReducedDensity:
    return ReducedDensity(1, np.outer(u, np.conj(u)))


def _shared_setup(cfg: ExperimentConfig):
    lattice = cfg.lattice()
    h0 = cfg.one_body(lattice)
    W = cfg.interaction(lattice)
    u0 = cfg.condensate(lattice)
    traj = solve_hartree(u0, h0, W, cfg.T, cfg.dt_hartree)
    return lattice, h0, W, u0, traj


def _hartree_gates(traj, tol):
    norms = traj.norms()
    norm_drift = float(np.max(np.abs(norms - 1.0)))
    e0 = traj.energy[0]
    energy_drift = float(np.max(np.abs(traj.energy - e0)) / max(abs(e0), 1e-30))
    return [
        ("hartree_norm_drift", norm_drift, tol["hartree_norm_drift"]),
        ("hartree_energy_drift", energy_drift, tol["hartree_energy_drift"]),
    ]


def run_convergence(cfg: ExperimentConfig, write=True) -> ConvergenceReport:
    """The main experiment: for each N, build the initial N-particle state
    from the shared excitation data, evolve it exactly, map it through the
    excitation frame along the shared condensate history, and compare with
    the one fluctuation evolution; then fit the error against N.
    """
    cfg.require_exact_sectors()
    lattice, h0, W, u0, traj = _shared_setup(cfg)
    basis = enumerate_basis(lattice.M, cfg.n_max)
    phis = cfg.excitations(u0, basis)
    phi0 = _layers_to_fock(phis, basis)
    times = list(cfg.output_times)
    tol = cfg.tolerances

    run = solve_bogoliubov(phi0, traj, h0, W, cfg.dt_fock, t_grid=times,
                           tangency_tol=max(1e-4, tol["tangency"]))
    diag = np.array(run.diagnostics)
    bog_norm_drift = float(np.max(np.abs(diag[:, 1] - 1.0)))
    tangency_max = float(np.max(diag[:, 2]))
    leakage_max = float(np.max(diag[:, 5]))

    gates = _hartree_gates(traj, tol)
    gates += [
        ("bog_norm_drift", bog_norm_drift, tol["bog_norm_drift"]),
        ("tangency", tangency_max, tol["tangency"]),
        ("leakage", leakage_max, tol["leakage"]),
    ]

    energy_form = dgamma(np.eye(lattice.M) + h0, basis).mat
    rows = []
    failures = {}
    worst_initial = 0.0
    worst_nbody_norm = 0.0
    worst_nbody_energy = 0.0
    for N in cfg.N_list:
        try:
            layers = [phis[n] if n <= N else None for n in range(min(N, basis.n_max) + 1)]
            cut_weight = math.fsum(
                (p.norm() ** 2 if p is not None else 0.0) for p in layers
            )
            psi0 = hartree_block(u0, layers, basis)
            deficit = abs(1.0 - psi0.norm())
            psi0.amplitudes = psi0.amplitudes / psi0.norm()
            H = build_hamiltonian(h0, W, N, basis)
            states = propagate_exact(H, psi0, times, dt_max=cfg.dt_nbody)
            e_ref = None
            for k_out, (t, psi) in enumerate(zip(times, states)):
                worst_nbody_norm = max(worst_nbody_norm, abs(psi.norm() - 1.0))
                e_t = float(np.real(np.vdot(psi.amplitudes, H.mat @ psi.amplitudes)))
                if e_ref is None:
                    e_ref = e_t
                else:
                    worst_nbody_energy = max(
                        worst_nbody_energy, abs(e_t - e_ref) / max(abs(e_ref), 1e-30)
                    )
                u_t = traj.interpolate(t)
                frame = ExcitationFrame(u_t, N)
                mapped = apply_u_n(frame, psi)
                delta = mapped.amplitudes - run.states[k_out].amplitudes
                err = float(np.linalg.norm(delta))
                err_energy = float(np.real(np.vdot(delta, energy_form @ delta)))
                gamma1 = reduced_density(psi, 1)
                tdist = trace_distance(gamma1, _condensate_density(u_t))
                totals = basis.totals()
                expect_np = float(totals @ (np.abs(mapped.amplitudes) ** 2))
                if t == 0.0:
                    worst_initial = max(worst_initial, err)
                rows.append({
                    "N": N, "time": t, "err_norm": err,
                    "err_energy_form": err_energy, "trace_dist_k1": tdist,
                    "expect_Nplus": expect_np, "tangency": tangency_max,
                    "leakage": leakage_max,
                    "init_norm_deficit": deficit + abs(1.0 - cut_weight),
                })
        except Exception as exc:  # record and continue with remaining N
            failures[N] = f"{type(exc).__name__}: {exc}"
    gates += [
        ("nbody_norm_drift", worst_nbody_norm, tol["nbody_norm_drift"]),
        ("nbody_energy_drift", worst_nbody_energy, tol["nbody_energy_drift"]),
        ("initial_error", worst_initial, tol["initial_error"]),
    ]

    fits = {}
    for t in times:
        if t == 0.0:
            continue
        sub = [(r["N"], r["err_norm"]) for r in rows if r["time"] == t]
        if len(sub) >= 3:
            try:
                fits[t] = fit_rate([e for _, e in sub], [n for n, _ in sub])
            except ValueError:
                pass

    gate_results = [(name, val, bound, bool(val <= bound)) for name, val, bound in gates]
    passed = all(ok for *_x, ok in gate_results) and not failures
    if cfg.rate_gate:
        passed = passed and _rate_gate_ok(cfg, rows, fits, gate_results)

    report = ConvergenceReport(rows, fits, gate_results, failures, passed)
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        report.write_csv(os.path.join(cfg.output_dir, "report.csv"))
        report.write_rates_csv(os.path.join(cfg.output_dir, "rates.csv"))
        run.write_csv(os.path.join(cfg.output_dir, "fluctuation_diagnostics.csv"))
        with open(os.path.join(cfg.output_dir, "resolved_config.json"), "w") as fh:
            fh.write(cfg.resolved_json() + "\n")
        with open(os.path.join(cfg.output_dir, "gates.json"), "w") as fh:
            json.dump({
                "gates": [
                    {"name": n, "value": v, "bound": b, "ok": ok}
                    for n, v, b, ok in gate_results
                ],
                "failures": {str(k): v for k, v in failures.items()},
                "passed": passed,
                "diagnostics": {
                    # how singular the interaction is relative to the kinetic
                    # operator; always finite on a lattice
                    "relative_bound_constant": relative_bound_constant(W, h0),
                },
            }, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report


def _rate_gate_ok(cfg, rows, fits, gate_results):
    gate = cfg.rate_gate
    t_star = float(gate.get("at_time", cfg.output_times[-1]))
    ok = True
    if gate.get("require_monotone", False):
        sub = sorted((r["N"], r["err_norm"]) for r in rows if r["time"] == t_star)
        errs = [e for _, e in sub]
        mono = all(a > b for a, b in zip(errs, errs[1:]))
        gate_results.append(("err_monotone_decreasing", float(not mono), 0.5, mono))
        ok = ok and mono
    band = gate.get("band")
    if band is not None and t_star in fits:
        slope = fits[t_star].slope
        in_band = band[0] <= slope <= band[1]
        gate_results.append(("rate_slope_in_band", slope, band[1], in_band))
        ok = ok and in_band
    return ok


def _layers_to_fock(phis, basis: OccupationBasis) -> FockVector:
    amps = np.zeros(basis.size, dtype=complex)
    for n, p in enumerate(phis):
        if p is not None:
            amps[basis.sector_slice(n)] = p.amplitudes
    return FockVector(basis, amps)


def run_single(cfg: ExperimentConfig, N: int, write=True):
    """Full time series of every diagnostic for one particle number.

    Writes the condensate trajectory, the per-step fluctuation diagnostics and
    the excitation-mapped comparison series; returns the summary dict.
    """
    cfg.require_exact_sectors(N)
    lattice, h0, W, u0, traj = _shared_setup(cfg)
    basis = enumerate_basis(lattice.M, cfg.n_max)
    phis = cfg.excitations(u0, basis)
    phi0 = _layers_to_fock(phis, basis)
    series_times = [k * cfg.T / 16.0 for k in range(17)]

    run = solve_bogoliubov(phi0, traj, h0, W, cfg.dt_fock, t_grid=series_times)
    layers = [phis[n] if n <= N else None for n in range(min(N, basis.n_max) + 1)]
    psi0 = hartree_block(u0, layers, basis)
    psi0.amplitudes = psi0.amplitudes / psi0.norm()
    H = build_hamiltonian(h0, W, N, basis)
    states = propagate_exact(H, psi0, series_times, dt_max=cfg.dt_nbody)

    energy_form = dgamma(np.eye(lattice.M) + h0, basis).mat
    totals = basis.totals()
    series = []
    for k_out, (t, psi) in enumerate(zip(series_times, states)):
        u_t = traj.interpolate(t)
        frame = ExcitationFrame(u_t, N)
        mapped = apply_u_n(frame, psi)
        delta = mapped.amplitudes - run.states[k_out].amplitudes
        gamma1 = reduced_density(psi, 1)
        series.append({
            "time": t,
            "err_norm": float(np.linalg.norm(delta)),
            "err_energy_form": float(np.real(np.vdot(delta, energy_form @ delta))),
            "trace_dist_k1": trace_distance(gamma1, _condensate_density(u_t)),
            "expect_Nplus_mapped": float(totals @ np.abs(mapped.amplitudes) ** 2),
            "expect_Nplus_plus1": float(totals @ np.abs(mapped.amplitudes) ** 2) + 1.0,
        })

    ratio = [row["expect_Nplus_plus1"] / series[0]["expect_Nplus_plus1"] for row in series]
    gron_c = _gronwall_constant(series_times, ratio)
    summary = {
        "N": N,
        "gronwall_constant": gron_c,
        "max_err_norm": max(r["err_norm"] for r in series),
        "interpolation_defect_mid": traj.interpolation_defect(0.5 * (traj.times[0] + traj.times[1])),
    }
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        traj.write_csv(os.path.join(cfg.output_dir, "hartree_trajectory.csv"))
        run.write_csv(os.path.join(cfg.output_dir, f"fluctuation_diagnostics_N{N}.csv"))
        cols = list(series[0].keys())
        with open(os.path.join(cfg.output_dir, f"excitation_series_N{N}.csv"), "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in series:
                fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")
        with open(os.path.join(cfg.output_dir, f"summary_N{N}.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return series, summary


def _gronwall_constant(times, ratio):
    # smallest c with ratio(t) <= c*exp(c*t) for all t > 0 (monotone in c)
    def ok(c):
        return all(r <= c * math.exp(c * t) + 1e-12 for t, r in zip(times, ratio))
    lo, hi = 0.0, 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e6:
            return float("inf")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def compare_coherent(cfg: ExperimentConfig, write=True):
    """Side-by-side evolution of the same vacuum start under the projected
    and the bare-kernel quadratic generators; returns the gap series."""
    lattice, h0, W, u0, traj = _shared_setup(cfg)
    basis = enumerate_basis(lattice.M, cfg.n_max)
    vac = FockVector.vacuum(basis)
    times = [t for t in cfg.output_times]
    if times[0] != 0.0:
        times = [0.0] + times
    proj = solve_bogoliubov(vac.copy(), traj, h0, W, cfg.dt_fock, t_grid=times)
    bare = solve_coherent_fluct(vac.copy(), traj, h0, W, cfg.dt_fock, t_grid=times)
    rows = []
    for k, t in enumerate(times):
        gap = float(np.linalg.norm(proj.states[k].amplitudes - bare.states[k].amplitudes))
        row = {"time": t, "gap_norm": gap}
        pn = proj.states[k].sector_norms()
        bn = bare.states[k].sector_norms()
        for n in range(min(7, basis.n_max + 1)):
            row[f"proj_sector_{n}"] = float(pn[n])
            row[f"bare_sector_{n}"] = float(bn[n])
        rows.append(row)
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        cols = list(rows[0].keys())
        with open(os.path.join(cfg.output_dir, "coherent_comparison.csv"), "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")
    return rows
