import json

import numpy as np
import pytest

from bogofluct.cli import main
from bogofluct.config import ExperimentConfig
from bogofluct.experiment import fit_rate, run_convergence, run_single

TINY = {
    "model": {
        "modes": 3,
        "spacing": 1.0,
        "interaction": {"kind": "gaussian", "params": {"strength": 1.0, "range": 1.0}},
    },
    "u0": {"kind": "gaussian", "center": 0.0, "width": 0.8},
    "N_list": [3, 4, 6],
    "n_max": 7,
    "T": 0.5,
    "output_times": [0.0, 0.25, 0.5],
    "dt_hartree": 0.002,
    "dt_fock": 0.002,
    "dt_nbody": 0.1,
}


def write_config(tmp_path, extra=None, name="cfg.json"):
    doc = json.loads(json.dumps(TINY))
    if extra:
        doc.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


# -------------------------------------------------------------------- parsing

def test_defaults_are_resolved_and_dumped():
    cfg = ExperimentConfig({})
    doc = json.loads(cfg.resolved_json())
    assert doc["n_max"] == 24 and doc["N_list"] == [6, 8, 12, 16, 24]
    assert doc["output_times"] == [0.0, 0.25, 0.5, 1.0, 2.0]
    assert doc["tolerances"]["tangency"] == 1e-6


def test_unknown_keys_rejected():
    with pytest.raises(ValueError):
        ExperimentConfig({"nmax": 4})


@pytest.mark.parametrize("patch", [
    {"T": -1.0},
    {"dt_fock": 0.0},
    {"N_list": [4, 3]},
    {"N_list": [1, 2]},
    {"output_times": [0.0, 2.0], "T": 1.0},
])
def test_invalid_configs_rejected(patch):
    doc = json.loads(json.dumps(TINY))
    doc.update(patch)
    with pytest.raises(ValueError):
        ExperimentConfig(doc)


def test_exact_sector_requirement():
    doc = json.loads(json.dumps(TINY))
    doc["n_max"] = 4
    cfg = ExperimentConfig(doc)
    with pytest.raises(ValueError):
        cfg.require_exact_sectors()


def test_interaction_kinds():
    cfg = ExperimentConfig(TINY)
    lat = cfg.lattice()
    doc = json.loads(json.dumps(TINY))
    doc["model"]["interaction"] = {"kind": "zero"}
    assert np.allclose(ExperimentConfig(doc).interaction(lat), 0.0)
    doc["model"]["interaction"] = {"kind": "constant", "params": {"c": 0.3}}
    assert np.allclose(ExperimentConfig(doc).interaction(lat), 0.3)
    doc["model"]["interaction"] = {"kind": "table", "params": {"values": [1.0, 0.5, 0.5]}}
    W = ExperimentConfig(doc).interaction(lat)
    assert np.allclose(np.diag(W), 1.0) and abs(W[0, 1] - 0.5) < 1e-14
    doc["model"]["interaction"] = {"kind": "table", "params": {"values": [1.0, 0.5, 0.4]}}
    with pytest.raises(ValueError):
        ExperimentConfig(doc).interaction(lat)


def test_condensate_and_potential():
    doc = json.loads(json.dumps(TINY))
    doc["u0"] = {"kind": "basis", "index": 1}
    cfg = ExperimentConfig(doc)
    lat = cfg.lattice()
    u = cfg.condensate(lat)
    assert abs(u[1] - 1.0) < 1e-14
    doc["model"]["potential"] = [0.0, 0.5, 0.0]
    cfg = ExperimentConfig(doc)
    h0 = cfg.one_body(lat)
    assert abs(h0[1, 1] - 2.5) < 1e-14


def test_phi0_table_validation():
    doc = json.loads(json.dumps(TINY))
    cfg = ExperimentConfig(doc)
    lat = cfg.lattice()
    u0 = cfg.condensate(lat)
    from bogofluct.fock import enumerate_basis

    basis = enumerate_basis(lat.M, 6)
    # a normalized scalar-plus-one-quantum table orthogonal to the condensate
    v = np.zeros(3, dtype=complex)
    v[0], v[1] = -np.conj(u0[1]), np.conj(u0[0])
    v /= np.linalg.norm(v)
    doc["phi0"] = {"kind": "table", "sectors": {
        "0": [[0.8, 0.0]],
        "1": [[float(x.real), float(x.imag)] for x in 0.6 * v],
    }}
    cfg = ExperimentConfig(doc)
    phis = cfg.excitations(u0, basis)
    assert abs(sum(p.norm() ** 2 for p in phis if p is not None) - 1.0) < 1e-12

    doc["phi0"]["sectors"]["1"] = [[float(x.real), float(x.imag)] for x in 0.6 * u0]
    with pytest.raises(ValueError):
        ExperimentConfig(doc).excitations(u0, basis)


# ----------------------------------------------------------------- experiment

def test_run_convergence_tiny_and_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    doc = json.loads(json.dumps(TINY))
    for out in (out1, out2):
        doc["output_dir"] = str(out)
        rep = run_convergence(ExperimentConfig(doc))
        assert rep.passed, (rep.gates, rep.failures)
    for name in ("report.csv", "rates.csv", "fluctuation_diagnostics.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    header = (out1 / "report.csv").read_text().splitlines()[0]
    assert header.startswith("N,time,err_norm")
    verdict = json.loads((out1 / "gates.json").read_text())
    assert verdict["passed"] is True
    assert verdict["diagnostics"]["relative_bound_constant"] > 0.0


def test_initial_error_vanishes_and_errors_grow_from_zero(tmp_path):
    doc = json.loads(json.dumps(TINY))
    doc["output_dir"] = str(tmp_path / "o")
    rep = run_convergence(ExperimentConfig(doc), write=False)
    for row in rep.rows:
        if row["time"] == 0.0:
            assert row["err_norm"] < 1e-8
        else:
            assert row["err_norm"] > 1e-6


def test_trace_distance_chain_inequality(tmp_path):
    # chain bound: the one-particle distance to the condensate is
    # controlled by twice the state error plus the approximant's distance
    from bogofluct.excitation import ExcitationFrame, apply_u_n_star
    from bogofluct.fock import FockVector, enumerate_basis
    from bogofluct.nbody import reduced_density, trace_distance
    from bogofluct.experiment import _condensate_density

    doc = json.loads(json.dumps(TINY))
    cfg = ExperimentConfig(doc)
    lattice, = [cfg.lattice()]
    h0, W = cfg.one_body(lattice), cfg.interaction(lattice)
    u0 = cfg.condensate(lattice)
    from bogofluct.hartree import solve_hartree
    from bogofluct.nbody import build_hamiltonian, propagate_exact
    from bogofluct.bogoliubov import solve_bogoliubov
    from bogofluct.fock import hartree_block

    basis = enumerate_basis(3, 6)
    traj = solve_hartree(u0, h0, W, cfg.T, cfg.dt_hartree)
    phis = cfg.excitations(u0, basis)
    N = 6
    psi0 = hartree_block(u0, [phis[n] for n in range(N + 1)], basis)
    H = build_hamiltonian(h0, W, N, basis)
    (psi_t,) = propagate_exact(H, psi0, [0.5])
    run = solve_bogoliubov(
        FockVector(basis, np.concatenate([
            phis[0].amplitudes if phis[0] is not None else [0],
            np.zeros(basis.size - 1)]).astype(complex)),
        traj, h0, W, cfg.dt_fock, t_grid=[0.5])
    u_t = traj.interpolate(0.5)
    frame = ExcitationFrame(u_t, N)
    phi_t = run.states[0]
    approx = apply_u_n_star(frame, phi_t, tangency_tol=1e-4)
    approx.amplitudes /= approx.norm()
    lhs = trace_distance(reduced_density(psi_t, 1), _condensate_density(u_t))
    err = np.linalg.norm(psi_t.amplitudes - approx.amplitudes)
    rhs = 2.0 * err + trace_distance(reduced_density(approx, 1), _condensate_density(u_t))
    assert lhs <= rhs + 1e-10


def test_run_single_outputs(tmp_path):
    doc = json.loads(json.dumps(TINY))
    doc["output_dir"] = str(tmp_path / "single")
    series, summary = run_single(ExperimentConfig(doc), 4)
    assert summary["N"] == 4
    assert np.isfinite(summary["gronwall_constant"])
    assert (tmp_path / "single" / "hartree_trajectory.csv").exists()
    assert (tmp_path / "single" / "excitation_series_N4.csv").exists()
    assert (tmp_path / "single" / "fluctuation_diagnostics_N4.csv").exists()
    # odd layers stay empty from a vacuum start; the two-quantum layer fills
    import csv

    with open(tmp_path / "single" / "fluctuation_diagnostics_N4.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["sector_norm_1"]) < 1e-12 for r in rows)
    assert all(float(r["sector_norm_3"]) < 1e-12 for r in rows)
    late = [r for r in rows if float(r["time"]) >= 0.25]
    assert all(float(r["sector_norm_2"]) > 1e-4 for r in late)


# ------------------------------------------------------------------- fit_rate

def test_fit_rate_synthetic_half_power():
    N = np.array([4, 8, 16, 32, 64])
    fit = fit_rate(2.0 * N**-0.5, N)
    assert abs(fit.slope + 0.5) < 1e-12
    assert abs(fit.r_squared - 1.0) < 1e-12


def test_fit_rate_constant_and_degenerate():
    N = [4, 8, 16, 32]
    fit = fit_rate([0.7] * 4, N)
    assert abs(fit.slope) < 1e-12
    fit = fit_rate([0.7, 0.5, 0.0, 0.4], N)
    assert fit.excluded == [16] and fit.n_used == 3
    with pytest.raises(ValueError):
        fit_rate([1.0, 0.0, 0.0, 0.0], N)


# ------------------------------------------------------------------------ CLI

def test_cli_run_and_rate(tmp_path, capsys):
    out = tmp_path / "cliout"
    path = write_config(tmp_path, {"output_dir": str(out)})
    code = main(["run", str(path)])
    text = capsys.readouterr().out
    assert code == 0
    assert "PASS" in text and "rate at t=" in text
    code = main(["rate", str(out / "report.csv"), "--time", "0.5"])
    text = capsys.readouterr().out
    assert code == 0 and "slope=" in text


def test_cli_verify_algebra(capsys):
    code = main(["verify-algebra", "--sizes", "2,2,3"])
    text = capsys.readouterr().out
    assert code == 0
    assert "all identities hold" in text


def test_cli_compare_coherent(tmp_path, capsys):
    out = tmp_path / "cohout"
    path = write_config(tmp_path, {"output_dir": str(out)})
    code = main(["compare-coherent", str(path)])
    text = capsys.readouterr().out
    assert code == 0
    assert (out / "coherent_comparison.csv").exists()
    assert "|projected - bare|" in text


def test_cli_run_single(tmp_path, capsys):
    out = tmp_path / "singleout"
    path = write_config(tmp_path, {"output_dir": str(out)})
    code = main(["run-single", str(path), "4"])
    capsys.readouterr()
    assert code == 0
