"""Declarative experiment configuration: one JSON document describing the
lattice, interaction, initial data, time stepping, tolerances and output."""

import copy
import json
import math

import numpy as np

from .fock import OccupationBasis, SectorVector, annihilate_op
from .model import (
    ModeBasis,
    build_interaction,
    build_lattice,
    build_laplacian,
    constant_profile,
    gaussian_profile,
)

__all__ = ["ExperimentConfig", "load_config", "DEFAULTS"]

DEFAULTS = {
    "model": {
        "modes": 4,
        "spacing": 1.0,
        "interaction": {"kind": "gaussian", "params": {"strength": 0.5, "range": 1.0}},
        "potential": None,
    },
    "N_list": [6, 8, 12, 16, 24],
    "n_max": 24,
    "u0": {"kind": "gaussian", "center": 0.0, "width": 1.0},
    "phi0": {"kind": "vacuum"},
    "T": 2.0,
    "output_times": [0.0, 0.25, 0.5, 1.0, 2.0],
    "dt_hartree": 0.0005,
    "dt_fock": 0.001,
    "dt_nbody": 0.05,
    "tolerances": {
        "hartree_norm_drift": 1e-8,
        "hartree_energy_drift": 1e-8,
        "nbody_norm_drift": 1e-8,
        "nbody_energy_drift": 1e-8,
        "bog_norm_drift": 1e-7,
        "tangency": 1e-6,
        "leakage": 1e-6,
        "initial_error": 1e-8,
    },
    "rate_gate": None,
    "output_dir": "bogofluct_out",
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


class ExperimentConfig:
    """Validated convergence-experiment description.

    Unknown keys are rejected so typos fail fast; every default is resolved at
    load time and the resolved document is what gets written next to the
    outputs for provenance.
    """

    def __init__(self, raw: dict):
        unknown = set(raw) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        resolved = _merge(DEFAULTS, raw)
        self.raw = resolved
        self.model = resolved["model"]
        self.N_list = [int(n) for n in resolved["N_list"]]
        self.n_max = int(resolved["n_max"])
        self.u0_spec = resolved["u0"]
        self.phi0_spec = resolved["phi0"]
        self.T = float(resolved["T"])
        self.output_times = [float(t) for t in resolved["output_times"]]
        self.dt_hartree = float(resolved["dt_hartree"])
        self.dt_fock = float(resolved["dt_fock"])
        self.dt_nbody = float(resolved["dt_nbody"])
        self.tolerances = resolved["tolerances"]
        self.rate_gate = resolved["rate_gate"]
        self.output_dir = resolved["output_dir"]
        self._validate()

    def _validate(self):
        if self.T <= 0:
            raise ValueError("horizon T must be positive")
        for name in ("dt_hartree", "dt_fock", "dt_nbody"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if sorted(self.N_list) != self.N_list or len(set(self.N_list)) != len(self.N_list):
            raise ValueError("N_list must be strictly increasing")
        if self.N_list and min(self.N_list) < 2:
            raise ValueError("every N must be at least 2")
        if any(t < 0 or t > self.T + 1e-12 for t in self.output_times):
            raise ValueError("output times must lie in [0, T]")
        if sorted(self.output_times) != self.output_times:
            raise ValueError("output times must be nondecreasing")

    def require_exact_sectors(self, N=None):
        need = max(self.N_list) if N is None else N
        if need > self.n_max:
            raise ValueError(
                f"exact dynamics for N={need} needs n_max >= {need}, got {self.n_max}"
            )

    def lattice(self) -> ModeBasis:
        return build_lattice(int(self.model["modes"]), float(self.model["spacing"]))

    def one_body(self, lattice: ModeBasis) -> np.ndarray:
        h0 = build_laplacian(lattice)
        pot = self.model.get("potential")
        if pot is not None:
            pot = np.asarray(pot, dtype=float)
            if pot.shape != (lattice.M,):
                raise ValueError("potential table must have one entry per mode")
            h0 = h0 + np.diag(pot).astype(complex)
        return h0

    def interaction(self, lattice: ModeBasis) -> np.ndarray:
        spec = self.model["interaction"]
        kind = spec["kind"]
        params = spec.get("params", {})
        if kind == "zero":
            return build_interaction(lattice, constant_profile(0.0))
        if kind == "constant":
            return build_interaction(lattice, constant_profile(float(params["c"])))
        if kind == "gaussian":
            return build_interaction(
                lattice,
                gaussian_profile(float(params["strength"]), float(params.get("range", 1.0))),
            )
        if kind == "table":
            values = [float(v) for v in params["values"]]
            M = lattice.M
            if len(values) != M:
                raise ValueError("interaction table needs one value per displacement")
            for k in range(M):
                if abs(values[k] - values[(M - k) % M]) > 1e-12:
                    raise ValueError("interaction table is not even under reflection")
            def w(r):
                return values[int(round(abs(r) / lattice.spacing)) % M]
            return build_interaction(lattice, w)
        raise ValueError(f"unknown interaction kind {kind!r}")

    def condensate(self, lattice: ModeBasis) -> np.ndarray:
        spec = self.u0_spec
        kind = spec["kind"]
        if kind == "basis":
            u = np.zeros(lattice.M, dtype=complex)
            u[int(spec["index"])] = 1.0
            return u
        if kind == "gaussian":
            center = float(spec.get("center", 0.0))
            width = float(spec.get("width", 1.0))
            length = lattice.M * lattice.spacing
            d = np.abs(lattice.positions - center)
            d = np.minimum(d, length - d)
            u = np.exp(-(d**2) / (2.0 * width**2)).astype(complex)
            return u / np.linalg.norm(u)
        if kind == "table":
            u = np.asarray(spec["re"], dtype=float) + 1j * np.asarray(
                spec.get("im", np.zeros(lattice.M)), dtype=float
            )
            nrm = np.linalg.norm(u)
            if abs(nrm - 1.0) > 1e-10:
                raise ValueError("condensate table must be normalized to 1e-10")
            return u
        raise ValueError(f"unknown condensate kind {kind!r}")

    def excitations(self, u0: np.ndarray, basis: OccupationBasis):
        """Initial excitation layers (phi_n) as sector vectors; normalized and
        orthogonal to the condensate, as the convergence statement requires."""
        spec = self.phi0_spec
        kind = spec["kind"]
        phis = [None] * (basis.n_max + 1)
        if kind == "vacuum":
            phis[0] = SectorVector(basis, 0, np.array([1.0 + 0.0j]))
        elif kind == "table":
            for key, rows in spec["sectors"].items():
                n = int(key)
                if n > basis.n_max:
                    raise ValueError(f"phi_{n} beyond truncation {basis.n_max}")
                amps = np.array([complex(r, im) for r, im in rows])
                phis[n] = SectorVector(basis, n, amps)
        else:
            raise ValueError(f"unknown excitation kind {kind!r}")
        total = math.fsum((p.norm() ** 2 if p is not None else 0.0) for p in phis)
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"excitation layers have total weight {total}, need 1 +- 1e-8")
        low = annihilate_op(u0, basis).mat
        for n, p in enumerate(phis):
            if p is None or n == 0:
                continue
            defect = np.linalg.norm(low @ p.embed().amplitudes)
            if defect > 1e-8 * max(1.0, p.norm()):
                raise ValueError(f"phi_{n} is not orthogonal to the condensate")
        return phis

    def resolved_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig(json.load(fh))
