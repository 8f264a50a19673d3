#!/usr/bin/env python3
"""Tour of the truncated Fock space machinery.

Builds a small periodic lattice, enumerates the occupation basis, and checks
the ladder-operator algebra numerically: canonical commutators, bosonic
enhancement factors, and the closed-form symmetric tensor product.
"""

import numpy as np

from bogofluct import (
    FockVector,
    SectorVector,
    annihilate_op,
    build_laplacian,
    build_lattice,
    create_op,
    dgamma,
    enumerate_basis,
    number_op,
    sym_tensor,
)

lattice = build_lattice(M=3, spacing=1.0)
basis = enumerate_basis(lattice.M, n_max=4)
print(f"lattice: {lattice}")
print(f"basis:   {basis}")
print(f"sector sizes: {[basis.sector_dim(n) for n in range(5)]}")
print(f"first states of sector 2: {[tuple(s) for s in basis.states[basis.sector_slice(2)][:3]]}")

# mode 0 creation acting twice on the vacuum picks up the sqrt(2) enhancement
e0 = np.eye(3)[0]
vac = FockVector.vacuum(basis)
one = create_op(e0, basis).apply(vac)
two = create_op(e0, basis).apply(one)
print(f"\n<2,0,0| a+(e0)^2 |vac> = {two.amplitudes[basis.index((2, 0, 0))]:.6f}  (expect sqrt(2))")

# canonical commutation relations on the truncation-safe sectors
rng = np.random.default_rng(1)
f = rng.normal(size=3) + 1j * rng.normal(size=3)
g = rng.normal(size=3) + 1j * rng.normal(size=3)
af, cg = annihilate_op(f, basis), create_op(g, basis)
comm = (af.mat @ cg.mat - cg.mat @ af.mat).toarray()
safe = basis.sector_offsets[basis.n_max]
dev = np.max(np.abs(comm[:safe, :safe] - np.vdot(f, g) * np.eye(basis.size)[:safe, :safe]))
print(f"[a(f), a+(g)] - <f,g>: max deviation {dev:.2e} on sectors below the truncation")

# second quantization of the kinetic operator, and the number operator
h0 = build_laplacian(lattice)
kin = dgamma(h0, basis)
print(f"\nkinetic operator: {kin}")
counted = number_op(basis).mat @ two.amplitudes
idx = basis.index((2, 0, 0))
print(f"number operator on the (2,0,0) component: {counted[idx]/two.amplitudes[idx]:.1f} quanta")

# the symmetric tensor product in occupation coordinates: u (x)s u has norm
# sqrt(2), while gluing orthogonal factors preserves norms
u = rng.normal(size=3) + 1j * rng.normal(size=3)
u /= np.linalg.norm(u)
su = SectorVector(basis, 1, u)
uu = sym_tensor(su, su)
v = rng.normal(size=3) + 1j * rng.normal(size=3)
v -= u * np.vdot(u, v)
v /= np.linalg.norm(v)
uv = sym_tensor(su, SectorVector(basis, 1, v))
print(f"\n|u (x)s u| = {uu.norm():.6f}   (sqrt(2) = {np.sqrt(2):.6f})")
print(f"|u (x)s v| = {uv.norm():.6f}   for v orthogonal to u (isometric regime)")
