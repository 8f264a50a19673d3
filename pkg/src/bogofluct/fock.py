"""Symmetric Fock space over M modes truncated at total particle number n_max.

Occupation bases, ladder operators, second quantization, pairing and two-body
operators, symmetric tensor products, and the condensate block construction
sum_n a^dag(u)^(N-n)/sqrt((N-n)!) phi_n used to build N-particle states from
excitation data.

Basis ordering contract (serialization version 1): sectors by increasing total
particle number; inside a sector, occupation vectors with the first mode
filling first, i.e. (n,0,...), (n-1,1,0,...), ...  Creation amplitudes that
would leave the truncation are dropped, which keeps every assembled operator a
compression of its untruncated counterpart.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "OccupationBasis",
    "enumerate_basis",
    "FockVector",
    "SectorVector",
    "SparseOperator",
    "create_op",
    "annihilate_op",
    "dgamma",
    "number_op",
    "pairing_op",
    "two_body_op",
    "two_body_general",
    "sym_tensor",
    "hartree_block",
    "project_out_mode",
    "sector_to_dense",
    "dense_to_sector",
    "save_vector",
    "load_vector",
]

ORDERING_VERSION = 1
DEFAULT_MAX_STATES = 5_000_000


def _compositions(n, m):
    # all occupation vectors of n quanta in m modes, first mode filling first
    if m == 1:
        yield (n,)
        return
    for k in range(n, -1, -1):
        for rest in _compositions(n - k, m - 1):
            yield (k,) + rest


class OccupationBasis:
    """Ordered occupation-number basis of the truncated Fock space."""

    def __init__(self, M: int, n_max: int, max_states: int = DEFAULT_MAX_STATES):
        if M < 1:
            raise ValueError(f"need M >= 1 modes, got {M}")
        if n_max < 0:
            raise ValueError(f"need n_max >= 0, got {n_max}")
        dim = sum(math.comb(n + M - 1, M - 1) for n in range(n_max + 1))
        if dim > max_states:
            raise ValueError(
                f"basis with M={M}, n_max={n_max} holds {dim} states, "
                f"above the cap {max_states}"
            )
        self.M = M
        self.n_max = n_max
        states = np.empty((dim, M), dtype=np.int64)
        offsets = np.empty(n_max + 2, dtype=np.int64)
        pos = 0
        for n in range(n_max + 1):
            offsets[n] = pos
            for occ in _compositions(n, M):
                states[pos] = occ
                pos += 1
        offsets[n_max + 1] = pos
        self.states = states
        self.sector_offsets = offsets
        self.size = dim
        self._index = {tuple(int(v) for v in row): i for i, row in enumerate(states)}
        self._lowering = None
        self._hop = None
        self._pair = None

    def index(self, occ) -> int:
        return self._index[tuple(int(v) for v in occ)]

    def sector_slice(self, n: int) -> slice:
        if not 0 <= n <= self.n_max:
            raise ValueError(f"sector {n} outside truncation n_max={self.n_max}")
        return slice(int(self.sector_offsets[n]), int(self.sector_offsets[n + 1]))

    def sector_dim(self, n: int) -> int:
        s = self.sector_slice(n)
        return s.stop - s.start

    def totals(self) -> np.ndarray:
        return self.states.sum(axis=1)

    def mode_lowering(self, i: int) -> sp.csr_matrix:
        """Sparse matrix of the mode annihilator a_i (cached)."""
        if self._lowering is None:
            self._lowering = [self._build_lowering(j) for j in range(self.M)]
        return self._lowering[i]

    def _build_lowering(self, i):
        rows, cols, data = [], [], []
        for idx in range(self.size):
            ni = self.states[idx, i]
            if ni == 0:
                continue
            occ = self.states[idx].copy()
            occ[i] -= 1
            rows.append(self._index[tuple(int(v) for v in occ)])
            cols.append(idx)
            data.append(math.sqrt(ni))
        return sp.csr_matrix(
            (np.asarray(data), (rows, cols)), shape=(self.size, self.size)
        )

    def hop_structure(self, i: int, j: int):
        """Index pattern (rows, cols, amps) of a_i^dag a_j for i != j (cached).

        Amplitude sqrt(n_j (n_i + 1)) from each state with n_j > 0; assembling
        dGamma for a new one-body matrix is then pure array concatenation.
        """
        if self._hop is None:
            self._hop = {}
        key = (i, j)
        if key not in self._hop:
            src = np.nonzero(self.states[:, j] > 0)[0]
            occ = self.states[src].copy()
            occ[:, j] -= 1
            occ[:, i] += 1
            dst = np.fromiter(
                (self._index[tuple(int(v) for v in row)] for row in occ),
                dtype=np.int64, count=len(src),
            )
            amps = np.sqrt(
                self.states[src, j].astype(float) * (self.states[src, i] + 1.0)
            )
            self._hop[key] = (dst, src, amps)
        return self._hop[key]

    def pair_structure(self, i: int, j: int):
        """Index pattern of the double raising a_i^dag a_j^dag, i <= j (cached).

        Sources are the states whose total lies at least two below the
        truncation; amplitudes carry the bosonic enhancement factors.
        """
        if self._pair is None:
            self._pair = {}
        key = (min(i, j), max(i, j))
        if key not in self._pair:
            i0, j0 = key
            src = np.nonzero(self.totals() <= self.n_max - 2)[0]
            occ = self.states[src].copy()
            occ[:, j0] += 1
            amps = np.sqrt(occ[:, j0].astype(float))
            occ[:, i0] += 1
            amps = amps * np.sqrt(occ[:, i0].astype(float))
            dst = np.fromiter(
                (self._index[tuple(int(v) for v in row)] for row in occ),
                dtype=np.int64, count=len(src),
            )
            self._pair[key] = (dst, src, amps)
        return self._pair[key]

    def __repr__(self):
        return f"OccupationBasis(M={self.M}, n_max={self.n_max}, size={self.size})"


def enumerate_basis(M: int, n_max: int, max_states: int = DEFAULT_MAX_STATES) -> OccupationBasis:
    return OccupationBasis(M, n_max, max_states)


@dataclass
class FockVector:
    """Complex amplitudes over a full truncated occupation basis."""

    basis: OccupationBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.size,):
            raise ValueError("amplitude vector does not match basis size")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def sector(self, n: int) -> np.ndarray:
        return self.amplitudes[self.basis.sector_slice(n)]

    def sector_norms(self) -> np.ndarray:
        return np.array(
            [np.linalg.norm(self.sector(n)) for n in range(self.basis.n_max + 1)]
        )

    def copy(self) -> "FockVector":
        return FockVector(self.basis, self.amplitudes.copy())

    @classmethod
    def vacuum(cls, basis: OccupationBasis) -> "FockVector":
        amps = np.zeros(basis.size, dtype=complex)
        amps[0] = 1.0
        return cls(basis, amps)


@dataclass
class SectorVector:
    """Amplitudes over the fixed-total-particle-number block of the basis."""

    basis: OccupationBasis
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.sector_dim(self.n),):
            raise ValueError(f"amplitude vector does not match sector {self.n}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def embed(self) -> FockVector:
        amps = np.zeros(self.basis.size, dtype=complex)
        amps[self.basis.sector_slice(self.n)] = self.amplitudes
        return FockVector(self.basis, amps)

    def copy(self) -> "SectorVector":
        return SectorVector(self.basis, self.n, self.amplitudes.copy())


class SparseOperator:
    """Sparse operator on a truncated occupation basis.

    ``band`` declares the particle-number changes the operator may make; the
    declaration is verified when the operator is assembled.  Arithmetic on
    verified operators combines bands without re-verifying.
    """

    def __init__(self, basis, mat, band, check: bool = True):
        self.basis = basis
        self.mat = mat
        self.band = tuple(band)
        if check:
            _check_band(basis, mat, self.band)

    def apply(self, vec: FockVector) -> FockVector:
        return FockVector(vec.basis, self.mat @ vec.amplitudes)

    def dag(self) -> "SparseOperator":
        return SparseOperator(
            self.basis, self.mat.conj().T.tocsr(),
            tuple(-b for b in self.band), check=False,
        )

    def __add__(self, other):
        band = tuple(sorted(set(self.band) | set(other.band)))
        return SparseOperator(self.basis, (self.mat + other.mat).tocsr(), band, check=False)

    def __sub__(self, other):
        band = tuple(sorted(set(self.band) | set(other.band)))
        return SparseOperator(self.basis, (self.mat - other.mat).tocsr(), band, check=False)

    def __mul__(self, scalar):
        return SparseOperator(self.basis, self.mat * scalar, self.band, check=False)

    __rmul__ = __mul__

    def __matmul__(self, other):
        band = tuple(sorted({a + b for a in self.band for b in other.band}))
        return SparseOperator(self.basis, (self.mat @ other.mat).tocsr(), band, check=False)

    def toarray(self) -> np.ndarray:
        return self.mat.toarray()

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        d = self.mat - self.mat.conj().T
        return abs(d).max() <= tol if d.nnz else True

    def __repr__(self):
        return f"SparseOperator(size={self.mat.shape[0]}, nnz={self.mat.nnz}, band={self.band})"


def _check_band(basis, mat, band):
    coo = mat.tocoo()
    if coo.nnz == 0:
        return
    totals = basis.totals()
    dn = totals[coo.row] - totals[coo.col]
    bad = ~np.isin(dn, np.asarray(band))
    if np.any(bad):
        seen = sorted(set(int(v) for v in dn[bad]))
        raise ValueError(f"operator moves particle number by {seen}, declared {band}")


def annihilate_op(f: np.ndarray, basis: OccupationBasis) -> SparseOperator:
    """a(f) = sum_i conj(f_i) a_i, antilinear in f."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (basis.M,):
        raise ValueError("one-particle vector has wrong length")
    mat = sp.csr_matrix((basis.size, basis.size), dtype=complex)
    for i in range(basis.M):
        if f[i] != 0:
            mat = mat + np.conj(f[i]) * basis.mode_lowering(i)
    return SparseOperator(basis, mat.tocsr(), (-1,) if mat.nnz else (0,))


def create_op(f: np.ndarray, basis: OccupationBasis) -> SparseOperator:
    """a^dag(f), the exact adjoint of annihilate_op(f); linear in f.

    Amplitudes that would land above the truncation are dropped.
    """
    return annihilate_op(f, basis).dag()


def dgamma(A: np.ndarray, basis: OccupationBasis) -> SparseOperator:
    """Second quantization of the one-body operator A: acts as sum_j A_j on
    each sector."""
    A = np.asarray(A, dtype=complex)
    M = basis.M
    if A.shape != (M, M):
        raise ValueError("one-body matrix has wrong shape")
    states = basis.states
    rows = [np.arange(basis.size)]
    cols = [np.arange(basis.size)]
    data = [states @ np.diagonal(A)]
    for i in range(M):
        for j in range(M):
            if i == j or A[i, j] == 0:
                continue
            r, c, amps = basis.hop_structure(i, j)
            rows.append(r)
            cols.append(c)
            data.append(A[i, j] * amps)
    mat = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.size, basis.size),
    ).tocsr()
    mat.eliminate_zeros()
    return SparseOperator(basis, mat, (0,))


def number_op(basis: OccupationBasis) -> SparseOperator:
    return SparseOperator(
        basis, sp.diags(basis.totals().astype(complex), format="csr"), (0,)
    )


def pairing_op(K: np.ndarray, basis: OccupationBasis, tol: float = 1e-12) -> SparseOperator:
    """Hermitian pairing operator (1/2) sum_xy K[x,y] a_x^dag a_y^dag + h.c.

    K must be symmetric; the operator changes particle number by +-2.
    """
    K = np.asarray(K, dtype=complex)
    if np.max(np.abs(K - K.T)) > tol:
        raise ValueError("pairing kernel is not symmetric")
    up = pairing_raise(K, basis)
    mat = up.mat + up.mat.conj().T
    if mat.nnz == 0:
        return SparseOperator(basis, sp.csr_matrix(mat), (0,))
    return SparseOperator(basis, mat.tocsr(), (-2, 2))


def pairing_raise(K: np.ndarray, basis: OccupationBasis) -> SparseOperator:
    """Creation half of the pairing operator, (1/2) sum K[x,y] a_x^dag a_y^dag."""
    K = np.asarray(K, dtype=complex)
    rows, cols, data = [], [], []
    for i in range(basis.M):
        for j in range(i, basis.M):
            coeff = K[i, j] if i == j else K[i, j] + K[j, i]
            if coeff == 0:
                continue
            r, c, amps = basis.pair_structure(i, j)
            rows.append(r)
            cols.append(c)
            data.append(0.5 * coeff * amps)
    if not data:
        return SparseOperator(
            basis, sp.csr_matrix((basis.size, basis.size), dtype=complex), (0,)
        )
    mat = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.size, basis.size),
    )
    return SparseOperator(basis, mat.tocsr(), (2,))


def two_body_op(W: np.ndarray, basis: OccupationBasis) -> SparseOperator:
    """Normal-ordered density-density interaction
    (1/2) sum_xy W[x,y] a_x^dag a_y^dag a_y a_x.

    Diagonal in the occupation basis: on a state with occupations n it takes
    the value sum over particle pairs of W evaluated at their sites.
    """
    W = np.asarray(W)
    if np.max(np.abs(W - W.T)) > 1e-12:
        raise ValueError("two-body kernel is not symmetric")
    S = basis.states.astype(float)
    vals = 0.5 * (np.einsum("si,ij,sj->s", S, W, S) - S @ np.real(np.diag(W)))
    return SparseOperator(basis, sp.diags(vals.astype(complex), format="csr"), (0,))


def two_body_general(B: np.ndarray, basis: OccupationBasis) -> SparseOperator:
    """(1/2) sum_{ijkl} B[i,j,k,l] a_i^dag a_j^dag a_k a_l for a full two-body
    coefficient tensor.  Meant for small verification bases."""
    M = basis.M
    B = np.asarray(B, dtype=complex)
    if B.shape != (M, M, M, M):
        raise ValueError("two-body tensor has wrong shape")
    mat = sp.csr_matrix((basis.size, basis.size), dtype=complex)
    lower = [basis.mode_lowering(i) for i in range(M)]
    raiser = [L.conj().T.tocsr() for L in lower]
    for k in range(M):
        for l in range(M):
            lowpair = (lower[k] @ lower[l]).tocsr()
            if lowpair.nnz == 0:
                continue
            Cmat = sp.csr_matrix((basis.size, basis.size), dtype=complex)
            for i in range(M):
                for j in range(M):
                    if B[i, j, k, l] == 0:
                        continue
                    Cmat = Cmat + B[i, j, k, l] * (raiser[i] @ raiser[j])
            mat = mat + 0.5 * (Cmat @ lowpair)
    return SparseOperator(basis, mat.tocsr(), (0,))


def sym_tensor(psi_k: SectorVector, psi_l: SectorVector) -> SectorVector:
    """Symmetric tensor product of two sector vectors.

    In occupation coordinates the permutation sum collapses to the closed form
    (s (+) t) with coefficient sqrt(prod_i binom(s_i + t_i, s_i)); the
    exponential-cost permutation formula is kept as a test oracle only.
    Note the product is not an isometry in general: u (x)_s u has norm sqrt(2).
    """
    if psi_k.basis is not psi_l.basis:
        raise ValueError("sector vectors live on different bases")
    basis = psi_k.basis
    n_out = psi_k.n + psi_l.n
    if n_out > basis.n_max:
        raise ValueError(f"product sector {n_out} exceeds truncation {basis.n_max}")
    out = np.zeros(basis.sector_dim(n_out), dtype=complex)
    off_out = basis.sector_offsets[n_out]
    sl_k = basis.sector_slice(psi_k.n)
    sl_l = basis.sector_slice(psi_l.n)
    states_k = basis.states[sl_k]
    states_l = basis.states[sl_l]
    nz_k = np.nonzero(psi_k.amplitudes)[0]
    nz_l = np.nonzero(psi_l.amplitudes)[0]
    for ik in nz_k:
        s = states_k[ik]
        ck = psi_k.amplitudes[ik]
        for il in nz_l:
            t = states_l[il]
            coeff = 1.0
            for si, ti in zip(s, t):
                coeff *= math.comb(int(si + ti), int(si))
            idx = basis.index(s + t) - off_out
            out[idx] += ck * psi_l.amplitudes[il] * math.sqrt(coeff)
    return SectorVector(basis, n_out, out)


def project_out_mode(u: np.ndarray, vec: FockVector) -> FockVector:
    """Project every sector onto the subspace with no quanta in the mode u.

    Uses the normal-ordered form of the projector,
    sum_k (-1)^k/k! a^dag(u)^k a(u)^k, evaluated Horner style; exact on the
    truncated basis in any frame.
    """
    basis = vec.basis
    low = annihilate_op(u, basis).mat
    raise_u = low.conj().T.tocsr()
    downs = [vec.amplitudes]
    cur = vec.amplitudes
    for _ in range(basis.n_max):
        cur = low @ cur
        if np.linalg.norm(cur) == 0.0:
            break
        downs.append(cur)
    acc = downs[-1].copy()
    for k in range(len(downs) - 2, -1, -1):
        acc = downs[k] - (raise_u @ acc) / (k + 1)
    return FockVector(basis, acc)


def hartree_block(u: np.ndarray, phis, basis: OccupationBasis,
                  orth_tol: float = 1e-10) -> SectorVector:
    """Assemble sum_n a^dag(u)^(N-n)/sqrt((N-n)!) phi_n in sector N = len(phis)-1.

    Each phi_n must be a SectorVector in sector n annihilated by a(u); the map
    is then an isometry from the direct sum of the phi_n onto sector N.
    """
    u = np.asarray(u, dtype=complex)
    N = len(phis) - 1
    if N > basis.n_max:
        raise ValueError(f"target sector {N} exceeds truncation {basis.n_max}")
    low = annihilate_op(u, basis).mat
    raise_u = low.conj().T.tocsr()
    total = np.zeros(basis.size, dtype=complex)
    for n, phi in enumerate(phis):
        if phi is None:
            continue
        if phi.n != n:
            raise ValueError(f"entry {n} lives in sector {phi.n}")
        nrm = phi.norm()
        if nrm == 0.0:
            continue
        w = phi.embed().amplitudes
        if n >= 1 and np.linalg.norm(low @ w) > orth_tol * max(1.0, nrm):
            raise ValueError(f"phi_{n} is not orthogonal to the condensate mode")
        for k in range(1, N - n + 1):
            w = (raise_u @ w) / math.sqrt(k)
        total += w
    return SectorVector(basis, N, total[basis.sector_slice(N)])


def sector_to_dense(psi: SectorVector) -> np.ndarray:
    """First-quantized coefficient tensor of shape (M,)*n for a sector vector.

    The value at a mode tuple consistent with occupations s is
    amplitude(s) * sqrt(prod s_i! / n!), making the tensor the symmetric
    wave function in the product basis.
    """
    import itertools

    basis, n = psi.basis, psi.n
    if basis.M**max(n, 1) > 10_000_000:
        raise ValueError("dense sector tensor would be too large")
    T = np.zeros((basis.M,) * n, dtype=complex) if n > 0 else np.zeros((), dtype=complex)
    if n == 0:
        T[()] = psi.amplitudes[0]
        return T
    sl = basis.sector_slice(n)
    for local, occ in enumerate(basis.states[sl]):
        amp = psi.amplitudes[local]
        if amp == 0:
            continue
        modes = []
        for m, cnt in enumerate(occ):
            modes.extend([m] * int(cnt))
        weight = amp * math.sqrt(
            np.prod([math.factorial(int(c)) for c in occ]) / math.factorial(n)
        )
        for perm in set(itertools.permutations(modes)):
            T[perm] = weight
    return T


def dense_to_sector(T: np.ndarray, basis: OccupationBasis, n: int) -> SectorVector:
    """Inverse of sector_to_dense for a symmetric coefficient tensor."""
    if n == 0:
        return SectorVector(basis, 0, np.array([complex(T)]))
    sl = basis.sector_slice(n)
    out = np.zeros(basis.sector_dim(n), dtype=complex)
    for local, occ in enumerate(basis.states[sl]):
        modes = []
        for m, cnt in enumerate(occ):
            modes.extend([m] * int(cnt))
        out[local] = T[tuple(modes)] * math.sqrt(
            math.factorial(n) / np.prod([math.factorial(int(c)) for c in occ])
        )
    return SectorVector(basis, n, out)


def save_vector(path, vec: FockVector):
    """Serialize a Fock vector: one JSON header line, then interleaved
    (re, im) float64 amplitudes in basis order."""
    header = {
        "M": vec.basis.M,
        "n_max": vec.basis.n_max,
        "ordering_version": ORDERING_VERSION,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        interleaved = np.empty(2 * vec.basis.size, dtype=np.float64)
        interleaved[0::2] = vec.amplitudes.real
        interleaved[1::2] = vec.amplitudes.imag
        fh.write(interleaved.tobytes())


def load_vector(path, basis: OccupationBasis | None = None) -> FockVector:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header["ordering_version"] != ORDERING_VERSION:
            raise ValueError(f"unsupported ordering version {header['ordering_version']}")
        if basis is None:
            basis = OccupationBasis(header["M"], header["n_max"])
        elif basis.M != header["M"] or basis.n_max != header["n_max"]:
            raise ValueError("basis does not match serialized header")
        raw = np.frombuffer(fh.read(), dtype=np.float64)
    if raw.size != 2 * basis.size:
        raise ValueError("amplitude payload has wrong length")
    return FockVector(basis, raw[0::2] + 1j * raw[1::2])
