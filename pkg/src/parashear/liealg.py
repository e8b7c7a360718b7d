"""Dense linear algebra on small real matrices: brackets, nilpotent chain
bases, the GR invariant, and matrix exponentials.

Everything here is plain float64 numpy with explicit residual reporting.
Matrices are ordinary ``(n, n)`` arrays; no wrapper class is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-10
EXPM_NORM_CAP = 50.0


class ExpmOverflow(Exception):
    """Generator norm too large for the series path of expm."""


class NotNilpotent(Exception):
    """Operator did not annihilate within the iteration budget."""


def as_matrix(a) -> np.ndarray:
    """Validate and return a finite square float64 matrix, dim >= 2."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 2:
        raise ValueError("matrix dimension must be >= 2")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def bracket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Commutator AB - BA."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, "fro"))


# ---------------------------------------------------------------------------
# canonical test algebras
# ---------------------------------------------------------------------------

def sl2_triple() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The canonical (U, X, V) with [X,U]=2U, [X,V]=-2V, [U,V]=X."""
    u = np.array([[0.0, 1.0], [0.0, 0.0]])
    x = np.array([[1.0, 0.0], [0.0, -1.0]])
    v = np.array([[0.0, 0.0], [1.0, 0.0]])
    return u, x, v


def sl2_basis() -> list[np.ndarray]:
    return list(sl2_triple())


def _block_embed(m: np.ndarray, total: int, offset: int) -> np.ndarray:
    out = np.zeros((total, total))
    d = m.shape[0]
    out[offset:offset + d, offset:offset + d] = m
    return out


def sl2sl2_basis() -> list[np.ndarray]:
    """Six block-diagonal 4x4 matrices spanning sl2 (+) sl2."""
    return [_block_embed(m, 4, off) for off in (0, 2) for m in sl2_triple()]


def sl2sl2_generator() -> np.ndarray:
    """The diagonal unipotent U (+) U' in the 4x4 block algebra."""
    u = sl2_triple()[0]
    return _block_embed(u, 4, 0) + _block_embed(u, 4, 2)


def sl3_basis() -> list[np.ndarray]:
    """Elementary off-diagonal matrices plus the two traceless diagonals."""
    basis = []
    for i in range(3):
        for j in range(3):
            if i != j:
                e = np.zeros((3, 3))
                e[i, j] = 1.0
                basis.append(e)
    basis.append(np.diag([1.0, -1.0, 0.0]))
    basis.append(np.diag([0.0, 1.0, -1.0]))
    return basis


def sl3_regular_nilpotent() -> np.ndarray:
    """Superdiagonal ones in sl(3)."""
    return np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])


# ---------------------------------------------------------------------------
# the adjoint operator on a spanned subalgebra
# ---------------------------------------------------------------------------

def _coordinate_matrix(basis: list[np.ndarray]) -> np.ndarray:
    """Columns are the vectorized basis elements."""
    return np.column_stack([b.reshape(-1) for b in basis])


def adjoint_matrix(w: np.ndarray, basis: list[np.ndarray],
                   tol: float = 1e-8) -> np.ndarray:
    """Matrix of ad_W = [W, .] in the coordinates of ``basis``.

    Raises ValueError if the basis is linearly dependent or if some bracket
    [W, B_j] leaves the span (residual above ``tol`` relative to its norm).
    """
    w = as_matrix(w)
    coords = _coordinate_matrix(basis)
    svals = np.linalg.svd(coords, compute_uv=False)
    if svals[-1] < 1e-10 * max(1.0, svals[0]):
        raise ValueError("ambient basis is not linearly independent")
    cols = np.column_stack([bracket(w, b).reshape(-1) for b in basis])
    sol, *_ = np.linalg.lstsq(coords, cols, rcond=None)
    resid = coords @ sol - cols
    scale = max(1.0, frobenius(w)) * max(frobenius(b) for b in basis)
    if np.abs(resid).max() > tol * scale:
        raise ValueError("brackets leave the span of the given basis")
    return sol


def nilpotency_degree(w: np.ndarray, basis: list[np.ndarray],
                      tol: float = DEFAULT_TOL) -> int | None:
    """Least k with ad_W^k = 0 on span(basis), or None if not nilpotent.

    The operator norm of each power is compared against ``tol`` scaled by
    the norm of ad_W itself, so exact integer inputs resolve cleanly.
    """
    ad = adjoint_matrix(w, basis)
    dim = w.shape[0]
    scale = max(1.0, np.linalg.norm(ad, 2))
    power = np.eye(len(basis))
    for k in range(dim * dim + 1):
        if np.linalg.norm(power, 2) <= tol * scale ** max(k, 1):
            return k
        power = ad @ power
    return None


# ---------------------------------------------------------------------------
# chain bases
# ---------------------------------------------------------------------------

@dataclass
class ChainBasis:
    """Bracket chains [X_0, ..., X_m] per chain with ad_W X_i = X_{i-1} and
    X_0 in the centralizer of the generator."""

    generator: np.ndarray
    chains: list[list[np.ndarray]]
    residuals: dict = field(default_factory=dict)

    @property
    def lengths(self) -> tuple[int, ...]:
        """Chain lengths, longest first."""
        return tuple(sorted((len(c) for c in self.chains), reverse=True))

    def all_elements(self) -> list[np.ndarray]:
        return [x for chain in self.chains for x in chain]


def _kernel_basis(a: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of ``a``."""
    u, s, vt = np.linalg.svd(a)
    scale = max(1.0, s[0]) if s.size else 1.0
    rank = int(np.sum(s > tol * scale))
    return vt[rank:].T.copy()


def _project_out(vectors: np.ndarray, space: np.ndarray) -> np.ndarray:
    """Components of ``vectors`` orthogonal to the columns of ``space``."""
    if space.size == 0:
        return vectors
    q, _ = np.linalg.qr(space)
    return vectors - q @ (q.T @ vectors)


def chain_basis(w: np.ndarray, basis: list[np.ndarray],
                tol: float = DEFAULT_TOL) -> ChainBasis:
    """Organize span(basis) into descending ad_W chains.

    Kernel filtration: with K_j = ker(ad_W^j), the number of chains of
    length >= j equals dim K_j - dim K_{j-1}.  Working from the top height
    down, new chain tops are chosen in K_j orthogonal to K_{j-1} and to the
    images of higher chains, greedily pivoting on the candidate with the
    largest residual norm; each top is pulled down by repeated ad_W.  Chains
    are rescaled so that the geometric mean of their element norms is 1,
    which keeps both the recursion residuals and the independence margin at
    float64 scale.
    """
    w = as_matrix(w)
    k = nilpotency_degree(w, basis, tol=tol)
    if k is None:
        raise NotNilpotent("generator is not nilpotent on the given span")
    ad = adjoint_matrix(w, basis)
    n = len(basis)
    kernels = [np.zeros((n, 0))]
    power = np.eye(n)
    for _ in range(k):
        power = ad @ power
        kernels.append(_kernel_basis(power))
    coords = _coordinate_matrix(basis)

    chains_coord: list[list[np.ndarray]] = []
    carried: list[np.ndarray] = []   # height-h vectors pushed down from above
    for h in range(k, 0, -1):
        want = kernels[h].shape[1] - kernels[h - 1].shape[1]
        new_tops: list[np.ndarray] = []
        while len(carried) + len(new_tops) < want:
            blocked = [kernels[h - 1]] + [v.reshape(-1, 1) for v in carried]
            blocked += [v.reshape(-1, 1) for v in new_tops]
            proj = _project_out(kernels[h], np.column_stack(
                [b for b in blocked if b.size]) if any(b.size for b in blocked)
                else np.zeros((n, 0)))
            norms = np.linalg.norm(proj, axis=0)
            pick = int(np.argmax(norms))
            if norms[pick] < 1e-9:
                raise NotNilpotent("kernel filtration is numerically degenerate")
            new_tops.append(proj[:, pick] / norms[pick])
        for top in new_tops:
            chain = [top]
            for _ in range(h - 1):
                chain.append(ad @ chain[-1])
            chain.reverse()          # chain[0] is the centralizer element
            chains_coord.append(chain)
        carried = [ad @ v for v in carried + new_tops]

    chains: list[list[np.ndarray]] = []
    for chain in chains_coord:
        mats = [(coords @ v).reshape(w.shape) for v in chain]
        norms = [frobenius(m) for m in mats]
        scale = float(np.exp(np.mean(np.log(norms))))
        chains.append([m / scale for m in mats])
    chains.sort(key=len, reverse=True)

    cb = ChainBasis(generator=w, chains=chains)
    cb.residuals = chain_residuals(cb)
    return cb


def chain_residuals(cb: ChainBasis) -> dict:
    """Replay the defining relations of a chain basis.

    Returns max bracket residual (ad_W X_i vs X_{i-1}, and ad_W X_0 vs 0)
    and the smallest singular value of the coordinate matrix of all chain
    elements.
    """
    w = cb.generator
    worst = 0.0
    for chain in cb.chains:
        worst = max(worst, frobenius(bracket(w, chain[0])))
        for i in range(1, len(chain)):
            worst = max(worst, frobenius(bracket(w, chain[i]) - chain[i - 1]))
    coords = _coordinate_matrix(cb.all_elements())
    sigma_min = float(np.linalg.svd(coords, compute_uv=False)[-1])
    return {"bracket": worst, "sigma_min": sigma_min}


def jordan_lengths(w: np.ndarray, basis: list[np.ndarray]) -> tuple[int, ...]:
    """Jordan block sizes of ad_W on span(basis) from ranks of powers.

    Independent of the chain construction: the number of blocks of size
    >= j is rank(ad^{j-1}) - rank(ad^j).
    """
    ad = adjoint_matrix(w, basis)
    n = len(basis)

    def rank(m: np.ndarray) -> int:
        s = np.linalg.svd(m, compute_uv=False)
        return int(np.sum(s > 1e-9 * max(1.0, s[0]))) if s.size else 0

    ranks = [n]
    power = np.eye(n)
    for _ in range(n + 1):
        power = ad @ power
        ranks.append(rank(power))
        if ranks[-1] == 0:
            break
    if ranks[-1] != 0:
        raise NotNilpotent("generator is not nilpotent on the given span")
    at_least = [ranks[j - 1] - ranks[j] for j in range(1, len(ranks))]
    lengths = []
    for j, count in enumerate(at_least, start=1):
        exactly = count - (at_least[j] if j < len(at_least) else 0)
        lengths.extend([j] * exactly)
    return tuple(sorted(lengths, reverse=True))


def gr_invariant(cb: ChainBasis) -> int:
    """Half-sum of m(m+1) over chains of length m+1.

    Trivial chains (length 1) contribute nothing; the value is a similarity
    invariant of ad_W because the length multiset is.  Always >= 3 for a
    nonzero nilpotent generator.
    """
    total = 0
    for length in cb.lengths:
        m = length - 1
        total += m * (m + 1)
    assert total % 2 == 0
    return total // 2


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------

def _matrix_nilpotency(a: np.ndarray, tol: float = 1e-12) -> int | None:
    """Least d with A^d = 0, or None.

    Thresholds are relative to ||A||^d so arbitrarily small nonzero
    matrices are never mistaken for zero.
    """
    n = a.shape[0]
    norm = frobenius(a)
    if norm == 0.0:
        return 1
    power = np.eye(n)
    for d in range(n + 1):
        if frobenius(power) <= tol * norm ** d:
            return d
        power = power @ a
    return None


def expm(a: np.ndarray, cap: float = EXPM_NORM_CAP) -> np.ndarray:
    """Matrix exponential.

    Nilpotent input (A^dim = 0) is summed as the exact finite polynomial,
    which cannot overflow at any norm representable here; otherwise scaling
    and squaring with a truncated series is used, guarded by ``cap`` on the
    Frobenius norm.
    """
    a = as_matrix(a)
    n = a.shape[0]
    d = _matrix_nilpotency(a)
    if d is not None:
        term = np.eye(n)
        out = np.eye(n)
        for i in range(1, d):
            term = term @ a / i
            out = out + term
        return out
    norm = frobenius(a)
    if norm > cap:
        raise ExpmOverflow(
            f"norm {norm:.3g} exceeds cap {cap:.3g} for a non-nilpotent generator")
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-300) / 0.5))))
    b = a / (2.0 ** squarings)
    term = np.eye(n)
    out = np.eye(n)
    for i in range(1, 30):
        term = term @ b / i
        out = out + term
        if frobenius(term) < 1e-20:
            break
    for _ in range(squarings):
        out = out @ out
    return out


def expm_series(a: np.ndarray, terms: int = 256) -> np.ndarray:
    """Plain truncated series, used as an independent reference."""
    a = as_matrix(a)
    term = np.eye(a.shape[0])
    out = np.eye(a.shape[0])
    for i in range(1, terms):
        term = term @ a / i
        out = out + term
    return out


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

def matrix_to_json(m: np.ndarray) -> list[list[float]]:
    return [[float(x) for x in row] for row in np.asarray(m, dtype=float)]


def matrix_from_json(rows) -> np.ndarray:
    return as_matrix(np.array(rows, dtype=float))


def chain_basis_to_json(cb: ChainBasis) -> dict:
    return {
        "generator": matrix_to_json(cb.generator),
        "chains": [[matrix_to_json(x) for x in chain] for chain in cb.chains],
        "residuals": {k: float(v) for k, v in cb.residuals.items()},
    }


def chain_basis_from_json(obj: dict) -> ChainBasis:
    cb = ChainBasis(
        generator=matrix_from_json(obj["generator"]),
        chains=[[matrix_from_json(x) for x in chain] for chain in obj["chains"]],
        residuals=dict(obj.get("residuals", {})),
    )
    if not cb.residuals:
        cb.residuals = chain_residuals(cb)
    return cb
