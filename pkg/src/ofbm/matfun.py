"""Primary matrix functions h(L) = P h(J) P^-1 of real matrices.

Jordan blocks are lower triangular (ones on the subdiagonal), so a block of
size r at eigenvalue lam maps to the lower-triangular Toeplitz matrix whose
k-th subdiagonal holds h^(k)(lam) / k!.

Defective structure is never guessed from a raw matrix: ``decompose`` only
accepts well-conditioned eigendecompositions, and defective exponents come in
through ``from_jordan`` with an explicit (P, blocks) pair.
"""
from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from . import special
from .errors import DerivativeUnavailable, NonDiagonalizable, StemSingular, ValidationError

COND_MAX = 1e8
RECON_TOL = 1e-12
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class JordanBlock:
    eigenvalue: complex
    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValidationError(f"block size must be a positive integer, got {self.size}")
        object.__setattr__(self, "eigenvalue", complex(self.eigenvalue))
        object.__setattr__(self, "size", int(self.size))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    P: np.ndarray
    blocks: tuple
    P_inv: np.ndarray

    @property
    def n(self):
        return self.P.shape[0]

    @property
    def roots(self):
        """Eigenvalues repeated by block size, in block order."""
        return [b.eigenvalue for b in self.blocks for _ in range(b.size)]

    def jordan(self):
        J = np.zeros((self.n, self.n), dtype=complex)
        k = 0
        for b in self.blocks:
            for i in range(b.size):
                J[k + i, k + i] = b.eigenvalue
                if i:
                    J[k + i, k + i - 1] = 1.0
            k += b.size
        return J

    def matrix(self):
        """Real matrix P J P^-1 (imaginary residue dropped)."""
        return (self.P @ self.jordan() @ self.P_inv).real

    def shifted(self, delta):
        """Decomposition of the matrix plus delta * I (same P)."""
        blocks = tuple(JordanBlock(b.eigenvalue + delta, b.size) for b in self.blocks)
        return SpectralDecomposition(self.P, blocks, self.P_inv)

    def permuted(self, order):
        """Same matrix with blocks listed in the given order."""
        starts = np.cumsum([0] + [b.size for b in self.blocks])
        cols = np.concatenate([np.arange(starts[i], starts[i + 1]) for i in order])
        return SpectralDecomposition(
            self.P[:, cols], tuple(self.blocks[i] for i in order), self.P_inv[cols, :]
        )

    @property
    def max_block(self):
        return max(b.size for b in self.blocks)


def _check_reconstruction(S, target=None):
    n = S.n
    eye_res = np.abs(S.P @ S.P_inv - np.eye(n)).max()
    M = S.P @ S.jordan() @ S.P_inv
    scale = max(1.0, np.abs(M).max())
    if eye_res > RECON_TOL * np.linalg.cond(S.P):
        raise ValidationError(f"P P^-1 deviates from I by {eye_res:.3g}")
    if np.abs(M.imag).max() > RECON_TOL * scale * max(1.0, np.linalg.cond(S.P)):
        raise ValidationError("P J P^-1 is not real")
    if target is not None:
        res = np.abs(M.real - target).max()
        if res > RECON_TOL * max(1.0, np.abs(target).max()):
            raise NonDiagonalizable(f"reconstruction residual {res:.3g} too large")


def _check_conjugate_pairing(blocks):
    tol = 1e-12
    pool = [b for b in blocks if abs(b.eigenvalue.imag) > tol * max(1.0, abs(b.eigenvalue))]
    used = [False] * len(pool)
    for i, b in enumerate(pool):
        if used[i]:
            continue
        for j in range(i + 1, len(pool)):
            c = pool[j]
            if (
                not used[j]
                and c.size == b.size
                and abs(c.eigenvalue - b.eigenvalue.conjugate()) <= tol * max(1.0, abs(b.eigenvalue))
            ):
                used[i] = used[j] = True
                break
        else:
            raise ValidationError(f"eigenvalue {b.eigenvalue} lacks a conjugate partner of equal size")


def decompose(H):
    """Eigendecomposition of a real diagonalizable matrix.

    Raises NonDiagonalizable when the eigenvector matrix is too ill-conditioned
    or the reconstruction residual is too large.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValidationError("matrix has non-finite entries")
    if not np.any(H - np.diag(np.diag(H))):
        n = H.shape[0]
        P = np.eye(n, dtype=complex)
        return SpectralDecomposition(P, tuple(JordanBlock(v, 1) for v in np.diag(H)), P.copy())
    if np.array_equal(H, H.T):
        w, V = np.linalg.eigh(H)
        P = V.astype(complex)
        P_inv = V.T.astype(complex)
        lam = w.astype(complex)
    else:
        lam, P = np.linalg.eig(H)
        P = P.astype(complex)
        cond = np.linalg.cond(P)
        if not np.isfinite(cond) or cond > COND_MAX:
            raise NonDiagonalizable(
                f"eigenvector condition number {cond:.3g} exceeds {COND_MAX:.0e}; "
                "supply an explicit Jordan pair"
            )
        P_inv = np.linalg.inv(P)
    S = SpectralDecomposition(P, tuple(JordanBlock(v, 1) for v in lam), P_inv)
    _check_reconstruction(S, target=H)
    return S


def from_jordan(P, blocks):
    """Build a decomposition from an explicit P and list of (eigenvalue, size)."""
    P = np.asarray(P, dtype=complex)
    blocks = tuple(b if isinstance(b, JordanBlock) else JordanBlock(*b) for b in blocks)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValidationError(f"P must be square, got shape {P.shape}")
    if sum(b.size for b in blocks) != P.shape[0]:
        raise ValidationError("block sizes do not sum to the dimension")
    _check_conjugate_pairing(blocks)
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise ValidationError(f"P is singular or ill-conditioned (cond {cond:.3g})")
    S = SpectralDecomposition(P, blocks, np.linalg.inv(P))
    _check_reconstruction(S)
    return S


# ---------------------------------------------------------------------------
# stems


class Stem:
    """Scalar stem function with analytic derivatives.

    ``real_symmetric`` marks stems with h(conj z) = conj h(z), whose primary
    functions of real matrices are real.
    """

    name = "stem"
    real_symmetric = True
    max_order = 32

    def derivatives(self, lam, order):
        """[h(lam), h'(lam), ..., h^(order)(lam)]."""
        raise NotImplementedError

    def _check_order(self, order):
        if order > self.max_order:
            raise DerivativeUnavailable(
                f"{self.name}: derivative order {order} exceeds cap {self.max_order}"
            )

    def __repr__(self):
        return f"<stem {self.name}>"


class Power(Stem):
    """z -> base^(sign z) for base > 0."""

    def __init__(self, base, sign=1):
        if not base > 0:
            raise ValueError("power stem needs a positive base")
        self.base = float(base)
        self.sign = sign
        self.name = f"power({self.base:g}, {sign:+d})"

    def derivatives(self, lam, order):
        self._check_order(order)
        L = self.sign * np.log(self.base)
        v = np.exp(L * complex(lam))
        return [L**j * v for j in range(order + 1)]


class GammaShift(Stem):
    """z -> Gamma(z + 1)."""

    name = "gamma_shift"
    max_order = special.MAX_ORDER

    def derivatives(self, lam, order):
        self._check_order(order)
        return special.gamma_derivatives(complex(lam) + 1.0, order)


class SinHalfPi(Stem):
    name = "sin_half_pi"

    def derivatives(self, lam, order):
        self._check_order(order)
        z = np.pi * complex(lam) / 2
        return [(np.pi / 2) ** j * np.sin(z + j * np.pi / 2) for j in range(order + 1)]


class CosHalfPi(Stem):
    name = "cos_half_pi"

    def derivatives(self, lam, order):
        self._check_order(order)
        z = np.pi * complex(lam) / 2
        return [(np.pi / 2) ** j * np.cos(z + j * np.pi / 2) for j in range(order + 1)]


class ExpHalfPi(Stem):
    """z -> exp(-sign * i pi z / 2); complex even on real inputs."""

    real_symmetric = False

    def __init__(self, sign=1):
        self.sign = sign
        self.name = f"exp_half_pi({sign:+d})"

    def derivatives(self, lam, order):
        self._check_order(order)
        c = -self.sign * 1j * np.pi / 2
        v = np.exp(c * complex(lam))
        return [c**j * v for j in range(order + 1)]


class PowerDifference(Stem):
    """z -> a^z - b^z for a, b >= 0 with 0^z taken as 0.

    Written as b^z expm1(z log(a/b)) so nearby a, b do not cancel.
    """

    def __init__(self, a, b):
        if a < 0 or b < 0:
            raise ValueError("power difference needs nonnegative bases")
        self.a, self.b = float(a), float(b)
        self.name = f"power_difference({self.a:g}, {self.b:g})"

    def derivatives(self, lam, order):
        self._check_order(order)
        return list(_power_difference_coeffs(np.array([self.a]), np.array([self.b]), lam, order)[0]
                    * np.array([factorial(k) for k in range(order + 1)]))


# ---------------------------------------------------------------------------
# evaluation


def jordan_block_apply(stem, block):
    """h(J) for one Jordan block: lower-triangular Toeplitz in h^(k)(lam)/k!."""
    r = block.size
    d = stem.derivatives(block.eigenvalue, r - 1)
    out = np.zeros((r, r), dtype=complex)
    for k in range(r):
        c = d[k] / factorial(k)
        idx = np.arange(k, r)
        out[idx, idx - k] = c
    return out


def _finish(S, FJ, real):
    """P FJ P^-1 for FJ of shape (..., n, n); checks and drops imaginary residue."""
    out = S.P @ FJ @ S.P_inv
    if not real:
        return out
    scale = (
        np.linalg.norm(S.P, 2)
        * np.linalg.norm(S.P_inv, 2)
        * np.abs(FJ).max(axis=(-2, -1), keepdims=True)
    )
    resid = np.abs(out.imag)
    bad = resid > IMAG_TOL * np.maximum(scale, np.finfo(float).tiny)
    if np.any(bad):
        raise StemSingular(
            f"imaginary residue {resid.max():.3g} exceeds tolerance; "
            "decomposition or stem is not conjugate symmetric"
        )
    return out.real


def jordan_function(stem, S):
    """Block-diagonal h(J) in the Jordan basis of S."""
    n = S.n
    FJ = np.zeros((n, n), dtype=complex)
    k = 0
    for b in S.blocks:
        FJ[k:k + b.size, k:k + b.size] = jordan_block_apply(stem, b)
        k += b.size
    return FJ


def primary_matfun(stem, S, real=None):
    """h(L) = P h(J) P^-1. Real output for conjugate-symmetric stems."""
    FJ = jordan_function(stem, S)
    if real is None:
        real = stem.real_symmetric
    return _finish(S, FJ, real)


def stem_values(stem, S):
    """h(lam_k) for every block eigenvalue."""
    return [stem.derivatives(b.eigenvalue, 0)[0] for b in S.blocks]


def check_invertible(stem, S, rel_tol=1e-12):
    """Raise StemSingular if h vanishes (relative to its largest value) at a root."""
    vals = np.array(stem_values(stem, S))
    scale = max(1.0, np.abs(vals).max())
    small = np.abs(vals) <= rel_tol * scale
    if np.any(small):
        lam = [b.eigenvalue for b, s in zip(S.blocks, small) if s]
        raise StemSingular(f"{stem.name} vanishes at eigenvalue(s) {lam}")


def primary_matfun_inverse(stem, S, rel_tol=1e-12):
    """Inverse of h(L), after checking h is nonzero at every eigenvalue.

    The inverse is taken of the triangular blocks h(J), which is the same
    matrix as inv(h(L)) but avoids squaring the conditioning of P.
    """
    check_invertible(stem, S, rel_tol)
    FJ_inv = np.linalg.inv(jordan_function(stem, S))
    return _finish(S, FJ_inv, stem.real_symmetric)


# ---------------------------------------------------------------------------
# batched power functions (the hot path for quadrature)


def _assemble(S, coeffs_per_block, m):
    """FJ of shape (m, n, n) from per-block Toeplitz coefficient arrays (m, r)."""
    n = S.n
    FJ = np.zeros((m, n, n), dtype=complex)
    k = 0
    for b, c in zip(S.blocks, coeffs_per_block):
        r = b.size
        for j in range(r):
            idx = np.arange(k + j, k + r)
            FJ[:, idx, idx - j] = c[:, j:j + 1]
        k += r
    return FJ


def _power_coeffs(logx, lam, r):
    v = np.exp(lam * logx)
    out = np.empty((logx.size, r), dtype=complex)
    term = v
    for j in range(r):
        out[:, j] = term
        term = term * logx / (j + 1)
    return out


def power_batch(S, x, sign=-1):
    """x^(sign L) for an array of x > 0; shape (len(x), n, n), real."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    logx = sign * np.log(x)
    coeffs = [_power_coeffs(logx, b.eigenvalue, b.size) for b in S.blocks]
    return _finish(S, _assemble(S, coeffs, x.size), True)


def _power_difference_coeffs(a, b, lam, r):
    """Toeplitz coefficients f^(k)(lam)/k! of f(z) = a^z - b^z, shape (m, r)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lam = complex(lam)
    m = a.size
    out = np.zeros((m, r), dtype=complex)
    both = (a > 0) & (b > 0)
    only_a = (a > 0) & ~both
    only_b = (b > 0) & ~both
    if np.any(only_a):
        out[only_a] = _power_coeffs(np.log(a[only_a]), lam, r)
    if np.any(only_b):
        out[only_b] = -_power_coeffs(np.log(b[only_b]), lam, r)
    if np.any(both):
        ab, bb = a[both], b[both]
        lb = np.log(bb)
        rel = (ab - bb) / bb
        close = np.abs(rel) < 0.5
        ell = np.where(close, np.log1p(np.where(close, rel, 0.0)), np.log(ab) - lb)
        bz = np.exp(lam * lb)
        ez = np.exp(lam * ell)
        # e^(k): k = 0 is expm1(z ell), k >= 1 is ell^k e^(z ell)
        e_der = [np.expm1(lam * ell)] + [ell**k * ez for k in range(1, r)]
        for j in range(r):
            acc = np.zeros(ab.size, dtype=complex)
            for k in range(j + 1):
                acc += comb(j, k) * lb ** (j - k) * e_der[k]
            out[both, j] = bz * acc / factorial(j)
    return out


def power_difference_batch(S, a, b):
    """a^L - b^L elementwise over arrays a, b >= 0, with 0^L = 0; real (m, n, n)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    coeffs = [_power_difference_coeffs(a, b, blk.eigenvalue, blk.size) for blk in S.blocks]
    return _finish(S, _assemble(S, coeffs, a.size), True)


def matrix_power_signed(S, x, side="+"):
    """x_+^(-D) (side '+') or x_-^(-D) (side '-') with the convention 0^D = 0.

    S is the decomposition of D.
    """
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    part = max(x, 0.0) if side == "+" else max(-x, 0.0)
    if part == 0.0:
        return np.zeros((S.n, S.n))
    return power_batch(S, [part], sign=-1)[0]
