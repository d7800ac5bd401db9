"""OFBM models: exponent, parameterizations, conversions and classification.

A model pairs an exponent H (with D = H - I/2) and one of three
parameterizations:

* spectral  A = A1 + i A2, density x_+^{-D} AA* x_+^{-D*} + x_-^{-D} conj(AA*) x_-^{-D*}
* time      (M_plus, M_minus), kernels (t-u)_+^D - (-u)_+^D and the minus analogue
* Brownian  (M, N), only for H = I/2

The spectral form can always be recovered, so it is the internal reference.
"""
from dataclasses import dataclass, field

import numpy as np

from . import matfun
from .errors import NotObm, SingularConversion, StemSingular, ValidationError, WrongExponent

HALF_ROOT_TOL = 1e-12
HALF_IDENTITY_TOL = 1e-12
CLASSIFY_TOL = 1e-10
SQRT_2PI = np.sqrt(2 * np.pi)


def _real_square(M, n, path):
    M = np.asarray(M)
    if np.iscomplexobj(M):
        if np.any(M.imag):
            raise ValidationError("matrix must be real", path)
        M = M.real
    M = np.asarray(M, dtype=float)
    if M.shape != (n, n):
        raise ValidationError(f"expected shape ({n}, {n}), got {M.shape}", path)
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix has non-finite entries", path)
    return M


@dataclass(frozen=True, eq=False)
class ExponentSpec:
    H: np.ndarray
    decomposition: matfun.SpectralDecomposition
    D: np.ndarray = field(init=False)
    d_decomposition: matfun.SpectralDecomposition = field(init=False)
    roots: tuple = field(init=False)
    half_root: bool = field(init=False)

    def __post_init__(self):
        S = self.decomposition
        object.__setattr__(self, "D", self.H - 0.5 * np.eye(S.n))
        object.__setattr__(self, "d_decomposition", S.shifted(-0.5))
        roots = tuple(b.eigenvalue for b in S.blocks)
        for h in roots:
            if not 0.0 < h.real < 1.0:
                raise ValidationError(
                    f"root h = {h:.6g} has real part outside (0, 1)", "exponent"
                )
        object.__setattr__(self, "roots", roots)
        object.__setattr__(
            self, "half_root", any(abs(h.real - 0.5) <= HALF_ROOT_TOL for h in roots)
        )

    @classmethod
    def from_matrix(cls, H):
        H = np.asarray(H, dtype=float)
        return cls(H, matfun.decompose(H))

    @classmethod
    def from_jordan(cls, P, blocks):
        S = matfun.from_jordan(P, blocks)
        return cls(S.matrix(), S)

    @classmethod
    def scalar(cls, h):
        return cls.from_matrix([[float(h)]])

    @property
    def n(self):
        return self.H.shape[0]

    @property
    def d_roots(self):
        return tuple(h - 0.5 for h in self.roots)

    def is_half_identity(self):
        return np.abs(self.H - 0.5 * np.eye(self.n)).max() <= HALF_IDENTITY_TOL

    def power(self, c):
        """c^H for c > 0 (and the zero matrix at c = 0)."""
        if c == 0:
            return np.zeros((self.n, self.n))
        return matfun.power_batch(self.decomposition, [c], sign=1)[0]


@dataclass(frozen=True, eq=False)
class SpectralParam:
    A1: np.ndarray
    A2: np.ndarray

    @property
    def A(self):
        return self.A1 + 1j * self.A2


@dataclass(frozen=True, eq=False)
class TimeParam:
    M_plus: np.ndarray
    M_minus: np.ndarray


@dataclass(frozen=True, eq=False)
class BrownianCaseParam:
    M: np.ndarray
    N: np.ndarray


def _jordan_factors(exponent):
    """Gamma(D+I) sin(pi D/2) and Gamma(D+I) cos(pi D/2) in the Jordan basis of D."""
    S = exponent.d_decomposition
    try:
        G = matfun.jordan_function(matfun.GammaShift(), S)
        Sn = matfun.jordan_function(matfun.SinHalfPi(), S)
        Cs = matfun.jordan_function(matfun.CosHalfPi(), S)
    except StemSingular as exc:
        raise SingularConversion(str(exc)) from exc
    return S, G @ Sn, G @ Cs


def _left_real(S, X):
    """P X, which must be real when X holds Jordan-basis coordinates of a real matrix."""
    out = S.P @ X
    scale = np.linalg.norm(S.P, 2) * max(np.abs(X).max(), np.finfo(float).tiny)
    if np.abs(out.imag).max() > matfun.IMAG_TOL * scale:
        raise SingularConversion("conversion produced a non-real result")
    return out.real


def m_from_a(A, exponent):
    """Time-domain (M_plus, M_minus) from spectral A.

    M_pm = sqrt(pi/2) (sin(pi D/2)^{-1} Gamma(D+I)^{-1} A1 pm cos(pi D/2)^{-1} Gamma(D+I)^{-1} A2),
    i.e. A1 = (2 pi)^{-1/2} Gamma(D+I) sin(pi D/2) (M+ + M-) and
    A2 = (2 pi)^{-1/2} Gamma(D+I) cos(pi D/2) (M+ - M-).
    """
    if exponent.half_root:
        raise SingularConversion("exponent has a root with real part 1/2")
    S = exponent.d_decomposition
    try:
        for stem in (matfun.GammaShift(), matfun.SinHalfPi(), matfun.CosHalfPi()):
            matfun.check_invertible(stem, S)
    except StemSingular as exc:
        raise SingularConversion(str(exc)) from exc
    S, GS, GC = _jordan_factors(exponent)
    tot = SQRT_2PI * np.linalg.solve(GS, S.P_inv @ A.A1)
    diff = SQRT_2PI * np.linalg.solve(GC, S.P_inv @ A.A2)
    Mp = _left_real(S, (tot + diff) / 2)
    Mm = _left_real(S, (tot - diff) / 2)
    return TimeParam(Mp, Mm)


def a_from_m(M, exponent):
    """Spectral A = A1 + i A2 from (M_plus, M_minus)."""
    if exponent.half_root:
        raise SingularConversion("exponent has a root with real part 1/2")
    S, GS, GC = _jordan_factors(exponent)
    A1 = _left_real(S, GS @ (S.P_inv @ (M.M_plus + M.M_minus)) / SQRT_2PI)
    A2 = _left_real(S, GC @ (S.P_inv @ (M.M_plus - M.M_minus)) / SQRT_2PI)
    return SpectralParam(A1, A2)


def aa_star_from_m(M, exponent):
    """AA* rebuilt from the Fourier transform of the time kernel.

    For x > 0 the kernel transforms to a multiple of
    Q = Gamma(D+I) (e^{-i pi D/2} M+ - e^{i pi D/2} M-), and AA* = Q Q* / (2 pi).
    The minus sign comes from the transform of the (.)_- kernel. Uses the
    complex exponential stems, so it does not share code with m_from_a.
    """
    S = exponent.d_decomposition
    G = matfun.primary_matfun(matfun.GammaShift(), S)
    Em = matfun.primary_matfun(matfun.ExpHalfPi(+1), S)
    Ep = matfun.primary_matfun(matfun.ExpHalfPi(-1), S)
    Q = G @ (Em @ M.M_plus - Ep @ M.M_minus)
    return Q @ Q.conj().T / (2 * np.pi)


def brownian_params(A, exponent=None):
    """(M, N) = (sqrt(pi/2) A1, -sqrt(2/pi) A2), valid only for H = I/2."""
    if exponent is not None and not exponent.is_half_identity():
        raise WrongExponent("Brownian-case parameters need H = I/2")
    return BrownianCaseParam(np.sqrt(np.pi / 2) * A.A1, -np.sqrt(2 / np.pi) * A.A2)


def a_from_brownian(B):
    return SpectralParam(np.sqrt(2 / np.pi) * B.M, -np.sqrt(np.pi / 2) * B.N)


@dataclass(frozen=True)
class ProperReport:
    certified: bool
    witness: float


class OfbmModel:
    """Validated OFBM model; immutable, classification cached at construction."""

    def __init__(self, exponent, param):
        self.exponent = exponent
        self.param = param
        n = exponent.n
        if isinstance(param, SpectralParam):
            A = SpectralParam(_real_square(param.A1, n, "parameterization.spectral.A1"),
                              _real_square(param.A2, n, "parameterization.spectral.A2"))
            self.param = A
        elif isinstance(param, TimeParam):
            if exponent.half_root:
                raise ValidationError(
                    "time-domain parameters need every Re(h) != 1/2", "parameterization.time"
                )
            self.param = TimeParam(
                _real_square(param.M_plus, n, "parameterization.time.M_plus"),
                _real_square(param.M_minus, n, "parameterization.time.M_minus"),
            )
            A = a_from_m(self.param, exponent)
        elif isinstance(param, BrownianCaseParam):
            if not exponent.is_half_identity():
                raise WrongExponent("Brownian-case parameters need H = I/2")
            self.param = BrownianCaseParam(
                _real_square(param.M, n, "parameterization.bm.M"),
                _real_square(param.N, n, "parameterization.bm.N"),
            )
            A = a_from_brownian(self.param)
        else:
            raise ValidationError(f"unknown parameterization {type(param).__name__}")
        self.spectral = A
        self.time = None
        if isinstance(self.param, TimeParam):
            self.time = self.param
        elif not exponent.half_root:
            self.time = m_from_a(A, exponent)
        self.brownian = None
        if isinstance(self.param, BrownianCaseParam):
            self.brownian = self.param
        elif exponent.is_half_identity():
            self.brownian = brownian_params(A, exponent)

        A1, A2 = A.A1, A.A2
        self.re_aa = A1 @ A1.T + A2 @ A2.T
        self.im_aa = A2 @ A1.T - A1 @ A2.T
        self.a_scale = max(1.0, np.abs(A1).max(), np.abs(A2).max())
        self._reversible = bool(_reversible(A1, A2))
        self._proper = _proper(self)
        self._obm = bool(exponent.is_half_identity() and self._reversible)
        # memo for derived numerical quantities (quadrature results); keyed by caller
        self._memo = {}

    @property
    def n(self):
        return self.exponent.n

    @property
    def aa_star(self):
        return self.re_aa + 1j * self.im_aa

    @property
    def flags(self):
        return {
            "proper_certified": self._proper.certified,
            "time_reversible": self._reversible,
            "is_obm": self._obm,
        }

    @classmethod
    def spectral_model(cls, exponent, A1, A2=None):
        A1 = np.atleast_2d(np.asarray(A1, dtype=float))
        A2 = np.zeros_like(A1) if A2 is None else np.atleast_2d(np.asarray(A2, dtype=float))
        return cls(exponent, SpectralParam(A1, A2))


def _reversible(A1, A2):
    if A1.shape[0] == 1:
        return True
    scale = max(1.0, np.abs(A1).max(), np.abs(A2).max()) ** 2
    return np.abs(A2 @ A1.T - A1 @ A2.T).max() <= CLASSIFY_TOL * scale


def _proper(model):
    R = model.re_aa
    witness = float(np.linalg.eigvalsh(R).min())
    tol = CLASSIFY_TOL * max(1.0, np.abs(R).max())
    certified = witness > tol
    if not certified and model.time is not None:
        Mp, Mm = model.time.M_plus, model.time.M_minus
        ok = True
        for X in (Mp + Mm, Mp - Mm):
            sv = np.linalg.svd(X, compute_uv=False)
            ok &= sv.min() > CLASSIFY_TOL * max(1.0, sv.max())
        certified = bool(ok)
    return ProperReport(bool(certified), witness)


def check_proper(model):
    """Sufficient-condition properness certificate; False is not a disproof."""
    return model._proper


def check_time_reversible(model):
    return model._reversible


def check_obm(model):
    return model._obm


def obm_root(model):
    """Principal square root W of A1 A1* + A2 A2* for an operator Brownian motion."""
    if not model._obm:
        raise NotObm("model is not an operator Brownian motion")
    w, V = np.linalg.eigh(model.re_aa)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
