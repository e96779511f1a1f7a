"""Spectral transforms for rectangular Gaussian channel ensembles.

Conventions used throughout:

* Stieltjes transform of a spectral law rho:  g(z) = int rho(l)/(l - z) dl,
  so g(z) ~ -1/z as |z| -> infinity and imag(g) has the sign of imag(z)
  (Herglotz branch).
* q = U/A in (0, 1) is the aspect ratio of the U x A channel matrix whose
  entries are i.i.d. CN(0, 1/A); its Gram spectrum follows the
  Marchenko-Pastur law with ratio q and unit mean.
* The block symmetric channel augmentation (BSCA) of a U x A matrix H is the
  Hermitian (U+A) x (U+A) matrix [[0, H], [H^H, 0]]; its eigenvalues are the
  paired +/- singular values of H plus exactly A - U zeros.
* R-transforms follow the series convention R(w) = sum_{n>=0} kappa_{n+1} w^n
  (free cumulant generating function).  The auxiliary laws handled here are
  symmetric, so R is odd and identical under either Stieltjes sign convention.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "RootSelectionError",
    "default_epsilon",
    "mp_support",
    "mp_stieltjes",
    "bsca_support",
    "bsca_density",
    "bsca_stieltjes",
    "stieltjes_D_from_gram",
    "stieltjes_gram_from_D",
    "stieltjes_B_from_D",
    "empirical_stieltjes",
    "m_inverse_gram",
    "m_inverse_D",
    "s_transform_gram",
    "s_transform_D",
    "s_transform_bsca",
    "r_transform_aux",
    "r_transform_noisy_aux",
    "noisy_gram_stieltjes",
    "noisy_gram_stieltjes_poly",
    "noisy_gram_stieltjes_fixed_point",
    "free_cumulants",
    "free_cumulant3_printed",
    "moments_from_cumulants",
    "noisy_gram_cumulants_theory",
]


class RootSelectionError(RuntimeError):
    """No candidate root satisfied the branch condition.

    Carries every candidate considered in ``candidates``.
    """

    def __init__(self, message: str, candidates):
        super().__init__(message)
        self.candidates = list(candidates)


def default_epsilon(dim: int) -> float:
    """Default imaginary offset for real-axis evaluation: dim**-0.5."""
    if dim <= 0:
        raise ValueError("dimension must be positive")
    return float(dim) ** -0.5


def _check_q(q: float) -> float:
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValueError(f"aspect ratio q must lie in (0, 1), got {q}")
    return q


def _offaxis(z, eps):
    """Shift real z into the complex plane by +i*eps; reject bare real z."""
    z = np.asarray(z, dtype=complex)
    on_axis = z.imag == 0.0
    if np.any(on_axis):
        if eps is None:
            raise ValueError(
                "real-axis evaluation requires an explicit eps "
                "(imaginary offset for the boundary limit)"
            )
        z = np.where(on_axis, z.real + 1j * float(eps), z)
    return z


def mp_support(q: float) -> tuple[float, float]:
    """Support edges ((1-sqrt(q))^2, (1+sqrt(q))^2) of the unit-mean MP law."""
    q = _check_q(q)
    r = np.sqrt(q)
    return ((1.0 - r) ** 2, (1.0 + r) ** 2)


def mp_stieltjes(z, q: float, eps: float | None = None):
    """Stieltjes transform of the Marchenko-Pastur law with ratio q.

    Solves q*z*g^2 + (z + q - 1)*g + 1 = 0 and selects the root on the
    Herglotz branch (sign(imag g) = sign(imag z)), falling back to the
    -1/z-asymptote criterion when the sign test is ambiguous.  The closed
    form with a fixed square-root branch picks the wrong root on parts of
    the plane, so the selection is done pointwise.

    Parameters
    ----------
    z : complex or array_like
        Evaluation point(s).  Real values are only accepted together with
        an explicit ``eps`` and are interpreted as z + i*eps.
    q : float
        Aspect ratio in (0, 1).
    eps : float, optional
        Imaginary offset for real-axis boundary evaluation.

    Returns
    -------
    complex or ndarray of complex
    """
    q = _check_q(q)
    z = _offaxis(z, eps)
    disc = np.sqrt(z * z - 2.0 * (q + 1.0) * z + (q - 1.0) ** 2)
    base = 1.0 - q - z
    # evaluate the numerically stable root first, recover the other from the
    # product of roots 1/(q z)
    n_plus = base + disc
    n_minus = base - disc
    big = np.where(np.abs(n_plus) >= np.abs(n_minus), n_plus, n_minus)
    g_stable = big / (2.0 * q * z)
    g_other = 1.0 / (q * z * g_stable)
    sgn = np.sign(z.imag)
    herg_stable = sgn * g_stable.imag > 0
    herg_other = sgn * g_other.imag > 0
    # asymptote tie-break: the physical root satisfies g ~ -1/z
    prefer_stable = np.abs(g_stable * z + 1.0) <= np.abs(g_other * z + 1.0)
    pick_stable = np.where(
        herg_stable & ~herg_other,
        True,
        np.where(herg_other & ~herg_stable, False, prefer_stable),
    )
    out = np.where(pick_stable, g_stable, g_other)
    if out.ndim == 0:
        return complex(out)
    return out


def bsca_support(q: float) -> tuple[float, float, float]:
    """Support (a, b) of the BSCA bulk and the mass of the zero atom.

    Returns (1 - sqrt(q), 1 + sqrt(q), (1 - q)/(1 + q)).  The continuous
    part of the spectrum lives on a <= |x| <= b.
    """
    q = _check_q(q)
    r = np.sqrt(q)
    return (1.0 - r, 1.0 + r, (1.0 - q) / (1.0 + q))


def bsca_density(x, q: float):
    """Continuous part of the limiting BSCA eigenvalue density.

    rho(x) = sqrt((b^2 - x^2)(x^2 - a^2)) / ((q + 1) * pi * |x|) on
    a <= |x| <= b and zero elsewhere; the zero atom of mass (1-q)/(1+q)
    is reported separately by :func:`bsca_support`.
    """
    a, b, _ = bsca_support(q)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    inside = (ax > a) & (ax < b)
    out = np.zeros_like(ax)
    xs = ax[inside]
    out[inside] = np.sqrt((b * b - xs * xs) * (xs * xs - a * a)) / (
        (q + 1.0) * np.pi * xs
    )
    if out.ndim == 0:
        return float(out)
    return out


def stieltjes_D_from_gram(g_gram, z, q: float):
    """Map a Gram-spectrum Stieltjes value to the two-block square spectrum.

    D = diag(H H^H, H^H H) dilutes the Gram law with the co-Gram copy and
    the zero atom:  g_D(z) = (2q/(q+1)) g_gram(z) + ((q-1)/(q+1))/z.
    Exact for matched empirical spectra, not only in the limit.
    """
    q = _check_q(q)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("z = 0 is a pole of the dilution identity")
    out = (2.0 * q / (q + 1.0)) * np.asarray(g_gram, dtype=complex) + (
        (q - 1.0) / (q + 1.0)
    ) / z
    if out.ndim == 0:
        return complex(out)
    return out


def stieltjes_gram_from_D(g_D, z, q: float):
    """Inverse of :func:`stieltjes_D_from_gram`."""
    q = _check_q(q)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("z = 0 is a pole of the dilution identity")
    out = ((q + 1.0) / (2.0 * q)) * np.asarray(g_D, dtype=complex) - (
        (q - 1.0) / (2.0 * q)
    ) / z
    if out.ndim == 0:
        return complex(out)
    return out


def stieltjes_B_from_D(g_D_at_z2, z):
    """BSCA Stieltjes from the squared-spectrum value: g_B(z) = z * g_D(z^2).

    ``g_D_at_z2`` must already be evaluated at z**2.
    """
    out = np.asarray(z, dtype=complex) * np.asarray(g_D_at_z2, dtype=complex)
    if out.ndim == 0:
        return complex(out)
    return out


def bsca_stieltjes(z, q: float, eps: float | None = None):
    """Analytic BSCA Stieltjes transform via the MP law and both dilutions."""
    z = _offaxis(z, eps)
    z2 = z * z
    g_gram = mp_stieltjes(z2, q, eps=None if np.all(z2.imag != 0) else 1e-12)
    return stieltjes_B_from_D(stieltjes_D_from_gram(g_gram, z2, q), z)


def empirical_stieltjes(eigs, z, eps: float | None = None):
    """Empirical Stieltjes transform mean(1/(eigs - z)) of a sample spectrum."""
    eigs = np.asarray(eigs, dtype=float).ravel()
    if eigs.size == 0:
        raise ValueError("empty eigenvalue list")
    z = _offaxis(z, eps)
    if z.ndim == 0:
        return complex(np.mean(1.0 / (eigs - complex(z))))
    return np.array([complex(np.mean(1.0 / (eigs - zz))) for zz in z.ravel()]).reshape(
        z.shape
    )


# ---------------------------------------------------------------------------
# S-transform chain


def m_inverse_gram(y, q: float):
    """Functional inverse of the MP moment transform: M^-1(y) = y/((1+y)(1+q y))."""
    q = _check_q(q)
    y = np.asarray(y, dtype=float) if np.isrealobj(y) else np.asarray(y, dtype=complex)
    return y / ((1.0 + y) * (1.0 + q * y))


def m_inverse_D(y, q: float):
    """Inverse moment transform of the diluted two-block square spectrum.

    M_D(w) = (2q/(1+q)) M_gram(w), hence M_D^-1(y) = M_gram^-1((1+q)/(2q) * y).
    """
    q = _check_q(q)
    return m_inverse_gram((1.0 + q) / (2.0 * q) * np.asarray(y), q)


def s_transform_gram(y, q: float):
    """S-transform of the unit-mean MP law: S(y) = 1/(1 + q y) (free Poisson)."""
    q = _check_q(q)
    return 1.0 / (1.0 + q * np.asarray(y))


def s_transform_D(y, q: float):
    """S-transform of the two-block square spectrum, S(y) = ((1+y)/y) M_D^-1(y).

    Admissible real arguments are (-q, 0) union (0, inf); S_D(0+) equals
    (1+q)/(2q), the reciprocal of the first moment.
    """
    q = _check_q(q)
    y = np.asarray(y, dtype=float)
    if np.any(y == 0) or np.any(y <= -q):
        raise ValueError("admissible arguments are (-q, 0) union (0, inf)")
    out = (1.0 + y) / y * m_inverse_D(y, q)
    if out.ndim == 0:
        return float(out)
    return out


def s_transform_bsca(y, q: float):
    """Square-root S-transform of the symmetric BSCA law.

    Defined through S_B(y)^2 = ((1+y)/y) * S_D(y), i.e.
    S_B(y) = ((1+y)/y) * sqrt(M_D^-1(y)).  Real-valued only where the
    radicand M_D^-1(y) is nonnegative (y > 0); elsewhere the squared
    identity still holds but S_B is imaginary, which is rejected here.
    """
    q = _check_q(q)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("inadmissible argument: radicand is negative for y <= 0")
    rad = m_inverse_D(y, q)
    out = (1.0 + y) / y * np.sqrt(rad)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# R-transform machinery for the symmetrized singular-value (auxiliary) laws


def r_transform_aux(w, q: float, variance: float = 1.0):
    """R-transform of the symmetrized singular-value law of a Gaussian U x A
    matrix with per-entry variance ``variance``/A.

    R(w) = (-1 + q v w^2 + sqrt(1 + v w^2 (4 - 2q) + q^2 v^2 w^4)) / (2 w)
    with v = variance.  Odd in w; Taylor series R = v w + v^2 (q - 1) w^3 + ...
    so kappa_2 = v and kappa_4 = v^2 (q - 1).
    """
    q = _check_q(q)
    v = float(variance)
    if v < 0:
        raise ValueError("variance must be nonnegative")
    w = np.asarray(w, dtype=complex) if np.iscomplexobj(w) else np.asarray(
        w, dtype=float
    )
    if np.any(w == 0):
        raise ValueError("w = 0 is a pole of the R-transform expression")
    w2 = w * w
    rad = 1.0 + v * w2 * (4.0 - 2.0 * q) + (q * v * w2) ** 2
    out = (-1.0 + q * v * w2 + np.sqrt(rad)) / (2.0 * w)
    if out.ndim == 0:
        return out.item()
    return out


def r_transform_noisy_aux(w, q: float, alpha: float):
    """R-transform of the additive-noise auxiliary law.

    Sum of the clean auxiliary R-transform and the alpha-scaled noise copy:
    R(w) = R_aux(w; v=1) + R_aux(w; v=alpha^2)
         = (-2 + q (1 + alpha^2) w^2 + rad_1 + rad_2) / (2 w).
    Reduces exactly to the clean form at alpha = 0 and is additive by
    construction.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return r_transform_aux(w, q, 1.0) + r_transform_aux(w, q, alpha * alpha)


# ---------------------------------------------------------------------------
# Noisy Gram spectrum


def noisy_gram_stieltjes(z, q: float, alpha: float, eps: float | None = None):
    """Stieltjes transform of the Gram spectrum of H + alpha*E.

    For i.i.d. Gaussian H and E (entry variance 1/A each), H + alpha*E is
    itself Gaussian with entry variance (1 + alpha^2)/A, so the limiting
    Gram law is the (1 + alpha^2)-scaled MP law and
    g(z) = g_MP(z / s) / s with s = 1 + alpha^2.  This closed form is exact;
    the radical-relation evaluators below are retained for auditing.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    s = 1.0 + alpha * alpha
    z = _offaxis(z, eps)
    out = mp_stieltjes(z / s, q) / s
    sgn = np.sign(np.asarray(z).imag)
    if np.any(sgn * np.asarray(out).imag <= 0):
        raise RootSelectionError(
            "selected value violates the Herglotz branch condition",
            np.atleast_1d(out).tolist(),
        )
    return out


def _polymul(a, b):
    return np.convolve(a, b)


def _polyadd(a, b):
    n = max(len(a), len(b))
    out = np.zeros(n, dtype=complex)
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def noisy_gram_stieltjes_poly(
    z,
    q: float,
    alpha: float,
    eps: float | None = None,
    return_candidates: bool = False,
):
    """Audit evaluator: root of the radical addition-law relation.

    Clears the two square roots of the relation
    -2 G zeta + q (1 + alpha^2) G^2 zeta + rad_1(G) + rad_2(G) = 0 (with
    zeta the Gram-domain point and G the resolvent-convention transform)
    into a degree-8 polynomial, takes companion-matrix roots, keeps the
    ones that satisfy the original un-squared relation, and selects the
    physical branch.  Returned in the Herglotz sign convention of
    :func:`mp_stieltjes`.

    At alpha = 0 this agrees with :func:`mp_stieltjes`; at alpha > 0 it
    deviates from the exact scaled-MP law of :func:`noisy_gram_stieltjes`
    because the underlying addition of undiluted symmetric laws is only an
    approximation for rectangular augmentations.  The selection test in the
    test suite documents both behaviours.
    """
    q = _check_q(q)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    a2 = alpha * alpha
    zc = complex(np.asarray(_offaxis(z, eps)))
    # ascending-power coefficient arrays in G
    lin = np.array([0.0, -2.0 * zc, q * (1.0 + a2) * zc], dtype=complex)
    rad1 = np.array(
        [1.0, 0.0, zc * (4.0 - 2.0 * q), 0.0, (q * zc) ** 2], dtype=complex
    )
    rad2 = np.array(
        [1.0, 0.0, a2 * zc * (4.0 - 2.0 * q), 0.0, (q * a2 * zc) ** 2],
        dtype=complex,
    )
    # lin + sqrt(rad1) + sqrt(rad2) = 0  =>  (lin^2 - rad1 - rad2)^2 = 4 rad1 rad2
    t = _polyadd(_polymul(lin, lin), -_polyadd(rad1, rad2))
    poly = _polyadd(_polymul(t, t), -4.0 * _polymul(rad1, rad2))
    roots = np.roots(poly[::-1])

    def _residual(G):
        lv = np.polyval(lin[::-1], G)
        s1 = np.sqrt(np.polyval(rad1[::-1], G))
        s2 = np.sqrt(np.polyval(rad2[::-1], G))
        return min(
            abs(lv + e1 * s1 + e2 * s2) for e1 in (1.0, -1.0) for e2 in (1.0, -1.0)
        )

    scale = max(1.0, abs(zc))
    verified = [G for G in roots if _residual(G) < 1e-7 * scale]
    if not verified:
        raise RootSelectionError(
            "no polynomial root satisfies the radical relation", roots.tolist()
        )
    sgn = 1.0 if zc.imag > 0 else -1.0
    # resolvent convention is anti-Herglotz; prefer the G ~ 1/z asymptote
    branch = [G for G in verified if sgn * G.imag < 0] or verified
    G_sel = min(branch, key=lambda G: abs(G * zc - 1.0))
    # companion-matrix roots carry ~1e-8 error; polish with Newton steps
    dpoly = poly[1:] * np.arange(1, len(poly), dtype=float)
    for _ in range(3):
        dv = np.polyval(dpoly[::-1], G_sel)
        if dv == 0:
            break
        G_sel = G_sel - np.polyval(poly[::-1], G_sel) / dv
    g = -G_sel
    if return_candidates:
        return g, [-G for G in verified]
    return g


class FixedPointResult:
    """Value plus convergence metadata of a damped fixed-point solve."""

    __slots__ = ("value", "converged", "iterations")

    def __init__(self, value, converged, iterations):
        self.value = value
        self.converged = bool(converged)
        self.iterations = int(iterations)

    def __repr__(self):
        return (
            f"FixedPointResult(value={self.value!r}, converged={self.converged}, "
            f"iterations={self.iterations})"
        )


def noisy_gram_stieltjes_fixed_point(
    z,
    q: float,
    alpha: float,
    eps: float | None = None,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> FixedPointResult:
    """Audit evaluator: additive R-law fixed point for the noisy Gram law.

    Works in the symmetrized singular-value domain: with zb = sqrt(z)
    (upper-half branch) the subordination relation
    w = 1/(zb - R(w)), R = :func:`r_transform_noisy_aux`, is iterated with
    damping; the Gram-domain value is recovered through
    g(z) = -w / zb.  Same law as :func:`noisy_gram_stieltjes_poly`, solved
    by a different route; kept for auditing.
    """
    q = _check_q(q)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    zc = complex(np.asarray(_offaxis(z, eps)))
    flip = zc.imag < 0
    if flip:
        zc = zc.conjugate()
    zb = np.sqrt(zc)
    w = 1.0 / zb
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        target = 1.0 / (zb - r_transform_noisy_aux(w, q, alpha))
        delta = abs(target - w)
        w = damping * target + (1.0 - damping) * w
        if delta < tol * max(1.0, abs(w)):
            converged = True
            break
    g = -w / zb
    if flip:
        g = g.conjugate()
    return FixedPointResult(g, converged, it)


# ---------------------------------------------------------------------------
# Moments and free cumulants (degree 3)


def free_cumulants(m) -> np.ndarray:
    """First three free cumulants from the first three moments.

    kappa_1 = m1, kappa_2 = m2 - m1^2, kappa_3 = m3 - 3 m1 m2 + 2 m1^3.
    """
    m = np.asarray(m, dtype=float).ravel()
    if m.size < 3:
        raise ValueError("need the first three moments")
    m1, m2, m3 = m[:3]
    return np.array([m1, m2 - m1 ** 2, m3 - 3.0 * m1 * m2 + 2.0 * m1 ** 3])


def free_cumulant3_printed(m) -> float:
    """Quadratic-in-m1 variant of the third-cumulant formula.

    Evaluates m3 - 3 m1 m2 + 2 m1^2; agrees with free_cumulants()[2] only
    when m1 = 1.  Kept as a diagnostic of the corrected cubic term.
    """
    m = np.asarray(m, dtype=float).ravel()
    m1, m2, m3 = m[:3]
    return float(m3 - 3.0 * m1 * m2 + 2.0 * m1 ** 2)


def moments_from_cumulants(k) -> np.ndarray:
    """Inverse of :func:`free_cumulants` at degree 3."""
    k = np.asarray(k, dtype=float).ravel()
    if k.size < 3:
        raise ValueError("need the first three cumulants")
    k1, k2, k3 = k[:3]
    m1 = k1
    m2 = k2 + k1 ** 2
    m3 = k3 + 3.0 * k1 * k2 + k1 ** 3
    return np.array([m1, m2, m3])


def noisy_gram_cumulants_theory(
    eta: float, q: float, mode: str = "gaussian_equivalent", c: float = 1.0
) -> np.ndarray:
    """Theoretical first three free cumulants of the noisy Gram spectrum.

    Two published functional forms are supported:

    * ``gaussian_equivalent``: the corrupted matrix is a variance-rescaled
      Gaussian matrix, exact for Gaussian entries: with
      s = 1 + c*eta/(1 - eta) the cumulants are (s, q s^2, q^2 s^3).
    * ``printed``: the form carrying explicit signal/noise cross terms,
      kappa_1 = 1/(1-eta),
      kappa_2 = (2(1-eta) eta (1-q) + q)/(1-eta)^2,
      kappa_3 = q (3(1-eta) eta (1-q) + q)/(1-eta)^3.
      Retained verbatim for comparison; the Monte-Carlo cumulant oracle in
      the test suite arbitrates which form matches sampled spectra.

    Both reduce to the clean MP cumulants (1, q, q^2) at eta = 0.
    """
    q = _check_q(q)
    eta = float(eta)
    if not 0.0 <= eta < 1.0:
        raise ValueError("eta must lie in [0, 1)")
    if mode == "gaussian_equivalent":
        s = 1.0 + float(c) * eta / (1.0 - eta)
        return np.array([s, q * s ** 2, q ** 2 * s ** 3])
    if mode == "printed":
        d = 1.0 - eta
        k1 = 1.0 / d
        k2 = (2.0 * d * eta * (1.0 - q) + q) / d ** 2
        k3 = q * (3.0 * d * eta * (1.0 - q) + q) / d ** 3
        return np.array([k1, k2, k3])
    raise ValueError(f"unknown mode {mode!r}")
