"""Spectrally positive Levy processes with phase-type jumps.

The surplus process is

    X(t) = -c*t + sigma*B(t) + sum of upward jumps,

where jumps arrive according to a Poisson process with rate ``kappa`` and
are i.i.d. phase-type distributed with parameters ``(alpha, T)``.  All
analytic characteristics are expressed through the Laplace exponent of
the dual (spectrally negative) process -X,

    psi(theta) = c*theta + sigma^2/2 * theta^2
                 + kappa * (alpha (theta I - T)^{-1} t - 1),

which is convex with psi(0) = 0, and E[X(1)] = -psi'(0+).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .errors import NumericError

__all__ = ["PhaseTypeLevyModel", "folded_normal_phase_fit"]

_VALIDATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PhaseTypeLevyModel:
    """Spectrally positive Levy model with finite-activity phase-type jumps.

    Parameters
    ----------
    c : float
        Drift rate per unit time.  Must be positive when ``sigma`` is zero
        so that paths are not monotone.
    sigma : float
        Brownian volatility, nonnegative.
    kappa : float
        Jump arrival rate, nonnegative.  With ``kappa == 0`` the jump
        block is ignored and may be omitted.
    alpha : ndarray or None
        Initial distribution over the ``m`` transient phases; entries are
        nonnegative and sum to one.
    T : ndarray or None
        ``m x m`` sub-generator: nonnegative off-diagonals, strictly
        negative diagonal, row sums <= 0, all eigenvalues with strictly
        negative real part.  The exit vector is ``t = -T 1``.
    """

    c: float
    sigma: float = 0.0
    kappa: float = 0.0
    alpha: np.ndarray | None = None
    T: np.ndarray | None = None

    def __post_init__(self):
        c = float(self.c)
        sigma = float(self.sigma)
        kappa = float(self.kappa)
        if sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if kappa < 0.0:
            raise ValueError("kappa must be nonnegative")
        if sigma == 0.0 and c <= 0.0:
            raise ValueError("monotone paths: need c > 0 when sigma = 0")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "kappa", kappa)

        if kappa > 0.0 and (self.alpha is None or self.T is None):
            raise ValueError("kappa > 0 requires a jump law (alpha, T)")

        if self.alpha is not None or self.T is not None:
            if self.alpha is None or self.T is None:
                raise ValueError("alpha and T must be supplied together")
            alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
            T = np.asarray(self.T, dtype=float)
            m = alpha.size
            if m == 0:
                raise ValueError("alpha must be nonempty")
            if T.shape != (m, m):
                raise ValueError(f"T must be {m}x{m}, got {T.shape}")
            if np.any(alpha < -_VALIDATION_TOL):
                raise ValueError("alpha entries must be nonnegative")
            if abs(alpha.sum() - 1.0) > 1e-8:
                raise ValueError("alpha entries must sum to 1")
            if np.any(np.diag(T) >= 0.0):
                raise ValueError("T must have strictly negative diagonal")
            off = T - np.diag(np.diag(T))
            if np.any(off < -_VALIDATION_TOL):
                raise ValueError("T must have nonnegative off-diagonals")
            rowsums = T.sum(axis=1)
            if np.any(rowsums > _VALIDATION_TOL):
                raise ValueError("T row sums must be <= 0")
            eig = np.linalg.eigvals(T)
            if np.max(eig.real) >= -1e-12:
                raise ValueError("all eigenvalues of T must have negative real part")
            alpha = alpha.copy()
            T = T.copy()
            alpha.setflags(write=False)
            T.setflags(write=False)
            object.__setattr__(self, "alpha", alpha)
            object.__setattr__(self, "T", T)
            # density clamp threshold: beyond this the phase-type tail
            # underflows double precision anyway
            rate = -float(np.max(eig.real))
            object.__setattr__(self, "_z_clamp", 700.0 / rate)
        else:
            object.__setattr__(self, "_z_clamp", math.inf)
        object.__setattr__(self, "_cache", {})

    # ------------------------------------------------------------------
    # structural properties
    # ------------------------------------------------------------------

    @property
    def m(self) -> int:
        """Number of transient phases (0 when there is no jump block)."""
        return 0 if self.alpha is None else self.alpha.size

    @property
    def exit_vector(self) -> np.ndarray:
        """Exit rate vector t = -T 1 (empty when there is no jump block)."""
        if self.T is None:
            return np.zeros(0)
        return -self.T.sum(axis=1)

    @property
    def is_bounded_variation(self) -> bool:
        return self.sigma == 0.0

    @property
    def mean_jump(self) -> float:
        """Mean jump size -alpha T^{-1} 1, or 0 without a jump block."""
        if self.m == 0:
            return 0.0
        ones = np.ones(self.m)
        return float(-self.alpha @ np.linalg.solve(self.T, ones))

    @property
    def jump_second_moment(self) -> float:
        """Second moment 2 alpha T^{-2} 1 of the jump law."""
        if self.m == 0:
            return 0.0
        ones = np.ones(self.m)
        return float(2.0 * self.alpha @ np.linalg.solve(self.T, np.linalg.solve(self.T, ones)))

    # ------------------------------------------------------------------
    # Laplace exponent and friends
    # ------------------------------------------------------------------

    def laplace_exponent(self, theta):
        """Evaluate psi(theta); accepts scalars or arrays, real or complex.

        Raises NumericError if theta coincides with an eigenvalue of T,
        where the resolvent form is undefined.
        """
        theta_arr = np.atleast_1d(np.asarray(theta))
        out = self.c * theta_arr + 0.5 * self.sigma**2 * theta_arr**2
        if self.kappa > 0.0:
            eye = np.eye(self.m)
            t_vec = self.exit_vector
            jump = np.empty(theta_arr.shape, dtype=out.dtype if np.iscomplexobj(theta_arr) else complex)
            for i, th in np.ndenumerate(theta_arr):
                try:
                    res = np.linalg.solve(th * eye - self.T, t_vec)
                except np.linalg.LinAlgError as exc:
                    raise NumericError(f"resolvent singular at theta={th}") from exc
                jump[i] = self.alpha @ res
            out = out + self.kappa * (jump - 1.0)
        if not np.iscomplexobj(np.asarray(theta)):
            out = out.real
        if np.isscalar(theta) or np.asarray(theta).ndim == 0:
            return out[0]
        return out

    def psi_prime(self, theta):
        """Derivative psi'(theta) = c + sigma^2 theta - kappa alpha (theta I - T)^{-2} t."""
        theta_arr = np.atleast_1d(np.asarray(theta))
        out = self.c + self.sigma**2 * theta_arr
        if self.kappa > 0.0:
            eye = np.eye(self.m)
            t_vec = self.exit_vector
            jump = np.empty(theta_arr.shape, dtype=complex)
            for i, th in np.ndenumerate(theta_arr):
                mat = th * eye - self.T
                try:
                    res = np.linalg.solve(mat, np.linalg.solve(mat, t_vec))
                except np.linalg.LinAlgError as exc:
                    raise NumericError(f"resolvent singular at theta={th}") from exc
                jump[i] = self.alpha @ res
            out = out - self.kappa * jump
        if not np.iscomplexobj(np.asarray(theta)):
            out = out.real
        if np.isscalar(theta) or np.asarray(theta).ndim == 0:
            return out[0]
        return out

    def psi_prime_at_zero(self) -> float:
        """Right derivative psi'(0+) = c - kappa * mean_jump = -E[X(1)]."""
        return self.c - self.kappa * self.mean_jump

    def phi(self, q: float) -> float:
        """The unique positive root Phi(q) of psi(lambda) = q, for q > 0.

        Convexity of psi with psi(0) = 0 guarantees a bracket; bisection
        is followed by a Newton polish.  The residual |psi(Phi(q)) - q|
        is required to be <= 1e-12 * max(1, q).
        """
        q = float(q)
        if q <= 0.0:
            raise ValueError("phi(q) requires q > 0")
        cached = self._cache.get(("phi", q))
        if cached is not None:
            return cached

        def g(th):
            return self.laplace_exponent(th) - q

        hi = 1.0
        for _ in range(200):
            if g(hi) > 0.0:
                break
            hi *= 2.0
        else:
            raise NumericError(f"phi bracket not found: psi({hi}) - q = {g(hi)}")
        root = brentq(g, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
        for _ in range(3):
            dpsi = self.psi_prime(root)
            if dpsi <= 0.0:
                break
            root -= (self.laplace_exponent(root) - q) / dpsi
        resid = abs(self.laplace_exponent(root) - q)
        if resid > 1e-12 * max(1.0, q):
            raise NumericError(
                f"phi({q}) residual {resid:.3e} exceeds tolerance; bracket [0, {hi}]"
            )
        root = float(root)
        self._cache[("phi", q)] = root
        return root

    # ------------------------------------------------------------------
    # jump law
    # ------------------------------------------------------------------

    def _spectral_mix(self):
        """Eigen-decomposition shortcut (lambdas, left, right) with
        alpha e^{Tz} v = sum_j left_j e^{lambda_j z} right_j(v); None when T
        has (near-)repeated eigenvalues and the expm path must be used."""
        if "spectral" in self._cache:
            return self._cache["spectral"]
        lam, V = np.linalg.eig(self.T)
        mix = None
        gaps = np.abs(lam[:, None] - lam[None, :]) + np.eye(self.m)
        if np.min(gaps) > 1e-8 * max(1.0, np.max(np.abs(lam))):
            Vinv = np.linalg.inv(V)
            mix = (lam, self.alpha @ V, Vinv)
        self._cache["spectral"] = mix
        return mix

    def jump_density(self, z):
        """Phase-type density f_Z(z) = alpha e^{Tz} t for z > 0 and 0 elsewhere.

        Arguments beyond the clamp threshold (where the tail underflows
        double precision) return exactly 0.
        """
        if self.m == 0:
            raise NumericError("model has no jump block")
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        t_vec = self.exit_vector
        mix = self._spectral_mix()
        if mix is not None:
            lam, left, Vinv = mix
            w = left * (Vinv @ t_vec)
            zc = np.clip(z_arr, 0.0, self._z_clamp)
            out = (np.exp(np.multiply.outer(zc, lam)) @ w).real
            out[(z_arr <= 0.0) | (z_arr > self._z_clamp)] = 0.0
        else:
            out = np.zeros(z_arr.shape)
            for i, zz in np.ndenumerate(z_arr):
                if zz <= 0.0 or zz > self._z_clamp:
                    continue
                out[i] = float(self.alpha @ expm(self.T * zz) @ t_vec)
        out = np.maximum(out, 0.0)
        if np.isscalar(z) or np.asarray(z).ndim == 0:
            return out[0]
        return out

    def jump_tail_mass(self, z: float) -> float:
        """Survival function P(Z > z) = alpha e^{Tz} 1."""
        if self.m == 0:
            raise NumericError("model has no jump block")
        if z <= 0.0:
            return 1.0
        if z > self._z_clamp:
            return 0.0
        return float(self.alpha @ expm(self.T * z) @ np.ones(self.m))

    def jump_tail_mean(self, z: float) -> float:
        """Partial mean int_z^inf u f_Z(u) du = alpha e^{Tz} (T^{-2} - z T^{-1}) t."""
        if self.m == 0:
            raise NumericError("model has no jump block")
        t_vec = self.exit_vector
        if z <= 0.0:
            return self.mean_jump
        if z > self._z_clamp:
            return 0.0
        inv = np.linalg.inv(self.T)
        mat = inv @ inv - z * inv
        return float(self.alpha @ expm(self.T * z) @ mat @ t_vec)

    def jump_tail_cut(self, eps: float = 1e-12) -> float:
        """Smallest z (up to bracketing) with tail mass <= eps."""
        if self.m == 0:
            return 0.0
        key = ("tail_cut", eps)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        hi = 1.0
        while self.jump_tail_mass(hi) > eps:
            hi *= 2.0
            if hi > self._z_clamp:
                hi = self._z_clamp
                break
        self._cache[key] = hi
        return hi


def folded_normal_phase_fit() -> tuple[np.ndarray, np.ndarray]:
    """Two-phase hypoexponential block matching |N(0,1)| in two moments.

    Returns ``(alpha, T)`` of a phase-type law with mean sqrt(2/pi) and
    second moment 1, the first two moments of the absolute value of a
    standard normal.  This is a moment-matched substitute, not an exact
    distributional fit; higher moments differ from the folded normal.
    """
    m1 = math.sqrt(2.0 / math.pi)
    # product and sum of the two stage means x1, x2:
    #   x1 + x2 = m1,     2 * (x1^2 + x1 x2 + x2^2) = E[Z^2] = 1
    prod = m1 * m1 - 0.5
    disc = math.sqrt(m1 * m1 - 4.0 * prod)
    x1 = 0.5 * (m1 + disc)
    x2 = 0.5 * (m1 - disc)
    lam1 = 1.0 / x1
    lam2 = 1.0 / x2
    alpha = np.array([1.0, 0.0])
    T = np.array([[-lam1, lam1], [0.0, -lam2]])
    return alpha, T
