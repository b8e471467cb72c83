"""Scale functions of the dual process and their periodic extensions.

W^(q) is defined through its Laplace transform 1/(psi(theta) - q) and
vanishes on the negative half-line.  With phase-type jumps the transform
is rational, so W^(q) is a finite sum of exponentials

    W^(q)(x) = sum_i A_i exp(theta_i x),   x >= 0,

over the simple roots theta_i of psi(theta) = q, with residues
A_i = 1/psi'(theta_i).  Every companion function used downstream
(Wbar, Z, Zbar, J, Z^{q,r}, H) is evaluated in closed form from the
same exponential sum; there is no quadrature in these paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .model import PhaseTypeLevyModel

__all__ = ["ScaleFunctionRep", "PeriodicScaleRep", "build_scale", "build_periodic"]

_SIMPLE_ROOT_REL_GAP = 1e-6


def _faddeev_leverrier(T: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Characteristic polynomial and adjugate expansion of (theta I - T).

    Returns ``(d, B)`` with det(theta I - T) = sum_k d[k] theta^{m-k}
    (d[0] = 1) and adj(theta I - T) = sum_{k=0}^{m-1} B[k] theta^{m-1-k}.
    """
    m = T.shape[0]
    d = np.zeros(m + 1)
    d[0] = 1.0
    B = [np.eye(m)]
    for k in range(1, m + 1):
        Ak = T @ B[k - 1]
        d[k] = -np.trace(Ak) / k
        if k < m:
            B.append(Ak + d[k] * np.eye(m))
    return d, B


def _psi_polynomial(model: PhaseTypeLevyModel, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (highest power first) of P and D with
    psi(theta) - q = P(theta) / D(theta), D(theta) = det(theta I - T)."""
    if model.sigma > 0.0:
        drift = np.array([0.5 * model.sigma**2, model.c, -(model.kappa + q)])
    else:
        drift = np.array([model.c, -(model.kappa + q)])
    if model.m == 0:
        # no jump block (kappa = 0): psi - q is already polynomial
        return drift, np.array([1.0])
    d, B = _faddeev_leverrier(model.T)
    t_vec = model.exit_vector
    n_coeffs = np.array([float(model.alpha @ Bk @ t_vec) for Bk in B])
    P = np.polyadd(np.polymul(drift, d), model.kappa * n_coeffs)
    return P, d


def _check_simple_roots(roots: np.ndarray, rel_gap: float = _SIMPLE_ROOT_REL_GAP) -> None:
    """Reject near-multiple roots; the residues 1/psi'(theta_i) blow up there."""
    n = roots.size
    if n < 2:
        return
    scale = max(np.max(np.abs(roots)), 1.0)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(roots[i] - roots[j]) < rel_gap * scale:
                raise NumericError(
                    "near-multiple roots of psi(theta) = q at "
                    f"theta = {roots[i]:.6g}; perturb q slightly"
                )


@dataclass(frozen=True, eq=False)
class ScaleFunctionRep:
    """Partial-fraction representation of W^(q) and its companions."""

    model: PhaseTypeLevyModel
    q: float
    roots: np.ndarray
    coeffs: np.ndarray
    phi_q: float

    def __post_init__(self):
        self.roots.setflags(write=False)
        self.coeffs.setflags(write=False)
        object.__setattr__(self, "_cache", {})

    @property
    def w_at_zero(self) -> float:
        """W^(q)(0+): equals 1/c for sigma = 0 and 0 for sigma > 0."""
        return float(np.sum(self.coeffs).real)

    @property
    def w_prime_at_zero(self) -> float:
        """W^(q)'(0+): equals 2/sigma^2 for sigma > 0."""
        return float(np.sum(self.coeffs * self.roots).real)

    def _expsum(self, x, weights):
        # negative arguments are clamped before exponentiation; the caller
        # masks them out, this only avoids spurious overflow
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        xp = np.maximum(x_arr, 0.0)
        vals = np.exp(np.multiply.outer(xp, self.roots)) @ weights
        return x_arr, vals.real

    def W(self, x):
        """W^(q)(x); zero on the negative half-line."""
        x_arr, vals = self._expsum(x, self.coeffs)
        out = np.where(x_arr >= 0.0, vals, 0.0)
        return out[0] if np.ndim(x) == 0 else out

    def W_prime(self, x):
        """dW^(q)/dx for x > 0, the right limit at 0, and 0 for x < 0."""
        x_arr, vals = self._expsum(x, self.coeffs * self.roots)
        out = np.where(x_arr >= 0.0, vals, 0.0)
        return out[0] if np.ndim(x) == 0 else out

    def Wbar(self, x):
        """Antiderivative int_0^x W^(q)(y) dy, zero for x <= 0."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        xp = np.maximum(x_arr, 0.0)
        e = np.exp(np.multiply.outer(xp, self.roots))
        vals = ((e - 1.0) @ (self.coeffs / self.roots)).real
        out = np.where(x_arr >= 0.0, vals, 0.0)
        return out[0] if np.ndim(x) == 0 else out

    def Z(self, x):
        """Z^(q)(x) = 1 + q Wbar^(q)(x); identically 1 for x <= 0."""
        return 1.0 + self.q * self.Wbar(x)

    def Zbar(self, x):
        """Antiderivative int_0^x Z^(q)(y) dy; equals x for x <= 0."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        xp = np.maximum(x_arr, 0.0)
        e = np.exp(np.multiply.outer(xp, self.roots))
        w = self.coeffs / self.roots**2
        vals = ((e - 1.0) @ w - xp * np.sum(self.coeffs / self.roots)).real
        out = x_arr + self.q * np.where(x_arr >= 0.0, vals, 0.0)
        return out[0] if np.ndim(x) == 0 else out

    def laplace_transform(self, theta):
        """Closed form sum_i A_i / (theta - theta_i) of int_0^inf e^{-theta x} W(x) dx."""
        theta_arr = np.atleast_1d(np.asarray(theta))
        vals = np.sum(self.coeffs / (theta_arr[..., None] - self.roots), axis=-1)
        out = vals.real if not np.iscomplexobj(np.asarray(theta)) else vals
        return out[0] if np.ndim(theta) == 0 else out


def build_scale(model: PhaseTypeLevyModel, q: float) -> ScaleFunctionRep:
    """Construct the partial-fraction representation of W^(q), q > 0.

    Clears denominators to the exact polynomial
    P(theta) = (psi(theta) - q) * det(theta I - T), finds all roots via
    the companion-matrix eigensolver, Newton-polishes them on P, and
    forms residues A_i = D(theta_i)/P'(theta_i).  Fails loudly on
    near-multiple roots and verifies the partial-fraction identity at
    five sample points above Phi(q).
    """
    q = float(q)
    if q <= 0.0:
        raise ValueError("build_scale requires q > 0")
    cached = model._cache.get(("scale", q))
    if cached is not None:
        return cached

    P, D = _psi_polynomial(model, q)
    roots = np.roots(P)

    if model.m > 0:
        eig = np.linalg.eigvals(model.T)
        scale = max(np.max(np.abs(roots)), np.max(np.abs(eig)), 1.0)
        for rt in roots:
            if np.min(np.abs(rt - eig)) < 1e-7 * scale:
                raise NumericError(
                    "a root of the cleared polynomial coincides with an eigenvalue "
                    "of T; the phase-type representation appears non-minimal"
                )

    dP = np.polyder(P)
    for _ in range(3):
        roots = roots - np.polyval(P, roots) / np.polyval(dP, roots)
    _check_simple_roots(roots)

    pos = roots[roots.real > 0.0]
    if pos.size != 1:
        raise NumericError(
            f"expected exactly one root with positive real part, found {pos.size}"
        )
    phi_q = float(pos[0].real)
    if abs(pos[0].imag) > 1e-9 * max(1.0, abs(phi_q)):
        raise NumericError(f"Phi(q) root has nonreal part {pos[0].imag:.3e}")
    phi_ref = model.phi(q)
    if abs(phi_q - phi_ref) > 1e-8 * (1.0 + abs(phi_ref)):
        raise NumericError(
            f"polynomial root {phi_q} disagrees with bracketed Phi(q) = {phi_ref}"
        )

    coeffs = np.polyval(D, roots) / np.polyval(dP, roots)
    rep = ScaleFunctionRep(model=model, q=q, roots=roots, coeffs=coeffs, phi_q=phi_q)

    for k, shift in enumerate((0.5, 1.0, 2.0, 4.0, 8.0)):
        theta = phi_q + shift * max(1.0, phi_q)
        lhs = rep.laplace_transform(theta)
        rhs = 1.0 / (model.laplace_exponent(theta) - q)
        if abs(lhs - rhs) > 1e-9 * abs(rhs):
            raise NumericError(
                f"partial-fraction identity violated at theta={theta}: {lhs} vs {rhs}"
            )

    model._cache[("scale", q)] = rep
    return rep


@dataclass(frozen=True, eq=False)
class PeriodicScaleRep:
    """Periodic-observation extension built on a ScaleFunctionRep.

    Holds Phi(q+r) and the closed-form coefficients of

        J^{q,r}(x) = e^{Phi(q+r) x} (1 - r int_0^x e^{-Phi(q+r) z} W^(q)(z) dz),

    which collapses, for x >= 0, to r * sum_i A_i e^{theta_i x} / (Phi(q+r) - theta_i)
    because sum_i A_i/(Phi(q+r) - theta_i) = 1/r.
    """

    base: ScaleFunctionRep
    r: float
    phi_qr: float
    jcoeffs: np.ndarray

    def __post_init__(self):
        self.jcoeffs.setflags(write=False)

    @property
    def q(self) -> float:
        return self.base.q

    def J(self, x):
        """J^{q,r}(x); equals e^{Phi(q+r) x} for x <= 0 and is positive everywhere."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        xp = np.maximum(x_arr, 0.0)
        above = (np.exp(np.multiply.outer(xp, self.base.roots)) @ self.jcoeffs).real
        below = np.exp(self.phi_qr * np.minimum(x_arr, 0.0))
        out = np.where(x_arr >= 0.0, above, below)
        return out[0] if np.ndim(x) == 0 else out

    def Zqr(self, x):
        """Z^{q,r}(x) = (r Z^(q)(x) + q J^{q,r}(x)) / (r + q)."""
        return (self.r * self.base.Z(x) + self.q * self.J(x)) / (self.r + self.q)

    def Zqr_prime(self, x):
        """d/dx Z^{q,r}(x) = q/(r+q) * Phi(q+r) * J^{q,r}(x)."""
        return self.q / (self.r + self.q) * self.phi_qr * self.J(x)

    def H(self, y):
        """H^{q,r}(y) = r/(r+q) * (Zbar^(q)(y) + psi'(0+)/q); affine for y <= 0."""
        drift = self.base.model.psi_prime_at_zero()
        return self.r / (self.r + self.q) * (self.base.Zbar(y) + drift / self.q)


def build_periodic(rep: ScaleFunctionRep, r: float) -> PeriodicScaleRep:
    """Attach the rate-r periodic extension to a scale representation."""
    r = float(r)
    if r <= 0.0:
        raise ValueError("build_periodic requires r > 0")
    cached = rep._cache.get(("periodic", r))
    if cached is not None:
        return cached
    phi_qr = rep.model.phi(rep.q + r)
    denom = phi_qr - rep.roots
    # partial fractions at Phi(q+r): sum_i A_i/(Phi(q+r) - theta_i) = 1/r
    total = np.sum(rep.coeffs / denom)
    if abs(total - 1.0 / r) > 1e-9 * (1.0 / r):
        raise NumericError(
            f"periodic extension inconsistency: sum A_i/(Phi-theta_i) = {total}, "
            f"expected {1.0 / r}"
        )
    prep = PeriodicScaleRep(base=rep, r=r, phi_qr=phi_qr, jcoeffs=r * rep.coeffs / denom)
    rep._cache[("periodic", r)] = prep
    return prep
