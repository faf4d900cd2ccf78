"""Discrete per-mode operators: Delta_k, derivatives, Poisson solves, the
inviscid-damping singular integral operator and its derivative commutator.

Plane profiles live on a periodicized Fourier grid and use FFT
diagonalization; half-plane and channel profiles use a Dirichlet sine basis
assembled as dense matrices.  The singular integral operator is discretized
by principal-value quadrature: symmetric excision of the diagonal cell plus
an analytic correction built from the kernel's diagonal value and the mean
of its one-sided diagonal derivatives.  On the plane an exact alternative
path applies the Fourier multiplier arctan(eta/k).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.fft import fft, ifft, fftfreq

from .domains import Basis, DomainKind, DomainSpec, YGrid, GreenKernel, green_kernel


@dataclass(frozen=True)
class DiscreteOperator:
    """A linear map on complex y-profiles together with its L2 adjoint."""

    domain_kind: DomainKind
    k: float
    action: Callable[[np.ndarray], np.ndarray]
    adjoint_action: Callable[[np.ndarray], np.ndarray]

    @staticmethod
    def from_matrix(domain_kind: DomainKind, k: float, matrix: np.ndarray,
                    grid: YGrid) -> "DiscreteOperator":
        """Wrap a dense matrix; the adjoint is taken in the weighted L2 sense."""
        w = grid.weights
        adj = (matrix.conj().T * w[None, :]) / w[:, None]
        return DiscreteOperator(domain_kind, k,
                                lambda f, M=matrix: M @ f,
                                lambda f, M=adj: M @ f)


@dataclass(frozen=True)
class NormEstimate:
    value: float
    iterations: int
    converged: bool


def estimate_operator_norm(op: DiscreteOperator, grid: YGrid,
                           iterations: int = 60, seed: int = 0,
                           rtol: float = 1e-10) -> NormEstimate:
    """Power iteration on A*A for the L2(weights) operator norm of A."""
    if iterations < 20:
        raise ValueError("need at least 20 power iterations")
    rng = np.random.default_rng(seed)
    n = grid.resolution
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= grid.norm(x)
    prev = 0.0
    for it in range(1, iterations + 1):
        y = op.adjoint_action(op.action(x))
        sigma2 = np.real(grid.inner(y, x))
        ny = grid.norm(y)
        if ny == 0.0:
            return NormEstimate(0.0, it, True)
        x = y / ny
        est = np.sqrt(max(sigma2, 0.0))
        if it > 1 and abs(est - prev) <= rtol * max(est, 1e-300):
            return NormEstimate(est, it, True)
        prev = est
    return NormEstimate(prev, iterations, False)


_SINE_BASIS_CACHE: dict = {}


def _sine_basis(nodes: np.ndarray):
    """Orthogonal sine transform matrices on a uniform Dirichlet grid.

    Returns (synth, analysis, synth_deriv, mu): interior synthesis
    f_int = synth @ a, analysis a = analysis @ f_int, derivative values on
    the FULL grid f' = synth_deriv @ a, and the mode frequencies mu_p.
    Grids are deterministic given (extent, resolution), so the matrices are
    cached on (size, endpoints).
    """
    key = (nodes.size, float(nodes[0]), float(nodes[-1]))
    hit = _SINE_BASIS_CACHE.get(key)
    if hit is not None:
        return hit
    n = nodes.size
    n_int = n - 2
    L = nodes[-1] - nodes[0]
    p = np.arange(1, n_int + 1)
    mu = p * np.pi / L
    j = np.arange(1, n_int + 1)
    synth = np.sin(np.pi * np.outer(j, p) / (n_int + 1))
    analysis = (2.0 / (n_int + 1)) * synth.T
    synth_deriv = np.cos(np.outer(nodes - nodes[0], mu))
    result = (synth, analysis, synth_deriv, mu)
    _SINE_BASIS_CACHE[key] = result
    return result


class ModeOperators:
    """All discrete operators for one (domain, grid, k) triple.

    Matrices and multiplier symbols are assembled once in the constructor;
    every application is pure, so instances are safe to share across modes
    and workers.
    """

    def __init__(self, spec: DomainSpec, grid: YGrid, k: float):
        if k == 0.0:
            raise ValueError("mode operators require k != 0")
        self.spec = spec
        self.grid = grid
        self.k = float(k)
        self.kind = spec.kind
        if grid.basis is Basis.FOURIER_PERIODICIZED:
            self.eta = 2.0 * np.pi * fftfreq(grid.resolution, d=grid.spacing)
            self._symbol = -(self.eta**2) - k**2
        else:
            (self._synth, self._analysis,
             self._synth_deriv, self._mu) = _sine_basis(grid.nodes)
            self._symbol = -(self._mu**2) - k**2
        self._kernel = green_kernel(spec, k)
        self._jk_matrix = None
        self._comm_matrix = None

    # -- first/second derivative and Poisson ---------------------------------

    def derivative(self, f: np.ndarray) -> np.ndarray:
        """Spectral d/dy on the full grid."""
        self._check(f)
        if self.grid.basis is Basis.FOURIER_PERIODICIZED:
            return ifft(1j * self.eta * fft(f))
        a = self._analysis @ f[1:-1]
        return self._synth_deriv @ (self._mu * a)

    def apply_laplacian(self, f: np.ndarray) -> np.ndarray:
        """Apply d^2/dy^2 - k^2 with the domain's boundary conditions."""
        self._check(f)
        if self.grid.basis is Basis.FOURIER_PERIODICIZED:
            return ifft(self._symbol * fft(f))
        out = np.zeros_like(f, dtype=complex)
        out[1:-1] = self._synth @ (self._symbol * (self._analysis @ f[1:-1]))
        return out

    def solve_poisson(self, omega: np.ndarray) -> np.ndarray:
        """Solve (d^2/dy^2 - k^2) phi = omega; phi decays (plane) or
        vanishes on the boundary (half-plane/channel)."""
        self._check(omega)
        if self.grid.basis is Basis.FOURIER_PERIODICIZED:
            return ifft(fft(omega) / self._symbol)
        phi = np.zeros_like(omega, dtype=complex)
        phi[1:-1] = self._synth @ ((self._analysis @ omega[1:-1]) / self._symbol)
        return phi

    def gradient_norm2(self, f: np.ndarray) -> float:
        """|| (ik, d/dy) f ||_2^2 = k^2 ||f||^2 + ||f'||^2."""
        g = self.grid
        return self.k**2 * g.norm2(f) + g.norm2(self.derivative(f))

    # -- the singular integral operator --------------------------------------

    def _pv_matrix(self, smat: np.ndarray) -> np.ndarray:
        """Dense principal-value quadrature of f -> pv int S(y,y')/(y-y') f dy'.

        Odd-offset midpoint rule: only nodes y_j with j - i odd contribute,
        each with weight 2h.  The pole sits midway between retained nodes, so
        the principal value cancels by symmetry and the rule keeps the
        spectral accuracy of the midpoint rule for smooth decaying data.
        """
        y = self.grid.nodes
        h = self.grid.spacing
        diff = y[:, None] - y[None, :]
        np.fill_diagonal(diff, 1.0)
        idx = np.arange(self.grid.resolution)
        odd = (idx[:, None] - idx[None, :]) % 2 == 1
        return np.where(odd, 2.0 * h * smat / diff, 0.0)

    def jk_matrix(self) -> np.ndarray:
        """Quadrature matrix of the inviscid-damping operator.

        Includes the Euler-Maclaurin kink corrections (see _jk_convolve);
        the channel kernel's diagonal kink is half as strong as the
        plane/half-plane one, so its corrections carry a factor 1/2.
        """
        if self._jk_matrix is None:
            y = self.grid.nodes
            h = self.grid.spacing
            k = self.k
            G = self._kernel.evaluate(y[:, None], y[None, :])
            M = self._pv_matrix(-0.5j * k * G)  # k G/(2i)
            # kink corrections are asymptotic in |k| h; past |k| h ~ 1 the
            # kernel is unresolved and the correction terms only add noise
            if self.grid.basis is Basis.SINE_DIRICHLET and abs(k) * h <= 1.0:
                n = self.grid.resolution
                D1 = np.zeros((n, n))
                D3 = np.zeros((n, n))
                D1[:, 1:-1] = self._synth_deriv @ (self._mu[:, None]
                                                   * self._analysis)
                D3[:, 1:-1] = -self._synth_deriv @ (self._mu[:, None] ** 3
                                                    * self._analysis)
                scale = 0.5 if self.kind is DomainKind.CHANNEL else 1.0
                M = M + scale * (-(h**2 / 3.0) * (0.5j * k) * D1
                                 + (7.0 * h**4 / 180.0) * (0.5j * k)
                                 * (D3 + k**2 * D1))
            self._jk_matrix = M
        return self._jk_matrix

    def _jk_convolve(self, f: np.ndarray) -> np.ndarray:
        """Plane quadrature as a linear (non-wrapping) Toeplitz convolution.

        Identical to jk_matrix() @ f but O(n log n): the plane kernel depends
        on y - y' only, so the odd-offset rule is a discrete convolution with
        q[d] = i sgn(k) e^{-|k||d|h}/d for odd offsets d.
        """
        from scipy.signal import fftconvolve
        n = self.grid.resolution
        h = self.grid.spacing
        d = np.arange(-(n - 1), n)
        den = np.where(d == 0, 1, d)
        q = 1j * np.sign(self.k) * np.exp(-abs(self.k) * np.abs(d) * h) / den
        q[d % 2 == 0] = 0.0
        base = fftconvolve(q, f)[n - 1:2 * n - 1]
        # Euler-Maclaurin endpoint corrections for the kernel's |y - y'| kink
        # (the smooth-even part of the paired integrand needs none): the s|s|
        # and s^3|s| kink coefficients feed the h^2 and h^4 terms.
        k = self.k
        F = fft(f)
        f1 = ifft(1j * self.eta * F)
        f3 = ifft((1j * self.eta) ** 3 * F)
        corr = (-(h**2 / 3.0) * (0.5j * k) * f1
                + (7.0 * h**4 / 180.0) * (0.5j * k) * (f3 + k**2 * f1))
        return base + corr

    def apply_jk(self, f: np.ndarray, method: str = "auto") -> np.ndarray:
        """Apply the inviscid-damping operator.

        method: "auto" (multiplier on plane, quadrature elsewhere),
        "multiplier" (plane only) or "quadrature".
        """
        self._check(f)
        on_plane = self.grid.basis is Basis.FOURIER_PERIODICIZED
        if method == "auto":
            method = "multiplier" if on_plane else "quadrature"
        if method == "multiplier":
            if not on_plane:
                raise ValueError("the multiplier path exists only on the plane")
            return ifft(np.arctan(self.eta / self.k) * fft(f))
        if method != "quadrature":
            raise ValueError(f"unknown method {method!r}")
        if on_plane:
            return self._jk_convolve(f)
        return self.jk_matrix() @ f

    def jk_operator(self, method: str = "auto") -> DiscreteOperator:
        """The inviscid-damping operator packaged for norm estimation."""
        if method in ("auto", "quadrature") and not (
                method == "auto" and self.grid.basis is Basis.FOURIER_PERIODICIZED):
            return DiscreteOperator.from_matrix(self.kind, self.k,
                                                self.jk_matrix(), self.grid)
        apply = lambda f: self.apply_jk(f, method="multiplier")
        # arctan(eta/k) is real, so the multiplier operator is self-adjoint
        return DiscreteOperator(self.kind, self.k, apply, apply)

    # -- the derivative commutator -------------------------------------------

    def commutator_matrix(self) -> np.ndarray:
        """Quadrature matrix of [d/dy, J_k]; zero on the plane."""
        if self._comm_matrix is not None:
            return self._comm_matrix
        n = self.grid.resolution
        y = self.grid.nodes
        ka = abs(self.k)
        if self.kind in (DomainKind.PLANE, DomainKind.BETA_PLANE):
            self._comm_matrix = np.zeros((n, n))
            return self._comm_matrix
        if self.kind is DomainKind.HALF_PLANE:
            # kernel i k e^{-|k|(y+y')} / (y-y'), the image-charge part of G
            S = 1j * self.k * np.exp(-ka * (y[:, None] + y[None, :]))
        else:
            # kernel -(i k/2) sinh(k(y+y'))/sinh(2k) / (y-y'), evaluated in
            # exponentially scaled form
            S = -0.5j * self.k * self._scaled_sinh_ratio(y[:, None] + y[None, :], ka)
        self._comm_matrix = self._pv_matrix(S)
        return self._comm_matrix

    @staticmethod
    def _scaled_sinh_ratio(z, ka):
        """sinh(ka z)/sinh(2 ka) without overflow (|z| <= 2)."""
        za = np.abs(z)
        num = -np.exp(-ka * (2.0 - za)) * np.expm1(-2.0 * ka * za)
        den = -np.expm1(-4.0 * ka)
        return np.sign(z) * num / den

    def apply_jk_commutator(self, f: np.ndarray) -> np.ndarray:
        """Apply [d/dy, J_k] f; identically zero on the plane."""
        self._check(f)
        if self.kind in (DomainKind.PLANE, DomainKind.BETA_PLANE):
            return np.zeros_like(f, dtype=complex)
        return self.commutator_matrix() @ f

    def commutator_operator(self) -> DiscreteOperator:
        return DiscreteOperator.from_matrix(self.kind, self.k,
                                            self.commutator_matrix(), self.grid)

    # -- resolution self-check ------------------------------------------------

    def jk_self_check(self, f: np.ndarray, rtol: float = 1e-2) -> float:
        """Compare the quadrature at full and halved resolution on f.

        Returns the relative defect; raises if it exceeds rtol, which signals
        an unresolved profile.
        """
        full = self.apply_jk(f, method="quadrature")
        from .domains import build_grid  # local import avoids a cycle at module load
        coarse_grid = build_grid(self.spec, self.grid.resolution // 2)
        fc = np.interp(coarse_grid.nodes, self.grid.nodes, f.real) \
            + 1j * np.interp(coarse_grid.nodes, self.grid.nodes, f.imag)
        coarse = ModeOperators(self.spec, coarse_grid, self.k).apply_jk(
            fc, method="quadrature")
        full_on_coarse = np.interp(coarse_grid.nodes, self.grid.nodes, full.real) \
            + 1j * np.interp(coarse_grid.nodes, self.grid.nodes, full.imag)
        defect = coarse_grid.norm(full_on_coarse - coarse) / max(
            coarse_grid.norm(coarse), 1e-300)
        if defect > rtol:
            raise ValueError(
                f"profile unresolved for the quadrature: defect {defect:.2e}")
        return defect

    def _check(self, f: np.ndarray):
        if f.shape != (self.grid.resolution,):
            raise ValueError(
                f"profile length {f.shape} does not match grid "
                f"resolution {self.grid.resolution}")


def _odd_offset_convolve(kernel: np.ndarray, f: np.ndarray) -> np.ndarray:
    """out_i = sum_d kernel[d] f_{i-d} for a kernel indexed d = -(n-1)..n-1."""
    from scipy.signal import fftconvolve
    n = f.size
    return fftconvolve(kernel, f)[n - 1:2 * n - 1]


def _cauchy_kernel(n: int) -> np.ndarray:
    """Odd-offset principal-value weights 1/d, zero on even offsets."""
    d = np.arange(-(n - 1), n)
    den = np.where(d == 0, 1, d)
    return np.where(d % 2 == 1, 1.0 / den, 0.0)


def _wrap_hermitian(kind: DomainKind, k: float, grid: YGrid,
                    action: Callable[[np.ndarray], np.ndarray]) -> DiscreteOperator:
    """Package an action that is Hermitian in the unweighted dot product;
    the weighted-L2 adjoint is then W^-1 A W."""
    w = grid.weights
    return DiscreteOperator(kind, k, action,
                            lambda f: action(w * f) / w)


def fast_jk_operator(spec: DomainSpec, grid: YGrid, k: float) -> DiscreteOperator:
    """Matrix-free inviscid-damping quadrature on the sine-basis domains.

    The Green's function splits into a translation-invariant part (a
    Toeplitz convolution under the odd-offset rule, like the plane path) and
    image terms depending on y + y' only, which factor into diagonal *
    Cauchy-convolution * diagonal products.  Memory is O(n), so the
    resolution can grow with |k| and keep |k| h bounded; the diagonal kink
    corrections of the dense path (an O(h^2) refinement within the same
    quadrature family) are omitted.
    """
    if grid.basis is not Basis.SINE_DIRICHLET:
        raise ValueError("the fast quadrature path covers the sine domains")
    if k == 0.0:
        raise ValueError("mode operators require k != 0")
    n = grid.resolution
    h = grid.spacing
    y = grid.nodes
    ka = abs(k)
    sgn = 1.0 if k > 0 else -1.0
    d = np.arange(-(n - 1), n)
    den = np.where(d == 0, 1, d)
    odd = d % 2 == 1
    cauchy = np.where(odd, 1.0 / den, 0.0)
    if spec.kind is DomainKind.HALF_PLANE:
        toeplitz = np.where(odd, 1j * sgn * np.exp(-ka * np.abs(d) * h) / den,
                            0.0)
        a = np.exp(-ka * y)

        def action(f):
            return _odd_offset_convolve(toeplitz, f) \
                - 1j * sgn * a * _odd_offset_convolve(cauchy, a * f)
    else:
        scale = -np.expm1(-4.0 * ka)
        c1 = (np.exp(-ka * np.abs(d) * h)
              + np.exp(-ka * (4.0 - np.abs(d) * h))) / scale
        toeplitz = np.where(odd, 0.5j * sgn * c1 / den, 0.0)
        p1 = np.exp(ka * (y - 1.0))
        p2 = np.exp(-ka * (y + 1.0))
        beta = -0.5j * sgn / scale

        def action(f):
            sep = p1 * _odd_offset_convolve(cauchy, p1 * f) \
                + p2 * _odd_offset_convolve(cauchy, p2 * f)
            return _odd_offset_convolve(toeplitz, f) + beta * sep
    return _wrap_hermitian(spec.kind, k, grid, action)


def fast_commutator_operator(spec: DomainSpec, grid: YGrid,
                             k: float) -> DiscreteOperator:
    """Matrix-free [d/dy, J_k] quadrature; the kernels depend on y + y' only
    and factor into at most two diagonal * Cauchy-convolution * diagonal
    products."""
    if grid.basis is not Basis.SINE_DIRICHLET:
        raise ValueError("the fast quadrature path covers the sine domains")
    if k == 0.0:
        raise ValueError("mode operators require k != 0")
    n = grid.resolution
    y = grid.nodes
    ka = abs(k)
    cauchy = _cauchy_kernel(n)
    if spec.kind is DomainKind.HALF_PLANE:
        a = np.exp(-ka * y)

        def action(f):
            return 2j * k * a * _odd_offset_convolve(cauchy, a * f)
    else:
        scale = -np.expm1(-4.0 * ka)
        q1 = np.exp(ka * (y - 1.0))
        q2 = np.exp(-ka * (y + 1.0))

        def action(f):
            sep = q1 * _odd_offset_convolve(cauchy, q1 * f) \
                - q2 * _odd_offset_convolve(cauchy, q2 * f)
            return (-1j * k / scale) * sep
    return _wrap_hermitian(spec.kind, k, grid, action)


_OPS_CACHE: dict = {}


def mode_operators(spec: DomainSpec, grid: YGrid, k: float) -> ModeOperators:
    """Cached constructor; grids are deterministic given (spec, resolution)."""
    key = (spec.kind, spec.nu, spec.coriolis_b, spec.y_extent,
           grid.resolution, float(k))
    ops = _OPS_CACHE.get(key)
    if ops is None or ops.grid is not grid:
        ops = ModeOperators(spec, grid, k)
        _OPS_CACHE[key] = ops
    return ops


def apply_laplacian_k(spec: DomainSpec, grid: YGrid, k: float,
                      profile: np.ndarray) -> np.ndarray:
    """Apply Delta_k = d^2/dy^2 - k^2 to a profile."""
    return mode_operators(spec, grid, k).apply_laplacian(profile)


def solve_poisson_k(spec: DomainSpec, grid: YGrid, k: float,
                    omega: np.ndarray) -> np.ndarray:
    """Solve Delta_k phi = omega for the streamfunction profile."""
    return mode_operators(spec, grid, k).solve_poisson(omega)


def apply_jk(spec: DomainSpec, grid: YGrid, k: float, profile: np.ndarray,
             method: str = "auto") -> np.ndarray:
    """Apply the inviscid-damping singular integral operator."""
    return mode_operators(spec, grid, k).apply_jk(profile, method)


def apply_jk_commutator(spec: DomainSpec, grid: YGrid, k: float,
                        profile: np.ndarray) -> np.ndarray:
    """Apply the commutator [d/dy, J_k]."""
    return mode_operators(spec, grid, k).apply_jk_commutator(profile)
