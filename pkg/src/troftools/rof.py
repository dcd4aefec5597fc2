"""ROF total variation restoration.

Minimises TV(u) + (mu/2) * ||u - f||^2 with an ADMM splitting z = grad(u)
and a scaled dual variable b. Each iteration

    z <- shrink(grad(u) + b, 1/rho)
    u <- solve (mu I + rho grad^T grad) u = mu f + rho grad^T (z - b)
    b <- b + grad(u) - z

where the u-subproblem is solved by conjugate gradients on the
(symmetric positive definite) normal operator.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from troftools.core import GrayImage, _as_grid, _check_same_shape, divergence, gradient, tv
from troftools.tv_variants import TvVariant


@dataclass(frozen=True)
class RofParams:
    mu: float
    rho: float = 2.0
    eps_u: float = 1e-4
    max_iter: int = 2000
    variant: TvVariant = TvVariant.ISOTROPIC
    cg_tol: float = 1e-8
    cg_max_iter: int = 200

    def __post_init__(self):
        for name in ('mu', 'rho', 'eps_u', 'cg_tol'):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f'{name} must be positive, got {value}.')
        for name in ('max_iter', 'cg_max_iter'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f'{name} must be a positive integer, got {value}.')
        if not self.eps_u < 1:
            raise ValueError(f'eps_u must be below 1, got {self.eps_u}.')
        object.__setattr__(self, 'variant', TvVariant.parse(self.variant))


@dataclass(frozen=True, eq=False)
class RofSolution:
    u: np.ndarray
    iterations: int
    relative_change_history: np.ndarray
    final_energy: float
    converged: bool
    # Range of the iterate before the final clamp onto [min f, max f].
    raw_min: float = field(default=0.0)
    raw_max: float = field(default=0.0)

    @property
    def image(self):
        return GrayImage.from_array(self.u, clip=True)


def rof_energy(u, f, mu, variant=TvVariant.ISOTROPIC):
    u = _as_grid(u)
    f = _as_grid(f)
    _check_same_shape(u, f)
    return tv(u, variant) + 0.5 * mu * float(np.sum((u - f) ** 2))


class RofSolver:
    """ADMM solver for one image."""

    def __init__(self, f, params, debug=False):
        self.f = _as_grid(f)
        self.params = params
        self.debug = debug
        self.shape = self.f.shape
        self.size = self.f.size

        mu, rho = params.mu, params.rho
        shape = self.shape

        def matvec(x):
            x = x.reshape(shape)
            return (mu * x - rho * divergence(gradient(x))).ravel()

        self.normal_operator = LinearOperator((self.size, self.size),
                                              matvec=matvec, rmatvec=matvec,
                                              dtype=np.float64)

    def shrink(self, t):
        """Soft threshold at 1/rho, vectorial or componentwise."""
        ell = 1.0 / self.params.rho
        if self.params.variant is TvVariant.ANISOTROPIC:
            return np.sign(t) * np.maximum(np.abs(t) - ell, 0.0)
        t_norm = np.sqrt(t[0] ** 2 + t[1] ** 2)
        scale = np.zeros_like(t_norm)
        ind = t_norm > ell
        scale[ind] = (t_norm[ind] - ell) / t_norm[ind]
        return scale * t

    def solve_u(self, u, z, b):
        params = self.params
        rhs = params.mu * self.f - params.rho * divergence(z - b)
        x, info = cg(self.normal_operator, rhs.ravel(), x0=u.ravel(),
                     rtol=params.cg_tol, atol=0.0,
                     maxiter=params.cg_max_iter)
        if self.debug and info > 0:
            print(f'CG stopped after {info} iterations without reaching '
                  f'tolerance {params.cg_tol}.')
        return x.reshape(self.shape)

    def run(self):
        params = self.params
        u = self.f.copy()
        z = gradient(u)
        b = np.zeros_like(z)
        history = []
        converged = False

        for iteration in range(1, params.max_iter + 1):
            z = self.shrink(gradient(u) + b)
            u_next = self.solve_u(u, z, b)
            b = b + gradient(u_next) - z

            norm = np.linalg.norm(u_next)
            change = np.linalg.norm(u_next - u)
            relative_change = 0.0 if norm == 0 else change / norm
            history.append(relative_change)
            u = u_next

            if self.debug and (iteration % 100 == 0 or relative_change <= params.eps_u):
                print(f'ROF iteration {iteration}: relative change {relative_change:.3e}')
            if relative_change <= params.eps_u:
                converged = True
                break

        if not converged:
            print(f'WARNING: ROF stopped at max_iter={params.max_iter} with '
                  f'relative change {history[-1]:.3e} > eps_u={params.eps_u}.')

        raw_min, raw_max = float(u.min()), float(u.max())
        u = np.clip(u, self.f.min(), self.f.max())
        return RofSolution(u=u,
                           iterations=len(history),
                           relative_change_history=np.asarray(history),
                           final_energy=rof_energy(u, self.f, params.mu,
                                                   params.variant),
                           converged=converged,
                           raw_min=raw_min,
                           raw_max=raw_max)


def solve_rof(f, params, debug=False):
    return RofSolver(f, params, debug=debug).run()


def taut_string_1d(f, mu):
    """Exact minimiser of sum|u[k+1] - u[k]| + (mu/2) * sum (u - f)^2.

    Direct taut string method: the output is built segment by segment
    while tracking the admissible range [vmin, vmax] of the current
    segment value and the running slack umin/umax of the string against
    its tube of half-width lam = 1/mu.
    """
    y = np.asarray(f, dtype=np.float64).ravel()
    n = y.size
    if n == 0:
        raise ValueError('Signal must have at least one sample.')
    if not mu > 0:
        raise ValueError(f'mu must be positive, got {mu}.')
    lam = 1.0 / mu
    out = np.empty(n)

    k = k0 = 0
    kplus = kminus = 0
    umin, umax = lam, -lam
    vmin, vmax = y[0] - lam, y[0] + lam

    while True:
        while k == n - 1:
            if umin < 0.0:
                out[k0:kminus + 1] = vmin
                k0 = kminus + 1
                kminus = k = k0
                vmin = y[k0]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                out[k0:kplus + 1] = vmax
                k0 = kplus + 1
                kplus = k = k0
                vmax = y[k0]
                umax = -lam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                out[k0:k + 1] = vmin
                return out

        umin += y[k + 1] - vmin
        if umin < -lam:
            # Negative jump.
            out[k0:kminus + 1] = vmin
            k0 = kminus + 1
            kplus = kminus = k = k0
            vmin = y[k0]
            vmax = vmin + 2 * lam
            umin, umax = lam, -lam
            continue

        umax += y[k + 1] - vmax
        if umax > lam:
            # Positive jump.
            out[k0:kplus + 1] = vmax
            k0 = kplus + 1
            kplus = kminus = k = k0
            vmax = y[k0]
            vmin = vmax - 2 * lam
            umin, umax = lam, -lam
            continue

        k += 1
        if umin >= lam:
            kminus = k
            vmin += (umin - lam) / (k - k0 + 1)
            umin = lam
        if umax <= -lam:
            kplus = k
            vmax += (umax + lam) / (k - k0 + 1)
            umax = -lam
