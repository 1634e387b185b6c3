"""Independent collocation solver for the axisymmetric sphere equation.

In the variable c = cos(theta) the axisymmetric equation becomes

    d/dc[(1 - c^2) du/dc] + lambda (e^u - 1) = 0   on (-1, 1),

which is free of the cot(theta) pole singularity; regularity at the poles
is automatic for polynomial interpolants.  The equation is collocated at
the same Gauss-Legendre nodes used by the quadrature grid, so comparisons
against shooting reconstructions need no interpolation, and solved by
damped Newton.  The same discretisation yields the axisymmetric spectrum
of the Laplace-Beltrami operator, used to certify the degenerate
parameters lambda = k(k+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .errors import NoConvergence, SingularJacobian
from .radial_ode import ProblemParams
from .sphere_field import SphereField, colatitude_grid

__all__ = [
    "CollocationProblem",
    "solve_bvp",
    "linearized_spectrum",
    "differentiation_matrix",
]

COND_LIMIT = 1.0e12
MIN_STEP_SCALE = 2.0**-24


def differentiation_matrix(cos_theta: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Barycentric differentiation matrix on Gauss-Legendre nodes.

    Uses the closed-form barycentric weights for Legendre points and the
    negative-sum trick on the diagonal, which pins the constant mode to
    the kernel up to roundoff (the zero state stays exact regardless).
    """
    c = np.asarray(cos_theta, dtype=float)
    n = len(c)
    b = np.sqrt((1.0 - c * c) * weights)
    b[1::2] *= -1.0
    diff = c[:, None] - c[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (b[None, :] / b[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))
    return D


@dataclass
class CollocationProblem:
    """Discrete axisymmetric problem, built on the shared quadrature grid.

    residual_history is populated by solve_bvp (max-norm of the residual
    per iterate, including the initial guess).  The default node count
    keeps the rounding floor of the discrete residual (which grows like
    n^2 * eps through the Laplacian apply) below the residual tolerance.
    """

    params: ProblemParams
    n_nodes: int = 128
    initial_guess: np.ndarray | None = None
    damping: float = 1.0
    max_iter: int = 60
    residual_tol: float = 1.0e-10
    residual_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.n_nodes < 64:
            raise ValueError("n_nodes must be at least 64")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")
        if self.residual_tol <= 0.0:
            raise ValueError("residual_tol must be positive")
        theta, c, w = colatitude_grid(self.n_nodes)
        self.theta_nodes = theta
        self.cos_theta = c
        self.quad_weights = w
        if self.initial_guess is None:
            self.initial_guess = np.zeros(self.n_nodes)
        else:
            self.initial_guess = np.asarray(self.initial_guess, dtype=float)
            if len(self.initial_guess) != self.n_nodes:
                raise ValueError("initial_guess length must match n_nodes")


def _laplacian_matrix(problem: CollocationProblem) -> np.ndarray:
    D = differentiation_matrix(problem.cos_theta, problem.quad_weights)
    return D @ ((1.0 - problem.cos_theta**2)[:, None] * D), D


def solve_bvp(problem: CollocationProblem) -> SphereField:
    """Damped Newton on the collocated residual; returns the solved field.

    Raises NoConvergence (with the residual history attached) if the
    tolerance is not met, and SingularJacobian when the Newton matrix is
    numerically singular, the expected degeneracy of the linearisation at
    zero for lambda = k(k+1).
    """
    lam = problem.params.lam
    lap, D = _laplacian_matrix(problem)

    def residual(u):
        return lap @ u + lam * np.expm1(u)

    u = problem.initial_guess.copy()
    res = residual(u)
    norm = float(np.max(np.abs(res)))
    history = [norm]
    problem.residual_history = history

    for _ in range(problem.max_iter):
        if norm <= problem.residual_tol:
            break
        jac = lap + lam * np.exp(u)[:, None] * np.eye(problem.n_nodes)
        if np.linalg.cond(jac) > COND_LIMIT:
            raise SingularJacobian(
                "Newton matrix numerically singular at lambda=%.6g; the "
                "linearisation at zero degenerates when lambda = k(k+1)" % lam
            )
        step = np.linalg.solve(jac, -res)
        scale = problem.damping
        while True:
            u_try = u + scale * step
            res_try = residual(u_try)
            norm_try = float(np.max(np.abs(res_try)))
            if norm_try < norm or scale < MIN_STEP_SCALE:
                break
            scale *= 0.5
        if norm_try >= norm:
            raise NoConvergence(
                "backtracking stalled at residual %.3e" % norm, history
            )
        u, res, norm = u_try, res_try, norm_try
        history.append(norm)
    else:
        if norm > problem.residual_tol:
            raise NoConvergence(
                "residual %.3e above tolerance %.3e after %d iterations"
                % (norm, problem.residual_tol, problem.max_iter),
                history,
            )

    u_prime = -np.sin(problem.theta_nodes) * (D @ u)
    return SphereField(
        params=problem.params,
        theta=problem.theta_nodes,
        cos_theta=problem.cos_theta,
        u=u,
        u_prime=u_prime,
        weights=problem.quad_weights,
        s=None,
        source="collocation",
    )


def linearized_spectrum(
    params: ProblemParams, n_modes: int, n_nodes: int = 256
) -> np.ndarray:
    """Leading eigenvalues of -Laplacian restricted to axisymmetric modes.

    Galerkin form on the quadrature grid: stiffness integral (1-c^2) f' g'
    against the diagonal mass, both exact for polynomial modes, so the
    discrete eigenvalues reproduce j(j+1) to roundoff.  The linearisation
    of the equation at zero, -Laplacian - lambda, is singular exactly when
    lambda appears in this list.
    """
    if n_modes > n_nodes // 4:
        raise ValueError("n_modes must not exceed n_nodes/4")
    _, c, w = colatitude_grid(n_nodes)
    D = differentiation_matrix(c, w)
    K = D.T @ ((w * (1.0 - c * c))[:, None] * D)
    K = 0.5 * (K + K.T)
    vals = eigh(K, np.diag(w), eigvals_only=True)
    return vals[:n_modes]
