"""Gradient descent over complex fixed-rank matrices with Armijo backtracking.

Points live on the embedded manifold of rank-r matrices, stored in SVD form.
Objectives are real functions of the dense matrix; their supplied Euclidean
gradient follows the conjugate-coordinate convention, so the directional
derivative along a perturbation D is 2*Re(trace(egrad^H @ D)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ORTHO_TOL = 1e-10
RANK_GUARD = 1e-12  # floor on retained singular values, relative to the largest


@dataclass
class FixedRankPoint:
    """Rank-r matrix U @ diag(sigma) @ V^H with orthonormal U, V columns."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.v = np.asarray(self.v, dtype=complex)
        r = self.sigma.shape[0]
        if self.u.shape[1] != r or self.v.shape[1] != r:
            raise ValueError("factor widths must match the number of singular values")
        if np.any(self.sigma <= 0):
            raise ValueError("singular values must be strictly positive")
        if np.any(np.diff(self.sigma) > 0):
            raise ValueError("singular values must be non-increasing")
        for name, f in (("u", self.u), ("v", self.v)):
            gram = f.conj().T @ f
            if np.max(np.abs(gram - np.eye(r))) > ORTHO_TOL:
                raise ValueError(f"{name} columns are not orthonormal")

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape[0], self.v.shape[0]

    def matrix(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.conj().T

    @classmethod
    def from_matrix(cls, x: np.ndarray, rank: int) -> "FixedRankPoint":
        u, s, vh = np.linalg.svd(x, full_matrices=False)
        s = s[:rank].copy()
        # keep the point on the manifold when the input is rank deficient
        floor = RANK_GUARD * (s[0] if s.size and s[0] > 0 else 1.0)
        s = np.maximum(s, floor)
        return cls(u[:, :rank], s, vh[:rank].conj().T)

    @classmethod
    def random(cls, rng: np.random.Generator, m: int, n: int, rank: int) -> "FixedRankPoint":
        """Random point with orthonormalized Gaussian factors and unit spectrum."""
        u = np.linalg.qr(rng.standard_normal((m, rank)) + 1j * rng.standard_normal((m, rank)))[0]
        v = np.linalg.qr(rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank)))[0]
        return cls(u, np.ones(rank), v)


@dataclass
class TangentVector:
    """Tangent vector at a FixedRankPoint in the (core, u_perp, v_perp) split."""

    core: np.ndarray  # (r, r)
    u_perp: np.ndarray  # (m, r), orthogonal to span(u)
    v_perp: np.ndarray  # (n, r), orthogonal to span(v)

    def ambient(self, point: FixedRankPoint) -> np.ndarray:
        return (
            point.u @ self.core @ point.v.conj().T
            + self.u_perp @ point.v.conj().T
            + point.u @ self.v_perp.conj().T
        )

    def norm(self) -> float:
        return float(
            np.sqrt(
                np.sum(np.abs(self.core) ** 2)
                + np.sum(np.abs(self.u_perp) ** 2)
                + np.sum(np.abs(self.v_perp) ** 2)
            )
        )

    def scaled(self, a: float) -> "TangentVector":
        return TangentVector(a * self.core, a * self.u_perp, a * self.v_perp)


def project_tangent(point: FixedRankPoint, e: np.ndarray) -> TangentVector:
    """Orthogonal projection of an ambient matrix onto the tangent space."""
    if e.shape != point.shape:
        raise ValueError("ambient matrix shape does not match the point")
    ev = e @ point.v
    core = point.u.conj().T @ ev
    u_perp = ev - point.u @ core
    eu = e.conj().T @ point.u
    v_perp = eu - point.v @ core.conj().T
    return TangentVector(core, u_perp, v_perp)


def retract(point: FixedRankPoint, xi: TangentVector, step: float) -> FixedRankPoint:
    """Truncated-SVD retraction of point + step * xi back onto the manifold."""
    if step <= 0:
        raise ValueError("step must be positive")
    return FixedRankPoint.from_matrix(point.matrix() + step * xi.ambient(point), point.rank)


@dataclass
class ArmijoOptions:
    max_iters: int = 200
    rel_tol: float = 1e-6
    grad_tol: float = 1e-12
    beta: float = 0.5
    c: float = 1e-4
    max_backtracks: int = 25
    initial_step: float | None = None


@dataclass
class MinimizeResult:
    point: FixedRankPoint
    objectives: list[float] = field(default_factory=list)
    grad_norm: float = np.inf
    iterations: int = 0
    stop_reason: str = "max_iters"


def armijo_minimize(
    f: Callable[[np.ndarray], float],
    egrad: Callable[[np.ndarray], np.ndarray],
    x0: FixedRankPoint,
    opts: ArmijoOptions | None = None,
) -> MinimizeResult:
    """Riemannian gradient descent with Armijo backtracking.

    Steps along the negative projected gradient and retracts; the accepted
    objective sequence is non-increasing. The warm-start step uses a
    Barzilai-Borwein quotient from the previous accepted move when it is
    usable, otherwise it doubles the last accepted step.
    """
    opts = opts or ArmijoOptions()
    point = x0
    x = point.matrix()
    fx = float(f(x))
    if not np.isfinite(fx):
        raise FloatingPointError("objective is not finite at the starting point")
    result = MinimizeResult(point=point, objectives=[fx])

    step = opts.initial_step
    prev_x = prev_grad = None
    for it in range(opts.max_iters):
        grad = egrad(x)
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError(f"gradient is not finite at iteration {it}")
        rgrad = project_tangent(point, grad)
        gnorm = rgrad.norm()
        result.grad_norm = gnorm
        result.iterations = it
        if gnorm <= opts.grad_tol:
            result.stop_reason = "stationary"
            break

        if prev_x is not None:
            s = x - prev_x
            y = grad - prev_grad
            denom = np.real(np.vdot(s, y))
            t0 = np.real(np.vdot(s, s)) / denom if denom > 0 else 2.0 * step
            step = t0 if np.isfinite(t0) and t0 > 0 else 2.0 * step
        elif step is None:
            step = 1.0 / max(gnorm, 1e-16)

        slope = 2.0 * gnorm**2  # directional derivative magnitude along -rgrad
        direction = rgrad.scaled(-1.0)
        accepted = False
        t = step
        for _ in range(opts.max_backtracks):
            candidate = retract(point, direction, t)
            fc = float(f(candidate.matrix()))
            if np.isfinite(fc) and fc <= fx - opts.c * t * slope:
                accepted = True
                break
            t *= opts.beta
        if not accepted:
            result.stop_reason = "backtrack_failed"
            break

        prev_x, prev_grad = x, grad
        point = candidate
        x = point.matrix()
        decrease = fx - fc
        fx = fc
        step = t
        result.objectives.append(fx)
        result.point = point
        result.iterations = it + 1
        if decrease <= opts.rel_tol * max(1.0, abs(fx)):
            result.stop_reason = "tolerance"
            break
    else:
        result.stop_reason = "max_iters"

    result.point = point
    return result
