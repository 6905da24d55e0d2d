"""Two-timescale channel estimation via fixed-rank manifold minimization.

The surface-BS channel is estimated once per large timescale, jointly with
the helper UE's surface channel, from pilots sent by a refraction-side UE
(only that side pins the shared channel down to a single scalar gauge). The
per-UE surface channels are then estimated every small timescale with the
large-timescale estimate held fixed. Both stages minimize a least-squares
objective plus l1 penalties on the angular-domain transforms, subject to a
fixed-rank constraint handled by the manifold optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import FLE, FRA, Dictionaries
from .manifold import ArmijoOptions, FixedRankPoint, MinimizeResult, armijo_minimize
from .signal_model import PhaseSchedule, PilotSchedule, ReceivedBlock

SIGN_ZERO_TOL = 1e-12


@dataclass
class EstimationConfig:
    """Pilot budgets, l1 weights, and iteration controls of the estimator."""

    t_g: int = 900
    t_h: int = 75
    tau: int = 4
    upsilon_g: float | None = None  # None: noise-scaled default
    upsilon_h: float | None = None
    k_c: int | None = None  # 0-based helper-UE index; None: first refraction-side UE
    outer_tol: float = 1e-4
    outer_max: int = 50
    inner_steps: int = 20
    inner_rel_tol: float = 1e-8
    small_max_iters: int = 200
    small_rel_tol: float = 1e-8

    def __post_init__(self):
        if self.t_g < 1 or self.t_h < 1:
            raise ValueError("pilot budgets must be >= 1")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        for u in (self.upsilon_g, self.upsilon_h):
            if u is not None and u < 0:
                raise ValueError("l1 weights must be >= 0")


@dataclass
class EstimateSet:
    """Fixed-rank channel estimates plus per-stage diagnostics."""

    g_hat: FixedRankPoint
    h_hat: dict[int, FixedRankPoint]
    trace_large: list[float] = field(default_factory=list)
    traces_small: dict[int, list[float]] = field(default_factory=dict)
    outer_iterations: int = 0


@dataclass
class NMSEReport:
    nmse_fra: float
    nmse_avg: float
    per_ue: list[float] = field(default_factory=list)


def default_l1_weight(noise_var: float, dict_size: int, scale: float = 1.0) -> float:
    """Noise-scaled l1 weight; goes to zero with the noise so the noiseless
    problem reduces to pure least squares on the manifold."""
    return scale * noise_var * np.sqrt(np.log(max(dict_size, 2)))


def _l1_weights(config: EstimationConfig, noise_var: float, dicts: Dictionaries):
    ug = config.upsilon_g
    uh = config.upsilon_h
    if ug is None:
        ug = default_l1_weight(noise_var, dicts.a_bs.shape[1] * dicts.a_i.shape[1])
    if uh is None:
        uh = default_l1_weight(noise_var, dicts.a_i.shape[1] * dicts.a_ue.shape[1])
    return ug, uh


def sign_matrix(x: np.ndarray, a_left: np.ndarray, a_right: np.ndarray) -> np.ndarray:
    """Elementwise phase of the angular transform; zero where the transform
    entry is (numerically) zero, the minimal-norm subgradient choice."""
    t = a_left.conj().T @ x @ a_right
    mag = np.abs(t)
    out = np.zeros_like(t)
    mask = mag >= SIGN_ZERO_TOL
    out[mask] = t[mask] / mag[mask]
    return out


def _l1_term(x: np.ndarray, a_left: np.ndarray, a_right: np.ndarray) -> float:
    return float(np.sum(np.abs(a_left.conj().T @ x @ a_right)))


def _l1_egrad(x: np.ndarray, a_left: np.ndarray, a_right: np.ndarray, weight: float) -> np.ndarray:
    if weight == 0:
        return np.zeros(x.shape, dtype=complex)
    return (weight / 2.0) * (a_left @ sign_matrix(x, a_left, a_right) @ a_right.conj().T)


def _fra_forward(phi1: np.ndarray, phi2: np.ndarray, l: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply diag(phi1[t]) @ l @ diag(phi2[t]) to column t of x, batched."""
    return phi1.T * (l @ (phi2.T * x))


def _fra_adjoint(phi1: np.ndarray, phi2: np.ndarray, l: np.ndarray, y: np.ndarray) -> np.ndarray:
    return phi2.conj().T * (l.conj().T @ (phi1.conj().T * y))


def objective_large(
    g_mat: np.ndarray,
    h_mat: np.ndarray,
    received: np.ndarray,
    schedule: PhaseSchedule,
    pilots: PilotSchedule,
    l: np.ndarray,
    eps: float,
    upsilon_g: float,
    upsilon_h: float,
    dicts: Dictionaries,
) -> float:
    """Summed squared residual of the refraction-side pilot model plus the
    l1 penalties on both angular transforms. ``received`` is (T, N_BS)."""
    r = received.T
    coef = np.sqrt(1 - eps)
    pred = coef * (g_mat @ _fra_forward(schedule.phi1, schedule.phi2, l, h_mat @ pilots.s.T))
    val = float(np.sum(np.abs(r - pred) ** 2))
    val += upsilon_g * _l1_term(g_mat, dicts.a_bs, dicts.a_i)
    val += upsilon_h * _l1_term(h_mat, dicts.a_i, dicts.a_ue)
    return val


def egrad_g_large(
    g_mat: np.ndarray,
    h_mat: np.ndarray,
    received: np.ndarray,
    schedule: PhaseSchedule,
    pilots: PilotSchedule,
    l: np.ndarray,
    eps: float,
    upsilon_g: float,
    dicts: Dictionaries,
) -> np.ndarray:
    """Euclidean gradient of the large-timescale objective in the surface-BS
    channel (conjugate-coordinate convention)."""
    r = received.T
    coef = np.sqrt(1 - eps)
    b = coef * _fra_forward(schedule.phi1, schedule.phi2, l, h_mat @ pilots.s.T)
    return (g_mat @ b - r) @ b.conj().T + _l1_egrad(g_mat, dicts.a_bs, dicts.a_i, upsilon_g)


def egrad_h_large(
    g_mat: np.ndarray,
    h_mat: np.ndarray,
    received: np.ndarray,
    schedule: PhaseSchedule,
    pilots: PilotSchedule,
    l: np.ndarray,
    eps: float,
    upsilon_h: float,
    dicts: Dictionaries,
) -> np.ndarray:
    """Euclidean gradient of the large-timescale objective in the helper UE's
    surface channel."""
    r = received.T
    coef = np.sqrt(1 - eps)
    phi1, phi2 = schedule.phi1, schedule.phi2
    pred = coef * (g_mat @ _fra_forward(phi1, phi2, l, h_mat @ pilots.s.T))
    err = pred - r
    back = coef * _fra_adjoint(phi1, phi2, l, g_mat.conj().T @ err)
    return back @ pilots.s.conj() + _l1_egrad(h_mat, dicts.a_i, dicts.a_ue, upsilon_h)


def _small_maps(schedule: PhaseSchedule, l: np.ndarray, eps: float, side: str):
    """Forward/adjoint application of the side-appropriate effective phases."""
    phi1, phi2 = schedule.phi1, schedule.phi2
    if side == FLE:
        coef = np.sqrt(eps)

        def fwd(x):
            return coef * (phi1.T * x)

        def adj(y):
            return coef * (phi1.conj().T * y)

    elif side == FRA:
        coef = np.sqrt(1 - eps)

        def fwd(x):
            return coef * _fra_forward(phi1, phi2, l, x)

        def adj(y):
            return coef * _fra_adjoint(phi1, phi2, l, y)

    else:
        raise ValueError(f"unknown side {side!r}")
    return fwd, adj


def objective_small(
    h_mat: np.ndarray,
    g_mat: np.ndarray,
    received: np.ndarray,
    schedule: PhaseSchedule,
    pilots: PilotSchedule,
    l: np.ndarray,
    eps: float,
    side: str,
    upsilon_h: float,
    dicts: Dictionaries,
) -> float:
    fwd, _ = _small_maps(schedule, l, eps, side)
    pred = g_mat @ fwd(h_mat @ pilots.s.T)
    val = float(np.sum(np.abs(received.T - pred) ** 2))
    return val + upsilon_h * _l1_term(h_mat, dicts.a_i, dicts.a_ue)


def egrad_h_small(
    h_mat: np.ndarray,
    g_mat: np.ndarray,
    received: np.ndarray,
    schedule: PhaseSchedule,
    pilots: PilotSchedule,
    l: np.ndarray,
    eps: float,
    side: str,
    upsilon_h: float,
    dicts: Dictionaries,
) -> np.ndarray:
    """Euclidean gradient of the small-timescale objective in the UE's
    surface channel, valid for either side."""
    fwd, adj = _small_maps(schedule, l, eps, side)
    err = g_mat @ fwd(h_mat @ pilots.s.T) - received.T
    return adj(g_mat.conj().T @ err) @ pilots.s.conj() + _l1_egrad(
        h_mat, dicts.a_i, dicts.a_ue, upsilon_h
    )


def estimate_large_timescale(
    received: ReceivedBlock,
    schedule: PhaseSchedule,
    pilots: PilotSchedule,
    l: np.ndarray,
    dicts: Dictionaries,
    eps: float,
    rank_g: int,
    rank_h: int,
    config: EstimationConfig,
    rng: np.random.Generator,
) -> tuple[FixedRankPoint, FixedRankPoint, list[float]]:
    """Alternating fixed-rank minimization of the joint objective.

    The helper UE must sit on the refraction side; pilots from a
    reflection-side UE leave a per-column ambiguity in the shared channel and
    are rejected. Returns the two estimates and the objective trace, which is
    non-increasing across every accepted step.
    """
    if received.side != FRA:
        raise ValueError("large-timescale pilots must come from a refraction-side UE")
    r = received.r.T  # (N_BS, T)
    s = pilots.s
    phi1, phi2 = schedule.phi1, schedule.phi2
    coef = np.sqrt(1 - eps)
    n_bs, t = r.shape
    m = l.shape[0]
    n_ue = s.shape[1]
    ug, uh = _l1_weights(config, pilots.noise_var, dicts)

    g_pt = FixedRankPoint.random(rng, n_bs, m, rank_g)
    h_pt = FixedRankPoint.random(rng, m, n_ue, rank_h)
    r2 = float(np.sum(np.abs(r) ** 2))
    inner = ArmijoOptions(max_iters=config.inner_steps, rel_tol=config.inner_rel_tol)

    trace: list[float] = []
    prev = np.inf
    for outer in range(config.outer_max):
        h_mat = h_pt.matrix()
        h_l1 = uh * _l1_term(h_mat, dicts.a_i, dicts.a_ue)
        b = coef * _fra_forward(phi1, phi2, l, h_mat @ s.T)
        c1 = r @ b.conj().T
        c2 = b @ b.conj().T

        def f_g(g):
            quad = r2 - 2 * np.real(np.vdot(g, c1)) + np.real(np.vdot(g, g @ c2))
            return quad + ug * _l1_term(g, dicts.a_bs, dicts.a_i) + h_l1

        def df_g(g):
            return (g @ c2 - c1) + _l1_egrad(g, dicts.a_bs, dicts.a_i, ug)

        res_g = armijo_minimize(f_g, df_g, g_pt, inner)
        g_pt = res_g.point
        g_mat = g_pt.matrix()
        trace.extend(res_g.objectives if not trace else res_g.objectives[1:])

        g_l1 = ug * _l1_term(g_mat, dicts.a_bs, dicts.a_i)

        def f_h(h):
            pred = coef * (g_mat @ _fra_forward(phi1, phi2, l, h @ s.T))
            val = float(np.sum(np.abs(r - pred) ** 2))
            return val + uh * _l1_term(h, dicts.a_i, dicts.a_ue) + g_l1

        def df_h(h):
            pred = coef * (g_mat @ _fra_forward(phi1, phi2, l, h @ s.T))
            back = coef * _fra_adjoint(phi1, phi2, l, g_mat.conj().T @ (pred - r))
            return back @ s.conj() + _l1_egrad(h, dicts.a_i, dicts.a_ue, uh)

        res_h = armijo_minimize(f_h, df_h, h_pt, inner)
        h_pt = res_h.point
        trace.extend(res_h.objectives[1:])

        current = trace[-1]
        if outer > 0 and prev - current <= config.outer_tol * max(1.0, abs(prev)):
            break
        prev = current
    return g_pt, h_pt, trace


def estimate_small_timescale(
    received: ReceivedBlock,
    g_hat: np.ndarray,
    schedule: PhaseSchedule,
    pilots: PilotSchedule,
    l: np.ndarray,
    dicts: Dictionaries,
    eps: float,
    rank_h: int,
    config: EstimationConfig,
    rng: np.random.Generator,
) -> tuple[FixedRankPoint, MinimizeResult]:
    """Fixed-rank minimization for one UE given the large-timescale estimate."""
    r = received.r.T
    s = pilots.s
    fwd, adj = _small_maps(schedule, l, eps, received.side)
    _, uh = _l1_weights(config, pilots.noise_var, dicts)

    def f(h):
        pred = g_hat @ fwd(h @ s.T)
        return float(np.sum(np.abs(r - pred) ** 2)) + uh * _l1_term(h, dicts.a_i, dicts.a_ue)

    def df(h):
        err = g_hat @ fwd(h @ s.T) - r
        return adj(g_hat.conj().T @ err) @ s.conj() + _l1_egrad(h, dicts.a_i, dicts.a_ue, uh)

    h0 = FixedRankPoint.random(rng, l.shape[0], s.shape[1], rank_h)
    opts = ArmijoOptions(max_iters=config.small_max_iters, rel_tol=config.small_rel_tol)
    res = armijo_minimize(f, df, h0, opts)
    return res.point, res


def nmse_kron(
    g: np.ndarray, h_k: np.ndarray, g_hat: np.ndarray, h_hat: np.ndarray
) -> float:
    """Normalized error of the Kronecker cascaded channel, computed from the
    factors without materializing the Kronecker products. Invariant under the
    scalar gauge (g/a, a*h)."""
    denom = float(np.sum(np.abs(h_k) ** 2) * np.sum(np.abs(g) ** 2))
    if denom == 0:
        raise ValueError("the true cascaded channel is zero")
    est = float(np.sum(np.abs(h_hat) ** 2) * np.sum(np.abs(g_hat) ** 2))
    cross = np.vdot(h_k, h_hat) * np.vdot(g, g_hat)
    num = denom + est - 2 * np.real(cross)
    return max(num, 0.0) / denom


def nmse_avg(
    channels_g: np.ndarray,
    channels_h: list[np.ndarray],
    g_hat: np.ndarray,
    h_hat: list[np.ndarray],
) -> float:
    """Mean cascaded-channel NMSE over all UEs."""
    if len(channels_h) < 1 or len(channels_h) != len(h_hat):
        raise ValueError("need one estimate per UE")
    return float(
        np.mean([nmse_kron(channels_g, h, g_hat, hh) for h, hh in zip(channels_h, h_hat)])
    )


def total_overhead(t_g: int, t_h: int, tau: int, k: int) -> int:
    """Pilot vectors consumed per large timescale by the two-timescale scheme."""
    return t_g + tau * k * t_h


def ls_overhead_bound(k_fle: int, k_fra: int, m: int, n_ue: int, tau: int) -> int:
    """Minimum pilot vectors per large timescale for plain least-squares
    estimation of every UE's cascaded channel."""
    return tau * (k_fle * m * n_ue + k_fra * m * m * n_ue)
