"""Joint BS precoding and surface phase optimization.

Sum-rate maximization is handled through its weighted-MMSE reformulation:
closed-form combiner/weight updates, a closed-form precoder from the KKT
conditions of the power-constrained subproblem, and cyclic coordinate descent
with closed-form single-phase minimizers for both surface layers. The scalar
freed by the precoder normalization is folded into the combiners so the
tracked objective is non-increasing after every block update.

Modes: "bios" optimizes both layers independently; "ios" slaves the second
layer's phases to the first (coupled reflection/refraction); "irs" puts all
power on the reflection side, so refraction-side UEs see a zero channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import FLE, FRA, ChannelRealization

MODES = ("bios", "ios", "irs")
CD_ZERO_TOL = 1e-14


@dataclass
class BeamformerConfig:
    n_s: int = 1
    outer_tol: float = 1e-4
    outer_max: int = 100
    cd_sweeps: int = 1
    mode: str = "bios"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.n_s < 1:
            raise ValueError("n_s must be >= 1")


@dataclass
class BeamformerState:
    f: np.ndarray  # (N_BS, K * N_s), trace(f f^H) == 1
    w: list[np.ndarray]  # per UE (N_UE, N_s)
    psi: list[np.ndarray]  # per UE (N_s, N_s), Hermitian positive definite
    phi_d1: np.ndarray
    phi_d2: np.ndarray
    sigma_d2: float
    n_s: int
    eps_used: float
    mode: str
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0


@dataclass
class RateReport:
    per_ue: list[float]
    sum_rate: float
    overhead_factor: float


def _logdet_hpd(a: np.ndarray) -> float:
    """log|A| of a Hermitian positive (semi)definite matrix."""
    eig = np.linalg.eigvalsh((a + a.conj().T) / 2)
    return float(np.sum(np.log(np.maximum(eig, 1e-300))))


def _blkdiag(mats: list[np.ndarray]) -> np.ndarray:
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols), dtype=complex)
    i = j = 0
    for m in mats:
        out[i : i + m.shape[0], j : j + m.shape[1]] = m
        i += m.shape[0]
        j += m.shape[1]
    return out


def effective_channel(
    h_k: np.ndarray,
    phi_d1: np.ndarray,
    phi_d2: np.ndarray,
    l: np.ndarray,
    g: np.ndarray,
    eps: float,
    side: str,
) -> np.ndarray:
    """Downlink BS-to-UE channel through the surface, shape (N_UE, N_BS).

    eps may be 1 here (reflection-only operation), in which case the
    refraction-side channel is identically zero.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("power split must lie in (0, 1]")
    gh = g.conj().T  # (M, N_BS)
    if side == FLE:
        return np.sqrt(eps) * (h_k.conj().T @ (phi_d1[:, None] * gh))
    if side == FRA:
        inner = l.conj().T @ (phi_d1[:, None] * gh)
        return np.sqrt(1.0 - eps) * (h_k.conj().T @ (phi_d2[:, None] * inner))
    raise ValueError(f"unknown side {side!r}")


def effective_channels(
    channels: ChannelRealization,
    phi_d1: np.ndarray,
    phi_d2: np.ndarray,
    eps: float,
) -> list[np.ndarray]:
    return [
        effective_channel(
            channels.h[k], phi_d1, phi_d2, channels.l, channels.g, eps, channels.side(k)
        )
        for k in range(channels.n_ues)
    ]


def mse_matrix(
    k: int, h_e: list[np.ndarray], f: np.ndarray, w_k: np.ndarray, sigma_d2: float, n_s: int
) -> np.ndarray:
    """MSE matrix of UE k for the current precoder and its combiner."""
    hf = h_e[k] @ f
    hf_k = hf[:, k * n_s : (k + 1) * n_s]
    a = np.eye(n_s) - w_k.conj().T @ hf_k
    cov = hf @ hf.conj().T - hf_k @ hf_k.conj().T + sigma_d2 * np.eye(hf.shape[0])
    e = a @ a.conj().T + w_k.conj().T @ cov @ w_k
    return (e + e.conj().T) / 2


def wmmse_objective(
    h_e: list[np.ndarray],
    f: np.ndarray,
    w: list[np.ndarray],
    psi: list[np.ndarray],
    sigma_d2: float,
    n_s: int,
) -> float:
    """Sum of trace(psi_k E_k) - log|psi_k| over the UEs."""
    total = 0.0
    for k in range(len(h_e)):
        e_k = mse_matrix(k, h_e, f, w[k], sigma_d2, n_s)
        total += float(np.real(np.trace(psi[k] @ e_k))) - _logdet_hpd(psi[k])
    return total


def update_w_psi(
    h_e: list[np.ndarray], f: np.ndarray, sigma_d2: float, n_s: int
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Closed-form MMSE combiners and inverse-MSE weights."""
    if sigma_d2 <= 0:
        raise ValueError("downlink noise variance must be positive")
    w, psi = [], []
    for k in range(len(h_e)):
        hf = h_e[k] @ f
        hf_k = hf[:, k * n_s : (k + 1) * n_s]
        t = hf @ hf.conj().T + sigma_d2 * np.eye(hf.shape[0])
        w_k = np.linalg.solve(t, hf_k)
        e_k = mse_matrix(k, h_e, f, w_k, sigma_d2, n_s)
        try:
            psi_k = np.linalg.inv(e_k)
        except np.linalg.LinAlgError:
            psi_k = np.linalg.inv(e_k + 1e-12 * np.eye(n_s))
        w.append(w_k)
        psi.append((psi_k + psi_k.conj().T) / 2)
    return w, psi


def update_f(
    h_e: list[np.ndarray],
    w: list[np.ndarray],
    psi: list[np.ndarray],
    sigma_d2: float,
    f_prev: np.ndarray,
) -> tuple[np.ndarray, float]:
    """KKT precoder, normalized to unit transmit power.

    Returns the normalized precoder and the norm of the unnormalized
    solution; folding that scalar into the combiners keeps the WMMSE
    objective value of the rescaled system identical to the unconstrained
    minimum just attained, hence non-increasing.
    """
    he = np.vstack(h_e)
    w_blk = _blkdiag(w)
    psi_blk = _blkdiag(psi)
    t1 = he.conj().T @ w_blk  # (N_BS, K*N_s)
    a = t1 @ psi_blk @ t1.conj().T
    c = sigma_d2 * float(np.real(np.trace(psi_blk @ (w_blk.conj().T @ w_blk))))
    n_bs = he.shape[1]
    try:
        f_bar = np.linalg.solve(a + c * np.eye(n_bs), t1 @ psi_blk)
    except np.linalg.LinAlgError:
        return f_prev, 1.0
    nrm = float(np.linalg.norm(f_bar))
    if nrm == 0:
        return f_prev, 1.0
    return f_bar / nrm, nrm


def build_xi_rho(
    channels: ChannelRealization,
    phi_d2: np.ndarray,
    w: list[np.ndarray],
    psi: list[np.ndarray],
    f: np.ndarray,
    eps: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic form (Xi, rho) of the objective in the first layer's phases."""
    rows = []
    for k in range(channels.n_ues):
        if channels.side(k) == FLE:
            rows.append(np.sqrt(eps) * channels.h[k].conj().T)
        else:
            rows.append(
                np.sqrt(1.0 - eps)
                * (channels.h[k].conj().T @ (phi_d2[:, None] * channels.l.conj().T))
            )
    h_phi = np.vstack(rows).conj().T  # (M, K*N_UE)
    w_blk = _blkdiag(w)
    psi_blk = _blkdiag(psi)
    t2 = h_phi @ w_blk  # (M, K*N_s)
    part1 = t2 @ psi_blk @ t2.conj().T
    gf = channels.g.conj().T @ f  # (M, K*N_s)
    xi = part1 * (gf @ gf.conj().T).T
    rho = np.einsum("ij,ji->i", t2 @ psi_blk, f.conj().T @ channels.g)
    return (xi + xi.conj().T) / 2, rho


def build_xi_rho_fra(
    channels: ChannelRealization,
    phi_d1: np.ndarray,
    w: list[np.ndarray],
    psi: list[np.ndarray],
    f: np.ndarray,
    eps: float,
    n_s: int,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Quadratic form of the objective in the second layer's phases.

    Only refraction-side UEs depend on this layer; returns None when there
    are none.
    """
    k_fle = channels.k_fle
    if k_fle >= channels.n_ues:
        return None
    rows = [np.sqrt(1.0 - eps) * channels.h[k].conj().T for k in range(k_fle, channels.n_ues)]
    h_phi = np.vstack(rows).conj().T  # (M, K_fra*N_UE)
    w_fra = _blkdiag(w[k_fle:])
    psi_fra = _blkdiag(psi[k_fle:])
    f_fra = f[:, k_fle * n_s :]
    t3 = h_phi @ w_fra
    part1 = t3 @ psi_fra @ t3.conj().T
    gf = channels.g.conj().T @ f
    core = gf @ gf.conj().T  # G^H F F^H G with the full precoder
    inner = channels.l.conj().T @ (phi_d1[:, None] * core * phi_d1.conj()[None, :]) @ channels.l
    xi = part1 * inner.T
    right = (f_fra.conj().T @ channels.g) * phi_d1.conj()[None, :] @ channels.l
    rho = np.einsum("ij,ji->i", t3 @ psi_fra, right)
    return (xi + xi.conj().T) / 2, rho


def cd_update_phi(phi: np.ndarray, xi: np.ndarray, rho: np.ndarray, m: int) -> complex:
    """Closed-form minimizer of the one-phase restriction; keeps the previous
    value when the linear coefficient vanishes (any phase is then optimal)."""
    num = xi[m] @ phi - xi[m, m] * phi[m] - rho[m]
    mag = abs(num)
    if mag < CD_ZERO_TOL:
        return phi[m]
    return -num / mag


def cd_sweep(phi: np.ndarray, xi: np.ndarray, rho: np.ndarray, sweeps: int = 1) -> np.ndarray:
    """Cyclic coordinate descent over all phases; each update attains the
    global minimum of its one-variable restriction, so the quadratic form is
    non-increasing."""
    phi = phi.copy()
    for _ in range(sweeps):
        for m in range(phi.shape[0]):
            phi[m] = cd_update_phi(phi, xi, rho, m)
    return phi


def quadratic_phase_objective(phi: np.ndarray, xi: np.ndarray, rho: np.ndarray) -> float:
    """phi^H Xi phi - 2 Re(rho^H phi); the phase-dependent part of the
    WMMSE objective."""
    return float(np.real(np.vdot(phi, xi @ phi)) - 2 * np.real(np.vdot(rho, phi)))


def random_unit_phases(rng: np.random.Generator, m: int) -> np.ndarray:
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=m))


def wmmse_cd_solve(
    channels: ChannelRealization,
    eps: float,
    sigma_d2: float,
    config: BeamformerConfig,
    rng: np.random.Generator,
) -> BeamformerState:
    """Alternating optimization of combiners/weights, precoder, and the two
    phase layers until the objective stalls.

    In "bios" mode the objective trace is non-increasing across every block.
    The "ios" mode re-slaves the second layer to the first after each sweep
    (a projection onto the coupled-phase constraint, not a descent step), and
    "irs" fixes eps = 1 so the second layer is immaterial.
    """
    k = channels.n_ues
    m = channels.l.shape[0]
    eps_used = 1.0 if config.mode == "irs" else eps
    n_s = config.n_s

    phi_d1 = random_unit_phases(rng, m)
    phi_d2 = phi_d1.copy() if config.mode == "ios" else random_unit_phases(rng, m)
    f = rng.standard_normal((channels.g.shape[0], k * n_s)) + 1j * rng.standard_normal(
        (channels.g.shape[0], k * n_s)
    )
    f /= np.linalg.norm(f)

    h_e = effective_channels(channels, phi_d1, phi_d2, eps_used)
    trace: list[float] = []
    prev_outer = np.inf
    iterations = 0
    for it in range(config.outer_max):
        iterations = it + 1
        w, psi = update_w_psi(h_e, f, sigma_d2, n_s)
        trace.append(wmmse_objective(h_e, f, w, psi, sigma_d2, n_s))

        f, f_scale = update_f(h_e, w, psi, sigma_d2, f)
        w = [f_scale * w_k for w_k in w]
        trace.append(wmmse_objective(h_e, f, w, psi, sigma_d2, n_s))

        xi, rho = build_xi_rho(channels, phi_d2, w, psi, f, eps_used)
        phi_d1 = cd_sweep(phi_d1, xi, rho, config.cd_sweeps)
        if config.mode == "ios":
            phi_d2 = phi_d1.copy()
        h_e = effective_channels(channels, phi_d1, phi_d2, eps_used)
        trace.append(wmmse_objective(h_e, f, w, psi, sigma_d2, n_s))

        if config.mode == "bios" and eps_used < 1.0:
            fra_form = build_xi_rho_fra(channels, phi_d1, w, psi, f, eps_used, n_s)
            if fra_form is not None:
                xi2, rho2 = fra_form
                phi_d2 = cd_sweep(phi_d2, xi2, rho2, config.cd_sweeps)
                h_e = effective_channels(channels, phi_d1, phi_d2, eps_used)
                trace.append(wmmse_objective(h_e, f, w, psi, sigma_d2, n_s))

        current = trace[-1]
        if np.isfinite(prev_outer) and prev_outer - current <= config.outer_tol * max(
            1.0, abs(prev_outer)
        ):
            break
        prev_outer = current

    return BeamformerState(
        f=f,
        w=w,
        psi=psi,
        phi_d1=phi_d1,
        phi_d2=phi_d2,
        sigma_d2=sigma_d2,
        n_s=n_s,
        eps_used=eps_used,
        mode=config.mode,
        objective_trace=trace,
        iterations=iterations,
    )


def sum_rate(
    state: BeamformerState,
    channels: ChannelRealization,
    t_tot: int = 0,
    y_large: int | None = None,
) -> RateReport:
    """Effective per-UE rates under the optimized precoder and phases,
    discounted by the share of the large timescale spent on training."""
    if t_tot < 0:
        raise ValueError("t_tot must be >= 0")
    if y_large is None:
        factor = 1.0
        if t_tot > 0:
            raise ValueError("a large-timescale length is needed to discount overhead")
    else:
        if t_tot > y_large:
            raise ValueError("training overhead exceeds the large timescale")
        factor = 1.0 - t_tot / y_large
    h_e = effective_channels(channels, state.phi_d1, state.phi_d2, state.eps_used)
    n_s = state.n_s
    rates = []
    for k in range(channels.n_ues):
        hf = h_e[k] @ state.f
        hf_k = hf[:, k * n_s : (k + 1) * n_s]
        lam = hf @ hf.conj().T - hf_k @ hf_k.conj().T + state.sigma_d2 * np.eye(hf.shape[0])
        inner = np.eye(n_s) + hf_k.conj().T @ np.linalg.solve(lam, hf_k)
        rates.append(factor * _logdet_hpd(inner) / np.log(2.0))
    return RateReport(per_ue=rates, sum_rate=float(np.sum(rates)), overhead_factor=factor)
