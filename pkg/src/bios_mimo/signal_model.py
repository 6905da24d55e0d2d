"""Pilot/phase schedules, effective surface coefficients, and uplink signals.

The uplink effective coefficient matrix of the surface is diagonal for
reflection-side UEs and a full matrix (phase layers around the inter-layer
coupling) for refraction-side UEs; the corresponding cascaded channels are
Khatri-Rao and Kronecker structured respectively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import FLE, FRA, SIDES

UNIT_MODULUS_TOL = 1e-12


@dataclass
class PhaseSchedule:
    """Per-pilot unit-modulus coefficient vectors of the two surface layers."""

    phi1: np.ndarray  # (T, M)
    phi2: np.ndarray  # (T, M)

    def __post_init__(self):
        self.phi1 = np.asarray(self.phi1, dtype=complex)
        self.phi2 = np.asarray(self.phi2, dtype=complex)
        if self.phi1.shape != self.phi2.shape or self.phi1.ndim != 2:
            raise ValueError("phi1 and phi2 must both be (T, M)")
        for name, arr in (("phi1", self.phi1), ("phi2", self.phi2)):
            if np.max(np.abs(np.abs(arr) - 1.0)) > UNIT_MODULUS_TOL:
                raise ValueError(f"{name} entries must have unit modulus")

    @property
    def n_pilots(self) -> int:
        return self.phi1.shape[0]


@dataclass
class PilotSchedule:
    """Unit-power pilot vectors and the pilot-to-noise ratio they are sent at."""

    s: np.ndarray  # (T, N_UE)
    pnr_db: float

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=complex)
        norms = np.linalg.norm(self.s, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise ValueError("every pilot vector must have unit power")

    @property
    def noise_var(self) -> float:
        return noise_var_from_pnr(self.pnr_db)


@dataclass
class ReceivedBlock:
    r: np.ndarray  # (T, N_BS)
    side: str
    ue_index: int

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=complex)
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")


def noise_var_from_pnr(pnr_db: float) -> float:
    """Noise variance for unit pilot power: PNR is 1/sigma^2."""
    return 10.0 ** (-pnr_db / 10.0)


def random_phase_schedule(
    rng: np.random.Generator, t: int, m: int, hold: int = 1
) -> PhaseSchedule:
    """Uniform unit-circle phases for both layers (quasi-omnidirectional).

    ``hold`` keeps each random draw for that many consecutive pilots; the
    default redraws every pilot, which maximizes measurement diversity.
    """
    if t < 1 or m < 1:
        raise ValueError("need t >= 1 and m >= 1")
    if hold < 1:
        raise ValueError("hold must be >= 1")
    n_blocks = -(-t // hold)
    phases = rng.uniform(0.0, 2 * np.pi, size=(2, n_blocks, m))
    idx = np.repeat(np.arange(n_blocks), hold)[:t]
    return PhaseSchedule(np.exp(1j * phases[0])[idx], np.exp(1j * phases[1])[idx])


def random_pilots(rng: np.random.Generator, t: int, n_ue: int, pnr_db: float) -> PilotSchedule:
    """Unit-modulus pilot entries scaled so every pilot vector has unit power."""
    phases = rng.uniform(0.0, 2 * np.pi, size=(t, n_ue))
    return PilotSchedule(np.exp(1j * phases) / np.sqrt(n_ue), pnr_db)


def _check_eps(eps: float):
    if not 0.0 < eps < 1.0:
        raise ValueError("power split must lie strictly inside (0, 1)")


def effective_phase_uplink(
    phi1_row: np.ndarray, phi2_row: np.ndarray, l: np.ndarray, eps: float, side: str
) -> np.ndarray:
    """Uplink effective coefficient matrix for one pilot slot.

    Reflection side: sqrt(eps) * diag(phi1). Refraction side:
    sqrt(1 - eps) * diag(phi1) @ l @ diag(phi2), a matrix without zero
    entries for generic coupling and phases.
    """
    _check_eps(eps)
    if side == FLE:
        return np.sqrt(eps) * np.diag(phi1_row)
    if side == FRA:
        return np.sqrt(1 - eps) * (phi1_row[:, None] * l * phi2_row[None, :])
    raise ValueError(f"side must be one of {SIDES}")


def effective_phase_downlink(
    phi_d1: np.ndarray, phi_d2: np.ndarray, l: np.ndarray, eps: float, side: str
) -> np.ndarray:
    """Downlink effective coefficient matrix.

    Reflection side: sqrt(eps) * diag(phi_d1). Refraction side:
    sqrt(1 - eps) * diag(phi_d2) @ l^H @ diag(phi_d1).
    """
    _check_eps(eps)
    if side == FLE:
        return np.sqrt(eps) * np.diag(phi_d1)
    if side == FRA:
        return np.sqrt(1 - eps) * (phi_d2[:, None] * l.conj().T * phi_d1[None, :])
    raise ValueError(f"side must be one of {SIDES}")


def uplink_received(
    g: np.ndarray,
    h_k: np.ndarray,
    eff_phase: np.ndarray,
    s_t: np.ndarray,
    noise_var: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """One received pilot vector r = g @ eff_phase @ h_k @ s + z."""
    if noise_var < 0:
        raise ValueError("noise variance must be >= 0")
    r = g @ (eff_phase @ (h_k @ s_t))
    if noise_var > 0:
        if rng is None:
            raise ValueError("an rng is required for noisy reception")
        n_bs = g.shape[0]
        z = np.sqrt(noise_var / 2) * (
            rng.standard_normal(n_bs) + 1j * rng.standard_normal(n_bs)
        )
        r = r + z
    return r


def simulate_uplink_block(
    g: np.ndarray,
    h_k: np.ndarray,
    schedule: PhaseSchedule,
    pilots: PilotSchedule,
    l: np.ndarray,
    eps: float,
    side: str,
    rng: np.random.Generator,
    ue_index: int = 0,
) -> ReceivedBlock:
    """Received pilots of one UE over a whole training block."""
    noise_var = pilots.noise_var
    rows = []
    for t in range(schedule.n_pilots):
        eff = effective_phase_uplink(schedule.phi1[t], schedule.phi2[t], l, eps, side)
        rows.append(uplink_received(g, h_k, eff, pilots.s[t], noise_var, rng))
    return ReceivedBlock(np.array(rows), side, ue_index)


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product of two matrices with equal column counts."""
    if a.shape[1] != b.shape[1]:
        raise ValueError("column counts must match for a Khatri-Rao product")
    # (ra, c) x (rb, c) -> (ra*rb, c) with column m = kron(a[:, m], b[:, m])
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def cascaded_fle(h_k: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Reflection-side cascaded channel h_k^T (Khatri-Rao) g, shape (N_UE*N_BS, M)."""
    return khatri_rao(h_k.T, g)


def cascaded_fra(h_k: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Refraction-side cascaded channel h_k^T (Kronecker) g, shape (N_UE*N_BS, M^2)."""
    if h_k.shape[0] != g.shape[1]:
        raise ValueError("h_k rows must match g columns")
    return np.kron(h_k.T, g)


def vec(x: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return x.ravel(order="F")


def ls_sensing_row(
    s_t: np.ndarray,
    phi1_row: np.ndarray,
    phi2_row: np.ndarray,
    l: np.ndarray,
    eps: float,
    side: str,
    n_bs: int,
) -> np.ndarray:
    """Per-pilot measurement operator acting on the vectorized cascaded channel.

    Returns the (N_BS x N_UE*N_BS*M) block for the reflection side or the
    (N_BS x N_UE*N_BS*M^2) block for the refraction side; applying it to
    vec(J) reproduces the noiseless received pilot.
    """
    _check_eps(eps)
    base = np.kron(s_t[None, :], np.eye(n_bs))
    if side == FLE:
        return np.sqrt(eps) * np.kron(phi1_row[None, :], base)
    if side == FRA:
        v = vec(phi1_row[:, None] * l * phi2_row[None, :])
        return np.sqrt(1 - eps) * np.kron(v[None, :], base)
    raise ValueError(f"side must be one of {SIDES}")
