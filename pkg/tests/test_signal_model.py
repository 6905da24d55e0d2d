import numpy as np
import pytest

from bios_mimo import geometry as geo
from bios_mimo import signal_model as sm


@pytest.fixture
def toy():
    g = geo.ArrayGeometry(n_bs=4, n_ue=2, m_x=3, m_y=2)
    rng = np.random.default_rng(0)
    m = g.m
    return dict(
        geometry=g,
        m=m,
        l=geo.near_field_l(g),
        g_mat=rng.standard_normal((4, m)) + 1j * rng.standard_normal((4, m)),
        h_mat=rng.standard_normal((m, 2)) + 1j * rng.standard_normal((m, 2)),
        rng=rng,
    )


def test_phase_schedule_invariants():
    rng = np.random.default_rng(1)
    sched = sm.random_phase_schedule(rng, 16, 6)
    assert np.max(np.abs(np.abs(sched.phi1) - 1)) < 1e-12
    assert np.max(np.abs(np.abs(sched.phi2) - 1)) < 1e-12
    with pytest.raises(ValueError):
        sm.PhaseSchedule(np.full((2, 3), 0.5 + 0j), np.ones((2, 3), complex))


def test_phase_schedule_statistics_and_determinism():
    sched = sm.random_phase_schedule(np.random.default_rng(3), 60, 40)
    mean = np.abs(np.mean(sched.phi1))
    assert mean < 3 / np.sqrt(60 * 40)
    again = sm.random_phase_schedule(np.random.default_rng(3), 60, 40)
    np.testing.assert_array_equal(sched.phi1, again.phi1)


def test_phase_schedule_hold_blocks():
    sched = sm.random_phase_schedule(np.random.default_rng(4), 7, 5, hold=3)
    np.testing.assert_array_equal(sched.phi1[0], sched.phi1[1])
    np.testing.assert_array_equal(sched.phi1[1], sched.phi1[2])
    assert not np.allclose(sched.phi1[2], sched.phi1[3])
    np.testing.assert_array_equal(sched.phi2[3], sched.phi2[5])
    assert sched.n_pilots == 7
    with pytest.raises(ValueError):
        sm.random_phase_schedule(np.random.default_rng(4), 7, 5, hold=0)


def test_pilots_and_pnr():
    pil = sm.random_pilots(np.random.default_rng(2), 10, 8, 20.0)
    np.testing.assert_allclose(np.linalg.norm(pil.s, axis=1), np.ones(10), atol=1e-12)
    assert pil.noise_var == pytest.approx(0.01)
    assert sm.noise_var_from_pnr(0.0) == pytest.approx(1.0)


def test_effective_phase_uplink(toy):
    m = toy["m"]
    ones = np.ones(m, dtype=complex)
    fle = sm.effective_phase_uplink(ones, ones, toy["l"], 0.5, "fle")
    np.testing.assert_allclose(fle, np.eye(m) / np.sqrt(2), atol=1e-12)

    g11 = geo.ArrayGeometry(n_bs=1, n_ue=1, m_x=1, m_y=1, layer_gap=0.03, element_size=0.015)
    l11 = geo.near_field_l(g11)
    fra = sm.effective_phase_uplink(np.ones(1, complex), np.ones(1, complex), l11, 0.5, "fra")
    assert fra[0, 0] == pytest.approx(0.28209, rel=1e-4)

    rng = np.random.default_rng(0)
    phi1 = np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    phi2 = np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    full = sm.effective_phase_uplink(phi1, phi2, toy["l"], 0.5, "fra")
    assert np.min(np.abs(full)) > 0

    with pytest.raises(ValueError):
        sm.effective_phase_uplink(ones, ones, toy["l"], 1.2, "fle")


def test_effective_phase_downlink(toy):
    m = toy["m"]
    ones = np.ones(m, dtype=complex)
    fle = sm.effective_phase_downlink(ones, ones, toy["l"], 0.5, "fle")
    np.testing.assert_allclose(fle, np.eye(m) / np.sqrt(2), atol=1e-12)
    fra = sm.effective_phase_downlink(ones, ones, toy["l"], 0.36, "fra")
    np.testing.assert_allclose(fra, np.sqrt(0.64) * toy["l"].conj().T, atol=1e-12)

    # constructed-matrix reciprocity: conjugated phases give the adjoint
    rng = np.random.default_rng(4)
    phi1 = np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    phi2 = np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    up = sm.effective_phase_uplink(phi1, phi2, toy["l"], 0.5, "fra")
    down = sm.effective_phase_downlink(phi1.conj(), phi2.conj(), toy["l"], 0.5, "fra")
    np.testing.assert_allclose(down, up.conj().T, atol=1e-12)


def test_uplink_received(toy):
    # scalar chain: all quantities 1x1
    r = sm.uplink_received(
        np.array([[2.0 + 0j]]), np.array([[3.0 + 0j]]), np.array([[0.5 + 0j]]),
        np.array([1.0 + 0j]), 0.0,
    )
    assert r[0] == pytest.approx(3.0)

    rng = np.random.default_rng(8)
    zs = []
    for _ in range(10_000):
        z = sm.uplink_received(
            np.zeros((4, toy["m"])), toy["h_mat"], np.eye(toy["m"]),
            np.array([1.0, 0.0], complex), 0.09, rng,
        )
        zs.append(np.sum(np.abs(z) ** 2))
    assert np.mean(zs) == pytest.approx(4 * 0.09, rel=0.05)

    a = sm.uplink_received(
        toy["g_mat"], toy["h_mat"], np.eye(toy["m"]),
        np.array([1.0, 0.0], complex), 0.1, np.random.default_rng(5),
    )
    b = sm.uplink_received(
        toy["g_mat"], toy["h_mat"], np.eye(toy["m"]),
        np.array([1.0, 0.0], complex), 0.1, np.random.default_rng(5),
    )
    np.testing.assert_array_equal(a, b)

    with pytest.raises(ValueError):
        sm.uplink_received(toy["g_mat"], toy["h_mat"], np.eye(toy["m"]),
                           np.array([1.0, 0.0], complex), 0.1, None)


def _random_state(toy, seed):
    rng = np.random.default_rng(seed)
    m = toy["m"]
    s = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    s /= np.linalg.norm(s)
    phi1 = np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    phi2 = np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    return s, phi1, phi2


def test_cascaded_fle_identity(toy):
    eps = 0.41
    s, phi1, _ = _random_state(toy, 1)
    j = sm.cascaded_fle(toy["h_mat"], toy["g_mat"])
    assert j.shape == (8, toy["m"])
    direct = np.sqrt(eps) * toy["g_mat"] @ np.diag(phi1) @ toy["h_mat"] @ s
    via = np.sqrt(eps) * np.kron(s[None, :], np.eye(4)) @ j @ phi1
    assert np.linalg.norm(direct - via) / np.linalg.norm(direct) < 1e-12

    # column-wise gauge leaves the product unchanged
    c = 0.3 - 1.7j
    h2, g2 = toy["h_mat"].copy(), toy["g_mat"].copy()
    h2[3, :] *= c
    g2[:, 3] /= c
    np.testing.assert_allclose(sm.cascaded_fle(h2, g2), j, atol=1e-12)

    with pytest.raises(ValueError):
        sm.cascaded_fle(toy["h_mat"][:4], toy["g_mat"])


def test_cascaded_fra_identity(toy):
    eps = 0.41
    s, phi1, phi2 = _random_state(toy, 2)
    j = sm.cascaded_fra(toy["h_mat"], toy["g_mat"])
    assert j.size == toy["m"] * sm.cascaded_fle(toy["h_mat"], toy["g_mat"]).size
    x = np.diag(phi1) @ toy["l"] @ np.diag(phi2)
    direct = np.sqrt(1 - eps) * toy["g_mat"] @ x @ toy["h_mat"] @ s
    via = np.sqrt(1 - eps) * np.kron(s[None, :], np.eye(4)) @ j @ sm.vec(x)
    assert np.linalg.norm(direct - via) / np.linalg.norm(direct) < 1e-12

    a = -2.2 + 0.9j
    np.testing.assert_allclose(
        sm.cascaded_fra(a * toy["h_mat"], toy["g_mat"] / a), j, atol=1e-10
    )


def test_ls_sensing_rows(toy):
    eps = 0.5
    s, phi1, phi2 = _random_state(toy, 3)
    j_fle = sm.cascaded_fle(toy["h_mat"], toy["g_mat"])
    row = sm.ls_sensing_row(s, phi1, phi2, toy["l"], eps, "fle", 4)
    direct = np.sqrt(eps) * toy["g_mat"] @ np.diag(phi1) @ toy["h_mat"] @ s
    np.testing.assert_allclose(row @ sm.vec(j_fle), direct, atol=1e-12)

    j_fra = sm.cascaded_fra(toy["h_mat"], toy["g_mat"])
    row2 = sm.ls_sensing_row(s, phi1, phi2, toy["l"], eps, "fra", 4)
    assert row2.shape == (4, toy["m"] ** 2 * 2 * 4)
    direct2 = np.sqrt(1 - eps) * toy["g_mat"] @ np.diag(phi1) @ toy["l"] @ np.diag(phi2) @ toy["h_mat"] @ s
    np.testing.assert_allclose(row2 @ sm.vec(j_fra), direct2, atol=1e-12)


def test_stacked_fle_rows_full_rank():
    # M=3 (3x1), N_UE=2, N_BS=4: full column rank needs T >= M * N_UE
    g = geo.ArrayGeometry(n_bs=4, n_ue=2, m_x=3, m_y=1)
    l = geo.near_field_l(g)
    rng = np.random.default_rng(9)
    t = g.m * 2
    blocks = []
    for _ in range(t):
        s = np.exp(1j * rng.uniform(0, 2 * np.pi, 2)) / np.sqrt(2)
        phi1 = np.exp(1j * rng.uniform(0, 2 * np.pi, g.m))
        blocks.append(sm.ls_sensing_row(s, phi1, phi1, l, 0.5, "fle", 4))
    op = np.vstack(blocks)
    assert np.linalg.matrix_rank(op) == g.m * 2 * 4


def test_simulate_uplink_block(toy):
    rng = np.random.default_rng(12)
    sched = sm.random_phase_schedule(rng, 6, toy["m"])
    pilots = sm.random_pilots(rng, 6, 2, 30.0)
    blk = sm.simulate_uplink_block(
        toy["g_mat"], toy["h_mat"], sched, pilots, toy["l"], 0.5, "fra", rng, ue_index=1
    )
    assert blk.r.shape == (6, 4)
    assert blk.side == "fra" and blk.ue_index == 1
