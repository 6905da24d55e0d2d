import numpy as np
import pytest

from bios_mimo import estimation as est
from bios_mimo import geometry as geo
from bios_mimo import signal_model as sm


def _rand_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def toy():
    g = geo.ArrayGeometry(n_bs=4, n_ue=2, m_x=2, m_y=2)
    rng = np.random.default_rng(0)
    m = g.m
    t = 14
    sched = sm.random_phase_schedule(rng, t, m)
    pilots = sm.random_pilots(rng, t, 2, 20.0)
    g_mat = _rand_complex(rng, (4, m))
    h_mat = _rand_complex(rng, (m, 2))
    l = geo.near_field_l(g)
    received = np.array(
        [
            sm.uplink_received(
                g_mat, h_mat,
                sm.effective_phase_uplink(sched.phi1[i], sched.phi2[i], l, 0.5, "fra"),
                pilots.s[i], 0.0,
            )
            for i in range(t)
        ]
    )
    return dict(
        geometry=g, m=m, l=l, dicts=geo.build_dictionaries(g), sched=sched,
        pilots=pilots, g_mat=g_mat, h_mat=h_mat, received=received, rng=rng,
    )


def test_sign_matrix(toy):
    d = geo.build_dictionaries(toy["geometry"], geo.DictionaryConfig(bios_span="full"))
    x = d.a_bs @ np.full((4, toy["m"]), 2.0) @ d.a_i.conj().T
    y = est.sign_matrix(x, d.a_bs, d.a_i)
    np.testing.assert_allclose(y, np.ones((4, toy["m"])), atol=1e-9)
    assert np.all(est.sign_matrix(np.zeros((4, toy["m"])), d.a_bs, d.a_i) == 0)
    rng = np.random.default_rng(1)
    y2 = est.sign_matrix(_rand_complex(rng, (4, toy["m"])), d.a_bs, d.a_i)
    mags = np.abs(y2)
    assert np.all((mags < 1e-12) | (np.abs(mags - 1) < 1e-12))


def test_objective_large_examples(toy):
    val = est.objective_large(
        toy["g_mat"], toy["h_mat"], toy["received"], toy["sched"], toy["pilots"],
        toy["l"], 0.5, 0.0, 0.0, toy["dicts"],
    )
    assert val == pytest.approx(0.0, abs=1e-18)

    zeros = est.objective_large(
        np.zeros_like(toy["g_mat"]), np.zeros_like(toy["h_mat"]), toy["received"],
        toy["sched"], toy["pilots"], toy["l"], 0.5, 0.0, 0.0, toy["dicts"],
    )
    assert zeros == pytest.approx(np.sum(np.abs(toy["received"]) ** 2))

    a = 1.7 - 0.4j
    gauged = est.objective_large(
        toy["g_mat"] / a, a * toy["h_mat"], toy["received"], toy["sched"],
        toy["pilots"], toy["l"], 0.5, 0.0, 0.0, toy["dicts"],
    )
    assert gauged == pytest.approx(0.0, abs=1e-15)


def _fd_assert(f, egrad, x, rng, n=5, tol=1e-5):
    for _ in range(n):
        d = _rand_complex(rng, x.shape)
        d /= np.linalg.norm(d)
        h = 1e-6 * max(1.0, np.linalg.norm(x))
        numeric = (f(x + h * d) - f(x - h * d)) / (2 * h)
        analytic = 2 * np.real(np.vdot(egrad(x), d))
        assert abs(numeric - analytic) / max(abs(numeric), 1e-12) < tol


def test_gradients_match_finite_differences(toy):
    rng = np.random.default_rng(2)
    args = (toy["received"], toy["sched"], toy["pilots"], toy["l"], 0.5)
    ug, uh = 0.4, 0.3
    h_fixed = toy["h_mat"] + 0.2 * _rand_complex(rng, toy["h_mat"].shape)
    _fd_assert(
        lambda g: est.objective_large(g, h_fixed, *args, ug, uh, toy["dicts"]),
        lambda g: est.egrad_g_large(g, h_fixed, *args, ug, toy["dicts"]),
        toy["g_mat"] + 0.2 * _rand_complex(rng, toy["g_mat"].shape), rng,
    )
    g_fixed = toy["g_mat"] + 0.2 * _rand_complex(rng, toy["g_mat"].shape)
    _fd_assert(
        lambda h: est.objective_large(g_fixed, h, *args, ug, uh, toy["dicts"]),
        lambda h: est.egrad_h_large(g_fixed, h, *args, uh, toy["dicts"]),
        toy["h_mat"] + 0.2 * _rand_complex(rng, toy["h_mat"].shape), rng,
    )
    for side in ("fle", "fra"):
        _fd_assert(
            lambda h: est.objective_small(
                h, g_fixed, toy["received"], toy["sched"], toy["pilots"], toy["l"],
                0.5, side, uh, toy["dicts"],
            ),
            lambda h: est.egrad_h_small(
                h, g_fixed, toy["received"], toy["sched"], toy["pilots"], toy["l"],
                0.5, side, uh, toy["dicts"],
            ),
            toy["h_mat"] + 0.2 * _rand_complex(rng, toy["h_mat"].shape), rng,
        )


def test_gradient_zero_at_noiseless_truth(toy):
    args = (toy["received"], toy["sched"], toy["pilots"], toy["l"], 0.5)
    g_grad = est.egrad_g_large(toy["g_mat"], toy["h_mat"], *args, 0.0, toy["dicts"])
    h_grad = est.egrad_h_large(toy["g_mat"], toy["h_mat"], *args, 0.0, toy["dicts"])
    assert np.linalg.norm(g_grad) < 1e-10
    assert np.linalg.norm(h_grad) < 1e-10
    s_grad = est.egrad_h_small(
        toy["h_mat"], toy["g_mat"], toy["received"], toy["sched"], toy["pilots"],
        toy["l"], 0.5, "fra", 0.0, toy["dicts"],
    )
    assert np.linalg.norm(s_grad) < 1e-10


def test_small_fra_gradient_specializes_large(toy):
    """With identical schedules and data, the refraction-side small-timescale
    gradient coincides with the large-timescale gradient in h."""
    rng = np.random.default_rng(3)
    h = toy["h_mat"] + 0.3 * _rand_complex(rng, toy["h_mat"].shape)
    a = est.egrad_h_small(
        h, toy["g_mat"], toy["received"], toy["sched"], toy["pilots"], toy["l"],
        0.5, "fra", 0.25, toy["dicts"],
    )
    b = est.egrad_h_large(
        toy["g_mat"], h, toy["received"], toy["sched"], toy["pilots"], toy["l"],
        0.5, 0.25, toy["dicts"],
    )
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_forward_adjoint_pairing(toy):
    rng = np.random.default_rng(4)
    x = _rand_complex(rng, (toy["m"], 14))
    y = _rand_complex(rng, (toy["m"], 14))
    fwd = est._fra_forward(toy["sched"].phi1, toy["sched"].phi2, toy["l"], x)
    adj = est._fra_adjoint(toy["sched"].phi1, toy["sched"].phi2, toy["l"], y)
    assert np.vdot(y, fwd) == pytest.approx(np.vdot(adj, x), rel=1e-12)


def _noiseless_block(rng, geometry, l, eps, t, side, g_mat, h_mat):
    sched = sm.random_phase_schedule(rng, t, geometry.m)
    pilots = sm.random_pilots(rng, t, geometry.n_ue, 40.0)
    rows = [
        sm.uplink_received(
            g_mat, h_mat,
            sm.effective_phase_uplink(sched.phi1[i], sched.phi2[i], l, eps, side),
            pilots.s[i], 0.0,
        )
        for i in range(t)
    ]
    return sm.ReceivedBlock(np.array(rows), side, 0), sched, pilots


def test_large_timescale_noiseless_toy():
    g = geo.ArrayGeometry(n_bs=2, n_ue=2, m_x=2, m_y=2)
    l = geo.near_field_l(g)
    dicts = geo.build_dictionaries(g)
    rng = np.random.default_rng(6)
    ch = geo.draw_channel_set(rng, g, k_fle=0, k_fra=1, p=1, q=1)
    block, sched, pilots = _noiseless_block(rng, g, l, 0.5, 60, "fra", ch.g, ch.h[0])
    cfg = est.EstimationConfig(
        t_g=60, t_h=10, upsilon_g=0.0, upsilon_h=0.0,
        outer_max=150, outer_tol=1e-12, inner_steps=25, inner_rel_tol=1e-12,
    )
    g_pt, h_pt, trace = est.estimate_large_timescale(
        block, sched, pilots, l, dicts, 0.5, 1, 1, cfg, rng
    )
    assert est.nmse_kron(ch.g, ch.h[0], g_pt.matrix(), h_pt.matrix()) < 1e-4
    assert np.all(np.diff(trace) <= 1e-9 * np.maximum(1, np.abs(trace[:-1])))

    bad = sm.ReceivedBlock(block.r, "fle", 0)
    with pytest.raises(ValueError):
        est.estimate_large_timescale(bad, sched, pilots, l, dicts, 0.5, 1, 1, cfg, rng)


def test_small_timescale_noiseless_and_gauge():
    g = geo.ArrayGeometry(n_bs=2, n_ue=2, m_x=2, m_y=2)
    l = geo.near_field_l(g)
    dicts = geo.build_dictionaries(g)
    rng = np.random.default_rng(7)
    ch = geo.draw_channel_set(rng, g, k_fle=1, k_fra=1, p=1, q=1)
    cfg = est.EstimationConfig(
        t_g=60, t_h=40, upsilon_g=0.0, upsilon_h=0.0,
        small_max_iters=400, small_rel_tol=1e-13,
    )
    for side, k in (("fle", 0), ("fra", 1)):
        block, sched, pilots = _noiseless_block(rng, g, l, 0.5, 40, side, ch.g, ch.h[k])
        h_pt, _ = est.estimate_small_timescale(
            block, ch.g, sched, pilots, l, dicts, 0.5, 1, cfg, rng
        )
        assert est.nmse_kron(ch.g, ch.h[k], ch.g, h_pt.matrix()) < 1e-4

        # a rescaled large-timescale estimate leaves the cascaded product intact
        h_pt2, _ = est.estimate_small_timescale(
            block, ch.g / (2.0 - 1.0j), sched, pilots, l, dicts, 0.5, 1, cfg, rng
        )
        assert est.nmse_kron(ch.g, ch.h[k], ch.g / (2.0 - 1.0j), h_pt2.matrix()) < 1e-4


def test_nmse_kron():
    rng = np.random.default_rng(8)
    g_mat = _rand_complex(rng, (4, 6))
    h_mat = _rand_complex(rng, (6, 3))
    assert est.nmse_kron(g_mat, h_mat, g_mat, h_mat) == pytest.approx(0.0, abs=1e-15)
    assert est.nmse_kron(g_mat, h_mat, g_mat / 2, 2 * h_mat) == pytest.approx(0.0, abs=1e-12)
    assert est.nmse_kron(g_mat, h_mat, np.zeros_like(g_mat), h_mat) == pytest.approx(1.0)

    # agrees with the materialized Kronecker difference
    g_hat = g_mat + 0.3 * _rand_complex(rng, g_mat.shape)
    h_hat = h_mat + 0.3 * _rand_complex(rng, h_mat.shape)
    direct = np.linalg.norm(
        np.kron(h_mat.T, g_mat) - np.kron(h_hat.T, g_hat)
    ) ** 2 / np.linalg.norm(np.kron(h_mat.T, g_mat)) ** 2
    assert est.nmse_kron(g_mat, h_mat, g_hat, h_hat) == pytest.approx(direct, rel=1e-10)

    # exact gauge invariance
    a = 0.123 - 2.4j
    assert est.nmse_kron(g_mat, h_mat, g_hat / a, a * h_hat) == pytest.approx(
        est.nmse_kron(g_mat, h_mat, g_hat, h_hat), rel=1e-12
    )

    with pytest.raises(ValueError):
        est.nmse_kron(np.zeros((2, 2)), np.zeros((2, 2)), g_mat[:2, :2], h_mat[:2, :2])


def test_nmse_avg():
    rng = np.random.default_rng(9)
    g_mat = _rand_complex(rng, (3, 4))
    hs = [_rand_complex(rng, (4, 2)) for _ in range(5)]
    assert est.nmse_avg(g_mat, hs, g_mat, hs) == pytest.approx(0.0, abs=1e-15)
    h_hats = list(hs)
    h_hats[2] = np.zeros_like(hs[2])
    assert est.nmse_avg(g_mat, hs, g_mat, h_hats) == pytest.approx(0.2)


def test_overhead_counts():
    assert est.total_overhead(900, 75, 4, 5) == 2400
    assert est.total_overhead(0, 30, 4, 5) == 600
    assert est.total_overhead(123, 0, 4, 5) == 123
    assert est.ls_overhead_bound(2, 3, 49, 8, 4) == 233632
    assert est.ls_overhead_bound(1, 0, 49, 8, 1) == 49 * 8
    assert est.ls_overhead_bound(0, 1, 49, 8, 1) == 49 * 49 * 8


def test_estimation_config_validation():
    with pytest.raises(ValueError):
        est.EstimationConfig(t_g=0)
    with pytest.raises(ValueError):
        est.EstimationConfig(tau=0)
    with pytest.raises(ValueError):
        est.EstimationConfig(upsilon_g=-0.1)
