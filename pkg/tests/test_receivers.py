"""Constrained receiver algebra against KKT, pinv, and differencing oracles."""

import numpy as np
import pytest
import scipy.linalg

from stcdma.errors import SingularConstraintError
from stcdma.oracles import central_difference, kkt_constrained_minimizer
from stcdma.receivers import (
    CcmStatistics,
    CombinerGains,
    FilterPair,
    ccm_exact_filter,
    ccm_sg_step,
    cmv_exact_filter,
    cmv_sg_step,
    combine,
    constrained_quadratic_filter,
    constraint_projector,
    constraint_restorer,
    detect,
    min_norm_feasible_pair,
    projection_pair,
    trained_lms_step,
)
from stcdma.signal_model import random_multipath_channel, random_qpsk, simulate_packet
from stcdma.signal_model import SymbolStream
from stcdma.spreading import random_spreading_set, user_constraint_matrices


def _random_constraints(rng, dim=12, ncon=4):
    return rng.standard_normal((dim, ncon)) + 1j * rng.standard_normal((dim, ncon))


def _random_covariance(rng, dim=12):
    b = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return b @ b.conj().T + np.eye(dim)


def test_projector_matches_nullspace_basis():
    rng = np.random.default_rng(0)
    c = _random_constraints(rng)
    pi = constraint_projector(c)
    basis = scipy.linalg.null_space(c.conj().T)
    oracle = basis @ basis.conj().T
    assert np.max(np.abs(pi - oracle)) < 1e-10


def test_restorer_matches_pinv():
    rng = np.random.default_rng(1)
    c = _random_constraints(rng)
    t = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    w = constraint_restorer(c) @ t
    oracle = np.linalg.pinv(c.conj().T) @ t
    assert np.max(np.abs(w - oracle)) < 1e-10
    assert np.max(np.abs(c.conj().T @ w - t)) < 1e-10


def test_projector_annihilates_restored_vectors():
    rng = np.random.default_rng(2)
    c = _random_constraints(rng)
    pi = constraint_projector(c)
    rest = constraint_restorer(c)
    assert np.max(np.abs(pi @ rest)) < 1e-10
    # idempotent and Hermitian
    assert np.max(np.abs(pi @ pi - pi)) < 1e-10
    assert np.max(np.abs(pi - pi.conj().T)) < 1e-10


def test_rank_deficient_constraints_rejected():
    rng = np.random.default_rng(3)
    c = _random_constraints(rng)
    c[:, 1] = c[:, 0]
    with pytest.raises(SingularConstraintError):
        constraint_projector(c)


def test_constrained_filter_matches_kkt():
    rng = np.random.default_rng(4)
    for trial in range(10):
        r = _random_covariance(rng)
        c = _random_constraints(rng)
        d = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        t = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        w = constrained_quadratic_filter(r, d, c, t)
        oracle = kkt_constrained_minimizer(r, d, c, t)
        assert np.max(np.abs(w - oracle)) < 1e-8
        w0 = constrained_quadratic_filter(r, np.zeros(12, complex), c, t)
        oracle0 = kkt_constrained_minimizer(r, np.zeros(12, complex), c, t)
        assert np.max(np.abs(w0 - oracle0)) < 1e-8


def test_cmv_filter_is_linear_in_nu():
    rng = np.random.default_rng(5)
    sp = random_spreading_set(2, 16, "zero-padded", 2, seed=1)
    cm = user_constraint_matrices(sp, 0, 3)
    r = _random_covariance(rng, dim=2 * (16 + 3 - 1))
    h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    one = cmv_exact_filter(r, cm, h, nu=1.0)
    two = cmv_exact_filter(r, cm, h, nu=2.0)
    assert np.max(np.abs(two.w - 2.0 * one.w)) < 1e-9
    assert np.max(np.abs(two.wbar - 2.0 * one.wbar)) < 1e-9


def test_ccm_statistics_match_loop_moments():
    rng = np.random.default_rng(6)
    dim = 6
    stats = CcmStatistics(dim=dim, forgetting=1.0)
    ys, zs, zbars = [], [], []
    for _ in range(25):
        y = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        z = complex(rng.standard_normal() + 1j * rng.standard_normal())
        zbar = complex(rng.standard_normal() + 1j * rng.standard_normal())
        stats.update(y, z, zbar)
        ys.append(y)
        zs.append(z)
        zbars.append(zbar)
    r_oracle = np.mean(
        [abs(z) ** 2 * np.outer(y, y.conj()) for y, z in zip(ys, zs)], axis=0
    )
    d_oracle = np.mean([np.conj(z) * y for y, z in zip(ys, zs)], axis=0)
    assert np.max(np.abs(stats.r - r_oracle)) < 1e-12
    assert np.max(np.abs(stats.d - d_oracle)) < 1e-12
    rbar_oracle = np.mean(
        [abs(z) ** 2 * np.outer(y, y.conj()) for y, z in zip(ys, zbars)], axis=0
    )
    assert np.max(np.abs(stats.rbar - rbar_oracle)) < 1e-12


def test_ccm_statistics_unbiased_from_first_sample():
    rng = np.random.default_rng(7)
    stats = CcmStatistics(dim=4, forgetting=0.9)
    y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    stats.update(y, 1.0 + 0.5j, 0.2 - 1.0j)
    assert np.max(np.abs(stats.r - abs(1.0 + 0.5j) ** 2 * np.outer(y, y.conj()))) < 1e-12


def _feasible_setup(seed, gain=16, lp=3):
    rng = np.random.default_rng(seed)
    sp = random_spreading_set(3, gain, "zero-padded", 2, seed=seed)
    cm = user_constraint_matrices(sp, 0, lp)
    pp = projection_pair(cm)
    h = rng.standard_normal(2 * lp) + 1j * rng.standard_normal(2 * lp)
    h /= np.linalg.norm(h)
    return rng, cm, pp, h


def test_sg_steps_keep_constraints_exact():
    rng, cm, pp, h = _feasible_setup(8)
    nu = 1.3
    fp = min_norm_feasible_pair(pp, h, nu)
    dim = cm.odd.shape[0]
    for _ in range(50):
        y = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        ccm_sg_step(fp, pp, y, h, nu=nu, mu=1e-4)
    assert np.all(np.isfinite(fp.w))
    assert np.max(np.abs(cm.odd.conj().T @ fp.w - nu * h)) < 1e-10
    assert np.max(np.abs(cm.even.conj().T @ fp.wbar - nu * np.conj(h))) < 1e-10
    fp2 = min_norm_feasible_pair(pp, h, nu)
    for _ in range(50):
        y = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        cmv_sg_step(fp2, pp, y, h, nu=nu, mu=1e-2, normalize=True)
    assert np.max(np.abs(cm.odd.conj().T @ fp2.w - nu * h)) < 1e-10


def test_ccm_step_moves_along_projected_gradient():
    rng, cm, pp, h = _feasible_setup(9)
    fp = min_norm_feasible_pair(pp, h, 1.0)
    dim = cm.odd.shape[0]
    y = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    w_before = fp.w.copy()
    z = np.vdot(w_before, y)
    mu = 1e-3
    ccm_sg_step(fp, pp, y, h, nu=1.0, mu=mu)
    expected = w_before - mu * pp.pi @ ((abs(z) ** 2 - 1.0) * np.conj(z) * y)
    assert np.max(np.abs(fp.w - expected)) < 1e-12


def test_sg_gradients_match_central_difference():
    rng, cm, pp, h = _feasible_setup(10)
    dim = cm.odd.shape[0]
    y = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    w = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    u = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)

    def modulus_cost(v):
        return (abs(np.vdot(v, y)) ** 2 - 1.0) ** 2

    def power_cost(v):
        return abs(np.vdot(v, y)) ** 2

    z = np.vdot(w, y)
    grad_ccm = 4.0 * (abs(z) ** 2 - 1.0) * np.conj(z) * y
    grad_cmv = 2.0 * np.conj(z) * y
    num_ccm = central_difference(modulus_cost, w, u, 1e-7)
    num_cmv = central_difference(power_cost, w, u, 1e-7)
    assert abs(np.vdot(grad_ccm, u).real - num_ccm) < 1e-5 * max(1.0, abs(num_ccm))
    assert abs(np.vdot(grad_cmv, u).real - num_cmv) < 1e-5 * max(1.0, abs(num_cmv))


def test_normalized_step_scales_by_input_power():
    rng, cm, pp, h = _feasible_setup(11)
    dim = cm.odd.shape[0]
    y = 10.0 * (rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
    fp_raw = min_norm_feasible_pair(pp, h, 1.0)
    fp_norm = min_norm_feasible_pair(pp, h, 1.0)
    w0 = fp_raw.w.copy()
    cmv_sg_step(fp_raw, pp, y, h, mu=1e-3, normalize=False)
    cmv_sg_step(fp_norm, pp, y, h, mu=1e-3, normalize=True)
    power = np.vdot(y, y).real
    raw_move = fp_raw.w - w0
    norm_move = fp_norm.w - w0
    assert np.max(np.abs(norm_move * (power + 1e-12) - raw_move)) < 1e-10


def test_min_norm_pair_matches_pinv():
    rng, cm, pp, h = _feasible_setup(12)
    fp = min_norm_feasible_pair(pp, h, 1.7)
    oracle_w = np.linalg.pinv(cm.odd.conj().T) @ (1.7 * h)
    oracle_wbar = np.linalg.pinv(cm.even.conj().T) @ (1.7 * np.conj(h))
    assert np.max(np.abs(fp.w - oracle_w)) < 1e-10
    assert np.max(np.abs(fp.wbar - oracle_wbar)) < 1e-10


def test_trained_lms_approaches_wiener_filter():
    rng = np.random.default_rng(13)
    dim = 4
    h = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    sigma2 = 0.1
    r = 2.0 * np.outer(h, h.conj()) + sigma2 * np.eye(dim)
    p = 2.0 * h
    w_mmse = np.linalg.solve(r, p)
    w = np.zeros(dim, dtype=complex)
    for _ in range(20_000):
        s = random_qpsk(1, rng)[0]
        n = np.sqrt(sigma2 / 2) * (rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
        y = h * s + n
        w = trained_lms_step(w, y, s, mu=0.005)
    assert np.linalg.norm(w - w_mmse) < 0.15 * np.linalg.norm(w_mmse)


def test_detect_grid_and_ties():
    assert detect(0.0 + 0.0j) == 1.0 + 1.0j
    assert detect(-0.1 + 0.0j) == -1.0 + 1.0j
    vals = detect(np.array([2 + 3j, -1 - 1j, 0.5 - 2j]))
    assert np.array_equal(vals, np.array([1 + 1j, -1 - 1j, 1 - 1j]))


def test_combiner_gains():
    g = CombinerGains.proportional((1.0, 3.0))
    assert np.allclose(g.gains, [0.25, 0.75])
    assert np.allclose(CombinerGains.proportional((0.0, 0.0)).gains, [0.5, 0.5])
    assert np.allclose(CombinerGains.equal(4).gains, 0.25)


def test_combine_shapes_and_mismatch():
    outputs = np.array([[1 + 1j, 2.0], [3.0, 4 - 1j]])
    g = CombinerGains.proportional((1.0, 3.0))
    mixed = combine(outputs, g)
    assert np.allclose(mixed, 0.25 * outputs[0] + 0.75 * outputs[1])
    with pytest.raises(ValueError):
        combine(np.zeros((3, 2)), g)


def test_cmv_with_ensemble_covariance_separates_users():
    """With the model's ensemble covariance and no noise the minimum-variance
    receiver nulls the interferers exactly despite their power advantage."""
    rng = np.random.default_rng(14)
    gain, lp, users = 16, 3, 3
    amps = (1.0, 2.0, 3.0)
    sp = random_spreading_set(users, gain, "zero-padded", 2, seed=3)
    ch = random_multipath_channel(2, lp, 40, 0.0, rng, fading="clarke")
    h = ch.stacked[:, 0]
    m2 = 2 * (gain + lp - 1)
    r = np.zeros((m2, m2), dtype=complex)
    sigs = []
    for k in range(users):
        cmk = user_constraint_matrices(sp, k, lp)
        u = amps[k] * (cmk.odd @ h)
        v = amps[k] * (cmk.even @ np.conj(h))
        sigs.append((u, v))
        r += 2.0 * (np.outer(u, u.conj()) + np.outer(v, v.conj()))
    streams = [
        SymbolStream(symbols=random_qpsk(80, rng), amplitude=amp) for amp in amps
    ]
    y = simulate_packet(streams, sp, ch, 0.0, rng)
    cm = user_constraint_matrices(sp, 0, lp)
    fp = cmv_exact_filter(r, cm, h, nu=1.0, ridge=1e-10)
    # interfering signatures and the same-user partner direction are nulled
    # (residual leakage is set by the tiny ridge, far below the O(1) gain)
    for u, v in sigs[1:]:
        assert abs(np.vdot(fp.w, u)) < 1e-4
        assert abs(np.vdot(fp.w, v)) < 1e-4
    assert abs(np.vdot(fp.w, sigs[0][1])) < 1e-4
    z = np.array([fp.output(y[:, i]) for i in range(y.shape[1])])
    assert np.array_equal(detect(z[:, 0]), detect(streams[0].symbols[0::2]))
    assert np.array_equal(detect(z[:, 1]), detect(streams[0].symbols[1::2]))


def test_ccm_exact_filter_separates_users_at_scale():
    """The closed-form constant-modulus receiver from large-sample moments
    detects the desired user error-free in a noise-free loaded system."""
    rng = np.random.default_rng(15)
    gain, lp, users = 16, 3, 3
    nblocks = 1500
    sp = random_spreading_set(users, gain, "zero-padded", 2, seed=3)
    ch = random_multipath_channel(2, lp, nblocks, 0.0, rng, fading="clarke")
    streams = [
        SymbolStream(symbols=random_qpsk(2 * nblocks, rng), amplitude=amp)
        for amp in (1.0, 2.0, 3.0)
    ]
    y = simulate_packet(streams, sp, ch, 0.0, rng)
    cm = user_constraint_matrices(sp, 0, lp)
    h = ch.stacked[:, 0]
    stats = CcmStatistics(dim=2 * (gain + lp - 1), forgetting=1.0)
    start = min_norm_feasible_pair(projection_pair(cm), h, 1.0)
    for i in range(nblocks):
        z0, zbar0 = start.output(y[:, i])
        stats.update(y[:, i], z0, zbar0)
    fp = ccm_exact_filter(stats, cm, h, nu=1.0, ridge=1e-9)
    z = np.array([fp.output(y[:, i]) for i in range(nblocks)])
    assert np.array_equal(detect(z[:, 0]), detect(streams[0].symbols[0::2]))
    assert np.array_equal(detect(z[:, 1]), detect(streams[0].symbols[1::2]))
