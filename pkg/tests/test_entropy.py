import math

import numpy as np
import pytest

from qsdsep.bloch import BlochState
from qsdsep.entropy import (
    EntropyLedger,
    LedgerBatch,
    SepSpec,
    as_logpdf,
    asymptotic_mean_rate,
    asymptotic_Ytheta_logp,
    asymptotic_y_logp,
    discrete_ledger_batch,
    gibbs_entropy,
    kl_divergence,
    ledger_from_trajectory,
    ledgers_from_csv,
    ledgers_to_csv,
    path_terms,
    phase_cell_halfwidth,
    sep_2d_asymptotic,
    sep_discrete_oracle,
    sep_increment_general,
    sep_rz,
    sep_stationary_shortcut,
    sep_theta,
    sep_y,
)
from qsdsep.errors import ConfigError, NumericsError
from qsdsep.fpe import (
    Grid1D,
    PdfField,
    default_y_halfwidth,
    evolve_fpe,
    gaussian_profile,
    logpdf_lookup,
    rz_logpdf_from_y_field,
    stationary_theta_pdf,
    uniform_profile,
)
from qsdsep.kraus import (
    MeasurementChannel,
    run_discrete_chain,
    run_rz_chains,
    rz_branch_map,
)
from qsdsep.sde import (
    Domain,
    ItoProcessSpec,
    StepperConfig,
    TrajectoryRecord,
    euler_maruyama_step,
    simulate_trajectory,
    spec_rz,
    spec_theta,
    spec_y,
    spec_Ytheta,
)
from qsdsep.streams import trajectory_stream

# Adaptive quadrature of p ln(p/q) against the stationary angle pdf, frozen:
KL_UNIFORM_FROZEN = {
    5.0: 0.351567707456,  # mu^2 = 5
    2.0: 0.067104351480,  # mu^2 = 2
}

FLAT_LOGP = lambda r, t: np.full_like(np.asarray(r, dtype=float), math.log(0.5))


def make_ledger(times, s_sys, s_meas):
    s_sys = np.asarray(s_sys, dtype=float)
    s_meas = np.asarray(s_meas, dtype=float)
    return EntropyLedger(times=times, s_tot=s_sys + s_meas,
                         s_sys=s_sys, s_meas=s_meas)


def test_ledger_validation():
    t = np.array([0.0, 0.1, 0.2])
    led = make_ledger(t, [0.0, 0.3, 0.5], [0.0, 1.0, 2.0])
    assert led.s_tot[-1] == pytest.approx(2.5)

    with pytest.raises(ConfigError, match="identity"):
        EntropyLedger(times=t, s_tot=np.array([0.0, 2.0, 3.0]),
                      s_sys=np.array([0.0, 0.3, 0.5]),
                      s_meas=np.array([0.0, 1.0, 2.0]))
    with pytest.raises(ConfigError, match="zero"):
        make_ledger(t, [0.1, 0.3, 0.5], [0.0, 1.0, 2.0])
    with pytest.raises(ConfigError, match="increase"):
        make_ledger(np.array([0.0, 0.2, 0.2]), [0.0, 0.3, 0.5], [0.0, 1.0, 2.0])
    with pytest.raises(ConfigError, match="time grid"):
        make_ledger(t, [0.0, 0.3], [0.0, 1.0])


def test_ledger_batch_shapes_and_trajectory_view():
    t = np.array([0.0, 0.5, 1.0])
    s_sys = np.array([[0.0, 0.0], [0.1, -0.2], [0.2, -0.1]])
    s_meas = np.array([[0.0, 0.0], [1.0, 2.0], [2.0, 4.0]])
    batch = LedgerBatch(times=t, s_tot=s_sys + s_meas, s_sys=s_sys, s_meas=s_meas)
    assert batch.n_trajectories == 2
    one = batch.trajectory(1)
    assert one.s_tot[-1] == pytest.approx(3.9)

    with pytest.raises(ConfigError, match="n_times"):
        LedgerBatch(times=t, s_tot=s_sys[:2] + s_meas[:2],
                    s_sys=s_sys[:2], s_meas=s_meas[:2])


def test_branch_statistics_match_weak_expansion():
    # Probability-ratio part per branch: ln(p_fwd(r) / p_bwd(r')); phase-cell
    # part: ln(cell(r) / cell(r')).  Both branch means equal
    # 4 a^2 (1 + r^2) dt and both variances 16 a^2 r^2 dt to O(dt^2).
    dt = 1e-4
    tol = 10.0 * dt**1.5
    for alpha in (0.7, 1.0):
        for r in (-0.6, 0.0, 0.35, 0.8):
            r_p, r_m, p_p, p_m = rz_branch_map(alpha, dt, r)
            ds_a_plus = math.log(p_p) - math.log(rz_branch_map(alpha, dt, r_p)[3])
            ds_a_minus = math.log(p_m) - math.log(rz_branch_map(alpha, dt, r_m)[2])
            cell = phase_cell_halfwidth(alpha, dt, np.array([r, r_p, r_m]))
            ds_c_plus = math.log(cell[0] / cell[1])
            ds_c_minus = math.log(cell[0] / cell[2])

            target_mean = 4.0 * alpha**2 * (1.0 + r * r) * dt
            target_var = 16.0 * alpha**2 * r * r * dt
            for plus, minus in ((ds_a_plus, ds_a_minus), (ds_c_plus, ds_c_minus)):
                mean = p_p * plus + p_m * minus
                var = p_p * plus**2 + p_m * minus**2 - mean**2
                assert abs(mean - target_mean) < tol, (alpha, r, mean)
                assert abs(var - target_var) < tol, (alpha, r, var)


def test_phase_cell_degenerate_at_eigenstate():
    with pytest.raises(NumericsError):
        phase_cell_halfwidth(1.0, 1e-4, 1.0)


def test_general_formula_matches_rz_closed_form():
    # The two expressions are the same algebra, so agreement is to roundoff.
    spec = spec_rz(1.3)
    rng = np.random.default_rng(11)
    for dt in (1e-3, 1e-4):
        r = rng.uniform(-0.95, 0.95, size=200)
        dw = rng.standard_normal(200) * math.sqrt(dt)
        dlnp = rng.standard_normal(200) * 0.1
        dx = spec.noise(r, 0.0) * dw
        general = sep_increment_general(spec, r, 0.0, dx, dt, dlnp=dlnp)
        closed = sep_rz(1.3, r, dw, dt, dlnp=dlnp)
        assert np.max(np.abs(general - closed)) < 1e-8


def test_general_formula_matches_y_closed_form():
    spec = spec_y(0.8)
    rng = np.random.default_rng(12)
    dt = 1e-4
    y = rng.uniform(-4.0, 4.0, size=200)
    dw = rng.standard_normal(200) * math.sqrt(dt)
    dx = spec.drift_irr(y, 0.0) * dt + spec.noise(y, 0.0) * dw
    general = sep_increment_general(spec, y, 0.0, dx, dt)
    closed = sep_y(0.8, y, dw, dt)
    assert np.max(np.abs(general - closed)) < 1e-8


def test_general_formula_matches_theta_closed_form():
    spec = spec_theta(1.2, 0.7)
    rng = np.random.default_rng(13)
    dt = 1e-4
    th = rng.uniform(-math.pi, math.pi, size=200)
    dw = rng.standard_normal(200) * math.sqrt(dt)
    a = spec.drift_rev(th, 0.0) + spec.drift_irr(th, 0.0)
    dx = a * dt + spec.noise(th, 0.0) * dw
    general = sep_increment_general(spec, th, 0.0, dx, dt, derivatives="analytic")
    closed = sep_theta(1.2, 0.7, th, dw, dt)
    assert np.max(np.abs(general - closed)) < 1e-8


def test_fd_derivatives_match_analytic_on_theta():
    spec = spec_theta(1.5, 1.0)
    rng = np.random.default_rng(14)
    th = rng.uniform(-math.pi, math.pi, size=300)
    dx = rng.standard_normal(300) * 1e-2
    analytic = sep_increment_general(spec, th, 0.0, dx, 1e-4, derivatives="analytic")
    fd = sep_increment_general(spec, th, 0.0, dx, 1e-4, derivatives="fd")
    assert np.max(np.abs(analytic - fd)) < 1e-6


def test_equilibrium_increment_is_zero():
    # No drift, constant diffusion, uniform stationary pdf: nothing produced.
    def zero(x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    spec = ItoProcessSpec(
        dimension=1, labels=("x",), wiener_labels=("dW",),
        drift_rev=zero, drift_irr=zero,
        noise=lambda x, t: np.full_like(np.asarray(x, dtype=float), 0.9),
        domain=Domain("periodic", -math.pi, math.pi))
    out = sep_increment_general(spec, 0.3, 0.0, 0.05, 1e-3, dlnp=0.0)
    assert out == 0.0


def test_general_formula_2d_matches_asymptotic_far_out():
    # Far from the purity floor the (Y, theta) chart decouples and the exact
    # per-coordinate formula collapses onto the constant-coefficient form.
    spec = spec_Ytheta(1.0)
    rng = np.random.default_rng(15)
    dt = 1e-4
    x = np.stack([rng.uniform(9.0, 12.0, 50),
                  rng.uniform(-math.pi, math.pi, 50)], axis=-1)
    dw = rng.standard_normal((50, 2)) * math.sqrt(dt)
    general = path_terms(spec, x, 1.0, dw, dt, derivatives="analytic")
    closed = sep_2d_asymptotic(1.0, dw[..., 0], dt)
    assert np.max(np.abs(general - closed)) < 1e-6


def test_general_formula_rejects_bad_inputs():
    spec = spec_rz(1.0)
    with pytest.raises(NumericsError, match="diffusion"):
        sep_increment_general(spec, 1.0, 0.0, 0.0, 1e-4)
    with pytest.raises(ConfigError, match="derivatives"):
        sep_increment_general(spec, 0.1, 0.0, 0.0, 1e-4, derivatives="magic")

    def zero(x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    bare = ItoProcessSpec(
        dimension=1, labels=("x",), wiener_labels=("dW",),
        drift_rev=zero, drift_irr=zero,
        noise=lambda x, t: np.ones_like(np.asarray(x, dtype=float)),
        domain=Domain("line"))
    with pytest.raises(ConfigError, match="analytic"):
        sep_increment_general(bare, 0.1, 0.0, 0.0, 1e-4, derivatives="analytic")

    def coupling_noise(x, t):
        x = np.asarray(x, dtype=float)
        b = np.zeros(x.shape[:-1] + (2, 2))
        b[..., 0, 0] = 1.0
        b[..., 1, 1] = 1.0
        b[..., 0, 1] = 0.5
        return b

    coupled = ItoProcessSpec(
        dimension=2, labels=("u", "v"), wiener_labels=("dW_1", "dW_2"),
        drift_rev=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        drift_irr=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        noise=coupling_noise,
        domain=(Domain("line"), Domain("line")))
    with pytest.raises(ConfigError, match="diagonal"):
        sep_increment_general(coupled, np.array([0.1, 0.2]), 0.0,
                              np.array([0.0, 0.0]), 1e-4)


def test_sep_spec_plumbing():
    spec = spec_rz(0.9)
    bundle = SepSpec(process=spec, logp=FLAT_LOGP, closed_form="rz")
    rec = simulate_trajectory(spec, np.asarray(0.1),
                              StepperConfig(dt=1e-3, t_max=0.2), seed=3)
    led = bundle.ledger(rec)
    direct = ledger_from_trajectory(rec, spec, FLAT_LOGP)
    assert np.array_equal(led.s_tot, direct.s_tot)
    with pytest.raises(ConfigError, match="closed form"):
        SepSpec(process=spec, logp=FLAT_LOGP, closed_form="cartesian")


def test_stationary_shortcut_zero_in_stationary_state():
    pst = stationary_theta_pdf(math.sqrt(5.0))
    logp = lambda x, t: np.log(pst(x))
    out = sep_stationary_shortcut(logp, pst, 0.4, 0.0, 1.1, 0.1)
    assert out == 0.0
    with pytest.raises(ConfigError, match="stationary"):
        sep_stationary_shortcut(logp, None, 0.4, 0.0, 1.1, 0.1)


def test_stationary_shortcut_agrees_with_general_formula():
    # On a shared noise draw the two differ by a term proportional to
    # (xi^2 - 1) dt, so per-draw agreement is O(dt) while the mean over draws
    # agrees at O(dt^{3/2}).  Both scalings are checked.
    mu2 = 5.0
    spec = spec_theta(math.sqrt(mu2), 1.0)
    pst = stationary_theta_pdf(math.sqrt(mu2))
    log_st = lambda x: np.log(pst(x))
    theta0 = 0.7
    a = float(spec.drift_rev(theta0, 0.0) + spec.drift_irr(theta0, 0.0))
    b = float(spec.noise(theta0, 0.0))
    xi = np.random.default_rng(16).standard_normal(50000)

    def diff_at(dt):
        dx = a * dt + b * xi * math.sqrt(dt)
        x_new = theta0 + dx
        dlnp = log_st(x_new) - log_st(theta0)
        general = sep_increment_general(spec, np.full_like(dx, theta0), 0.0,
                                        dx, dt, dlnp=dlnp, derivatives="analytic")
        shortcut = sep_stationary_shortcut(lambda x, t: log_st(x), pst,
                                           theta0, 0.0, x_new, dt)
        return general - shortcut

    coarse, fine = diff_at(1e-3), diff_at(1e-4)
    ratio = np.mean(np.abs(coarse)) / np.mean(np.abs(fine))
    assert 6.0 < ratio < 14.0, ratio

    se = fine.std(ddof=1) / math.sqrt(len(fine))
    assert abs(fine.mean()) < 10.0 * 1e-4**1.5 + 4.0 * se


def test_discrete_oracle_matches_vectorized_batch():
    channel = MeasurementChannel("z", 1.0)
    chain = run_discrete_chain(BlochState(0.0, 0.0, 0.2), channel, 1e-3, 50,
                               trajectory_stream(909, 0))
    led = sep_discrete_oracle(chain, FLAT_LOGP)
    batch = run_rz_chains(1.0, 1e-3, 50, np.array([0.2]), 909,
                          record_times=1e-3 * np.arange(51))
    vec = discrete_ledger_batch(batch, FLAT_LOGP)
    # same algebra, different summation order
    assert np.max(np.abs(led.s_meas - vec.s_meas[:, 0])) < 1e-12
    assert np.max(np.abs(led.s_tot - vec.s_tot[:, 0])) < 1e-12
    assert led.times[0] == 0.0 and led.s_tot[0] == 0.0


def test_discrete_oracle_validation():
    with pytest.raises(ConfigError, match="empty"):
        sep_discrete_oracle([], FLAT_LOGP)
    x_chain = run_discrete_chain(BlochState(0.2, 0.0, 0.0),
                                 MeasurementChannel("x", 1.0), 1e-3, 3,
                                 trajectory_stream(1, 0))
    with pytest.raises(ConfigError, match="sigma_z"):
        sep_discrete_oracle(x_chain, FLAT_LOGP)
    stream = trajectory_stream(2, 0)
    channel = MeasurementChannel("z", 1.0)
    mixed = run_discrete_chain(BlochState(0.0, 0.0, 0.1), channel, 1e-3, 2, stream)
    mixed += run_discrete_chain(mixed[-1].state_after, channel, 2e-3, 2, stream)
    with pytest.raises(ConfigError, match="dt"):
        sep_discrete_oracle(mixed, FLAT_LOGP)


def test_discrete_and_continuous_ensemble_means_agree():
    # Cross-validation of the two derivations: forward/backward branch
    # bookkeeping vs the diffusion-limit closed form, 10^4 chains, T = 1.
    n, dt, steps, alpha = 10000, 1e-4, 10000, 1.0
    batch = run_rz_chains(alpha, dt, steps, np.zeros(n), 31416,
                          record_times=[0.0, 1.0])
    ledgers = discrete_ledger_batch(batch, FLAT_LOGP)
    final_d = ledgers.s_tot[-1]

    spec = spec_rz(alpha)
    rng = trajectory_stream(27182, 0)
    r = np.zeros(n)
    s = np.zeros(n)
    done = 0
    while done < steps:
        block = min(500, steps - done)
        dw = rng.standard_normal((block, n)) * math.sqrt(dt)
        for j in range(block):
            s += sep_rz(alpha, r, dw[j], dt)
            r = euler_maruyama_step(spec, r, (done + j) * dt, dt, dw[j])
        done += block

    se = math.sqrt(final_d.var(ddof=1) / n + s.var(ddof=1) / n)
    assert abs(final_d.mean() - s.mean()) < 4.0 * se
    # second-law sanity on both estimates
    assert final_d.mean() > 0.0 and s.mean() > 0.0


def test_ledger_from_trajectory_telescopes_system_part():
    spec = spec_y(0.8)
    rec = simulate_trajectory(spec, np.asarray(0.3),
                              StepperConfig(dt=1e-3, t_max=0.3), seed=21)
    logp = lambda y, t: -0.5 * np.square(np.asarray(y, dtype=float)) - t
    led = ledger_from_trajectory(rec, spec, logp)
    lp = logp(rec.states, rec.times)
    assert np.allclose(led.s_sys, lp[0] - lp, atol=1e-14)
    assert np.array_equal(led.times, rec.times)
    assert np.max(np.abs(led.s_tot - led.s_sys - led.s_meas)) < 1e-12


def test_coordinate_invariance_rz_vs_y():
    # One physical path per draw, expressed in two charts with the same
    # Wiener increments and consistently transformed pdfs; ensemble means of
    # the final totals must agree (unpaired errors, the per-step O(dt)
    # discretization mismatch is far below them).
    alpha, dt, horizon, n_traj, sigma0 = 0.8, 1e-3, 1.0, 120, 0.5
    half = default_y_halfwidth(alpha, horizon)
    grid = Grid1D("truncated_line", -half, half, 1024)
    field = evolve_fpe(spec_y(alpha), grid,
                       gaussian_profile(grid, 0.0, sigma0), horizon, dt)

    sp_y, sp_r = spec_y(alpha), spec_rz(alpha)
    cfg = StepperConfig(dt=dt, t_max=horizon)
    logp_r = lambda r, t: rz_logpdf_from_y_field(field, r, t)
    y0 = sigma0 * trajectory_stream(1234, 999999).standard_normal(n_traj)
    final_y = np.empty(n_traj)
    final_r = np.empty(n_traj)
    for j in range(n_traj):
        rec_y = simulate_trajectory(sp_y, np.asarray(y0[j]), cfg,
                                    seed=1234, stream_index=j)
        rec_r = TrajectoryRecord(labels=("r_z",),
                                 wiener_labels=rec_y.wiener_labels,
                                 times=rec_y.times, states=np.tanh(rec_y.states),
                                 wiener=rec_y.wiener, seed=rec_y.seed,
                                 stream_index=rec_y.stream_index, chart="r_z")
        final_y[j] = ledger_from_trajectory(rec_y, sp_y, field).s_tot[-1]
        final_r[j] = ledger_from_trajectory(rec_r, sp_r, logp_r).s_tot[-1]

    se = math.sqrt(final_y.var(ddof=1) / n_traj + final_r.var(ddof=1) / n_traj)
    assert abs(final_y.mean() - final_r.mean()) < 4.0 * se


def test_asymptotic_mean_rate_recovers_slope():
    rng = np.random.default_rng(17)
    times = np.linspace(0.0, 2.0, 401)
    n = 32
    base = 7.5 * times
    noise = np.cumsum(rng.standard_normal((401, n)) * 0.05, axis=0)
    s_meas = base[:, None] + noise - noise[0]
    zeros = np.zeros_like(s_meas)
    batch = LedgerBatch(times=times, s_tot=s_meas, s_sys=zeros, s_meas=s_meas)
    slope, se = asymptotic_mean_rate(batch, (1.0, 2.0))
    assert se > 0.0
    assert abs(slope - 7.5) < 0.2

    with pytest.raises(ConfigError, match="10 ledgers"):
        asymptotic_mean_rate([batch.trajectory(j) for j in range(5)], (1.0, 2.0))
    with pytest.raises(ConfigError, match="window"):
        asymptotic_mean_rate(batch, (1.0, 1.1))
    short = [batch.trajectory(j) for j in range(12)]
    slope2, _ = asymptotic_mean_rate(short, (1.0, 2.0))
    assert abs(slope2 - slope) < 0.2


def test_asymptotic_mean_rate_zero_strength():
    times = np.linspace(0.0, 2.0, 201)
    flat = np.zeros((201, 10))
    batch = LedgerBatch(times=times, s_tot=flat, s_sys=flat, s_meas=flat)
    slope, se = asymptotic_mean_rate(batch, (0.0, 2.0))
    assert slope == 0.0 and se == 0.0


def test_gibbs_entropy_values():
    circle = Grid1D.circle(256)
    uniform = PdfField(circle, np.array([0.0]),
                       uniform_profile(circle)[None, :])
    assert gibbs_entropy(uniform, 0.0) == pytest.approx(math.log(2 * math.pi),
                                                        abs=1e-12)

    line = Grid1D("truncated_line", -10.0, 10.0, 4096)
    series = [gaussian_profile(line, 0.0, sigma) for sigma in (1.0, 0.5, 0.25)]
    field = PdfField(line, np.array([0.0, 1.0, 2.0]), np.stack(series))
    g1 = gibbs_entropy(field, 0.0)
    assert g1 == pytest.approx(0.5 * math.log(2 * math.pi * math.e), abs=1e-4)
    assert g1 > gibbs_entropy(field, 1.0) > gibbs_entropy(field, 2.0)


def test_kl_divergence_frozen_values_and_symmetry():
    span = (-math.pi, math.pi)
    uniform = lambda x: 1.0 / (2 * math.pi)
    assert kl_divergence(uniform, uniform, span) == pytest.approx(0.0, abs=1e-12)
    assert kl_divergence(uniform, stationary_theta_pdf(1.0), span) == \
        pytest.approx(0.0, abs=1e-10)

    for mu2, frozen in KL_UNIFORM_FROZEN.items():
        val = kl_divergence(uniform, stationary_theta_pdf(math.sqrt(mu2)), span)
        assert val == pytest.approx(frozen, abs=1e-9)
        flipped = kl_divergence(uniform,
                                stationary_theta_pdf(1.0 / math.sqrt(mu2)), span)
        assert abs(val - flipped) < 1e-8
        assert val > -1e-10


def test_kl_divergence_support_mismatch():
    p = lambda x: 0.5
    q = lambda x: 1.0 if x > 0 else 0.0
    with pytest.raises(ConfigError, match="support"):
        kl_divergence(p, q, (-1.0, 1.0))


def test_logpdf_sources():
    grid = Grid1D.bounded(-1.0, 1.0, 64)
    field = PdfField(grid, np.array([0.0]), uniform_profile(grid)[None, :])
    from_field = as_logpdf(field)
    assert from_field(0.25, 0.0) == pytest.approx(logpdf_lookup(field, 0.25, 0.0))

    pst = stationary_theta_pdf(math.sqrt(2.0))
    from_pst = as_logpdf(pst)
    assert from_pst(0.3, 5.0) == pytest.approx(math.log(pst(0.3)))

    direct = as_logpdf(lambda x, t: 0.0)
    assert direct(1.0, 1.0) == 0.0
    with pytest.raises(ConfigError):
        as_logpdf(3.14)


def test_asymptotic_logp_forms():
    logp = asymptotic_y_logp(1.0)
    # even in y, normalized on the line
    assert logp(2.5, 1.0) == pytest.approx(logp(-2.5, 1.0))
    ys = np.linspace(-40.0, 40.0, 20001)
    mass = np.trapezoid(np.exp(logp(ys, 1.0)), ys)
    assert mass == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ConfigError):
        logp(0.0, 0.0)

    logp2 = asymptotic_Ytheta_logp(0.8)
    a2 = 0.64
    ys = np.linspace(-10.0 + 6 * a2, 10.0 + 6 * a2, 20001)
    states = np.stack([ys, np.zeros_like(ys)], axis=-1)
    mass = np.trapezoid(np.exp(logp2(states, 1.0)), ys) * 2 * math.pi
    assert mass == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ConfigError):
        asymptotic_Ytheta_logp(-1.0)


def test_ledger_csv_roundtrip(tmp_path):
    spec = spec_rz(1.0)
    recs = [simulate_trajectory(spec, np.asarray(0.0),
                                StepperConfig(dt=1e-3, t_max=0.1),
                                seed=55, stream_index=j) for j in range(2)]
    ledgers = [ledger_from_trajectory(r, spec, FLAT_LOGP) for r in recs]
    path = tmp_path / "ledgers.csv"
    ledgers_to_csv(path, ledgers)
    header = path.read_text().splitlines()[0]
    assert header == "t,s_tot,s_sys,s_meas,trajectory_id"
    back = ledgers_from_csv(path)
    assert len(back) == 2
    for a, b in zip(ledgers, back):
        assert np.array_equal(a.s_tot, b.s_tot)
        assert np.array_equal(a.times, b.times)
