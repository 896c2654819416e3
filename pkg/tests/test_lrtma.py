import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towedtma import gaussfilt, kinematics, lrtma, sensing, simkit
from towedtma.gaussfilt import EKF, UKF, GaussianBelief
from towedtma.kinematics import CT, CV, KNOT, MotionModel, ObserverState
from towedtma.lrtma import (
    InitPrior,
    fuse,
    init_bank,
    init_side,
    likelihood,
    step,
    update_weights,
)
from towedtma.sensing import BearingPair, wrap_angle


def default_prior():
    return InitPrior(
        sigma_r=2.0,
        sigma_theta=np.deg2rad(1.5),
        sigma_s=2.0 * KNOT,
        sigma_c=np.pi / np.sqrt(12.0),
        r_bar=5.0,
        s_bar=4.0 * KNOT,
    )


def observer(course_deg=140.0, speed_kn=5.0, x=0.0, y=0.0):
    c = np.deg2rad(course_deg)
    v = kinematics.vel_from_course(speed_kn * KNOT, c)
    return ObserverState(x=x, y=y, vx=v[0], vy=v[1], heading=wrap_angle(c))


def cv_model():
    return MotionModel(kind=CV, T=1.0, q1=1.944e-6)


class TestInitSide:
    def test_position_mean_on_bearing_ray(self):
        b = init_side(0.0, default_prior(), observer(), cv_model())
        assert np.allclose(b.mean[:2], [0.0, 5.0])

    def test_degenerate_prior_position_block(self):
        prior = InitPrior(
            sigma_r=1e-12,
            sigma_theta=1e-12,
            sigma_s=2.0 * KNOT,
            sigma_c=np.pi / np.sqrt(12.0),
            r_bar=5.0,
            s_bar=4.0 * KNOT,
        )
        b = init_side(0.7, prior, observer(), cv_model())
        assert np.allclose(b.cov[:2, :2], 0.0, atol=1e-20)

    def test_velocity_mean_closing_course(self):
        obs = observer()
        theta = 0.5
        b = init_side(theta, default_prior(), obs, cv_model())
        c = theta + np.pi
        want = 4.0 * KNOT * np.array([np.sin(c), np.cos(c)]) - obs.vel
        assert np.allclose(b.mean[2:4], want)

    def test_ct_mode_appends_turn_rate(self):
        model = MotionModel(kind=CT, T=1.0, q1=1e-6, q2=1e-7)
        b = init_side(0.3, default_prior(), observer(), model)
        assert b.dim == 5
        assert b.mean[4] == 0.0
        assert b.cov[4, 4] == pytest.approx(np.deg2rad(3.5) ** 2)

    def test_covariance_matches_sampling_oracle(self):
        # push a million polar draws through the exact transform and compare
        # with the linearized covariance entry by entry
        rng = np.random.default_rng(99)
        prior = default_prior()
        obs = observer()
        theta = np.deg2rad(45.0)
        b = init_side(theta, prior, obs, cv_model())
        n = 1_000_000
        r = prior.r_bar + prior.sigma_r * rng.standard_normal(n)
        th = theta + prior.sigma_theta * rng.standard_normal(n)
        s = prior.s_bar + prior.sigma_s * rng.standard_normal(n)
        c = theta + np.pi + prior.sigma_c * rng.standard_normal(n)
        samples = np.stack(
            [
                r * np.sin(th),
                r * np.cos(th),
                s * np.sin(c) - obs.vx,
                s * np.cos(c) - obs.vy,
            ],
            axis=1,
        )
        emp = np.cov(samples.T)
        # position block: the bearing/range linearization is tight at the
        # benchmark prior, so sampling agrees within 5% per entry
        for i in range(2):
            for j in range(2):
                assert b.cov[i, j] == pytest.approx(emp[i, j], rel=0.05)
        # velocity block: at a course spread of 52 deg the linearized map is
        # only a same-order approximation of the exact polar covariance, so
        # check the implementation against its defining formula instead and
        # keep a factor-level sanity bound against the samples
        cbar = theta + np.pi
        Jv = np.array(
            [
                [np.sin(cbar), prior.s_bar * np.cos(cbar)],
                [np.cos(cbar), -prior.s_bar * np.sin(cbar)],
            ]
        )
        want = Jv @ np.diag([prior.sigma_s**2, prior.sigma_c**2]) @ Jv.T
        assert np.allclose(b.cov[2:4, 2:4], want, rtol=1e-12)
        for i in range(2, 4):
            assert 0.5 < b.cov[i, i] / emp[i, i] < 2.0


class TestLikelihood:
    def test_peak_value(self):
        s = 0.01
        assert likelihood(0.4, 0.4, s) == pytest.approx(1.0 / np.sqrt(2 * np.pi * s))

    def test_one_sigma_ratio(self):
        s = 0.02
        peak = likelihood(0.0, 0.0, s)
        assert likelihood(np.sqrt(s), 0.0, s) == pytest.approx(peak * np.exp(-0.5))

    def test_wrap_invariance(self):
        s = 0.01
        assert likelihood(0.3 + 2 * np.pi, 0.3, s) == pytest.approx(
            likelihood(0.3, 0.3, s), rel=1e-9
        )

    def test_rejects_nonpositive_covariance(self):
        with pytest.raises(ValueError):
            likelihood(0.1, 0.0, 0.0)


class TestUpdateWeights:
    def test_symmetric(self):
        assert update_weights((0.5, 0.5), 3.0, 3.0) == (0.5, 0.5)

    def test_two_to_one(self):
        w1, w2 = update_weights((0.5, 0.5), 2.0, 1.0)
        assert w1 == pytest.approx(2.0 / 3.0)
        assert w2 == pytest.approx(1.0 / 3.0)

    def test_absorbing_zero(self):
        assert update_weights((1.0, 0.0), 0.0, 5.0) == (1.0, 0.0)
        assert update_weights((0.0, 1.0), 5.0, 0.0) == (0.0, 1.0)

    def test_underflow_floor(self):
        w1, w2 = update_weights((0.5, 0.5), 0.0, 0.0)
        assert w1 + w2 == pytest.approx(1.0)
        assert w1 == pytest.approx(0.5)

    @given(
        w=st.floats(0.0, 1.0),
        p1=st.floats(0.0, 1e6),
        p2=st.floats(0.0, 1e6),
    )
    @settings(max_examples=300, deadline=None)
    def test_simplex_preserved(self, w, p1, p2):
        w1, w2 = update_weights((w, 1.0 - w), p1, p2)
        assert 0.0 <= w1 <= 1.0
        assert 0.0 <= w2 <= 1.0
        assert w1 + w2 == pytest.approx(1.0, abs=1e-12)


class TestFuse:
    def _belief(self, mean, cov):
        return GaussianBelief(np.asarray(mean, float), np.asarray(cov, float))

    def test_collapse_at_unit_weight(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(4, 4))
        b1 = self._belief(rng.normal(size=4), A @ A.T + np.eye(4))
        b2 = self._belief(rng.normal(size=4), np.eye(4))
        out = fuse(b1, b2, (1.0, 0.0))
        assert np.allclose(out.mean, b1.mean)
        assert np.allclose(out.cov, b1.cov)

    def test_identical_components(self):
        b = self._belief([1, 2, 3, 4], np.diag([1.0, 2, 3, 4]))
        for w in ((0.3, 0.7), (0.9, 0.1)):
            out = fuse(b, b, w)
            assert np.allclose(out.mean, b.mean)
            assert np.allclose(out.cov, b.cov)

    def test_symmetric_mixture_covariance(self):
        d = 0.8
        P = np.diag([0.5, 0.5, 0.1, 0.1])
        b1 = self._belief([d, 0, 0, 0], P)
        b2 = self._belief([-d, 0, 0, 0], P)
        out = fuse(b1, b2, (0.5, 0.5))
        want = P.copy()
        want[0, 0] += d * d
        assert np.allclose(out.mean, 0.0)
        assert np.allclose(out.cov, want)

    def test_dimension_mismatch(self):
        b1 = self._belief(np.zeros(4), np.eye(4))
        b2 = self._belief(np.zeros(5), np.eye(5))
        with pytest.raises(ValueError):
            fuse(b1, b2, (0.5, 0.5))

    def test_interior_weights_spread_covariance(self):
        rng = np.random.default_rng(1)
        b1 = self._belief(rng.normal(size=4), np.eye(4))
        b2 = self._belief(rng.normal(size=4), 2 * np.eye(4))
        out = fuse(b1, b2, (0.4, 0.6))
        assert np.trace(out.cov) >= min(np.trace(b1.cov), np.trace(b2.cov)) - 1e-12


def run_near_noiseless_bank(model_kind=CV, steps=30, filter_kind=EKF):
    """Near-noiseless scenario with exact side initialization.

    A strictly zero measurement noise drives the posterior covariance to
    exact singularity, so the oracle run keeps a hundredth of a degree.
    """
    cfg = simkit.ScenarioConfig(
        filter_kind=filter_kind,
        model_kind=model_kind,
        sigma_theta_meas_deg=0.01,
        q1=0.0,
        q2=0.0,
        truth_process_noise=False,
        exact_init=True,
        horizon=steps,
    )
    return simkit.simulate_run(cfg, simkit.run_seed(0, 0))


class TestStep:
    def test_near_noiseless_true_side_weight_nondecreasing(self):
        # the EKF's linearization is geometric, so with exact init the two
        # sides stay mirror images and the true side can only gain weight
        rec = run_near_noiseless_bank()
        assert rec.failure is None
        w_true = [
            e.w1 if rec.true_slot == 1 else e.w2 for e in rec.estimates
        ]
        for a, b in zip(w_true[1:], w_true[2:]):
            assert b >= a - 1e-9
        assert w_true[-1] > 0.999

    def test_on_axis_target_keeps_equal_weights(self):
        # target dead ahead on the array axis: both slots carry the same
        # bearing, the sides stay mirror images, weights stay 1/2
        model = cv_model()
        prior = default_prior()
        obs0 = observer(course_deg=0.0)
        theta = 0.0
        pair = BearingPair(y1=theta, y2=theta, heading=0.0, t=1)
        bank = init_bank(pair, prior, obs0, model)
        obs1 = ObserverState(
            x=obs0.x, y=obs0.y + 1.0 * obs0.vy, vx=obs0.vx, vy=obs0.vy, heading=0.0
        )
        nxt = step(bank, BearingPair(theta, theta, 0.0, 2), obs0, obs1, model, EKF, 0.02)
        assert nxt.w1 == pytest.approx(0.5, abs=1e-12)
        assert nxt.w2 == pytest.approx(0.5, abs=1e-12)

    def test_resolution_before_maneuver_end_case_one(self):
        # median first-decided step lands inside the ownship maneuver for
        # most runs of the benchmark geometry
        cfg = simkit.ScenarioConfig(filter_kind=UKF, model_kind=CV, n_runs=60)
        sums = simkit.run_monte_carlo(cfg)
        decided = [
            s.first_decided_step
            for s in sums
            if not s.diverged and s.first_decided_step is not None
        ]
        assert len(decided) >= 50
        frac_by_maneuver_end = np.mean(np.asarray(decided) <= 17)
        assert frac_by_maneuver_end > 0.5

    def test_weight_simplex_along_run(self):
        cfg = simkit.ScenarioConfig(filter_kind=EKF, model_kind=CV, n_runs=5)
        for i in range(5):
            rec = simkit.simulate_run(cfg, simkit.run_seed(cfg.seed, i))
            for e in rec.estimates:
                assert e.w1 + e.w2 == pytest.approx(1.0, abs=1e-12)
                assert 0.0 <= e.w1 <= 1.0


class TestMirrorEquivariance:
    def test_ekf_bank_reflects_bitwise(self):
        # reflect everything across true north (axis = 0): the reflection's
        # arithmetic is exact sign flipping, so the swapped bank must match
        # bit for bit
        model = cv_model()
        prior = default_prior()
        rng = np.random.default_rng(123)

        D = np.diag([-1.0, 1.0, -1.0, 1.0])

        def refl_obs(o):
            return ObserverState(x=-o.x, y=o.y, vx=-o.vx, vy=o.vy, heading=-o.heading)

        cfg = simkit.ScenarioConfig(model_kind=CV)
        observers = simkit.gen_observer_track(cfg)
        target = simkit.gen_target_track(cfg)
        rel = simkit.relative_truth(target, observers)

        nu = rng.normal(size=cfg.horizon + 1) * cfg.sigma_theta_rad
        pairs, pairs_r = [], []
        for k in range(1, cfg.horizon + 1):
            theta = sensing.true_bearing(rel[k])
            h = observers[k].heading
            y1 = wrap_angle(theta + nu[k])
            y2 = wrap_angle(2.0 * h - y1)
            pairs.append(BearingPair(y1=y1, y2=y2, heading=h, t=k))
            # reflected scenario swaps the slots and negates every angle
            pairs_r.append(BearingPair(y1=-y2, y2=-y1, heading=-h, t=k))

        bank = init_bank(pairs[0], prior, observers[1], model)
        bank_r = init_bank(pairs_r[0], prior, refl_obs(observers[1]), model)
        for k in range(2, cfg.horizon + 1):
            bank = step(
                bank, pairs[k - 1], observers[k - 1], observers[k], model, EKF, cfg.sigma_theta_rad
            )
            bank_r = step(
                bank_r,
                pairs_r[k - 1],
                refl_obs(observers[k - 1]),
                refl_obs(observers[k]),
                model,
                EKF,
                cfg.sigma_theta_rad,
            )
            assert bank_r.w1 == bank.w2
            assert bank_r.w2 == bank.w1
            assert np.array_equal(bank_r.belief1.mean, D @ bank.belief2.mean)
            assert np.array_equal(bank_r.belief2.mean, D @ bank.belief1.mean)
            assert np.array_equal(bank_r.fused.mean, D @ bank.fused.mean)
            assert np.array_equal(bank_r.fused.cov, D @ bank.fused.cov @ D)

    @pytest.mark.parametrize("kind", ["ukf", "ckf", "ghf", "srf"])
    def test_point_filter_banks_reflect_tightly(self, kind):
        # point-set accumulation order differs between the mirrored runs, so
        # demand agreement to near machine precision rather than bitwise
        model = cv_model()
        prior = default_prior()
        rng = np.random.default_rng(7)

        D = np.diag([-1.0, 1.0, -1.0, 1.0])

        def refl_obs(o):
            return ObserverState(x=-o.x, y=o.y, vx=-o.vx, vy=o.vy, heading=-o.heading)

        cfg = simkit.ScenarioConfig(model_kind=CV)
        observers = simkit.gen_observer_track(cfg)
        target = simkit.gen_target_track(cfg)
        rel = simkit.relative_truth(target, observers)
        nu = rng.normal(size=cfg.horizon + 1) * cfg.sigma_theta_rad

        pairs, pairs_r = [], []
        for k in range(1, cfg.horizon + 1):
            theta = sensing.true_bearing(rel[k])
            h = observers[k].heading
            y1 = wrap_angle(theta + nu[k])
            y2 = wrap_angle(2.0 * h - y1)
            pairs.append(BearingPair(y1=y1, y2=y2, heading=h, t=k))
            pairs_r.append(BearingPair(y1=-y2, y2=-y1, heading=-h, t=k))

        bank = init_bank(pairs[0], prior, observers[1], model)
        bank_r = init_bank(pairs_r[0], prior, refl_obs(observers[1]), model)
        for k in range(2, cfg.horizon + 1):
            bank = step(
                bank, pairs[k - 1], observers[k - 1], observers[k], model, kind, cfg.sigma_theta_rad
            )
            bank_r = step(
                bank_r,
                pairs_r[k - 1],
                refl_obs(observers[k - 1]),
                refl_obs(observers[k]),
                model,
                kind,
                cfg.sigma_theta_rad,
            )
            assert bank_r.w1 == pytest.approx(bank.w2, abs=1e-12)
            assert np.allclose(bank_r.fused.mean, D @ bank.fused.mean, atol=1e-10)
