"""Likelihood-weighted two-filter bank for left-right ambiguity resolution.

Two identical Gaussian filters run in parallel, one per mirrored bearing
slot. Each side is initialized on the ray of its own first bearing and is
updated every step with its own slot's detection. Because the two slots
are exact mirrors about the array axis, updating a side against its own
slot with the direct bearing model is algebraically identical to
predicting the mirrored bearing 2h - gamma(x) with a negated measurement
Jacobian and comparing it to the opposite slot: the sign flips cancel in
the gain, the correction, and the likelihood.

While the array heading is constant both hypotheses explain their bearing
streams equally well and the weights hover near 1/2; an ownship maneuver
makes the mirror-side stream kinematically inconsistent, its likelihood
collapses, and the weight recursion drives the surviving side to one. The
fused output is the weighted Gaussian mixture of the two sides (mean plus
spread-of-means covariance) and is report-only: the side filters are never
reset from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import gaussfilt, kinematics, sensing
from .gaussfilt import SRF, GaussianBelief
from .kinematics import CT, MotionModel, ObserverState
from .sensing import BearingPair

# Numerator floor applied before weight normalization; prior weights that
# are exactly zero stay zero (the zero-weight state is absorbing).
WEIGHT_FLOOR = 1e-300


@dataclass(frozen=True)
class InitPrior:
    """Polar prior used to start a side filter from its first bearing.

    All fields are in internal units: km, km/min, rad, rad/min.
    """

    sigma_r: float
    sigma_theta: float
    sigma_s: float
    sigma_c: float
    r_bar: float
    s_bar: float
    sigma_psi: float = np.deg2rad(3.5)
    psi_bar: float = 0.0

    def __post_init__(self) -> None:
        for name in ("sigma_r", "sigma_theta", "sigma_s", "sigma_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class FilterBankState:
    """The two side beliefs, their weights, and the fused output."""

    belief1: GaussianBelief
    belief2: GaussianBelief
    w1: float
    w2: float
    fused: GaussianBelief
    t: int
    degenerate: bool = False


def init_side(
    first_bearing: float,
    prior: InitPrior,
    obs: ObserverState,
    model: MotionModel,
) -> GaussianBelief:
    """Relative-state belief from one first bearing and the polar prior.

    The position mean sits at the prior range along the bearing ray; the
    velocity mean assumes the prior speed on the closing course
    (bearing + pi) minus the known observer velocity. The covariance is
    the polar prior pushed through the linearized polar-to-Cartesian map.
    In CT mode the turn-rate component is appended from the prior.
    """
    th = first_bearing
    cbar = sensing.wrap_angle(th + np.pi)
    pos = prior.r_bar * np.array([np.sin(th), np.cos(th)])
    vel = prior.s_bar * np.array([np.sin(cbar), np.cos(cbar)]) - obs.vel

    Jp = np.array(
        [
            [np.sin(th), prior.r_bar * np.cos(th)],
            [np.cos(th), -prior.r_bar * np.sin(th)],
        ]
    )
    Jv = np.array(
        [
            [np.sin(cbar), prior.s_bar * np.cos(cbar)],
            [np.cos(cbar), -prior.s_bar * np.sin(cbar)],
        ]
    )
    Ppos = Jp @ np.diag([prior.sigma_r**2, prior.sigma_theta**2]) @ Jp.T
    Pvel = Jv @ np.diag([prior.sigma_s**2, prior.sigma_c**2]) @ Jv.T

    n = model.dim
    mean = np.zeros(n)
    cov = np.zeros((n, n))
    mean[0:2], mean[2:4] = pos, vel
    cov[0:2, 0:2], cov[2:4, 2:4] = Ppos, Pvel
    if model.kind == CT:
        mean[4] = prior.psi_bar
        cov[4, 4] = prior.sigma_psi**2
    return GaussianBelief(mean=mean, cov=cov)


def likelihood(y: float, pred: float, innov_cov: float) -> float:
    """Scalar Gaussian measurement likelihood with a wrapped residual."""
    if innov_cov <= 0:
        raise ValueError(f"innovation covariance must be positive, got {innov_cov}")
    r = sensing.wrap_angle(y - pred)
    return float(np.exp(-0.5 * r * r / innov_cov) / np.sqrt(2.0 * np.pi * innov_cov))


def update_weights(
    w_prev: tuple[float, float], p1: float, p2: float
) -> tuple[float, float]:
    """Bayes-recursive weight update over the two side hypotheses.

    Numerators of sides with a nonzero prior weight are floored to avoid
    both-zero underflow; exactly-zero prior weights stay zero. If both
    numerators vanish anyway the previous weights are kept (the caller
    flags the step as degenerate).
    """
    w1, w2 = w_prev
    n1 = p1 * w1
    n2 = p2 * w2
    if w1 > 0:
        n1 = max(n1, WEIGHT_FLOOR)
    if w2 > 0:
        n2 = max(n2, WEIGHT_FLOOR)
    den = n1 + n2
    if den == 0.0:
        return w1, w2
    return n1 / den, n2 / den


def fuse(
    b1: GaussianBelief, b2: GaussianBelief, w: tuple[float, float]
) -> GaussianBelief:
    """Gaussian-mixture mean and spread-of-means covariance of the sides."""
    if b1.dim != b2.dim:
        raise ValueError(f"side dims differ: {b1.dim} vs {b2.dim}")
    w1, w2 = w
    mean = w1 * b1.mean + w2 * b2.mean
    d1 = b1.mean - mean
    d2 = b2.mean - mean
    cov = w1 * (b1.cov + np.outer(d1, d1)) + w2 * (b2.cov + np.outer(d2, d2))
    return GaussianBelief(mean=mean, cov=gaussfilt.symmetrize(cov))


def init_bank(
    pair: BearingPair,
    prior: InitPrior,
    obs: ObserverState,
    model: MotionModel,
) -> FilterBankState:
    """Start the bank from the first mirrored pair with equal weights."""
    b1 = init_side(pair.y1, prior, obs, model)
    b2 = init_side(pair.y2, prior, obs, model)
    return FilterBankState(
        belief1=b1,
        belief2=b2,
        w1=0.5,
        w2=0.5,
        fused=fuse(b1, b2, (0.5, 0.5)),
        t=pair.t,
    )


def _side_turn_rate(belief: GaussianBelief, model: MotionModel) -> float:
    return float(belief.mean[4]) if model.kind == CT else 0.0


def step(
    bank: FilterBankState,
    meas: BearingPair,
    obs_prev: ObserverState,
    obs_now: ObserverState,
    model: MotionModel,
    filter_kind: str,
    noise_std: float,
    kappa: Optional[float] = None,
    gh_order: int = gaussfilt.DEFAULT_GH_ORDER,
) -> FilterBankState:
    """One recursion of the bank: predict, per-side update, weight, fuse.

    Numerical failures propagate as exceptions; the Monte Carlo harness
    flags the run as diverged rather than aborting.
    """
    # the CV input is state-independent, so both sides share one vector
    u_shared = None
    if model.kind != CT:
        u_shared = kinematics.observer_input(obs_prev, obs_now, model)

    outs = []
    for belief, y in ((bank.belief1, meas.y1), (bank.belief2, meas.y2)):
        u = u_shared
        if u is None:
            u = kinematics.observer_input(
                obs_prev, obs_now, model, turn_rate=_side_turn_rate(belief, model)
            )
        prior = gaussfilt.predict(
            belief, model, u, filter_kind, kappa=kappa, gh_order=gh_order
        )
        if filter_kind == SRF:
            out = gaussfilt.srf_update(prior, y, noise_std)
            p = out.likelihood
        else:
            out = gaussfilt.update(
                prior, y, noise_std, filter_kind, kappa=kappa, gh_order=gh_order
            )
            p = likelihood(y, out.pred_meas, out.innov_cov)
        outs.append((out.posterior, p))

    (post1, p1), (post2, p2) = outs
    n1 = max(p1 * bank.w1, WEIGHT_FLOOR) if bank.w1 > 0 else p1 * bank.w1
    n2 = max(p2 * bank.w2, WEIGHT_FLOOR) if bank.w2 > 0 else p2 * bank.w2
    degenerate = (n1 + n2) == 0.0
    w1, w2 = update_weights((bank.w1, bank.w2), p1, p2)
    return FilterBankState(
        belief1=post1,
        belief2=post2,
        w1=w1,
        w2=w2,
        fused=fuse(post1, post2, (w1, w2)),
        t=bank.t + 1,
        degenerate=degenerate,
    )
