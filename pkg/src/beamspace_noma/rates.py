"""Per-user SINR, achievable rates, sum spectral efficiency, energy efficiency.

Rates are analytic: the m-th user of a beam decodes and cancels users ranked
after it, so its residual interference is the earlier-ranked users of its own
beam plus every other beam's total power, plus noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beams import BeamGrouping
from .precoding import Precoder

MW_PER_W = 1000.0


@dataclass
class LinkBudget:
    """Noise variance and transmit power budget, both in mW."""

    noise_mw: float
    total_power_mw: float
    snr_db: float | None = None

    def __post_init__(self):
        if self.noise_mw <= 0:
            raise ValueError(f"noise power must be > 0, got {self.noise_mw}")
        if self.total_power_mw <= 0:
            raise ValueError(f"power budget must be > 0, got {self.total_power_mw}")

    @classmethod
    def from_snr(cls, total_power_mw: float, snr_db: float, n_users: int) -> "LinkBudget":
        """Noise from the per-user transmit-power SNR convention:
        sigma^2 = (P / K) / SNR_linear."""
        if n_users < 1:
            raise ValueError(f"need at least 1 user, got {n_users}")
        return cls(noise_mw=(total_power_mw / n_users) / 10.0 ** (snr_db / 10.0),
                   total_power_mw=total_power_mw, snr_db=snr_db)


@dataclass
class PowerModel:
    """Hardware power draw entering the energy-efficiency denominator (mW)."""

    rf_chain_mw: float = 300.0
    switch_mw: float = 5.0
    baseband_mw: float = 200.0

    def __post_init__(self):
        if min(self.rf_chain_mw, self.switch_mw, self.baseband_mw) < 0:
            raise ValueError("power-model constants must be >= 0")


@dataclass
class RateReport:
    """Per-user link metrics in the grouping's flat (beam-major, SIC) order."""

    users: np.ndarray         # original user indices, flat order
    sinr: np.ndarray
    interference: np.ndarray  # denominator terms incl. noise
    rates: np.ndarray         # bps/Hz
    sum_rate: float
    n_rf: int

    @property
    def rates_by_user(self) -> np.ndarray:
        """Rates re-indexed by original user id."""
        out = np.empty_like(self.rates)
        out[self.users] = self.rates
        return out


@dataclass
class LinkGains:
    """Precomputed |h_{m,n}^H w_j| structure shared by rate and power code.

    Flat user order is beam-major with SIC rank ascending inside each beam.
    """

    heff: np.ndarray      # (K, N_RF) complex, row u = h_u^H W
    gains: np.ndarray     # |heff|^2
    own: np.ndarray       # (K,) complex own-beam gain h_u^H w_{beam(u)}
    beam_of: np.ndarray   # (K,) int
    rank_of: np.ndarray   # (K,) int SIC rank, 0 = strongest
    beam_slices: list[slice]
    users: np.ndarray     # (K,) original user ids in flat order
    n_rf: int

    @property
    def own_gain(self) -> np.ndarray:
        return self.gains[np.arange(len(self.beam_of)), self.beam_of]


def link_gains(grouping: BeamGrouping, precoder: Precoder) -> LinkGains:
    """Build the effective-gain structure for one grouping/precoder pair."""
    users = grouping.users_flat
    heff = grouping.reduced[:, users].conj().T @ precoder.matrix
    gains = np.abs(heff) ** 2
    sizes = [len(m) for m in grouping.beams]
    beam_of = np.repeat(np.arange(grouping.n_rf), sizes)
    rank_of = np.concatenate([np.arange(s) for s in sizes])
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    slices = [slice(bounds[i], bounds[i + 1]) for i in range(grouping.n_rf)]
    own = heff[np.arange(len(users)), beam_of]
    return LinkGains(heff=heff, gains=gains, own=own, beam_of=beam_of,
                     rank_of=rank_of, beam_slices=slices, users=users,
                     n_rf=grouping.n_rf)


def interference_vector(lg: LinkGains, powers: np.ndarray, noise_mw: float) -> np.ndarray:
    """All users' post-SIC interference-plus-noise terms at once."""
    powers = np.asarray(powers, dtype=float)
    beam_power = np.bincount(lg.beam_of, weights=powers, minlength=lg.n_rf)
    inter = lg.gains @ beam_power - lg.own_gain * beam_power[lg.beam_of]
    cum = np.cumsum(powers)
    intra_cum = cum - powers
    for s in lg.beam_slices:
        if s.start > 0:
            intra_cum[s] -= cum[s.start - 1]
    return lg.own_gain * intra_cum + inter + noise_mw


def interference_term(m: int, n: int, grouping: BeamGrouping, precoder: Precoder,
                      powers: np.ndarray, noise_mw: float) -> float:
    """Residual interference plus noise at the m-th user (0-based SIC rank)
    of beam n: own-beam gain times earlier-ranked powers, plus every other
    beam's total power through the cross gains, plus noise."""
    lg = link_gains(grouping, precoder)
    u = lg.beam_slices[n].start + m
    return float(interference_vector(lg, powers, noise_mw)[u])


def sinr(m: int, n: int, grouping: BeamGrouping, precoder: Precoder,
         powers: np.ndarray, noise_mw: float) -> float:
    """Post-SIC SINR of the m-th user (0-based) of beam n."""
    lg = link_gains(grouping, precoder)
    u = lg.beam_slices[n].start + m
    xi = interference_vector(lg, powers, noise_mw)[u]
    return float(lg.own_gain[u] * powers[u] / xi)


def sum_rate(grouping: BeamGrouping, precoder: Precoder, powers: np.ndarray,
             budget: LinkBudget) -> RateReport:
    """Assemble every user's SINR and rate and the sum spectral efficiency."""
    powers = np.asarray(powers, dtype=float)
    lg = link_gains(grouping, precoder)
    if powers.shape != lg.users.shape:
        raise ValueError(f"expected {lg.users.shape[0]} powers, got {powers.shape}")
    xi = interference_vector(lg, powers, budget.noise_mw)
    gamma = lg.own_gain * powers / xi
    rates = np.log2(1.0 + gamma)
    return RateReport(users=lg.users, sinr=gamma, interference=xi, rates=rates,
                      sum_rate=float(rates.sum()), n_rf=lg.n_rf)


def energy_efficiency(sum_rate_bpshz: float, n_rf: int, budget: LinkBudget,
                      power_model: PowerModel) -> float:
    """Sum rate over total consumed power (transmit + RF chains + switches +
    baseband), in bps/Hz/W."""
    total_mw = (budget.total_power_mw + n_rf * power_model.rf_chain_mw
                + n_rf * power_model.switch_mw + power_model.baseband_mw)
    return sum_rate_bpshz / (total_mw / MW_PER_W)
