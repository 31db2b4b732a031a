"""Latent dropout masks: TailDrop, uniform (sparse-AE baseline), independent.

TailDrop zeroes a suffix of the latent vector whose length D follows the
power law Pr(D < tau*M) = tau**beta, discretised as D = floor(M * u**(1/beta))
and clamped to M - 1 so that at least one latent always survives.
"""

from dataclasses import dataclass

import numpy as np

from rateless.errors import ConfigError, DomainError, ModeError

MODES = ("taildrop", "uniform", "independent", "none")


@dataclass(frozen=True)
class TailDropSchedule:
    mode: str
    latent_dim: int
    beta: float = 1.0
    p: float = 0.0
    rates: tuple = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown dropout mode {self.mode!r}; expected one of {MODES}")
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be positive")
        if self.mode == "taildrop" and not self.beta > 0:
            raise ConfigError(f"taildrop needs beta > 0, got {self.beta}")
        if self.mode == "uniform" and not 0.0 <= self.p < 1.0:
            raise ConfigError(f"uniform dropout needs 0 <= p < 1, got {self.p}")
        if self.mode == "independent":
            rates = np.asarray(self.rates, dtype=np.float64)
            if rates.shape != (self.latent_dim,):
                raise ConfigError(f"need {self.latent_dim} rates, got {rates.size}")
            if np.any(rates < 0) or np.any(rates >= 1):
                raise ConfigError("independent rates must lie in [0, 1)")
            if np.any(np.diff(rates) < 0):
                raise ConfigError("independent rates must be non-decreasing")
            object.__setattr__(self, "rates", tuple(rates.tolist()))

    def describe(self):
        if self.mode == "taildrop":
            return f"taildrop(beta={self.beta:g})"
        if self.mode == "uniform":
            return f"uniform(p={self.p:g})"
        if self.mode == "independent":
            return "independent"
        return "none"


def taildrop_length(beta, M, u):
    """Number of trailing latents to drop for uniform draw(s) ``u`` in [0, 1)."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0.0) or np.any(u >= 1.0):
        raise DomainError("u must lie in [0, 1)")
    if not beta > 0 or M < 1:
        raise DomainError(f"need beta > 0 and M >= 1, got beta={beta}, M={M}")
    d = np.minimum(np.floor(M * u ** (1.0 / beta)).astype(np.int64), M - 1)
    return int(d) if d.ndim == 0 else d


def taildrop_cdf(beta, M):
    """Exact Pr(D <= d) for d = 0..M-1 under the floored, clamped law."""
    d = np.arange(M, dtype=np.float64)
    cdf = ((d + 1.0) / M) ** beta
    cdf[-1] = 1.0
    return cdf


def sample_mask(schedule, batch, rng):
    """A ``batch x M`` matrix of 0/1 keep flags, one independent draw per row."""
    M = schedule.latent_dim
    if schedule.mode == "none":
        return np.ones((batch, M))
    if schedule.mode == "taildrop":
        drop = taildrop_length(schedule.beta, M, rng.uniform(batch))
        return (np.arange(M) < (M - drop)[:, None]).astype(np.float64)
    u = rng.uniform((batch, M))
    if schedule.mode == "uniform":
        return (u >= schedule.p).astype(np.float64)
    return (u >= np.asarray(schedule.rates)).astype(np.float64)


def keep_probabilities(schedule):
    """Exact probability that each latent node survives."""
    M = schedule.latent_dim
    if schedule.mode == "none":
        return np.ones(M)
    if schedule.mode == "uniform":
        return np.full(M, 1.0 - schedule.p)
    if schedule.mode == "independent":
        return 1.0 - np.asarray(schedule.rates)
    # node m (1-based) survives iff D <= M - m
    return taildrop_cdf(schedule.beta, M)[::-1].copy()


def implied_weights(schedule):
    """Weight of each survivor length L = 1..M in the equivalent weighted-sum objective.

    ``result[L - 1] = Pr(D = M - L)``.
    """
    if schedule.mode != "taildrop":
        raise ModeError(f"implied weights are defined for taildrop, not {schedule.mode!r}")
    cdf = taildrop_cdf(schedule.beta, schedule.latent_dim)
    pmf = np.diff(np.concatenate([[0.0], cdf]))
    return pmf[::-1].copy()
