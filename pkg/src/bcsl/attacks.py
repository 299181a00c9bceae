"""Byzantine behavior: what corrupted workers send instead of their gradient.

The attack menu:

  * ``gaussian(sigma)``           : honest gradient plus N(0, sigma^2 I) noise
  * ``sign_flip(scale)``          : minus ``scale`` times the honest gradient
  * ``constant(c)``               : the constant vector c * 1
  * ``collusion_mean_reverse(scale)``: minus ``scale`` times the honest
    workers' mean gradient; every corrupted worker sends this identical
    vector, modeling an omniscient colluding adversary.

The master clamps incoming reports (``sanitize_report``) so that NaN/Inf
payloads cannot leak into the aggregation rules.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATTACK_KINDS = ("gaussian", "sign_flip", "constant", "collusion_mean_reverse")

#: Reports are clamped into [-CLAMP_LIMIT, CLAMP_LIMIT] before aggregation.
CLAMP_LIMIT = 1e12


@dataclass(frozen=True)
class AttackSpec:
    kind: str = "sign_flip"
    sigma: float = 0.0
    scale: float = 3.0
    constant: float = 0.0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack {self.kind!r}; expected one of {ATTACK_KINDS}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not np.isfinite(self.scale) or not np.isfinite(self.constant):
            raise ValueError("attack parameters must be finite")


def corrupt(
    attack: AttackSpec,
    honest_gradient: np.ndarray,
    honest_mean: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Produce the vector a corrupted worker sends for this round.

    ``honest_gradient`` is the gradient the worker would have reported.
    ``honest_mean`` is the mean of the honest workers' gradients, available
    to the omniscient colluding adversary. ``rng`` is the worker's own
    seeded stream (only the gaussian attack consumes it).
    """
    g = np.asarray(honest_gradient, dtype=np.float64)
    if attack.kind == "gaussian":
        return g + attack.sigma * rng.standard_normal(g.shape[0])
    if attack.kind == "sign_flip":
        return -attack.scale * g
    if attack.kind == "constant":
        return np.full(g.shape[0], attack.constant, dtype=np.float64)
    mean = np.asarray(honest_mean, dtype=np.float64)
    return -attack.scale * mean


def sanitize_report(vector: np.ndarray, limit: float = CLAMP_LIMIT) -> np.ndarray:
    """Clamp a report so aggregation stays well-defined.

    NaN and +Inf map to ``+limit``, -Inf to ``-limit``, and finite entries
    are clipped into [-limit, limit].
    """
    v = np.asarray(vector, dtype=np.float64)
    out = np.where(np.isnan(v), limit, v)
    return np.clip(out, -limit, limit)
