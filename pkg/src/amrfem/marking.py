"""Marking strategies mapping error indicators to element sets.

Implements the four closed-form rules (maximum, quantile, Doerfler
bulk-chasing, log-z-score); the isolation-forest rule lives in
:mod:`amrfem.isoforest` and is dispatched through :func:`mark`.

All rules are scale-invariant and use inclusive (>=) threshold comparisons,
so threshold ties are always marked.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import AmrError, ConfigError

LOG_GUARD = 1e-300  # floor for indicators before the z-score logarithm

STRATEGIES = ("max", "qua", "doe", "zsc", "iso")


@dataclass(frozen=True)
class MarkingConfig:
    """Strategy selector with its scalar parameter.

    ``param`` ranges: max/qua/doe in [0, 1]; zsc any real; iso in (0, 1] or
    the string ``"auto"``.  ``seed`` and the forest sizes only matter for
    iso.
    """

    strategy: str
    param: float | str
    seed: int = 42
    n_trees: int = 100
    subsample: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(
                f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}"
            )
        if self.strategy == "iso":
            if self.param != "auto":
                p = float(self.param)
                if not 0.0 < p <= 1.0:
                    raise ConfigError("iso contamination must lie in (0, 1] or be 'auto'")
        elif self.strategy == "zsc":
            float(self.param)
        else:
            p = float(self.param)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{self.strategy} parameter must lie in [0, 1]")

    def label(self):
        return f"{self.strategy}-{self.param}"


@dataclass
class MarkedSet:
    indices: np.ndarray
    strategy: str
    param: float | str
    cycle: int = 0

    def __post_init__(self):
        self.indices = np.unique(np.asarray(self.indices, dtype=np.int64))

    def __len__(self):
        return int(self.indices.size)


def _check_eta(eta):
    eta = np.asarray(eta, dtype=np.float64)
    if eta.ndim != 1 or eta.size == 0:
        raise AmrError("indicator vector must be nonempty and one-dimensional")
    if not np.all(np.isfinite(eta)) or np.any(eta < 0):
        raise AmrError("indicators must be finite and nonnegative")
    return eta


def mark_max(eta, alpha, cycle=0):
    """Mark elements with eta_e >= alpha * max(eta); never empty."""
    eta = _check_eta(eta)
    threshold = float(alpha) * eta.max()
    return MarkedSet(np.flatnonzero(eta >= threshold), "max", alpha, cycle)


def mark_quantile(eta, gamma, cycle=0):
    """Mark elements at or above the gamma-quantile of the indicators.

    The quantile interpolates linearly between order statistics (the common
    'type 7' convention).
    """
    eta = _check_eta(eta)
    q = np.quantile(eta, float(gamma))
    return MarkedSet(np.flatnonzero(eta >= q), "qua", gamma, cycle)


def mark_doerfler(eta, theta, cycle=0):
    """Minimal-cardinality set whose squared indicators reach a theta share.

    Elements are taken greedily in descending indicator order (ties broken
    by lower index) until ``sum(eta^2) >= theta * total``; at least one
    element is always returned.
    """
    eta = _check_eta(eta)
    sq = eta * eta
    total = sq.sum()
    if total == 0.0:
        return MarkedSet(np.array([0]), "doe", theta, cycle)
    order = np.lexsort((np.arange(eta.size), -eta))
    csum = np.cumsum(sq[order])
    k = int(np.searchsorted(csum, float(theta) * total)) + 1
    k = min(k, eta.size)
    chosen = order[:k]
    if float(theta) >= 1.0:
        chosen = chosen[eta[chosen] > 0.0] if np.any(eta[chosen] > 0) else chosen[:1]
    return MarkedSet(chosen, "doe", theta, cycle)


def mark_zscore(eta, zstar, cycle=0):
    """Mark elements whose log-indicator z-score reaches ``zstar``.

    Indicators are log-transformed (guarded against zeros); the z-score uses
    the population standard deviation.  A zero-variance vector yields an
    empty (degenerate) set, as may large thresholds.
    """
    eta = _check_eta(eta)
    logs = np.log(np.maximum(eta, LOG_GUARD))
    std = logs.std()
    if std == 0.0:
        return MarkedSet(np.array([], dtype=np.int64), "zsc", zstar, cycle)
    z = (logs - logs.mean()) / std
    return MarkedSet(np.flatnonzero(z >= float(zstar)), "zsc", zstar, cycle)


def mark(eta, config, cycle=0):
    """Dispatch to the strategy selected by ``config``."""
    if config.strategy == "max":
        return mark_max(eta, config.param, cycle)
    if config.strategy == "qua":
        return mark_quantile(eta, config.param, cycle)
    if config.strategy == "doe":
        return mark_doerfler(eta, config.param, cycle)
    if config.strategy == "zsc":
        return mark_zscore(eta, config.param, cycle)
    from .isoforest import IsoForestParams, mark_iso

    params = IsoForestParams(
        n_trees=config.n_trees,
        subsample=config.subsample,
        contamination=config.param,
        seed=config.seed,
    )
    return mark_iso(eta, params, cycle)
