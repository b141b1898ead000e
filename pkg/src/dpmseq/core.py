"""Model types and conjugate kernels shared by every fitting engine.

This module holds the Polya-urn prior weights (exact, truncated, and
soft-count variants), the normal-inverse-gamma (NIG) and
normal-inverse-Wishart (NIW) weighted conjugate updates, and the Student-t
predictive densities they induce.  Everything here is a pure function of its
inputs; the engines own all mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import gammaln

# Weights below this are treated as exactly zero in weighted updates to
# prevent drift in the nu^-1 accumulation.
WEIGHT_FLOOR = 1e-12

LOG_2PI = float(np.log(2.0 * np.pi))


# ---------------------------------------------------------------------------
# Parameter types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NIGParams:
    """Normal-inverse-gamma hyperparameters for one univariate component.

    The component mean has conditional variance ``nu / zeta`` given the
    precision ``zeta``, and ``zeta`` is gamma with shape ``a`` and rate ``b``.
    """

    rho: float
    nu: float
    a: float
    b: float

    def __post_init__(self):
        for name in ("rho", "nu", "a", "b"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not np.isfinite(v):
                raise ValueError(f"NIGParams.{name} must be finite, got {v!r}")
        if self.nu <= 0 or self.a <= 0 or self.b <= 0:
            raise ValueError(
                f"NIGParams requires nu, a, b > 0, got "
                f"nu={self.nu}, a={self.a}, b={self.b}"
            )


@dataclass(frozen=True)
class NIWParams:
    """Normal-inverse-Wishart hyperparameters for one multivariate component.

    ``mean`` is the location, ``kappa`` the mean-precision scale, ``psi`` the
    positive-definite scale matrix and ``df`` the degrees of freedom.
    """

    mean: np.ndarray
    kappa: float
    psi: np.ndarray
    df: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "psi", psi)
        d = mean.shape[0]
        if mean.ndim != 1:
            raise ValueError("NIWParams.mean must be a vector")
        if psi.shape != (d, d):
            raise ValueError(f"NIWParams.psi must be {d}x{d}, got {psi.shape}")
        if not np.allclose(psi, psi.T, atol=1e-10 * max(1.0, np.abs(psi).max())):
            raise ValueError("NIWParams.psi must be symmetric")
        if self.kappa <= 0:
            raise ValueError(f"NIWParams.kappa must be > 0, got {self.kappa}")
        if self.df <= d - 1:
            raise ValueError(
                f"NIWParams.df must exceed d-1={d - 1}, got {self.df}"
            )
        try:
            np.linalg.cholesky(psi)
        except np.linalg.LinAlgError as exc:
            raise ValueError("NIWParams.psi must be positive-definite") from exc

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


Params = Union[NIGParams, NIWParams]


@dataclass
class FitState:
    """Per-cluster parameters plus the bookkeeping shared by all engines.

    ``n_occupied`` counts the labels that have ever received positive
    allocation mass; with soft allocations this equals min(processed, trunc),
    with hard allocations it is the number of realized clusters.
    """

    family: str                      # "nig" or "niw"
    prior: Params
    alpha: float
    trunc: Optional[int] = None      # None for untruncated SUGS
    # NIG arrays (length = capacity)
    rho: Optional[np.ndarray] = None
    nu: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    # NIW arrays
    mean: Optional[np.ndarray] = None    # (cap, d)
    kappa: Optional[np.ndarray] = None
    psi: Optional[np.ndarray] = None     # (cap, d, d)
    df: Optional[np.ndarray] = None
    soft_counts: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_occupied: int = 0
    processed: float = 0.0
    lower_bound: float = 0.0

    @classmethod
    def from_prior(cls, prior: Params, alpha: float, capacity: int,
                   trunc: Optional[int] = None) -> "FitState":
        if alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {alpha}")
        if trunc is not None and trunc < 1:
            raise ValueError(f"trunc must be >= 1, got {trunc}")
        if isinstance(prior, NIGParams):
            return cls(
                family="nig", prior=prior, alpha=alpha, trunc=trunc,
                rho=np.full(capacity, prior.rho),
                nu=np.full(capacity, prior.nu),
                a=np.full(capacity, prior.a),
                b=np.full(capacity, prior.b),
                soft_counts=np.zeros(capacity),
            )
        d = prior.dim
        return cls(
            family="niw", prior=prior, alpha=alpha, trunc=trunc,
            mean=np.tile(prior.mean, (capacity, 1)),
            kappa=np.full(capacity, prior.kappa),
            psi=np.tile(prior.psi, (capacity, 1, 1)),
            df=np.full(capacity, prior.df),
            soft_counts=np.zeros(capacity),
        )

    @property
    def capacity(self) -> int:
        return len(self.soft_counts)

    def cluster_params(self, j: int) -> Params:
        if self.family == "nig":
            return NIGParams(self.rho[j], self.nu[j], self.a[j], self.b[j])
        return NIWParams(self.mean[j].copy(), self.kappa[j],
                         self.psi[j].copy(), self.df[j])

    def copy(self) -> "FitState":
        st = FitState(
            family=self.family, prior=self.prior, alpha=self.alpha,
            trunc=self.trunc,
            soft_counts=self.soft_counts.copy(),
            n_occupied=self.n_occupied, processed=self.processed,
            lower_bound=self.lower_bound,
        )
        for name in ("rho", "nu", "a", "b", "mean", "kappa", "psi", "df"):
            arr = getattr(self, name)
            if arr is not None:
                setattr(st, name, arr.copy())
        return st


# ---------------------------------------------------------------------------
# Polya-urn prior weights
# ---------------------------------------------------------------------------

def urn_prior(hard_counts, alpha: float, i: int) -> np.ndarray:
    """Untruncated Polya-urn allocation prior for observation i (1-based).

    Returns the vector [n_j / (alpha + i - 1)]_j with the new-cluster mass
    alpha / (alpha + i - 1) appended.  For i = 1 this is [1.0].
    """
    counts = np.asarray(hard_counts, dtype=float)
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if i < 1:
        raise ValueError(f"step index must be >= 1, got {i}")
    if counts.sum() != i - 1:
        raise ValueError(
            f"hard counts sum to {counts.sum()}, expected i-1={i - 1}"
        )
    if np.any(counts < 1) and counts.size:
        raise ValueError("occupied labels must have count >= 1")
    denom = alpha + i - 1
    return np.concatenate([counts / denom, [alpha / denom]])


def truncated_urn_prior(hard_counts, alpha: float, T: int, i: int) -> np.ndarray:
    """Truncated Polya-urn allocation prior with truncation level T.

    Occupied labels get (n_j + alpha/T) / (alpha + i - 1); while fewer than T
    clusters exist, the new-cluster slot gets alpha (1 - K/T) / (alpha + i - 1)
    where K is the number of occupied labels.
    """
    counts = np.asarray(hard_counts, dtype=float)
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if counts.size > T:
        raise ValueError(f"{counts.size} clusters exceed truncation T={T}")
    if counts.sum() != i - 1:
        raise ValueError(
            f"hard counts sum to {counts.sum()}, expected i-1={i - 1}"
        )
    denom = alpha + i - 1
    K = counts.size
    out = (counts + alpha / T) / denom
    if K < T:
        out = np.concatenate([out, [alpha * (1.0 - K / T) / denom]])
    return out


def soft_urn_weights(soft_counts, alpha: float, T: int, i: int,
                     tol: float = 1e-6) -> np.ndarray:
    """Expected truncated-urn weights under accumulated soft counts.

    ``soft_counts`` holds the expected occupancy of each label that has
    received allocation mass so far; its entries must total i - 1.  With
    indicator-valued soft counts this reduces exactly to
    :func:`truncated_urn_prior`.
    """
    counts = np.asarray(soft_counts, dtype=float)
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if counts.size > T:
        raise ValueError(f"{counts.size} labels exceed truncation T={T}")
    total = counts.sum()
    if abs(total - (i - 1)) > tol * max(1.0, i - 1):
        raise ValueError(
            f"soft counts total {total} inconsistent with i-1={i - 1}"
        )
    denom = alpha + i - 1
    K = counts.size
    out = (counts + alpha / T) / denom
    if K < T:
        out = np.concatenate([out, [alpha * (1.0 - K / T) / denom]])
    return out


# ---------------------------------------------------------------------------
# NIG kernels
# ---------------------------------------------------------------------------

def nig_weighted_update(p: NIGParams, y: float, w: float,
                        printed_b_update: bool = False) -> NIGParams:
    """Power-likelihood conjugate update of NIG hyperparameters.

    With w = 1 this is the exact single-observation conjugate posterior; with
    w in (0, 1) it incorporates p(y|theta)^w.  ``printed_b_update`` switches
    the sign of the rho^2/nu terms in the b recursion to the form some
    derivations quote, which breaks exact conjugacy and exists only as a
    diagnostic.
    """
    if not np.isfinite(y):
        raise ValueError(f"observation must be finite, got {y!r}")
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {w}")
    if w < WEIGHT_FLOOR:
        return p
    nu_new = 1.0 / (1.0 / p.nu + w)
    rho_new = nu_new * (p.rho / p.nu + w * y)
    a_new = p.a + 0.5 * w
    if printed_b_update:
        b_new = p.b + 0.5 * (w * y * y + rho_new ** 2 / nu_new - p.rho ** 2 / p.nu)
    else:
        b_new = p.b + 0.5 * (w * y * y + p.rho ** 2 / p.nu - rho_new ** 2 / nu_new)
    return NIGParams(rho_new, nu_new, a_new, b_new)


def nig_log_predictive(p: NIGParams, y) -> Union[float, np.ndarray]:
    """Log predictive density: Student-t with 2a dof, location rho and
    squared scale b (nu + 1) / a."""
    df = 2.0 * p.a
    s2 = p.b * (p.nu + 1.0) / p.a
    return _t_logpdf(np.asarray(y, dtype=float), df, p.rho, s2)


def nig_predictive(p: NIGParams, y) -> Union[float, np.ndarray]:
    return np.exp(nig_log_predictive(p, y))


def _t_logpdf(y, df, loc, s2):
    z2 = (y - loc) ** 2 / (df * s2)
    out = (gammaln(0.5 * (df + 1.0)) - gammaln(0.5 * df)
           - 0.5 * np.log(df * np.pi * s2)
           - 0.5 * (df + 1.0) * np.log1p(z2))
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def nig_posterior_from_stats(prior: NIGParams, n, s1, s2):
    """Batch NIG posterior from sufficient statistics (count, sum, sum of
    squares).  Accepts scalars or aligned arrays; returns parameter arrays."""
    n = np.asarray(n, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    nu_n = 1.0 / (1.0 / prior.nu + n)
    rho_n = nu_n * (prior.rho / prior.nu + s1)
    a_n = prior.a + 0.5 * n
    b_n = prior.b + 0.5 * (s2 + prior.rho ** 2 / prior.nu - rho_n ** 2 / nu_n)
    return rho_n, nu_n, a_n, b_n


def nig_log_predictive_arrays(rho, nu, a, b, y):
    """Vectorized t log-predictive over per-cluster parameter arrays."""
    df = 2.0 * a
    s2 = b * (nu + 1.0) / a
    return _t_logpdf(y, df, rho, s2)


# ---------------------------------------------------------------------------
# NIW kernels
# ---------------------------------------------------------------------------

def niw_weighted_update(p: NIWParams, y, w: float) -> NIWParams:
    """Power-likelihood conjugate update of NIW hyperparameters.

    The scale matrix is updated through the rank-1 form
    psi + w kappa / kappa' (y - mean)(y - mean)^T, which preserves positive
    definiteness exactly.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != p.mean.shape:
        raise ValueError(f"observation shape {y.shape} != dim {p.mean.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("observation must be finite")
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {w}")
    if w < WEIGHT_FLOOR:
        return p
    kappa_new = p.kappa + w
    mean_new = (p.kappa * p.mean + w * y) / kappa_new
    df_new = p.df + w
    dev = y - p.mean
    psi_new = p.psi + (w * p.kappa / kappa_new) * np.outer(dev, dev)
    psi_new = 0.5 * (psi_new + psi_new.T)
    return NIWParams(mean_new, kappa_new, psi_new, df_new)


def niw_log_predictive(p: NIWParams, y) -> Union[float, np.ndarray]:
    """Multivariate-t log predictive with df - d + 1 dof, location mean and
    scale matrix psi (kappa + 1) / (kappa (df - d + 1))."""
    y = np.asarray(y, dtype=float)
    d = p.dim
    df_t = p.df - d + 1.0
    if df_t <= 0:
        raise ValueError(f"predictive dof df-d+1={df_t} must be > 0")
    scale = p.psi * (p.kappa + 1.0) / (p.kappa * df_t)
    return _mvt_logpdf(y, df_t, p.mean, scale)


def niw_predictive(p: NIWParams, y) -> Union[float, np.ndarray]:
    return np.exp(niw_log_predictive(p, y))


def _mvt_logpdf(y, df, loc, scale):
    y = np.atleast_2d(np.asarray(y, dtype=float))
    d = loc.shape[0]
    chol = np.linalg.cholesky(scale)
    dev = y - loc
    z = np.linalg.solve(chol, dev.T).T
    m2 = np.sum(z ** 2, axis=1)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    out = (gammaln(0.5 * (df + d)) - gammaln(0.5 * df)
           - 0.5 * d * np.log(df * np.pi) - 0.5 * logdet
           - 0.5 * (df + d) * np.log1p(m2 / df))
    return float(out[0]) if out.shape == (1,) else out


def niw_batch_log_predictive(mean, kappa, psi, df, y) -> np.ndarray:
    """Multivariate-t log predictive of one point under a batch of NIW
    parameter sets (mean (K,d), kappa (K,), psi (K,d,d), df (K,))."""
    y = np.asarray(y, dtype=float)
    d = mean.shape[1]
    df_t = df - d + 1.0
    scale = psi * ((kappa + 1.0) / (kappa * df_t))[:, None, None]
    chol = np.linalg.cholesky(scale)
    dev = (y - mean)[:, :, None]
    z = np.linalg.solve(chol, dev)[:, :, 0]
    m2 = np.sum(z ** 2, axis=1)
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
    return (gammaln(0.5 * (df_t + d)) - gammaln(0.5 * df_t)
            - 0.5 * d * np.log(df_t * np.pi) - 0.5 * logdet
            - 0.5 * (df_t + d) * np.log1p(m2 / df_t))


def nig_to_niw(p: NIGParams) -> NIWParams:
    """Embed univariate NIG parameters as 1-d NIW via kappa = 1/nu,
    df = 2a, psi = 2b."""
    return NIWParams(np.array([p.rho]), 1.0 / p.nu,
                     np.array([[2.0 * p.b]]), 2.0 * p.a)
