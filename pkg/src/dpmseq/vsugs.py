"""Soft sequential fitting: a probability distribution over each point's
allocation, fractionally weighted conjugate updates, and a recursively
accumulated variational lower bound used for ordering selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import digamma, gammaln, multigammaln

from . import _fast
from .core import (
    LOG_2PI, WEIGHT_FLOOR,
    FitState, NIGParams, NIWParams, Params,
    nig_log_predictive_arrays, nig_weighted_update,
    niw_batch_log_predictive, niw_weighted_update,
    soft_urn_weights,
)


@dataclass
class VsugsFit:
    """Result of a soft sequential fit.

    ``allocations`` is an (N, T) matrix whose row i is the allocation
    distribution of observation i (padded with zeros); ``step_bounds`` holds
    the per-step bound contributions summing to ``state.lower_bound``."""

    state: FitState
    allocations: np.ndarray
    step_bounds: np.ndarray


def _soft_weights(state: FitState):
    """Urn weights for the next observation given the current soft counts.
    Falls back to the untruncated urn when the state carries no truncation."""
    K = state.n_occupied
    if state.trunc is None:
        denom = state.alpha + state.processed
        return np.concatenate([state.soft_counts[:K],
                               [state.alpha]]) / denom
    return soft_urn_weights(state.soft_counts[:K], state.alpha,
                            state.trunc, state.processed + 1.0)


def vsugs_allocate(state: FitState, y) -> np.ndarray:
    """Allocation distribution for the next observation: urn weight times
    the cluster's predictive density (prior predictive for the new-cluster
    slot), normalized in log space."""
    qij = _soft_weights(state)
    L = len(qij)
    if state.family == "nig":
        lp = nig_log_predictive_arrays(
            state.rho[:L], state.nu[:L], state.a[:L], state.b[:L], float(y))
    else:
        lp = niw_batch_log_predictive(
            state.mean[:L], state.kappa[:L], state.psi[:L], state.df[:L],
            np.asarray(y, dtype=float))
    logq = np.log(qij) + lp
    if not np.all(np.isfinite(logq)):
        raise FloatingPointError("predictive underflow in vsugs_allocate")
    logq -= logq.max()
    qhat = np.exp(logq)
    return qhat / qhat.sum()


# ---------------------------------------------------------------------------
# Per-step variational lower bound
# ---------------------------------------------------------------------------

def _nig_neg_kl(pn: NIGParams, pp: NIGParams) -> float:
    """Minus the KL divergence of one NIG factor from its predecessor."""
    kl = ((pn.a - pp.a) * digamma(pn.a) - gammaln(pn.a) + gammaln(pp.a)
          + pp.a * (np.log(pn.b) - np.log(pp.b))
          + pn.a * (pp.b - pn.b) / pn.b
          + (pn.rho - pp.rho) ** 2 / (2.0 * pp.nu) * pn.a / pn.b
          + 0.5 * (pn.nu / pp.nu - 1.0 - np.log(pn.nu / pp.nu)))
    return -float(kl)


def _nig_expected_loglik(pn: NIGParams, y: float) -> float:
    """Expected normal log density of y under the updated NIG factor."""
    return float(0.5 * (digamma(pn.a) - np.log(pn.b)) - 0.5 * LOG_2PI
                 - 0.5 * (pn.nu + (y - pn.rho) ** 2 * pn.a / pn.b))


def _niw_neg_kl(pn: NIWParams, pp: NIWParams) -> float:
    d = pn.dim
    sign_n, logdet_n = np.linalg.slogdet(pn.psi)
    sign_p, logdet_p = np.linalg.slogdet(pp.psi)
    psi_n_inv = np.linalg.inv(pn.psi)
    mv_digamma = np.sum(digamma(0.5 * (pn.df - np.arange(d))))
    dev = pp.mean - pn.mean
    kl_normal = 0.5 * (d * pp.kappa / pn.kappa - d
                       + d * np.log(pn.kappa / pp.kappa)
                       + pp.kappa * pn.df * dev @ psi_n_inv @ dev)
    kl_wishart = (-0.5 * pp.df * (logdet_p - logdet_n)
                  + 0.5 * pn.df * (np.trace(pp.psi @ psi_n_inv) - d)
                  + multigammaln(0.5 * pp.df, d)
                  - multigammaln(0.5 * pn.df, d)
                  + 0.5 * (pn.df - pp.df) * mv_digamma)
    return -float(kl_normal + kl_wishart)


def _niw_expected_loglik(pn: NIWParams, y: np.ndarray) -> float:
    d = pn.dim
    _, logdet = np.linalg.slogdet(pn.psi)
    e_logdet_prec = (np.sum(digamma(0.5 * (pn.df - np.arange(d))))
                     + d * np.log(2.0) - logdet)
    dev = y - pn.mean
    maha = pn.df * dev @ np.linalg.inv(pn.psi) @ dev
    return float(-0.5 * d * LOG_2PI + 0.5 * e_logdet_prec
                 - 0.5 * (d / pn.kappa + maha))


def step_lower_bound(prev_params: Sequence[Params],
                     new_params: Sequence[Params],
                     qhat, qij, y, printed: bool = False) -> float:
    """Per-step contribution to the variational bound.

    Sums, over the admissible labels: minus the KL divergence of the updated
    parameter factor from the previous one, the allocation-weighted expected
    log likelihood under the updated factor, the allocation entropy, and the
    cross term against the urn weights.  Zero allocation entries contribute
    zero entropy (0 log 0 convention).  ``printed`` switches to the published
    display (positive divergence sign, inverted precision factor) for
    diagnostics.
    """
    qhat = np.asarray(qhat, dtype=float)
    qij = np.asarray(qij, dtype=float)
    if not (len(prev_params) == len(new_params) == len(qhat) == len(qij)):
        raise ValueError("inconsistent lengths in step_lower_bound")
    y_arr = np.asarray(y, dtype=float)
    total = 0.0
    for pp, pn, w, q in zip(prev_params, new_params, qhat, qij):
        if isinstance(pn, NIGParams):
            if printed:
                total += _fast._nig_step_bound(
                    pp.rho, pp.nu, pp.a, pp.b, pn.rho, pn.nu, pn.a, pn.b,
                    float(w), float(np.log(q)), float(y_arr), True)
                continue
            total += _nig_neg_kl(pn, pp)
            total += w * _nig_expected_loglik(pn, float(y_arr))
        else:
            total += _niw_neg_kl(pn, pp)
            total += w * _niw_expected_loglik(pn, y_arr)
        if w > 0.0:
            total += -w * np.log(w) + w * np.log(q)
    return float(total)


# ---------------------------------------------------------------------------
# Stepping and fitting
# ---------------------------------------------------------------------------

def vsugs_step(fit: VsugsFit, y, hard: bool = False,
               printed_lb: bool = False) -> VsugsFit:
    """Process one observation: compute its allocation distribution, apply
    the fractionally weighted update to every admissible cluster, and
    accumulate the per-step bound.  ``hard`` forces the indicator at the
    argmax, reproducing the greedy update.  Mutates and returns ``fit``."""
    st = fit.state
    qij = _soft_weights(st)
    qhat = vsugs_allocate(st, y)
    if hard:
        k = int(np.argmax(qhat))
        qhat = np.zeros_like(qhat)
        qhat[k] = 1.0
    L = len(qhat)
    prev = [st.cluster_params(j) for j in range(L)]
    new = []
    for j in range(L):
        w = float(qhat[j])
        if w < WEIGHT_FLOOR:
            new.append(prev[j])
            continue
        if st.family == "nig":
            p = nig_weighted_update(prev[j], float(y), w)
            st.rho[j], st.nu[j], st.a[j], st.b[j] = p.rho, p.nu, p.a, p.b
        else:
            p = niw_weighted_update(prev[j], np.asarray(y, dtype=float), w)
            st.mean[j], st.kappa[j], st.psi[j], st.df[j] = \
                p.mean, p.kappa, p.psi, p.df
        new.append(p)
    lb = step_lower_bound(prev, new, qhat, qij, y, printed=printed_lb)
    st.soft_counts[:L] += qhat
    if st.n_occupied < st.trunc and qhat[-1] > 0.0:
        st.n_occupied += 1
    st.processed += 1.0
    st.lower_bound += lb
    i0 = len(fit.step_bounds)
    fit.allocations[i0, :L] = qhat
    fit.step_bounds = np.append(fit.step_bounds, lb)
    return fit


def vsugs_fit(data, alpha: float, T: int, prior: Params,
              hard: bool = False, printed_lb: bool = False,
              fast: bool = True) -> VsugsFit:
    """Fold :func:`vsugs_step` over the data in the given order.

    Univariate NIG fits go through the compiled kernel unless ``fast`` is
    off; results agree with the step-by-step path to float precision."""
    ys = np.asarray(data, dtype=float)
    if ys.ndim == 2 and ys.shape[1] == 1:
        ys = ys[:, 0]
    N = len(ys)
    if N < 1:
        raise ValueError("need at least one observation")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if fast and ys.ndim == 1 and isinstance(prior, NIGParams):
        rho, nu, a, b, counts, alloc, lbs, K = _fast.vsugs_core(
            np.ascontiguousarray(ys), float(alpha), int(T),
            prior.rho, prior.nu, prior.a, prior.b,
            hard, printed_lb, WEIGHT_FLOOR)
        state = FitState(
            family="nig", prior=prior, alpha=float(alpha), trunc=int(T),
            rho=rho, nu=nu, a=a, b=b, soft_counts=counts,
            n_occupied=int(K), processed=float(N),
            lower_bound=float(np.sum(lbs)))
        return VsugsFit(state, alloc, lbs)
    state = FitState.from_prior(prior, float(alpha), int(T), int(T))
    fit = VsugsFit(state, np.zeros((N, T)), np.zeros(0))
    for y in ys:
        vsugs_step(fit, y, hard=hard, printed_lb=printed_lb)
    return fit


def predictive_density(fit: VsugsFit, ys, log: bool = False) -> np.ndarray:
    """Fitted predictive density: the soft-urn-weighted mixture of cluster
    predictives, with the new-cluster slot paired with the prior predictive."""
    return state_predictive_density(fit.state, ys, log=log)


def state_predictive_density(state: FitState, ys,
                             log: bool = False) -> np.ndarray:
    from .core import niw_log_predictive
    weights = _soft_weights(state)
    L = len(weights)
    K = min(L, state.n_occupied)  # trailing slot (if any) is the prior copy
    ys = np.asarray(ys, dtype=float)

    def params(j):
        return state.cluster_params(j) if j < K else state.prior

    if state.family == "nig":
        scalar = ys.ndim == 0
        pts = np.atleast_1d(ys)
        comp = np.empty((L, len(pts)))
        for j in range(L):
            p = params(j)
            comp[j] = nig_log_predictive_arrays(p.rho, p.nu, p.a, p.b, pts)
    else:
        scalar = ys.ndim == 1
        pts = np.atleast_2d(ys)
        comp = np.empty((L, len(pts)))
        for j in range(L):
            comp[j] = np.atleast_1d(niw_log_predictive(params(j), pts))
    m = comp.max(axis=0)
    dens = np.log(weights @ np.exp(comp - m)) + m
    if not log:
        dens = np.exp(dens)
    return float(dens[0]) if scalar else dens
