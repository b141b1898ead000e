"""Three-class hierarchical mixture classifier: fixed equal class weights
with one DPM of (bivariate) normals per class, fitted sequentially."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core import FitState, NIWParams, Params, WEIGHT_FLOOR, \
    nig_weighted_update, niw_weighted_update, NIGParams
from .data import Dataset, as_matrix
from .vsugs import _soft_weights, state_predictive_density, vsugs_allocate

CLASS_WEIGHTS = np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])


@dataclass
class ThreeClassFit:
    class_states: List[FitState]
    responsibilities: np.ndarray   # (N, 3)
    labels: np.ndarray             # argmax class per observation


def anchored_niw_priors(anchors, kappa: float = 1.0,
                        psi: Optional[np.ndarray] = None,
                        df: Optional[float] = None) -> List[NIWParams]:
    """One NIW prior per class, located at the supplied anchor points."""
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    if anchors.shape[0] != 3:
        raise ValueError("exactly three anchors required")
    d = anchors.shape[1]
    psi = np.eye(d) if psi is None else np.asarray(psi, dtype=float)
    df = float(d + 2) if df is None else float(df)
    return [NIWParams(a.copy(), kappa, psi.copy(), df) for a in anchors]


def quantile_anchors(data) -> np.ndarray:
    """Fallback anchors along the first coordinate: the 1/6, 1/2 and 5/6
    quantiles, paired with the per-coordinate medians elsewhere.  Label
    identifiability is only heuristic with these."""
    mat = as_matrix(data)
    med = np.median(mat, axis=0)
    anchors = np.tile(med, (3, 1))
    anchors[:, 0] = np.quantile(mat[:, 0], [1 / 6, 1 / 2, 5 / 6])
    return anchors


def _class_weighted_step(state: FitState, y, scale: float):
    """One VSUGS step inside a class DPM with every allocation weight scaled
    by the class responsibility.  The lower bound is not accumulated here."""
    if scale < WEIGHT_FLOOR:
        return
    qhat = vsugs_allocate(state, y) * scale
    L = len(qhat)
    for j in range(L):
        w = float(qhat[j])
        if w < WEIGHT_FLOOR:
            continue
        if state.family == "nig":
            p = nig_weighted_update(state.cluster_params(j), float(y), w)
            state.rho[j], state.nu[j], state.a[j], state.b[j] = \
                p.rho, p.nu, p.a, p.b
        else:
            p = niw_weighted_update(state.cluster_params(j),
                                    np.asarray(y, dtype=float), w)
            state.mean[j], state.kappa[j], state.psi[j], state.df[j] = \
                p.mean, p.kappa, p.psi, p.df
    state.soft_counts[:L] += qhat
    if state.n_occupied < state.trunc and qhat[-1] > 0.0:
        state.n_occupied += 1
    state.processed += scale


def three_class_fit(data, priors: Sequence[Params], alpha: float, T: int,
                    engine: str = "vsugs") -> ThreeClassFit:
    """Sequentially classify each point across three class-conditional DPMs.

    Responsibilities are proportional to the fixed 1/3 class weights times
    each class DPM's current predictive density.  The soft engine updates
    every class with responsibility-scaled allocation weights; the hard
    engine assigns each point to the argmax class and hard-updates only that
    class's DPM.
    """
    if engine not in ("sugs", "vsugs"):
        raise ValueError(f"unknown engine {engine!r}")
    mat = as_matrix(data)
    if len(priors) != 3:
        raise ValueError("exactly three class priors required")
    for c1 in range(3):
        for c2 in range(c1 + 1, 3):
            if _same_prior(priors[c1], priors[c2]):
                warnings.warn(
                    f"classes {c1} and {c2} are identically initialized; "
                    "label identifiability is not guaranteed", stacklevel=2)
    states = [FitState.from_prior(p, float(alpha), int(T), int(T))
              for p in priors]
    N = len(mat)
    resp = np.zeros((N, 3))
    for i in range(N):
        y = mat[i] if mat.shape[1] > 1 else float(mat[i, 0])
        logf = np.array([state_predictive_density(st, y, log=True)
                         for st in states])
        logr = np.log(CLASS_WEIGHTS) + logf
        logr -= logr.max()
        r = np.exp(logr)
        r /= r.sum()
        resp[i] = r
        if engine == "sugs":
            c = int(np.argmax(r))
            st = states[c]
            qhat = vsugs_allocate(st, y)
            _apply_hard(st, y, int(np.argmax(qhat)))
        else:
            for c in range(3):
                _class_weighted_step(states[c], y, float(r[c]))
    return ThreeClassFit(states, resp, np.argmax(resp, axis=1))


def _apply_hard(state: FitState, y, j: int):
    if state.family == "nig":
        p = nig_weighted_update(state.cluster_params(j), float(y), 1.0)
        state.rho[j], state.nu[j], state.a[j], state.b[j] = \
            p.rho, p.nu, p.a, p.b
    else:
        p = niw_weighted_update(state.cluster_params(j),
                                np.asarray(y, dtype=float), 1.0)
        state.mean[j], state.kappa[j], state.psi[j], state.df[j] = \
            p.mean, p.kappa, p.psi, p.df
    state.soft_counts[j] += 1.0
    if j == state.n_occupied:
        state.n_occupied += 1
    state.processed += 1.0


def _same_prior(p1: Params, p2: Params) -> bool:
    if type(p1) is not type(p2):
        return False
    if isinstance(p1, NIGParams):
        return (p1.rho, p1.nu, p1.a, p1.b) == (p2.rho, p2.nu, p2.a, p2.b)
    return (np.array_equal(p1.mean, p2.mean) and p1.kappa == p2.kappa
            and np.array_equal(p1.psi, p2.psi) and p1.df == p2.df)


def concordance(labels_a, labels_b) -> float:
    """Fraction of positions receiving identical labels."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("label vectors differ in length")
    return float(np.mean(a == b))


def quantile_normalize_two_channel(values, log2: bool = True) -> np.ndarray:
    """log2-transform (optional) then quantile-normalize the two channels:
    each column's sorted values are replaced by the cross-channel mean of
    the sorted columns, preserving within-column ranks."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise ValueError("expected an (N, 2) matrix")
    if log2:
        if np.any(v <= 0):
            raise ValueError("log2 transform requires positive intensities")
        v = np.log2(v)
    order = np.argsort(v, axis=0)
    mean_sorted = np.sort(v, axis=0).mean(axis=1)
    out = np.empty_like(v)
    for c in range(2):
        out[order[:, c], c] = mean_sorted
    return out


def gen_three_class(n: int, seed: int, centers=None, offset: float = 1.0,
                    sd: float = 0.5) -> Dataset:
    """Synthetic three-class 2-d data with non-normal class conditionals:
    each class is an equal-weight mixture of two normals straddling its
    center along the first coordinate."""
    rng = np.random.default_rng(seed)
    if centers is None:
        centers = np.array([[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]])
    centers = np.asarray(centers, dtype=float)
    labels = rng.choice(3, size=n, p=CLASS_WEIGHTS)
    sides = rng.choice([-1.0, 1.0], size=n)
    means = centers[labels].copy()
    means[:, 0] += sides * offset
    values = rng.normal(means, sd)
    return Dataset(values, labels=labels)
