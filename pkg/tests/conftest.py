"""Shared oracles and helpers for the test suite.

The batch conjugate formulas here are written in the mean-precision
(m, kappa, a, b) parameterization, independently of the package's recursive
(rho, nu, a, b) updates, so the two paths only agree if both are correct.
"""

import sys

import numpy as np
from scipy.special import gammaln

from dpmseq.core import NIGParams

LOG_2PI = np.log(2.0 * np.pi)


def batch_nig_posterior(prior: NIGParams, ys, ws=None) -> NIGParams:
    """Closed-form weighted conjugate posterior computed in one shot.

    Uses the mean-precision parameterization kappa = 1/nu and the
    sum-of-squares form of the scale update, not the package's one-point
    recursion.
    """
    ys = np.asarray(ys, dtype=float)
    ws = np.ones_like(ys) if ws is None else np.asarray(ws, dtype=float)
    kappa0 = 1.0 / prior.nu
    m0 = prior.rho
    W = ws.sum()
    kappa_n = kappa0 + W
    m_n = (kappa0 * m0 + np.sum(ws * ys)) / kappa_n
    a_n = prior.a + 0.5 * W
    b_n = prior.b + 0.5 * (np.sum(ws * ys ** 2)
                           + kappa0 * m0 ** 2 - kappa_n * m_n ** 2)
    return NIGParams(m_n, 1.0 / kappa_n, a_n, b_n)


def nig_log_marginal(prior: NIGParams, ys, ws=None) -> float:
    """Closed-form log marginal likelihood of a weighted sample under one
    NIG component (normalizing-constant ratio form)."""
    ys = np.asarray(ys, dtype=float)
    ws = np.ones_like(ys) if ws is None else np.asarray(ws, dtype=float)
    post = batch_nig_posterior(prior, ys, ws)
    kappa0, kappa_n = 1.0 / prior.nu, 1.0 / post.nu
    W = ws.sum()
    return float(-0.5 * W * LOG_2PI + 0.5 * (np.log(kappa0) - np.log(kappa_n))
                 + gammaln(post.a) - gammaln(prior.a)
                 + prior.a * np.log(prior.b) - post.a * np.log(post.b))


def random_nig_params(rng) -> NIGParams:
    return NIGParams(rng.normal(0.0, 3.0),
                     rng.uniform(0.1, 5.0),
                     rng.uniform(0.2, 6.0),
                     rng.uniform(0.2, 6.0))


def params_close(p, q, tol=1e-10) -> float:
    """Max absolute component difference between two NIG parameter sets."""
    return max(abs(p.rho - q.rho), abs(p.nu - q.nu),
               abs(p.a - q.a), abs(p.b - q.b))


ACCEPTANCE_LINES = []


def acceptance_report(name: str, ok: bool, detail: str = ""):
    """Record one pass/fail line per acceptance check (echoed in the
    terminal summary), then assert."""
    status = "PASS" if ok else "FAIL"
    line = f"[acceptance] {name}: {status}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
