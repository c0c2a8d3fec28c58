"""Bias/variance-corrected tests for MPLE coordinates and uniformity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numcore import chi_square_cdf, normal_cdf

KINDS = ("corrected_z", "corrected_chi2", "classical_z", "classical_lrt")


@dataclass
class TestReport:
    statistic: float
    p_value: float
    kind: str
    dof: int | None = None

    __test__ = False   # keep pytest from collecting this as a test class

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p_value outside [0, 1]")


def _check_scale(b_star):
    if not b_star > 0:
        raise ValueError("b_star must be positive")


def two_sided_z_pvalues(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.clip(2.0 * normal_cdf(-np.abs(z)), 0.0, 1.0)


def corrected_pvalues(beta_hat_coords, b_star: float) -> np.ndarray:
    """Two-sided ``2 Phi(-|beta_hat_j / b*|)`` for null coordinates."""
    _check_scale(b_star)
    return two_sided_z_pvalues(np.asarray(beta_hat_coords, dtype=float) / b_star)


def classical_pvalues(beta_hat_coords, std) -> np.ndarray:
    """Wald z p-values with per-coordinate classical standard errors."""
    std = np.asarray(std, dtype=float)
    if np.any(std <= 0):
        raise ValueError("standard errors must be positive")
    return two_sided_z_pvalues(np.asarray(beta_hat_coords, dtype=float) / std)


def chi2_sf(stat: float, dof: int) -> float:
    return float(min(1.0, max(0.0, 1.0 - chi_square_cdf(stat, dof))))


def wald_chi2(beta_hat_S, b_star: float) -> TestReport:
    """``sum_j (beta_hat_j / b*)^2`` against chi-square with ``|S|`` dof."""
    _check_scale(b_star)
    x = np.atleast_1d(np.asarray(beta_hat_S, dtype=float))
    if x.size == 0:
        raise ValueError("the null set S is empty")
    stat = float(np.sum((x / b_star) ** 2))
    return TestReport(stat, chi2_sf(stat, x.size), "corrected_chi2", dof=int(x.size))


def lrt_report(statistic: float) -> TestReport:
    """Classical one-coordinate likelihood ratio test against chi-square(1)."""
    return TestReport(float(statistic), chi2_sf(max(statistic, 0.0), 1), "classical_lrt", dof=1)


def empirical_ab(beta_hat, beta_true) -> tuple[float, float]:
    """``a = <beta_hat, beta*> / |beta*|^2`` and ``b = |beta_hat - a beta*| / sqrt(p)``."""
    bh = np.asarray(beta_hat, dtype=float)
    bt = np.asarray(beta_true, dtype=float)
    if bh.shape != bt.shape:
        raise ValueError("beta_hat and beta_true differ in shape")
    nn = float(bt @ bt)
    if nn == 0:
        raise ValueError("beta_true is zero")
    a = float(bh @ bt) / nn
    return a, float(np.linalg.norm(bh - a * bt)) / math.sqrt(bt.size)


def ks_uniform_stat(pvals) -> float:
    """Kolmogorov-Smirnov distance between the sample and U[0, 1]."""
    u = np.sort(np.asarray(pvals, dtype=float).ravel())
    if u.size == 0:
        raise ValueError("empty sample")
    if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
        raise ValueError("values must lie in [0, 1]")
    m = u.size
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - u), np.max(u - (i - 1) / m)))
