"""Weighted sinusoid fits sharing one period across datasets.

Each dataset follows ``y = offset + amplitude * cos(2*pi*x/period + phase)``.
Internally the model is linear in ``(offset, a, b)`` with
``a*cos(kx) + b*sin(kx)`` and the shared wavenumber ``k = 2*pi/period`` is
the only nonlinear parameter; a damped Gauss-Newton loop with the analytic
Jacobian refines a coarse period grid search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class SinusoidFit:
    offset: float
    amplitude: float
    period: float
    phase: float
    visibility: float
    visibility_sigma: float
    chi2_per_dof: float
    offset_sigma: float = 0.0
    amplitude_sigma: float = 0.0
    period_sigma: float = 0.0
    phase_sigma: float = 0.0
    degenerate: bool = False

    def model(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            return np.full_like(x, self.offset)
        return self.offset + self.amplitude * np.cos(2 * np.pi * x / self.period + self.phase)


@dataclass(frozen=True)
class CommonPeriodFit:
    """Joint fit result with the covariance of ``(period, phase_0, phase_1, ...)``."""

    fits: list[SinusoidFit]
    period_phase_cov: np.ndarray
    chi2: float
    dof: int
    iterations: int

    def phase_difference(self, i: int, j: int) -> tuple[float, float]:
        """phase_i - phase_j wrapped to (-pi, pi], with its standard error."""
        cov = self.period_phase_cov
        diff = math.remainder(self.fits[i].phase - self.fits[j].phase, 2 * math.pi)
        var = cov[1 + i, 1 + i] + cov[1 + j, 1 + j] - 2 * cov[1 + i, 1 + j]
        return diff, math.sqrt(max(var, 0.0))


Dataset = tuple[Sequence[float], Sequence[float], Sequence[float] | None]


def _as_arrays(dataset: Dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, y, s = dataset
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.ones_like(y) if s is None else np.asarray(s, dtype=float)
    if not (x.shape == y.shape == s.shape) or x.ndim != 1:
        raise ValueError("x, y and sigma_y must be 1-d arrays of equal length")
    if len(x) < 5:
        raise ValueError(f"need at least 5 points per dataset, got {len(x)}")
    if np.ptp(x) == 0:
        raise ValueError("x values are all equal")
    if np.any(s <= 0):
        raise ValueError("sigma_y must be positive")
    return x, y, s


def _linear_solve(k: float, data) -> tuple[float, list[np.ndarray]]:
    chi2, coefs = 0.0, []
    for x, y, s in data:
        design = np.column_stack([np.ones_like(x), np.cos(k * x), np.sin(k * x)]) / s[:, None]
        coef, *_ = np.linalg.lstsq(design, y / s, rcond=None)
        chi2 += float(np.sum((design @ coef - y / s) ** 2))
        coefs.append(coef)
    return chi2, coefs


def _initial_wavenumber(data, period_guess: float | None, n_grid: int) -> float:
    if period_guess is not None:
        return 2 * np.pi / period_guess
    span = max(np.ptp(x) for x, _, _ in data)
    step = min(np.min(np.diff(np.unique(x))) for x, _, _ in data)
    periods = np.geomspace(2.5 * step, 2.0 * span, n_grid)
    scores = [_linear_solve(2 * np.pi / p, data)[0] for p in periods]
    return 2 * np.pi / periods[int(np.argmin(scores))]


def _residuals_and_jacobian(theta: np.ndarray, data):
    k = theta[0]
    res, jac_rows = [], []
    n_params = len(theta)
    for i, (x, y, s) in enumerate(data):
        c, a, b = theta[1 + 3 * i : 4 + 3 * i]
        cos, sin = np.cos(k * x), np.sin(k * x)
        res.append((y - (c + a * cos + b * sin)) / s)
        jac = np.zeros((len(x), n_params))
        jac[:, 0] = x * (-a * sin + b * cos) / s
        jac[:, 1 + 3 * i] = 1 / s
        jac[:, 2 + 3 * i] = cos / s
        jac[:, 3 + 3 * i] = sin / s
        jac_rows.append(jac)
    return np.concatenate(res), np.vstack(jac_rows)


def _levenberg(theta: np.ndarray, data, max_iter: int) -> tuple[np.ndarray, np.ndarray, int]:
    lam = 1e-3
    r, jac = _residuals_and_jacobian(theta, data)
    chi2 = float(r @ r)
    for it in range(1, max_iter + 1):
        jtj = jac.T @ jac
        grad = jac.T @ r
        try:
            step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj)), grad)
        except np.linalg.LinAlgError:
            lam *= 10
            continue
        trial = theta + step
        r_new, jac_new = _residuals_and_jacobian(trial, data)
        chi2_new = float(r_new @ r_new)
        if chi2_new <= chi2:
            small_step = np.all(np.abs(step) <= 1e-12 * (np.abs(theta) + 1e-12))
            small_gain = chi2 - chi2_new <= 1e-14 * max(chi2, 1e-300)
            theta, r, jac, chi2 = trial, r_new, jac_new, chi2_new
            lam = max(lam / 10, 1e-12)
            if small_step or small_gain:
                return theta, jac, it
        else:
            lam *= 10
            if lam > 1e16:
                # no downhill step left at machine precision
                return theta, jac, it
    raise FitError(f"fit did not converge in {max_iter} iterations")


def fit_common_period_joint(
    datasets: Sequence[Dataset],
    *,
    period_guess: float | None = None,
    n_grid: int = 400,
    max_iter: int = 200,
) -> CommonPeriodFit:
    """Weighted least-squares fit with one period shared by all datasets.

    Parameter uncertainties come from the inverse of the weighted normal
    matrix, i.e. ``sigma_y`` are taken as absolute errors. Datasets with no
    variation in ``y`` are returned flagged ``degenerate`` with zero
    visibility and do not constrain the period.
    """
    if not datasets:
        raise ValueError("no datasets to fit")
    arrays = [_as_arrays(d) for d in datasets]
    live = [i for i, (_, y, _) in enumerate(arrays) if np.ptp(y) > 0]
    data = [arrays[i] for i in live]

    fits: list[SinusoidFit | None] = [None] * len(arrays)
    cov_out = np.full((1 + len(arrays), 1 + len(arrays)), np.nan)
    chi2, dof, iterations = 0.0, 0, 0
    period = float("nan")

    if data:
        k0 = _initial_wavenumber(data, period_guess, n_grid)
        _, coefs = _linear_solve(k0, data)
        theta0 = np.concatenate([[k0], *coefs])
        theta, jac, iterations = _levenberg(theta0, data, max_iter)
        r, _ = _residuals_and_jacobian(theta, data)
        chi2 = float(r @ r)
        dof = sum(len(x) for x, _, _ in data) - len(theta)
        try:
            cov = np.linalg.inv(jac.T @ jac)
        except np.linalg.LinAlgError as exc:
            raise FitError("singular normal matrix") from exc

        k = theta[0]
        period = 2 * np.pi / abs(k)
        # derivatives of (period, phase_i) with respect to theta, for the phase covariance
        transform = np.zeros((1 + len(data), len(theta)))
        transform[0, 0] = -2 * np.pi / k**2 * np.sign(k)
        for n, i in enumerate(live):
            x, _, _ = arrays[i]
            c, a, b = theta[1 + 3 * n : 4 + 3 * n]
            if k < 0:
                b = -b  # cos(kx)+sin(kx) with k<0 equals the |k| form with b flipped
            amp = math.hypot(a, b)
            phase = math.atan2(-b, a)
            ic, ia, ib = 1 + 3 * n, 2 + 3 * n, 3 + 3 * n
            sb = -1.0 if k < 0 else 1.0
            d_amp = np.zeros(len(theta))
            d_amp[ia], d_amp[ib] = a / amp, sb * b / amp
            d_phase = np.zeros(len(theta))
            d_phase[ia], d_phase[ib] = b / amp**2, -sb * a / amp**2
            transform[1 + n] = d_phase
            var_c = cov[ic, ic]
            var_amp = d_amp @ cov @ d_amp
            cov_amp_c = d_amp @ cov[:, ic]
            vis = amp / c
            grad_v = np.array([-amp / c**2, 1 / c])
            var_v = grad_v @ np.array([[var_c, cov_amp_c], [cov_amp_c, var_amp]]) @ grad_v
            fits[i] = SinusoidFit(
                offset=float(c),
                amplitude=float(amp),
                period=float(period),
                phase=float(math.remainder(phase, 2 * math.pi)),
                visibility=float(vis),
                visibility_sigma=float(math.sqrt(max(var_v, 0.0))),
                chi2_per_dof=0.0,
                offset_sigma=float(math.sqrt(var_c)),
                amplitude_sigma=float(math.sqrt(max(var_amp, 0.0))),
                period_sigma=float(math.sqrt(transform[0] @ cov @ transform[0])),
                phase_sigma=float(math.sqrt(max(d_phase @ cov @ d_phase, 0.0))),
            )
        pp_cov = transform @ cov @ transform.T
        index = [0] + [1 + i for i in live]
        cov_out[np.ix_(index, index)] = pp_cov

    for i, (x, y, s) in enumerate(arrays):
        if fits[i] is None:
            fits[i] = SinusoidFit(
                offset=float(np.mean(y)),
                amplitude=0.0,
                period=period,
                phase=0.0,
                visibility=0.0,
                visibility_sigma=0.0,
                chi2_per_dof=float("nan"),
                degenerate=True,
            )
            continue
        fit = fits[i]
        resid = (y - fit.model(x)) / s
        own_dof = len(x) - 3 - (1 if len(live) == 1 else 0)
        fits[i] = replace(fit, chi2_per_dof=float(resid @ resid) / max(own_dof, 1))
        if fit.visibility > 1 + 3 * fit.visibility_sigma or fit.visibility < 0:
            raise FitError(f"dataset {i}: unphysical visibility {fit.visibility:.4f} +- {fit.visibility_sigma:.4f}")

    return CommonPeriodFit(fits=fits, period_phase_cov=cov_out, chi2=chi2, dof=dof, iterations=iterations)


def fit_common_period(datasets: Sequence[Dataset], **kwargs) -> list[SinusoidFit]:
    return fit_common_period_joint(datasets, **kwargs).fits


def poisson_sigma(counts) -> np.ndarray:
    """sqrt(N) counting errors with a floor of 1."""
    return np.sqrt(np.maximum(np.asarray(counts, dtype=float), 1.0))
