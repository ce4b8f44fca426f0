"""Statistical post-processing and closed-form propagation oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf

from risray import em
from risray.geo import Material, itu_permittivity


@dataclass(frozen=True)
class Ecdf:
    """Right-continuous empirical CDF of a sample."""

    values: np.ndarray  # sorted

    @property
    def n(self) -> int:
        return len(self.values)

    def __call__(self, x) -> np.ndarray | float:
        res = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.n
        return float(res) if np.isscalar(x) else res

    def quantile(self, q: float) -> float:
        idx = min(self.n - 1, max(0, math.ceil(q * self.n) - 1))
        return float(self.values[idx])


def ecdf(samples) -> Ecdf:
    arr = np.sort(np.asarray(samples, dtype=float))
    if arr.size == 0:
        raise ValueError("ecdf needs at least one sample")
    return Ecdf(values=arr)


@dataclass(frozen=True)
class FitResult:
    fit_type: str
    coefficients: np.ndarray
    residual: float  # sum of squared residuals

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))


def _normal_cdf(x, mu, sigma):
    return 0.5 * (1.0 + erf((x - mu) / (sigma * math.sqrt(2.0))))


def fit_gaussian_cdf(e: Ecdf) -> FitResult:
    """Least-squares Gaussian CDF fit to the ECDF points.

    Coefficients are (mu, sigma).  Minimizes the vertical deviation at
    the sample points, matching how a fitted curve is judged on a plot.
    """
    if e.n < 3:
        raise ValueError("need at least 3 samples")
    x = e.values
    y = (np.arange(1, e.n + 1) - 0.5) / e.n
    mu0 = float(np.mean(x))
    s0 = float(np.std(x))
    if s0 == 0:
        raise ValueError("degenerate (zero-variance) sample")

    def resid(p):
        return _normal_cdf(x, p[0], abs(p[1])) - y

    sol = least_squares(resid, x0=[mu0, s0], method="lm")
    mu, sigma = sol.x[0], abs(sol.x[1])
    return FitResult("gaussian_cdf", np.array([mu, sigma]), float(np.sum(sol.fun**2)))


def fit_polynomial(x, y, degree: int) -> FitResult:
    """Ordinary least squares polynomial fit with domain scaling.

    Coefficients are returned in the data domain, ascending order
    (c0 + c1 x + ...).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) <= degree:
        raise ValueError("need more points than the polynomial degree")
    series = np.polynomial.Polynomial.fit(x, y, degree)
    coeffs = series.convert().coef
    if len(coeffs) < degree + 1:
        coeffs = np.pad(coeffs, (0, degree + 1 - len(coeffs)))
    pred = series(x)
    return FitResult(f"polynomial({degree})", coeffs, float(np.sum((pred - y) ** 2)))


def fit_loglog_line(x, y) -> FitResult:
    """Slope/intercept of log10(y) against log10(x); coefficients (b, m)."""
    lx = np.log10(np.asarray(x, dtype=float))
    ly = np.log10(np.asarray(y, dtype=float))
    m, b = np.polyfit(lx, ly, 1)
    resid = float(np.sum((m * lx + b - ly) ** 2))
    return FitResult("loglog_line", np.array([b, m]), resid)


def friis_power_db(distance: float, freq_ghz: float) -> float:
    """Free-space received power in dB relative to transmit."""
    return 20.0 * math.log10(abs(em.free_space_gain(distance, freq_ghz)))


def two_ray_power(
    d: float, h_t: float, h_r: float, freq_ghz: float, ground: Material
) -> float:
    """Two-ray ground-reflection received power, dB relative to transmit.

    Direct ray of length d1 plus a ground bounce of unfolded length d2
    weighted by the Jones-averaged Fresnel coefficient of the ground at
    the geometric incidence angle.  Matches the ray tracer's path
    pipeline on the same geometry by construction.
    """
    if d <= 0:
        raise ValueError("distance must be positive")
    d1 = math.hypot(d, h_t - h_r)
    d2 = math.hypot(d, h_t + h_r)
    eps = itu_permittivity(ground, freq_ghz)
    theta = math.acos((h_t + h_r) / d2)  # incidence angle from the normal
    gamma = em.fresnel(eps, theta).mean
    field = em.free_space_gain(d1, freq_ghz) + gamma * em.free_space_gain(d2, freq_ghz)
    if abs(field) == 0.0:
        return float("-inf")
    return 20.0 * math.log10(abs(field))


def ris_cascade_closed_form(n_elements: int, d_t: float, d_r: float, freq_ghz: float) -> float:
    """Free-space optimal-coefficient cascade amplitude.

    Far-field model: every element contributes the product of the two
    leg amplitudes coherently, so the total is N times the product of
    the Friis amplitudes of each leg.
    """
    lam = em.wavelength(freq_ghz)
    return n_elements * (lam / (4.0 * math.pi * d_t)) * (lam / (4.0 * math.pi * d_r))


def quantile_report(e: Ecdf, thresholds=(3.0, 0.0)) -> dict:
    """Probability of the sample falling at or below each threshold."""
    return {float(t): float(e(t)) for t in thresholds}


def ecdf_to_csv(e: Ecdf) -> str:
    """Curve samples as ``value_db,cdf`` rows."""
    lines = ["value_db,cdf"]
    n = e.n
    for i, v in enumerate(e.values):
        lines.append(f"{v:.10g},{(i + 1) / n:.10g}")
    return "\n".join(lines) + "\n"


def fit_to_csv(fit: FitResult, x) -> str:
    """Fitted-curve samples at ``x`` as ``x,fitted`` rows."""
    x = np.asarray(x, dtype=float)
    if fit.fit_type == "gaussian_cdf":
        mu, sigma = fit.coefficients
        y = _normal_cdf(x, mu, sigma)
    elif fit.fit_type.startswith("polynomial"):
        y = sum(c * x**k for k, c in enumerate(fit.coefficients))
    elif fit.fit_type == "loglog_line":
        b, m = fit.coefficients
        y = 10.0 ** (b + m * np.log10(x))
    else:
        raise ValueError(f"unknown fit type {fit.fit_type!r}")
    lines = ["x,fitted"] + [f"{a:.10g},{b:.10g}" for a, b in zip(x, y)]
    return "\n".join(lines) + "\n"


def summary_text(fit: FitResult) -> str:
    """Human-readable block with the coefficients and the residual."""
    coeffs = ", ".join(f"{c:.10g}" for c in fit.coefficients)
    return (
        f"fit: {fit.fit_type}\n"
        f"coefficients: {coeffs}\n"
        f"residual_sum_of_squares: {fit.residual:.10g}\n"
    )


def fringe_normal_deg(power_db: np.ndarray, spacing_m: float, pad: int = 256):
    """Dominant fringe normal of a coverage grid, degrees in [0, 180).

    Windowed zero-padded 2D spectrum of the linear-power map; the peak
    bin away from the DC neighborhood gives the fringe wave vector.
    Returns (azimuth_deg, spacing_m_of_fringe).
    """
    z = 10.0 ** (np.asarray(power_db, dtype=float) / 10.0)
    z = z - z.mean()
    ny, nx = z.shape
    w = np.hanning(ny)[:, None] * np.hanning(nx)[None, :]
    spec = np.fft.fftshift(np.abs(np.fft.fft2(z * w, s=(pad, pad))))
    cy = cx = pad // 2
    spec[cy - 2 : cy + 3, cx - 2 : cx + 3] = 0.0
    iy, ix = np.unravel_index(np.argmax(spec), spec.shape)
    fy, fx = iy - cy, ix - cx
    azimuth = math.degrees(math.atan2(fy, fx)) % 180.0
    fringe_spacing = pad * spacing_m / math.hypot(fx, fy)
    return azimuth, fringe_spacing
