"""Window functionals over (d+1) consecutive observations and centered sums.

A filter maps the window (x_t, ..., x_{t+d}) to a real number; built-in
kinds are the sign-change indicator (d=1), the lag product x_t * x_{t+d},
and multivariate polynomials given by a coefficient table.  Centering uses
the exact window mean where a closed form exists, otherwise a Monte Carlo
estimate whose standard error is reported rather than hidden.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import linproc
from ._util import ConfigError
from .linproc import CoefficientModel, InnovationSpec, SeriesSample

BOUNDED = "bounded"
POLY_DOMINATED = "polynomially-dominated"


@dataclass(frozen=True)
class FilterSpec:
    """A window functional plus the smoothness class it is asserted to satisfy.

    ``coeffs`` is a tuple of (exponent-tuple, coefficient) pairs for the
    polynomial kinds.  ``degree`` is the total degree of the dominating
    polynomial; innovations must then have moments up to max(8, 4*degree).
    """

    kind: str
    d: int
    coeffs: tuple[tuple[tuple[int, ...], float], ...] | None = None
    fn: Callable | None = None
    smoothness_class: str = BOUNDED
    degree: int | None = None
    known_power_rank: int | None = None

    def __post_init__(self):
        if self.d < 0:
            raise ConfigError("lag order d must be >= 0")
        if self.kind == "zero-crossing" and self.d != 1:
            raise ConfigError("zero-crossing is a two-point filter (d=1)")
        if self.kind == "polynomial":
            if not self.coeffs:
                raise ConfigError("polynomial filter needs a coefficient table")
            for expo, _ in self.coeffs:
                if len(expo) != self.d + 1 or any(e < 0 for e in expo):
                    raise ConfigError(f"bad exponent tuple {expo} for d={self.d}")
        if self.kind == "custom" and self.fn is None:
            raise ConfigError("custom filter needs an evaluator")

    @property
    def width(self) -> int:
        return self.d + 1

    def required_moment_order(self) -> int:
        if self.smoothness_class == POLY_DOMINATED:
            return max(8, 4 * (self.degree or 1))
        return 8

    def as_polynomial(self) -> dict[tuple[int, ...], float] | None:
        """Coefficient-table view when the filter is exactly polynomial."""
        if self.kind == "polynomial":
            return {tuple(e): c for e, c in self.coeffs}
        if self.kind == "lag-product":
            if self.d == 0:
                return {(2,): 1.0}
            e = [0] * (self.d + 1)
            e[0] = 1
            e[-1] = 1
            return {tuple(e): 1.0}
        return None

    def describe(self) -> dict:
        out = {"kind": self.kind, "d": self.d,
               "smoothness_class": self.smoothness_class}
        if self.coeffs is not None:
            out["coeffs"] = [[list(e), c] for e, c in self.coeffs]
        if self.degree is not None:
            out["degree"] = self.degree
        if self.known_power_rank is not None:
            out["known_power_rank"] = self.known_power_rank
        return out


def zero_crossing() -> FilterSpec:
    """1 when the adjacent pair changes sign (x_t * x_{t+1} < 0), else 0."""
    return FilterSpec(kind="zero-crossing", d=1, smoothness_class=BOUNDED)


def lag_product(d: int) -> FilterSpec:
    """x_t * x_{t+d}; squares for d=0."""
    return FilterSpec(kind="lag-product", d=d, smoothness_class=POLY_DOMINATED, degree=2)


def polynomial(coeffs, d: int) -> FilterSpec:
    """Multivariate polynomial from a {exponent-tuple: coefficient} table."""
    if isinstance(coeffs, dict):
        coeffs = coeffs.items()
    table = tuple((tuple(int(v) for v in e), float(c)) for e, c in coeffs)
    degree = max((sum(e) for e, _ in table), default=0)
    return FilterSpec(kind="polynomial", d=d, coeffs=table,
                      smoothness_class=POLY_DOMINATED, degree=degree)


def custom(fn: Callable, d: int, smoothness_class: str, degree: int | None = None,
           known_power_rank: int | None = None) -> FilterSpec:
    """User evaluator over windows; the smoothness class is asserted, not checked."""
    if smoothness_class not in (BOUNDED, POLY_DOMINATED):
        raise ConfigError(f"unknown smoothness class {smoothness_class!r}")
    if smoothness_class == POLY_DOMINATED and degree is None:
        raise ConfigError("polynomially-dominated filters must declare a degree")
    return FilterSpec(kind="custom", d=d, fn=fn, smoothness_class=smoothness_class,
                      degree=degree, known_power_rank=known_power_rank)


def evaluate(spec: FilterSpec, windows: np.ndarray) -> np.ndarray:
    """Evaluate the filter on an (..., d+1) array of windows."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.shape[-1] != spec.width:
        raise ValueError(f"windows have width {windows.shape[-1]}, expected {spec.width}")
    if spec.kind == "zero-crossing":
        return (windows[..., 0] * windows[..., 1] < 0.0).astype(np.float64)
    if spec.kind == "lag-product":
        return windows[..., 0] * windows[..., -1]
    if spec.kind == "polynomial":
        out = np.zeros(windows.shape[:-1])
        for expo, coef in spec.coeffs:
            term = np.full(windows.shape[:-1], coef)
            for v, e in enumerate(expo):
                if e:
                    term = term * windows[..., v] ** e
            out += term
        return out
    out = np.asarray(spec.fn(windows), dtype=np.float64)
    if out.shape != windows.shape[:-1]:
        raise ValueError("custom evaluator returned a wrong-shaped array")
    return out


def apply_filter(spec: FilterSpec, series) -> np.ndarray:
    """Filter output over all windows of a path: out[t] = K(x_t..x_{t+d})."""
    values = series.values if isinstance(series, SeriesSample) else np.asarray(series)
    if len(values) <= spec.d:
        raise ValueError(f"series of length {len(values)} has no (d+1)={spec.width} window")
    out = evaluate(spec, sliding_window_view(values, spec.width))
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        raise ValueError(f"filter evaluated non-finite at window index {int(bad[0])}")
    return out


def window_covariance(model: CoefficientModel, sigma2_eps: float, d: int) -> np.ndarray:
    """Covariance matrix of (x_t, ..., x_{t+d}): Toeplitz in gamma."""
    gamma = linproc.autocovariance_grid(model, sigma2_eps, d)
    idx = np.abs(np.subtract.outer(np.arange(d + 1), np.arange(d + 1)))
    return gamma[idx]


def gaussian_moment(cov: np.ndarray, expo: tuple[int, ...]) -> float:
    """E prod_v x_v**e_v for a centered Gaussian vector with covariance ``cov``.

    Classical pairing recursion: pick a coordinate with e_i > 0 and reduce,
    m(e) = (e_i - 1) S_ii m(e - 2u_i) + sum_{j != i} e_j S_ij m(e - u_i - u_j).
    """
    cache: dict[tuple[int, ...], float] = {}

    def rec(e: tuple[int, ...]) -> float:
        total = sum(e)
        if total == 0:
            return 1.0
        if total % 2 == 1:
            return 0.0
        if e in cache:
            return cache[e]
        i = next(v for v, k in enumerate(e) if k > 0)
        out = 0.0
        if e[i] >= 2:
            low = list(e)
            low[i] -= 2
            out += (e[i] - 1) * cov[i, i] * rec(tuple(low))
        for j, k in enumerate(e):
            if j == i or k == 0:
                continue
            low = list(e)
            low[i] -= 1
            low[j] -= 1
            out += k * cov[i, j] * rec(tuple(low))
        cache[e] = out
        return out

    return rec(tuple(int(v) for v in expo))


@dataclass(frozen=True)
class MeanEstimate:
    """A window mean with provenance: exact closed form or MC with its SE."""

    value: float
    se: float
    status: str  # "closed-form" | "estimate"

    @property
    def exact(self) -> bool:
        return self.status == "closed-form"


def _closed_form_mean(spec: FilterSpec, model: CoefficientModel,
                      innovations: InnovationSpec) -> MeanEstimate | None:
    s2 = innovations.variance
    if spec.kind == "zero-crossing":
        # sign-change probability of a bivariate Gaussian pair
        if not innovations.is_gaussian:
            return None
        g0 = linproc.autocovariance(model, s2, 0)
        rho = linproc.autocovariance(model, s2, 1) / g0
        return MeanEstimate(float(np.arccos(rho) / np.pi), 0.0, "closed-form")
    poly = spec.as_polynomial()
    if poly is None:
        return None
    total = 0.0
    cov = None
    for expo, coef in poly.items():
        deg = sum(expo)
        if deg == 0:
            total += coef
        elif deg == 1:
            continue  # mean-zero marginals
        elif deg == 2:
            # quadratic moments need only the autocovariances
            nz = [v for v, e in enumerate(expo) for _ in range(e)]
            total += coef * linproc.autocovariance(model, s2, nz[1] - nz[0])
        elif innovations.is_gaussian:
            if cov is None:
                cov = window_covariance(model, s2, spec.d)
            total += coef * gaussian_moment(cov, expo)
        else:
            return None
    return MeanEstimate(float(total), 0.0, "closed-form")


def filter_mean(spec: FilterSpec, model: CoefficientModel,
                innovations: InnovationSpec, mc_length: int = 1 << 17,
                mc_batches: int = 64, seed=0) -> MeanEstimate:
    """E K(x_1, ..., x_{1+d}) with provenance.

    Closed forms: lag products (= gamma(d), any innovations), the Gaussian
    sign-change probability arccos(rho)/pi, polynomial windows of degree <= 2
    (any innovations), and arbitrary polynomials under Gaussian innovations
    via moment pairing.  Everything else is estimated from one long path
    with a batch-means standard error and marked "estimate".
    """
    closed = _closed_form_mean(spec, model, innovations)
    if closed is not None:
        return closed
    key = (seed, 0xFE) if isinstance(seed, (int, np.integer)) else (*seed, 0xFE)
    sample = linproc.generate(model, innovations, mc_length + spec.d, key)
    out = apply_filter(spec, sample)
    batches = np.array_split(out, mc_batches)
    means = np.array([b.mean() for b in batches])
    se = float(means.std(ddof=1) / np.sqrt(len(means)))
    return MeanEstimate(float(out.mean()), se, "estimate")


def centered_sum(spec: FilterSpec, series, mean: float) -> float:
    """Sum over all windows of (filter output - mean)."""
    out = apply_filter(spec, series)
    return float(out.sum() - len(out) * mean)
