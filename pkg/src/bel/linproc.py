"""Moving-average (MA) processes with controlled coefficient decay.

A path is x[t] = sum_{i=1..M} a_i * e[t-i] for i.i.d. mean-zero innovations
e and a coefficient family a_i.  Hyperbolic decay a_i = c * i**(-beta) gives
long memory for 1/2 < beta < 1 and short memory for beta > 1; fractionally
integrated (FARIMA) weights give the same dichotomy with beta = 1 - d.  The
infinite filter is truncated at a configurable horizon M; the squared tail
mass beyond M is exposed so truncation bias stays auditable.

Every sample retains its innovations window, so truncated or re-filtered
versions of the same path can be rebuilt exactly (no re-simulation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from ._util import ConfigError, digest

DEFAULT_TRUNCATION = 1 << 14

# Above this work estimate the transform-based convolution path is used;
# below it the direct O(n*M) path is cheaper.  Both agree to ~1e-15 relative.
_FFT_THRESHOLD = 1 << 18


@dataclass(frozen=True)
class CoefficientModel:
    """MA coefficient family: hyperbolic, FARIMA or an explicit finite filter."""

    kind: str
    c: float = 1.0
    beta: float = 0.0
    d: float = 0.0
    taps: tuple[float, ...] = ()
    truncation: int = DEFAULT_TRUNCATION

    def __post_init__(self):
        if self.kind not in ("hyperbolic", "farima", "finite"):
            raise ConfigError(f"unknown coefficient family {self.kind!r}")
        if self.truncation < 1:
            raise ConfigError("truncation must be a positive integer")
        if self.kind == "hyperbolic":
            if not self.beta > 0.5:
                raise ConfigError(
                    f"hyperbolic exponent beta={self.beta} invalid: beta > 1/2 required"
                )
            if not self.c > 0:
                raise ConfigError("hyperbolic scale c must be positive")
        elif self.kind == "farima":
            if not 0.0 < self.d < 0.5:
                raise ConfigError(
                    f"farima memory d={self.d} invalid: d must lie in (0, 1/2)"
                )
        elif self.kind == "finite":
            if len(self.taps) == 0:
                raise ConfigError("finite model needs at least one tap")
            if not all(np.isfinite(self.taps)):
                raise ConfigError("finite model has a non-finite tap")

    @classmethod
    def hyperbolic(cls, c: float, beta: float, truncation: int = DEFAULT_TRUNCATION):
        """a_i = c * i**(-beta), beta > 1/2."""
        return cls(kind="hyperbolic", c=float(c), beta=float(beta), truncation=truncation)

    @classmethod
    def farima(cls, d: float, truncation: int = DEFAULT_TRUNCATION):
        """Fractional-integration weights a_i = Gamma(i+d) / (Gamma(d) Gamma(i+1))."""
        return cls(kind="farima", d=float(d), truncation=truncation)

    @classmethod
    def finite(cls, taps: Iterable[float]):
        """Explicit finite filter a_1..a_q; a_i = 0 beyond q."""
        taps = tuple(float(t) for t in taps)
        return cls(kind="finite", taps=taps, truncation=max(len(taps), 1))

    @property
    def horizon(self) -> int:
        """Generation horizon M (number of retained taps)."""
        if self.kind == "finite":
            return len(self.taps)
        return self.truncation

    @property
    def decay_exponent(self) -> float:
        """Asymptotic decay exponent beta of |a_i|; inf for finite filters."""
        if self.kind == "hyperbolic":
            return self.beta
        if self.kind == "farima":
            return 1.0 - self.d
        return float("inf")

    def truncated(self, level: int) -> "CoefficientModel":
        """Same family with horizon reduced to ``level`` taps."""
        if level < 1:
            raise ConfigError("truncation level must be >= 1")
        if level > self.horizon:
            raise ConfigError(f"level {level} exceeds horizon {self.horizon}")
        if self.kind == "finite":
            return CoefficientModel.finite(self.taps[:level])
        return CoefficientModel(kind=self.kind, c=self.c, beta=self.beta,
                                d=self.d, truncation=level)

    def describe(self) -> dict:
        out = {"kind": self.kind, "truncation": self.horizon}
        if self.kind == "hyperbolic":
            out.update(c=self.c, beta=self.beta)
        elif self.kind == "farima":
            out.update(d=self.d)
        else:
            out.update(taps=list(self.taps))
        return out


@dataclass(frozen=True)
class InnovationSpec:
    """Innovation distribution: mean 0, finite positive variance.

    All supported families (gaussian, rademacher, centered-uniform) have
    moments of every order, so the moment requirements attached to filters
    hold by construction.
    """

    dist: str
    sigma: float = 1.0
    half_width: float = 1.0
    required_moment_order: int = 8

    def __post_init__(self):
        if self.dist not in ("gaussian", "rademacher", "centered-uniform"):
            raise ConfigError(f"unknown innovation distribution {self.dist!r}")
        if self.dist == "gaussian" and not self.sigma > 0:
            raise ConfigError("gaussian sigma must be positive")
        if self.dist == "centered-uniform" and not self.half_width > 0:
            raise ConfigError("uniform half-width must be positive")
        if self.required_moment_order < 2:
            raise ConfigError("required moment order must be >= 2")

    @classmethod
    def gaussian(cls, sigma: float = 1.0, required_moment_order: int = 8):
        return cls(dist="gaussian", sigma=float(sigma),
                   required_moment_order=required_moment_order)

    @classmethod
    def rademacher(cls, required_moment_order: int = 8):
        return cls(dist="rademacher", required_moment_order=required_moment_order)

    @classmethod
    def centered_uniform(cls, half_width: float, required_moment_order: int = 8):
        return cls(dist="centered-uniform", half_width=float(half_width),
                   required_moment_order=required_moment_order)

    @property
    def variance(self) -> float:
        if self.dist == "gaussian":
            return self.sigma**2
        if self.dist == "rademacher":
            return 1.0
        return self.half_width**2 / 3.0

    @property
    def is_gaussian(self) -> bool:
        return self.dist == "gaussian"

    @property
    def is_symmetric(self) -> bool:
        return True  # all supported families are symmetric about 0

    def has_moments(self, order: int) -> bool:
        return True  # bounded or gaussian: every moment finite

    def moment(self, k: int) -> float:
        """E e**k, exact."""
        if k < 0:
            raise ValueError("moment order must be >= 0")
        if k == 0:
            return 1.0
        if k % 2 == 1:
            return 0.0
        if self.dist == "gaussian":
            # (k-1)!! * sigma^k
            m = 1.0
            for j in range(1, k, 2):
                m *= j
            return m * self.sigma**k
        if self.dist == "rademacher":
            return 1.0
        return self.half_width**k / (k + 1)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.dist == "gaussian":
            return rng.normal(0.0, self.sigma, size=size)
        if self.dist == "rademacher":
            return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        return rng.uniform(-self.half_width, self.half_width, size=size)

    def describe(self) -> dict:
        out = {"dist": self.dist, "required_moment_order": self.required_moment_order}
        if self.dist == "gaussian":
            out["sigma"] = self.sigma
        elif self.dist == "centered-uniform":
            out["half_width"] = self.half_width
        return out


def coefficients(model: CoefficientModel, m: int) -> np.ndarray:
    """First m coefficients a_1..a_m of the family, exactly.

    FARIMA weights use the ratio recursion a_{i+1} = a_i * (i+d) / (i+1)
    (a_1 = d) rather than Gamma-function evaluation, which overflows at
    large i.
    """
    if m < 1:
        raise ConfigError("m must be >= 1")
    if model.kind == "hyperbolic":
        i = np.arange(1, m + 1, dtype=np.float64)
        return model.c * i ** (-model.beta)
    if model.kind == "farima":
        i = np.arange(1, m, dtype=np.float64)
        ratios = (i + model.d) / (i + 1.0)
        out = np.empty(m)
        out[0] = model.d
        out[1:] = model.d * np.cumprod(ratios)
        return out
    out = np.zeros(m)
    q = min(m, len(model.taps))
    out[:q] = model.taps[:q]
    return out


def tail_mass(model: CoefficientModel) -> float:
    """Upper bound on sum_{i > M} a_i**2 beyond the generation horizon."""
    m = model.horizon
    if model.kind == "finite":
        return 0.0
    if model.kind == "hyperbolic":
        return model.c**2 * m ** (1.0 - 2.0 * model.beta) / (2.0 * model.beta - 1.0)
    # farima: a_i decreasing for i >= 1, a_i <= a_M * (M/i)**(1-d) beyond M
    a_m = coefficients(model, m)[-1]
    cst = a_m * m ** (1.0 - model.d)
    return cst**2 * m ** (2.0 * model.d - 1.0) / (1.0 - 2.0 * model.d)


def marginal_variance(model: CoefficientModel, sigma2_eps: float) -> float:
    """var(x_t) = sigma_e^2 * sum a_i^2 for the truncated process."""
    a = coefficients(model, model.horizon)
    return sigma2_eps * float(a @ a)


@dataclass(frozen=True)
class SeriesSample:
    """A generated path together with the innovations that produced it.

    values[t] = sum_{i=1..M} a_i * eps(t-i) (1-based time).  The retained
    window covers innovation times 1-M .. n-1, which is exactly what is
    needed to rebuild truncated paths and innovation-product expansions.
    """

    values: np.ndarray
    innovations_window: np.ndarray
    model: CoefficientModel
    innovations: InnovationSpec
    seed: tuple[int, ...]
    config_digest: str = field(default="")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def horizon(self) -> int:
        return self.model.horizon

    def eps_index(self, t) -> np.ndarray:
        """Array index of innovation time t (t ranges over 1-M .. n-1)."""
        return np.asarray(t) + self.horizon - 1

    def eps_at(self, t):
        """Innovation(s) at time(s) t."""
        return self.innovations_window[self.eps_index(t)]

    def eps_slice(self, t0: int, length: int) -> np.ndarray:
        """Innovations at consecutive times t0, t0+1, ..., t0+length-1."""
        i = int(t0) + self.horizon - 1
        if i < 0 or i + length > len(self.innovations_window):
            raise ValueError(
                f"innovation window covers times {1 - self.horizon}..{self.n - 1}; "
                f"requested {t0}..{t0 + length - 1}"
            )
        return self.innovations_window[i:i + length]

    def truncated(self, level: int) -> "SeriesSample":
        """The same path re-filtered with only the first ``level`` taps."""
        model = self.model.truncated(level)
        m = self.horizon
        eps = self.innovations_window[m - level:]
        values = _filter_convolve(eps, coefficients(model, level))
        return SeriesSample(
            values=values, innovations_window=eps, model=model,
            innovations=self.innovations, seed=self.seed,
            config_digest=digest({"base": self.config_digest, "level": level}),
        )


def _filter_convolve(eps: np.ndarray, a: np.ndarray) -> np.ndarray:
    """values[t] = sum_i a[i] * eps[t-i], via FFT for large work sizes.

    ``eps`` holds n+M-1 innovations (times 1-M .. n-1) and ``a`` the M taps;
     the valid part of the convolution is exactly x_1..x_n.
    """
    if not np.all(np.isfinite(a)):
        raise ConfigError("non-finite filter coefficient")
    n = len(eps) - len(a) + 1
    if n < 1:
        raise ValueError("innovation window shorter than the filter")
    if n * len(a) >= _FFT_THRESHOLD:
        return fftconvolve(eps, a, mode="valid")
    return np.convolve(eps, a, mode="valid")


def _filter_convolve_direct(eps: np.ndarray, a: np.ndarray) -> np.ndarray:
    """O(n*M) reference path for the convolution; used for cross-checks."""
    return np.convolve(eps, a, mode="valid")


def generate(model: CoefficientModel, innovations: InnovationSpec, n: int,
             seed) -> SeriesSample:
    """Generate x_1..x_n reproducibly.

    ``seed`` is either an integer or a (master, *key) tuple naming an
    independent substream; identical inputs give bit-identical output.
    """
    if n < 1:
        raise ConfigError("series length must be >= 1")
    m = model.horizon
    if n + m > (1 << 40):
        raise ConfigError(f"n + M = {n + m} too large for index arithmetic")
    key = (int(seed),) if isinstance(seed, (int, np.integer)) else tuple(int(s) for s in seed)
    rng = np.random.default_rng(np.random.SeedSequence(key[0], spawn_key=key[1:]))
    eps = innovations.draw(rng, n + m - 1)
    a = coefficients(model, m)
    values = _filter_convolve(eps, a)
    cfg = digest({
        "model": model.describe(), "innovations": innovations.describe(),
        "n": n, "seed": list(key),
    })
    return SeriesSample(values=values, innovations_window=eps, model=model,
                        innovations=innovations, seed=key, config_digest=cfg)


def from_innovations(model: CoefficientModel, innovations: InnovationSpec,
                     eps: np.ndarray, label: int = 0) -> SeriesSample:
    """Build a sample from an explicit innovations window (deterministic replays)."""
    eps = np.asarray(eps, dtype=np.float64)
    values = _filter_convolve(eps, coefficients(model, model.horizon))
    cfg = digest({"model": model.describe(), "innovations": innovations.describe(),
                  "external": True, "label": label, "len": len(eps)})
    return SeriesSample(values=values, innovations_window=eps, model=model,
                        innovations=innovations, seed=(label,), config_digest=cfg)


def autocovariance(model: CoefficientModel, sigma2_eps: float, k: int) -> float:
    """gamma(k) = sigma_e^2 * sum_i a_i a_{i+|k|} for the truncated process."""
    k = abs(int(k))
    m = model.horizon
    if k >= m:
        return 0.0
    a = coefficients(model, m)
    return sigma2_eps * float(a[:m - k] @ a[k:])

def autocovariance_grid(model: CoefficientModel, sigma2_eps: float,
                        kmax: int) -> np.ndarray:
    """gamma(0..kmax) in one pass via FFT autocorrelation of the taps."""
    m = model.horizon
    a = coefficients(model, m)
    size = 1 << int(np.ceil(np.log2(2 * m + 1)))
    fa = np.fft.rfft(a, size)
    acf = np.fft.irfft(fa * np.conj(fa), size)[:m]
    out = np.zeros(kmax + 1)
    upto = min(kmax + 1, m)
    out[:upto] = sigma2_eps * acf[:upto]
    return out


def partial_sum_variance(model: CoefficientModel, sigma2_eps: float, n: int) -> float:
    """var(x_1 + ... + x_n) = n*gamma(0) + 2*sum_{k<n} (n-k)*gamma(k), exactly."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    gamma = autocovariance_grid(model, sigma2_eps, n - 1)
    k = np.arange(1, n)
    return float(n * gamma[0] + 2.0 * ((n - k) @ gamma[1:]))
