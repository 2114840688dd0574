"""Smoothed window kernels, power rank, and innovation-product expansions.

Smoothing at level j averages the filter over the contribution of the j most
recent innovations entering the window.  Raising the level by one convolves
with a single innovation pushed through the coefficient direction vector
w_j[v] = a_{j-(d+1-v)} (zero for non-positive indices), which keeps every
identity exact: the level-(M+d) kernel at the origin is the window mean, the
level differences evaluated on residual windows telescope to the centered
filter output, and terms with distinct innovation alignment are orthogonal.

For polynomial filters the smoothing recursion is carried out in closed form
on the coefficient table, so kernels, their derivatives and the expansion
coefficients are exact.  For indicator filters the kernel is estimated by
Monte Carlo (with an exact multivariate-normal sampler under Gaussian
innovations) and differentiated by central differences sharing one set of
perturbation draws across the whole stencil.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from . import filters as _filters
from . import linproc
from ._util import ConfigError, write_csv
from .filters import FilterSpec, MeanEstimate, evaluate, filter_mean
from .linproc import CoefficientModel, InnovationSpec, SeriesSample, coefficients

DEFAULT_J_MAX = 64
DEFAULT_MC_SAMPLES = 200_000
ZERO_TOL_FLOOR = 1e-8


class InsufficientSamples(RuntimeError):
    """A Monte Carlo derivative did not reach the requested precision."""


# ---------------------------------------------------------------------------
# polynomial coefficient-table calculus
# ---------------------------------------------------------------------------

Poly = dict


def poly_eval(poly: Poly, x: np.ndarray) -> np.ndarray:
    """Evaluate a {exponents: coeff} table at points x of shape (..., w)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(x.shape[:-1])
    for expo, coef in poly.items():
        term = np.full(x.shape[:-1], coef)
        for v, e in enumerate(expo):
            if e:
                term = term * x[..., v] ** e
        out += term
    return out


def poly_partial(poly: Poly, order: tuple[int, ...]) -> Poly:
    """Mixed partial derivative of a coefficient table."""
    out: Poly = {}
    for expo, coef in poly.items():
        c = coef
        new = list(expo)
        for v, k in enumerate(order):
            if expo[v] < k:
                c = 0.0
                break
            for step in range(k):
                c *= expo[v] - step
            new[v] = expo[v] - k
        if c != 0.0:
            key = tuple(new)
            out[key] = out.get(key, 0.0) + c
    return {e: c for e, c in out.items() if c != 0.0}


def poly_directional(poly: Poly, w: np.ndarray) -> Poly:
    """Directional derivative sum_v w_v * dP/dx_v."""
    out: Poly = {}
    for expo, coef in poly.items():
        for v, e in enumerate(expo):
            if e == 0 or w[v] == 0.0:
                continue
            new = list(expo)
            new[v] = e - 1
            key = tuple(new)
            out[key] = out.get(key, 0.0) + coef * e * w[v]
    return {e: c for e, c in out.items() if c != 0.0}


def poly_smooth_step(poly: Poly, w: np.ndarray, innovations: InnovationSpec) -> Poly:
    """E P(x + e*w) for a single innovation e: sum_k E[e^k]/k! * (D_w)^k P."""
    out = dict(poly)
    deriv = poly
    k = 0
    while deriv:
        k += 1
        deriv = poly_directional(deriv, w)
        if not deriv:
            break
        mu = innovations.moment(k)
        if mu == 0.0:
            continue
        scale = mu / factorial(k)
        for expo, coef in deriv.items():
            out[expo] = out.get(expo, 0.0) + scale * coef
    return {e: c for e, c in out.items() if c != 0.0}


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` non-negative ints summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


# ---------------------------------------------------------------------------
# smoothed kernels
# ---------------------------------------------------------------------------

_STENCILS = {
    0: ((0, 1.0),),
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
    4: ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)),
}


@dataclass(frozen=True)
class DerivativeEstimate:
    order: tuple[int, ...]
    value: float
    se: float
    status: str = "ok"  # "ok" | "insufficient-samples"
    step: float = 0.0  # finite-difference step; 0 for closed form


class SmoothedKernel:
    """The filter averaged over the newest ``level`` innovations of the window.

    ``level=None`` is the full-horizon kernel (every window component fully
    averaged, realized at the model horizon M).  Evaluation is exact for
    polynomial filters and Monte Carlo otherwise.
    """

    def __init__(self, spec: FilterSpec, model: CoefficientModel,
                 innovations: InnovationSpec, level: int | None = None,
                 mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0):
        if level is not None and level < 0:
            raise ConfigError("smoothing level must be >= 0")
        if mc_samples < 1:
            raise ConfigError("mc_samples must be >= 1")
        self.spec = spec
        self.model = model
        self.innovations = innovations
        self.level = level
        self.mc_samples = int(mc_samples)
        self.seed = int(seed)
        self._a = coefficients(model, model.horizon)
        self._poly_cache: Poly | None = None
        self._samples_cache: np.ndarray | None = None

    # -- structure ---------------------------------------------------------

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def steps(self) -> int:
        """Number of one-innovation smoothing steps the level resolves to."""
        cap = self.model.horizon + self.d
        return cap if self.level is None else min(self.level, cap)

    @property
    def closed_form(self) -> bool:
        return self.spec.as_polynomial() is not None

    def _coef(self, i: int) -> float:
        return self._a[i - 1] if 1 <= i <= len(self._a) else 0.0

    def direction(self, u: int) -> np.ndarray:
        """Coefficient direction of smoothing step u: w[v] = a_{u-d+v}, 0-based v."""
        return np.array([self._coef(u - self.d + v) for v in range(self.d + 1)])

    # -- closed form -------------------------------------------------------

    def poly(self) -> Poly:
        if not self.closed_form:
            raise ConfigError(f"{self.spec.kind} filter has no closed-form kernel")
        if self._poly_cache is None:
            p = self.spec.as_polynomial()
            for u in range(1, self.steps + 1):
                w = self.direction(u)
                if np.any(w != 0.0):
                    p = poly_smooth_step(p, w, self.innovations)
            self._poly_cache = p
        return self._poly_cache

    # -- Monte Carlo -------------------------------------------------------

    def _mixing_matrix(self) -> np.ndarray:
        """L with perturbation = L @ eps for the ``steps`` shared innovations."""
        j = self.steps
        L = np.zeros((self.d + 1, j))
        for v in range(self.d + 1):
            for ti in range(j):
                L[v, ti] = self._coef(v + j - self.d - ti)
        return L

    def perturbation_samples(self) -> np.ndarray:
        """(mc_samples, d+1) draws of the window perturbation, cached.

        Under Gaussian innovations the perturbation vector is exactly
        multivariate normal, so it is drawn from its covariance directly;
        otherwise the shared innovations are pushed through the mixing
        matrix in chunks.
        """
        if self._samples_cache is not None:
            return self._samples_cache
        rng = np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(0x5E, self.steps)))
        j = self.steps
        r = self.mc_samples
        if j == 0:
            v = np.zeros((r, self.d + 1))
        elif self.innovations.is_gaussian:
            L = self._mixing_matrix()
            cov = self.innovations.variance * (L @ L.T)
            try:
                c = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                lam, q = np.linalg.eigh(cov)
                c = q * np.sqrt(np.clip(lam, 0.0, None))
            v = rng.standard_normal((r, self.d + 1)) @ c.T
        else:
            L = self._mixing_matrix()
            v = np.empty((r, self.d + 1))
            chunk = max(1, min(r, (1 << 24) // max(j, 1)))
            for lo in range(0, r, chunk):
                hi = min(lo + chunk, r)
                eps = self.innovations.draw(rng, (hi - lo) * j).reshape(hi - lo, j)
                v[lo:hi] = eps @ L.T
        self._samples_cache = v
        return v

    # -- evaluation --------------------------------------------------------

    def value(self, x) -> tuple[float, float]:
        """Kernel value at one point, with its standard error (0 if exact)."""
        x = np.asarray(x, dtype=np.float64)
        if self.closed_form:
            return float(poly_eval(self.poly(), x)), 0.0
        v = self.perturbation_samples()
        evals = evaluate(self.spec, x[None, :] + v)
        se = float(evals.std(ddof=1) / np.sqrt(len(evals))) if len(evals) > 1 else 0.0
        return float(evals.mean()), se

    def value_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Kernel values at an array of points (vectorized when exact)."""
        xs = np.asarray(xs, dtype=np.float64)
        if self.closed_form:
            return poly_eval(self.poly(), xs), np.zeros(xs.shape[:-1])
        flat = xs.reshape(-1, xs.shape[-1])
        vals = np.empty(len(flat))
        ses = np.empty(len(flat))
        for i, x in enumerate(flat):
            vals[i], ses[i] = self.value(x)
        return vals.reshape(xs.shape[:-1]), ses.reshape(xs.shape[:-1])

    def stencil(self, points: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
        """Weighted combination over stencil points with shared draws.

        The combination is formed per Monte Carlo sample before averaging, so
        the common-random-number cancellation shows up in the reported SE.
        """
        points = np.asarray(points, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        if self.closed_form:
            vals = poly_eval(self.poly(), points)
            return float(weights @ vals), 0.0
        v = self.perturbation_samples()
        combined = np.zeros(len(v))
        for pt, w in zip(points, weights):
            combined += w * evaluate(self.spec, pt[None, :] + v)
        se = float(combined.std(ddof=1) / np.sqrt(len(combined)))
        return float(combined.mean()), se

    def derivative(self, order: tuple[int, ...], h: float | None = None,
                   precision: float | None = None) -> DerivativeEstimate:
        """Partial derivative at the origin.

        Exact for polynomial filters.  Otherwise central finite differences
        with common random numbers; the step defaults to
        max(0.05, 2*SE**(1/3)) from a pilot estimate of the kernel SE at 0.
        Requires the level to resolve at least d+1 smoothing steps, below
        which an indicator kernel need not be differentiable.
        """
        order = tuple(int(k) for k in order)
        if len(order) != self.d + 1 or any(k < 0 for k in order):
            raise ConfigError(f"bad derivative order {order} for d={self.d}")
        if self.closed_form:
            part = poly_partial(self.poly(), order)
            val = part.get((0,) * (self.d + 1), 0.0)
            return DerivativeEstimate(order=order, value=float(val), se=0.0)
        if max(order) > 4:
            raise ConfigError("finite-difference stencils go up to order 4 per coordinate")
        if self.steps < self.d + 1:
            raise ConfigError(
                "differentiating a kernel smoothed by fewer than d+1 innovations")
        if h is None:
            _, se0 = self.value(np.zeros(self.d + 1))
            h = max(0.05, 2.0 * se0 ** (1.0 / 3.0))
        axes = [_STENCILS[k] for k in order]
        points, weights = [], []
        scale = float(np.prod([h ** k for k in order if k]))
        for combo in itertools.product(*axes):
            offs = np.array([c[0] for c in combo], dtype=np.float64) * h
            w = float(np.prod([c[1] for c in combo])) / scale
            if w != 0.0:
                points.append(offs)
                weights.append(w)
        val, se = self.stencil(np.array(points), np.array(weights))
        status = "ok"
        if precision is not None and se > precision:
            status = "insufficient-samples"
        return DerivativeEstimate(order=order, value=val, se=se, status=status, step=h)


class KernelFamily:
    """Kernels of one (filter, process) pair at every smoothing level."""

    def __init__(self, spec: FilterSpec, model: CoefficientModel,
                 innovations: InnovationSpec,
                 mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0):
        self.spec = spec
        self.model = model
        self.innovations = innovations
        self.mc_samples = mc_samples
        self.seed = seed
        self._cache: dict[int | None, SmoothedKernel] = {}

    def level(self, j: int | None) -> SmoothedKernel:
        if j not in self._cache:
            self._cache[j] = SmoothedKernel(
                self.spec, self.model, self.innovations, level=j,
                mc_samples=self.mc_samples, seed=self.seed)
        return self._cache[j]

    def infinity(self) -> SmoothedKernel:
        return self.level(None)


# ---------------------------------------------------------------------------
# martingale decomposition terms
# ---------------------------------------------------------------------------

def residual_window(sample: SeriesSample, d: int, n: int,
                    level: int | None) -> np.ndarray:
    """Window at time n with the newest ``level`` innovations removed.

    Component v (0-based) is sum_{i > k_v} a_i * eps(n+v-i) with
    k_v = clip(level - d + v, 0, M); level None empties every component.
    """
    m = sample.horizon
    a = coefficients(sample.model, m)
    out = np.empty(d + 1)
    for v in range(d + 1):
        k_v = m if level is None else min(max(level - d + v, 0), m)
        if k_v >= m:
            out[v] = 0.0
            continue
        seg = sample.eps_slice(n + v - m, m - k_v)  # times n+v-m .. n+v-k_v-1
        out[v] = float(seg @ a[k_v:][::-1])
    return out


def martingale_term(family: KernelFamily, sample: SeriesSample, n: int, j: int) -> float:
    """Level-j martingale difference of the window at time n.

    The j-th term compares the kernels at levels j-1 and j on their residual
    windows; terms over j telescope to the centered filter output, exactly
    for finite filters once j exhausts the filter span.
    """
    if j < 1:
        raise ConfigError("martingale terms are indexed by j >= 1")
    if n < 1 or n + family.spec.d > sample.n:
        raise ConfigError(f"time {n} outside the sampled path")
    d = family.spec.d
    lo = residual_window(sample, d, n, j - 1)
    hi = residual_window(sample, d, n, j)
    return family.level(j - 1).value(lo)[0] - family.level(j).value(hi)[0]


# ---------------------------------------------------------------------------
# power rank
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerRankReport:
    """Scan of kernel derivatives at the origin by total order."""

    rank: int | None
    status: str  # "ok" | "rank-exceeds-max-order"
    max_order: int
    estimates: tuple[DerivativeEstimate, ...]
    zero_tolerance: str = f"max(3*SE, {ZERO_TOL_FLOOR:g})"

    def significant(self) -> list[DerivativeEstimate]:
        return [e for e in self.estimates
                if abs(e.value) > max(3.0 * e.se, ZERO_TOL_FLOOR)]


def power_rank(family: KernelFamily, max_order: int = 3,
               h: float | None = None) -> PowerRankReport:
    """Smallest total derivative order with a significantly non-zero value.

    Scans s = 1, 2, ... and stops at the first order where some mixed
    derivative of the full-horizon kernel at the origin exceeds
    max(3*SE, 1e-8); every tested estimate is reported.
    """
    if max_order < 1:
        raise ConfigError("max_order must be >= 1")
    kernel = family.infinity()
    estimates: list[DerivativeEstimate] = []
    for s in range(1, max_order + 1):
        hit = False
        for order in _compositions(s, family.spec.d + 1):
            est = kernel.derivative(order, h=h)
            estimates.append(est)
            if abs(est.value) > max(3.0 * est.se, ZERO_TOL_FLOOR):
                hit = True
        if hit:
            return PowerRankReport(rank=s, status="ok", max_order=max_order,
                                   estimates=tuple(estimates))
    return PowerRankReport(rank=None, status="rank-exceeds-max-order",
                           max_order=max_order, estimates=tuple(estimates))


# ---------------------------------------------------------------------------
# expansion coefficients and innovation-product terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionCoefficients:
    """Weights of r-fold products of distinct innovations.

    ``table[(j_1 < ... < j_r)]`` multiplies prod_s eps(n+d-j_s); entries are
    built from the operator rows w_j and order-r kernel derivatives at the
    origin.  Exact zeros are omitted, so lookups default to 0.
    """

    order: int
    d: int
    j_max: int
    table: dict[tuple[int, ...], float]
    se: dict[tuple[int, ...], float]
    provenance: str  # "closed-form" | "mc"
    derivatives: tuple[DerivativeEstimate, ...] = ()

    def value(self, js: tuple[int, ...]) -> float:
        return self.table.get(tuple(js), 0.0)

    def scaled(self, factor: float) -> "ExpansionCoefficients":
        return ExpansionCoefficients(
            order=self.order, d=self.d, j_max=self.j_max,
            table={k: factor * v for k, v in self.table.items()},
            se={k: abs(factor) * v for k, v in self.se.items()},
            provenance=self.provenance, derivatives=self.derivatives)

    def to_csv(self, path) -> None:
        rows = [[" ".join(map(str, js)), self.table[js], self.se.get(js, 0.0),
                 self.provenance] for js in sorted(self.table)]
        write_csv(path, ["j_tuple", "value", "se", "provenance"], rows)


def operator_row(model: CoefficientModel, d: int, u: int) -> np.ndarray:
    """Row u of the differentiation-operator coefficients: a_{u-(d+1-v)}, v=1..d+1."""
    a = coefficients(model, model.horizon)
    out = np.zeros(d + 1)
    for v in range(d + 1):
        i = u - d + v
        if 1 <= i <= len(a):
            out[v] = a[i - 1]
    return out


def expansion_coefficients(family: KernelFamily, order: int,
                           j_max: int = DEFAULT_J_MAX,
                           precision: float | None = None) -> ExpansionCoefficients:
    """Coefficient table for the order-r expansion term up to index j_max."""
    if order < 1:
        raise ConfigError("expansion order must be >= 1")
    d = family.spec.d
    kernel = family.infinity()
    derivs: dict[tuple[int, ...], DerivativeEstimate] = {}
    for idx in _compositions(order, d + 1):
        est = kernel.derivative(idx, precision=precision)
        if est.status != "ok":
            raise InsufficientSamples(
                f"derivative {idx} reached SE {est.se:g} above budget {precision:g}")
        derivs[idx] = est
    rows = np.array([operator_row(family.model, d, u) for u in range(1, j_max + 1)])
    table: dict[tuple[int, ...], float] = {}
    se: dict[tuple[int, ...], float] = {}
    closed = kernel.closed_form
    for js in itertools.combinations(range(1, j_max + 1), order):
        total = 0.0
        err = 0.0
        for us in itertools.product(range(d + 1), repeat=order):
            w = 1.0
            for j, u in zip(js, us):
                w *= rows[j - 1, u]
                if w == 0.0:
                    break
            if w == 0.0:
                continue
            counts = [0] * (d + 1)
            for u in us:
                counts[u] += 1
            est = derivs[tuple(counts)]
            total += w * est.value
            err += abs(w) * est.se
        if total != 0.0 or (not closed and err != 0.0):
            table[js] = total
            se[js] = err
    return ExpansionCoefficients(
        order=order, d=d, j_max=j_max, table=table, se=se,
        provenance="closed-form" if closed else "mc",
        derivatives=tuple(derivs.values()))


def _check_window(coeffs: ExpansionCoefficients, sample: SeriesSample, count: int):
    if count < 1:
        raise ConfigError("need at least one window")
    max_j = max((js[-1] for js in coeffs.table), default=0)
    earliest = 1 + coeffs.d - max_j
    if earliest < 1 - sample.horizon:
        raise ConfigError(
            f"innovation window too short: expansion needs time {earliest}, "
            f"window starts at {1 - sample.horizon} "
            f"(required length {sample.n - earliest})")


def expansion_term(coeffs: ExpansionCoefficients, sample: SeriesSample,
                   count: int | None = None) -> float:
    """Order-r term: sum over n <= count and j-tuples of b * prod eps(n+d-j_s)."""
    n_windows = sample.n - coeffs.d if count is None else int(count)
    _check_window(coeffs, sample, n_windows)
    total = 0.0
    for js, b in coeffs.table.items():
        prod = sample.eps_slice(1 + coeffs.d - js[0], n_windows).copy()
        for j in js[1:]:
            prod *= sample.eps_slice(1 + coeffs.d - j, n_windows)
        total += b * float(prod.sum())
    return total


def expansion_series(coeffs: ExpansionCoefficients, sample: SeriesSample,
                     count: int | None = None) -> np.ndarray:
    """Per-window contributions of the order-r term (sums to expansion_term)."""
    n_windows = sample.n - coeffs.d if count is None else int(count)
    _check_window(coeffs, sample, n_windows)
    out = np.zeros(n_windows)
    for js, b in coeffs.table.items():
        prod = sample.eps_slice(1 + coeffs.d - js[0], n_windows).copy()
        for j in js[1:]:
            prod *= sample.eps_slice(1 + coeffs.d - j, n_windows)
        out += b * prod
    return out


# ---------------------------------------------------------------------------
# corrected sums
# ---------------------------------------------------------------------------

class CorrectedSumContext:
    """Shared state for corrected sums of one configuration.

    Holds the window mean and the expansion-coefficient tables for orders
    1..p so that per-path evaluation is cheap; build once, evaluate on many
    independent samples.
    """

    def __init__(self, spec: FilterSpec, model: CoefficientModel,
                 innovations: InnovationSpec, p: int,
                 j_max: int = DEFAULT_J_MAX,
                 mc_samples: int = DEFAULT_MC_SAMPLES,
                 mean_length: int = 1 << 17, seed: int = 0):
        if p < 0:
            raise ConfigError("correction order p must be >= 0")
        self.spec = spec
        self.model = model
        self.innovations = innovations
        self.p = p
        self.j_max = min(j_max, model.horizon + spec.d)
        self.family = KernelFamily(spec, model, innovations,
                                   mc_samples=mc_samples, seed=seed)
        self.mean: MeanEstimate = filter_mean(spec, model, innovations,
                                              mc_length=mean_length, seed=seed)
        self.tables = {r: expansion_coefficients(self.family, r, self.j_max)
                       for r in range(1, p + 1)}

    def corrected_sum(self, sample: SeriesSample, count: int | None = None) -> float:
        """Centered filter sum minus the expansion terms of orders 1..p."""
        out = _filters.apply_filter(self.spec, sample)
        n = len(out) if count is None else int(count)
        total = float(out[:n].sum()) - n * self.mean.value
        for r in range(1, self.p + 1):
            total -= expansion_term(self.tables[r], sample, n)
        return total

    def corrected_series(self, sample: SeriesSample,
                         count: int | None = None) -> np.ndarray:
        """Per-window corrected terms; their sum is corrected_sum."""
        out = _filters.apply_filter(self.spec, sample)
        n = len(out) if count is None else int(count)
        series = out[:n] - self.mean.value
        for r in range(1, self.p + 1):
            series = series - expansion_series(self.tables[r], sample, n)
        return series


def corrected_context(spec: FilterSpec, model: CoefficientModel,
                      innovations: InnovationSpec, p: int,
                      **opts) -> CorrectedSumContext:
    return CorrectedSumContext(spec, model, innovations, p, **opts)


def truncated_context(spec: FilterSpec, model: CoefficientModel,
                      innovations: InnovationSpec, p: int, level: int,
                      j_max: int = DEFAULT_J_MAX, **opts) -> CorrectedSumContext:
    """Context of the level-truncated model (same innovations, first ``level`` taps)."""
    if level > model.horizon:
        raise ConfigError(f"level {level} exceeds horizon {model.horizon}")
    return CorrectedSumContext(spec, model.truncated(level), innovations, p,
                               j_max=j_max, **opts)


def corrected_sum(spec: FilterSpec, sample: SeriesSample, p: int,
                  j_max: int = DEFAULT_J_MAX, **opts) -> float:
    """One-shot corrected sum; build a context explicitly for repeated use."""
    ctx = CorrectedSumContext(spec, sample.model, sample.innovations, p,
                              j_max=j_max, **opts)
    return ctx.corrected_sum(sample)


def corrected_sum_truncated(spec: FilterSpec, sample: SeriesSample, p: int,
                            level: int, j_max: int = DEFAULT_J_MAX,
                            **opts) -> float:
    """Corrected sum of the same path re-filtered with only ``level`` taps.

    Evaluates the full corrected-sum machinery on the truncated model: the
    windows, the centering mean, and the coefficient tables all come from
    the first ``level`` coefficients, while the innovations are shared with
    the original path.  Equals the untruncated sum once ``level`` covers the
    whole filter (finite models) or reaches the horizon.
    """
    ctx = truncated_context(spec, sample.model, sample.innovations, p, level,
                            j_max=j_max, **opts)
    return ctx.corrected_sum(sample.truncated(level), count=sample.n - spec.d)
