"""Wiener-regularized path-integral estimators.

The plane estimator averages exp(i S_r / hbar) over exact Brownian bridges
pinned between the kernel arguments, weighted by the conditional Wiener
normalization and the regularization factor exp(r hbar / 2); the propagator
kernel is its r -> infinity limit.  The torus estimator sums displaced-
endpoint plane estimates over the grid with homotopy phase weights.

Reproducibility contract: a result is a pure function of its arguments and
seed.  Sampling is chunked at a fixed size with pairwise in-chunk summation
and exact cross-chunk accumulation, grid terms use independent streams
derived from (seed, m, n), and nothing depends on how calls are distributed
over workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from ._stepper import phase_chunk
from .errors import ExtrapolationUnstable
from .geometry import (
    CharacterK,
    FourierSymbol,
    GridVector,
    PlanePoint,
    TorusGeometry,
    grid_vectors_within,
)

CHUNK_SAMPLES = 8192


@dataclass(frozen=True)
class BridgeSpec:
    """Brownian bridge pinned at start (s=0) and end (s=duration_r)."""

    start: PlanePoint
    end: PlanePoint
    duration_r: float
    steps: int
    hbar: float

    def __post_init__(self):
        if self.duration_r <= 0:
            raise ValueError("bridge duration must be positive")
        if self.steps < 2:
            raise ValueError("bridge needs at least 2 steps")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")


@dataclass(frozen=True, eq=False)
class PathSample:
    """One discretized bridge realization on the uniform time grid."""

    times: np.ndarray
    points: np.ndarray  # (steps + 1, 2); columns are (p, q)

    @property
    def steps(self) -> int:
        return self.points.shape[0] - 1


def default_steps(r: float, hbar: float, per_unit: float = 64.0) -> int:
    """Step count rule M = ceil(per_unit * r * hbar), keeping per-step
    bridge variance constant across the r schedule."""
    return max(2, int(math.ceil(per_unit * r * hbar)))


def sample_bridge_batch(spec: BridgeSpec, seed: int, n_samples: int) -> np.ndarray:
    """Exact bridge samples, shape (n_samples, steps + 1, 2).

    Sequential Gaussian conditioning: given the current point and the pinned
    endpoint, the next point is normal with the standard bridge mean and
    variance hbar^2 * dt * (tau - dt) / tau, independently per component.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    M = spec.steps
    dt = spec.duration_r / M
    normals = rng.standard_normal((n_samples, M - 1, 2))
    out = np.empty((n_samples, M + 1, 2))
    out[:, 0, 0] = spec.start.p
    out[:, 0, 1] = spec.start.q
    end = np.array([spec.end.p, spec.end.q])
    cur = np.broadcast_to(out[:, 0, :], (n_samples, 2)).copy()
    for m in range(1, M):
        tau = spec.duration_r - (m - 1) * dt
        sd = spec.hbar * math.sqrt(dt * (tau - dt) / tau)
        cur = cur + (end[None, :] - cur) * (dt / tau) + sd * normals[:, m - 1, :]
        out[:, m, :] = cur
    out[:, M, 0] = spec.end.p
    out[:, M, 1] = spec.end.q
    return out


def sample_bridge(spec: BridgeSpec, seed: int) -> PathSample:
    """One exact bridge realization; endpoints are pinned bitwise."""
    pts = sample_bridge_batch(spec, seed, 1)[0]
    times = np.linspace(0.0, spec.duration_r, spec.steps + 1)
    return PathSample(times=times, points=pts)


def stratonovich_area(path: PathSample) -> float:
    """Signed-area functional 1/2 integral (dq p - dp q), midpoint rule.

    Positive for counterclockwise loops in the (p, q) plane; path reversal
    flips the sign; radial (straight through origin-aligned) segments
    contribute nothing.
    """
    p = path.points[:, 0]
    q = path.points[:, 1]
    dp = np.diff(p)
    dq = np.diff(q)
    pmid = 0.5 * (p[1:] + p[:-1])
    qmid = 0.5 * (q[1:] + q[:-1])
    return float(0.5 * np.sum(dq * pmid - dp * qmid))


def path_action(path: PathSample, h: FourierSymbol, t: float) -> float:
    """Regularized action: area term minus (t/r) * trapezoid of h along s."""
    r = float(path.times[-1])
    hvals = h.evaluate(path.points[:, 0], path.points[:, 1])
    hint = float(np.trapz(hvals, path.times))
    return stratonovich_area(path) - (t / r) * hint


def wiener_prefactor(x_prime: PlanePoint, x: PlanePoint, r: float, hbar: float) -> float:
    """Gaussian endpoint density of the conditional Wiener measure."""
    d2 = (x_prime.p - x.p) ** 2 + (x_prime.q - x.q) ** 2
    return math.exp(-d2 / (2.0 * hbar * hbar * r)) / (2.0 * math.pi * hbar * hbar * r)


@dataclass(frozen=True)
class EstimatorResult:
    """Monte Carlo value with its standard error and provenance."""

    value: complex
    std_error: float
    n_samples: int
    r: float
    steps: int
    seed: int

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")


def derive_seed(master: int, m: int, n: int) -> np.random.SeedSequence:
    """Independent, reproducible stream for grid term (m, n)."""
    return np.random.SeedSequence((master, m + 2**31, n + 2**31))


def _empty_symbol_arrays():
    z = np.zeros(0)
    return z.astype(np.int64), z.astype(np.int64), z, z


def estimate_plane(
    x_prime: PlanePoint,
    x: PlanePoint,
    h: FourierSymbol | None,
    t: float,
    r: float,
    steps: int,
    n_samples: int,
    seed: int | np.random.SeedSequence,
    hbar: float,
) -> EstimatorResult:
    """Finite-r estimate of the plane propagator kernel at (x'; x).

    value = 2 pi hbar e^{r hbar / 2} * wiener_prefactor * mean exp(i S_r/hbar);
    std_error combines the componentwise sample variances in quadrature.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    if h is not None and t != 0.0:
        marr, narr, cre, cim = h.term_arrays()
        wa = 2.0 * math.pi / h.geometry.a
        wb = 2.0 * math.pi / h.geometry.b
    else:
        marr, narr, cre, cim = _empty_symbol_arrays()
        wa = wb = 1.0
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.default_rng(seq)
    M = steps
    sum_re = []
    sum_im = []
    sum_re2 = []
    sum_im2 = []
    left = n_samples
    while left > 0:
        chunk = min(CHUNK_SAMPLES, left)
        normals = rng.standard_normal((chunk, M - 1, 2))
        out_re, out_im = phase_chunk(
            normals, x.p, x.q, x_prime.p, x_prime.q, r, hbar, t,
            marr, narr, cre, cim, wa, wb,
        )
        sum_re.append(float(np.sum(out_re)))
        sum_im.append(float(np.sum(out_im)))
        sum_re2.append(float(np.sum(out_re * out_re)))
        sum_im2.append(float(np.sum(out_im * out_im)))
        left -= chunk
    n = n_samples
    sre = math.fsum(sum_re)
    sim = math.fsum(sum_im)
    sre2 = math.fsum(sum_re2)
    sim2 = math.fsum(sum_im2)
    mean = complex(sre / n, sim / n)
    var_re = max(0.0, (sre2 - sre * sre / n) / (n - 1))
    var_im = max(0.0, (sim2 - sim * sim / n) / (n - 1))
    weight = 2.0 * math.pi * hbar * math.exp(r * hbar / 2.0) * wiener_prefactor(
        x_prime, x, r, hbar
    )
    master = int(seq.entropy if not isinstance(seq.entropy, (tuple, list)) else seq.entropy[0])
    return EstimatorResult(
        value=weight * mean,
        std_error=weight * math.sqrt((var_re + var_im) / n),
        n_samples=n,
        r=r,
        steps=M,
        seed=master,
    )


def homotopy_phase(g: GridVector, k: CharacterK, x_prime: PlanePoint) -> float:
    """Action-valued phase attached to the grid sector g in the torus sum."""
    return (
        g.g1 * k.k2
        - g.g2 * k.k1
        + 0.5 * (g.g1 * x_prime.q - g.g2 * x_prime.p + g.g1 * g.g2)
    )


@dataclass(frozen=True)
class TorusTerm:
    """One grid sector of the torus estimator: displaced endpoint plus its
    unit-modulus weight and independent seed."""

    g: GridVector
    weight: complex
    end: PlanePoint
    seed: np.random.SeedSequence


def plan_torus_terms(
    x_prime: PlanePoint,
    x: PlanePoint,
    geom: TorusGeometry,
    k: CharacterK,
    tol: float,
    seed: int,
) -> list[TorusTerm]:
    """Grid sectors whose target magnitude exp(-d^2/4hbar) reaches tol.

    The weight is the conjugated homotopy phase: the orientation that makes
    the t = 0 sum reproduce the torus kernel with row = primed point (see
    torus module notes).
    """
    sep = math.hypot(x_prime.p - x.p, x_prime.q - x.q)
    dstar = 2.0 * math.sqrt(geom.hbar * math.log(1.0 / tol))
    terms = []
    for g in grid_vectors_within(geom, sep + dstar + max(geom.a, geom.b)):
        end = PlanePoint(x_prime.p + g.g1, x_prime.q + g.g2)
        if math.hypot(end.p - x.p, end.q - x.q) > dstar:
            continue
        weight = complex(np.exp(-1j * homotopy_phase(g, k, x_prime) / geom.hbar))
        terms.append(TorusTerm(g=g, weight=weight, end=end, seed=derive_seed(seed, g.m, g.n)))
    return terms


def combine_torus_terms(
    terms: Sequence[TorusTerm],
    results: Sequence[EstimatorResult],
    r: float,
    steps: int,
    n_samples: int,
    seed: int,
) -> EstimatorResult:
    """Phase-weighted sum of per-sector estimates; errors add in quadrature."""
    value = sum(term.weight * res.value for term, res in zip(terms, results))
    err = math.sqrt(math.fsum(res.std_error**2 for res in results))
    return EstimatorResult(
        value=complex(value), std_error=err, n_samples=n_samples,
        r=r, steps=steps, seed=seed,
    )


def estimate_torus(
    x_prime: PlanePoint,
    x: PlanePoint,
    h: FourierSymbol | None,
    t: float,
    r: float,
    steps: int,
    n_samples: int,
    seed: int,
    geom: TorusGeometry,
    k: CharacterK,
    tol: float = 1e-3,
    progress: Callable[[int, int], None] | None = None,
) -> EstimatorResult:
    """Finite-r estimate of the torus propagator kernel at (x'; x)."""
    terms = plan_torus_terms(x_prime, x, geom, k, tol, seed)
    results = []
    for i, term in enumerate(terms):
        results.append(
            estimate_plane(term.end, x, h, t, r, steps, n_samples, term.seed, geom.hbar)
        )
        if progress is not None:
            progress(i + 1, len(terms))
    return combine_torus_terms(terms, results, r, steps, n_samples, seed)


@dataclass(frozen=True)
class ExtrapolationResult:
    """Infinite-r limit A of a schedule of finite-r estimates."""

    value: complex
    error: float
    decay_amplitude: complex
    decay_rate: float
    plateau: float
    plateau_sigma: float
    model: str
    n_points: int


def _constant_fit(vals: np.ndarray, sigmas: np.ndarray) -> tuple[complex, float]:
    w = 1.0 / sigmas**2
    a = complex(np.sum(w * vals) / np.sum(w))
    return a, math.sqrt(1.0 / float(np.sum(w)))


def extrapolate_plateau(results: Sequence[EstimatorResult]) -> ExtrapolationResult:
    """Weighted fit of value(r) = A + B exp(-c r) over the schedule.

    Returns A with an error from the whitened-fit covariance.  Degenerate,
    effectively constant data falls back to the weighted mean with B = 0.
    Raises ExtrapolationUnstable when the fitted decay rate is nonpositive
    on clearly non-constant data, or when either of the two largest-r points
    sits more than 5 combined sigmas away from A.
    """
    if len(results) < 3:
        raise ValueError("extrapolation needs at least 3 r values")
    order = np.argsort([res.r for res in results])
    rs = np.array([results[i].r for i in order])
    if np.any(np.diff(rs) <= 0):
        raise ValueError("r values must be distinct")
    vals = np.array([complex(results[i].value) for i in order])
    sigmas = np.array([max(results[i].std_error, 1e-300) for i in order])
    comp_sig = sigmas / math.sqrt(2.0)

    a_const, err_const = _constant_fit(vals, sigmas)
    chi2_const = float(
        np.sum(np.abs(vals - a_const) ** 2 / comp_sig**2)
    )

    def residuals(theta):
        A = theta[0] + 1j * theta[1]
        B = theta[2] + 1j * theta[3]
        model = A + B * np.exp(-theta[4] * rs)
        res = (vals - model) / comp_sig
        return np.concatenate([res.real, res.imag])

    a0 = vals[-1]
    b0 = vals[0] - a0
    best = None
    for c0 in (0.5 / rs[0], 1.0 / rs[0], 2.0 / rs[0], 1.0):
        theta0 = np.array([a0.real, a0.imag, b0.real, b0.imag, c0])
        try:
            fit = scipy.optimize.least_squares(
                residuals, theta0, method="lm", xtol=1e-14, ftol=1e-14, max_nfev=2000
            )
        except Exception:
            continue
        if best is None or fit.cost < best.cost:
            best = fit

    use_constant = False
    if best is None:
        use_constant = True
    else:
        A = complex(best.x[0], best.x[1])
        B = complex(best.x[2], best.x[3])
        c = float(best.x[4])
        jtj = best.jac.T @ best.jac
        try:
            cov = np.linalg.inv(jtj)
            err = math.sqrt(max(cov[0, 0], 0.0) + max(cov[1, 1], 0.0))
            sig_b = math.sqrt(max(cov[2, 2], 0.0) + max(cov[3, 3], 0.0))
        except np.linalg.LinAlgError:
            cov = None
            err = err_const
            sig_b = float("inf")
        # B indistinguishable from zero (or unidentifiable decay): constant data
        if abs(B) <= 3.0 * sig_b or cov is None:
            use_constant = True
        elif c <= 0.0:
            dof = max(1, 2 * len(rs) - 2)
            if chi2_const / dof <= 2.0:
                use_constant = True
            else:
                raise ExtrapolationUnstable(
                    f"fitted decay rate {c:.3e} is nonpositive and the data "
                    f"are not constant (chi2/dof {chi2_const / dof:.2f})"
                )

    if use_constant:
        A, err = a_const, err_const
        B, c = 0.0 + 0.0j, 0.0
        model_name = "constant"
    else:
        model_name = "exponential"

    # Raw plateau diagnostic: distance of the two largest-r values from A.
    plateau = max(abs(vals[i] - A) for i in (-2, -1))
    # Stability trigger: those points must agree with the fitted tail model
    # within 5 combined sigmas, otherwise the plateau is not believable.
    misfits = []
    for i in (-2, -1):
        model_val = A + B * math.exp(-c * rs[i]) if model_name == "exponential" else A
        misfits.append(abs(vals[i] - model_val) / math.sqrt(sigmas[i] ** 2 + err * err))
    plateau_sigma = max(misfits)
    if plateau_sigma > 5.0:
        raise ExtrapolationUnstable(
            f"largest-r points deviate {plateau_sigma:.1f} sigma from the fitted "
            f"plateau (raw plateau {plateau:.3e}, reported error {err:.3e})"
        )
    return ExtrapolationResult(
        value=complex(A), error=float(err), decay_amplitude=complex(B),
        decay_rate=float(c), plateau=float(plateau),
        plateau_sigma=float(plateau_sigma), model=model_name, n_points=len(rs),
    )
