"""Semi-analytic random-matrix averages for the benchmark ensemble.

When A is the top-left block of a Haar unitary on n+1 qubits, the spectrum
of H = A†A follows a determinantal point process built from shifted
Legendre polynomials.  Ensemble averages of the simulated bit-string
probabilities then reduce to linear algebra that is tiny compared with any
direct simulation: expand x -> e^{-itx} on [0, 1] in shifted Legendre
polynomials, contract the coefficients with the Legendre triple-product
tensor F into a banded kernel matrix, and sum traces of kernel products
over permutations.

The module provides

* ``f_triple`` / ``TripleProductTensor``: F(i,j,k) = (1/2) ∫ P_i P_j P_k dx;
* ``legendre_coeffs``: certified truncation of the e^{-itx} expansion;
* ``eigen_kernel`` and ``h_moment``: the spectral moments H_1 and H_2;
* ``expected_bitstring_moments``: closed-form first and second moments of
  p(U, x) over the circuit ensemble;
* ``critical_times``: the threshold and optimal simulation times located
  from the moment curves, with the large-N Bessel prediction;
* ``mc_h_oracle`` / ``sample_spectra`` / ``level_density_check``: direct
  Monte-Carlo counterparts used to validate all of the above.

Permutation sums are evaluated by cycle decomposition: each cycle becomes
a trace of a product of banded matrices (bandwidth is the expansion
degree, far below the matrix dimension), so H_2 at dimension 4096 costs a
handful of sparse products instead of a 4096^4 summation.  The literal
summation survives in ``h_moment_literal`` as an oracle for small N.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
from numpy.polynomial import legendre as npleg

from hsbench.linalg import RandomSource, haar_unitary

__all__ = [
    "PrecisionLimitError",
    "TripleProductTensor",
    "LegendreCoeffs",
    "EigenKernelMatrix",
    "HMoments",
    "CriticalTimes",
    "f_triple",
    "f_triple_closed",
    "legendre_coeffs",
    "eigen_kernel",
    "h_moment",
    "h_moment_literal",
    "mc_h_oracle",
    "expected_bitstring_moments",
    "critical_times",
    "sample_spectra",
    "arcsine_cdf",
    "level_density_check",
    "bessel_j0",
    "large_n_optimal_time",
    "mean_diag_evolution",
    "write_curve_file",
    "read_curve_file",
]


class PrecisionLimitError(ValueError):
    """Raised when a requested tolerance is below what doubles can certify."""


def _validate_index(v) -> int:
    iv = int(v)
    if iv != v or iv < 0:
        raise ValueError(f"polynomial degree must be a nonnegative integer, got {v!r}")
    return iv


def f_triple(i: int, j: int, k: int) -> float:
    """Triple product average F(i,j,k) = (1/2) ∫_{-1}^{1} P_i P_j P_k dx.

    Evaluated by descending two stable recurrences down to F(0,0,0) = 1,
    so no factorial ever overflows.  Triples with odd total degree or
    violating the triangle rule |i-j| <= k <= i+j integrate to zero.
    """
    a, b, c = sorted((_validate_index(i), _validate_index(j), _validate_index(k)))
    if (a + b + c) % 2 or c > a + b:
        return 0.0
    value = 1.0
    while c > 0:
        s2 = a + b + c
        s = s2 // 2
        if c >= b - a + 2:
            value *= (
                (s2 - 1 - 2 * a)
                / (s - a)
                * (s2 - 1 - 2 * b)
                / (s - b)
                * (s - c + 1)
                / (s2 - 2 * c + 1)
                * s
                / (s2 + 1)
            )
            a, b, c = sorted((a, b, c - 2))
        else:
            # here a < b is guaranteed: a == b with 0 < c < 2 would force
            # c = 1 and an odd total degree, excluded above
            value *= (s2 - 1 - 2 * a) / (s - a) * s / (s2 + 1)
            b, c = b - 1, c - 1
    return value


def f_triple_closed(i: int, j: int, k: int) -> float:
    """F(i,j,k) through the factorial closed form, in log space.

    Slower and independent of the recursion in :func:`f_triple`; the two
    routes cross-check each other.
    """
    a, b, c = (_validate_index(i), _validate_index(j), _validate_index(k))
    tot = a + b + c
    if tot % 2 or not abs(a - b) <= c <= a + b:
        return 0.0
    s = tot // 2
    lg = math.lgamma
    log_val = (
        lg(2 * s - 2 * a + 1)
        + lg(2 * s - 2 * b + 1)
        + lg(2 * s - 2 * c + 1)
        - lg(2 * s + 2)
        + 2 * (lg(s + 1) - lg(s - a + 1) - lg(s - b + 1) - lg(s - c + 1))
    )
    return math.exp(log_val)


@dataclass(frozen=True)
class TripleProductTensor:
    """Precomputed table of F(i,j,k) for all indices up to ``max_degree``.

    Only sorted triples on the even-degree triangle support are stored;
    ``value`` accepts indices in any order and returns 0 off support.
    """

    max_degree: int
    entries: dict

    @classmethod
    def build(cls, max_degree: int) -> "TripleProductTensor":
        if max_degree < 0:
            raise ValueError("max_degree must be nonnegative")
        entries = {}
        for a in range(max_degree + 1):
            for b in range(a, max_degree + 1):
                for c in range(b, min(a + b, max_degree) + 1):
                    if (a + b + c) % 2 == 0:
                        entries[(a, b, c)] = f_triple(a, b, c)
        return cls(max_degree=max_degree, entries=entries)

    def value(self, i: int, j: int, k: int) -> float:
        key = tuple(sorted((_validate_index(i), _validate_index(j), _validate_index(k))))
        if key[2] > self.max_degree:
            raise ValueError(f"index {key[2]} exceeds table degree {self.max_degree}")
        return self.entries.get(key, 0.0)


# -- Legendre expansion of the evolution phase ---------------------------------------


@dataclass(frozen=True)
class LegendreCoeffs:
    """Truncated expansion e^{-itx} ≈ Σ_q c_q P_q(2x-1) on [0, 1].

    ``bound`` caps the max reconstruction error over [0, 1]; construction
    verifies it on a 1000-point grid and refuses to return an uncertified
    expansion.
    """

    t: float
    coeffs: np.ndarray
    bound: float

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def _legendre_columns(u: np.ndarray, deg: int) -> np.ndarray:
    """P_0..P_deg evaluated at u, by the three-term recurrence in u's dtype."""
    v = np.empty((u.size, deg + 1), dtype=u.dtype)
    v[:, 0] = 1.0
    if deg >= 1:
        v[:, 1] = u
    for k in range(2, deg + 1):
        v[:, k] = ((2 * k - 1) * u * v[:, k - 1] - (k - 1) * v[:, k - 2]) / k
    return v


def _gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights in extended precision.

    Starts from the double-precision rule and polishes the nodes with
    Newton steps on P_order evaluated in long doubles; without this the
    rounding floor of the rule sits near 1e-16 per node and masks
    coefficients below ~1e-14.
    """
    u64, _ = npleg.leggauss(order)
    u = u64.astype(np.longdouble)
    dp = None
    for _ in range(3):
        cols = _legendre_columns(u, order)
        p = cols[:, order]
        dp = order * (cols[:, order - 1] - u * p) / (1.0 - u * u)
        u = u - p / dp
    w = 2.0 / ((1.0 - u * u) * dp * dp)
    return u, w


def legendre_coeffs(t: float, tol: float = 1e-10) -> LegendreCoeffs:
    """Expand x -> e^{-itx} on [0, 1] in shifted Legendre polynomials.

    c_q = (2q+1) ∫_0^1 e^{-itx} P_q(2x-1) dx by Gauss-Legendre quadrature
    whose order exceeds the retained degree by at least 32.  The cutoff D
    is the smallest degree with every computed |c_q|, q > D, below tol/10;
    at least eight tail coefficients must confirm the decay before the
    truncation is accepted.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if tol < 1e-14:
        raise PrecisionLimitError(f"tolerance {tol} is below double-precision reach")
    t = float(t)
    q_max = 32
    while True:
        nodes, weights = _gauss_rule(q_max + 40)
        fvals = np.exp(np.clongdouble(-1j * t) * (nodes + 1.0) / 2.0)
        vander = _legendre_columns(nodes, q_max)
        degrees = np.arange(q_max + 1)
        coeffs = (vander * (weights * fvals)[:, None]).sum(axis=0) * (2 * degrees + 1) / 2.0
        mags = np.abs(coeffs).astype(float)
        running_tail = np.maximum.accumulate(mags[::-1])[::-1]
        below = np.nonzero(running_tail < tol / 10.0)[0]
        if below.size >= 8:
            cutoff = max(int(below[0]) - 1, 0)
            break
        if q_max >= 2048:
            raise PrecisionLimitError(
                f"expansion of e^(-i {t} x) did not reach tolerance {tol} by degree {q_max}"
            )
        q_max *= 2
    retained = coeffs[: cutoff + 1].astype(complex)
    bound = float(mags[cutoff + 1 :].sum()) + 1e-13 * (1.0 + abs(t))
    grid = np.linspace(0.0, 1.0, 1000)
    err = np.abs(npleg.legval(2 * grid - 1.0, retained) - np.exp(-1j * t * grid)).max()
    if err > bound:
        raise ArithmeticError(
            f"reconstruction error {err:.3e} escaped its certificate {bound:.3e}"
        )
    return LegendreCoeffs(t=t, coeffs=retained, bound=bound)


# -- banded kernel matrices and spectral moments -------------------------------------


@dataclass(frozen=True)
class EigenKernelMatrix:
    """Kernel contraction pair for the eigenvalue point process.

    ``g`` holds G[j,k] = (2j+1) Σ_q c_q F(q,j,k) as a sparse banded matrix
    of order ``n_levels``; ``g_conj`` is its partner with conjugated
    coefficients.  The triangle rule keeps the bandwidth at the expansion
    degree, so products of these matrices stay cheap even at order 4096.
    """

    n_levels: int
    g: scipy.sparse.csr_matrix
    g_conj: scipy.sparse.csr_matrix
    bandwidth: int


def eigen_kernel(coeffs: LegendreCoeffs, n_levels: int) -> EigenKernelMatrix:
    """Assemble the banded kernel pair at matrix order ``n_levels``.

    Each (q, diagonal-offset) ray of F values is generated by one cumprod
    of recurrence ratios from its base triple, never through factorials.
    """
    n = int(n_levels)
    if n < 1:
        raise ValueError("kernel order must be at least 1")
    deg = coeffs.degree
    width = min(deg, n - 1)
    offsets = list(range(-width, width + 1))
    bands = {delta: np.zeros(n - abs(delta), dtype=complex) for delta in offsets}
    for q in range(deg + 1):
        c_q = coeffs.coeffs[q]
        for delta in range(max(-q, -width), min(q, width) + 1):
            if (q + delta) % 2:
                continue
            j_lo = (q - delta) // 2
            j_hi = n - 1 - max(0, delta)
            if j_lo > j_hi:
                continue
            base = f_triple(q, j_lo, j_lo + delta)
            js = np.arange(j_lo, j_hi + 1)
            if js.size > 1:
                s = (q + 2 * js[:-1] + delta) // 2
                ratios = (2 * s + 1 - 2 * q) / (s + 1 - q) * (s + 1) / (2 * s + 3)
                ray = base * np.cumprod(np.concatenate(([1.0], ratios)))
            else:
                ray = np.array([base])
            bands[delta][js - max(0, -delta)] += c_q * ray
    for delta, arr in bands.items():
        rows = np.arange(arr.size) + max(0, -delta)
        arr *= 2 * rows + 1
    g = scipy.sparse.diags([bands[d] for d in offsets], offsets, format="csr")
    return EigenKernelMatrix(n_levels=n, g=g, g_conj=g.conj().tocsr(), bandwidth=width)


def _cycles(perm: tuple) -> list[tuple[int, ...]]:
    seen = [False] * len(perm)
    out = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        orbit = []
        cur = start
        while not seen[cur]:
            seen[cur] = True
            orbit.append(cur)
            cur = perm[cur]
        out.append(tuple(orbit))
    return out


def _trace_product(mats: list) -> complex:
    if len(mats) == 1:
        return complex(mats[0].diagonal().sum())
    left = mats[0]
    for m in mats[1:-1]:
        left = left @ m
    return complex(left.multiply(mats[-1].T).sum())


def _falling_factorial(n: int, k: int) -> int:
    out = 1
    for m in range(n - k + 1, n + 1):
        out *= m
    return out


def _h_value(kernel: EigenKernelMatrix, ell: int) -> float:
    mats = [kernel.g] * ell + [kernel.g_conj] * ell
    labels = ("g",) * ell + ("gbar",) * ell
    trace_cache: dict = {}
    total = 0j
    for perm in itertools.permutations(range(2 * ell)):
        term = 1 + 0j
        sign = 1
        for orbit in _cycles(perm):
            word = tuple(labels[i] for i in orbit)
            key = min(word[r:] + word[:r] for r in range(len(word)))
            if key not in trace_cache:
                trace_cache[key] = _trace_product([mats[i] for i in orbit])
            term *= trace_cache[key]
            sign *= -1 if len(orbit) % 2 == 0 else 1
        total += sign * term
    value = total / _falling_factorial(kernel.n_levels, 2 * ell)
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"spectral moment came out complex: {value}")
    return float(value.real)


def h_moment(
    ell: int,
    t: float,
    n_levels: int,
    coeffs: LegendreCoeffs | None = None,
    tol: float = 1e-10,
) -> float:
    """Spectral moment H_ell at order ``n_levels``: the ensemble average of
    the product of e^{-itλ} over 2·ell distinct eigenvalues (the second
    ell of them conjugated), normalized to 1 at t = 0.

    The 2·ell-fold index sum is contracted cycle by cycle into traces of
    banded kernel products; ``h_moment_literal`` performs the raw sum.
    """
    if ell not in (1, 2):
        raise ValueError(f"only the first and second moments exist here, got ell={ell}")
    if n_levels < 2 * ell:
        raise ValueError(f"moment H_{ell} needs at least {2 * ell} levels, got {n_levels}")
    if coeffs is None:
        coeffs = legendre_coeffs(t, tol)
    return _h_value(eigen_kernel(coeffs, n_levels), ell)


def _dense_kernel(coeffs: LegendreCoeffs, n_levels: int) -> np.ndarray:
    deg = coeffs.degree
    g = np.zeros((n_levels, n_levels), dtype=complex)
    for j in range(n_levels):
        for k in range(n_levels):
            acc = 0j
            for q in range(abs(j - k), min(deg, j + k) + 1, 2):
                acc += coeffs.coeffs[q] * f_triple_closed(q, j, k)
            g[j, k] = (2 * j + 1) * acc
    return g


def h_moment_literal(ell: int, t: float, n_levels: int, tol: float = 1e-10) -> float:
    """H_ell by the raw permutation and index sums over a dense kernel.

    Cost grows as n_levels^(2 ell), so this is an oracle for small orders
    (capped at 256 for ell=1 and 32 for ell=2), not a production path.  The
    kernel itself is built entry by entry from the closed-form triple
    products, independent of the ray recurrences in :func:`eigen_kernel`.
    """
    if ell not in (1, 2):
        raise ValueError(f"only the first and second moments exist here, got ell={ell}")
    cap = 256 if ell == 1 else 32
    if not 2 * ell <= n_levels <= cap:
        raise ValueError(f"literal H_{ell} supports orders in [{2 * ell}, {cap}]")
    g = _dense_kernel(legendre_coeffs(t, tol), n_levels)
    g_bar = g.conj()
    if ell == 1:
        total = np.outer(np.diag(g), np.diag(g_bar)).sum() - (g * g_bar.T).sum()
    else:
        mats = [g, g, g_bar, g_bar]
        names = "abcd"
        total = 0j
        for perm in itertools.permutations(range(4)):
            sign = 1
            for orbit in _cycles(perm):
                sign *= -1 if len(orbit) % 2 == 0 else 1
            pattern = ",".join(names[j] + names[perm[j]] for j in range(4)) + "->"
            total += sign * np.einsum(pattern, *mats)
    value = total / _falling_factorial(n_levels, 2 * ell)
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"spectral moment came out complex: {value}")
    return float(value.real)


# -- Monte-Carlo oracles --------------------------------------------------------------


def sample_spectra(n: int, samples: int, rng: RandomSource) -> np.ndarray:
    """Pooled eigenvalues of H = A†A over Haar draws on n+1 qubits.

    Returns a flat array of samples·2^n values in [0, 1]; draw i consumes
    the child stream rng.child(i), so pools are reproducible regardless of
    batching.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    half = 1 << n
    pools = np.empty((samples, half))
    for i in range(samples):
        u = haar_unitary(2 * half, rng.child(i))
        a = u[:half, :half]
        pools[i] = np.linalg.eigvalsh(a.conj().T @ a)
    return np.clip(pools.reshape(-1), 0.0, 1.0)


def _set_partitions(items: list) -> list[list[list]]:
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in _set_partitions(rest):
        for i in range(len(part)):
            out.append(part[:i] + [part[i] + [first]] + part[i + 1 :])
        out.append([[first]] + part)
    return out


def mc_h_oracle(
    ell: int, t: float, n: int, samples: int, rng: RandomSource
) -> tuple[float, float]:
    """Monte-Carlo estimate of H_ell with its standard error.

    Each sample draws a Haar unitary on n+1 qubits, takes the eigenvalues
    of the block Gram matrix A†A, and evaluates the distinct-index sum of
    e^{-itλ} phases through the set-partition expansion in power sums, so
    no explicit loop over index tuples is needed.
    """
    if ell not in (1, 2):
        raise ValueError(f"only the first and second moments exist here, got ell={ell}")
    if samples < 10:
        raise ValueError("need at least 10 samples for a standard error")
    n_levels = 1 << n
    if n_levels < 2 * ell:
        raise ValueError(f"moment H_{ell} needs at least {2 * ell} levels")
    exponents = (1, -1) if ell == 1 else (1, 1, -1, -1)
    partitions = _set_partitions(list(range(2 * ell)))
    weights = []
    for part in partitions:
        w = 1
        for block in part:
            w *= (-1) ** (len(block) - 1) * math.factorial(len(block) - 1)
        weights.append(w)
    scale = _falling_factorial(n_levels, 2 * ell)
    half = 1 << n
    values = np.empty(samples)
    for i in range(samples):
        u = haar_unitary(2 * half, rng.child(i))
        a = u[:half, :half]
        lam = np.clip(np.linalg.eigvalsh(a.conj().T @ a), 0.0, 1.0)
        z = np.exp(-1j * t * lam)
        power_sums = {m: np.sum(z ** m) for m in range(-2 * ell, 2 * ell + 1)}
        total = 0j
        for part, w in zip(partitions, weights):
            term = complex(w)
            for block in part:
                term *= power_sums[sum(exponents[b] for b in block)]
            total += term
        values[i] = (total / scale).real
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))


# -- bit-string probability moments ---------------------------------------------------


@dataclass(frozen=True)
class HMoments:
    """Spectral moments at one (t, order) point and everything they imply.

    ``p_zero_*`` refer to the probability of the all-zeros output string,
    ``p_rest_*`` to the sum over all other strings: ``p_rest_mean`` is
    E[Σ_{x≠0} p(x)] and ``p_rest_second`` is E[Σ_{x≠0} p(x)^2].
    ``alpha_star`` is None when gamma vanishes and the threshold fidelity
    is undefined.
    """

    t: float
    n_levels: int
    h1: float
    h2: float
    gamma: float
    alpha_star: float | None
    p_zero_mean: float
    p_rest_mean: float
    p_zero_second: float
    p_rest_second: float


def _moments_from_h(t: float, n_levels: int, h1: float, h2: float) -> HMoments:
    n = float(n_levels)
    gamma = 2.0 - 5.0 * h1 + 4.0 * h2
    alpha_star = h1 / gamma if abs(gamma) > 1e-14 else None
    p_zero = (n - 1.0) / (n + 1.0) * h1 + 2.0 / (n + 1.0)
    p_rest = (n - 1.0) / (n + 1.0) * (1.0 - h1)
    p_zero_sq = (
        12.0 / ((n + 2.0) * (n + 3.0))
        + 12.0 * n * (n - 1.0) * h1 / ((n + 1.0) * (n + 2.0) * (n + 3.0))
        + (n - 1.0) * (n - 2.0) * (n - 3.0) * h2 / ((n + 1.0) * (n + 2.0) * (n + 3.0))
    )
    p_rest_sq = (
        2.0 * (n - 1.0) * (n * n + 3.0 * n + 6.0)
        - 4.0 * (n - 1.0) * (n * n - n + 6.0) * h1
        + 2.0 * (n - 1.0) * (n - 2.0) * (n - 3.0) * h2
    ) / (n * (n + 1.0) * (n + 2.0) * (n + 3.0))
    return HMoments(
        t=t,
        n_levels=n_levels,
        h1=h1,
        h2=h2,
        gamma=gamma,
        alpha_star=alpha_star,
        p_zero_mean=p_zero,
        p_rest_mean=p_rest,
        p_zero_second=p_zero_sq,
        p_rest_second=p_rest_sq,
    )


def expected_bitstring_moments(
    t: float,
    n_levels: int,
    coeffs: LegendreCoeffs | None = None,
    tol: float = 1e-10,
) -> HMoments:
    """First and second ensemble moments of the output probabilities.

    Requires at least 4 levels because the second moments average over
    four distinct eigenvalue indices.
    """
    if n_levels < 4:
        raise ValueError(f"moment formulas need at least 4 levels, got {n_levels}")
    if coeffs is None:
        coeffs = legendre_coeffs(t, tol)
    kernel = eigen_kernel(coeffs, n_levels)
    return _moments_from_h(t, n_levels, _h_value(kernel, 1), _h_value(kernel, 2))


# -- critical simulation times --------------------------------------------------------


def bessel_j0(x: float) -> float:
    """J_0 by its power series, 30 terms.

    Fine for |x| <= 12, though cancellation near the edge costs a few
    digits (absolute error ~1e-12 at x = 12, ~1e-15 below x = 6).
    """
    if abs(x) > 12.0:
        raise ValueError(f"power series only certified for |x| <= 12, got {x}")
    y = -0.25 * x * x
    acc = term = 1.0
    for m in range(1, 30):
        term *= y / (m * m)
        acc += term
    return acc


def _j0_first_root() -> float:
    lo, hi = 2.0, 3.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if bessel_j0(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def large_n_optimal_time() -> float:
    """Twice the first positive root of J_0: the time at which the
    large-dimension ensemble-mean diagonal amplitude first vanishes."""
    return 2.0 * _j0_first_root()


def mean_diag_evolution(t: float) -> complex:
    """Large-N limit of the ensemble-mean diagonal amplitude of e^{-iHt},
    namely e^{-it/2} J_0(t/2)."""
    return cmath.exp(-0.5j * t) * bessel_j0(0.5 * t)


@dataclass(frozen=True)
class CriticalTimes:
    """Result of scanning the threshold-fidelity curve over a time grid.

    ``alpha_star`` is NaN wherever gamma vanishes.  ``t_threshold`` is the
    interpolated first downward crossing of alpha_star through 1, and
    ``t_optimal`` the first local minimum on the grid; either is None when
    the grid shows no such feature.  ``bessel_prediction`` is the large-N
    location of the optimal time, independent of n.
    """

    n: int
    t_grid: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    gamma: np.ndarray
    alpha_star: np.ndarray
    t_threshold: float | None
    t_optimal: float | None
    alpha_star_min: float | None
    gamma_at_optimal: float | None
    bessel_prediction: float
    coeff_degree: int
    tol: float


def critical_times(n: int, t_grid: np.ndarray | None = None, tol: float = 1e-10) -> CriticalTimes:
    """Locate the threshold and optimal simulation times at 2^n levels.

    The grid must cover [0.5, 8] with spacing at most 0.02; the default
    uses exactly that window at the coarsest admissible spacing.
    """
    if t_grid is None:
        t_grid = np.linspace(0.5, 8.0, 376)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be a strictly increasing 1-d array")
    if t_grid[0] > 0.5 + 1e-9 or t_grid[-1] < 8.0 - 1e-9:
        raise ValueError("time grid must cover [0.5, 8]")
    if np.diff(t_grid).max() > 0.02 + 1e-9:
        raise ValueError("time grid spacing must not exceed 0.02")
    n_levels = 1 << n
    h1 = np.empty(t_grid.size)
    h2 = np.empty(t_grid.size)
    max_degree = 0
    for i, t in enumerate(t_grid):
        coeffs = legendre_coeffs(float(t), tol)
        max_degree = max(max_degree, coeffs.degree)
        kernel = eigen_kernel(coeffs, n_levels)
        h1[i] = _h_value(kernel, 1)
        h2[i] = _h_value(kernel, 2)
    gamma = 2.0 - 5.0 * h1 + 4.0 * h2
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha_star = np.where(np.abs(gamma) > 1e-14, h1 / gamma, np.nan)

    t_threshold = None
    for i in range(t_grid.size - 1):
        a0, a1 = alpha_star[i], alpha_star[i + 1]
        if np.isfinite(a0) and np.isfinite(a1) and a0 >= 1.0 > a1:
            frac = (a0 - 1.0) / (a0 - a1)
            t_threshold = float(t_grid[i] + frac * (t_grid[i + 1] - t_grid[i]))
            break

    t_optimal = alpha_min = gamma_opt = None
    for i in range(1, t_grid.size - 1):
        window = alpha_star[i - 1 : i + 2]
        if np.all(np.isfinite(window)) and window[1] < window[0] and window[1] <= window[2]:
            t_optimal = float(t_grid[i])
            alpha_min = float(alpha_star[i])
            gamma_opt = float(gamma[i])
            break

    return CriticalTimes(
        n=n,
        t_grid=t_grid,
        h1=h1,
        h2=h2,
        gamma=gamma,
        alpha_star=alpha_star,
        t_threshold=t_threshold,
        t_optimal=t_optimal,
        alpha_star_min=alpha_min,
        gamma_at_optimal=gamma_opt,
        bessel_prediction=large_n_optimal_time(),
        coeff_degree=max_degree,
        tol=tol,
    )


# -- level density --------------------------------------------------------------------


def arcsine_cdf(x) -> np.ndarray:
    """CDF of the arcsine law on [0, 1]: (2/π) arcsin(√x)."""
    return (2.0 / np.pi) * np.arcsin(np.sqrt(np.clip(x, 0.0, 1.0)))


def level_density_check(n: int, samples: int, rng: RandomSource) -> float:
    """Kolmogorov-Smirnov distance between pooled eigenvalues of H = A†A
    and the arcsine law they approach as n grows."""
    if samples < 10:
        raise ValueError("need at least 10 samples for a stable statistic")
    from scipy import stats

    pooled = sample_spectra(n, samples, rng)
    return float(stats.kstest(pooled, arcsine_cdf).statistic)


# -- curve files ----------------------------------------------------------------------


def _f17(value: float) -> str:
    return format(float(value), ".17g")


def write_curve_file(path, scan: CriticalTimes) -> None:
    """Write a critical-time scan as CSV with a metadata header."""
    lines = [
        f"# n={scan.n}",
        f"# coeff_degree={scan.coeff_degree}",
        f"# tol={_f17(scan.tol)}",
        "t,H1,H2,gamma,alpha_star",
    ]
    for i in range(scan.t_grid.size):
        lines.append(
            ",".join(
                _f17(v)
                for v in (scan.t_grid[i], scan.h1[i], scan.h2[i], scan.gamma[i], scan.alpha_star[i])
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve_file(path) -> tuple[dict, np.ndarray]:
    """Read a curve CSV back as (metadata dict, rows array of 5 columns)."""
    meta: dict = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, raw = line[1:].strip().partition("=")
                meta[key.strip()] = raw.strip()
            elif not line.startswith("t,"):
                rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValueError(f"no data rows in curve file {path}")
    return meta, np.array(rows)
