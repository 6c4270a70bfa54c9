"""Score aggregation and fidelity inference for benchmark runs.

A benchmark run produces, per random instance, a measured histogram over all
n+1 qubits.  Two scalars summarize it: the fraction of shots whose ancilla
read 0 (the evolution score for that instance) and the cross-entropy overlap
between the measured system strings and the classically computed noiseless
probabilities, with the all-zeros string left out because it stays heavy at
every simulation time.  Under the global depolarizing model

    p_exp(x) = alpha * p(x) + (1 - alpha) / 2^(n+1)

either scalar determines the circuit fidelity alpha.  The score route needs
no classical computation at all (alpha = 2 * score - 1, with rigorous error
bars controlled by the polynomial approximation error).  The cross-entropy
route inverts a linear relation whose coefficients are ensemble moments of
the noiseless probabilities; those come either from the random-matrix closed
forms or from the instance ensemble itself.

The same moments decide classical hardness: heavy-output generation becomes
nontrivial exactly when b(alpha) = 1 + gamma*(alpha - alpha*)/(alpha + 1)
exceeds one, where gamma and alpha* depend only on (n, t).  The 1/(alpha+1)
factor is the ancilla-conditioned normalization: discarding ancilla-1 shots
rescales the experimental measure by 2/(1+alpha).
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from hsbench.haar_analytics import CriticalTimes, HMoments
from hsbench.mqsvt import OutputDistribution
from hsbench.noise import Histogram


class IllConditionedError(ValueError):
    """The fidelity denominator is too close to zero to invert."""


# -- evolution score --------------------------------------------------------


@dataclass(frozen=True)
class QuesReport:
    """Ensemble mean of the per-instance ancilla-0 probability.

    ci95 is the half-width of the normal-approximation interval over
    instances (1.96 standard errors).  The metadata fields echo the run
    configuration and stay None when a report is built from bare values.
    """

    mean: float
    ci95: float
    per_instance: tuple[float, ...]
    n: int | None = None
    d: int | None = None
    t: float | None = None
    shots: int | None = None
    seed: int | None = None

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "ci95": self.ci95,
            "per_instance": list(self.per_instance),
            "n": self.n,
            "d": self.d,
            "t": self.t,
            "shots": self.shots,
            "seed": self.seed,
        }


def ques(
    per_instance,
    *,
    n: int | None = None,
    d: int | None = None,
    t: float | None = None,
    shots: int | None = None,
    seed: int | None = None,
) -> QuesReport:
    """Aggregate per-instance ancilla-0 fractions into a scored report.

    Needs at least two instances so the standard error is defined.
    """
    values = np.asarray(list(per_instance), dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("need at least two instance values")
    if values.min() < -1e-12 or values.max() > 1.0 + 1e-12:
        raise ValueError("instance values must be probabilities in [0, 1]")
    values = np.clip(values, 0.0, 1.0)
    se = float(values.std(ddof=1) / math.sqrt(values.size))
    return QuesReport(
        mean=float(values.mean()),
        ci95=1.96 * se,
        per_instance=tuple(float(v) for v in values),
        n=n,
        d=d,
        t=t,
        shots=shots,
        seed=seed,
    )


# -- cross-entropy score ----------------------------------------------------


def sxes(p_noiseless: OutputDistribution, p_exp) -> float:
    """Overlap score sum over nonzero strings of p(x) * p_exp(x).

    p_exp holds raw measured frequencies for the ancilla-0 sector, indexed
    like p_noiseless.probs.  No renormalization happens here; the entries
    are fractions of all shots, so they sum to at most one.
    """
    freqs = np.asarray(p_exp, dtype=float)
    if freqs.shape != p_noiseless.probs.shape:
        raise ValueError(
            f"frequency vector has shape {freqs.shape}, "
            f"expected {p_noiseless.probs.shape}"
        )
    if freqs.min() < -1e-12:
        raise ValueError("negative frequency")
    if freqs.sum() > 1.0 + 1e-9:
        raise ValueError("frequencies exceed unit total mass")
    return float(p_noiseless.probs[1:] @ freqs[1:])


def instance_scores(p_noiseless: OutputDistribution, hist: Histogram) -> tuple[float, float]:
    """(ancilla-0 fraction, cross-entropy score) for one measured instance.

    The ancilla is the most significant bit, so the ancilla-0 sector is the
    first half of the histogram.
    """
    freqs = hist.frequencies()
    half = freqs.shape[0] // 2
    if half != p_noiseless.probs.shape[0]:
        raise ValueError("histogram and distribution cover different systems")
    sector = freqs[:half]
    return float(sector.sum()), sxes(p_noiseless, sector)


# -- fidelity from the cross-entropy score -----------------------------------


@dataclass(frozen=True)
class SxesAlpha:
    """Fidelity inferred from the mean cross-entropy score.

    alpha is clamped to [0, 1]; raw keeps the unclamped solution of the
    linear relation.  denominator is retained so callers can propagate the
    score's standard error (se_alpha = se_score / |denominator|).
    """

    alpha: float
    raw: float
    numerator: float
    denominator: float


def _alpha_from_rest_moments(
    mean_sxes: float, n: int, rest_mean: float, rest_second: float
) -> SxesAlpha:
    uniform = rest_mean / float(2 ** (n + 1))
    denominator = rest_second - uniform
    if abs(denominator) < 1e-15:
        raise IllConditionedError(
            f"moment denominator {denominator:.3e} cannot be inverted"
        )
    raw = (mean_sxes - uniform) / denominator
    return SxesAlpha(
        alpha=min(max(raw, 0.0), 1.0),
        raw=raw,
        numerator=mean_sxes - uniform,
        denominator=denominator,
    )


def alpha_from_sxes(mean_sxes: float, n: int, t: float, analytics: HMoments) -> SxesAlpha:
    """Invert the score-fidelity relation using closed-form ensemble moments.

    The ensemble mean of the score is alpha * E[sum' p^2] plus the uniform
    floor (1-alpha)/2^(n+1) * E[sum' p], primes excluding the zero string;
    solving for alpha needs only the measured mean and the two moments.
    """
    if analytics.n_levels != 2**n:
        raise ValueError(
            f"analytics cover {analytics.n_levels} levels, expected 2^{n}"
        )
    if not math.isclose(analytics.t, t, rel_tol=0.0, abs_tol=1e-9):
        raise ValueError(f"analytics were computed at t={analytics.t}, not t={t}")
    return _alpha_from_rest_moments(
        mean_sxes, n, analytics.p_rest_mean, analytics.p_rest_second
    )


def empirical_rest_moments(dists: Sequence[OutputDistribution]) -> tuple[float, float]:
    """Instance-ensemble averages of sum' p and sum' p^2 (zero string excluded)."""
    if len(dists) == 0:
        raise ValueError("need at least one distribution")
    first = np.empty(len(dists))
    second = np.empty(len(dists))
    for i, dist in enumerate(dists):
        rest = dist.probs[1:]
        first[i] = rest.sum()
        second[i] = rest @ rest
    return float(first.mean()), float(second.mean())


def alpha_from_sxes_empirical(
    mean_sxes: float, n: int, dists: Sequence[OutputDistribution]
) -> SxesAlpha:
    """Same inversion as alpha_from_sxes with moments taken from the ensemble.

    Cross-validation mode: the closed forms assume the exact-evolution limit
    and carry finite-size corrections, while the empirical moments describe
    precisely the instances that were measured.
    """
    dim = 2**n
    for dist in dists:
        if dist.probs.shape[0] != dim:
            raise ValueError("distribution dimension does not match n")
    rest_mean, rest_second = empirical_rest_moments(dists)
    return _alpha_from_rest_moments(mean_sxes, n, rest_mean, rest_second)


# -- fidelity from the evolution score ---------------------------------------


@dataclass(frozen=True)
class QuesFidelity:
    """Point estimate 2*score - 1 with its rigorous two-sided envelope.

    The envelope comes from the score's only model freedom, the polynomial
    approximation error: the noiseless ancilla-0 weight sits in [1-2*eps, 1],
    so the score pins alpha between lower and upper.  The width collapses
    like 16*eps as the approximation sharpens.
    """

    alpha: float
    lower: float
    upper: float
    eps: float


def alpha_from_ques(ques_value: float, eps: float) -> QuesFidelity:
    if not 0.0 <= ques_value <= 1.0:
        raise ValueError(f"score must lie in [0, 1], got {ques_value}")
    if not 0.0 <= eps < 0.125:
        raise ValueError(f"approximation error must lie in [0, 1/8), got {eps}")
    lower = (2.0 * (1.0 - 2.0 * eps) * ques_value - 1.0) / (1.0 + 2.0 * eps)
    upper = (2.0 * ques_value - (1.0 - 2.0 * eps)) / (1.0 - 8.0 * eps)
    return QuesFidelity(
        alpha=2.0 * ques_value - 1.0, lower=lower, upper=upper, eps=eps
    )


@dataclass(frozen=True)
class FidelityEstimates:
    """The three fidelity numbers reported side by side for one table cell."""

    alpha_ques: float
    alpha_sxes: float
    alpha_ref: float
    lower: float
    upper: float


# -- hardness threshold algebra ----------------------------------------------


@dataclass(frozen=True)
class SupremacyParams:
    """Slope gamma and threshold alpha* of the heavy-output gain curve.

    alpha_star is None when gamma vanishes and no threshold exists.
    b_zero_alternative keeps 1 - E[p(0^n)] with all finite-size factors,
    the independent route to b(0); the b() method drops the 1/N terms.
    """

    h1: float
    h2: float
    n: int
    gamma: float
    alpha_star: float | None
    b_zero_alternative: float

    def b(self, alpha):
        """Heavy-output gain at fidelity alpha (scalar or array)."""
        a = np.asarray(alpha, dtype=float)
        if np.any(a <= -1.0):
            raise ValueError("gain is defined for alpha > -1")
        values = 1.0 + (a * self.gamma - self.h1) / (a + 1.0)
        if values.ndim == 0:
            return float(values)
        return values


def supremacy_params(h1: float, h2: float, n: int) -> SupremacyParams:
    """Map the two spectral moments to the hardness quantities at 2^n levels."""
    if n < 1:
        raise ValueError("need at least one system qubit")
    gamma = 2.0 - 5.0 * h1 + 4.0 * h2
    alpha_star = h1 / gamma if abs(gamma) > 1e-14 else None
    levels = float(2**n)
    zero_mean = ((levels - 1.0) * h1 + 2.0) / (levels + 1.0)
    return SupremacyParams(
        h1=h1,
        h2=h2,
        n=n,
        gamma=gamma,
        alpha_star=alpha_star,
        b_zero_alternative=1.0 - zero_mean,
    )


@dataclass(frozen=True)
class HardnessVerdict:
    """Outcome of the score-threshold comparison.

    margin is score - (1 + alpha*)/2; the check passes on margin >= 0 with
    positive gamma.  conservative_margin additionally pays the score's own
    approximation-error allowance of 8*eps.
    """

    hard: bool
    margin: float
    threshold: float
    gamma: float
    eps: float

    @property
    def conservative_margin(self) -> float:
        return self.margin - 8.0 * self.eps


def hardness_check(
    ques_value: float, alpha_star: float | None, gamma: float, eps: float = 0.0
) -> HardnessVerdict:
    """Decide whether a measured score certifies the heavy-output regime."""
    if not 0.0 <= ques_value <= 1.0:
        raise ValueError(f"score must lie in [0, 1], got {ques_value}")
    if eps < 0.0:
        raise ValueError("approximation error cannot be negative")
    if alpha_star is None or not math.isfinite(alpha_star):
        return HardnessVerdict(
            hard=False, margin=math.nan, threshold=math.nan, gamma=gamma, eps=eps
        )
    threshold = (1.0 + alpha_star) / 2.0
    margin = ques_value - threshold
    return HardnessVerdict(
        hard=bool(margin >= 0.0 and gamma > 0.0),
        margin=margin,
        threshold=threshold,
        gamma=gamma,
        eps=eps,
    )


@dataclass(frozen=True)
class SupremacyCurve:
    """Gain samples b(alpha; t) over a time grid, row per time point."""

    n: int
    t_grid: np.ndarray
    gamma: np.ndarray
    alpha_star: np.ndarray
    alphas: np.ndarray
    b: np.ndarray


def supremacy_curve(scan: CriticalTimes, alphas=None) -> SupremacyCurve:
    """Tabulate the gain over a critical-time scan at sample fidelities."""
    if alphas is None:
        alphas = np.linspace(0.0, 1.0, 21)
    a = np.asarray(alphas, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("need a one-dimensional fidelity grid")
    if a.min() <= -1.0:
        raise ValueError("gain is defined for alpha > -1")
    gain = 1.0 + (
        a[None, :] * scan.gamma[:, None] - scan.h1[:, None]
    ) / (a[None, :] + 1.0)
    return SupremacyCurve(
        n=scan.n,
        t_grid=scan.t_grid.copy(),
        gamma=scan.gamma.copy(),
        alpha_star=scan.alpha_star.copy(),
        alphas=a.copy(),
        b=gain,
    )


# -- report artifact ----------------------------------------------------------


def supremacy_block(t: float, params: SupremacyParams, alpha: float) -> dict:
    return {
        "t": t,
        "H1": params.h1,
        "H2": params.h2,
        "gamma": params.gamma,
        "alpha_star": params.alpha_star,
        "b_at_alpha": params.b(alpha),
    }


def build_report(
    config: Mapping,
    ques_report: QuesReport,
    fidelity: FidelityEstimates,
    supremacy: Mapping,
) -> dict:
    return {
        "config": dict(config),
        "ques_report": ques_report.as_dict(),
        "fidelity": {
            "ques": fidelity.alpha_ques,
            "sxes": fidelity.alpha_sxes,
            "ref": fidelity.alpha_ref,
            "bounds": [fidelity.lower, fidelity.upper],
        },
        "supremacy": dict(supremacy),
    }


def _plain(value):
    """Recursively coerce to JSON-clean types; NaN becomes null."""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_report_file(path, report: Mapping) -> None:
    text = json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def read_report_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
