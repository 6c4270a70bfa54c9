"""Phase-factor sequences realizing the time-evolution polynomial e^{-i t x^2}.

A sequence of real angles turns the 2x2 signal chain

    U(x) = e^{i phi_0 Z} prod_j [ W(x) e^{i phi_j Z} ],
    W(x) = [[x, i sqrt(1-x^2)], [i sqrt(1-x^2), x]],

into a degree-d polynomial P(x) = U(x)_00 that approximates e^{-i t x^2} on
[-1, 1].  This module evaluates such chains, solves for the angles by
quasi-Newton optimization, converts between the signal-processing angle
convention and the circuit-rotation convention (which absorbs extra pi/4 and
pi/2 offsets into the ancilla rotations), and extends a solved sequence to
longer times by concatenation.

Two conventions are supported.  "QSP" stores d+1 angles for a degree-d
polynomial.  "CIRCUIT" stores 2d+1 angles, one per ancilla rotation of the
simulation circuit with d queries to the encoding unitary in each direction;
it realizes a degree-2d polynomial.  The circuit offsets are +pi/4 at both
endpoints and a uniform +pi/2 on interior angles; the uniform rule (rather
than an alternating-sign interior rule, which flips the sign of P for odd
query counts) is the one that reproduces published error levels and the
block-encoding identity, and is what convert_convention implements.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from hsbench.linalg import RandomSource

QSP = "QSP"
CIRCUIT = "CIRCUIT"

_TWO_PI = 2.0 * math.pi


class MalformedSequenceError(ValueError):
    """Phase list length or tags inconsistent with the claimed convention."""


class PhaseSolverDidNotConverge(RuntimeError):
    """Optimizer exhausted its restart budget above tolerance.

    Carries the best sequence found so far in ``best`` (its sup_error is the
    certified dense-grid error, just not below the requested tolerance).
    """

    def __init__(self, message: str, best: "PhaseFactorSequence"):
        super().__init__(message)
        self.best = best


def reduce_phases(phases) -> np.ndarray:
    """Wrap every angle into [-pi, pi)."""
    return np.mod(np.asarray(phases, dtype=float) + math.pi, _TWO_PI) - math.pi


@dataclass(frozen=True)
class PhaseFactorSequence:
    """An immutable list of rotation angles with its certification.

    degree means the polynomial degree in the QSP convention (d+1 angles) and
    the per-direction query count in the CIRCUIT convention (2d+1 angles, so
    the realized polynomial degree is 2*degree).
    """

    phases: np.ndarray
    convention: str
    degree: int
    target_time: float
    sup_error: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float)
        object.__setattr__(self, "phases", phases)
        if self.convention not in (QSP, CIRCUIT):
            raise MalformedSequenceError(f"unknown convention {self.convention!r}")
        expected = self.degree + 1 if self.convention == QSP else 2 * self.degree + 1
        if phases.ndim != 1 or len(phases) != expected:
            raise MalformedSequenceError(
                f"{self.convention} sequence of degree {self.degree} needs "
                f"{expected} phases, got shape {phases.shape}"
            )
        if np.any(phases < -math.pi) or np.any(phases >= math.pi):
            raise MalformedSequenceError("phases must lie in [-pi, pi)")
        if not self.sup_error >= 0:
            raise MalformedSequenceError("sup_error must be >= 0")


@dataclass(frozen=True)
class QspPointValue:
    """The chain evaluated at one point: P, Q and the full 2x2 unitary."""

    P: complex
    Q: complex
    unitary: np.ndarray


def target_value(t: float, x) -> np.ndarray:
    """The function the polynomial chases: e^{-i t x^2}."""
    x = np.asarray(x, dtype=float)
    return np.exp(-1j * t * x * x)


def eval_pq(x, phases) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (P, Q) for QSP-convention angles; exact at x = +-1.

    Tracks the top row (a, i*sqrt(1-x^2)*c) of the running product, so only
    the polynomial parts a -> P and c -> Q are ever stored and no division by
    sqrt(1-x^2) occurs.
    """
    x = np.asarray(x, dtype=float)
    phases = np.asarray(phases, dtype=float)
    one_minus = 1.0 - x * x
    a = np.full(x.shape, np.exp(1j * phases[0]), dtype=complex)
    c = np.zeros(x.shape, dtype=complex)
    for phi in phases[1:]:
        a, c = a * x - one_minus * c, a + c * x
        rot = np.exp(1j * phi)
        a = a * rot
        c = c / rot
    return a, c


def qsp_eval(x: float, seq: PhaseFactorSequence) -> QspPointValue:
    """Evaluate the 2x2 chain of a QSP-convention sequence at one point."""
    if seq.convention != QSP:
        raise MalformedSequenceError("qsp_eval expects the QSP convention")
    if abs(x) > 1.0:
        raise ValueError(f"signal value must satisfy |x| <= 1, got {x}")
    xs = np.array([x])
    p, q = eval_pq(xs, seq.phases)
    # The chain is a product of determinant-1 factors, so the bottom row is
    # determined: U = [[P, i s Q], [i s conj(Q'), conj(P')]] collapses to the
    # SU(2) form [[a, b], [-conj(b), conj(a)]].
    s = math.sqrt(max(0.0, 1.0 - x * x))
    b = 1j * s * q[0]
    u = np.array([[p[0], b], [-np.conj(b), np.conj(p[0])]])
    return QspPointValue(P=complex(p[0]), Q=complex(q[0]), unitary=u)


def _objective_nodes(d: int) -> np.ndarray:
    """Positive Chebyshev nodes used to fit a degree-d even polynomial."""
    d_tilde = (d + 2) // 2  # ceil((d+1)/2)
    k = np.arange(1, d_tilde + 1)
    return np.cos((2 * k - 1) * math.pi / (4 * d_tilde))


def _value_and_gradient(
    phases: np.ndarray, nodes: np.ndarray, targets: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean squared node error and its exact gradient in the angles.

    Gradient by prefix/suffix accumulation: with the chain written as
    A_0 A_1 ... A_d, each dA_j/dphi_j equals A_j (iZ), so
    dP/dphi_j = i * (L_j R_j with a Z wedged in)_00 for prefix L and suffix R.
    """
    d = len(phases) - 1
    x = nodes
    m = len(x)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    rot = np.exp(1j * phases)

    factors = np.empty((d + 1, m, 2, 2), dtype=complex)
    factors[0, :, 0, 0] = rot[0]
    factors[0, :, 0, 1] = 0.0
    factors[0, :, 1, 0] = 0.0
    factors[0, :, 1, 1] = np.conj(rot[0])
    for j in range(1, d + 1):
        factors[j, :, 0, 0] = x * rot[j]
        factors[j, :, 0, 1] = 1j * s * np.conj(rot[j])
        factors[j, :, 1, 0] = 1j * s * rot[j]
        factors[j, :, 1, 1] = x * np.conj(rot[j])

    prefix = np.empty_like(factors)
    prefix[0] = factors[0]
    for j in range(1, d + 1):
        prefix[j] = prefix[j - 1] @ factors[j]
    suffix = np.empty_like(factors)
    suffix[d] = np.eye(2)
    for j in range(d - 1, -1, -1):
        suffix[j] = factors[j + 1] @ suffix[j + 1]

    value_p = prefix[d, :, 0, 0]
    residual = value_p - targets
    dp = 1j * (
        prefix[:, :, 0, 0] * suffix[:, :, 0, 0]
        - prefix[:, :, 0, 1] * suffix[:, :, 1, 0]
    )
    value = float(np.mean(np.abs(residual) ** 2))
    grad = (2.0 / m) * np.real(np.conj(residual)[None, :] * dp).sum(axis=1)
    return value, grad


def objective(seq: PhaseFactorSequence, t: float) -> tuple[float, np.ndarray]:
    """Node-averaged squared deviation from e^{-i t x^2}, with gradient."""
    if seq.convention != QSP:
        raise MalformedSequenceError("objective expects the QSP convention")
    nodes = _objective_nodes(seq.degree)
    return _value_and_gradient(seq.phases, nodes, target_value(t, nodes))


def certification_grid(degree: int) -> np.ndarray:
    """Chebyshev-distributed sup-norm grid on [0, 1] (10*degree + 1 points)."""
    count = 10 * max(degree, 1)
    return np.cos(np.linspace(0.0, math.pi / 2.0, count + 1))


def measured_sup_error(phases, t: float, degree: int) -> float:
    grid = certification_grid(degree)
    p, _ = eval_pq(grid, phases)
    return float(np.abs(p - target_value(t, grid)).max())


def _residuals(phases, x, targets, weights=None):
    """Stacked real/imag node residuals of P - target and their Jacobian."""
    d = len(phases) - 1
    m = len(x)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    rot = np.exp(1j * phases)
    factors = np.empty((d + 1, m, 2, 2), dtype=complex)
    factors[0, :, 0, 0] = rot[0]
    factors[0, :, 0, 1] = 0.0
    factors[0, :, 1, 0] = 0.0
    factors[0, :, 1, 1] = np.conj(rot[0])
    for j in range(1, d + 1):
        factors[j, :, 0, 0] = x * rot[j]
        factors[j, :, 0, 1] = 1j * s * np.conj(rot[j])
        factors[j, :, 1, 0] = 1j * s * rot[j]
        factors[j, :, 1, 1] = x * np.conj(rot[j])
    prefix = np.empty_like(factors)
    prefix[0] = factors[0]
    for j in range(1, d + 1):
        prefix[j] = prefix[j - 1] @ factors[j]
    suffix = np.empty_like(factors)
    suffix[d] = np.eye(2)
    for j in range(d - 1, -1, -1):
        suffix[j] = factors[j + 1] @ suffix[j + 1]
    r = prefix[d, :, 0, 0] - targets
    dp = 1j * (
        prefix[:, :, 0, 0] * suffix[:, :, 0, 0]
        - prefix[:, :, 0, 1] * suffix[:, :, 1, 0]
    )
    if weights is not None:
        root = np.sqrt(weights)
        r = r * root
        dp = dp * root[None, :]
    res = np.concatenate([r.real, r.imag])
    jac = np.concatenate([dp.real.T, dp.imag.T], axis=0)
    return res, jac


def _fit_nodes(degree: int, mult: int = 5) -> np.ndarray:
    m = mult * max(degree, 1)
    k = np.arange(1, m + 1)
    return np.cos((2 * k - 1) * math.pi / (4 * m))


def _gauss_newton(t, d, start, nodes, weights=None, max_nfev=800):
    targets = target_value(t, nodes)
    fit = least_squares(
        lambda p: _residuals(p, nodes, targets, weights)[0],
        start,
        jac=lambda p: _residuals(p, nodes, targets, weights)[1],
        method="trf",
        xtol=3e-16,
        ftol=3e-16,
        gtol=3e-16,
        max_nfev=max_nfev,
    )
    return fit.x, int(fit.nfev)


def _lbfgs(t, d, start):
    nodes = _objective_nodes(d)
    targets = target_value(t, nodes)
    result = minimize(
        lambda p: _value_and_gradient(p, nodes, targets),
        start,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 2000, "ftol": 1e-30, "gtol": 1e-16},
    )
    return result.x, int(result.nit)


def _embed_degree(phases: np.ndarray) -> np.ndarray:
    """Grow a chain by one W-pair without changing its polynomial.

    W(x) e^{i pi/2 Z} W(x) = e^{i pi/2 Z} for every x, so replacing the last
    angle c with the triple (c - pi/2, pi/2, 0) realizes the same P at degree
    d + 2.
    """
    return np.concatenate([phases[:-1], [phases[-1] - math.pi / 2, math.pi / 2, 0.0]])


def _lawson_polish(t, d, phases, sweeps=8):
    """Iteratively reweighted fit pushing the dense-grid error toward minimax."""
    nodes = _fit_nodes(d, mult=8)
    targets = target_value(t, nodes)
    weights = np.ones(len(nodes))
    x = phases
    used = 0
    for _ in range(sweeps):
        x, nfev = _gauss_newton(t, d, x, nodes, weights, max_nfev=200)
        used += nfev
        raw, _ = _residuals(x, nodes, targets)
        m = len(nodes)
        magnitude = np.hypot(raw[:m], raw[m:])
        weights = weights * magnitude
        total = weights.sum()
        if not total > 0:
            break
        weights = weights * (m / total)
    return x, used


_CANONICAL_STALL = "canonical start sits almost on a stationary point"


def solve_phases(
    t: float, d: int, tol: float, rng: RandomSource, restarts: int = 8
) -> PhaseFactorSequence:
    """Find d+1 angles whose P approximates e^{-i t x^2} within tol.

    The search runs cheap-to-expensive stages, certifying every candidate on
    the dense Chebyshev grid and returning as soon as one meets tol:

    1. the symmetric start (pi/4, 0, ..., 0, pi/4), quasi-Newton then a
       Gauss-Newton least-squares refinement on a dense node set;
    2. up to ``restarts`` perturbed starts (+-0.1 rad), same pipeline --- the
       canonical start alone stalls, so these do most of the work at small d;
    3. a degree ladder: solve at degree 2, embed each solution two degrees up
       (which preserves the polynomial exactly), refine, with a few perturbed
       retries per rung;
    4. continuation in time: eight warm-started refinements along k*t/8,
       which tracks deep minima that direct starts miss at large degree;
    5. an iteratively reweighted (minimax) polish of the best candidate.

    Certified sup_error is always the dense-grid maximum, never the node
    objective.  If everything stays above tol the search raises
    PhaseSolverDidNotConverge carrying the best sequence found.
    """
    if d <= 0 or d % 2:
        raise ValueError(f"polynomial degree must be even and positive, got {d}")
    if not tol > 0:
        raise ValueError("tolerance must be positive")

    dense = _fit_nodes(d)
    base = np.zeros(d + 1)
    base[0] = base[-1] = math.pi / 4.0
    state = {"best": None, "eps": np.inf, "iterations": 0}

    def consider(x) -> float:
        phases = reduce_phases(x)
        eps = measured_sup_error(phases, t, d)
        if eps < state["eps"]:
            state["best"], state["eps"] = phases, eps
        return eps

    def refine(x0) -> float:
        x, nfev = _gauss_newton(t, d, x0, dense)
        state["iterations"] += nfev
        return consider(x)

    def done() -> bool:
        return state["eps"] <= tol

    # stage 1 + 2: canonical start, then perturbed restarts
    for attempt in range(restarts + 1):
        start = base
        if attempt:  # see _CANONICAL_STALL
            start = base + rng.child(attempt).generator.uniform(-0.1, 0.1, d + 1)
        x, nit = _lbfgs(t, d, start)
        state["iterations"] += nit
        refine(x)
        if done():
            return _finish(state, t, d, rng)

    # stage 3: degree ladder with perturbed retries per rung
    ladder_rng = rng.child(1000)
    x, nfev = _gauss_newton(t, 2, np.array([math.pi / 4, 0.0, math.pi / 4]), _fit_nodes(2))
    state["iterations"] += nfev
    for rung in range(4, d + 1, 2):
        grown = _embed_degree(x)
        rung_nodes = _fit_nodes(rung)
        best_rung = None
        for k in range(4):
            start = grown
            if k:
                jitter = ladder_rng.child(rung * 8 + k).generator.uniform(
                    -0.1, 0.1, len(grown)
                )
                start = grown + jitter
            cand, nfev = _gauss_newton(t, rung, start, rung_nodes)
            state["iterations"] += nfev
            eps = measured_sup_error(reduce_phases(cand), t, rung)
            if best_rung is None or eps < best_rung[0]:
                best_rung = (eps, cand)
        x = best_rung[1]
    consider(x)
    if done():
        return _finish(state, t, d, rng)

    # stage 4: continuation in time
    steps = 8
    x = None
    for k in range(1, steps + 1):
        tk = t * k / steps
        if x is None:
            x, nit = _lbfgs(tk, d, base)
            state["iterations"] += nit
        nodes = _objective_nodes(d)
        x, nfev = _gauss_newton(tk, d, x, nodes, max_nfev=2000)
        state["iterations"] += nfev
    x, nfev = _gauss_newton(t, d, x, dense)
    state["iterations"] += nfev
    consider(x)
    if done():
        return _finish(state, t, d, rng)

    # stage 5: minimax polish of the best candidate so far
    x, used = _lawson_polish(t, d, state["best"])
    state["iterations"] += used
    consider(x)
    if done():
        return _finish(state, t, d, rng)

    raise PhaseSolverDidNotConverge(
        f"best certified error {state['eps']:.3e} > tol {tol:.3e} (t={t}, d={d})",
        best=_finish(state, t, d, rng),
    )


def _finish(state, t, d, rng) -> PhaseFactorSequence:
    return PhaseFactorSequence(
        phases=state["best"],
        convention=QSP,
        degree=d,
        target_time=float(t),
        sup_error=state["eps"],
        meta={"seed": rng.seed, "iterations": state["iterations"]},
    )


def convert_convention(seq: PhaseFactorSequence, direction: str) -> PhaseFactorSequence:
    """Shift angles between the QSP and CIRCUIT conventions.

    direction is the target convention name.  QSP -> CIRCUIT adds pi/4 to the
    two endpoint angles and pi/2 to every interior angle; the reverse
    subtracts them.  Round-tripping is the identity modulo 2*pi.
    """
    if direction not in (QSP, CIRCUIT):
        raise MalformedSequenceError(f"unknown target convention {direction!r}")
    if seq.convention == direction:
        raise MalformedSequenceError(f"sequence already in convention {direction}")
    n = len(seq.phases)
    offsets = np.full(n, math.pi / 2.0)
    offsets[0] = offsets[-1] = math.pi / 4.0
    if direction == CIRCUIT:
        if seq.degree % 2:
            raise MalformedSequenceError(
                "only even-degree sequences have a circuit form"
            )
        phases = reduce_phases(seq.phases + offsets)
        new_degree = seq.degree // 2
    else:
        phases = reduce_phases(seq.phases - offsets)
        new_degree = 2 * seq.degree
    return PhaseFactorSequence(
        phases=phases,
        convention=direction,
        degree=new_degree,
        target_time=seq.target_time,
        sup_error=seq.sup_error,
        meta=dict(seq.meta),
    )


def concatenate(seq: PhaseFactorSequence, r: int) -> PhaseFactorSequence:
    """Chain a solved sequence r times to target time r*t.

    The joint is the sum of the last and first angles; interior angles repeat
    verbatim.  The certified error is re-measured on the dense grid for the
    longer polynomial (theory bounds it by r^2 times the original error).
    """
    if seq.convention != QSP:
        raise MalformedSequenceError("concatenate expects the QSP convention")
    if r < 1:
        raise ValueError(f"repetition count must be >= 1, got {r}")
    p = seq.phases
    d = seq.degree
    block = np.concatenate(([p[-1] + p[0]], p[1:-1]))
    phases = reduce_phases(np.concatenate([p[:-1], np.tile(block, r - 1), [p[-1]]]))
    new_t = r * seq.target_time
    new_d = r * d
    eps = measured_sup_error(phases, new_t, new_d)
    return PhaseFactorSequence(
        phases=phases,
        convention=QSP,
        degree=new_d,
        target_time=new_t,
        sup_error=eps,
        meta={"concatenated_from": d, "repetitions": r},
    )


# -- file format --------------------------------------------------------------


def _f17(value: float) -> str:
    return format(float(value), ".17g")


def phase_file_text(seq: PhaseFactorSequence) -> str:
    """Serialize with every float printed at 17 significant digits."""
    meta = seq.meta or {}
    solver_meta = json.dumps(
        {"seed": meta.get("seed"), "iterations": meta.get("iterations")}
    )
    phases = ", ".join(_f17(p) for p in seq.phases)
    return (
        "{\n"
        f'  "t": {_f17(seq.target_time)},\n'
        f'  "d": {seq.degree},\n'
        f'  "convention": "{seq.convention}",\n'
        f'  "phases": [{phases}],\n'
        f'  "sup_error": {_f17(seq.sup_error)},\n'
        f'  "solver_meta": {solver_meta}\n'
        "}\n"
    )


def write_phase_file(path, seq: PhaseFactorSequence) -> None:
    with open(path, "w") as fh:
        fh.write(phase_file_text(seq))


def parse_phase_json(obj: dict) -> PhaseFactorSequence:
    return PhaseFactorSequence(
        phases=np.asarray(obj["phases"], dtype=float),
        convention=str(obj["convention"]),
        degree=int(obj["d"]),
        target_time=float(obj["t"]),
        sup_error=float(obj["sup_error"]),
        meta=obj.get("solver_meta") or {},
    )


def read_phase_file(path) -> PhaseFactorSequence:
    with open(path) as fh:
        return parse_phase_json(json.load(fh))


def bundled_phase_sets() -> list[PhaseFactorSequence]:
    """The shipped circuit-convention reference sequences, shortest first.

    Three pre-solved sequences for t = 4.8096 at polynomial degrees 10, 18
    and 26, stored verbatim as published at 8 significant digits; sup_error
    holds the certified dense-grid error of each truncated sequence.
    """
    from importlib import resources

    root = resources.files("hsbench") / "data"
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out.append(parse_phase_json(json.loads(entry.read_text())))
    return sorted(out, key=lambda s: s.degree)
