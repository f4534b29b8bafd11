"""Hit-and-Run with an exact line-sampling step.

Each step draws a uniform direction, restricts the d-dimensional potential
to that line (the restriction inherits the curvature sandwich), brackets the
line minimizer by derivative-sign bisection, builds a shifted plateau
envelope around the bracket, and rejection-samples the step size exactly.
All oracle traffic goes through one counter so per-step query costs are
measurable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envelope import Envelope, _first_true_index
from .errors import ClassViolationError, UsageError
from .rejection import sample_exact

_PLATEAU_LEVEL = 3.0  # envelope threshold on the relabeled potential


@dataclass(frozen=True)
class MultivariateResponse:
    value: float
    gradient: np.ndarray | None = None


class MultivariateOracle:
    """Query-counting oracle for a d-dimensional potential.

    One call returns the value and (when available) the gradient, and
    increments the counter by exactly one.  The potential must satisfy
    ``V(0) = 0`` and ``grad V(0) = 0`` with directional curvature in
    ``[1, kappa]`` along every unit direction.
    """

    def __init__(self, value_fn, grad_fn, dimension: int, kappa: float):
        if dimension < 1:
            raise UsageError(f"dimension must be positive, got {dimension}")
        if kappa < 1.0:
            raise UsageError(f"kappa must be at least 1, got {kappa}")
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self.dimension = int(dimension)
        self.kappa = float(kappa)
        self._count = 0
        origin = np.zeros(self.dimension)
        if abs(float(value_fn(origin))) > 1e-9:
            raise UsageError("potential must vanish at the origin")
        if grad_fn is not None and float(np.linalg.norm(grad_fn(origin))) > 1e-9:
            raise UsageError("potential must have zero gradient at the origin")

    @property
    def has_gradient(self) -> bool:
        return self._grad_fn is not None

    @property
    def query_count(self) -> int:
        return self._count

    def query(self, x: np.ndarray) -> MultivariateResponse:
        self._count += 1
        x = np.asarray(x, dtype=float)
        grad = None if self._grad_fn is None else np.asarray(self._grad_fn(x), dtype=float)
        return MultivariateResponse(value=float(self._value_fn(x)), gradient=grad)


def quadratic_oracle(diagonal, kappa: float | None = None) -> MultivariateOracle:
    """Oracle for ``V(x) = x' diag(d) x / 2``; kappa defaults to max(d)/min(d)."""
    diag = np.asarray(diagonal, dtype=float)
    if diag.min() <= 0:
        raise UsageError("diagonal curvatures must be positive")
    kappa = float(diag.max() / diag.min()) if kappa is None else float(kappa)
    return MultivariateOracle(
        value_fn=lambda x: 0.5 * float(x @ (diag * x)),
        grad_fn=lambda x: diag * x,
        dimension=diag.size,
        kappa=kappa,
    )


@dataclass(frozen=True)
class LineRestriction:
    """A line through the current point: base is its closest point to the origin."""

    base: np.ndarray
    direction: np.ndarray
    lambda_of_origin_point: float  # the lambda with x_t = base + lambda * direction


class LineOracle:
    """1D view W(lam) = V(base + lam * u) - shift; one multivariate query per call."""

    def __init__(self, oracle: MultivariateOracle, base, direction, shift: float = 0.0):
        self._oracle = oracle
        self._base = np.asarray(base, dtype=float)
        self._direction = np.asarray(direction, dtype=float)
        self.shift = float(shift)

    @property
    def has_derivative(self) -> bool:
        return self._oracle.has_gradient

    @property
    def query_count(self) -> int:
        return self._oracle.query_count

    def with_shift(self, shift: float) -> "LineOracle":
        return LineOracle(self._oracle, self._base, self._direction, shift=shift)

    def point(self, lam: float) -> np.ndarray:
        return self._base + lam * self._direction

    def query(self, lam: float):
        resp = self._oracle.query(self.point(float(lam)))
        deriv = None
        if resp.gradient is not None:
            deriv = float(self._direction @ resp.gradient)
        return resp.value - self.shift, deriv

    def value(self, lam: float) -> float:
        return self.query(lam)[0]

    def derivative(self, lam: float) -> float:
        v, d = self.query(lam)
        if d is None:
            raise UsageError("line oracle has no gradient access")
        return d


def restrict(oracle: MultivariateOracle, x_t, u) -> tuple[LineRestriction, LineOracle]:
    """Restrict the potential to the line through x_t with unit direction u."""
    x_t = np.asarray(x_t, dtype=float)
    u = np.asarray(u, dtype=float)
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        raise UsageError("direction must be nonzero")
    if abs(norm - 1.0) > 1e-12:
        raise UsageError(f"direction must be a unit vector, |u| = {norm}")
    lam_t = float(u @ x_t)
    base = x_t - lam_t * u
    restriction = LineRestriction(base=base, direction=u, lambda_of_origin_point=lam_t)
    return restriction, LineOracle(oracle, base, u)


def bracket_minimizer(line: LineOracle, kappa: float, x_star_norm: float) -> tuple[float, float]:
    """Bracket of exact width sqrt(2/kappa) around the line minimizer.

    The minimizer satisfies |lambda| <= 2*kappa*|x*| for class members, which
    seeds the bisection interval (padded to stay nonempty when the line runs
    through the origin).  Derivative-sign bisection needs about
    log2(4*kappa*|x*| / sqrt(2/kappa)) queries plus the two endpoint checks;
    a 0th-order ternary fallback covers gradient-free oracles.
    """
    width = math.sqrt(2.0 / kappa)
    radius = 2.0 * kappa * max(float(x_star_norm), width)
    if not line.has_derivative:
        return _bracket_by_ternary(line, radius, width)

    d_lo, d_hi = line.derivative(-radius), line.derivative(radius)
    for _ in range(3):  # doubling fallback for near-class targets
        if d_lo <= 0.0 <= d_hi:
            break
        radius *= 2.0
        d_lo, d_hi = line.derivative(-radius), line.derivative(radius)
    if not (d_lo <= 0.0 <= d_hi):
        raise ClassViolationError(
            "restricted derivative does not change sign on the seeded interval",
            query_point=radius,
        )
    lo, hi = -radius, radius
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        dm = line.derivative(mid)
        if dm < 0.0:
            lo = mid
        elif dm > 0.0:
            hi = mid
        else:
            lo = hi = mid
            break
    a = lo - 0.5 * (width - (hi - lo))
    return a, a + width


def _bracket_by_ternary(line: LineOracle, radius: float, width: float) -> tuple[float, float]:
    """Value-only fallback: each shrink keeps 2/3 of the interval (2 queries)."""
    lo, hi = -radius, radius
    while hi - lo > width:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if line.value(m1) < line.value(m2):
            hi = m2
        else:
            lo = m1
    a = lo - 0.5 * (width - (hi - lo))
    return a, a + width


def build_line_envelope(
    line: LineOracle, a: float, b: float, kappa: float
) -> tuple[Envelope, LineOracle]:
    """Shifted plateau envelope for the restriction, given a minimizer bracket.

    Relabels the potential by ``max(W(a), W(b))`` so the minimum lies in
    [-1, 0], finds the first dyadic offsets past each bracket edge where the
    relabeled value reaches 3, and returns the plateau-e envelope together
    with the relabeled oracle the rejection step must evaluate.
    """
    shift = max(line.value(a), line.value(b))
    shifted = line.with_shift(line.shift + shift)
    root = math.sqrt(kappa)
    top = max(1, math.ceil(0.5 * (math.log2(kappa) + 3.0)))

    i_b = _first_true_index(
        lambda i: shifted.value(b + 2.0**i / root) >= _PLATEAU_LEVEL,
        1,
        top,
        "(right of bracket)",
        verify=lambda i: shifted.value(b + 2.0**i / root) >= _PLATEAU_LEVEL - 1e-9,
    )
    i_a = _first_true_index(
        lambda i: shifted.value(a - 2.0**i / root) >= _PLATEAU_LEVEL,
        1,
        top,
        "(left of bracket)",
        verify=lambda i: shifted.value(a - 2.0**i / root) >= _PLATEAU_LEVEL - 1e-9,
    )
    x_b = b + 2.0**i_b / root
    x_a = a - 2.0**i_a / root
    env = Envelope.from_geometry(
        x_minus=x_a,
        x_plus=x_b,
        drift_minus=_PLATEAU_LEVEL / (b - x_a),
        drift_plus=_PLATEAU_LEVEL / (x_b - a),
        plateau_height=math.e,
        tail_offset=_PLATEAU_LEVEL,
    )
    return env, shifted


@dataclass(frozen=True)
class ChainState:
    position: np.ndarray
    step_index: int = 0
    cumulative_queries: int = 0


@dataclass(frozen=True)
class ChainResult:
    positions: np.ndarray  # (steps + 1, d)
    step_queries: np.ndarray  # (steps,)

    @property
    def mean_queries_per_step(self) -> float:
        return float(self.step_queries.mean()) if self.step_queries.size else 0.0


def step(
    oracle: MultivariateOracle,
    state: ChainState,
    rng: np.random.Generator,
    direction=None,
) -> ChainState:
    """One Hit-and-Run transition with an exact step-size draw.

    The step size comes from the density proportional to the target
    restricted to the chosen line, sampled by rejection against the line
    envelope, so the transition kernel is exact.  ``direction`` overrides
    the uniform draw (used by diagnostics).
    """
    if direction is None:
        g = rng.standard_normal(oracle.dimension)
        while float(np.linalg.norm(g)) < 1e-12:
            g = rng.standard_normal(oracle.dimension)
        u = g / np.linalg.norm(g)
    else:
        u = np.asarray(direction, dtype=float)
    before = oracle.query_count
    restriction, line = restrict(oracle, state.position, u)
    x_star_norm = float(np.linalg.norm(restriction.base))
    a, b = bracket_minimizer(line, oracle.kappa, x_star_norm)
    env, shifted = build_line_envelope(line, a, b, oracle.kappa)
    lam = sample_exact(shifted, env, rng).result
    return ChainState(
        position=restriction.base + lam * restriction.direction,
        step_index=state.step_index + 1,
        cumulative_queries=state.cumulative_queries + (oracle.query_count - before),
    )


def run_chain(
    oracle: MultivariateOracle,
    x0,
    steps: int,
    rng: np.random.Generator,
) -> ChainResult:
    """Run the chain and record the trajectory and per-step query counts."""
    if steps < 0:
        raise UsageError("steps must be nonnegative")
    state = ChainState(position=np.asarray(x0, dtype=float))
    positions = np.empty((steps + 1, oracle.dimension))
    positions[0] = state.position
    step_queries = np.empty(steps, dtype=int)
    for t in range(steps):
        prev = state.cumulative_queries
        state = step(oracle, state, rng)
        positions[t + 1] = state.position
        step_queries[t] = state.cumulative_queries - prev
    return ChainResult(positions=positions, step_queries=step_queries)
