"""Potentials and the query-counting oracle model.

A target density is ``p(x) proportional to exp(-V(x))`` with ``alpha <= V''
<= beta`` everywhere and the mode at the origin (``V'(0) = 0``).  Algorithms
never see ``V`` directly; they see a :class:`PotentialOracle` that answers
pointwise value/derivative/second-derivative queries, with the value shifted
by a hidden constant, and that counts every call.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import erfc, erfcx

from .errors import ClassViolationError, UsageError

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class OracleResponse:
    """Answers for one query; orders that were not requested are None."""

    value: float | None = None
    derivative: float | None = None
    second_derivative: float | None = None


@dataclass
class OracleTranscript:
    """Record of (query point, returned triple) pairs, in query order."""

    entries: list = field(default_factory=list)

    def append(self, x: float, response: OracleResponse) -> None:
        self.entries.append(
            (x, (response.value, response.derivative, response.second_derivative))
        )

    def __len__(self) -> int:
        return len(self.entries)


class PiecewiseQuadraticPotential:
    """A C^1 potential whose second derivative is piecewise constant.

    ``breakpoints`` is a strictly increasing list of reals and ``curvatures``
    has one entry per segment, including the two unbounded end segments, so
    ``len(curvatures) == len(breakpoints) + 1``.  The potential is anchored
    by its value and slope at x = 0.

    Value/slope pairs at every breakpoint are computed once at construction
    by exact rational integration of the curvature steps.  This avoids
    accumulation error at evaluation time and guarantees that two potentials
    built from the same curvature profile on a region evaluate bitwise
    identically there, no matter how their segment lists subdivide it.
    """

    def __init__(
        self,
        breakpoints: Sequence,
        curvatures: Sequence[float],
        value_at_zero: float = 0.0,
        slope_at_zero: float = 0.0,
    ):
        # Fractions are accepted as breakpoints so callers with an exact grid
        # (e.g. dyadic points divided by an irrational scale) keep widths that
        # cancel exactly during anchor integration.
        exact_bp = [b if isinstance(b, Fraction) else Fraction(float(b)) for b in breakpoints]
        bp = [float(b) for b in exact_bp]
        cv = [float(c) for c in curvatures]
        if len(cv) != len(bp) + 1:
            raise UsageError(
                f"need one curvature per segment: {len(bp)} breakpoints require "
                f"{len(bp) + 1} curvatures, got {len(cv)}"
            )
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise UsageError("breakpoints must be strictly increasing")

        self._bp = np.asarray(bp, dtype=float)
        self._bp_exact = exact_bp
        self._curv = np.asarray(cv, dtype=float)
        self.value_at_zero = float(value_at_zero)
        self.slope_at_zero = float(slope_at_zero)
        self._anchor_v, self._anchor_d = self._integrate_anchors()
        self._mass_cache = None

    def _integrate_anchors(self):
        """Exact (value, slope) at each breakpoint from the zero anchor."""
        n = len(self._bp)
        av = [Fraction(0)] * n
        ad = [Fraction(0)] * n
        if n:
            j0 = bisect_right(self._bp.tolist(), 0.0)
            fr_bp = self._bp_exact
            fr_cv = [Fraction(c) for c in self._curv.tolist()]
            # rightward from 0 through segments j0, j0+1, ...
            x, v, d = Fraction(0), Fraction(self.value_at_zero), Fraction(self.slope_at_zero)
            for k in range(j0, n):
                c = fr_cv[k]
                w = fr_bp[k] - x
                v, d = v + d * w + c * w * w / 2, d + c * w
                av[k], ad[k] = v, d
                x = fr_bp[k]
            # leftward from 0 through segments j0, j0-1, ...
            x, v, d = Fraction(0), Fraction(self.value_at_zero), Fraction(self.slope_at_zero)
            for k in range(j0 - 1, -1, -1):
                c = fr_cv[k + 1]
                w = fr_bp[k] - x
                v, d = v + d * w + c * w * w / 2, d + c * w
                av[k], ad[k] = v, d
                x = fr_bp[k]
        return (
            np.asarray([float(v) for v in av]),
            np.asarray([float(d) for d in ad]),
        )

    @classmethod
    def gaussian(cls, curvature: float = 1.0, value_at_zero: float = 0.0):
        """Pure quadratic ``V(x) = curvature * x^2 / 2`` (no breakpoints)."""
        return cls([], [curvature], value_at_zero=value_at_zero)

    @property
    def breakpoints(self) -> np.ndarray:
        return self._bp

    @property
    def curvatures(self) -> np.ndarray:
        return self._curv

    def evaluate(self, x):
        """Return (value, derivative, second derivative) at ``x``.

        Accepts scalars or arrays.  A point exactly at a breakpoint uses the
        right segment's curvature; value and slope are continuous so only the
        second derivative depends on that convention.

        Each segment is expanded around its edge closest to the origin (the
        mode), and the segment containing the origin around the origin
        itself.  Besides keeping lever arms short where precision matters,
        this makes two potentials that share a curvature profile between the
        origin and a point evaluate bitwise identically there, regardless of
        how the rest of their segments differ.
        """
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        xs = np.atleast_1d(arr)
        if len(self._bp) == 0:
            c = self._curv[0]
            v = self.value_at_zero + self.slope_at_zero * xs + 0.5 * c * xs * xs
            d = self.slope_at_zero + c * xs
            s = np.full_like(xs, c)
        else:
            j = np.searchsorted(self._bp, xs, side="right")
            j0 = int(np.searchsorted(self._bp, 0.0, side="right"))
            a = np.where(j > j0, j - 1, np.minimum(j, len(self._bp) - 1))
            at_origin = j == j0
            anchor_x = np.where(at_origin, 0.0, self._bp[a])
            anchor_v = np.where(at_origin, self.value_at_zero, self._anchor_v[a])
            anchor_d = np.where(at_origin, self.slope_at_zero, self._anchor_d[a])
            delta = xs - anchor_x
            s = self._curv[j]
            v = anchor_v + anchor_d * delta + 0.5 * s * delta * delta
            d = anchor_d + s * delta
        if scalar:
            return float(v[0]), float(d[0]), float(s[0])
        return v, d, s

    def value(self, x):
        return self.evaluate(x)[0]

    # -- density helpers (test-harness path; never query-metered) ----------

    def _segment_table(self):
        """Per-segment (lo, hi, mu, vmin, c) for exp(-V) in completed-square form."""
        if len(self._bp) == 0:
            c = self._curv[0]
            mu = -self.slope_at_zero / c
            vmin = self.value_at_zero - self.slope_at_zero**2 / (2 * c)
            return [(-math.inf, math.inf, mu, vmin, c)]
        rows = []
        edges = [-math.inf, *self._bp.tolist(), math.inf]
        j0 = bisect_right(self._bp.tolist(), 0.0)
        for j in range(len(self._curv)):
            if j == j0:
                x0, v0, d0 = 0.0, self.value_at_zero, self.slope_at_zero
            else:
                a = j - 1 if j > j0 else j
                x0, v0, d0 = self._bp[a], self._anchor_v[a], self._anchor_d[a]
            c = self._curv[j]
            if c <= 0:
                raise UsageError("density helpers require strictly convex segments")
            mu = x0 - d0 / c
            vmin = v0 - d0 * d0 / (2 * c)
            rows.append((edges[j], edges[j + 1], mu, vmin, c))
        return rows

    @staticmethod
    def _gauss_mass(lo, hi, mu, vmin, c):
        """``int_lo^hi exp(-vmin - c*(x-mu)^2/2) dx`` without cancellation.

        Segments entirely on one side of the summit are evaluated through
        the scaled complementary error function with the potential value at
        the near edge in the exponent, so deep-tail segments underflow to
        zero instead of overflowing.
        """
        r = math.sqrt(c)
        pref = math.sqrt(2.0 * math.pi / c)
        z1 = (lo - mu) * r if math.isfinite(lo) else -math.inf
        z2 = (hi - mu) * r if math.isfinite(hi) else math.inf

        def tail_term(z):
            # erfcx(z/sqrt(2)) * exp(-vmin - z^2/2); exponent is -V(edge)
            if math.isinf(z):
                return 0.0
            expo = -vmin - 0.5 * z * z
            if expo < -745.0:
                return 0.0
            return float(erfcx(z / _SQRT2)) * math.exp(expo)

        if z1 >= 0:
            return 0.5 * pref * (tail_term(z1) - tail_term(z2))
        if z2 <= 0:
            return 0.5 * pref * (tail_term(-z2) - tail_term(-z1))
        phi_diff = 0.5 * (erfc(z1 / _SQRT2) - erfc(z2 / _SQRT2))
        return math.exp(-vmin) * pref * float(phi_diff)

    def density_mass(self) -> float:
        """``int exp(-V)`` in closed form (per-segment Gaussian integrals)."""
        if self._mass_cache is None:
            rows = self._segment_table()
            masses = [self._gauss_mass(*((lo, hi, mu, vmin, c))) for lo, hi, mu, vmin, c in rows]
            self._mass_cache = (np.asarray(masses), float(np.sum(masses)))
        return self._mass_cache[1]

    def density_cdf(self, x):
        """CDF of the normalized density exp(-V)/Z, exact per segment."""
        self.density_mass()
        seg_masses, total = self._mass_cache
        cum = np.concatenate([[0.0], np.cumsum(seg_masses)])
        rows = self._segment_table()
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        xs = np.atleast_1d(arr)
        out = np.empty_like(xs)
        j = (
            np.searchsorted(self._bp, xs, side="right")
            if len(self._bp)
            else np.zeros(xs.shape, dtype=int)
        )
        for k, xv in enumerate(xs):
            lo, hi, mu, vmin, c = rows[j[k]]
            out[k] = (cum[j[k]] + self._gauss_mass(lo, min(xv, hi), mu, vmin, c)) / total
        return float(out[0]) if scalar else out

    def __repr__(self):
        return (
            f"PiecewiseQuadraticPotential({len(self._bp)} breakpoints, "
            f"curvatures in [{self._curv.min():g}, {self._curv.max():g}])"
        )


def evaluate_piecewise(potential: PiecewiseQuadraticPotential, x):
    """Exact (value, derivative, second derivative) of a piecewise quadratic."""
    return potential.evaluate(x)


def check_class_member(potential, alpha: float, beta: float, grid=None) -> None:
    """Raise ClassViolationError unless alpha <= V'' <= beta and V'(0) = 0."""
    if alpha <= 0 or beta < alpha:
        raise UsageError("need 0 < alpha <= beta")
    if isinstance(potential, PiecewiseQuadraticPotential):
        curv = potential.curvatures
        if curv.min() < alpha - 1e-12 or curv.max() > beta + 1e-12:
            raise ClassViolationError(
                f"curvature range [{curv.min():g}, {curv.max():g}] escapes "
                f"[{alpha:g}, {beta:g}]"
            )
        slope0 = potential.evaluate(0.0)[1]
    else:
        xs = np.linspace(-5.0, 5.0, 201) if grid is None else np.asarray(grid)
        for xv in xs:
            s = potential.evaluate(float(xv))[2]
            if not (alpha - 1e-9 <= s <= beta + 1e-9):
                raise ClassViolationError(f"V''({xv}) = {s} outside [{alpha}, {beta}]", xv)
        slope0 = potential.evaluate(0.0)[1]
    if abs(slope0) > 1e-9:
        raise ClassViolationError(f"mode not at the origin: V'(0) = {slope0}")


class PotentialOracle:
    """Query-counting oracle for a 1D potential.

    Order 0 answers ``V(x) + C`` for a hidden constant ``C``; orders 1 and 2
    answer the exact derivative and second derivative.  Every call increments
    the counter by exactly one, no matter how many orders it requests.
    Instances are immutable apart from the counter; use one oracle per
    sampling run.
    """

    is_normalized = False

    def __init__(
        self,
        potential,
        alpha: float = 1.0,
        beta: float = 1.0,
        orders: Sequence[int] = (0, 1, 2),
        hidden_offset: float = 0.0,
        record_transcript: bool = False,
    ):
        if alpha <= 0 or beta < alpha:
            raise UsageError(f"need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")
        self.potential = potential
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.orders_available = frozenset(int(o) for o in orders)
        if not self.orders_available <= {0, 1, 2}:
            raise UsageError(f"orders must be a subset of {{0,1,2}}, got {orders}")
        self.hidden_offset = float(hidden_offset)
        self._count = 0
        self.transcript = OracleTranscript() if record_transcript else None

    @property
    def kappa(self) -> float:
        return self.beta / self.alpha

    @property
    def query_count(self) -> int:
        return self._count

    def query(self, x: float, orders=None) -> OracleResponse:
        requested = self.orders_available if orders is None else frozenset(orders)
        if not requested:
            raise UsageError("must request at least one order")
        if not requested <= self.orders_available:
            raise UsageError(
                f"orders {sorted(requested - self.orders_available)} not available "
                f"(oracle offers {sorted(self.orders_available)})"
            )
        self._count += 1
        v, d, s = self.potential.evaluate(float(x))
        resp = OracleResponse(
            value=v + self.hidden_offset if 0 in requested else None,
            derivative=d if 1 in requested else None,
            second_derivative=s if 2 in requested else None,
        )
        if self.transcript is not None:
            self.transcript.append(float(x), resp)
        return resp

    def value(self, x: float) -> float:
        """0th-order query shorthand (one counter increment)."""
        return self.query(x, orders={0}).value


class _WrappedOracle:
    """Base for oracle views; delegates the counter to the root oracle."""

    is_normalized = False

    def __init__(self, inner):
        self._inner = inner

    @property
    def query_count(self) -> int:
        return self._inner.query_count

    @property
    def kappa(self) -> float:
        return self.beta / self.alpha

    def value(self, x: float) -> float:
        return self.query(x, orders={0}).value


class _NormalizedOracle(_WrappedOracle):
    is_normalized = True

    def __init__(self, inner, value_at_origin: float):
        super().__init__(inner)
        self.alpha = inner.alpha
        self.beta = inner.beta
        self.orders_available = inner.orders_available
        self._v0 = value_at_origin

    def query(self, x, orders=None):
        resp = self._inner.query(x, orders)
        if resp.value is None:
            return resp
        return OracleResponse(resp.value - self._v0, resp.derivative, resp.second_derivative)


class _RescaledOracle(_WrappedOracle):
    """View answering V(x / sqrt(alpha)); unit strong convexity by design."""

    def __init__(self, inner):
        super().__init__(inner)
        self.scale = math.sqrt(inner.alpha)
        self.alpha = 1.0
        self.beta = inner.beta / inner.alpha
        self.orders_available = inner.orders_available
        self.is_normalized = inner.is_normalized

    def query(self, x, orders=None):
        resp = self._inner.query(float(x) / self.scale, orders)
        return OracleResponse(
            resp.value,
            None if resp.derivative is None else resp.derivative / self.scale,
            None
            if resp.second_derivative is None
            else resp.second_derivative / self._inner.alpha,
        )

    def map_sample_back(self, x_bar: float) -> float:
        """Convert a draw from the rescaled target into one from the original."""
        return x_bar / self.scale


def normalize_at_zero(oracle):
    """Oracle view answering V(x) - V(0); cancels the hidden offset.

    Consumes exactly one query up front (the evaluation at 0), then one per
    subsequent call.
    """
    if 0 not in oracle.orders_available:
        raise UsageError("normalization needs 0th-order access")
    v0 = oracle.query(0.0, orders={0}).value
    return _NormalizedOracle(oracle, v0)


def rescale_to_unit(oracle):
    """Oracle view with alpha = 1, beta = kappa; samples map back via x / sqrt(alpha)."""
    return _RescaledOracle(oracle)


# -- JSON target documents ------------------------------------------------


def potential_from_json(doc: dict):
    """Build (potential, alpha, beta, offset) from a JSON document.

    Schema: ``{"type": "gaussian"|"piecewise", "alpha": float, "beta": float,
    "breakpoints": [...], "curvatures": [...], "offset": float}``.
    """
    kind = doc.get("type")
    alpha = float(doc.get("alpha", 1.0))
    beta = float(doc.get("beta", alpha))
    offset = float(doc.get("offset", 0.0))
    if kind == "gaussian":
        potential = PiecewiseQuadraticPotential.gaussian(alpha)
    elif kind == "piecewise":
        potential = PiecewiseQuadraticPotential(
            doc.get("breakpoints", []), doc["curvatures"]
        )
    else:
        raise UsageError(f"unknown potential type {kind!r}")
    return potential, alpha, beta, offset


def oracle_from_json(source, record_transcript: bool = False) -> PotentialOracle:
    """Load a potential document (dict, JSON string, or path) into an oracle."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            with open(text, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
    potential, alpha, beta, offset = potential_from_json(doc)
    return PotentialOracle(
        potential,
        alpha=alpha,
        beta=beta,
        hidden_offset=offset,
        record_transcript=record_transcript,
    )
