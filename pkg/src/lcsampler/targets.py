"""Builtin targets for benchmarks, demos, and the command line.

Three families, chosen to cover both extremes of the class:

* ``gaussian`` - the pure quadratic ``V(x) = x^2/2`` (flattest member; its
  envelope threshold sits at the top of the dyadic search grid).
* ``skewed`` - an asymmetric piecewise quadratic whose curvature alternates
  between 1 and kappa in narrow bands at distinct distances on each side of
  the mode.
* ``hard:i`` - member i of the dyadic-block worst-case family (sharply
  peaked; thresholds sit at small, kappa-independent indices).
"""
from __future__ import annotations

import math

import numpy as np

from . import hardfamily
from .errors import UsageError
from .hitandrun import MultivariateOracle, quadratic_oracle
from .oracles import PiecewiseQuadraticPotential, PotentialOracle, potential_from_json

BUILTIN_NAMES = ("gaussian", "skewed")


def gaussian_potential() -> PiecewiseQuadraticPotential:
    return PiecewiseQuadraticPotential.gaussian(1.0)


def skewed_potential(kappa: float) -> PiecewiseQuadraticPotential:
    """Asymmetric class member with alternating unit / kappa curvature bands.

    The right-hand bands start at x = 1 and the left-hand bands at x =
    -0.75, each of width 1/sqrt(kappa), so the density is genuinely skewed
    while staying inside the curvature sandwich.
    """
    w = 1.0 / math.sqrt(kappa)
    right_edge, left_edge = 1.0, -0.75
    breakpoints = [
        left_edge - 2 * w,
        left_edge - w,
        left_edge,
        right_edge,
        right_edge + w,
        right_edge + 2 * w,
        right_edge + 3 * w,
    ]
    curvatures = [kappa, 1.0, kappa, 1.0, kappa, 1.0, kappa, 1.0]
    return PiecewiseQuadraticPotential(breakpoints, curvatures)


def builtin_potential(name: str, kappa: float) -> PiecewiseQuadraticPotential:
    if name == "gaussian":
        return gaussian_potential()
    if name == "skewed":
        return skewed_potential(kappa)
    if name.startswith("hard:"):
        try:
            index = int(name.split(":", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad hard-family target {name!r}") from exc
        return hardfamily.build_member(kappa, index)
    raise UsageError(
        f"unknown builtin target {name!r}; expected one of {BUILTIN_NAMES} or 'hard:i'"
    )


def resolve_target(
    spec: str,
    kappa: float,
    hidden_offset: float = 0.0,
) -> tuple[PiecewiseQuadraticPotential, PotentialOracle]:
    """Map a target name or JSON document/path to (potential, oracle).

    Builtin names are declared with alpha = 1 and beta = kappa; JSON
    documents carry their own alpha/beta/offset fields.
    """
    if spec in BUILTIN_NAMES or spec.startswith("hard:"):
        potential = builtin_potential(spec, kappa)
        oracle = PotentialOracle(
            potential, alpha=1.0, beta=kappa, hidden_offset=hidden_offset
        )
        return potential, oracle
    import json

    text = spec
    if not text.lstrip().startswith("{"):
        with open(text, "r", encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    potential, alpha, beta, offset = potential_from_json(doc)
    oracle = PotentialOracle(potential, alpha=alpha, beta=beta, hidden_offset=offset)
    return potential, oracle


def resolve_multivariate_target(spec: str, kappa: float, dimension: int = 10) -> MultivariateOracle:
    """Builtin 'gaussian' (isotropic quadratic) or a JSON document with 'dimension'."""
    if spec == "gaussian":
        return quadratic_oracle(np.ones(dimension), kappa=kappa)
    import json

    text = spec
    if not text.lstrip().startswith("{"):
        with open(text, "r", encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    d = int(doc.get("dimension", dimension))
    if doc.get("type") == "gaussian":
        alpha = float(doc.get("alpha", 1.0))
        beta = float(doc.get("beta", kappa))
        return quadratic_oracle(alpha * np.ones(d), kappa=beta / alpha)
    if doc.get("type") == "diagonal":
        diag = np.asarray(doc["curvatures"], dtype=float)
        return quadratic_oracle(diag)
    raise UsageError(f"unsupported multivariate target type {doc.get('type')!r}")
