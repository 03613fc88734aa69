"""Bayes factor tests built on Polya tree marginal likelihoods.

All tests report ``ln BF01`` (evidence for the null) together with the
posterior null probability under equal prior odds. Component log marginal
likelihoods are kept in ``diagnostics``: keys starting with ``h0_`` enter
with a plus sign, keys starting with ``h1_`` with a minus sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateSample, DomainError, EmptyGroup
from .marginal import DEFAULT_ALPHA, DEFAULT_SPEC, log_ml_1d, log_ml_2d
from .partition import AlphaRule, DepthRule, PartitionSpec, cell_index, standardize
from .special import posterior_null_probability

__all__ = [
    "TestResult",
    "GroupedSample",
    "CondOptParams",
    "two_sample_test",
    "independence_test",
    "phi_condopt",
    "cond_two_sample_test",
]

TEST_KINDS = ("two_sample", "independence", "cond_two_sample")
H1_DEPTH_CHOICES = ("group", "pooled")


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    log_bf01: float
    p_h0: float
    test_kind: str
    n: int
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def from_components(cls, kind: str, n: int, h0: dict, h1: dict) -> "TestResult":
        log_bf01 = combine_components(h0, h1)
        diagnostics = {f"h0_{k}": float(v) for k, v in h0.items()}
        diagnostics.update({f"h1_{k}": float(v) for k, v in h1.items()})
        return cls(float(log_bf01), float(posterior_null_probability(log_bf01)), kind, n, diagnostics)

    def to_dict(self) -> dict:
        return {
            "test": self.test_kind,
            "n": self.n,
            "log_bf01": self.log_bf01,
            "p_h0": self.p_h0,
            "diagnostics": dict(self.diagnostics),
        }


def combine_components(h0: dict, h1: dict) -> float:
    """``sum(h0) - sum(h1)`` in insertion order; the recombination rule."""
    total0 = 0.0
    for v in h0.values():
        total0 += v
    total1 = 0.0
    for v in h1.values():
        total1 += v
    return total0 - total1


@dataclass
class GroupedSample:
    """Continuous values ``x`` labelled by a binary group ``c``."""

    x: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.c = _as_labels(self.c)
        if self.x.size != self.c.size:
            raise DomainError("x and c must have the same length")


def _as_labels(c) -> np.ndarray:
    c = np.asarray(c).ravel()
    if c.size and not np.all((c == 0) | (c == 1)):
        raise DomainError("group labels must be 0 or 1")
    return c.astype(bool)


def _check_groups(c: np.ndarray):
    n1 = int(c.sum())
    if n1 == 0 or n1 == c.size:
        raise EmptyGroup("both groups need at least one observation")


def _check_depth_choice(h1_depth: str):
    if h1_depth not in H1_DEPTH_CHOICES:
        raise DomainError(f"h1_depth must be one of {H1_DEPTH_CHOICES}")


def two_sample_test(
    sample: GroupedSample,
    alpha: AlphaRule = DEFAULT_ALPHA,
    spec: PartitionSpec = DEFAULT_SPEC,
    h1_depth: str = "pooled",
) -> TestResult:
    """Two-sample test: H0 says both groups share one distribution.

    The pooled sample is standardised once and then split, so group-level
    differences in location and scale survive. With ``h1_depth="pooled"``
    every tree truncates at the pooled depth and the result is the per-node
    Bayes factor product; ``"group"`` truncates each group at its own size.
    Likelihoods are densities relative to the base measure so the two
    choices stay comparable.
    """
    _check_depth_choice(h1_depth)
    _check_groups(sample.c)
    x = standardize(sample.x)
    n = x.size
    x0, x1 = x[~sample.c], x[sample.c]
    pooled_depth = spec.depth(n)

    def group_term(g):
        return log_ml_1d(g, alpha, spec, True, pooled_depth if h1_depth == "pooled" else None)

    h0 = {"log_ml_pooled": log_ml_1d(x, alpha, spec, True)}
    h1 = {"log_ml_group0": group_term(x0), "log_ml_group1": group_term(x1)}
    return TestResult.from_components("two_sample", n, h0, h1)


def independence_test(
    pairs,
    alpha: AlphaRule = DEFAULT_ALPHA,
    spec: PartitionSpec = DEFAULT_SPEC,
) -> TestResult:
    """Independence test of two continuous variables.

    H0 uses independent marginal trees with doubled parameters, H1 the joint
    quadrant tree. Each coordinate is standardised separately.
    """
    p = np.asarray(pairs, dtype=float).reshape(-1, 2)
    n = p.shape[0]
    if n < 2:
        raise DegenerateSample("independence test needs at least two pairs")
    z = np.column_stack([standardize(p[:, 0]), standardize(p[:, 1])])
    marginal = alpha.scaled(2.0)
    h0 = {
        "log_ml_x": log_ml_1d(z[:, 0], marginal, spec, True),
        "log_ml_y": log_ml_1d(z[:, 1], marginal, spec, True),
    }
    h1 = {"log_ml_joint": log_ml_2d(z, alpha, spec, True)}
    return TestResult.from_components("independence", n, h0, h1)


@dataclass(frozen=True)
class CondOptParams:
    """Settings of the conditional optional Polya tree.

    ``z_depth_rule`` and ``local_depth_rule`` default to the PartitionSpec's
    rule. ``h1_depth="pooled"`` truncates the predictor partition and every
    local tree of all three terms at depths set by the pooled sample size;
    ``"group"`` uses the size of the sample being scored for the predictor
    partition and the cell's own size for each local tree.
    """

    stop_probability: float = 0.5
    z_depth_rule: DepthRule | None = None
    local_depth_rule: DepthRule | None = None
    h1_depth: str = "pooled"

    def __post_init__(self):
        if not 0.0 < self.stop_probability <= 1.0:
            raise DomainError("stop probability must lie in (0, 1]")
        if self.h1_depth not in H1_DEPTH_CHOICES:
            raise DomainError(f"h1_depth must be one of {H1_DEPTH_CHOICES}")

    def z_spec(self, spec: PartitionSpec) -> PartitionSpec:
        return spec if self.z_depth_rule is None else spec.with_depth_rule(self.z_depth_rule)

    def local_spec(self, spec: PartitionSpec) -> PartitionSpec:
        return spec if self.local_depth_rule is None else spec.with_depth_rule(self.local_depth_rule)


DEFAULT_CONDOPT = CondOptParams()


def phi_condopt(
    xz_pairs,
    params: CondOptParams = DEFAULT_CONDOPT,
    spec: PartitionSpec = DEFAULT_SPEC,
    alpha: AlphaRule = DEFAULT_ALPHA,
    depth_n: int | None = None,
    density: bool = False,
) -> float:
    """``ln Phi_X(Z)``: log marginal likelihood of (x, z) pairs under the
    conditional optional Polya tree, x given z.

    The predictor partition stops with probability ``stop_probability`` at
    every cell holding two or more points above the depth limit, and each
    stopped cell scores its x-values with a local Polya tree. By default the
    predictor depth comes from the sample size and each local tree's depth
    from its cell size; ``depth_n`` fixes both from one size instead.
    ``density`` selects density-scaled local likelihoods (see
    :func:`polyatest.marginal.log_ml_1d`). Inputs are used as given.
    """
    p = np.asarray(xz_pairs, dtype=float)
    if p.size == 0:
        return 0.0
    p = p.reshape(-1, 2)
    n = p.shape[0]
    z_depth = params.z_spec(spec).depth(n if depth_n is None else depth_n)
    local = params.local_spec(spec)
    if depth_n is None:
        local_depths = np.array([local.depth(m) for m in range(n + 1)], dtype=np.int_)
    else:
        local_depths = np.full(n + 1, local.depth(depth_n), dtype=np.int_)
    alpha_levels = alpha.levels(int(local_depths.max()))
    return kernels.condopt_idx(
        cell_index(p[:, 0], spec),
        cell_index(p[:, 1], spec),
        z_depth,
        local_depths,
        alpha_levels,
        params.stop_probability,
        density,
    )


def cond_two_sample_test(
    c,
    x,
    z,
    params: CondOptParams = DEFAULT_CONDOPT,
    alpha: AlphaRule = DEFAULT_ALPHA,
    spec: PartitionSpec = DEFAULT_SPEC,
) -> TestResult:
    """Conditional two-sample test of ``C _||_ X | Z`` for binary ``C``.

    x and z are standardised on the pooled sample before splitting by c.
    With ``rho = 1`` or a zero predictor depth this is the two-sample test
    on ``(c, x)`` under the same ``h1_depth``.
    """
    c = _as_labels(c)
    x = np.asarray(x, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    if not (c.size == x.size == z.size):
        raise DomainError("c, x and z must have the same length")
    _check_groups(c)
    xs, zs = standardize(x), standardize(z)
    n = xs.size
    pairs = np.column_stack([xs, zs])

    depth_n = n if params.h1_depth == "pooled" else None

    def term(mask):
        return phi_condopt(pairs[mask], params, spec, alpha, depth_n, density=True)

    h0 = {"log_phi_pooled": term(np.ones(n, dtype=bool))}
    h1 = {"log_phi_group0": term(~c), "log_phi_group1": term(c)}
    return TestResult.from_components("cond_two_sample", n, h0, h1)
