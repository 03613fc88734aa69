"""Local Causal Discovery over a dataset of context and system variables.

For a context C and system variables X, Y the pattern

    C dependent on X,  X dependent on Y,  C independent of Y given X

implies X is a (possibly indirect) cause of Y, provided X does not cause C.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bftests import (
    DEFAULT_CONDOPT,
    CondOptParams,
    GroupedSample,
    cond_two_sample_test,
    independence_test,
    two_sample_test,
)
from .errors import DegenerateSample, DomainError, EmptyGroup
from .marginal import DEFAULT_ALPHA, DEFAULT_SPEC
from .partition import AlphaRule, PartitionSpec

__all__ = [
    "SCORE_MODES",
    "TIERS",
    "TIER_COLORS",
    "Dataset",
    "LcdScoreParams",
    "TestConfig",
    "LcdTripleResult",
    "CausalGraph",
    "lcd_score",
    "evidence_tier",
    "lcd_scan",
    "graph_emit",
    "to_dot",
]

SCORE_MODES = ("same_threshold", "mirrored", "clamped")
TIERS = ("none", "weak", "substantial", "strong")
TIER_COLORS = {"strong": "black", "substantial": "red", "weak": "blue"}
DEFAULT_BF_THRESHOLDS = {"strong": 10.0, "substantial": 4.0, "weak": 1.0}


@dataclass
class Dataset:
    """Binary context columns and real-valued system columns of equal length."""

    context: dict
    system: dict

    def __post_init__(self):
        self.context = {k: np.asarray(v) for k, v in self.context.items()}
        self.system = {k: np.asarray(v, dtype=float) for k, v in self.system.items()}
        names = list(self.context) + list(self.system)
        if len(set(names)) != len(names):
            raise DomainError("column names must be unique")
        lengths = {v.size for v in self.context.values()} | {v.size for v in self.system.values()}
        if len(lengths) > 1:
            raise DomainError("all columns must have the same length")
        for name, col in self.context.items():
            if not np.all((col == 0) | (col == 1)):
                raise DomainError(f"context column {name!r} must be binary")
            self.context[name] = col.astype(np.int64)

    @property
    def n(self) -> int:
        for col in list(self.context.values()) + list(self.system.values()):
            return col.size
        return 0


@dataclass(frozen=True)
class LcdScoreParams:
    alpha: float = 0.05
    alpha0: float = 0.5
    mode: str = "clamped"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0 or not 0.0 <= self.alpha0 <= 1.0:
            raise DomainError("alpha and alpha0 must lie in [0, 1]")
        if self.mode not in SCORE_MODES:
            raise DomainError(f"mode must be one of {SCORE_MODES}")


@dataclass(frozen=True)
class TestConfig:
    """Prior settings shared by the three tests."""

    __test__ = False

    alpha: AlphaRule = DEFAULT_ALPHA
    spec: PartitionSpec = DEFAULT_SPEC
    condopt: CondOptParams = DEFAULT_CONDOPT
    bf_thresholds: dict = field(default_factory=lambda: dict(DEFAULT_BF_THRESHOLDS))


DEFAULT_TEST_CONFIG = TestConfig()


@dataclass(frozen=True)
class LcdTripleResult:
    context: str
    cause: str
    effect: str
    p_cx: float = math.nan
    p_xy: float = math.nan
    p_cy_given_x: float = math.nan
    log_bf01_cx: float = math.nan
    log_bf01_xy: float = math.nan
    log_bf01_cy_given_x: float = math.nan
    score: int = 0
    evidence_tier: str = "none"
    skipped: str | None = None

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        for k, v in out.items():
            if isinstance(v, float) and math.isnan(v):
                out[k] = None
        return out


@dataclass(frozen=True)
class CausalGraph:
    nodes: tuple
    edges: tuple  # (from, to, tier), sorted


def lcd_score(p_cx: float, p_xy: float, p_cy_given_x: float, params: LcdScoreParams) -> int:
    """1 when both dependences are claimed at level alpha and the conditional
    independence passes the mode's acceptance set, else 0."""
    a = params.alpha
    if not (0.0 <= p_cx <= a and 0.0 <= p_xy <= a):
        return 0
    if params.mode == "same_threshold":
        accept = p_cy_given_x > a
    elif params.mode == "mirrored":
        accept = p_cy_given_x > 1.0 - a
    else:
        accept = p_cy_given_x > params.alpha0 or p_cy_given_x > 1.0 - a
    return int(accept)


def evidence_tier(log_bf01_cx: float, log_bf01_xy: float, log_bf01_cy_given_x: float,
                  thresholds: dict = DEFAULT_BF_THRESHOLDS) -> str:
    """Highest tier whose Bayes factor threshold all three tests meet.

    Dependences need BF10 >= k; the conditional independence needs BF01 >= k.
    """
    best = "none"
    for tier in TIERS[1:]:
        log_k = math.log(thresholds[tier])
        if -log_bf01_cx >= log_k and -log_bf01_xy >= log_k and log_bf01_cy_given_x >= log_k:
            best = tier
    return best


def _evaluate_triple(args):
    ctx_name, cause, effect, c, x, y, params, config = args
    try:
        cx = two_sample_test(GroupedSample(x, c), config.alpha, config.spec, config.condopt.h1_depth)
        xy = independence_test(np.column_stack([x, y]), config.alpha, config.spec)
        cy = cond_two_sample_test(c, y, x, config.condopt, config.alpha, config.spec)
    except (DegenerateSample, EmptyGroup) as exc:
        return LcdTripleResult(ctx_name, cause, effect, skipped=f"{type(exc).__name__}: {exc}")
    return LcdTripleResult(
        ctx_name, cause, effect,
        p_cx=cx.p_h0, p_xy=xy.p_h0, p_cy_given_x=cy.p_h0,
        log_bf01_cx=cx.log_bf01, log_bf01_xy=xy.log_bf01, log_bf01_cy_given_x=cy.log_bf01,
        score=lcd_score(cx.p_h0, xy.p_h0, cy.p_h0, params),
        evidence_tier=evidence_tier(cx.log_bf01, xy.log_bf01, cy.log_bf01, config.bf_thresholds),
    )


def lcd_scan(data: Dataset, params: LcdScoreParams = LcdScoreParams(),
             config: TestConfig = DEFAULT_TEST_CONFIG, workers: int = 1) -> list:
    """Score every ordered triple (context, cause, effect), cause != effect.

    Triples come back sorted by context, cause, effect name. Degenerate
    columns produce a record with ``skipped`` set instead of an exception.
    """
    if not data.context or len(data.system) < 2:
        raise DomainError("LCD needs at least one context and two system columns")
    jobs = []
    for ctx in sorted(data.context):
        for cause in sorted(data.system):
            for effect in sorted(data.system):
                if cause != effect:
                    jobs.append((ctx, cause, effect, data.context[ctx],
                                 data.system[cause], data.system[effect], params, config))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate_triple, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_evaluate_triple(job) for job in jobs]


def graph_emit(results, bf_thresholds: dict = DEFAULT_BF_THRESHOLDS, nodes=None) -> CausalGraph:
    """Fold triple results into a graph; each edge keeps its best tier over contexts."""
    best = {}
    seen_nodes = set(nodes or ())
    for r in results:
        if r.skipped is None and r.cause != r.effect:
            seen_nodes.update((r.cause, r.effect))
            tier = evidence_tier(r.log_bf01_cx, r.log_bf01_xy, r.log_bf01_cy_given_x, bf_thresholds)
            key = (r.cause, r.effect)
            if TIERS.index(tier) > TIERS.index(best.get(key, "none")):
                best[key] = tier
    edges = tuple(sorted((a, b, t) for (a, b), t in best.items() if t != "none"))
    return CausalGraph(nodes=tuple(sorted(seen_nodes)), edges=edges)


def to_dot(graph: CausalGraph, name: str = "lcd") -> str:
    lines = [f"digraph {name} {{"]
    lines.extend(f'  "{node}";' for node in graph.nodes)
    for a, b, tier in graph.edges:
        lines.append(f'  "{a}" -> "{b}" [color={TIER_COLORS[tier]}, tier="{tier}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
