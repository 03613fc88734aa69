"""ROC/AUC evaluation of the tests on simulated rounds, the prior
sensitivity sweep and runtime measurement."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bftests import GroupedSample, cond_two_sample_test, independence_test, two_sample_test
from .errors import DegenerateSample, DomainError, EmptyGroup, InsufficientLabels
from .lcd import DEFAULT_TEST_CONFIG, LcdScoreParams, TestConfig
from .partition import STANDARD_ALPHA_RULES, AlphaRule
from .simgen import MenuConfig, SimRound, draw_round, round_seed

__all__ = [
    "TEST_CASES",
    "RocCurve",
    "AucSummary",
    "SimConfig",
    "SensitivitySpec",
    "RuntimeRecord",
    "RoundScores",
    "roc_single",
    "roc_lcd",
    "auc",
    "score_round",
    "score_rounds",
    "generate_rounds",
    "curves",
    "auc_summaries",
    "run_experiment",
    "sensitivity_sweep",
    "runtime_profile",
]

TEST_CASES = ("cx", "xy", "cy_given_x", "lcd")


@dataclass
class RocCurve:
    """``points`` rows are ``(fpr, tpr, alpha)`` sorted by alpha."""

    points: np.ndarray
    mode: str = "single"

    @property
    def fpr(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def tpr(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def alpha(self) -> np.ndarray:
        return self.points[:, 2]


@dataclass(frozen=True)
class AucSummary:
    test_case: str
    n: int
    rounds: int
    auc: float
    median: bool = False


@dataclass(frozen=True)
class SimConfig:
    n: int = 400
    rounds: int = 2000
    seed: int = 0
    menu: MenuConfig = field(default_factory=MenuConfig)


@dataclass(frozen=True)
class SensitivitySpec:
    rules: tuple = STANDARD_ALPHA_RULES


@dataclass(frozen=True)
class RuntimeRecord:
    test_kind: str
    n: int
    durations: tuple

    @property
    def median(self) -> float:
        return float(np.median(self.durations))

    @property
    def total(self) -> float:
        return float(np.sum(self.durations))


@dataclass(frozen=True)
class RoundScores:
    """Posterior null probabilities of the three tests on one round."""

    p_cx: float
    p_xy: float
    p_cy_given_x: float
    dep_cx: bool
    dep_xy: bool
    dep_cy_given_x: bool
    lcd_positive: bool
    seed: int
    skipped: str | None = None


def _labels(scores, labels):
    p = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if p.shape != y.shape:
        raise DomainError("scores and labels differ in length")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise InsufficientLabels("need at least one positive and one negative label")
    return p, y, n_pos, y.size - n_pos


def roc_single(scores, direction: str = "dependence") -> RocCurve:
    """ROC of one test from ``(p_h0, positive)`` pairs.

    With ``direction="dependence"`` a positive is claimed when
    ``p_h0 <= alpha``; with ``"independence"`` when ``p_h0 >= 1 - alpha``.
    Alpha sweeps the distinct scores together with 0 and 1.
    """
    scores = list(scores)
    p, y, n_pos, n_neg = _labels([s[0] for s in scores], [s[1] for s in scores])
    if direction == "dependence":
        stat = p
    elif direction == "independence":
        stat = 1.0 - p
    else:
        raise DomainError("direction must be 'dependence' or 'independence'")
    alphas = np.unique(np.concatenate([stat, [0.0, 1.0]]))
    alphas = alphas[(alphas >= 0.0) & (alphas <= 1.0)]
    order = np.argsort(stat, kind="stable")
    sorted_stat = stat[order]
    cum_pos = np.concatenate([[0], np.cumsum(y[order])])
    k = np.searchsorted(sorted_stat, alphas, side="right")
    tp = cum_pos[k]
    fp = k - tp
    return RocCurve(np.column_stack([fp / n_neg, tp / n_pos, alphas]), "single")


def _lcd_alphas(p_cx, p_xy, p_cy):
    breaks = np.unique(np.concatenate([[0.0, 1.0], p_cx, p_xy, p_cy, 1.0 - p_cy]))
    breaks = breaks[(breaks >= 0.0) & (breaks <= 1.0)]
    # the open acceptance sets change just after a breakpoint
    mids = 0.5 * (breaks[1:] + breaks[:-1])
    return np.unique(np.concatenate([breaks, mids]))


def roc_lcd(triples, params: LcdScoreParams = LcdScoreParams()) -> RocCurve:
    """ROC of the LCD score from ``(p_cx, p_xy, p_cy_given_x, positive)`` rows.

    Alpha runs over every value where some triple's score can change and the
    midpoints between them, so each distinct operating point is visited.
    """
    rows = np.asarray([tuple(t) for t in triples], dtype=float).reshape(-1, 4)
    p_cx, p_xy, p_cy = rows[:, 0], rows[:, 1], rows[:, 2]
    _, y, n_pos, n_neg = _labels(p_cx, rows[:, 3] != 0)
    alphas = _lcd_alphas(p_cx, p_xy, p_cy)
    a = alphas[:, None]
    dep = (p_cx[None, :] <= a) & (p_xy[None, :] <= a)
    if params.mode == "same_threshold":
        indep = p_cy[None, :] > a
    elif params.mode == "mirrored":
        indep = p_cy[None, :] > 1.0 - a
    else:
        indep = (p_cy[None, :] > params.alpha0) | (p_cy[None, :] > 1.0 - a)
    claim = dep & indep
    tpr = claim[:, y].sum(axis=1) / n_pos
    fpr = claim[:, ~y].sum(axis=1) / n_neg
    return RocCurve(np.column_stack([fpr, tpr, alphas]), params.mode)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve, anchored at (0, 0) and (1, 1).

    Points are ordered by (fpr, tpr) before integration.
    """
    pts = np.asarray(curve.points[:, :2], dtype=float)
    if pts.shape[0] < 2:
        raise DomainError("AUC needs at least two points")
    pts = np.vstack([[0.0, 0.0], pts, [1.0, 1.0]])
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    return float(np.sum(np.diff(pts[:, 0]) * (pts[1:, 1] + pts[:-1, 1]) / 2.0))


def score_round(sim: SimRound, config: TestConfig = DEFAULT_TEST_CONFIG) -> RoundScores:
    """Run the two-sample, independence and conditional tests on one round."""
    lab = sim.labels
    try:
        cx = two_sample_test(GroupedSample(sim.x, sim.c), config.alpha, config.spec, config.condopt.h1_depth)
        xy = independence_test(np.column_stack([sim.x, sim.y]), config.alpha, config.spec)
        cy = cond_two_sample_test(sim.c, sim.y, sim.x, config.condopt, config.alpha, config.spec)
    except (DegenerateSample, EmptyGroup) as exc:
        return RoundScores(math.nan, math.nan, math.nan, lab.dep_cx, lab.dep_xy,
                           lab.dep_cy_given_x, lab.lcd_positive, sim.seed, type(exc).__name__)
    return RoundScores(cx.p_h0, xy.p_h0, cy.p_h0, lab.dep_cx, lab.dep_xy,
                       lab.dep_cy_given_x, lab.lcd_positive, sim.seed)


def _score_job(args):
    sim, config = args
    return score_round(sim, config)


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    return [fn(job) for job in jobs]


def score_rounds(rounds, config: TestConfig = DEFAULT_TEST_CONFIG, workers: int = 1) -> list:
    """Score rounds in order; the result does not depend on ``workers``."""
    return _map(_score_job, [(sim, config) for sim in rounds], workers)


def _draw_job(args):
    n, seed, menu = args
    return draw_round(n, seed, menu)


def generate_rounds(sim: SimConfig, workers: int = 1) -> list:
    jobs = [(sim.n, round_seed(sim.seed, i), sim.menu) for i in range(sim.rounds)]
    return _map(_draw_job, jobs, workers)


def _case_auc(scores, case: str, params: LcdScoreParams) -> float:
    if case == "lcd":
        return auc(roc_lcd([(s.p_cx, s.p_xy, s.p_cy_given_x, s.lcd_positive) for s in scores], params))
    attr = {"cx": ("p_cx", "dep_cx"), "xy": ("p_xy", "dep_xy"),
            "cy_given_x": ("p_cy_given_x", "dep_cy_given_x")}[case]
    return auc(roc_single([(getattr(s, attr[0]), getattr(s, attr[1])) for s in scores]))


def curves(scores, params: LcdScoreParams = LcdScoreParams()) -> dict:
    """ROC curve per test case over the non-skipped rounds."""
    kept = [s for s in scores if s.skipped is None]
    return {
        "cx": roc_single([(s.p_cx, s.dep_cx) for s in kept]),
        "xy": roc_single([(s.p_xy, s.dep_xy) for s in kept]),
        "cy_given_x": roc_single([(s.p_cy_given_x, s.dep_cy_given_x) for s in kept]),
        "lcd": roc_lcd([(s.p_cx, s.p_xy, s.p_cy_given_x, s.lcd_positive) for s in kept], params),
    }


def auc_summaries(scores, n: int, params: LcdScoreParams = LcdScoreParams(), batches: int = 1) -> list:
    """AUC per test case; with ``batches > 1`` the median of per-batch AUCs
    over contiguous, equally sized batches of rounds."""
    kept = [s for s in scores if s.skipped is None]
    if batches < 1:
        raise DomainError("batches must be positive")
    out = []
    for case in TEST_CASES:
        if batches == 1:
            value = _case_auc(kept, case, params)
        else:
            parts = np.array_split(np.arange(len(kept)), batches)
            value = float(np.median([_case_auc([kept[i] for i in part], case, params) for part in parts]))
        out.append(AucSummary(case, n, len(kept), value, batches > 1))
    return out


def run_experiment(sim: SimConfig, config: TestConfig = DEFAULT_TEST_CONFIG,
                   params: LcdScoreParams = LcdScoreParams(), workers: int = 1,
                   batches: int = 1, rounds=None):
    """Generate (unless ``rounds`` is given), score and summarise one batch
    of simulations. Returns ``(scores, summaries)``."""
    if rounds is None:
        rounds = generate_rounds(sim, workers)
    scores = score_rounds(rounds, config, workers)
    return scores, auc_summaries(scores, sim.n, params, batches)


def sensitivity_sweep(spec: SensitivitySpec, sim: SimConfig,
                      config: TestConfig = DEFAULT_TEST_CONFIG,
                      params: LcdScoreParams = LcdScoreParams(),
                      workers: int = 1, batches: int = 1) -> list:
    """AUC table for every alpha rule; all rules score the same rounds.

    Returns ``(rule, AucSummary)`` rows in rule order.
    """
    rounds = generate_rounds(sim, workers)
    table = []
    for rule in spec.rules:
        if not isinstance(rule, AlphaRule):
            raise DomainError(f"not an alpha rule: {rule!r}")
        _, summaries = run_experiment(sim, replace(config, alpha=rule), params, workers, batches, rounds)
        table.extend((rule, s) for s in summaries)
    return table


def runtime_profile(test_kind: str, n: int, repetitions: int, seed: int = 0,
                    warmup: int = 1, config: TestConfig = DEFAULT_TEST_CONFIG) -> RuntimeRecord:
    """Wall-clock seconds per test invocation on simulated data of size ``n``.

    ``test_kind`` is ``two_sample``, ``independence``, ``cond_two_sample`` or
    ``triple`` (all three on the same round). Round ``i`` uses the seed
    derived from ``(seed, i)``; warm-up calls are not recorded.
    """
    if repetitions < 1:
        raise DomainError("repetitions must be at least 1")
    runners = {
        "two_sample": lambda r: two_sample_test(GroupedSample(r.x, r.c), config.alpha, config.spec),
        "independence": lambda r: independence_test(np.column_stack([r.x, r.y]), config.alpha, config.spec),
        "cond_two_sample": lambda r: cond_two_sample_test(r.c, r.y, r.x, config.condopt, config.alpha, config.spec),
        "triple": lambda r: score_round(r, config),
    }
    if test_kind not in runners:
        raise DomainError(f"unknown test kind {test_kind!r}")
    run = runners[test_kind]
    rounds = [draw_round(n, round_seed(seed, i)) for i in range(repetitions)]
    for i in range(warmup):
        run(rounds[i % repetitions])
    durations = []
    for r in rounds:
        start = time.perf_counter()
        run(r)
        durations.append(time.perf_counter() - start)
    return RuntimeRecord(test_kind, n, tuple(durations))
