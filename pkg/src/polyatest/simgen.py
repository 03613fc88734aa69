"""Synthetic (C, X, Y) triples from three small structural causal models.

``chain``:       C -> X -> Y
``reverse``:     C -> X <- Y
``confounded``:  C -> X <- L -> Y

X receives the context through an intervention function ``g(c, e)``; the
X/Y (or L/X, L/Y) edges go through link functions. Every round draws the
graph, the intervention, the link(s) and theta uniformly.

Randomness: round ``i`` of a batch with master seed ``s`` uses
``numpy.random.SeedSequence(s, spawn_key=(i,))``; its first 64-bit state word
is the round seed stored in :class:`SimRound`, and
``numpy.random.default_rng(round_seed)`` drives every draw of that round.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateSample, DomainError

__all__ = [
    "SCM_KINDS",
    "INTERVENTION_KINDS",
    "LINK_KINDS",
    "THETA_VALUES",
    "GroundTruth",
    "SimRound",
    "MenuConfig",
    "apply_g",
    "apply_l",
    "d_separated",
    "scm_edges",
    "ground_truth_labels",
    "round_seed",
    "draw_round",
    "draw_rounds",
    "write_round",
    "read_round",
]

SCM_KINDS = ("chain", "reverse", "confounded")
INTERVENTION_KINDS = ("none", "mean_shift", "variance_shift", "perfect", "mean_shift_mixture")
LINK_KINDS = ("none", "linear", "parabolic", "sinusoidal")
THETA_VALUES = (2, 3, 4, 5, 6)


@dataclass(frozen=True)
class GroundTruth:
    dep_cx: bool
    dep_xy: bool
    dep_cy_given_x: bool
    lcd_positive: bool


@dataclass(frozen=True)
class MenuConfig:
    """Optional overrides of the per-round draws; ``None`` means draw uniformly.

    ``links`` is a tuple of one link (chain, reverse) or two links
    (confounded: L -> X first, L -> Y second).
    """

    scm: str | None = None
    g: str | None = None
    links: tuple | None = None
    theta: int | None = None

    def __post_init__(self):
        if self.scm is not None and self.scm not in SCM_KINDS:
            raise DomainError(f"unknown SCM {self.scm!r}")
        if self.g is not None and self.g not in INTERVENTION_KINDS:
            raise DomainError(f"unknown intervention {self.g!r}")
        if self.links is not None and any(l not in LINK_KINDS for l in self.links):
            raise DomainError(f"unknown link in {self.links!r}")
        if self.theta is not None and self.theta not in THETA_VALUES:
            raise DomainError(f"theta must be one of {THETA_VALUES}")


@dataclass
class SimRound:
    c: np.ndarray
    x: np.ndarray
    y: np.ndarray
    scm: str
    g: str
    links: tuple
    theta: int
    seed: int
    labels: GroundTruth
    noise_sd: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.c.size

    def metadata(self) -> dict:
        return {
            "scm": self.scm,
            "g": self.g,
            "links": list(self.links),
            "theta": self.theta,
            "seed": self.seed,
            "n": self.n,
            "labels": asdict(self.labels),
            "noise_sd": dict(self.noise_sd),
        }


def apply_g(kind: str, c, e, theta, b=None):
    """Intervention menu; equals ``e`` wherever ``c == 0``.

    ``b`` holds the per-observation draws from {-1, theta} used by the
    mean-shift mixture.
    """
    c = np.asarray(c, dtype=float)
    e = np.asarray(e, dtype=float)
    if kind == "none":
        return e + 0.0 * c
    if kind == "mean_shift":
        return (1 - c) * e + c * (e + theta)
    if kind == "variance_shift":
        return (1 - c) * e + c * (1 + theta) * e
    if kind == "perfect":
        return (1 - c) * e + c * theta
    if kind == "mean_shift_mixture":
        if b is None:
            raise DomainError("mean_shift_mixture needs the mixture draws b")
        return (1 - c) * e + c * (e + np.asarray(b, dtype=float))
    raise DomainError(f"unknown intervention {kind!r}")


def apply_l(kind: str, x):
    """Link menu applied to a whole column."""
    x = np.asarray(x, dtype=float)
    if kind == "none":
        return np.zeros_like(x)
    if kind == "linear":
        return x.copy()
    if kind == "parabolic":
        return x * x
    if kind == "sinusoidal":
        spread = x.max() - x.min() if x.size else 0.0
        if not spread > 0:
            raise DegenerateSample("sinusoidal link needs a column with positive range")
        return np.sin(12 * np.pi * x / spread)
    raise DomainError(f"unknown link {kind!r}")


def scm_edges(scm: str, g: str, links) -> set:
    """Directed edges among C, X, Y, L after deleting switched-off mechanisms."""
    links = tuple(links)
    edges = set()
    if g != "none":
        edges.add(("C", "X"))
    if scm == "chain":
        if links[0] != "none":
            edges.add(("X", "Y"))
    elif scm == "reverse":
        if links[0] != "none":
            edges.add(("Y", "X"))
    elif scm == "confounded":
        if links[0] != "none":
            edges.add(("L", "X"))
        if links[1] != "none":
            edges.add(("L", "Y"))
    else:
        raise DomainError(f"unknown SCM {scm!r}")
    return edges


def d_separated(edges, a: str, b: str, given=()) -> bool:
    """d-separation in a DAG by reachability over (node, direction) states.

    A trail may pass a non-collider that is not conditioned on, and a collider
    that is conditioned on or has a conditioned descendant.
    """
    given = set(given)
    parents, children = {}, {}
    for u, v in edges:
        children.setdefault(u, set()).add(v)
        parents.setdefault(v, set()).add(u)
    # nodes that are in `given` or have a descendant in it
    opens_collider = set()
    frontier = list(given)
    while frontier:
        node = frontier.pop()
        if node in opens_collider:
            continue
        opens_collider.add(node)
        frontier.extend(parents.get(node, ()))
    # direction "up": arrived from a child; "down": arrived from a parent
    stack = [(a, "up")]
    seen = set()
    while stack:
        node, direction = stack.pop()
        if (node, direction) in seen:
            continue
        seen.add((node, direction))
        if node == b:
            return False
        if direction == "up" and node not in given:
            stack.extend((p, "up") for p in parents.get(node, ()))
            stack.extend((ch, "down") for ch in children.get(node, ()))
        elif direction == "down":
            if node not in given:
                stack.extend((ch, "down") for ch in children.get(node, ()))
            if node in opens_collider:
                stack.extend((p, "up") for p in parents.get(node, ()))
    return True


def ground_truth_labels(scm: str, g: str, links) -> GroundTruth:
    links = tuple(links)
    expected = 2 if scm == "confounded" else 1
    if len(links) != expected:
        raise DomainError(f"{scm} needs {expected} link(s), got {links!r}")
    edges = scm_edges(scm, g, links)
    return GroundTruth(
        dep_cx=not d_separated(edges, "C", "X"),
        dep_xy=not d_separated(edges, "X", "Y"),
        dep_cy_given_x=not d_separated(edges, "C", "Y", {"X"}),
        lcd_positive=scm == "chain" and g != "none" and links[0] != "none",
    )


def round_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _noise_sd(link_column: np.ndarray) -> float:
    var = float(np.var(link_column, ddof=1)) if link_column.size > 1 else 0.0
    # a switched-off link leaves nothing to scale by
    return float(np.sqrt(var / 4.0)) if var > 0 else 1.0


def _link(kind: str, x: np.ndarray) -> np.ndarray:
    # a constant column (tiny n, perfect intervention) has no range to normalise by
    if kind == "sinusoidal" and np.ptp(x) == 0:
        return np.zeros_like(x)
    return apply_l(kind, x)


def draw_round(n: int, seed: int, menu: MenuConfig | None = None) -> SimRound:
    """Draw one round of ``n`` observations from a randomly chosen SCM.

    Dependent noise has standard deviation ``sqrt(Var(link column) / 4)``
    with the variance taken over the realised column (``n - 1``
    denominator), or 1 when that variance is 0.
    """
    if n < 2:
        raise DomainError("a round needs at least two observations")
    menu = menu or MenuConfig()
    rng = np.random.default_rng(seed)
    # fixed draw order keeps rounds comparable whatever the menu overrides
    scm = SCM_KINDS[rng.integers(len(SCM_KINDS))]
    g = INTERVENTION_KINDS[rng.integers(len(INTERVENTION_KINDS))]
    links = tuple(LINK_KINDS[k] for k in rng.integers(len(LINK_KINDS), size=2))
    theta = int(THETA_VALUES[rng.integers(len(THETA_VALUES))])
    scm = menu.scm or scm
    g = menu.g or g
    theta = menu.theta or theta
    if menu.links is not None:
        links = tuple(menu.links)
    links = links[:2] if scm == "confounded" else links[:1]
    if len(links) != (2 if scm == "confounded" else 1):
        raise DomainError(f"{scm} needs {2 if scm == 'confounded' else 1} link(s)")

    c = rng.integers(0, 2, size=n).astype(float)
    b = rng.choice(np.array([-1.0, float(theta)]), size=n)
    noise_sd = {}
    if scm == "chain":
        e_x = rng.standard_normal(n)
        x = apply_g(g, c, e_x, theta, b)
        lx = _link(links[0], x)
        noise_sd["e_y"] = _noise_sd(lx)
        y = lx + noise_sd["e_y"] * rng.standard_normal(n)
    elif scm == "reverse":
        y = rng.standard_normal(n)
        ly = _link(links[0], y)
        noise_sd["e_x"] = _noise_sd(ly)
        x = apply_g(g, c, ly + noise_sd["e_x"] * rng.standard_normal(n), theta, b)
    else:
        latent = rng.standard_normal(n)
        l_x = _link(links[0], latent)
        l_y = _link(links[1], latent)
        noise_sd["e_x"] = _noise_sd(l_x)
        noise_sd["e_y"] = _noise_sd(l_y)
        x = apply_g(g, c, l_x + noise_sd["e_x"] * rng.standard_normal(n), theta, b)
        y = l_y + noise_sd["e_y"] * rng.standard_normal(n)
    return SimRound(
        c=c.astype(np.int64), x=x, y=y, scm=scm, g=g, links=links, theta=theta,
        seed=int(seed), labels=ground_truth_labels(scm, g, links), noise_sd=noise_sd,
    )


def draw_rounds(n: int, rounds: int, master_seed: int, menu: MenuConfig | None = None) -> list:
    return [draw_round(n, round_seed(master_seed, i), menu) for i in range(rounds)]


def write_round(sim: SimRound, stem) -> tuple:
    """Write ``<stem>.csv`` (columns c,x,y) and ``<stem>.json``."""
    stem = Path(stem)
    csv_path = stem.with_suffix(".csv")
    json_path = stem.with_suffix(".json")
    lines = ["c,x,y"]
    lines.extend(f"{int(c)},{float(x)!r},{float(y)!r}" for c, x, y in zip(sim.c, sim.x, sim.y))
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    json_path.write_text(json.dumps(sim.metadata(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, json_path


def read_round(stem) -> SimRound:
    stem = Path(stem)
    data = np.loadtxt(stem.with_suffix(".csv"), delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    return SimRound(
        c=data[:, 0].astype(np.int64), x=data[:, 1], y=data[:, 2],
        scm=meta["scm"], g=meta["g"], links=tuple(meta["links"]), theta=int(meta["theta"]),
        seed=int(meta["seed"]), labels=GroundTruth(**meta["labels"]),
        noise_sd=dict(meta.get("noise_sd", {})),
    )
