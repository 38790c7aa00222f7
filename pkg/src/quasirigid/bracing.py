"""Bracing patterns, the braces graph and prediction-versus-oracle experiments."""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InputError
from .rigidity import Framework, flex_space
from .tiling import Tiling

CLASS_ANGLES = {
    "thin": math.pi / 5,
    "thick": 2 * math.pi / 5,
    "square": math.pi / 2,
    "rhomb": math.pi / 4,
}


@dataclass(frozen=True)
class BracingPattern:
    tiles: tuple[int, ...]
    generator: dict | None = None

    def __post_init__(self):
        tiles = tuple(sorted(int(t) for t in self.tiles))
        if len(set(tiles)) != len(tiles):
            raise InputError("a tile can carry at most one brace")
        object.__setattr__(self, "tiles", tiles)

    def __len__(self) -> int:
        return len(self.tiles)

    def check(self, tiling: Tiling) -> None:
        if self.tiles and (self.tiles[0] < 0 or self.tiles[-1] >= tiling.n_tiles):
            raise InputError("braced tile outside the patch")

    def to_json(self) -> dict:
        doc: dict = {"braced_tiles": list(self.tiles)}
        if self.generator is not None:
            doc["generator"] = dict(self.generator)
        return doc


def pattern_from_json(doc: dict, tiling: Tiling) -> BracingPattern:
    if not isinstance(doc, dict):
        raise InputError("bracing document must be an object")
    if "braced_tiles" in doc:
        try:
            pat = BracingPattern(tuple(int(t) for t in doc["braced_tiles"]), doc.get("generator"))
        except (TypeError, ValueError) as exc:
            raise InputError(f"malformed braced tile list: {exc}") from exc
        pat.check(tiling)
        return pat
    if "generator" in doc:
        return pattern_from_generator(doc["generator"], tiling)
    raise InputError("bracing document needs 'braced_tiles' or 'generator'")


def pattern_from_generator(gen: dict, tiling: Tiling) -> BracingPattern:
    kind = gen.get("kind")
    if kind == "checkered":
        return checkered_pattern(tiling, int(gen.get("p", 2)))
    if kind == "class":
        return congruence_class_pattern(tiling, gen.get("class", "thin"))
    if kind == "random":
        rng = np.random.default_rng(int(gen.get("seed", 0)))
        return random_pattern(tiling, float(gen.get("density", 0.3)), rng)
    if kind == "explicit":
        return pattern_from_json({"braced_tiles": gen.get("tiles", [])}, tiling)
    raise InputError(f"unknown bracing generator {kind!r}")


def parse_pattern(text: str, tiling: Tiling, seed: int = 0) -> BracingPattern:
    """Command-line shorthand: ``checkered:p``, ``thin``, ``thick``, ``square``,
    ``rhomb``, ``random[:density]`` or ``class:<angle in degrees>``."""
    head, _, arg = text.partition(":")
    if head == "checkered":
        try:
            p = int(arg or 2)
        except ValueError as exc:
            raise InputError(f"bad checkered modulus {arg!r}") from exc
        return checkered_pattern(tiling, p)
    if head in CLASS_ANGLES:
        return congruence_class_pattern(tiling, head)
    if head == "class":
        try:
            return congruence_class_pattern(tiling, math.radians(float(arg)))
        except ValueError as exc:
            raise InputError(f"bad class angle {arg!r}") from exc
    if head == "random":
        try:
            density = float(arg or 0.3)
        except ValueError as exc:
            raise InputError(f"bad density {arg!r}") from exc
        return random_pattern(tiling, density, np.random.default_rng(seed), seed=seed)
    raise InputError(f"unknown pattern {text!r}")


def checkered_pattern(tiling: Tiling, p: int) -> BracingPattern:
    """Braces every tile ``T(i, j, k, l)`` with ``k = l (mod p)``."""
    if p < 2:
        raise InputError("checkered modulus must be at least 2")
    if tiling.line_indices is None:
        raise InputError("tiling carries no multigrid line labels")
    k, l = tiling.line_indices[:, 0], tiling.line_indices[:, 1]
    tiles = np.nonzero((k - l) % p == 0)[0]
    return BracingPattern(tuple(int(t) for t in tiles), {"kind": "checkered", "p": p})


def congruence_class_pattern(tiling: Tiling, cls: str | float, tol: float = 1e-6) -> BracingPattern:
    """Braces every tile whose acute angle equals the named or given angle."""
    if isinstance(cls, str):
        if cls not in CLASS_ANGLES:
            raise InputError(f"unknown tile class {cls!r}")
        angle, name = CLASS_ANGLES[cls], cls
    else:
        angle, name = float(cls), None
    tiles = np.nonzero(np.abs(tiling.tile_angles() - angle) <= tol)[0]
    if len(tiles) == 0:
        warnings.warn(f"no tile of class {cls!r} in the patch; the pattern is empty", stacklevel=2)
    gen = {"kind": "class", "class": name if name else round(math.degrees(angle), 9)}
    return BracingPattern(tuple(int(t) for t in tiles), gen)


def random_pattern(tiling: Tiling, density: float, rng: np.random.Generator,
                   seed: int | None = None) -> BracingPattern:
    if not 0.0 <= density <= 1.0:
        raise InputError("density must lie in [0, 1]")
    tiles = np.nonzero(rng.random(tiling.n_tiles) < density)[0]
    gen = {"kind": "random", "density": density}
    if seed is not None:
        gen["seed"] = seed
    return BracingPattern(tuple(int(t) for t in tiles), gen)


# ------------------------------------------------------------ braces graph

@dataclass(frozen=True)
class BracesGraph:
    n_ribbons: int
    edges: np.ndarray  # (B, 2) ribbon pairs, one row per braced tile
    tiles: tuple[int, ...]
    labels: np.ndarray  # component label of every ribbon

    @property
    def components(self) -> int:
        return int(self.labels.max()) + 1 if self.n_ribbons else 0

    @property
    def connected_and_spanning(self) -> bool:
        return self.components == 1


def braces_graph(tiling: Tiling, pattern: BracingPattern | Iterable[int]) -> BracesGraph:
    if not isinstance(pattern, BracingPattern):
        pattern = BracingPattern(tuple(pattern))
    pattern.check(tiling)
    R = len(tiling.ribbons)
    idx = np.asarray(pattern.tiles, dtype=np.int64)
    edges = tiling.tile_ribbons[idx] if len(idx) else np.zeros((0, 2), dtype=np.int64)
    g = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(R, R))
    _, labels = connected_components(g, directed=False)
    return BracesGraph(R, edges, pattern.tiles, labels)


@dataclass(frozen=True)
class RigidityPrediction:
    rigid: bool
    components: int
    predicted_dim: int


def predict_rigidity(graph: BracesGraph) -> RigidityPrediction:
    c = graph.components
    return RigidityPrediction(c == 1, c, c + 2)


# ------------------------------------------------------------- experiments

@dataclass
class Trial:
    index: int
    density: float
    braces: int
    components: int
    predicted_rigid: bool
    predicted_dim: int
    oracle_dim: int
    gap_ratio: float
    ill_conditioned: bool

    @property
    def agree_rigid(self) -> bool:
        return self.predicted_rigid == (self.oracle_dim == 3)

    @property
    def agree_dim(self) -> bool:
        return self.predicted_dim == self.oracle_dim


@dataclass
class ExperimentReport:
    trials: list[Trial] = field(default_factory=list)

    @property
    def certified(self) -> list[Trial]:
        return [t for t in self.trials if not t.ill_conditioned]

    @property
    def ill_conditioned(self) -> int:
        return sum(t.ill_conditioned for t in self.trials)

    @property
    def rigid_disagreements(self) -> int:
        return sum(not t.agree_rigid for t in self.certified)

    @property
    def dim_disagreements(self) -> int:
        return sum(not t.agree_dim for t in self.certified)

    @property
    def rigid_trials(self) -> int:
        return sum(t.oracle_dim == 3 for t in self.certified)

    def to_json(self) -> dict:
        gaps = [t.gap_ratio for t in self.trials if math.isfinite(t.gap_ratio)]
        return {
            "trials": len(self.trials),
            "ill_conditioned": self.ill_conditioned,
            "rigid_disagreements": self.rigid_disagreements,
            "dimension_disagreements": self.dim_disagreements,
            "rigid_trials": self.rigid_trials,
            "min_finite_gap_ratio": min(gaps) if gaps else None,
            "records": [
                {"index": t.index, "density": t.density, "braces": t.braces, "c": t.components,
                 "predicted_dim": t.predicted_dim, "oracle_dim": t.oracle_dim,
                 "gap_ratio": t.gap_ratio if math.isfinite(t.gap_ratio) else None}
                for t in self.trials
            ],
        }


def thread_cap() -> int:
    raw = os.environ.get("QUASIRIGID_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError as exc:
            raise InputError(f"QUASIRIGID_THREADS must be an integer, got {raw!r}") from exc
    return os.cpu_count() or 1


def evaluate_pattern(tiling: Tiling, pattern: BracingPattern, tol: float | None = None):
    graph = braces_graph(tiling, pattern)
    pred = predict_rigidity(graph)
    fs = flex_space(Framework.from_tiling(tiling, pattern.tiles), tol, basis=False)
    return graph, pred, fs


def run_bracing_experiment(tiling: Tiling, trials: int, density: float | Sequence[float],
                           seed: int = 0, tol: float | None = None,
                           threads: int | None = None) -> ExperimentReport:
    """Random bracings scored against the oracle.

    ``density`` may be a sequence, cycled over trials, to sweep the
    connectivity transition of the braces graph.  Patterns are drawn in
    order from one seeded generator, so the report does not depend on
    the thread count.
    """
    schedule = [float(density)] if np.isscalar(density) else [float(d) for d in density]
    if not schedule:
        raise InputError("empty density schedule")
    rng = np.random.default_rng(seed)
    patterns = [random_pattern(tiling, schedule[n % len(schedule)], rng) for n in range(trials)]

    def one(n: int) -> Trial:
        pat = patterns[n]
        graph, pred, fs = evaluate_pattern(tiling, pat, tol)
        return Trial(n, pat.generator["density"], len(pat), pred.components, pred.rigid,
                     pred.predicted_dim, fs.dimension, fs.gap_ratio, fs.ill_conditioned)

    workers = threads if threads is not None else thread_cap()
    if workers <= 1:
        results = [one(n) for n in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(trials)))
    return ExperimentReport(results)
