"""Generational genetic algorithm over Bezier route genomes.

Selection is size-k tournament on total cost, crossover an extended arithmetic
blend, mutation per-point Gaussian noise. Every generation keeps the best
members unchanged (elitism) and injects a few fresh random genomes
(immigrants) to preserve diversity.

Reproducibility: every genome slot in every generation draws from its own
numpy SeedSequence stream keyed by (generation, slot), so results are
bit-identical regardless of evaluation order or worker count.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .costing import CostBreakdown, EvalContext, evaluate_population
from .geometry import Genome
from .terrain import DemGrid, LocalFrame


@dataclass(frozen=True)
class GaConfig:
    """All evolution hyperparameters.

    mutation_sigma_xy may be left None, in which case run() resolves it to
    2% of the horizontal diagonal of the search bounds.
    """

    population_size: int = 200
    generations: int = 100
    elite_count: int = 2
    immigrant_count: int = 4
    tournament_size: int = 3
    mutation_sigma_xy: float | None = None
    mutation_sigma_z: float = 15.0
    mutation_rate: float = 0.3
    crossover_alpha_range: tuple[float, float] = (-0.25, 1.25)
    rng_seed: int = 0
    degree: int = 10
    n_samples: int = 512

    def validate(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if self.elite_count < 0 or self.immigrant_count < 0:
            raise ValueError("elite_count and immigrant_count must be non-negative")
        if self.elite_count + self.immigrant_count >= self.population_size:
            raise ValueError("elite_count + immigrant_count must be below population_size")
        if self.tournament_size < 2:
            raise ValueError("tournament_size must be at least 2")
        if self.tournament_size > self.population_size:
            raise ValueError("tournament_size cannot exceed population_size")
        if self.mutation_sigma_xy is not None and self.mutation_sigma_xy < 0:
            raise ValueError("mutation_sigma_xy must be non-negative")
        if self.mutation_sigma_z < 0:
            raise ValueError("mutation_sigma_z must be non-negative")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        lo, hi = self.crossover_alpha_range
        if not lo < hi:
            raise ValueError("crossover_alpha_range must be a non-empty interval")
        if self.degree < 3:
            raise ValueError("degree must be at least 3")
        if self.n_samples < 16:
            raise ValueError("n_samples must be at least 16")


@dataclass(frozen=True)
class Bounds:
    """Box the interior control points are sampled from, in chord coordinates.

    Axis 0 runs along the start-to-end chord (0 at the start, chord length at
    the end), axis 1 is the signed lateral offset from the chord, axis 2 is
    absolute elevation. Keeping the box chord-aligned means fresh genomes
    never place control points behind the start or beyond the end, where they
    would force the curve to double back through a cusp.
    """

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("bounds must be 3-vectors")
        if not np.all(hi > lo):
            raise ValueError(f"degenerate bounds: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def horizontal_diagonal(self) -> float:
        d = self.hi[:2] - self.lo[:2]
        return float(np.hypot(d[0], d[1]))


def chord_axes(endpoints: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Unit along-chord and lateral axes (horizontal) plus chord length."""
    endpoints = np.asarray(endpoints, dtype=np.float64)
    delta = endpoints[1, :2] - endpoints[0, :2]
    length = float(np.hypot(delta[0], delta[1]))
    if length <= 0:
        raise ValueError("route endpoints coincide horizontally")
    u = delta / length
    return u, np.array([-u[1], u[0]]), length


@dataclass
class Member:
    """One evaluated population slot with operator provenance."""

    genome: Genome
    breakdown: CostBreakdown
    origin: str  # init | elite | immigrant | child


@dataclass
class Population:
    members: list[Member]
    generation: int
    best_ever: Member

    def totals(self) -> np.ndarray:
        return np.array([m.breakdown.total for m in self.members])


@dataclass
class GenRecord:
    generation: int
    best_total: float
    median_total: float
    feasible_count: int


@dataclass
class RunHistory:
    records: list[GenRecord] = field(default_factory=list)

    def best_totals(self) -> list[float]:
        return [r.best_total for r in self.records]


@dataclass
class RunResult:
    best: Member
    history: RunHistory
    population: Population
    config: GaConfig


# ---------------------------------------------------------------------------
# Randomness plumbing
# ---------------------------------------------------------------------------


def slot_rng(seed: int, generation: int, slot: int) -> np.random.Generator:
    """Independent counter-based stream for one genome slot in one generation.

    The Philox key packs (seed, generation, slot) into disjoint bit fields,
    so streams never collide for seeds below 2**64 and runs are reproducible
    regardless of evaluation order or worker count.
    """
    key = ((seed & 0xFFFFFFFFFFFFFFFF) << 64) | ((generation & 0xFFFFFFFF) << 32) | (slot & 0xFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def route_bounds(
    grid: DemGrid,
    frame: LocalFrame,
    endpoints: np.ndarray,
    margin_frac: float = 0.25,
    z_below: float = 1000.0,
    z_above: float = 500.0,
) -> Bounds:
    """Default search corridor: the full chord span, a lateral margin of
    margin_frac times the chord length, and the terrain elevation range
    extended by z_below / z_above."""
    endpoints = np.asarray(endpoints, dtype=np.float64)
    _, _, length = chord_axes(endpoints)
    margin = margin_frac * length
    g_lo, g_hi = grid.elevation_range()
    z_lo = min(g_lo, endpoints[:, 2].min()) - z_below
    z_hi = max(g_hi, endpoints[:, 2].max()) + z_above
    return Bounds(np.array([0.0, -margin, z_lo]), np.array([length, margin, z_hi]))


# ---------------------------------------------------------------------------
# Variation operators
# ---------------------------------------------------------------------------


def random_genome(
    bounds: Bounds, endpoints: np.ndarray, degree: int, rng: np.random.Generator
) -> Genome:
    """Fresh genome: anchored endpoints, interior points uniform in bounds.

    Points are drawn in chord coordinates, ordered along the chord, then
    mapped to the metric frame. Unordered control polygons parameterize
    visually identical paths in wildly different ways (including doubling
    back, which shows up as horizontal cusps); canonical ordering keeps the
    genotype-to-phenotype map tight so the blend crossover mixes like with
    like.
    """
    if degree < 3:
        raise ValueError(f"degree must be at least 3, got {degree}")
    endpoints = np.asarray(endpoints, dtype=np.float64)
    u, perp, _ = chord_axes(endpoints)
    draw = rng.uniform(bounds.lo, bounds.hi, size=(degree - 1, 3))
    draw = draw[np.argsort(draw[:, 0], kind="stable")]
    xy = endpoints[0, :2] + np.outer(draw[:, 0], u) + np.outer(draw[:, 1], perp)
    interior = np.column_stack([xy, draw[:, 2]])
    return Genome(np.vstack([endpoints[0], interior, endpoints[1]]))


def tournament_select(population: Population, k: int, rng: np.random.Generator) -> Genome:
    """Lowest-total genome among k distinct members drawn uniformly.

    Draws are without replacement within one tournament (a full-size
    tournament is exhaustive and always returns the best member); members
    freely reappear across tournaments.
    """
    totals = population.totals()
    return population.members[_tournament_index(totals, k, rng)].genome


def _tournament_index(totals: np.ndarray, k: int, rng: np.random.Generator) -> int:
    n = len(totals)
    if n == 0:
        raise ValueError("cannot select from an empty population")
    if k > n:
        raise ValueError(f"tournament size {k} exceeds population size {n}")
    idx = rng.choice(n, size=k, replace=False)
    return int(idx[np.argmin(totals[idx])])


def crossover(
    a: Genome, b: Genome, alpha_range: tuple[float, float], rng: np.random.Generator
) -> Genome:
    """Arithmetic blend child = alpha*a + (1-alpha)*b, one alpha per crossover.

    Interior points only; the shared endpoints are copied verbatim so
    anchoring survives floating-point blending.
    """
    if a.degree != b.degree:
        raise ValueError(f"degree mismatch: {a.degree} vs {b.degree}")
    if not (np.array_equal(a.start, b.start) and np.array_equal(a.end, b.end)):
        raise ValueError("parents must share identical endpoints")
    alpha = rng.uniform(alpha_range[0], alpha_range[1])
    interior = alpha * a.controls[1:-1] + (1.0 - alpha) * b.controls[1:-1]
    return Genome(np.vstack([a.start, interior, a.end]))


def mutate(genome: Genome, config: GaConfig, rng: np.random.Generator) -> Genome:
    """Perturb each interior point with probability mutation_rate.

    Noise is zero-mean Gaussian, sigma_xy horizontally and sigma_z
    vertically. Endpoints are never touched.
    """
    sigma_xy = config.mutation_sigma_xy
    if sigma_xy is None:
        raise ValueError("mutation_sigma_xy is unresolved; call run() or set it explicitly")
    n_interior = genome.controls.shape[0] - 2
    hit = rng.random(n_interior) < config.mutation_rate
    noise = rng.normal(0.0, 1.0, size=(n_interior, 3)) * np.array(
        [sigma_xy, sigma_xy, config.mutation_sigma_z]
    )
    interior = genome.controls[1:-1] + hit[:, None] * noise
    return Genome(np.vstack([genome.start, interior, genome.end]))


# ---------------------------------------------------------------------------
# Generation loop
# ---------------------------------------------------------------------------


def _best_index(totals: np.ndarray) -> int:
    return int(np.argmin(totals))  # first minimum wins ties


def _record(history: RunHistory | None, population: Population) -> None:
    if history is None:
        return
    totals = population.totals()
    history.records.append(
        GenRecord(
            generation=population.generation,
            best_total=float(totals.min()),
            median_total=float(np.median(totals)),
            feasible_count=sum(1 for m in population.members if m.breakdown.feasible),
        )
    )


def init_population(
    config: GaConfig,
    bounds: Bounds,
    endpoints: np.ndarray,
    ctx: EvalContext,
    workers: int = 1,
    history: RunHistory | None = None,
) -> Population:
    """Generation 0: population_size random genomes, all evaluated."""
    config.validate()
    genomes = [
        random_genome(bounds, endpoints, config.degree, slot_rng(config.rng_seed, 0, i))
        for i in range(config.population_size)
    ]
    breakdowns = evaluate_population(np.stack([g.controls for g in genomes]), ctx, workers)
    members = [Member(g, b, "init") for g, b in zip(genomes, breakdowns)]
    best = members[_best_index(np.array([b.total for b in breakdowns]))]
    population = Population(members=members, generation=0, best_ever=Member(best.genome, best.breakdown, best.origin))
    _record(history, population)
    return population


def step_generation(
    population: Population,
    config: GaConfig,
    bounds: Bounds,
    endpoints: np.ndarray,
    ctx: EvalContext,
    workers: int = 1,
    history: RunHistory | None = None,
) -> Population:
    """Advance one generation: elites + immigrants + tournament/blend/mutate children."""
    gen = population.generation + 1
    totals = population.totals()
    elite_idx = np.argsort(totals, kind="stable")[: config.elite_count]

    # (genome, origin, precomputed breakdown or None) per slot, in slot order
    slots: list[tuple[Genome, str, CostBreakdown | None]] = []
    for i in elite_idx:
        m = population.members[int(i)]
        slots.append((m.genome, "elite", m.breakdown))
    for slot in range(config.elite_count, config.elite_count + config.immigrant_count):
        rng = slot_rng(config.rng_seed, gen, slot)
        slots.append((random_genome(bounds, endpoints, config.degree, rng), "immigrant", None))
    for slot in range(config.elite_count + config.immigrant_count, config.population_size):
        rng = slot_rng(config.rng_seed, gen, slot)
        pa = population.members[_tournament_index(totals, config.tournament_size, rng)].genome
        pb = population.members[_tournament_index(totals, config.tournament_size, rng)].genome
        child = mutate(crossover(pa, pb, config.crossover_alpha_range, rng), config, rng)
        slots.append((child, "child", None))

    new_genomes = [g for g, _, b in slots if b is None]
    breakdowns = iter(
        evaluate_population(np.stack([g.controls for g in new_genomes]), ctx, workers)
    )
    members = [
        Member(genome, breakdown if breakdown is not None else next(breakdowns), origin)
        for genome, origin, breakdown in slots
    ]

    best_ever = population.best_ever
    new_totals = np.array([m.breakdown.total for m in members])
    i_best = _best_index(new_totals)
    if new_totals[i_best] < best_ever.breakdown.total:
        b = members[i_best]
        best_ever = Member(b.genome, b.breakdown, b.origin)

    new_pop = Population(members=members, generation=gen, best_ever=best_ever)
    _record(history, new_pop)
    return new_pop


def resolve_config(config: GaConfig, bounds: Bounds) -> GaConfig:
    """Fill in derived defaults (mutation_sigma_xy) for a concrete run."""
    if config.mutation_sigma_xy is not None:
        return config
    return dataclasses.replace(config, mutation_sigma_xy=0.005 * bounds.horizontal_diagonal)


def run(
    config: GaConfig,
    ctx: EvalContext,
    bounds: Bounds,
    endpoints: np.ndarray,
    workers: int = 1,
    on_generation=None,
) -> RunResult:
    """Full optimization: init, `generations` steps, best-ever result.

    Deterministic for a fixed rng_seed and config, independent of workers.
    on_generation, when given, is called with the Population after every
    generation (including generation 0).
    """
    config = resolve_config(config, bounds)
    config.validate()
    endpoints = np.asarray(endpoints, dtype=np.float64)
    if endpoints.shape != (2, 3):
        raise ValueError(f"endpoints must have shape (2, 3), got {endpoints.shape}")
    if np.allclose(endpoints[0], endpoints[1]):
        raise ValueError("route endpoints must be distinct")

    history = RunHistory()
    population = init_population(config, bounds, endpoints, ctx, workers, history)
    if on_generation is not None:
        on_generation(population)
    for _ in range(config.generations):
        population = step_generation(population, config, bounds, endpoints, ctx, workers, history)
        if on_generation is not None:
            on_generation(population)
    return RunResult(best=population.best_ever, history=history, population=population, config=config)
