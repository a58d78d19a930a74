# cuspfreq/natural_extension.py
"""
The interval map f_{a,b}, its planar natural extension F_{a,b}, the cycle
structure of the endpoint orbits and a sampled approximation of the attractor.

F_ab_step picks its branch from the first (forward) coordinate. The attractor
cloud is stored with columns (backward, forward) so that its boundary reads as
two step functions of the first column: the lower component sits below the
diagonal with top level a+1, the upper one above it with bottom level b-1.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .arith import (
    INF,
    S,
    T,
    T_INV,
    MoebiusMap,
    Number,
    Ordering,
    TrackedReal,
    compare,
    is_infinite,
    moebius_apply,
    to_mpf,
)
from .cf import CFParams
from .config import settings
from .errors import (
    DiagonalInputError,
    ExtractionFailedError,
    InconsistentCycleError,
    InvalidParameterError,
    UnavailableError,
)
from .models import (
    BoundaryX,
    CycleTag,
    FinitenessVerdict,
    OrbitOutcome,
    SeedLabel,
)

logger = logging.getLogger(__name__)


# ==================== ONE-DIMENSIONAL MAP ====================

def branch_map(x: Number, params: CFParams) -> MoebiusMap:
    """T below a, S on [a, b), T^-1 from b on (infinity included)."""
    if is_infinite(x):
        return T_INV
    if compare(x, params.a) is Ordering.LESS:
        return T
    if compare(x, params.b) is Ordering.LESS:
        return S
    return T_INV


def f_ab_step(x: Number, params: CFParams) -> Number:
    if is_infinite(x):
        return INF
    return moebius_apply(branch_map(x, params), x)


def F_ab_step(pt: tuple[Number, Number], params: CFParams) -> tuple[Number, Number]:
    x, y = pt
    if compare(x, y) is Ordering.EQUAL:
        raise DiagonalInputError("F_{a,b} is undefined on the diagonal")
    m = branch_map(x, params)
    return moebius_apply(m, x), moebius_apply(m, y)


def first_return(r: Number, params: CFParams) -> Number:
    """First return of f_{a,b} to [a, b) from a point of [a, b)."""
    x = f_ab_step(r, params)
    while not is_infinite(x) and not (
        compare(x, params.a) is not Ordering.LESS and compare(x, params.b) is Ordering.LESS
    ):
        x = f_ab_step(x, params)
    return x


# ==================== CYCLE DETECTION ====================

@dataclass(frozen=True)
class OrbitReport:
    seed: SeedLabel
    orbit: tuple
    outcome: OrbitOutcome
    maps: tuple = field(default=(), repr=False)
    preperiod: Optional[int] = None
    period: Optional[int] = None
    meeting: Optional[Number] = None


@dataclass(frozen=True)
class EndpointCycle:
    tag: CycleTag
    upper: OrbitReport
    lower: OrbitReport
    cycle_end: Optional[Number] = None
    m: Optional[int] = None
    k: Optional[int] = None


@dataclass(frozen=True)
class CycleReport:
    params: CFParams
    cap: int
    endpoint_a: EndpointCycle
    endpoint_b: EndpointCycle

    @property
    def verdict(self) -> FinitenessVerdict:
        tags = (self.endpoint_a.tag, self.endpoint_b.tag)
        if CycleTag.UNDETERMINED in tags:
            return FinitenessVerdict.UNDETERMINED
        return FinitenessVerdict.HOLDS

    @property
    def orbits(self) -> tuple[OrbitReport, ...]:
        return (self.endpoint_a.upper, self.endpoint_a.lower,
                self.endpoint_b.upper, self.endpoint_b.lower)


@dataclass(frozen=True)
class LevelSets:
    lower: tuple
    upper: tuple


class _OrbitWalk:
    def __init__(self, seed: Number, seed_map: MoebiusMap, params: CFParams):
        self.params = params
        self.seed_map = seed_map
        self.values = [seed]
        self.maps: list[MoebiusMap] = []
        self.first_index = {seed: 0}
        self.preperiod: Optional[int] = None
        self.period: Optional[int] = None

    @property
    def periodic(self) -> bool:
        return self.period is not None

    def advance(self) -> Optional[Number]:
        if self.periodic:
            return None
        current = self.values[-1]
        m = branch_map(current, self.params)
        image = f_ab_step(current, self.params)
        self.maps.append(m)
        if image in self.first_index:
            self.preperiod = self.first_index[image]
            self.period = len(self.values) - self.preperiod
            return None
        self.first_index[image] = len(self.values)
        self.values.append(image)
        return image

    def word(self, steps: int) -> MoebiusMap:
        word = self.seed_map
        for m in self.maps[:steps]:
            word = m @ word
        return word

    def report(self, label: SeedLabel, outcome: OrbitOutcome, meeting=None) -> OrbitReport:
        return OrbitReport(
            seed=label,
            orbit=tuple(self.values),
            outcome=outcome,
            maps=tuple(self.maps),
            preperiod=self.preperiod,
            period=self.period,
            meeting=meeting,
        )


def _endpoint_cycle(endpoint: Number, upper: _OrbitWalk, lower: _OrbitWalk,
                    labels: tuple[SeedLabel, SeedLabel], cap: int) -> EndpointCycle:
    meeting = None
    for n in range(cap):
        if n == 0:
            u_new, l_new = upper.values[0], lower.values[0]
        else:
            u_new, l_new = upper.advance(), lower.advance()
        if u_new is not None and u_new in lower.first_index:
            meeting = (upper.first_index[u_new], lower.first_index[u_new], u_new)
        elif l_new is not None and l_new in upper.first_index:
            meeting = (upper.first_index[l_new], lower.first_index[l_new], l_new)
        if meeting is not None:
            break
        if upper.periodic and lower.periodic:
            return EndpointCycle(
                tag=CycleTag.NONE,
                upper=upper.report(labels[0], OrbitOutcome.EVENTUALLY_PERIODIC),
                lower=lower.report(labels[1], OrbitOutcome.EVENTUALLY_PERIODIC),
            )
    else:
        return EndpointCycle(
            tag=CycleTag.UNDETERMINED,
            upper=upper.report(labels[0], OrbitOutcome.CAP_REACHED),
            lower=lower.report(labels[1], OrbitOutcome.CAP_REACHED),
        )

    m, k, end = meeting
    upper_word, lower_word = upper.word(m), lower.word(k)
    if upper_word.apply(endpoint) != end or lower_word.apply(endpoint) != end:
        raise InconsistentCycleError(f"cycle words do not map {endpoint} to the cycle end {end}")
    tag = CycleTag.STRONG if upper_word.same_in_psl(lower_word) else CycleTag.WEAK
    return EndpointCycle(
        tag=tag,
        upper=upper.report(labels[0], OrbitOutcome.CYCLE_MET, end),
        lower=lower.report(labels[1], OrbitOutcome.CYCLE_MET, end),
        cycle_end=end,
        m=m,
        k=k,
    )


def detect_cycles(params: CFParams, cap: Optional[int] = None) -> CycleReport:
    """Iterates Sa, Ta (resp. T^-1 b, Sb) exactly until they meet, recur or hit the cap."""
    cap = settings.CYCLE_CAP if cap is None else cap
    if cap < 1:
        raise InvalidParameterError("cap must be at least 1")
    if isinstance(params.a, TrackedReal) or isinstance(params.b, TrackedReal):
        raise InvalidParameterError("cycle detection requires exact a and b")
    a, b = params.a, params.b
    at_a = _endpoint_cycle(
        a,
        _OrbitWalk(moebius_apply(S, a), S, params),
        _OrbitWalk(moebius_apply(T, a), T, params),
        (SeedLabel.SA, SeedLabel.TA),
        cap,
    )
    at_b = _endpoint_cycle(
        b,
        _OrbitWalk(moebius_apply(T_INV, b), T_INV, params),
        _OrbitWalk(moebius_apply(S, b), S, params),
        (SeedLabel.TINV_B, SeedLabel.SB),
        cap,
    )
    report = CycleReport(params=params, cap=cap, endpoint_a=at_a, endpoint_b=at_b)
    logger.debug("Cycle report for (%s, %s): a=%s b=%s", a, b, at_a.tag.value, at_b.tag.value)
    return report


def _sorted_levels(values) -> tuple:
    finite = {v for v in values if not is_infinite(v)}
    return tuple(sorted(finite, key=cmp_to_key(lambda x, y: int(compare(x, y)))))


def boundary_sets(report: CycleReport) -> LevelSets:
    """Level sets L_{a,b} and U_{a,b}; cycle sides stop short of the cycle end."""
    if report.verdict is not FinitenessVerdict.HOLDS:
        raise UnavailableError("finiteness condition undetermined; level sets unavailable")
    lower, upper = [], []
    for cycle in (report.endpoint_a, report.endpoint_b):
        if cycle.tag is CycleTag.NONE:
            lower.extend(cycle.lower.orbit)
            upper.extend(cycle.upper.orbit)
            continue
        lower.extend(cycle.lower.orbit[:cycle.k])
        upper.extend(cycle.upper.orbit[:cycle.m])
        if cycle.tag is CycleTag.WEAK:
            lower.append(Fraction(0))
            upper.append(Fraction(0))
    return LevelSets(lower=_sorted_levels(lower), upper=_sorted_levels(upper))


# ==================== ATTRACTOR ====================

@dataclass(frozen=True)
class AttractorApprox:
    params: CFParams
    points: np.ndarray = field(repr=False)
    grid: float
    iters: int
    window: float
    stabilized: bool = False
    set_distance: float = float("inf")

    @property
    def lower_points(self) -> np.ndarray:
        return self.points[self.points[:, 1] < self.points[:, 0]]

    @property
    def upper_points(self) -> np.ndarray:
        return self.points[self.points[:, 1] > self.points[:, 0]]

    @property
    def lower_top(self) -> Optional[float]:
        pts = self.lower_points
        return float(pts[:, 1].max()) if len(pts) else None

    @property
    def upper_bottom(self) -> Optional[float]:
        pts = self.upper_points
        return float(pts[:, 1].min()) if len(pts) else None


def chart(values: np.ndarray, window: float) -> np.ndarray:
    """Identity on [-W, W]; beyond it t -> sign(t)(2W - W^2/|t|), so R maps into (-2W, 2W)."""
    values = np.asarray(values, dtype=float)
    outside = np.abs(values) > window
    safe = np.where(outside, values, window)
    squeezed = np.sign(safe) * (2 * window - window * window / np.abs(safe))
    return np.where(outside, squeezed, values)


_GOLDEN_ROTATION = 0.6180339887498949
# nearest-neighbour queries use at most this many points per cloud
_QUERY_SAMPLE = 50000


def _seed_lattice(window: float, grid: float) -> tuple[np.ndarray, np.ndarray]:
    """
    One seed per grid step of the forward coordinate, with backward coordinates
    spread over the window by a golden-ratio rotation. Every seed starts its own
    forward orbit. Seeds within 1 of the diagonal are dropped.
    """
    count = min(int(np.ceil(2 * window / grid)), settings.ATTRACTOR_MAX_SEEDS)
    index = np.arange(count)
    w = -window + 2 * window * (index + 0.5) / count
    u = -window + 2 * window * np.mod(index * _GOLDEN_ROTATION + 0.5, 1.0)
    keep = np.abs(u - w) >= 1.0
    return w[keep], u[keep]


def _vector_step(w: np.ndarray, u: np.ndarray, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    below, above = w < a, w >= b
    middle = ~(below | above)
    shift = np.where(below, 1.0, np.where(above, -1.0, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        w_next = np.where(middle, -1.0 / w, w + shift)
        u_next = np.where(middle, -1.0 / u, u + shift)
    return w_next, u_next


def _cloud(layers) -> np.ndarray:
    layers = list(layers)
    if not layers:
        return np.empty((0, 2))
    w = np.concatenate([layer[0] for layer in layers])
    u = np.concatenate([layer[1] for layer in layers])
    pts = np.column_stack([u, w])
    keep = np.isfinite(pts).all(axis=1) & (np.abs(pts[:, 0] - pts[:, 1]) > 1e-12)
    return pts[keep]


def _structure(points: np.ndarray, levels: Optional[LevelSets], params: CFParams, grid: float) -> np.ndarray:
    approx = AttractorApprox(params, points, grid, 0, settings.ATTRACTOR_WINDOW)
    summary = [approx.lower_top, approx.upper_bottom]
    if levels is not None:
        try:
            bx = extract_boundary_x(approx, levels, params)
            summary += [bx.x_a_minus, bx.x_a_plus, bx.x_b_minus, bx.x_b_plus]
        except ExtractionFailedError:
            summary += [np.nan] * 4
    return np.array([np.nan if v is None else v for v in summary], dtype=float)


def _thin(points: np.ndarray) -> np.ndarray:
    return points[::max(1, len(points) // _QUERY_SAMPLE)]


def point_set_distance(first: np.ndarray, second: np.ndarray, window: float) -> float:
    """
    Trimmed Hausdorff distance between two clouds in chart coordinates, less
    twice their own sampling spacing (never negative).

    Both directions take the (1 - COMPONENT_MIN_SHARE) quantile of the
    nearest-neighbour distances; the spacing is the same quantile of the
    distances from each point of `second` to its nearest other point.
    """
    if len(first) < 2 or len(second) < 2:
        return float("inf")
    q = 1 - settings.COMPONENT_MIN_SHARE
    a, b = chart(first, window), chart(second, window)
    tree_a, tree_b = cKDTree(a), cKDTree(b)
    sample_a, sample_b = _thin(a), _thin(b)
    between = max(
        float(np.quantile(tree_b.query(sample_a)[0], q)),
        float(np.quantile(tree_a.query(sample_b)[0], q)),
    )
    spacing = float(np.quantile(tree_b.query(sample_b, k=2)[0][:, 1], q))
    return max(0.0, between - 2 * spacing)


def attractor_approx(params: CFParams, grid: Optional[float] = None, iters: Optional[int] = None,
                     *, override: bool = False, levels: Optional[LevelSets] = None) -> AttractorApprox:
    """
    Iterates F_{a,b} on a seeded lattice of the window and keeps the last layers.

    The lattice has one seed per grid step, so halving the grid doubles the
    seeds. The returned cloud holds the final ATTRACTOR_TAIL iterates of every
    seed; the ATTRACTOR_TAIL iterates before them form a disjoint earlier cloud.
    The set distance is the larger of the point-set distance between the two
    clouds and the change in lower top, upper bottom and (with level sets) the
    four boundary x-coordinates. The cloud counts as stabilized when it is
    below grid.
    """
    grid = settings.ATTRACTOR_GRID if grid is None else grid
    iters = settings.ATTRACTOR_ITERS if iters is None else iters
    if grid <= 0:
        raise InvalidParameterError("grid must be positive")
    if iters < 0:
        raise InvalidParameterError("iters must be non-negative")
    window = settings.ATTRACTOR_WINDOW
    if levels is None and not override:
        report = detect_cycles(params)
        if report.verdict is not FinitenessVerdict.HOLDS:
            raise UnavailableError("finiteness condition undetermined; pass override to iterate anyway")
        levels = boundary_sets(report)

    a, b = float(to_mpf(params.a)), float(to_mpf(params.b))
    w, u = _seed_lattice(window, grid)
    if iters == 0:
        return AttractorApprox(params, _cloud([(w, u)]), grid, 0, window)

    tail = max(1, min(settings.ATTRACTOR_TAIL, iters // 2))
    layers: deque = deque(maxlen=2 * tail)
    for _ in range(iters):
        w, u = _vector_step(w, u, a, b)
        layers.append((w, u))

    recent = list(layers)
    current = _cloud(recent[-tail:])
    previous = _cloud(recent[:-tail])
    delta = np.abs(_structure(previous, levels, params, grid) - _structure(current, levels, params, grid))
    structural = float(np.nanmax(delta)) if np.isfinite(delta).any() else float("inf")
    distance = max(structural, point_set_distance(previous, current, window))
    stabilized = distance < grid
    logger.info("Attractor for (%s, %s): %d seeds, %d points, set distance %.2e, stabilized=%s",
                params.a, params.b, len(w), len(current), distance, stabilized)
    return AttractorApprox(params, current, grid, iters, window, stabilized, distance)


def count_components(cloud: AttractorApprox, cell: Optional[float] = None,
                     min_share: Optional[float] = None) -> int:
    """Connected components of the charted cloud on a coarse occupancy grid."""
    cell = settings.COMPONENT_CELL if cell is None else cell
    min_share = settings.COMPONENT_MIN_SHARE if min_share is None else min_share
    if len(cloud.points) == 0:
        return 0
    charted = chart(cloud.points, cloud.window)
    bins = int(np.ceil(4 * cloud.window / cell)) + 1
    idx = np.clip(((charted + 2 * cloud.window) / cell).astype(int), 0, bins - 1)
    occupancy = np.zeros((bins, bins), dtype=bool)
    occupancy[idx[:, 0], idx[:, 1]] = True
    occupancy = ndimage.binary_dilation(occupancy)
    labels, count = ndimage.label(occupancy, structure=np.ones((3, 3), dtype=int))
    per_label = np.bincount(labels[idx[:, 0], idx[:, 1]], minlength=count + 1)[1:]
    return int((per_label >= min_share * len(cloud.points)).sum())


def forward_invariance(cloud: AttractorApprox) -> float:
    """Share of F-images of the cloud lying within one grid cell of the cloud."""
    if len(cloud.points) == 0:
        return 0.0
    a, b = float(to_mpf(cloud.params.a)), float(to_mpf(cloud.params.b))
    w_next, u_next = _vector_step(cloud.points[:, 1], cloud.points[:, 0], a, b)
    images = np.column_stack([u_next, w_next])
    images = images[np.isfinite(images).all(axis=1)]
    tree = cKDTree(chart(cloud.points, cloud.window))
    dist, _ = tree.query(chart(images, cloud.window), distance_upper_bound=cloud.grid * np.sqrt(2))
    return float(np.isfinite(dist).sum() / len(cloud.points))


# ==================== BOUNDARY X-COORDINATES ====================

def _level_above(levels: tuple, value) -> Optional[float]:
    above = [v for v in levels if compare(v, value) is Ordering.GREATER]
    return float(to_mpf(above[0])) if above else None


def _level_below(levels: tuple, value) -> Optional[float]:
    below = [v for v in levels if compare(v, value) is Ordering.LESS]
    return float(to_mpf(below[-1])) if below else None


def _band_extreme(points: np.ndarray, low: float, high: float, *, closed_low: bool,
                  take_min: bool, grid: float, reference: float, name: str) -> tuple[float, float]:
    ys = points[:, 1]
    if low is None or high is None:
        mask = np.zeros(len(points), dtype=bool)
    elif closed_low:
        mask = (ys >= low) & (ys < high)
    else:
        mask = (ys > low) & (ys <= high)
    if not mask.any():
        # degenerate pairs: fall back to a thin band around the reference height
        mask = (ys > reference - grid) & (ys <= reference + grid)
    if not mask.any():
        raise ExtractionFailedError(f"no cloud points straddle the levels defining {name}")
    xs = np.sort(points[mask, 0])
    if not take_min:
        xs = xs[::-1]
    gap = abs(xs[min(4, len(xs) - 1)] - xs[0])
    return float(xs[0]), float(gap)


def extract_boundary_x(cloud: AttractorApprox, levels: LevelSets, params: CFParams) -> BoundaryX:
    """
    Reads x_a^-, x_a^+ off the lower component and x_b^-, x_b^+ off the upper one.

    Each estimate is the extreme first coordinate inside the band between the
    consecutive levels around a, 0 (lower) and 0, b (upper), so it approaches
    the vertical segment from inside the attractor.
    """
    a, b = float(to_mpf(params.a)), float(to_mpf(params.b))
    lower, upper = cloud.lower_points, cloud.upper_points
    grid = cloud.grid

    x_a_minus, gap1 = _band_extreme(lower, a, _level_above(levels.lower, params.a), closed_low=False,
                                    take_min=True, grid=grid, reference=a, name="x_a^-")
    x_a_plus, gap2 = _band_extreme(lower, 0.0, _level_above(levels.lower, 0), closed_low=False,
                                   take_min=True, grid=grid, reference=0.0, name="x_a^+")
    x_b_minus, gap3 = _band_extreme(upper, _level_below(levels.upper, 0), 0.0, closed_low=True,
                                    take_min=False, grid=grid, reference=0.0, name="x_b^-")
    x_b_plus, gap4 = _band_extreme(upper, _level_below(levels.upper, params.b), b, closed_low=True,
                                   take_min=False, grid=grid, reference=b, name="x_b^+")
    return BoundaryX(
        x_a_minus=x_a_minus,
        x_a_plus=x_a_plus,
        x_b_minus=x_b_minus,
        x_b_plus=x_b_plus,
        resolution=grid,
        error=max(grid, gap1, gap2, gap3, gap4),
    )
