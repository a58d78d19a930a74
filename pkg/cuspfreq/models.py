from pydantic import BaseModel, Field
from typing import Optional
from enum import Enum

# ==================== ENUMERATIONS ====================

class Flavor(str, Enum):
    CLASSICAL = "classical"
    AB = "ab"

class SeedLabel(str, Enum):
    SA = "Sa"
    TA = "Ta"
    TINV_B = "Tinv_b"
    SB = "Sb"

class OrbitOutcome(str, Enum):
    EVENTUALLY_PERIODIC = "eventually-periodic"
    CYCLE_MET = "cycle-met"
    CAP_REACHED = "cap-reached"

class CycleTag(str, Enum):
    NONE = "none"
    STRONG = "strong"
    WEAK = "weak"
    UNDETERMINED = "undetermined"

class FinitenessVerdict(str, Enum):
    HOLDS = "holds"
    UNDETERMINED = "undetermined"

class ThresholdVerdict(str, Enum):
    BELOW_LOWER = "below-lower"
    ABOVE_UPPER = "above-upper"
    INDETERMINATE_BAND = "indeterminate-band"

class ClassificationTag(str, Enum):
    FREQUENCY_0 = "frequency-0"
    FREQUENCY_1 = "frequency-1"
    INTERMEDIATE = "intermediate"
    UNDETERMINED = "undetermined"

class TrendTag(str, Enum):
    CONVERGENT = "convergent"
    DIVERGING = "diverging"
    OSCILLATING = "oscillating"

class ProfileStatus(str, Enum):
    COMPLETE = "complete"
    PARTIAL = "partial"
    DEGENERATE_RATIONAL = "degenerate-rational"

class OutputFormat(str, Enum):
    JSON = "json"
    JSONL = "jsonl"
    CSV = "csv"

def height_key(d: float) -> str:
    """Dictionary key used for per-height and per-xi statistics."""
    return f"{float(d):g}"

# ==================== NATURAL EXTENSION ====================

class BoundaryX(BaseModel):
    """x-coordinates of the vertical attractor segments next to a, 0 and b."""
    x_a_minus: float = Field(..., example=1.62)
    x_a_plus: float = Field(..., example=2.62)
    x_b_minus: float = Field(..., example=-1.62)
    x_b_plus: float = Field(..., example=-2.62)
    resolution: float = Field(..., example=1e-3)
    error: float = Field(..., description="Declared error bar of each estimate")

    def signs_hold(self) -> bool:
        return (self.x_a_minus > 1 and self.x_a_plus > 1
                and self.x_b_minus < -1 and self.x_b_plus < -1)

class AttractorSummary(BaseModel):
    a: str
    b: str
    grid: float
    iters: int
    points: int
    stabilized: bool
    set_distance: float
    components: int
    lower_top: Optional[float] = None
    upper_bottom: Optional[float] = None
    levels: dict[str, list[str]]
    boundary_x: Optional[BoundaryX] = None
    forward_invariance: float

# ==================== GEODESICS ====================

class ExcursionThresholds(BaseModel):
    """Cut-offs on |a_j| that decide whether a return reaches height d."""
    d: float
    lower_positive: float
    upper_positive: float
    lower_negative: float
    upper_negative: float

class ExcursionRecord(BaseModel):
    """One return of a reduced geodesic to the cross-section."""
    index: int
    quotient: int
    apex_height: float
    cross_height: float
    return_time: float
    time_above: dict[str, float]
    verdicts: Optional[dict[str, ThresholdVerdict]] = None
    oracle_time: Optional[dict[str, float]] = None
    oracle_components: Optional[dict[str, int]] = None

class SimulationSummary(BaseModel):
    a: str
    b: str
    x: str
    returns: int
    reduction_steps: int
    calibrated: bool
    kappa_observed: float
    kappa_fixture: Optional[float] = None
    cross_section_floor: float
    cross_section_ceiling: float
    closed_form_gap: Optional[float] = None
    stopped: Optional[str] = None

# ==================== FREQUENCY ANALYSIS ====================

class Checkpoint(BaseModel):
    n: int
    A: float
    A_xi: dict[str, float]
    S: Optional[float] = None
    I: dict[str, float] = {}
    I_oracle: Optional[dict[str, float]] = None
    oracle_error: Optional[dict[str, float]] = None
    j_lower: dict[str, int] = {}
    j_upper: dict[str, int] = {}
    j_oracle: Optional[dict[str, int]] = None
    tail_log: dict[str, float] = {}
    tail_time: dict[str, float] = {}

class FrequencyProfile(BaseModel):
    """Checkpointed averages for one input number and parameter pair."""
    x: str
    flavor: Flavor
    a: Optional[str] = None
    b: Optional[str] = None
    status: ProfileStatus
    d_list: list[float]
    xi_list: list[float]
    checkpoints: list[Checkpoint]
    calibrated: bool = False
    cross_section_floor: Optional[float] = None
    cross_section_ceiling: Optional[float] = None
    reduction_steps: Optional[int] = Field(
        None, description="Steps before the first counted return; A_N still starts at the first quotient of x")
    stopped: Optional[str] = None

class Classification(BaseModel):
    tag: ClassificationTag
    witness: dict[str, float | str] = {}
    sampled_d: list[float] = []
    note: str = "frequency-1 evidence is sampled over the configured d list only"

class KhintchinEstimate(BaseModel):
    schedule: list[int]
    values: list[float]
    estimate: float
    trend: TrendTag

# ==================== CALIBRATION ====================

class CalibrationFixture(BaseModel):
    """Persisted calibration statistics for one parameter pair."""
    version: int = 1
    a: str
    b: str
    boundary_x: Optional[BoundaryX] = None
    kappa: Optional[float] = None
    cross_section_floor: Optional[float] = None
    cross_section_ceiling: Optional[float] = None
    upper_slack_c: Optional[float] = None
    lower_margin: Optional[float] = None
    surds: int
    returns: int
    seed: int

# ==================== CLI DOCUMENTS ====================

class RunConfig(BaseModel):
    """Validated flags of a single CLI invocation."""
    subcommand: str
    a: Optional[str] = None
    b: Optional[str] = None
    x: Optional[str] = None
    u: Optional[str] = None
    n: Optional[int] = Field(None, ge=1)
    d_list: list[float] = []
    xi_list: list[float] = []
    grid: Optional[float] = Field(None, gt=0)
    iters: Optional[int] = Field(None, ge=0)
    cap: Optional[int] = Field(None, ge=1)
    oracle_step: Optional[float] = Field(None, gt=0)
    checkpoints: Optional[list[int]] = None
    seed: int = 0
    output_format: OutputFormat = OutputFormat.JSON
    fixture_dir: str
    options: dict[str, str | int | float | bool | list[int] | None] = {}

class ConvergentOut(BaseModel):
    index: int
    p: str
    q: str

class ExpansionDocument(BaseModel):
    flavor: Flavor
    a: Optional[str] = None
    b: Optional[str] = None
    x: str
    quotients: list[int]
    terminated: bool
    precision_exhausted: bool = False
    convergents: Optional[list[ConvergentOut]] = None

class ConvertDocument(BaseModel):
    x: str
    classical: list[int]
    alternating: list[int]
    minus_one_one: list[int]
    identical: bool
    modified: Optional[dict[str, list[int]]] = None

class OrbitOut(BaseModel):
    seed: SeedLabel
    orbit: list[str]
    outcome: OrbitOutcome
    preperiod: Optional[int] = None
    period: Optional[int] = None

class EndpointCycleOut(BaseModel):
    tag: CycleTag
    cycle_end: Optional[str] = None
    m: Optional[int] = None
    k: Optional[int] = None

class OrbitDocument(BaseModel):
    a: str
    b: str
    cap: int
    verdict: FinitenessVerdict
    endpoint_a: EndpointCycleOut
    endpoint_b: EndpointCycleOut
    orbits: list[OrbitOut]
    levels: Optional[dict[str, list[str]]] = None

class ReduceDocument(BaseModel):
    a: str
    b: str
    u: str
    w: str
    reduced_u: str
    reduced_w: str
    steps: int
    word: list[int]
    cross_section: list[float]

class ConstructionDocument(BaseModel):
    kind: str
    quotients: list[int]
    convergents: list[ConvergentOut]
    eps: Optional[str] = None
    certificate: Optional[list[bool]] = None
    x: Optional[str] = None

class FrequencyDocument(BaseModel):
    profile: FrequencyProfile
    classification: Classification
    khintchin: Optional[KhintchinEstimate] = None
    tol: float
    seed: int
