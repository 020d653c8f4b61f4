from enum import Enum
from typing_extensions import TypedDict
from typing import Optional, List, Dict, Any


class PolyBasis(Enum):
    MONOMIAL = "monomial"
    HERMITE = "hermite"


class DerivativeKind(Enum):
    ANALYTIC = "analytic"
    NUMERIC = "numeric"


class FnDomain(Enum):
    HALF_LINE = "half_line"  # [0, inf): P, Q, F, h
    REAL_LINE = "real_line"  # all of R: phi


# Structured verification outcomes (serialized as JSON by report_writer)
class TGridSpec(TypedDict):
    tmin: float
    tmax: float
    count: int
    spacing: str  # always "log"


class LocalReport(TypedDict):
    min_margin: float
    argmin_t: float
    t_grid: TGridSpec
    holds: bool


class RegionCell(TypedDict):
    re: float
    im: float
    radius: float
    angle: float
    min_margin: float
    admissible: bool
    error: Optional[str]


class RegionGrid(TypedDict):
    n_r: int
    n_theta: int
    t_grid: TGridSpec
    tolerance: float
    cells: List[RegionCell]
    admissible_fraction: float
    error_cells: int


class ConvexityReport(TypedDict):
    Fpp_positive: bool
    ratio_concave: Optional[bool]
    hessian_psd: bool
    degenerate: bool
    sign_agreement: Optional[bool]
    min_Fpp: float
    max_ratio_second_diff: float
    min_hessian_det: float
    unstable_points: int
    note: str


class LensReport(TypedDict):
    c_P: float
    argsup_t: float
    t_grid: TGridSpec


class RStarReport(TypedDict):
    r_star: float
    sqrt_inf_elasticity_P: float
    sqrt_inv_sup_elasticity_Q: float
    binding: str
    t_grid: TGridSpec


class FlowEndpoints(TypedDict):
    C0: float
    expected_C0: float
    C1: float
    expected_C1: float
    within_tolerance: bool


class FlowReport(TypedDict):
    s_grid: List[float]
    values: List[float]
    increments: List[float]
    min_increment: float
    tolerance: float
    passed: bool
    orders: Dict[str, int]
    endpoints: FlowEndpoints
    flagged: bool
    flag_reason: Optional[str]


class SweepRow(TypedDict):
    eps: float
    margin: float


class SweepReport(TypedDict):
    rows: List[SweepRow]
    second_order_coefficient: Optional[float]
    predicted_coefficient: float
    probe: float
    relative_gap: Optional[float]


class DiscreteMapTable(TypedDict):
    m: int
    values: List[float]
    increments: List[float]
    monotone: bool
    tolerance: float


# Errors
class VerificationError(Exception):
    """Base class for every failure raised by the verification library"""


class SpecParseError(VerificationError, ValueError):
    """A function spec, polynomial literal or complex parameter could not be parsed"""


class DomainError(VerificationError, ValueError):
    """An argument lies outside the domain of the operation"""


class DivergenceError(VerificationError, ArithmeticError):
    """Numeric inversion could not bracket a root"""


class MonotonicityError(VerificationError, ValueError):
    """A function that must be increasing has a nonpositive derivative"""


class ConditionError(VerificationError, ValueError):
    """A precondition of a closed-form condition (e.g. P'' > 0) is violated"""


class GeneratorError(VerificationError, ValueError):
    """Generator ingredients h, phi failed their grid spot-check"""


class QuadratureError(VerificationError, ArithmeticError):
    """Non-finite integrand value at a quadrature node or Monte Carlo draw"""

    def __init__(self, message: str, node: Any = None):
        super().__init__(message)
        self.node = node


class FlowEvaluationError(VerificationError, ArithmeticError):
    """Non-finite value while evaluating the interpolation flow"""

    def __init__(self, message: str, s: Optional[float] = None, x: Any = None):
        super().__init__(message)
        self.s = s
        self.x = x
