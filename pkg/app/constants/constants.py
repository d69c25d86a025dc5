"""Constants for synthesis outcomes, bracket statuses, LP statuses, dual-ball kinds, CLI commands and numeric policies."""

from enum import Enum, IntEnum


class SynthesisStatus(str, Enum):
    """Enumeration of weight synthesis outcomes."""

    feasible = "feasible"
    infeasible = "infeasible"
    unknown = "unknown"


class BracketStatus(str, Enum):
    """Enumeration of constant bracket statuses."""

    certified = "certified"
    unknown = "unknown"


class LinearProgramStatus(str, Enum):
    """Enumeration of simplex solver outcomes."""

    optimal = "optimal"
    infeasible = "infeasible"
    unbounded = "unbounded"
    iteration_limit = "iteration_limit"


class DualBallKind(str, Enum):
    """Shapes of Köthe dual balls of weighted spaces."""

    box = "box"            # dual of L^1(a): |g| <= a
    lp_ball = "lp_ball"    # dual of L^p(a), 1 < p < inf
    l1_ball = "l1_ball"    # dual of L^inf(a)


class OracleKind(str, Enum):
    """How a separation oracle searched for violations."""

    eigen = "eigen"
    coordinate = "coordinate"
    multistart = "multistart"


class CertificateKind(str, Enum):
    """Enumeration of certificate kinds."""

    domination = "domination"
    pietsch = "pietsch"


class CertificateMethod(str, Enum):
    """How a certificate was produced."""

    cutting_plane = "cutting_plane"
    schur = "schur"
    zero = "zero"


class ConjugateStatus(str, Enum):
    """Enumeration of conjugate family synthesis outcomes."""

    conjugate = "conjugate"
    not_conjugatable = "not_conjugatable"
    unknown = "unknown"


class EndoVariant(str, Enum):
    """Variants of the single-weight endomorphism program."""

    single = "single"
    l2 = "l2"
    all_p = "all_p"


class CommandName(str, Enum):
    """Enumeration of CLI commands."""

    rho = "rho"
    lambda_ = "lambda"
    dominate = "dominate"
    endo = "endo"
    conjugate = "conjugate"
    kernel = "kernel"
    counterexample = "counterexample"
    verify = "verify"


class ExitCode(IntEnum):
    """Process exit codes of the CLI."""

    ok = 0
    input_error = 1
    unknown = 2
    infeasible = 3
    audit_failed = 4


# Krivine's upper bound for the real Grothendieck constant
KRIVINE_BOUND = 1.783

# Duplicate cut rejection threshold on cosine similarity
DUPLICATE_CUT_COSINE = 1.0 - 1e-10

# Allowed relative drift of empirical embedding constants
EMBEDDING_DRIFT = 0.10

PROBLEM_FILE_VERSION = "1"

# Names of the inequality each reported constant certifies
ANCHOR_RHO = "p-regular norm: ||(sum |T x_i|^p)^(1/p)|| <= C ||(sum |x_i|^p)^(1/p)||"
ANCHOR_LAMBDA = "lattice p-summing norm: ||(sum |T x_i|^p)^(1/p)|| <= C sup_(a in B_lp') ||sum a_i x_i||"
ANCHOR_DOMINATION = "domination: <|Tf|^p, y*> <= C^p <|f|^p, z*>"
ANCHOR_PIETSCH = "Pietsch domination: <|Tf|^p, y*> <= C^p int |<f, x'>|^p d eta"
ANCHOR_ENDO = "single weight: ||T||_(L^p(g) -> L^p(g)) <= 2^(1/p) C"
ANCHOR_CONJUGATE = "conjugate weights: ||T||_(L^p(w) -> L^p(v)) <= C for every v"
ANCHOR_KERNEL = "kernel integration map into L^p(m_V)"
ANCHOR_COUNTEREXAMPLE = "minimal mass of an extension weight ~ n^(1 - p/q)"
