"""Bayes risk of posterior-mean decisions when the decision maker's prior disagrees with the truth."""

__version__ = "0.1.0"

from .errors import (
    DegeneratePrior,
    DisagreementRiskError,
    InfeasibleConfig,
    InvalidPrior,
    InvalidSigma,
    NegativeInput,
    NonCenteredPrior,
    NonIntegrableTail,
)
from .priors import (
    DiscretePrior,
    GaussianMixturePrior,
    TailCondition,
    cdf,
    mean,
    prior_from_dict,
    prior_to_dict,
    tail_constant,
    variance,
)
from .posterior import (
    Likelihood,
    log_marginal_density,
    marginal_score,
    posterior_mean,
    posterior_mean_tweedie,
    posterior_second_moment,
    posterior_tail,
)
from .risk import (
    QuadratureSpec,
    RiskReport,
    risk_monte_carlo,
    risk_quadrature,
    risk_upper_from_moment,
    second_moment_functional,
)
from .bounds import (
    BoundReport,
    check_jensen_denom,
    check_lemma1,
    check_mills,
    check_score_bound,
    check_tail_condition,
)
from .search import SearchConfig, SearchResult, maximize_risk, project_moments, sweep_sigma
