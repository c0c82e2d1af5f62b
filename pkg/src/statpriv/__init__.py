"""Statistical-privacy curves for property queries.

Exact and approximate (eps, delta) curves under no mechanism, subsampling,
Laplace noise and Gaussian noise, with differential-privacy baselines and
utility-loss calibration.
"""

__version__ = "0.1.0"

from .distributions import ContinuousKernel  # noqa: E402
from .curve import (  # noqa: E402
    DiscreteDist,
    MixtureDist,
    PrivacyCurve,
    coarsen,
    curve,
    delta_discrete,
    delta_mixture,
    total_variation,
)
from .query import (  # noqa: E402
    ConditionalPair,
    Gaussian,
    Laplace,
    PropertyQuery,
    Pure,
    Subsample,
    noisy_pair,
    pure_pair,
    subsample_pair,
)
from .analytic import (  # noqa: E402
    delta_gaussian_approx,
    delta_pure_analytic,
    delta_subsample_analytic,
    dp_gaussian_baseline,
    dp_laplace_baseline,
    dp_subsample_amplify,
    laplace_stat_epsilon,
    thresholds,
)
