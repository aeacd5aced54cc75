from .access import (
    AccessModelParams,
    access_groups,
    f_irr_bruteforce,
    f_irr_conventional,
    f_irr_engine,
    f_irr_structure_aware,
    irregular_reduction,
)
from .normal import norm_ppf
from .sync import (
    CycleTimeModel,
    MonteCarloResult,
    barrier_sync_time,
    barrier_wall_time,
    empirical_max_quantile_fraction,
    expected_max_normal_mc,
    expected_walltimes,
    max_quantile_probability,
    montecarlo_walltimes,
    window_sums,
    xi_max,
)
