from .sources import (
    DigitSource,
    FiniteSource,
    PeriodicSource,
    GeneratedSource,
    from_rational,
    to_value,
    approx_value,
    canonical,
    complement,
    make_generated,
    parse_source,
)
from .stats import (
    DigitStats,
    FrequencyLimits,
    stats_at,
    frequency_limits,
    run_length,
    ones_count,
    ones_prefix,
    ones_in_base3,
    index_digits,
)
from .generated_sources import register_family, get_family, list_families
