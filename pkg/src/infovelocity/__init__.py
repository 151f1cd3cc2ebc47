"""
Relaying bits over long chains of binary symmetric channels at positive
information velocity.
"""

__version__ = "0.1.0"

from .channel import ChainNoise, NoiseTape, derive_key, transmit  # noqa: E402
from .onebit import (OneBitParams, ChainParams, decode_block, run_onebit,  # noqa: E402
                     run_onebit_chained)
from .hamming import redundancy_count  # noqa: E402
from .multibit import (MultiBitParams, MultiBitSchedule, encode_level, decode_level,  # noqa: E402
                       run_multibit, AnytimeEncoder, anytime_encode)
from .analysis import (onebit_error_recursion, multibit_error_recursion,  # noqa: E402
                       repetition_count, velocity_bounds, delay_budget, low_noise_spacing,
                       check_sufficient_conditions)
from .converse import ConverseParams, converse_table, find_envelope_c, verify_envelope  # noqa: E402
from .baseline import BaselineParams, run_p0, run_p1  # noqa: E402
from .simulator import (SimConfig, ErrorEstimate, RunSummary, run_trials, sweep,  # noqa: E402
                        compare_to_bounds)
