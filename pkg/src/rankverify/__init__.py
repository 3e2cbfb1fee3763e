"""Verifying the ranks of the leading populations in exponential-family data.

Exact selective tests that the observed winner is the best population,
lower confidence bounds on its lead, and stepwise verification of the
leading ranks, with simulation and exhaustive-enumeration tools for
checking their error guarantees.
"""

__version__ = "0.1.0"

from .baselines import SubsetRule, gn_winner_test, gupta_nagel_d, gupta_nagel_subset
from .condlaw import Truncation, build_law, quantile, survival, two_tailed_p
from .core import (
    BradleyTerry,
    IndependentBinomial,
    Multinomial,
    NormalVariance,
    Observation,
    OrderedView,
    interpret_delta,
    make_family,
    order_observation,
)
from .majorization import check_schur_concave, majorizes, transfer
from .procedures import (
    max_p_combine,
    procedure1,
    procedure2,
    procedure2prime,
    procedure3,
    procedure3prime,
    selective_p,
)
