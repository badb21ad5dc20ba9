"""Joint-differentially-private sparse linear contextual bandits (FLIPHAT)."""
__version__ = "0.1.0"

from ._math import clip_scalar, clip_vector, exact_top_s, project_l1, restrict_to_support
from .env import BanditInstance, make_beta_star, make_instance, pull, sample_slate, sample_slates
from .exceptions import CompositionError, ConfigError, InvalidArgumentError, UnsupportedBudgetError
from .ledger import LedgerEntry, PrivacyLedger
from .niht import NihtConfig, NihtFitReport, NoisyIHTRegressor, niht_fit, squared_loss_gradient
from .noise import SeedPath, peeling_noise_scale, sample_gaussian, sample_laplace
from .peeling import PeelResult, PrivacyBudget, peel
from .policy import (FliphatConfig, FliphatPolicy, RegretTrace, episode_of, run_fliphat,
                     schedule_params, select_action)
