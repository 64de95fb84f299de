"""Pointing-jitter analysis for non-line-of-sight ultraviolet scattering links.

The pipeline runs geometry and single-scatter received power
(:mod:`~uvjitter.channel`), a quadratic jitter model
(:mod:`~uvjitter.jitter`), the distribution of the resulting quadratic form
(:mod:`~uvjitter.quadform`), photon counting and OOK error probability
(:mod:`~uvjitter.counting`), with Monte Carlo oracles in
:mod:`~uvjitter.montecarlo`.
"""

from ._accel import default_backend
from .channel import ChannelParams, CommonVolume, LinkGeometry, common_volume, phase_function, received_power
from .counting import (DetectorParams, LinkBudget, ber_jitter, ber_no_jitter, cdf_jitter, lambda_s,
                       pmf_jitter, pmf_poisson)
from .errors import (ConfigError, DegenerateFormError, DomainError, InputError, NonSmoothPointError,
                     PointMassDistribution, QuadratureWarning, SingularMatrixError, UvJitterError)
from .jitter import JitterSpec, QuadraticModel, expand_ftpd, perturbed_power
from .montecarlo import BerEstimate, Histogram, McConfig, mc_ber, mc_power
from .quadform import GammaSeries, PowerDensity, SpectralForm, decompose, fit_gamma_series, sample_power
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
