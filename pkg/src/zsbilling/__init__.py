"""Privacy-preserving smart-meter billing with zero-sum Gaussian noise.

Meters add Gaussian noise to every interval reading and pick the last
interval's noise so the tariff-weighted noise cancels. The provider bills
exactly from noisy data, and can rebill after a tariff change from one
replacement reading.
"""

from .billing import BillRecord, ProviderLedger
from .core_types import (
    BillingPeriodConfig,
    ConsumptionSeries,
    NoisyReading,
    TariffSchedule,
    compute_interval_count,
    validate_tariff_schedule,
)
from .errors import (
    AdjustmentBudgetExhausted,
    BillingError,
    DatasetError,
    DuplicateReading,
    IncompletePeriod,
    LengthMismatch,
    PhaseError,
    PriceNotPositive,
    ReplacementOutOfPlace,
    RoutingError,
    SequenceError,
    ValidationError,
)
from .meter import Phase, SmartMeter
from .network import SimConfig, Simulation, run_scenario_one, run_scenario_two
from .noise import GaussianStream, SeedMaterial, closing_noise, closing_noise_adjusted, derive_stream, next_noise

__version__ = "0.1.0"
