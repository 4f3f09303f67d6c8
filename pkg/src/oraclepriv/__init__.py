"""Oracle-efficient private learning and synthetic data on small boolean domains."""

__version__ = "0.1.0"

from .errors import CapacityError, InputError, UnsupportedError
from .queries import (
    Dataset, DualClass, LossClass, Query, QueryClass, SeparatorSet, WeightedDataset,
    conjunction, decision_list, disjunction, dual_separator, dual_view, eval_on_dataset, eval_query,
    eval_weighted, halfspace, lift_to_loss_class, parity, query_class, separator_set, verify_separator,
)
from .oracles import (
    CertifiableOracle, ExactOracle, FailurePolicy, NoncertifiableOracle, OracleAnswer,
    certifiable_oracle, coupled_run, exact_oracle, noncertifiable_oracle,
)
from .mechanisms import (
    MechanismOutput, PrivacyParams, advanced_budget, compose_basic, exponential_mechanism_baseline,
    gaussian_sample, laplace_sample, report_noisy_max, rspm, rspm_batch, rspm_gaussian,
)
from .prsma import PrsmaConfig, PrsmaOutcome, prsma, prsma_rspm_preset
from .synthgen import (
    SyntheticDataset, ftpl_draw, ftpl_sample, max_query_error, oracle_query, payoff, preset_T,
    private_best_response,
)
from .audit import AuditReport, RegretTrace, dp_ratio_audit, error_table, follow_private_leader, tv_distance
