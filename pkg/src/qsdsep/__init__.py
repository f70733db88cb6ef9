"""Quantum state diffusion for a continuously measured qubit.

Simulates a two-level system under weak continuous measurement of one or two
non-commuting observables, as discrete Kraus-map chains and as the equivalent
Ito diffusions in several coordinate charts, together with Fokker-Planck
solutions and pathwise stochastic entropy production.
"""

from .bloch import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    BlochState,
    bloch_to_matrix,
    matrix_to_bloch,
    purity,
    von_neumann_entropy,
    von_neumann_entropy_from_norm,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleStats,
    HistogramComparison,
    PathBatch,
    born_fractions,
    ensemble_stats,
    histogram_vs_pdf,
    run_ensemble,
    run_paths,
    stats_to_csv,
    stats_to_json,
    trajectories_to_csv,
    vn_entropy_curves,
)
from .entropy import (
    EntropyLedger,
    LedgerBatch,
    SepSpec,
    asymptotic_Ytheta_logp,
    asymptotic_mean_rate,
    asymptotic_y_logp,
    discrete_ledger_batch,
    gibbs_entropy,
    kl_divergence,
    ledger_from_trajectory,
    ledgers_from_csv,
    ledgers_to_csv,
    phase_cell_halfwidth,
    sep_2d_asymptotic,
    sep_discrete_oracle,
    sep_increment_general,
    sep_rz,
    sep_stationary_shortcut,
    sep_theta,
    sep_y,
)
from .errors import ConfigError, Error, NumericsError
from .fpe import (
    Grid1D,
    PdfField,
    StationaryThetaPdf,
    complete_elliptic_E,
    default_y_halfwidth,
    evolve_fpe,
    field_from_binary,
    field_from_csv,
    field_to_binary,
    field_to_csv,
    gaussian_profile,
    logpdf_lookup,
    rz_logpdf_from_y_field,
    stationary_moments,
    stationary_theta_pdf,
    uniform_profile,
)
from .kraus import (
    MeasurementChannel,
    KrausStepOutcome,
    apply_map,
    discrete_step,
    kraus_pair,
    log_prob_ratio,
    reverse_kraus,
    run_discrete_chain,
    run_rz_chains,
    step_probabilities,
)
from .sde import (
    Domain,
    ItoProcessSpec,
    StepperConfig,
    TrajectoryRecord,
    euler_maruyama_step,
    simulate_bloch_full,
    simulate_trajectory,
    spec_rz,
    spec_theta,
    spec_xz,
    spec_y,
    spec_Ytheta,
)
from .streams import trajectory_stream

__version__ = "0.1.0"
