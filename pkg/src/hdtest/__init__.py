"""Two-sample mean tests for high-dimensional, low-sample-size data."""
from .datagen import CovSpec, DistSpec, MeanPattern, Sampler, build_cov, draw_sample, seeded_stream
from .errors import HDTestError
from .estimators import cdm_estimates, k1_hat, nr_eigenvalues, nr_eigenvectors, nr_scores, w_stat
from .matcore import PsdMatrix, Sample, load_csv
from .modelcheck import ModelDiagnosis, diagnose, kappa, select_k, sse_check
from .procedures import (
    MatrixChoice,
    TestOutcome,
    test_adaptive,
    test_chi2,
    test_naive,
    test_normal,
    test_sse,
)
from .simharness import ExperimentGrid, GridResult, run_grid

__version__ = "0.1.0"
