"""Regularised Mahalanobis metric learning with sample-complexity tooling."""

from .errors import (DimensionError, EmptyFileError, InputError, MetricBoundsError,
                     NonNumericError, NumericalError, RaggedRowError, SplitError)
from .metric import (Metric, Spectrum, clip_singular_values, format_metric,
                     frobenius_complexity, load_metric, mahalanobis_sq, save_metric,
                     spectral_project, sym_eig)
from .losses import (LossSpec, PairedSample, TripletSample, empirical_distance_error,
                     empirical_triplet_error, pair_distances, pair_loss,
                     pair_loss_subgradient, triplet_loss)
from .optimizer import (DEFAULT_SRM_GRID, FitOptions, SrmParams, erm_fit, make_pairs,
                        objective, objective_gradient, prox_project, select_candidate,
                        shuffled_pairs, srm_candidates, srm_penalty, srm_score, srm_select)
from .netclass import (NetHypothesis, activation, classifier_loss_error, joint_fit,
                       load_net, margin_empirical_error, net_forward, project_l1_ball,
                       save_net, zero_one_error)
from .complexity import (BoundInputs, corollary_bound, lemma1_bound, lemma2_threshold,
                         lemma5_bound, lemma6_bound, rademacher_chain_bound,
                         rademacher_estimate, rademacher_exact, rademacher_sup_closed_form)
from .hardness import (SimplexDistribution, adversarial_sample, bayes_optimal_metric,
                       centroid_gap, coin_failure_bound, coin_mc_failure,
                       empirical_centroid_gap, exact_risk, lowerbound_experiment,
                       simplex_vertices)
from .data_io import (LabeledDataset, SplitSpec, augment_noise, load_csv, psd_factor,
                      save_csv, split, standardize, wishart_covariance)
from .evaluation import knn_error, knn_predict, random_baseline
from .experiment import (CSV_HEADER, ExperimentConfig, load_config, parse_config,
                         run_experiment, write_results)

__version__ = "0.1.0"
