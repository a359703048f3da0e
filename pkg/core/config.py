"""
Default parameters shared by every NTMP module.
"""

# Scores and losses
score_clip = 30.0                           # Scores are clipped to [-score_clip, score_clip] before any loss evaluation
default_loss = "logistic"                   # Surrogate used when a config does not name one

# Identifiability / conditioning
hard_gap = 1e-9                             # |pi - alpha| below this is a hard IllConditioned error
margin_epsilon = 0.05                       # Design margin; batches with |pi - alpha| < epsilon are down-weighted
stratify_tau = 0.05                         # Gap under which stratify-and-solve splits the tuples

# Training
epochs = 100
learning_rate = 1e-4
batch_tuples = 64
optimizer = "adam"
adam_betas = (0.9, 0.999)
adam_eps = 1e-8
weight_decay = 0.0
hidden_width = 64                           # Width of the one-hidden-layer scorer
activation = "relu"

# Data generation
default_dim = 2
default_cov_scale = 1.0
unlabeled_per_tuple_instance = 1.0          # n_U = n_T * n * this factor

# Class-prior protocol
proxy_fraction = 0.05                       # Positive proxy = top ceil(0.05 * n_T) tuple instances by margin
score_model_width = 256
score_model_weight_decay = 1e-4             # L2 regularisation of the score model
score_model_epochs = 200
score_model_learning_rate = 1e-2
score_model_batch_size = 256
validation_min_size = 5000                  # Held-out split = max(5000, 10% of U)
validation_fraction = 0.10
cv_folds = 10                               # Fallback when U is too small for a held-out split
sanity_gate_slack = 0.05                    # Warn when pi_hat < pi_lb - slack
n_thresholds = 200
mpe_quantile_low = 0.6
mpe_quantile_high = 0.99
mpe_grid_points = 200
prior_bootstrap_b = 1000
sweep_step = 0.02
sweep_half_width = 0.30
sweep_seeds = 5

# Evaluation
ece_bins = 15
metric_bootstrap_b = 10000
ci_level = 0.95
window_epsilon = 0.02                       # Allowed metric drop inside the robustness window
window_w_star = 0.05                        # Maximal CI width inside the robustness window
temperature_log_bounds = (-3.0, 3.0)
temperature_tol = 1e-5
temperature_grid_points = 61                # Coarse grid that brackets the golden-section search
wilcoxon_exact_max_n = 25
wilcoxon_min_nonzero = 5

# Baselines
llp_entropy_weight = 0.01
llp_prob_clip = 1e-7
kmeans_tol = 1e-8
kmeans_max_iter = 300

# Runner
output_root_env = "NTMP_OUTPUT_ROOT"        # Environment variable overriding the output directory
