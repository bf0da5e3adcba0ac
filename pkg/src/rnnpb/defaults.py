"""Published network parameters used as library and CLI defaults."""

# name -> value of the published reference configuration
PUBLISHED_DEFAULTS = {
    "eta_init": 2.0e-6,
    "eta_max": 1.0e-4,
    "eta_min": 1.0e-8,
    "eta_r": 8.0e-3,
    "M_gamma": 0.001,
    "hidden_dim": 100,
    "pb_dim": 2,
    "xi_minus": 0.999999,
    "xi_plus": 1.000001,
}

# not published; chosen for this library
DEFAULT_EPOCHS = 20000
DEFAULT_CONVERGENCE_MSE = 1.0e-6
DEFAULT_STOP_THRESHOLD = 1.0e-4
DEFAULT_STOP_PATIENCE = 100
DEFAULT_WINDOW = 100
DEFAULT_MAX_ITERS = 5000

# Rates for desk-scale runs on synthetic corpora (T ~ 200, a few thousand
# epochs). The published rates barely move the weights within that budget.
DESK_TRAINER = {
    "eta_init": 1.0e-3,
    "eta_min": 1.0e-6,
    "eta_max": 1.0e-2,
    "xi_plus": 1.01,
    "xi_minus": 0.9,
    "M_gamma": 1.0,
}
