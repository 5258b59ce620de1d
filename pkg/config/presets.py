"""
Experiment presets: config templates for the standard parameter sets.

Each preset is a plain dict in the JSON config schema; ``get_preset`` returns a
deep copy so callers can adjust it before validation.

The grid solver defaults to first-order upwind fluxes; presets that compare grid
densities against closed forms select the exponentially fitted
``scharfetter_gummel`` scheme, which is exact for linear drifts at cell centres.
"""
import copy
from typing import Dict, Any, List

# OU process f = -0.5 x, G = 0.4 I: stationary covariance 0.16 I
OU_STATIONARY = {
    'experiment': 'stationary',
    'name': 'ou-stationary',
    'drift': {'name': 'ou_linear', 'params': {'c': 0.5}},
    'diffusion': {'name': 'constant_isotropic_diffusion', 'params': {'omega': 0.4}},
    'initial': {'kind': 'gaussian', 'center': [0.0, 0.0], 'scale': 1.0},
    'numerics': {'dt': 0.01, 'T': 20.0, 'N': 20000, 'kernel_variance': 0.01, 'tol': 1e-6,
                 'scheme': 'scharfetter_gummel'},
    'grid': {'x_min': -2.0, 'x_max': 2.0, 'n_x': 80, 'y_min': -2.0, 'y_max': 2.0, 'n_y': 80}
}

OU_THM1 = {
    'experiment': 'verify',
    'claim': 'thm1_decay',
    'name': 'ou-thm1',
    'drift': {'name': 'ou_linear', 'params': {'c': 0.5}},
    'diffusion': {'name': 'constant_isotropic_diffusion', 'params': {'omega': 0.4}},
    'initial': {'kind': 'gaussian', 'center': [2.0, 2.0], 'scale': 0.5},
    'initial_alt': {'kind': 'gaussian', 'center': [-2.0, -2.0], 'scale': 0.5},
    'numerics': {'dt': 0.01, 'T': 10.0, 'n_pairs': 500, 'record_every': 0.1}
}

# Globally contracting Hopfield network, c ~ 0.5, with G(x) = 0.4 diag(sin x1, cos x2)
HOPFIELD_GLOBAL_THM1 = {
    'experiment': 'verify',
    'claim': 'thm1_decay',
    'name': 'hopfield-global-thm1',
    'drift': {'name': 'hopfield_global', 'params': {'beta': 2.0, 'u': [0.2, 0.25]}},
    'diffusion': {'name': 'paper_inhomogeneous_diffusion', 'params': {'a': 0.4}},
    'initial': {'kind': 'gaussian', 'center': [2.0, 2.0], 'scale': 0.5},
    'initial_alt': {'kind': 'gaussian', 'center': [-2.0, -2.0], 'scale': 0.5},
    'numerics': {'dt': 0.01, 'T': 10.0, 'n_pairs': 500, 'record_every': 0.1}
}

# f = -x with G = 0.4 I against Q = 0.2 I: chi^2 = 0.08, stationary W2^2 = 0.04
OU_PROP1 = {
    'experiment': 'verify',
    'claim': 'prop1_chi_bound',
    'name': 'ou-prop1',
    'drift': {'name': 'ou_linear', 'params': {'c': 1.0}},
    'diffusion': {'name': 'constant_isotropic_diffusion', 'params': {'omega': 0.4}},
    'alt_diffusion': {'name': 'constant_isotropic_diffusion', 'params': {'omega': 0.2}},
    'initial': {'kind': 'gaussian', 'center': [0.0, 0.0], 'scale': 1.0},
    'numerics': {'dt': 0.01, 'T': 20.0, 'N': 2000, 'kernel_variance': 0.01, 'record_every': 0.5},
    'grid': {'x_min': -2.0, 'x_max': 2.0, 'n_x': 80, 'y_min': -2.0, 'y_max': 2.0, 'n_y': 80}
}

# threshold (d/2)(omega/r*)^2 = 0.16 <= c* = 0.5
OU_PROP2 = {
    'experiment': 'verify',
    'claim': 'prop2_mass_sink',
    'name': 'ou-prop2',
    'drift': {'name': 'ou_linear', 'params': {'c': 0.5}},
    'diffusion': {'name': 'constant_isotropic_diffusion', 'params': {'omega': 0.4}},
    'geometry': {'x_star': [0.0, 0.0], 'r_star': 1.0, 'r_max': 1.0, 'start_radius': 2.5},
    'numerics': {'dt': 0.01, 'T': 10.0, 'N': 2000, 'record_every': 0.1, 'scheme': 'scharfetter_gummel'},
    'grid': {'x_min': -4.0, 'x_max': 4.0, 'n_x': 80, 'y_min': -4.0, 'y_max': 4.0, 'n_y': 80}
}

# Multistable network: balls of radius 0.8 around the deepest and shallowest pattern minima
HOPFIELD_MULTISTABLE_THM2 = {
    'experiment': 'verify',
    'claim': 'thm2_concentration',
    'name': 'hopfield-multistable-thm2',
    'drift': {'name': 'hopfield_multistable', 'params': {'beta': 2.0, 'u': [1.0, 3.0]}},
    'diffusion': {'name': 'constant_isotropic_diffusion', 'params': {'omega': 0.4}},
    'initial': {'kind': 'uniform_box', 'center': [0.0, 0.0], 'scale': 4.5},
    'geometry': {'r': 0.8},
    'numerics': {'dt': 0.01, 'T': 20.0, 'N': 2000, 'kernel_variance': 0.01, 'tol': 1e-6, 'record_every': 0.5,
                 'scheme': 'scharfetter_gummel'},
    'grid': {'x_min': -5.0, 'x_max': 5.0, 'n_x': 100, 'y_min': -5.0, 'y_max': 5.0, 'n_y': 100}
}

HOPFIELD_GLOBAL_DEMO = {
    'experiment': 'hopfield-demo',
    'name': 'hopfield-global-demo',
    'drift': {'name': 'hopfield_global', 'params': {'beta': 2.0, 'u': [0.2, 0.25]}},
    'diffusion': {'name': 'paper_inhomogeneous_diffusion', 'params': {'a': 0.4}},
    'initial': {'kind': 'gaussian', 'center': [2.0, 2.0], 'scale': 0.5},
    'initial_alt': {'kind': 'gaussian', 'center': [-2.0, -2.0], 'scale': 0.5},
    'numerics': {'dt': 0.01, 'T': 10.0, 'N': 2000, 'kernel_variance': 2.0, 'tol': 1e-6},
    'grid': {'x_min': -4.0, 'x_max': 4.0, 'n_x': 80, 'y_min': -4.0, 'y_max': 4.0, 'n_y': 80}
}

# Tilted double well: stationary density exp(-2E/omega^2) / Z
DOUBLE_WELL_FPE = {
    'experiment': 'fpe-solve',
    'name': 'double-well-fpe',
    'drift': {'name': 'double_well_gradient', 'params': {'tilt': 0.1}},
    'diffusion': {'name': 'constant_isotropic_diffusion', 'params': {'omega': 0.8}},
    'initial': {'kind': 'gaussian', 'center': [0.0, 0.0], 'scale': 1.0},
    'numerics': {'tol': 1e-7, 'scheme': 'scharfetter_gummel'},
    'grid': {'x_min': -2.5, 'x_max': 2.5, 'n_x': 50, 'y_min': -2.5, 'y_max': 2.5, 'n_y': 50}
}

LEMMA_REPORT = {
    'experiment': 'lemma-report',
    'name': 'lemma-report',
    'geometry': {'r': 1.0, 'n_nodes': 256}
}

PRESETS: Dict[str, Dict[str, Any]] = {
    'ou_stationary': OU_STATIONARY,
    'ou_thm1': OU_THM1,
    'hopfield_global_thm1': HOPFIELD_GLOBAL_THM1,
    'ou_prop1': OU_PROP1,
    'ou_prop2': OU_PROP2,
    'hopfield_multistable_thm2': HOPFIELD_MULTISTABLE_THM2,
    'hopfield_global_demo': HOPFIELD_GLOBAL_DEMO,
    'double_well_fpe': DOUBLE_WELL_FPE,
    'lemma_report': LEMMA_REPORT,
}


def preset_names() -> List[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> Dict[str, Any]:
    if name not in PRESETS:
        raise KeyError(f"Unknown preset '{name}', expected one of {preset_names()}")
    return copy.deepcopy(PRESETS[name])
