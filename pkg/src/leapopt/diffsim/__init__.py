"""Differentiable simulation kernels: forward-mode duals, particle systems,
contact models and discrete adjoints."""
