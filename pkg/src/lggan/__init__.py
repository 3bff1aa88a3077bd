"""Labeled-graph GAN toolkit: generative model, classical baselines,
MMD evaluation, graph kernels, and downstream classification."""

__version__ = "0.1.0"
