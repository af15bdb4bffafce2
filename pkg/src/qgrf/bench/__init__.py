"""Experiment harness: Frobenius benchmark, diffusion, clustering, mesh regression."""
