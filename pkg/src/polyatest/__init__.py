"""Polya tree Bayes factor tests and Local Causal Discovery."""
