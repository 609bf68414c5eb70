"""Experiment configuration, runners, statistics and the command-line interface."""
