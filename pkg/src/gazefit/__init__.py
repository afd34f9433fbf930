"""Gaze-based face reconstruction at desk scale.

A three-network pipeline (convolutional encoder with activation maps, a
temporal relevance scorer over fixation/activation map pairs, and a
transposed-convolution decoder) plus a procedural face renderer, a simulated
observer, an experiment harness and an interactive hover-session service.
"""

__version__ = "0.1.0"
