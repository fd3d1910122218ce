"""Sonar-clip-to-echogram toolkit.

Converts multi-beam sonar recordings into 2-channel echograms (max intensity
plus normalized lateral position of the brightest beam), derives per-window
left/right fish counts from trajectories, assembles labeled datasets, and
scores count predictions with normalized mean absolute error.
"""

__version__ = "0.1.0"
