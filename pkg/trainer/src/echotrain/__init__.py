"""Echogram count regressor.

Fine-tunes a ResNet-18 backbone with a two-output non-negative head to
predict per-window (left, right) fish counts from 2-channel echogram slices.
Consumes ECG1 slice files and manifest JSONL produced by the echokit
pipeline; emits predictions JSONL that `echokit eval` scores directly.
"""

__version__ = "0.1.0"
