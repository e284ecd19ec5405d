"""Valence classification from multichannel EEG band powers."""

__version__ = "0.1.0"
