"""Input processing and evaluation toolkit for encoder-decoder video captioning."""

__version__ = "0.1.0"
