"""Radar clutter toolkit: synthetic recordings, automatic relabeling,
accumulation-aware downsampling and toy-scale point-cloud segmentation."""

__version__ = "0.1.0"
