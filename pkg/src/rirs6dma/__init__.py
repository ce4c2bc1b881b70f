"""Two-timescale simulator and optimizer for a rotatable-surface assisted
movable-antenna downlink: statistical channel synthesis, long-timescale
placement/rotation/reflection design, short-timescale beamforming, and the
benchmark harness reproducing the reference rate comparisons."""

__version__ = "0.1.0"
