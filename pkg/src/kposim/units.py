"""Unit conventions and conversions.

All rates and angular frequencies are stored internally in rad/us, time in
us.  Every user-facing value (configs, CLI, CSV output) is the cyclic
frequency (value / 2pi) in MHz, matching the usual spectroscopy axis
labels.  1 MHz * 1 us = 1 cycle, so the conversion is a bare factor 2pi.
"""

import math

TWO_PI = 2.0 * math.pi

# Planck constant / 2pi, J*s (2018 CODATA exact value)
HBAR_JS = 1.054571817e-34

# rad/us -> rad/s
RAD_PER_US_TO_RAD_PER_S = 1.0e6


def mhz_to_angular(value_over_2pi_mhz: float) -> float:
    """Cyclic frequency in MHz (i.e. value/2pi) to angular frequency in rad/us."""
    return TWO_PI * value_over_2pi_mhz


def angular_to_mhz(value_rad_per_us: float) -> float:
    """Angular frequency in rad/us to cyclic frequency in MHz (value/2pi)."""
    return value_rad_per_us / TWO_PI


def ghz_to_angular(value_over_2pi_ghz: float) -> float:
    """Cyclic frequency in GHz to angular frequency in rad/us."""
    return TWO_PI * 1.0e3 * value_over_2pi_ghz
