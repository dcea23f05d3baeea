"""
MMSOUND - Millimeter-Wave Channel Sounder Toolkit
Beam-domain delay processing, path-loss and delay-spread modeling,
multipath extraction and sounding-waveform design.
"""

__version__ = "1.0.0"
__author__ = "MMSOUND Development Team"
