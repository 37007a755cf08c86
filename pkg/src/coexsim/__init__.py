"""coexsim: uplink NR-U / WiFi coexistence simulation with learned
energy-detection thresholds."""

__version__ = "0.1.0"
