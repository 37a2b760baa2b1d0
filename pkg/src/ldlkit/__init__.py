"""ldlkit: symbolic and numeric workbench for low-density-limit quantum
stochastic calculus."""

__version__ = "0.1.0"
