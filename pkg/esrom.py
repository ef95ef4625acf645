#!/usr/bin/env python3
"""
esrom - Entropy-stable reduced-order modeling pipeline

This script runs the offline/online stages of an entropy-stable hyper-reduced
ROM for Burgers' equation and the compressible Euler equations:
- fom:          full-order flux-differencing solve, snapshot recording
- pod:          POD basis with optional entropy-variable enrichment
- hyperreduce:  empirical cubature (volume, stabilizing, viscous, boundary)
- rom:          hyper-reduced Galerkin ROM integration
- diagnose:     error, entropy and point-count report

This is the main entry point that delegates to the esrom package.
"""

import sys

from esrom.cli import main

if __name__ == "__main__":
    sys.exit(main())
