#!/usr/bin/env python3
"""
Handset Antenna Simulator
Main entry point for handheld UE antenna studies including:
- Element pattern cuts and full-sphere gain maps
- Antenna imbalance and composite coverage statistics
- Element-wise blockage Monte-Carlo runs
- Pair combining studies and polarization maps
"""

import sys
from pathlib import Path

# Add src directory to Python path for package imports
sys.path.insert(0, str(Path(__file__).parent / 'src'))

try:
    from handset_antenna_sim.cli import main
except ImportError as e:
    print(f"Error importing modules: {e}")
    print("Make sure all required dependencies are installed:")
    print("  conda env create -f environment.yaml")
    sys.exit(1)


if __name__ == "__main__":
    sys.exit(main())
