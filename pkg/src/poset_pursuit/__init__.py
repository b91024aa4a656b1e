"""Pursuit-evasion on finite topological spaces.

The package decides which side wins the invisible-evader pursuit game
on a finite T0 space, synthesizes certificates for the winner, and
re-verifies every certificate it emits.
"""

__version__ = "0.1.0"
