"""
Post-quench entanglement dynamics of compact and non-compact bosonic zero modes.
"""

__version__ = '0.1.0'
