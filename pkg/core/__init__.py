"""
symseek - Core Modules
Exact search for Lie symmetries of rational second-order ODEs
"""

__version__ = "1.0.0"
__author__ = "symseek"
