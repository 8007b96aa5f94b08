"""Test-wide configuration.

The presence of this file puts the tests directory on sys.path, which is
what lets test modules import the shared _oracles helpers.
"""
