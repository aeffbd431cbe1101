"""Balanced dynamic multiple travelling salesman heuristics and tooling.

Submodules: ``core`` (instances, scopes, schedules), ``geometry``,
``assignment``, ``solvers``, ``warehouse``, ``cam`` (cost approximation
models), ``io``, ``harness``, ``cli``.
"""

__version__ = "0.1.0"
