"""Exact and numerical tools for rigid Lie foliations with dense leaves."""
from __future__ import annotations

__version__ = "0.1.0"

from .exactnum import QQ, QCBRT2, QSQRT2, CubicElement, ExactMatrix, QuadElement  # noqa: E402
from .liealg import LieAlgebra  # noqa: E402

__all__ = ["QQ", "QSQRT2", "QCBRT2", "QuadElement", "CubicElement", "ExactMatrix", "LieAlgebra", "__version__"]
