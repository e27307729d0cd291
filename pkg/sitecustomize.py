"""Interpreter-wide customizations for the fusionproc test environment."""

from __future__ import annotations

# Importing the package patches pydantic v1 forward-reference evaluation so
# settings and schema models load on Python 3.12.
import fusionproc  # noqa: F401  # pylint: disable=unused-import
