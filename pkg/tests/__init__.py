"""Test suite for fusionproc."""

from __future__ import annotations

# Importing the package applies the pydantic forward-reference patch before
# any test module builds settings or schema models on Python 3.12.
import fusionproc  # noqa: F401  # pylint: disable=unused-import
