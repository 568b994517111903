# Copyright the ronorm contributors. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

"""Reduced-order neural operators on triangle meshes."""

from ronorm._core import *  # noqa: F401,F403
from ronorm._core import Axis, ConfigError, DataError, Error, NumericsError  # noqa: F401

__version__ = "0.1.0"
