"""Python veneer over the compiled _coilsim module."""

import os
import sys

# In a built wheel the extension sits next to this file; in a CMake dev tree
# its directory is provided via COILSIM_MODULE_DIR.
_mod_dir = os.environ.get("COILSIM_MODULE_DIR")
if _mod_dir and _mod_dir not in sys.path:
    sys.path.insert(0, _mod_dir)

from _coilsim import *  # noqa: F401,F403
from _coilsim import __version__  # noqa: F401
