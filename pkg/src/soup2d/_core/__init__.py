"""Walk-kernel backend selection.

Prefers the compiled Cython extension; falls back to the pure-Python
implementation when the extension is not built.  Both backends consume the
same decision sequence from a given stream, so results are identical either
way (see tests/test_kernels.py).  Set SOUP2D_FORCE_PYTHON_KERNELS=1 to force
the fallback.
"""

import os

from . import pywalks

if os.environ.get("SOUP2D_FORCE_PYTHON_KERNELS"):
    _impl = pywalks
    BACKEND = "python"
else:
    try:
        from . import _walks as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = pywalks
        BACKEND = "python"

STATUS_EXITED = pywalks.STATUS_EXITED
STATUS_KILLED = pywalks.STATUS_KILLED
STATUS_MAXSTEPS = pywalks.STATUS_MAXSTEPS
STATUS_LEFT_GRID = pywalks.STATUS_LEFT_GRID

sim_srw_exit = _impl.sim_srw_exit
sim_weighted_exit = _impl.sim_weighted_exit
sim_massive = _impl.sim_massive
sim_massive_htransform = _impl.sim_massive_htransform
sim_torus_cover = _impl.sim_torus_cover
sim_visit_chain = _impl.sim_visit_chain
