import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from util import make_instance  # noqa: E402


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so timed tests measure steady state."""
    from depthpose import solvers

    rng = np.random.default_rng(0)
    i3 = make_instance(rng, n=3, s=1.3, u=0.2, v=-0.1)
    i4 = make_instance(rng, n=4, s=1.3, u=0.2, v=-0.1, f1=700.0, f2=900.0)
    i7 = make_instance(rng, n=7)
    solvers.solve_3pt_suv(i3.corrs, i3.K1, i3.K2)
    solvers.solve_p3p(i3.corrs, i3.K1, i3.K2)
    solvers.solve_3pt_s00_f(
        [c for c in make_instance(rng, n=3, s=1.4).corrs],
        (320.0, 240.0), (320.0, 240.0),
    )
    solvers.solve_3pt_s00_f12(
        make_instance(rng, n=3, s=1.4, f1=500.0, f2=900.0).corrs,
        (320.0, 240.0), (320.0, 240.0),
    )
    solvers.solve_4pt_suv_f(i4.corrs, (320.0, 240.0), (320.0, 240.0))
    solvers.solve_4pt_suv_f12(i4.corrs, (320.0, 240.0), (320.0, 240.0))
    solvers.solve_7pt(i7.corrs)
