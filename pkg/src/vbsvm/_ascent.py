import logging
import warnings

import numpy as np

from .errors import ConvergenceWarning, NumericalError

log = logging.getLogger(__name__)

# A sweep may lower the bound by rounding error only.
DECREASE_SLACK = 1e-8


def coordinate_ascent(sweep, bound, tol, max_iter, name, params=None, param_tol=None):
    """Run ``sweep`` until the lower bound rises by less than ``tol``.

    Returns (trace, converged). ``tol`` is an absolute increase. The bound is
    flat at the optimum, so a small increase still allows parameter error of
    order sqrt(tol); when ``param_tol`` is given, convergence additionally
    requires the vector returned by ``params`` to move by less than
    ``param_tol`` in max-norm over the sweep.
    """
    trace = []
    prev = None
    for it in range(1, int(max_iter) + 1):
        sweep()
        step = None
        if param_tol is not None:
            cur = np.array(params(), dtype=float)
            step = np.inf if prev is None else float(np.max(np.abs(cur - prev), initial=0.0))
            prev = cur
        lb = float(bound())
        if not np.isfinite(lb):
            raise NumericalError(f"{name}: lower bound is not finite at iteration {it}")
        trace.append(lb)
        if it > 1:
            delta = lb - trace[-2]
            if delta < -DECREASE_SLACK:
                log.warning("%s: lower bound decreased by %.3e at iteration %d", name, -delta, it)
            if delta < tol and (step is None or step < param_tol):
                return trace, True
    warnings.warn(f"{name}: no convergence within {max_iter} iterations", ConvergenceWarning, stacklevel=3)
    return trace, False
