"""Hot loops behind a backend switch.

Each kernel exists twice: a numba ``@njit`` loop version and a vectorised
numpy version with identical signatures. ``ELECTROGP_NUMBA=0`` selects numpy.
"""
from .._backend import BACKEND, USE_NUMBA
from . import _numpy as numpy_impl

if USE_NUMBA:
    from . import _numba as numba_impl

    _impl = numba_impl
else:
    numba_impl = None
    _impl = numpy_impl

corp_conditional_logdens = _impl.corp_conditional_logdens
corp_joint_logdens = _impl.corp_joint_logdens
corp_joint_grad = _impl.corp_joint_grad
corp_rejection_round = _impl.corp_rejection_round
polyline_distances = _impl.polyline_distances
mh_independence_chain = _impl.mh_independence_chain
se_grad_terms = _impl.se_grad_terms

__all__ = [
    "BACKEND",
    "numpy_impl",
    "numba_impl",
    "corp_conditional_logdens",
    "corp_joint_logdens",
    "corp_joint_grad",
    "corp_rejection_round",
    "polyline_distances",
    "mh_independence_chain",
    "se_grad_terms",
]
