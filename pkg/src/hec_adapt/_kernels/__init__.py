"""Hot training kernels: a compiled core with a numpy fallback.

Selection happens in hec_adapt.backend.
"""
