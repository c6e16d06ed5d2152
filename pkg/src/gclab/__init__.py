"""gclab: Gauss-Codazzi surfaces, their Lie reductions and Painleve VI.

Modules: numerics (integrator, paths, stencils), painleve, gauss_codazzi,
reductions, lie, frames, families and cli.
"""
__version__ = "0.1.0"
