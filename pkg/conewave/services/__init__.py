from conewave.services.propagator_kernel import SinePropagator
from conewave.services.spectral_calculus import spectral_wave_solve
from conewave.services.wedge_bvp import solve_wedge
