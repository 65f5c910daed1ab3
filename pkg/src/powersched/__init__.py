"""Energy-minimizing speed-scaling schedulers and routing via configuration LPs
and randomized rounding."""
from .core_types import (Demand, Edge, JobOnProcessor, JobShopInstance, Operation, Processor,
                         RoutingInstance, SchedulingInstance, SchemaError, Violation, load, loads,
                         dumps, save, validate)
from .probability import generalized_bell, poisson_moment

__version__ = "0.1.0"
