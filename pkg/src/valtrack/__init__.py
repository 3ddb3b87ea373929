"""Online pricing with a finite inventory and a discrete price ladder."""
from .instances import ValuationInstance, failure_instance, generate_grid, loglinear_distribution
from .ladder import ContinuousRange, PriceLadder, build_ladder

__all__ = ["ValuationInstance", "failure_instance", "generate_grid", "loglinear_distribution",
           "ContinuousRange", "PriceLadder", "build_ladder"]
__version__ = "0.1.0"
