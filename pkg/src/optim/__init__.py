from .optimizer import OptimizeProblem, OptimizeReport, default_tolerance, minimize

__all__ = ["OptimizeProblem", "OptimizeReport", "default_tolerance", "minimize"]
