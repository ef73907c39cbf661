from core_numerics.normal import Phi, Phi_inv, phi
from core_numerics.roots import Bracket, solve_monotone, solve_monotone_many

__all__ = ["phi", "Phi", "Phi_inv", "Bracket", "solve_monotone", "solve_monotone_many"]
