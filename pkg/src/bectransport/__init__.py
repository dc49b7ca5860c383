"""Atom-cloud transport in a moving harmonic trap: protocol design, GPE checks, noise."""
from .core import (HBAR, RB87_MASS, DegenerateInputError, Grid1D, GridMismatchError, Trajectory,
                   TrapConfig, WaveFunction, from_dimensionless, normalize, overlap, to_dimensionless)
from .design import (DirectProtocol, InvalidProtocolError, PolynomialProtocol, classical_response,
                     compensating_force, direct_final_excursion, direct_trap_trajectory,
                     duhamel_response, polynomial_interval_check, polynomial_interval_threshold,
                     polynomial_inverse)
from .control import (InfeasibleConstraintError, solve_displacement_bounded, solve_range_bounded,
                      verify_boundary)
from .groundstate import (GroundStateError, GridTooSmallError, StationaryState, energy_decomposition,
                          solve_ground_state)
from .dynamics import (FrameEscapeError, InstabilityError, PropagationResult, TransportMode,
                       excitation_energy, fidelity, propagate, transport_mode_state)
from .noise import (BetaPair, CoverageError, FidelityRecord, NoiseRealization, average_fidelity,
                    beta_integrals, noisy_propagation_crosscheck, sample_noise, semianalytic_fidelity)
from .protocols import ProtocolSpec, TransportDesign, design_protocol

__version__ = "0.1.0"
