"""Topological entanglement entropy, irreducible correlation, and
secret-sharing rate, computed exactly on finite-dimensional states.

Dense states live in :mod:`topocorr.states` / :mod:`topocorr.entropy`; the
exact stabilizer oracle for the toric code is :mod:`topocorr.toric`;
Markov-state structure and recovery maps in :mod:`topocorr.markov`;
maximum-entropy constructions and correlation measures in
:mod:`topocorr.maxent`; rate bounds in :mod:`topocorr.secret`; the
noise-robust bracket in :mod:`topocorr.approx`.
"""

from .layout import FactorLayout
from .states import (DensityMatrix, bell_pair, ghz, maximally_mixed,
                     parity_flux_state, partial_trace, pure,
                     random_density_matrix, tensor, w_state)
from .entropy import (Spectrum, conditional_mutual_information, fidelity,
                      mutual_information, relative_entropy, spectral,
                      total_correlation, trace_distance, von_neumann_entropy)
from .toric import (RegionMask, StabilizerTableau, ToricCodeSpec, load_mask,
                    rdm_dense, region_entropy, tee, toric_ground_state)
from .markov import (MarkovDecomposition, RecoveryMap, apply_recovery, is_qms,
                     markov_decompose, petz_recovery, random_qms, reconstruct,
                     refine_block)
from .maxent import (CorrelationReport, MarginalConstraintSet,
                     TwoLocalHamiltonian, distance_Dk, irreducible_correlation,
                     iterative_maxent, merge_annulus, merge_ring, tee_dense,
                     two_local_hamiltonian)
from .secret import (RateReport, TwirlEnsemble, averaged_state, build_twirl,
                     rate_report, weyl_ops)
from .approx import (ApproxParams, approx_merge, assumption_residuals,
                     bound_check, depolarize)

__version__ = "0.1.0"

__all__ = [
    "FactorLayout", "DensityMatrix", "Spectrum",
    "bell_pair", "ghz", "maximally_mixed", "parity_flux_state",
    "partial_trace", "pure", "random_density_matrix", "tensor", "w_state",
    "conditional_mutual_information", "fidelity", "mutual_information",
    "relative_entropy", "spectral", "total_correlation", "trace_distance",
    "von_neumann_entropy",
    "RegionMask", "StabilizerTableau", "ToricCodeSpec", "load_mask",
    "rdm_dense", "region_entropy", "tee", "toric_ground_state",
    "MarkovDecomposition", "RecoveryMap", "apply_recovery", "is_qms",
    "markov_decompose", "petz_recovery", "random_qms", "reconstruct",
    "refine_block",
    "CorrelationReport", "MarginalConstraintSet", "TwoLocalHamiltonian",
    "distance_Dk", "irreducible_correlation", "iterative_maxent",
    "merge_annulus", "merge_ring", "tee_dense", "two_local_hamiltonian",
    "RateReport", "TwirlEnsemble", "averaged_state", "build_twirl",
    "rate_report", "weyl_ops",
    "ApproxParams", "approx_merge", "assumption_residuals", "bound_check",
    "depolarize",
]
