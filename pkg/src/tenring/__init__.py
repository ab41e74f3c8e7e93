"""Tensor-ring anomaly detection toolkit."""

from .backend import backend_name, set_backend
from .dataio import (band_normalize, generate_synthetic, read_mask,
                     read_tensor, write_mask, write_tensor)
from .metrics import (AucReport, RocCurve, auc_report, normalize_map, roc3d,
                      separability_stats)
from .penalties import PenaltySpec, brute_force_prox, prox, threshold_tensor
from .ring import TRCores, random_init, subchain, tr_contract
from .solver import (SolveOutput, SolverAbort, SolverConfig, detection_map,
                     solve)
from .transforms import (TransformSpec, apply_transform, gntctv_norm, gntsvt,
                         inverse_transform, t_product, tsvd)

__version__ = "0.1.0"
