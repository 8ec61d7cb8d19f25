# Copyright (c) 2026 The lapeig Authors
# SPDX-License-Identifier: Apache-2.0
"""Attention-spectrum hallucination probe: Python bindings of the C++ core."""

from ._core import (
    AttentionStack,
    DataError,
    LapeigError,
    NumericalError,
    Probe,
    UsageError,
    attention_eigvals,
    attention_logdet,
    auroc,
    cohen_kappa,
    compute_features,
    derive_seed,
    extract_features,
    gen_planted_dataset,
    gen_random_stack,
    laplacian_eigvals,
    list_stack_files,
    mann_whitney_u,
    pca_fit,
    precision_recall,
    read_feature_matrix,
    read_stack,
    roc_curve,
    stratified_split,
    validate_stack,
    write_stack,
)

__all__ = [
    "AttentionStack",
    "DataError",
    "LapeigError",
    "NumericalError",
    "Probe",
    "UsageError",
    "attention_eigvals",
    "attention_logdet",
    "auroc",
    "cohen_kappa",
    "compute_features",
    "derive_seed",
    "extract_features",
    "gen_planted_dataset",
    "gen_random_stack",
    "laplacian_eigvals",
    "list_stack_files",
    "mann_whitney_u",
    "pca_fit",
    "precision_recall",
    "read_feature_matrix",
    "read_stack",
    "roc_curve",
    "stratified_split",
    "validate_stack",
    "write_stack",
]

__version__ = "0.1.0"
