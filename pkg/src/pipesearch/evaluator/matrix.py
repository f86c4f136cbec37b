"""Feature matrix wrapper over dense numpy arrays and CSR sparse matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

__all__ = ["FeatureMatrix"]


@dataclass
class FeatureMatrix:
    """A 2-D float feature block, dense or sparse, with uniform access."""

    values: "np.ndarray | sparse.csr_matrix"

    def __post_init__(self):
        if sparse.issparse(self.values):
            self.values = self.values.tocsr().astype(np.float64)
        else:
            self.values = np.asarray(self.values, dtype=np.float64)
            if self.values.ndim != 2:
                raise ValueError("FeatureMatrix requires a 2-D block")

    @property
    def representation(self) -> str:
        return "sparse" if sparse.issparse(self.values) else "dense"

    @property
    def row_count(self) -> int:
        return int(self.values.shape[0])

    @property
    def column_count(self) -> int:
        return int(self.values.shape[1])

    def densify(self) -> "FeatureMatrix":
        if self.representation == "dense":
            return self
        return FeatureMatrix(np.asarray(self.values.todense()))

    @staticmethod
    def hstack(blocks: list, sparse_out: bool) -> "FeatureMatrix":
        """Concatenate blocks (FeatureMatrix or raw matrices) column-wise."""
        raw = [b.values if isinstance(b, FeatureMatrix) else b for b in blocks]
        if sparse_out:
            return FeatureMatrix(sparse.hstack([sparse.csr_matrix(r) for r in raw],
                                               format="csr"))
        dense = [np.asarray(r.todense()) if sparse.issparse(r) else np.asarray(r)
                 for r in raw]
        return FeatureMatrix(np.hstack(dense))
