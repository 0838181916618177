"""Principal component analysis by covariance eigendecomposition."""
import numpy as np

from ..core.errors import DegenerateData, InvalidParameter
from ..core.models import ArrayModel


class PcaModel(ArrayModel):
    """Mean plus orthonormal component rows, largest variance first."""
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])


def fit_pca(X, n_components: int) -> PcaModel:
    """
    Fit PCA on the rows of X.

    Components are the top eigenvectors of the sample covariance, sorted by
    descending eigenvalue. Each component is signed so that its
    largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidParameter(f"expected a 2-D sample matrix, got shape {X.shape}")
    n_samples, n_features = X.shape
    if not 1 <= n_components <= n_features:
        raise InvalidParameter(f"n_components must be 1..{n_features}, got {n_components}")
    if n_samples <= n_components:
        raise DegenerateData(
            f"need more samples than components ({n_samples} <= {n_components})"
        )

    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n_samples - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals.max() <= 1e-15:
        raise DegenerateData("data has zero variance in every direction")

    order = np.argsort(eigvals)[::-1][:n_components]
    components = eigvecs[:, order].T.copy()
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(n_components), pivots])
    components *= signs[:, None]
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance=np.clip(eigvals[order], 0.0, None),
    )


def pca_transform(model: PcaModel, x) -> np.ndarray:
    """components . (x - mean); accepts one vector or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    return (x - model.mean) @ model.components.T


def pca_inverse_transform(model: PcaModel, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    return z @ model.components + model.mean
