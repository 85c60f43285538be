"""Matrix-free linear operators for the vectorized pilot model.

With column-major vectorization, ``vec(F^H X S) = (S^T kron F^H) vec(X)``, so
the sensing matrix never has to be formed.  GAMP also needs products with the
entrywise squared modulus ``|A|^2``; for the pilot/DFT operator these reduce
to column sums because every DFT entry has modulus ``1/sqrt(M)``.
"""

import numpy as np

from .errors import ConfigurationError


class PilotDftOperator:
    """``A = S^T kron F^H`` acting on ``vec(X)`` with ``X`` of shape ``(M, N)``.

    Parameters
    ----------
    S : ndarray, shape (N, N_p)
        Pilot matrix, one row per column of ``X``.
    M : int
        Number of antennas (size of the normalized DFT).
    """

    def __init__(self, S, M):
        S = np.asarray(S, dtype=complex)
        if S.ndim != 2:
            raise ConfigurationError("pilot matrix must be 2-D")
        self.S = S
        self.M = int(M)
        self.N, self.N_p = S.shape
        self._S_abs2 = np.abs(S) ** 2
        self.shape = (self.M * self.N_p, self.M * self.N)

    @property
    def abs2_scalar(self):
        """Common value of ``|A_mn|^2`` if all entries share it, else None."""
        a = self._S_abs2
        if np.allclose(a, a.flat[0], rtol=1e-12, atol=0.0):
            return float(a.flat[0]) / self.M
        return None

    def _check(self, v, n):
        v = np.asarray(v)
        if v.shape != (n,):
            raise ConfigurationError(f"expected vector of length {n}, got shape {v.shape}")
        return v

    def matvec(self, x):
        X = self._check(x, self.shape[1]).reshape((self.M, self.N), order="F")
        Y = np.sqrt(self.M) * np.fft.ifft(X, axis=0) @ self.S
        return Y.ravel(order="F")

    def rmatvec(self, v):
        V = self._check(v, self.shape[0]).reshape((self.M, self.N_p), order="F")
        X = (np.fft.fft(V, axis=0) / np.sqrt(self.M)) @ self.S.conj().T
        return X.ravel(order="F")

    def abs2_matvec(self, x):
        """``|A|^2 @ x`` for a real nonnegative ``x`` of length N_x."""
        X = self._check(x, self.shape[1]).reshape((self.M, self.N), order="F")
        col = X.sum(axis=0) / self.M
        Y = np.broadcast_to(col @ self._S_abs2, (self.M, self.N_p))
        return np.ascontiguousarray(Y).ravel(order="F")

    def abs2_rmatvec(self, v):
        """``(|A|^2)^T @ v`` for a real nonnegative ``v`` of length M_y."""
        V = self._check(v, self.shape[0]).reshape((self.M, self.N_p), order="F")
        col = V.sum(axis=0) / self.M
        X = np.broadcast_to(col @ self._S_abs2.T, (self.M, self.N))
        return np.ascontiguousarray(X).ravel(order="F")

    def frobenius_sq(self):
        # ||S^T kron F^H||_F^2 = ||S||_F^2 * ||F||_F^2 and ||F||_F^2 = M
        return float(self._S_abs2.sum()) * self.M

    def to_dense(self):
        m = np.arange(self.M)
        F = np.exp(-2j * np.pi * np.outer(m, m) / self.M) / np.sqrt(self.M)
        return np.kron(self.S.T, F.conj().T)


class DenseOperator:
    """Explicit matrix with the same interface as :class:`PilotDftOperator`."""

    def __init__(self, A):
        self.A = np.atleast_2d(np.asarray(A))
        self.shape = self.A.shape
        self._abs2 = np.abs(self.A) ** 2

    @property
    def abs2_scalar(self):
        a = self._abs2
        if np.allclose(a, a.flat[0], rtol=1e-12, atol=0.0):
            return float(a.flat[0])
        return None

    def matvec(self, x):
        return self.A @ x

    def rmatvec(self, v):
        return self.A.conj().T @ v

    def abs2_matvec(self, x):
        return self._abs2 @ x

    def abs2_rmatvec(self, v):
        return self._abs2.T @ v

    def frobenius_sq(self):
        return float(self._abs2.sum())

    def to_dense(self):
        return self.A.copy()
