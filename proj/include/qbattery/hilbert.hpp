#pragma once

// Dense complex operator algebra over a truncated qubit (x) oscillator
// Hilbert space: elementary operators, tensor products, partial traces,
// expectation values and Hermitian eigendecomposition.

#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace qb {

using cdouble = std::complex<double>;
// Row-major storage throughout; subsystem order is battery (x) charger.
using Matrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<cdouble, Eigen::Dynamic, 1>;
using RVector = Eigen::VectorXd;

struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegratorError : std::runtime_error {
    IntegratorError(const std::string& msg, double tau_fail)
        : std::runtime_error(msg), tau(tau_fail) {}
    double tau;
};

inline int product_of(const std::vector<int>& dims) {
    return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
}

/// Dense complex square matrix with subsystem-dimension metadata.
class Operator {
public:
    Operator(Matrix data, std::vector<int> dims)
        : data_(std::move(data)), dims_(std::move(dims)) {
        if (data_.rows() != data_.cols())
            throw std::invalid_argument("Operator: matrix must be square");
        if (product_of(dims_) != data_.rows())
            throw std::invalid_argument("Operator: product of dims must equal matrix dimension");
    }

    int dim() const { return static_cast<int>(data_.rows()); }
    const std::vector<int>& dims() const { return dims_; }
    const Matrix& data() const { return data_; }

    bool is_hermitian(double tol = 1e-12) const {
        return (data_ - data_.adjoint()).cwiseAbs().maxCoeff() < tol;
    }

    Operator adjoint() const { return Operator(data_.adjoint(), dims_); }

private:
    Matrix data_;
    std::vector<int> dims_;
};

inline Operator operator+(const Operator& a, const Operator& b) {
    if (a.dims() != b.dims()) throw std::invalid_argument("Operator+: dims mismatch");
    return Operator(a.data() + b.data(), a.dims());
}
inline Operator operator-(const Operator& a, const Operator& b) {
    if (a.dims() != b.dims()) throw std::invalid_argument("Operator-: dims mismatch");
    return Operator(a.data() - b.data(), a.dims());
}
inline Operator operator*(const Operator& a, const Operator& b) {
    if (a.dims() != b.dims()) throw std::invalid_argument("Operator*: dims mismatch");
    return Operator(a.data() * b.data(), a.dims());
}
inline Operator operator*(cdouble s, const Operator& a) { return Operator(s * a.data(), a.dims()); }
inline Operator operator*(double s, const Operator& a) { return Operator(s * a.data(), a.dims()); }

inline Operator commutator(const Operator& a, const Operator& b) {
    return Operator(a.data() * b.data() - b.data() * a.data(), a.dims());
}

/// Tagged pure-ket or density-matrix state over the same dims metadata.
class QuantumState {
public:
    static QuantumState pure(Vector psi, std::vector<int> dims, double tol = 1e-10) {
        if (product_of(dims) != psi.size())
            throw std::invalid_argument("QuantumState: dims do not match vector length");
        if (std::abs(psi.norm() - 1.0) >= tol)
            throw std::invalid_argument("QuantumState: ket norm deviates from 1 by " +
                                        std::to_string(std::abs(psi.norm() - 1.0)));
        QuantumState s;
        s.ket_ = std::move(psi);
        s.dims_ = std::move(dims);
        s.pure_ = true;
        return s;
    }

    static QuantumState density(Matrix rho, std::vector<int> dims, double tol = 1e-10) {
        if (rho.rows() != rho.cols() || product_of(dims) != rho.rows())
            throw std::invalid_argument("QuantumState: dims do not match matrix dimension");
        const double trace_err = std::abs(rho.trace() - cdouble(1.0, 0.0));
        if (trace_err >= tol)
            throw std::invalid_argument("QuantumState: trace deviates from 1 by " +
                                        std::to_string(trace_err));
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() >= tol)
            throw std::invalid_argument("QuantumState: density matrix not Hermitian");
        QuantumState s;
        s.rho_ = std::move(rho);
        s.dims_ = std::move(dims);
        s.pure_ = false;
        return s;
    }

    bool is_pure() const { return pure_; }
    const std::vector<int>& dims() const { return dims_; }
    int dim() const { return product_of(dims_); }

    const Vector& ket() const {
        if (!pure_) throw std::logic_error("QuantumState: not a ket");
        return ket_;
    }
    const Matrix& rho() const {
        if (pure_) throw std::logic_error("QuantumState: not a density matrix");
        return rho_;
    }

    /// Density-matrix view regardless of representation.
    Matrix density_matrix() const {
        if (pure_) return ket_ * ket_.adjoint();
        return rho_;
    }

    /// Smallest eigenvalue of the density matrix (diagnostic; O(d^3)).
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(density_matrix(),
                                                 Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }

private:
    QuantumState() = default;
    Vector ket_;
    Matrix rho_;
    std::vector<int> dims_;
    bool pure_ = false;
};

/// Truncated annihilation operator: A[k-1,k] = sqrt(k), 1 <= k <= n_max.
inline Operator annihilation_op(int n_max) {
    if (n_max < 0) throw std::invalid_argument("annihilation_op: n_max must be >= 0");
    const int d = n_max + 1;
    Matrix a = Matrix::Zero(d, d);
    for (int k = 1; k < d; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return Operator(std::move(a), {d});
}

inline Operator identity_op(int d) {
    return Operator(Matrix::Identity(d, d), {d});
}

/// Qubit operators in the basis (|g> = index 0, |e> = index 1), with
/// sigma_plus |g> = |e> and sigma_z |e> = +|e>.
struct QubitOps {
    Operator sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z, identity;
};

inline QubitOps qubit_ops() {
    Matrix sm = Matrix::Zero(2, 2), sp = Matrix::Zero(2, 2);
    Matrix sx = Matrix::Zero(2, 2), sy = Matrix::Zero(2, 2), sz = Matrix::Zero(2, 2);
    sp(1, 0) = 1.0;                 // sigma_plus |g> = |e>
    sm(0, 1) = 1.0;
    sx(0, 1) = 1.0; sx(1, 0) = 1.0;
    sy(0, 1) = cdouble(0.0, 1.0); sy(1, 0) = cdouble(0.0, -1.0);
    sz(0, 0) = -1.0; sz(1, 1) = 1.0;
    std::vector<int> d{2};
    return {Operator(sm, d), Operator(sp, d), Operator(sx, d),
            Operator(sy, d), Operator(sz, d), identity_op(2)};
}

/// Kronecker product; dims are concatenated [dims(A), dims(B)].
inline Operator tensor(const Operator& a, const Operator& b) {
    const int ra = a.dim(), rb = b.dim();
    Matrix out(ra * rb, ra * rb);
    for (int i = 0; i < ra; ++i)
        for (int j = 0; j < ra; ++j)
            out.block(i * rb, j * rb, rb, rb) = a.data()(i, j) * b.data();
    std::vector<int> dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    return Operator(std::move(out), std::move(dims));
}

namespace detail {

// Partial trace over all subsystems except `keep`, acting on a raw density
// matrix with the given dims.
inline Matrix partial_trace_dense(const Matrix& rho, const std::vector<int>& dims, int keep) {
    const int n = static_cast<int>(dims.size());
    const int dk = dims[keep];
    // stride of the kept subsystem and total size of the traced-out rest
    int stride = 1;
    for (int s = keep + 1; s < n; ++s) stride *= dims[s];
    const int d = product_of(dims);
    const int rest = d / dk;

    Matrix out = Matrix::Zero(dk, dk);
    // Enumerate the traced-out multi-index by walking all joint indices with
    // the kept index set to zero.
    std::vector<int> rest_index(rest);
    {
        int cnt = 0;
        for (int full = 0; full < d; ++full) {
            if ((full / stride) % dk == 0) rest_index[cnt++] = full;
        }
    }
    for (int a = 0; a < dk; ++a)
        for (int b = 0; b < dk; ++b) {
            cdouble sum = 0.0;
            for (int r = 0; r < rest; ++r)
                sum += rho(rest_index[r] + a * stride, rest_index[r] + b * stride);
            out(a, b) = sum;
        }
    return out;
}

} // namespace detail

/// Partial trace keeping one subsystem; result is a DensityMatrix state.
inline QuantumState partial_trace(const QuantumState& state, int keep) {
    const auto& dims = state.dims();
    if (dims.size() < 2)
        throw std::invalid_argument("partial_trace: state must have >= 2 subsystems");
    if (keep < 0 || keep >= static_cast<int>(dims.size()))
        throw std::out_of_range("partial_trace: invalid subsystem index");

    Matrix reduced;
    if (state.is_pure() && dims.size() == 2) {
        // direct contraction of the ket, avoiding the full density matrix
        const auto& psi = state.ket();
        const int d0 = dims[0], d1 = dims[1];
        reduced = Matrix::Zero(keep == 0 ? d0 : d1, keep == 0 ? d0 : d1);
        if (keep == 0) {
            for (int a = 0; a < d0; ++a)
                for (int b = 0; b < d0; ++b) {
                    cdouble sum = 0.0;
                    for (int m = 0; m < d1; ++m)
                        sum += psi(a * d1 + m) * std::conj(psi(b * d1 + m));
                    reduced(a, b) = sum;
                }
        } else {
            for (int a = 0; a < d1; ++a)
                for (int b = 0; b < d1; ++b) {
                    cdouble sum = 0.0;
                    for (int s = 0; s < d0; ++s)
                        sum += psi(s * d1 + a) * std::conj(psi(s * d1 + b));
                    reduced(a, b) = sum;
                }
        }
    } else {
        reduced = detail::partial_trace_dense(state.density_matrix(), dims, keep);
    }
    // Re-symmetrize roundoff before the invariant check.
    reduced = 0.5 * (reduced + reduced.adjoint()).eval();
    return QuantumState::density(std::move(reduced), {dims[keep]});
}

struct EigDecomposition {
    RVector eigenvalues;  // ascending
    Matrix eigenvectors;  // columns; H = V diag(w) V^dagger
};

/// Hermitian eigendecomposition via LAPACK zheevd.
inline EigDecomposition hermitian_eig(const Operator& h) {
    if (!h.is_hermitian(1e-10))
        throw std::invalid_argument("hermitian_eig: operator is not Hermitian");
    const int n = h.dim();
    // zheevd wants column-major; a Hermitian input lets us pass the adjoint
    // (equal to the matrix itself) so the row-major buffer can be used as-is
    // after symmetrizing.
    Eigen::MatrixXcd a = ((h.data() + h.data().adjoint()) / 2.0);
    RVector w(n);
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
    if (info != 0)
        throw std::runtime_error("hermitian_eig: zheevd failed with info " +
                                 std::to_string(info));
    return {std::move(w), Matrix(a)};
}

/// <psi|O|psi> or Tr[O rho].
inline cdouble expectation(const Operator& op, const QuantumState& state) {
    if (op.dim() != state.dim())
        throw std::invalid_argument("expectation: dimension mismatch");
    if (state.is_pure()) {
        const auto& psi = state.ket();
        return psi.dot(op.data() * psi);  // Eigen dot conjugates the left arg
    }
    return (op.data() * state.rho()).trace();
}

} // namespace qb
