#ifndef VERISPARSE_LINALG_HPP
#define VERISPARSE_LINALG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace verisparse {

// Dense row-major matrix. Sizes here are tiny (n <= 50, widths <= 256), so
// plain loops are fast enough and keep the bound propagation code auditable.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative shape");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double &operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    const double *row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }
    double *row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }

    std::vector<double> &data() { return data_; }
    const std::vector<double> &data() const { return data_; }

    bool same_shape(const Matrix &o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// y = M x
std::vector<double> matvec(const Matrix &m, const std::vector<double> &x);
// y = M^T x
std::vector<double> matvec_t(const Matrix &m, const std::vector<double> &x);

double dot(const std::vector<double> &a, const std::vector<double> &b);

// Compensated (Kahan) summation; concretization sums go through this.
class KahanSum {
public:
    void add(double v) {
        double y = v - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double kahan_sum(const std::vector<double> &v);

// Solves A x = b by Gaussian elimination with partial pivoting. A is square.
// Throws std::runtime_error on (numerical) singularity.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

// Least squares min ||A x - b||_2 for tall or square A via normal equations.
// Fine at the scale used here (support sizes <= l <= ~10).
std::vector<double> solve_least_squares(const Matrix &a, const std::vector<double> &b);

bool all_finite(const std::vector<double> &v);
bool all_finite(const Matrix &m);

// Deterministic RNG used everywhere randomness is needed. Wraps mt19937_64
// with hand-rolled conversions so streams are identical across platforms
// (the std distributions are implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64();
    // Uniform in [0, 1).
    double uniform01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    // Uniform integer in [0, n).
    int uniform_int(int n);
    double normal();  // standard normal, Box-Muller
    bool coin() { return (next_u64() >> 63) != 0; }

    // Derives an independent stream; used to give workers reproducible seeds.
    static uint64_t derive_seed(uint64_t base, uint64_t salt);

private:
    uint64_t splitmix();
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Chooses a uniformly random k-subset of {0,...,n-1}, returned sorted.
std::vector<int> sample_subset(int n, int k, Rng &rng);

// C(n, k) in 64 bits; throws std::overflow_error if it does not fit.
uint64_t binomial(int n, int k);

}  // namespace verisparse

#endif
