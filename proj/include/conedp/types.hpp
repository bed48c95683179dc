#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace conedp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when inputs violate an operation's contract (dimension mismatch,
/// empty cloud, non-solid cone, ...).
class contract_error : public std::invalid_argument {
public:
    explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a numeric computation produces NaN/overflow or fails to converge.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

namespace tol {
// Membership residual below which a vector counts as belonging to a cone.
inline constexpr double mem = 1e-9;
// Two points closer than this are treated as duplicates.
inline constexpr double eq = 1e-12;
// Strict-interior margin: B(v, interior) must fit inside the cone.
inline constexpr double interior = 1e-9;
}  // namespace tol

inline Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline Vec to_vec(const std::vector<double>& xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    for (size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
    return v;
}

inline std::vector<double> to_std(const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

/// Strict lexicographic comparison, the canonical point ordering used to make
/// set-valued results deterministic.
inline bool lex_less(const Vec& a, const Vec& b) {
    for (Eigen::Index i = 0; i < a.size() && i < b.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return a.size() < b.size();
}

/// Solves min_{lam >= 0} ||G*lam - v|| (Lawson-Hanson active set).
/// Returns the residual norm, i.e. the Euclidean distance from v to the cone
/// spanned by the columns of G.
inline double nnls_residual(const Mat& G, const Vec& v, Vec* lam_out = nullptr) {
    const Eigen::Index n = G.cols();
    Vec lam = Vec::Zero(n);
    std::vector<bool> passive(static_cast<size_t>(n), false);
    Vec resid = v;
    const double grad_tol = 1e-13 * (1.0 + v.norm());
    const int max_outer = 6 * static_cast<int>(n) + 24;

    for (int outer = 0; outer < max_outer; ++outer) {
        Vec w = G.transpose() * resid;
        int best = -1;
        double best_w = grad_tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<size_t>(j)] && w[j] > best_w) {
                best_w = w[j];
                best = static_cast<int>(j);
            }
        }
        if (best < 0) break;
        passive[static_cast<size_t>(best)] = true;

        for (int inner = 0; inner < max_outer; ++inner) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<size_t>(j)]) idx.push_back(j);
            Mat Gp(G.rows(), static_cast<Eigen::Index>(idx.size()));
            for (size_t k = 0; k < idx.size(); ++k) Gp.col(static_cast<Eigen::Index>(k)) = G.col(idx[k]);
            Vec z = Gp.colPivHouseholderQr().solve(v);

            bool all_pos = true;
            for (Eigen::Index k = 0; k < z.size(); ++k)
                if (z[k] <= 0.0) all_pos = false;
            if (all_pos) {
                lam.setZero();
                for (size_t k = 0; k < idx.size(); ++k) lam[idx[k]] = z[static_cast<Eigen::Index>(k)];
                break;
            }
            // Step back along the segment lam -> z until a coefficient hits zero.
            double alpha = 1.0;
            for (size_t k = 0; k < idx.size(); ++k) {
                double zk = z[static_cast<Eigen::Index>(k)];
                double lk = lam[idx[k]];
                if (zk <= 0.0 && lk - zk > 0.0) alpha = std::min(alpha, lk / (lk - zk));
            }
            for (size_t k = 0; k < idx.size(); ++k) {
                lam[idx[k]] += alpha * (z[static_cast<Eigen::Index>(k)] - lam[idx[k]]);
                if (lam[idx[k]] <= 1e-14) {
                    lam[idx[k]] = 0.0;
                    passive[static_cast<size_t>(idx[k])] = false;
                }
            }
        }
        resid = v - G * lam;
    }
    if (lam_out) *lam_out = lam;
    return resid.norm();
}

}  // namespace conedp
