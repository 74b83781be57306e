// SPDX-License-Identifier: Apache-2.0
//
// Finite reversible Markov chains and an exact check of the TV-to-L^inf
// boosting inequality
//
//   max_j |(mu P^n)_j / pi_j - 1|
//       <= max_i |mu_i / pi_i - 1| * 2 max_x TV(P^n(x, .), pi).

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "proxsampler/error.hpp"

namespace proxsampler::verify {

struct DiscreteChain
{
    Eigen::MatrixXd P;
    Eigen::VectorXd pi;

    Eigen::Index states() const { return P.rows(); }
};

inline void validate(const DiscreteChain& chain, double row_tol = 1e-12, double rev_tol = 1e-10)
{
    const Eigen::Index m = chain.P.rows();
    require(m >= 1 && chain.P.cols() == m && chain.pi.size() == m,
            "chain needs a square transition matrix and a matching stationary vector");
    require((chain.P.array() >= 0.0).all(), "transition probabilities must be nonnegative");
    require((chain.pi.array() > 0.0).all(), "stationary vector must be strictly positive");
    require(std::abs(chain.pi.sum() - 1.0) <= row_tol, "stationary vector must sum to 1");
    for (Eigen::Index i = 0; i < m; ++i) {
        require(std::abs(chain.P.row(i).sum() - 1.0) <= row_tol, "rows of P must sum to 1");
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            require(std::abs(chain.pi[i] * chain.P(i, j) - chain.pi[j] * chain.P(j, i)) <= rev_tol,
                    "chain is not reversible with respect to pi");
        }
    }
}

/// Metropolis chain for `pi` driven by a symmetric proposal matrix Q
/// (rows of Q must sum to at most 1; the remainder stays put).
inline DiscreteChain metropolis_chain(const Eigen::VectorXd& pi, const Eigen::MatrixXd& Q)
{
    const Eigen::Index m = pi.size();
    require(Q.rows() == m && Q.cols() == m, "proposal must match the state space");
    DiscreteChain chain{Eigen::MatrixXd::Zero(m, m), pi};
    for (Eigen::Index i = 0; i < m; ++i) {
        double off = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (j != i) {
                chain.P(i, j) = Q(i, j) * std::min(1.0, pi[j] / pi[i]);
                off += chain.P(i, j);
            }
        }
        chain.P(i, i) = 1.0 - off;
    }
    return chain;
}

struct BoostingResult
{
    double lhs = 0.0;
    double rhs = 0.0;
    double initial_sup = 0.0;  // max_i |mu_i / pi_i - 1|
    double sup_tv = 0.0;       // max_x TV(P^n(x, .), pi)
    bool holds = false;
};

inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& P, int n)
{
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(P.rows(), P.cols());
    Eigen::MatrixXd base = P;
    while (n > 0) {
        if (n & 1) {
            result = result * base;
        }
        base = base * base;
        n >>= 1;
    }
    return result;
}

inline BoostingResult boosting_check(const DiscreteChain& chain, const Eigen::VectorXd& mu0, int n)
{
    validate(chain);
    require(n >= 0, "step count must be nonnegative");
    require(mu0.size() == chain.states(), "initial law must match the state space");
    require((mu0.array() >= 0.0).all() && std::abs(mu0.sum() - 1.0) <= 1e-12,
            "initial law must be a probability vector");

    const Eigen::MatrixXd Pn = matrix_power(chain.P, n);
    const Eigen::RowVectorXd mun = mu0.transpose() * Pn;

    BoostingResult r;
    r.lhs = (mun.transpose().cwiseQuotient(chain.pi).array() - 1.0).abs().maxCoeff();
    r.initial_sup = (mu0.cwiseQuotient(chain.pi).array() - 1.0).abs().maxCoeff();
    for (Eigen::Index x = 0; x < chain.states(); ++x) {
        const double tv = 0.5 * (Pn.row(x).transpose() - chain.pi).cwiseAbs().sum();
        r.sup_tv = std::max(r.sup_tv, tv);
    }
    r.rhs = r.initial_sup * 2.0 * r.sup_tv;
    r.holds = r.lhs <= r.rhs + 1e-10;
    return r;
}

}  // namespace proxsampler::verify
