#pragma once
// Random problem instances shared by the test suites.
#include "oracles.hpp"

#include <l0group/model.hpp>

#include <vector>

namespace testdata {

using l0group::GroupPartition;
using l0group::Matrix;
using l0group::Problem;
using l0group::QuadObjective;
using l0group::Vector;

struct Instance
{
    Matrix X;
    Vector y;
    GroupPartition part;
    std::vector<std::vector<int>> groups;

    Problem problem() const { return Problem(QuadObjective::implicit(X, y), part); }
};

/// Random sizes in [1, max_size] per group, Gaussian design with unit-norm
/// columns and a planted sparse signal plus noise.
inline Instance random_instance(oracle::Rng& rng, int n, int q, int max_size, int planted, double noise = 0.3)
{
    std::vector<int> sizes(q);
    for (auto& s : sizes) s = rng.integer(1, max_size);
    Instance inst{Matrix(), Vector(), GroupPartition::from_sizes(sizes), {}};
    inst.groups = inst.part.groups();
    const int p = inst.part.num_features();
    inst.X = rng.normal_matrix(n, p);
    for (int j = 0; j < p; ++j) inst.X.col(j).normalize();
    Vector beta = Vector::Zero(p);
    for (int i = 0; i < planted && i < q; ++i) {
        const int g = (i * q) / std::max(planted, 1);
        for (int j : inst.groups[g]) beta[j] = rng.normal() * 2.0;
    }
    inst.y = inst.X * beta + noise * rng.normal_vector(n);
    return inst;
}

} // namespace testdata
