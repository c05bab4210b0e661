#pragma once

// Hand-built networks shared by the test suites.

#include <utility>
#include <vector>

#include "resilnet/network_model.hpp"

namespace fixture {

using resilnet::Matrix;

inline Matrix scalar(double v)
{
    return Matrix::Constant(1, 1, v);
}

// Three scalar nodes, couplings 0.3; node 3 has two actuators (1, 2).
// With under = true node 2 has no actuator.
inline resilnet::NetworkSpec academic(bool under = false)
{
    resilnet::NetworkSpec s;
    s.name = under ? "academic_under" : "academic";
    for (int id = 1; id <= 3; ++id) {
        resilnet::Subsystem sub;
        sub.id = id;
        sub.A = scalar(-1.0);
        if (id == 3)
            sub.B = Matrix{{1.0, 2.0}};
        else if (id == 2 && under)
            sub.B = Matrix(1, 0);
        else
            sub.B = scalar(2.0);
        for (int k = 1; k <= 3; ++k)
            if (k != id)
                sub.couplings[k] = scalar(0.3);
        s.subsystems.push_back(sub);
    }
    return s;
}

inline resilnet::LossSpec lose(int id, std::vector<int> cols)
{
    resilnet::LossSpec l;
    l.losses.push_back({id, std::move(cols)});
    return l;
}

inline resilnet::Vector academic_x0_user()
{
    return (resilnet::Vector(3) << 1.0, 1.0, 0.0).finished();
}

inline resilnet::PartitionedNetwork academic_pn(bool under = false)
{
    return resilnet::partition(academic(under), lose(3, {1}));
}

}  // namespace fixture
