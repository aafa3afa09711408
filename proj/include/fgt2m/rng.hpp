#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace fgt2m {

// splitmix64 step; used to derive independent child seeds from a base seed
// so that parallel work items (records, chains, batch elements) get
// decorrelated streams regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = base;
    std::uint64_t x = splitmix64(s);
    s ^= a * 0xff51afd7ed558ccdULL;
    x ^= splitmix64(s);
    s ^= b * 0xc4ceb9fe1a85ec53ULL;
    return x ^ splitmix64(s);
}

// Thin wrapper around mt19937_64 with the distribution objects kept as
// members so draw sequences are stable across call sites.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }

    // Inclusive range [lo, hi].
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(eng_);
    }

    std::uint64_t raw() { return eng_(); }

    Eigen::MatrixXd normal_mat(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                m(i, j) = normal();
        return m;
    }

    Rng child(std::uint64_t a, std::uint64_t b = 0) {
        return Rng(derive_seed(eng_(), a, b));
    }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace fgt2m
